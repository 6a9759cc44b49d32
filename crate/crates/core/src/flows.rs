//! Flows `Fl^X_t` of vector fields.
//!
//! Values come from classical RK4 with step-doubling error control. The same
//! integrator runs over jets in the space variables, which transports the
//! spatial Taylor expansion of the flow map. Time derivatives of a flow curve
//! are not taken from the integrator: they come from Picard iteration in the
//! jet ring, which is exact to the truncation order.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{variables, Jet, JetContext};
use crate::maps::{DiffeoCurve, Domain};
use crate::scalar::Scalar;
use crate::sections::VectorField;

pub const MAX_STEPS: usize = 1_000_000;
pub const DEFAULT_TOL: f64 = 1e-12;
/// Fraction of the tolerance budget each step may spend; leaves room for
/// growth of local errors along expanding flows.
const SAFETY: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowResult {
    pub endpoint: Vec<f64>,
    pub steps_taken: usize,
    pub est_error: f64,
}

fn axpy<R: Scalar>(y: &[R], h: f64, k: &[R]) -> Vec<R> {
    y.iter().zip(k).map(|(a, b)| a.clone() + b.scale(h)).collect()
}

fn rk4_step<R: Scalar>(field: &VectorField, t: f64, y: &[R], h: f64) -> Result<Vec<R>> {
    let proto = &y[0];
    let k1 = field.eval(&proto.lift(t), y)?;
    let k2 = field.eval(&proto.lift(t + 0.5 * h), &axpy(y, 0.5 * h, &k1))?;
    let k3 = field.eval(&proto.lift(t + 0.5 * h), &axpy(y, 0.5 * h, &k2))?;
    let k4 = field.eval(&proto.lift(t + h), &axpy(y, h, &k3))?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, yi)| {
            let incr = k1[i].clone() + k2[i].scale(2.0) + k3[i].scale(2.0) + k4[i].clone();
            yi.clone() + incr.scale(h / 6.0)
        })
        .collect())
}

fn inside(domain: &Domain, y: &[impl Scalar]) -> bool {
    let v: Vec<f64> = y.iter().map(|c| c.value()).collect();
    v.iter().all(|x| x.is_finite()) && domain.contains(&v)
}

/// Integrates `y' = X(t, y)` from `t0` to `t1` over any scalar type.
/// Returns the endpoint, the accepted step count and the summed error estimate.
pub fn integrate<R: Scalar>(field: &VectorField, t0: f64, t1: f64, y0: Vec<R>, tol: f64) -> Result<(Vec<R>, usize, f64)> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((y0, 0, 0.0));
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = dir * span.abs().min(0.05);
    let mut accepted = 0;
    let mut attempts = 0;
    let mut est_error = 0.0;
    while (t1 - t) * dir > 0.0 {
        attempts += 1;
        if attempts > MAX_STEPS {
            return Err(Error::StepLimit(MAX_STEPS));
        }
        let last = (t + h - t1) * dir >= 0.0;
        if last {
            h = t1 - t;
        }
        let full = rk4_step(field, t, &y, h)?;
        let half = rk4_step(field, t, &y, 0.5 * h)?;
        let fine = rk4_step(field, t + 0.5 * h, &half, 0.5 * h)?;
        let err = fine
            .iter()
            .zip(&full)
            .map(|(a, b)| (a.clone() - b.clone()).sup_norm())
            .fold(0.0, f64::max)
            / 15.0;
        let allowed = SAFETY * tol * h.abs() / span.abs();
        if err.is_finite() && err <= allowed && inside(&field.domain, &fine) {
            t = if last { t1 } else { t + h };
            y = fine;
            accepted += 1;
            est_error += err;
            let grow = if err == 0.0 { 4.0 } else { (0.9 * (allowed / err).powf(0.25)).min(4.0) };
            h *= grow;
        } else if err.is_finite() && err <= allowed {
            return Err(Error::FlowLeftDomain { t: t + h });
        } else {
            let shrink = if err.is_finite() { (0.9 * (allowed / err).powf(0.25)).max(0.1) } else { 0.1 };
            h *= shrink;
            if h.abs() < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::StepLimit(attempts));
            }
        }
    }
    Ok((y, accepted, est_error))
}

/// `Fl^X` from `t0` to `t1` starting at `x`.
pub fn flow(field: &VectorField, t0: f64, t1: f64, x: &[f64], tol: f64) -> Result<FlowResult> {
    field.domain.check(x)?;
    let (endpoint, steps_taken, est_error) = integrate(field, t0, t1, x.to_vec(), tol)?;
    Ok(FlowResult {
        endpoint,
        steps_taken,
        est_error,
    })
}

/// RK4 with a fixed number of equal steps; used to measure convergence order.
pub fn rk4_fixed(field: &VectorField, t0: f64, t1: f64, x: &[f64], steps: usize) -> Result<Vec<f64>> {
    let h = (t1 - t0) / steps as f64;
    let mut y = x.to_vec();
    for i in 0..steps {
        y = rk4_step(field, t0 + i as f64 * h, &y, h)?;
    }
    Ok(y)
}

/// The flow of `field` as a curve of diffeomorphisms through the identity.
pub fn flow_curve(field: &VectorField, window: (f64, f64), tol: f64) -> Result<DiffeoCurve> {
    DiffeoCurve::flow_of(field.clone(), window, tol)
}

/// Mixed `(x, t)` jets of `(t, x) ↦ Fl^X_{0→t}(x)` at `(t0, x0)`.
///
/// The spatial expansion of `Fl_{0→t0}` is transported by RK4 over jets; the
/// time expansion around `t0` solves `y = z + ∫_{t0}^t X(s, y) ds` by Picard
/// iteration, each sweep fixing one more order, and is then composed with the
/// spatial part.
pub fn flow_jets(field: &VectorField, t0: f64, x0: &[f64], order: usize, tol: f64) -> Result<Vec<Jet>> {
    let m = field.domain.dim();
    let ctx = JetContext::new(m, order)?;
    let mut xvars = variables(&ctx, x0, t0)?;
    let tvar = xvars.pop().unwrap();
    let spatial = if t0 == 0.0 {
        xvars
    } else {
        field.domain.check(x0)?;
        integrate(field, 0.0, t0, xvars, tol)?.0
    };
    let z0: Vec<f64> = spatial.iter().map(|j| j.value()).collect();
    let mut zvars = variables(&ctx, &z0, t0)?;
    zvars.pop();
    let tv = ctx.time_var();
    let mut y = zvars.clone();
    for _ in 0..=order {
        let rhs = field.eval(&tvar, &y)?;
        y = zvars
            .iter()
            .zip(&rhs)
            .map(|(z, f)| z.try_add(&f.integrate(tv)?))
            .collect::<Result<Vec<_>>>()?;
    }
    if t0 == 0.0 {
        return Ok(y);
    }
    let mut base = z0;
    base.push(t0);
    let mut args = spatial;
    args.push(tvar);
    y.iter().map(|j| j.compose(&base, &args)).collect()
}
