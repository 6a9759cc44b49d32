//! Smooth maps and curves of (local) diffeomorphisms on box domains.
//!
//! A manifold is a single chart: an open box in `R^m`. Every curve exposes its
//! full mixed `(x, t)` jet at a base point through [`Curve::jets`]; values,
//! Jacobians, time derivatives and inverses are read from or built on those
//! jets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::flows;
use crate::jet::{variables, Jet, JetContext};
use crate::linalg::{self, Matrix};
use crate::scalar::Scalar;
use crate::sections::VectorField;

/// Points closer than this to the boundary count as outside.
pub const DOMAIN_GUARD: f64 = 1e-9;
pub const NEWTON_TOL: f64 = 1e-13;
pub const NEWTON_MAX_ITER: usize = 50;
/// Tolerance on `φ_0 = Id` for curves flagged as passing through the identity.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Domain> {
        let d = Domain { lo, hi };
        d.validate()?;
        Ok(d)
    }

    /// The symmetric box `(-r, r)^m`.
    pub fn cube(dim: usize, r: f64) -> Domain {
        Domain {
            lo: vec![-r; dim],
            hi: vec![r; dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::InvalidDomain(format!(
                "bounds of length {} and {}",
                self.lo.len(),
                self.hi.len()
            )));
        }
        for (i, (lo, hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(lo < hi) {
                return Err(Error::InvalidDomain(format!("axis {i}: {lo} is not below {hi}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (lo, hi))| *v > lo + DOMAIN_GUARD && *v < hi - DOMAIN_GUARD)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: x.to_vec() })
        }
    }
}

/// Evaluates expressions on the coordinate jets at `(x0, t0)` in `ctx`.
pub(crate) fn eval_jets(components: &[Expr], ctx: &JetContext, x0: &[f64], t0: f64) -> Result<Vec<Jet>> {
    let mut base = x0.to_vec();
    base.resize(ctx.space_dim(), 0.0);
    let mut vars = variables(ctx, &base, t0)?;
    let time = vars.pop().unwrap();
    vars.truncate(x0.len());
    if vars.is_empty() {
        // curves R → M: no space arguments, keep the time jet as prototype
        return components.iter().map(|c| c.eval(&[], Some(&time))).collect();
    }
    components.iter().map(|c| c.eval(&vars, Some(&time))).collect()
}

/// A smooth map `f: U ⊂ R^m → R^n`, optionally time dependent.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMap {
    pub in_dim: usize,
    pub out_dim: usize,
    pub time_dependent: bool,
    pub components: Vec<Expr>,
    pub domain: Option<Domain>,
}

impl SmoothMap {
    pub fn parse<S: AsRef<str>>(
        components: &[S],
        in_dim: usize,
        time_dependent: bool,
        domain: Option<Domain>,
    ) -> Result<SmoothMap> {
        let components = components
            .iter()
            .map(|c| Expr::parse(c.as_ref(), in_dim, time_dependent))
            .collect::<Result<Vec<_>>>()?;
        SmoothMap::new(components, in_dim, time_dependent, domain)
    }

    pub fn new(components: Vec<Expr>, in_dim: usize, time_dependent: bool, domain: Option<Domain>) -> Result<SmoothMap> {
        for c in &components {
            if c.space_arity() > in_dim {
                return Err(Error::Dimension {
                    expected: in_dim,
                    got: c.space_arity(),
                });
            }
            if c.uses_time() && !time_dependent {
                return Err(Error::TimeNotAllowed { offset: 0 });
            }
        }
        if let Some(d) = &domain {
            d.validate()?;
            if d.dim() != in_dim {
                return Err(Error::Dimension {
                    expected: in_dim,
                    got: d.dim(),
                });
            }
        }
        Ok(SmoothMap {
            in_dim,
            out_dim: components.len(),
            time_dependent,
            components,
            domain,
        })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim {
            return Err(Error::Dimension {
                expected: self.in_dim,
                got: x.len(),
            });
        }
        match &self.domain {
            Some(d) => d.check(x),
            None => Ok(()),
        }
    }

    pub fn evaluate(&self, t: Option<f64>, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let t = t.unwrap_or(0.0);
        if x.is_empty() {
            return self.components.iter().map(|c| c.eval(&[], Some(&t))).collect();
        }
        self.components.iter().map(|c| c.eval(x, Some(&t))).collect()
    }

    /// Jets of every component at `(t0, x0)`, in a context with
    /// `max(in_dim, out_dim)` space variables.
    pub fn jet_at(&self, t0: f64, x0: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.check_point(x0)?;
        let ctx = JetContext::new(self.in_dim.max(self.out_dim).max(1), order)?;
        eval_jets(&self.components, &ctx, x0, t0)
    }

    /// `n × m` matrix `∂f_i/∂x_j`.
    pub fn spatial_jacobian(&self, t: f64, x: &[f64]) -> Result<Matrix<f64>> {
        let jets = self.jet_at(t, x, 1)?;
        jacobian_values(&jets, self.in_dim)
    }

    /// `∂_t^k f(t, x)`.
    pub fn time_derivative(&self, t: f64, x: &[f64], k: usize) -> Result<Vec<f64>> {
        let jets = self.jet_at(t, x, k)?;
        jets.iter().map(|j| j.time_derivative(k)).collect()
    }
}

/// Linear spatial coefficients of a jet vector.
pub fn jacobian_values(jets: &[Jet], in_dim: usize) -> Result<Matrix<f64>> {
    jets.iter()
        .map(|j| {
            (0..in_dim)
                .map(|v| j.extract_derivative(&j.context().unit_index(v, 1)))
                .collect()
        })
        .collect()
}

/// `∂_j Φ_i` as jets of one order less.
pub fn jacobian_jets(jets: &[Jet], in_dim: usize) -> Result<Matrix<Jet>> {
    jets.iter()
        .map(|j| (0..in_dim).map(|v| j.partial(v)).collect())
        .collect()
}

/// A curve of local diffeomorphisms `t ↦ φ_t` of an `m`-dimensional box.
pub trait Curve: Sync {
    fn dim(&self) -> usize;

    fn domain(&self) -> &Domain;

    /// Mixed `(x, t)` jets of `φ(t, x)` at `(t0, x0)`, in context `(m, order)`.
    fn jets(&self, t0: f64, x0: &[f64], order: usize) -> Result<Vec<Jet>>;

    fn evaluate(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jets(t, x, 0)?.iter().map(|j| j.value()).collect())
    }
}

/// Spatial Jacobian `T_xφ_t` of a curve.
pub fn spatial_jacobian(curve: &dyn Curve, t: f64, x: &[f64]) -> Result<Matrix<f64>> {
    jacobian_values(&curve.jets(t, x, 1)?, curve.dim())
}

/// `∂_t^k φ_t(x)`.
pub fn time_derivative(curve: &dyn Curve, t: f64, x: &[f64], k: usize) -> Result<Vec<f64>> {
    curve
        .jets(t, x, k)?
        .iter()
        .map(|j| j.time_derivative(k))
        .collect()
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `φ_t(x) = y` by undamped Newton iteration from `guess`.
pub fn invert_at(curve: &dyn Curve, t: f64, y: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
    let mut x = guess.to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        curve.domain().check(&x)?;
        let jets = curve.jets(t, &x, 1)?;
        let r: Vec<f64> = jets.iter().zip(y).map(|(j, y)| j.value() - y).collect();
        let prev = residual;
        residual = sup_norm(&r);
        if residual <= NEWTON_TOL {
            return Ok(x);
        }
        let jac = jacobian_values(&jets, curve.dim())?;
        let dx = linalg::solve(&jac, &r)?;
        // stagnation at the evaluation noise floor (adaptive flows)
        if residual <= 1e-12 && (residual >= prev || sup_norm(&dx) <= 1e-15 * (1.0 + sup_norm(&x))) {
            return Ok(x);
        }
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi -= d;
        }
    }
    Err(Error::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        residual,
    })
}

/// Jets of `(t, y) ↦ φ_t^{-1}(y)` at `(t0, y0)`.
///
/// Solves `φ(t, ψ(t, y)) = y` order by order with a chord iteration: the
/// Jacobian is frozen at the base point, so each sweep fixes one more degree.
pub fn inverse_jet_at(curve: &dyn Curve, t0: f64, y0: &[f64], order: usize) -> Result<Vec<Jet>> {
    let m = curve.dim();
    let x_star = invert_at(curve, t0, y0, y0)?;
    let forward = curve.jets(t0, &x_star, order.max(1))?;
    let j0 = jacobian_values(&forward, m)?;
    let j0_inv = linalg::inverse(&j0)?;
    let ctx = JetContext::new(m, order)?;
    let mut yvars = variables(&ctx, y0, t0)?;
    let tvar = yvars.pop().unwrap();
    let mut base = x_star.clone();
    base.push(t0);
    let mut psi: Vec<Jet> = x_star.iter().map(|&v| Jet::constant(v, &ctx)).collect();
    for _ in 0..=order {
        let mut args = psi.clone();
        args.push(tvar.clone());
        let residual = forward
            .iter()
            .zip(&yvars)
            .map(|(f, y)| f.compose(&base, &args)?.try_sub(y))
            .collect::<Result<Vec<_>>>()?;
        for (i, p) in psi.iter_mut().enumerate() {
            let mut corr = Jet::zero(&ctx);
            for (k, r) in residual.iter().enumerate() {
                corr = corr + r.scale(j0_inv[i][k]);
            }
            *p = p.try_sub(&corr)?;
        }
    }
    Ok(psi)
}

/// The inverse curve `t ↦ φ_t^{-1}`.
pub struct InverseCurve<'a> {
    pub curve: &'a dyn Curve,
}

impl Curve for InverseCurve<'_> {
    fn dim(&self) -> usize {
        self.curve.dim()
    }

    fn domain(&self) -> &Domain {
        self.curve.domain()
    }

    fn jets(&self, t0: f64, y0: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.curve.domain().check(y0)?;
        inverse_jet_at(self.curve, t0, y0, order)
    }

    fn evaluate(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        invert_at(self.curve, t, y, y)
    }
}

/// How a [`DiffeoCurve`] produces its values.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind {
    /// Closed-form components in `x1..xm, t`.
    Map(SmoothMap),
    /// `Fl^X_t`, the flow of a vector field starting at `t = 0`.
    Flow { field: VectorField, tol: f64 },
}

/// A curve of local diffeomorphisms `φ_t` on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffeoCurve {
    pub kind: CurveKind,
    pub domain: Domain,
    pub time_window: (f64, f64),
    pub through_identity: bool,
}

impl DiffeoCurve {
    pub fn from_map(map: SmoothMap, time_window: (f64, f64), through_identity: bool) -> Result<DiffeoCurve> {
        if map.in_dim != map.out_dim {
            return Err(Error::Dimension {
                expected: map.in_dim,
                got: map.out_dim,
            });
        }
        let domain = map
            .domain
            .clone()
            .ok_or_else(|| Error::InvalidDomain("a diffeomorphism curve needs a domain".into()))?;
        check_window(time_window)?;
        Ok(DiffeoCurve {
            kind: CurveKind::Map(SmoothMap {
                time_dependent: true,
                ..map
            }),
            domain,
            time_window,
            through_identity,
        })
    }

    /// Parses `m` component expressions in `x1..xm, t`.
    pub fn parse<S: AsRef<str>>(components: &[S], domain: Domain, time_window: (f64, f64)) -> Result<DiffeoCurve> {
        let m = domain.dim();
        let map = SmoothMap::parse(components, m, true, Some(domain))?;
        DiffeoCurve::from_map(map, time_window, false)
    }

    pub fn flow_of(field: VectorField, time_window: (f64, f64), tol: f64) -> Result<DiffeoCurve> {
        check_window(time_window)?;
        Ok(DiffeoCurve {
            domain: field.domain.clone(),
            kind: CurveKind::Flow { field, tol },
            time_window,
            through_identity: true,
        })
    }

    pub fn with_identity_flag(mut self, through_identity: bool) -> Self {
        self.through_identity = through_identity;
        self
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.time_window;
        if t < lo || t > hi {
            return Err(Error::OutsideTimeWindow { t, lo, hi });
        }
        Ok(())
    }

    /// Confirms `φ_0(x) = x` at the given points.
    pub fn check_through_identity(&self, points: &[Vec<f64>]) -> Result<()> {
        for x in points {
            let y = self.evaluate(0.0, x)?;
            let deviation = y.iter().zip(x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if deviation > IDENTITY_TOL {
                return Err(Error::NotThroughIdentity { deviation });
            }
        }
        Ok(())
    }
}

fn check_window((lo, hi): (f64, f64)) -> Result<()> {
    if !(lo <= hi) {
        return Err(Error::InvalidDomain(format!("time window [{lo}, {hi}]")));
    }
    Ok(())
}

impl Curve for DiffeoCurve {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn jets(&self, t0: f64, x0: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.check_time(t0)?;
        self.domain.check(x0)?;
        match &self.kind {
            CurveKind::Map(map) => {
                let ctx = JetContext::new(self.dim(), order)?;
                eval_jets(&map.components, &ctx, x0, t0)
            }
            CurveKind::Flow { field, tol } => flows::flow_jets(field, t0, x0, order, *tol),
        }
    }

    fn evaluate(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.check_time(t)?;
        self.domain.check(x)?;
        match &self.kind {
            CurveKind::Map(map) => map.evaluate(Some(t), x),
            CurveKind::Flow { field, tol } => Ok(flows::flow(field, 0.0, t, x, *tol)?.endpoint),
        }
    }
}
