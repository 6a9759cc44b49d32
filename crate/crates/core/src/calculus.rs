//! Adapted vector fields of a curve of diffeomorphisms, first non-vanishing
//! derivatives, and verifiers for the Lie derivative identities.
//!
//! Given a curve `φ_t` and a section `s`:
//!
//! ```text
//! ∂_t φ_t^* s       = φ_t^* L_{Y_t} s      = L_{X_t} φ_t^* s                      (eq1)
//! ∂_t (φ_t)_* s     = ∂_t (φ_t^{-1})^* s   = -(φ_t)_* L_{X_t} s = -L_{Y_t} (φ_t)_* s  (eq2)
//! ```
//!
//! with `X_t = Tφ_t^{-1} ∘ ∂_t φ_t` and `Y_t = ∂_t φ_t ∘ φ_t^{-1}`. If the first
//! `k - 1` time derivatives at `t0` vanish, `Ξ = ∂_t^k φ_t / k!` replaces
//! `∂_t φ_t` and the left-hand sides become `∂_t^k / k!` (eq3, eq4).
//!
//! Lie derivatives of time-dependent fields act on the time slice: only
//! spatial partials enter the formula, so `L_{X_t}` is taken with `t` frozen.
//!
//! Every verifier evaluates all sides at each sample point, compares them
//! pairwise and collects the results into an [`IdentityReport`]. Points where
//! evaluation fails (typically because `φ_t(x)` leaves the domain) are
//! recorded as skipped; a report needs [`MIN_COVERAGE`] of its points to count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bundles::FunctorSpec;
use crate::error::{Error, Result};
use crate::jet::{variables, Jet};
use crate::linalg;
use crate::maps::{inverse_jet_at, jacobian_jets, jacobian_values, Curve, Domain, InverseCurve, SmoothMap};
use crate::scalar::Scalar;
use crate::sections::{
    bracket, inverse_pullback, lie_derivative_flow, richardson_derivative, FdScheme, JetSource, LieDerivative,
    Pullback, Pushforward, VectorField,
};

pub const EPS_ZERO: f64 = 1e-9;
pub const MIN_COVERAGE: f64 = 0.8;
pub const DEFINITIONAL_TOL: f64 = 1e-10;
pub const FD_ORACLE_TOL: f64 = 1e-6;
pub const DEFAULT_K_MAX: usize = 3;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    Eq1,
    Eq2,
    Eq3,
    Eq4,
    Lemma6,
    Lemma2,
    Bracket,
    InverseCurve,
    LieOracle,
}

impl Identity {
    pub const ALL: [Identity; 9] = [
        Identity::Eq1,
        Identity::Eq2,
        Identity::Eq3,
        Identity::Eq4,
        Identity::Lemma6,
        Identity::Lemma2,
        Identity::Bracket,
        Identity::InverseCurve,
        Identity::LieOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Identity::Eq1 => "eq1",
            Identity::Eq2 => "eq2",
            Identity::Eq3 => "eq3",
            Identity::Eq4 => "eq4",
            Identity::Lemma6 => "lemma6",
            Identity::Lemma2 => "lemma2",
            Identity::Bracket => "bracket",
            Identity::InverseCurve => "inverse_curve",
            Identity::LieOracle => "lie_oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<Identity> {
        Identity::ALL.into_iter().find(|i| i.name() == name)
    }

    pub fn default_tolerances(self) -> Tolerances {
        let abs = match self {
            Identity::Eq1 | Identity::Eq2 => 1e-7,
            Identity::Eq3 | Identity::Eq4 | Identity::Lemma6 | Identity::LieOracle => 1e-6,
            Identity::Bracket => 1e-9,
            Identity::InverseCurve => 1e-8,
            Identity::Lemma2 => 1e-12,
        };
        let rel = if self == Identity::Lemma2 { 1e-9 } else { 0.0 };
        Tolerances { abs, rel }
    }
}

impl std::fmt::Display for Identity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// An error passes if it is within `abs`, or within `rel` relative to the
/// larger of the two compared magnitudes when `rel > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerances {
    pub fn accepts(&self, abs_err: f64, rel_err: f64) -> bool {
        abs_err <= self.abs || (self.rel > 0.0 && rel_err <= self.rel)
    }

    pub fn scaled(&self, factor: f64) -> Tolerances {
        Tolerances {
            abs: self.abs * factor,
            rel: self.rel * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeled {
    pub label: String,
    pub components: Vec<f64>,
}

fn labeled(label: &str, components: Vec<f64>) -> Labeled {
    Labeled {
        label: label.to_string(),
        components,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub lhs: String,
    pub rhs: String,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tol: Tolerances,
    pub pass: bool,
}

/// Sup-norm difference and the matching relative error; `0/0` counts as 0.
pub fn errors(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut abs = 0.0f64;
    let mut scale = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let d = (x - y).abs();
        abs = if d.is_nan() { f64::NAN } else { abs.max(d) };
        scale = scale.max(x.abs()).max(y.abs());
    }
    let rel = if abs == 0.0 { 0.0 } else { abs / scale };
    (abs, rel)
}

fn compare(a: &Labeled, b: &Labeled, tol: Tolerances) -> Comparison {
    let (abs_err, rel_err) = errors(&a.components, &b.components);
    Comparison {
        lhs: a.label.clone(),
        rhs: b.label.clone(),
        abs_err,
        rel_err,
        tol,
        pass: tol.accepts(abs_err, rel_err),
    }
}

fn pairwise(values: &[Labeled], tol: Tolerances) -> Vec<Comparison> {
    let mut out = Vec::new();
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            out.push(compare(&values[i], &values[j], tol));
        }
    }
    out
}

/// One sample point: the evaluated sides (left-hand side first) and their
/// comparisons. `skipped` holds the error of a point that could not be
/// evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub point: Vec<f64>,
    pub t0: f64,
    pub values: Vec<Labeled>,
    pub comparisons: Vec<Comparison>,
    pub abs_err: f64,
    pub rel_err: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: Identity,
    pub scenario: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Highest time order differentiated (`k`, plus any extra jet order).
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Largest `‖∂_t^j φ‖` over `1 ≤ j < k`, certifying the vanishing orders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_order_max: Option<f64>,
    pub records: Vec<PointRecord>,
    pub coverage: f64,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub valid: bool,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl IdentityReport {
    fn new(identity: Identity, opts: &VerifyOptions) -> IdentityReport {
        IdentityReport {
            identity,
            scenario: opts.scenario.clone(),
            seed: opts.seed,
            tolerances: opts.tol,
            order: 0,
            k: None,
            lower_order_max: None,
            records: Vec::new(),
            coverage: 0.0,
            max_abs_err: 0.0,
            max_rel_err: 0.0,
            valid: false,
            pass: false,
            error: None,
        }
    }

    /// A report for a scenario that could not be run at all.
    pub fn failed(identity: Identity, opts: &VerifyOptions, err: &Error) -> IdentityReport {
        let mut r = IdentityReport::new(identity, opts);
        r.error = Some(err.to_string());
        r
    }

    /// Combines reports of one identity and scenario taken at several `t0`.
    pub fn merge(parts: Vec<IdentityReport>) -> IdentityReport {
        let mut iter = parts.into_iter();
        let mut out = iter.next().expect("at least one report to merge");
        for r in iter {
            out.records.extend(r.records);
            out.order = out.order.max(r.order);
            out.k = out.k.max(r.k);
            out.lower_order_max = match (out.lower_order_max, r.lower_order_max) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
            if out.error.is_none() {
                out.error = r.error;
            }
        }
        out.finish()
    }

    fn finish(mut self) -> IdentityReport {
        let evaluated: Vec<&PointRecord> = self.records.iter().filter(|r| r.skipped.is_none()).collect();
        self.coverage = if self.records.is_empty() {
            0.0
        } else {
            evaluated.len() as f64 / self.records.len() as f64
        };
        self.max_abs_err = evaluated.iter().map(|r| r.abs_err).fold(0.0, nan_max);
        self.max_rel_err = evaluated.iter().map(|r| r.rel_err).fold(0.0, nan_max);
        self.valid = self.error.is_none() && self.coverage >= MIN_COVERAGE;
        self.pass = self.valid && evaluated.iter().all(|r| r.pass);
        self
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Knobs shared by all verifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub scenario: String,
    pub seed: u64,
    pub tol: Tolerances,
    pub eps_zero: f64,
    pub k_max: usize,
    /// Expected order of the first non-vanishing derivative, if declared.
    pub k: Option<usize>,
    /// Jets are computed this many orders above what the identity needs.
    pub extra_order: usize,
    pub fd_oracle: bool,
    /// Multiplies every right-hand side. Anything but 1 breaks the identity;
    /// used by regression fixtures to prove the verifiers can fail.
    pub rhs_sign: f64,
}

impl VerifyOptions {
    pub fn new(identity: Identity) -> VerifyOptions {
        VerifyOptions {
            scenario: String::new(),
            seed: 0,
            tol: identity.default_tolerances(),
            eps_zero: EPS_ZERO,
            k_max: DEFAULT_K_MAX,
            k: None,
            extra_order: 0,
            fd_oracle: false,
            rhs_sign: 1.0,
        }
    }

    pub fn with_tol(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }
}

/// Sides of an identity at one point, left-hand side first.
/// `extra` holds side checks that are not part of the pairwise chain, and
/// `extra_values` the quantities they compare.
struct Sides {
    values: Vec<Labeled>,
    extra: Vec<Comparison>,
    extra_values: Vec<Labeled>,
}

fn sides(values: Vec<Labeled>) -> Sides {
    Sides {
        values,
        extra: Vec::new(),
        extra_values: Vec::new(),
    }
}

fn record(point: &[f64], t0: f64, outcome: Result<Sides>, opts: &VerifyOptions) -> PointRecord {
    match outcome {
        Ok(mut s) => {
            for v in s.values.iter_mut().skip(1) {
                for c in v.components.iter_mut() {
                    *c *= opts.rhs_sign;
                }
            }
            let mut comparisons = pairwise(&s.values, opts.tol);
            comparisons.extend(s.extra);
            s.values.extend(s.extra_values);
            let abs_err = comparisons.iter().map(|c| c.abs_err).fold(0.0, nan_max);
            let rel_err = comparisons.iter().map(|c| c.rel_err).fold(0.0, nan_max);
            let pass = comparisons.iter().all(|c| c.pass);
            PointRecord {
                point: point.to_vec(),
                t0,
                values: s.values,
                comparisons,
                abs_err,
                rel_err,
                pass,
                skipped: None,
            }
        }
        Err(e) => PointRecord {
            point: point.to_vec(),
            t0,
            values: Vec::new(),
            comparisons: Vec::new(),
            abs_err: 0.0,
            rel_err: 0.0,
            pass: false,
            skipped: Some(e.to_string()),
        },
    }
}

/// `count` points drawn uniformly from the middle half of each side of the
/// box, reproducibly from `seed`.
pub fn sample_points(domain: &Domain, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            domain
                .lo
                .iter()
                .zip(&domain.hi)
                .map(|(lo, hi)| lo + (hi - lo) * rng.gen_range(0.25..0.75))
                .collect()
        })
        .collect()
}

fn xi_jets(phi: &[Jet], k: usize) -> Result<Vec<Jet>> {
    let tv = phi[0].context().time_var();
    let scale = 1.0 / factorial(k);
    phi.iter()
        .map(|j| {
            let mut d = j.clone();
            for _ in 0..k {
                d = d.partial(tv)?;
            }
            Ok(d.scale(scale))
        })
        .collect()
}

/// `X = Tφ_t^{-1} ∘ Ξ` with `Ξ = ∂_t^k φ_t / k!`, as a time-dependent field on
/// the source side. For `k = 1` this is `X_t`.
pub struct AdaptedX<'a> {
    pub curve: &'a dyn Curve,
    pub k: usize,
}

impl JetSource for AdaptedX<'_> {
    fn dim(&self) -> usize {
        self.curve.dim()
    }

    fn spec(&self) -> FunctorSpec {
        FunctorSpec::TANGENT
    }

    fn jets(&self, t0: f64, x0: &[f64], order: usize) -> Result<Vec<Jet>> {
        let m = self.dim();
        let phi = self.curve.jets(t0, x0, order + self.k)?;
        let xi = xi_jets(&phi, self.k)?;
        let jac = jacobian_jets(&phi, m)?
            .into_iter()
            .map(|row| row.iter().map(|j| j.truncate(order)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        linalg::solve(&jac, &xi)
    }
}

/// `Y = Ξ ∘ φ_t^{-1}`, the same vector field seen on the target side. For
/// `k = 1` this is `Y_t`.
pub struct AdaptedY<'a> {
    pub curve: &'a dyn Curve,
    pub k: usize,
}

impl JetSource for AdaptedY<'_> {
    fn dim(&self) -> usize {
        self.curve.dim()
    }

    fn spec(&self) -> FunctorSpec {
        FunctorSpec::TANGENT
    }

    fn jets(&self, t0: f64, y0: &[f64], order: usize) -> Result<Vec<Jet>> {
        let m = self.dim();
        let psi = inverse_jet_at(self.curve, t0, y0, order)?;
        let ctx = psi[0].context().clone();
        let x_star: Vec<f64> = psi.iter().map(|j| j.value()).collect();
        let xi = xi_jets(&self.curve.jets(t0, &x_star, order + self.k)?, self.k)?;
        let mut args = psi;
        args.push(Jet::variable(m, t0, &ctx)?);
        let mut base = x_star;
        base.push(t0);
        xi.iter().map(|j| j.compose(&base, &args)).collect()
    }
}

/// The adapted fields `(X_t, Y_t)` of a curve.
pub fn curve_fields(curve: &dyn Curve) -> (AdaptedX<'_>, AdaptedY<'_>) {
    (AdaptedX { curve, k: 1 }, AdaptedY { curve, k: 1 })
}

/// `x ↦ Ξ(x) ∈ T_{φ_{t0}(x)}M`, a vector field along the map `φ_{t0}`.
pub struct VectorFieldAlongMap<'a> {
    pub curve: &'a dyn Curve,
    pub t0: f64,
    pub k: usize,
}

impl VectorFieldAlongMap<'_> {
    /// Returns the foot point `φ_{t0}(x)` and the vector `Ξ(x)`.
    pub fn at(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let phi = self.curve.jets(self.t0, x, self.k)?;
        let foot = phi.iter().map(|j| j.value()).collect();
        let scale = 1.0 / factorial(self.k);
        let v = phi
            .iter()
            .map(|j| Ok(j.time_derivative(self.k)? * scale))
            .collect::<Result<Vec<_>>>()?;
        Ok((foot, v))
    }

    /// `Tφ_{t0}^{-1} ∘ Ξ`.
    pub fn pulled_back(&self) -> AdaptedX<'_> {
        AdaptedX { curve: self.curve, k: self.k }
    }

    /// `Ξ ∘ φ_{t0}^{-1}`.
    pub fn pushed_forward(&self) -> AdaptedY<'_> {
        AdaptedY { curve: self.curve, k: self.k }
    }
}

/// `max_x ‖∂_t^j φ_t(x)‖∞` at `t0` for `j = 1..=k_max`.
pub fn derivative_profile(curve: &dyn Curve, t0: f64, k_max: usize, samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut out = vec![0.0f64; k_max];
    for x in samples {
        let phi = curve.jets(t0, x, k_max)?;
        for (j, slot) in out.iter_mut().enumerate() {
            for c in &phi {
                *slot = slot.max(c.time_derivative(j + 1)?.abs());
            }
        }
    }
    Ok(out)
}

/// The smallest `k ≥ 1` whose time derivative at `t0` exceeds `eps_zero`
/// somewhere on `samples`, with `Ξ = ∂_t^k φ_t / k!`.
pub fn first_nonvanishing_derivative<'a>(
    curve: &'a dyn Curve,
    t0: f64,
    k_max: usize,
    eps_zero: f64,
    samples: &[Vec<f64>],
) -> Result<Option<(usize, VectorFieldAlongMap<'a>)>> {
    let profile = derivative_profile(curve, t0, k_max, samples)?;
    Ok(profile
        .iter()
        .position(|&v| v > eps_zero)
        .map(|i| (i + 1, VectorFieldAlongMap { curve, t0, k: i + 1 })))
}

/// Determines `k` for the higher-order identities and certifies that the
/// lower orders vanish.
fn detect_order(curve: &dyn Curve, t0: f64, points: &[Vec<f64>], opts: &VerifyOptions) -> Result<(usize, f64)> {
    let k_max = opts.k.unwrap_or(0).max(opts.k_max);
    let profile = derivative_profile(curve, t0, k_max, points)?;
    let k = match opts.k {
        Some(k) => k,
        None => match profile.iter().position(|&v| v > opts.eps_zero) {
            Some(i) => i + 1,
            None => return Err(Error::NoNonVanishingDerivative(k_max)),
        },
    };
    if k == 0 {
        return Err(Error::OrderPrecondition {
            order: 0,
            size: 0.0,
            eps: opts.eps_zero,
        });
    }
    let lower = profile[..k - 1].iter().copied().fold(0.0, f64::max);
    if lower > opts.eps_zero {
        return Err(Error::OrderPrecondition {
            order: k,
            size: lower,
            eps: opts.eps_zero,
        });
    }
    Ok((k, lower))
}

fn time_derivative_of(source: &dyn JetSource, t0: f64, x: &[f64], k: usize, extra: usize) -> Result<Vec<f64>> {
    source
        .jets(t0, x, k + extra)?
        .iter()
        .map(|j| j.time_derivative(k))
        .collect()
}

fn value_of(source: &dyn JetSource, t0: f64, x: &[f64], scale: f64) -> Result<Vec<f64>> {
    Ok(source.value_at(t0, x)?.components.iter().map(|v| v * scale).collect())
}

fn run_points<F>(identity: Identity, points: &[Vec<f64>], t0: f64, opts: &VerifyOptions, f: F) -> IdentityReport
where
    F: Fn(&[f64]) -> Result<Sides>,
{
    let mut report = IdentityReport::new(identity, opts);
    report.records = points.iter().map(|x| record(x, t0, f(x), opts)).collect();
    report
}

fn fd_check(
    label: &str,
    source: &dyn JetSource,
    t0: f64,
    x: &[f64],
    jet_value: &Labeled,
) -> Result<Comparison> {
    let d = richardson_derivative(|t| Ok(source.value_at(t, x)?.components), t0, FdScheme::default())?;
    Ok(compare(
        jet_value,
        &labeled(label, d),
        Tolerances {
            abs: FD_ORACLE_TOL,
            rel: 0.0,
        },
    ))
}

/// `∂_t φ_t^* s = φ_t^* L_{Y_t} s = L_{X_t} φ_t^* s` at `t0`.
pub fn verify_eq1(
    curve: &dyn Curve,
    s: &dyn JetSource,
    t0: f64,
    points: &[Vec<f64>],
    opts: &VerifyOptions,
) -> IdentityReport {
    verify_pullback_chain(Identity::Eq1, curve, s, t0, points, 1, 0.0, opts)
}

#[allow(clippy::too_many_arguments)]
fn verify_pullback_chain(
    identity: Identity,
    curve: &dyn Curve,
    s: &dyn JetSource,
    t0: f64,
    points: &[Vec<f64>],
    k: usize,
    lower: f64,
    opts: &VerifyOptions,
) -> IdentityReport {
    let x_field = AdaptedX { curve, k };
    let y_field = AdaptedY { curve, k };
    let pulled = Pullback { curve, section: s };
    let lie_y = LieDerivative {
        field: &y_field,
        section: s,
    };
    let pulled_lie = Pullback { curve, section: &lie_y };
    let lie_pulled = LieDerivative {
        field: &x_field,
        section: &pulled,
    };
    let kf = factorial(k);
    let mut report = run_points(identity, points, t0, opts, |x| {
        let lhs = labeled("d_t^k pullback", time_derivative_of(&pulled, t0, x, k, opts.extra_order)?);
        let mut out = sides(vec![
            lhs.clone(),
            labeled("k! pullback(L_Y s)", value_of(&pulled_lie, t0, x, kf)?),
            labeled("k! L_X pullback(s)", value_of(&lie_pulled, t0, x, kf)?),
        ]);
        if opts.fd_oracle && k == 1 {
            out.extra.push(fd_check("finite difference", &pulled, t0, x, &lhs)?);
        }
        Ok(out)
    });
    report.order = k + opts.extra_order;
    if identity != Identity::Eq1 {
        report.k = Some(k);
        report.lower_order_max = Some(lower);
    }
    report.finish()
}

/// `∂_t (φ_t)_* s = ∂_t (φ_t^{-1})^* s = -(φ_t)_* L_{X_t} s = -L_{Y_t} (φ_t)_* s`
/// at `t0`, plus the definitional `(φ_t)_* s = (φ_t^{-1})^* s`.
pub fn verify_eq2(
    curve: &dyn Curve,
    s: &dyn JetSource,
    t0: f64,
    points: &[Vec<f64>],
    opts: &VerifyOptions,
) -> IdentityReport {
    verify_pushforward_chain(Identity::Eq2, curve, s, t0, points, 1, 0.0, opts)
}

#[allow(clippy::too_many_arguments)]
fn verify_pushforward_chain(
    identity: Identity,
    curve: &dyn Curve,
    s: &dyn JetSource,
    t0: f64,
    points: &[Vec<f64>],
    k: usize,
    lower: f64,
    opts: &VerifyOptions,
) -> IdentityReport {
    let x_field = AdaptedX { curve, k };
    let y_field = AdaptedY { curve, k };
    let inverse = InverseCurve { curve };
    let pushed = Pushforward { curve, section: s };
    let inv_pulled = inverse_pullback(&inverse, s);
    let lie_x = LieDerivative {
        field: &x_field,
        section: s,
    };
    let pushed_lie = Pushforward { curve, section: &lie_x };
    let lie_pushed = LieDerivative {
        field: &y_field,
        section: &pushed,
    };
    let kf = factorial(k);
    let definitional = Tolerances {
        abs: DEFINITIONAL_TOL,
        rel: 0.0,
    };
    let mut report = run_points(identity, points, t0, opts, |x| {
        let lhs = labeled("d_t^k pushforward", time_derivative_of(&pushed, t0, x, k, opts.extra_order)?);
        let mut out = sides(vec![
            lhs.clone(),
            labeled(
                "d_t^k inverse pullback",
                time_derivative_of(&inv_pulled, t0, x, k, opts.extra_order)?,
            ),
            labeled("-k! pushforward(L_X s)", value_of(&pushed_lie, t0, x, -kf)?),
            labeled("-k! L_Y pushforward(s)", value_of(&lie_pushed, t0, x, -kf)?),
        ]);
        out.extra.push(compare(
            &labeled("pushforward", value_of(&pushed, t0, x, 1.0)?),
            &labeled("inverse pullback", value_of(&inv_pulled, t0, x, 1.0)?),
            definitional,
        ));
        if opts.fd_oracle && k == 1 {
            out.extra.push(fd_check("finite difference", &pushed, t0, x, &lhs)?);
        }
        Ok(out)
    });
    report.order = k + opts.extra_order;
    if identity != Identity::Eq2 {
        report.k = Some(k);
        report.lower_order_max = Some(lower);
    }
    report.finish()
}

/// The higher-order forms: eq3 for pullbacks and eq4 for push-forwards, with
/// `k` the first non-vanishing order at `t0`.
pub fn verify_cor2(
    curve: &dyn Curve,
    s: &dyn JetSource,
    t0: f64,
    points: &[Vec<f64>],
    opts: &VerifyOptions,
) -> (IdentityReport, IdentityReport) {
    match detect_order(curve, t0, points, opts) {
        Ok((k, lower)) => (
            verify_pullback_chain(Identity::Eq3, curve, s, t0, points, k, lower, opts),
            verify_pushforward_chain(Identity::Eq4, curve, s, t0, points, k, lower, opts),
        ),
        Err(e) => (
            IdentityReport::failed(Identity::Eq3, opts, &e),
            IdentityReport::failed(Identity::Eq4, opts, &e),
        ),
    }
}

/// `∂_t^k|_0 φ_t^* s = k! L_X s` for a curve through the identity whose
/// first non-vanishing derivative at 0 has order `k`.
pub fn verify_lemma6(curve: &dyn Curve, s: &dyn JetSource, points: &[Vec<f64>], opts: &VerifyOptions) -> IdentityReport {
    let identity = Identity::Lemma6;
    let setup = (|| {
        for x in points {
            let y = curve.evaluate(0.0, x)?;
            let (deviation, _) = errors(&y, x);
            if deviation > crate::maps::IDENTITY_TOL {
                return Err(Error::NotThroughIdentity { deviation });
            }
        }
        detect_order(curve, 0.0, points, opts)
    })();
    let (k, lower) = match setup {
        Ok(v) => v,
        Err(e) => return IdentityReport::failed(identity, opts, &e),
    };
    let along = VectorFieldAlongMap { curve, t0: 0.0, k };
    let field = along.pulled_back();
    let pulled = Pullback { curve, section: s };
    let lie = LieDerivative { field: &field, section: s };
    let kf = factorial(k);
    let mut report = run_points(identity, points, 0.0, opts, |x| {
        let lhs = labeled("d_t^k pullback", time_derivative_of(&pulled, 0.0, x, k, opts.extra_order)?);
        let mut out = sides(vec![lhs.clone(), labeled("k! L_X s", value_of(&lie, 0.0, x, kf)?)]);
        if opts.fd_oracle && k == 1 {
            out.extra.push(fd_check("finite difference", &pulled, 0.0, x, &lhs)?);
        }
        Ok(out)
    });
    report.order = k + opts.extra_order;
    report.k = Some(k);
    report.lower_order_max = Some(lower);
    report.finish()
}

/// Derivatives of the inverse curve: with `ψ_t = φ_t^{-1}`, `y = φ_{t0}(x)`
/// and `k` the first non-vanishing order,
///
/// ```text
/// Tφ_{t0}(x) · ∂_t^k ψ_t(y) = -k! Y(y)      ∂_t^k ψ_t(y) = -k! X(x)
/// ```
///
/// `X` is built from forward jets alone, so the second check compares the
/// implicit-function jets of `ψ` with an independent code path.
pub fn inverse_curve_derivative(
    curve: &dyn Curve,
    t0: f64,
    points: &[Vec<f64>],
    opts: &VerifyOptions,
) -> IdentityReport {
    let identity = Identity::InverseCurve;
    let (k, lower) = match detect_order(curve, t0, points, opts) {
        Ok(v) => v,
        Err(e) => return IdentityReport::failed(identity, opts, &e),
    };
    let m = curve.dim();
    let inverse = InverseCurve { curve };
    let x_field = AdaptedX { curve, k };
    let y_field = AdaptedY { curve, k };
    let kf = factorial(k);
    let mut report = run_points(identity, points, t0, opts, |x| {
        let y = curve.evaluate(t0, x)?;
        let psi = inverse.jets(t0, &y, k + opts.extra_order)?;
        let d: Vec<f64> = psi.iter().map(|j| j.time_derivative(k)).collect::<Result<_>>()?;
        let jac = jacobian_values(&curve.jets(t0, x, 1)?, m)?;
        let pushed = linalg::mat_vec(&jac, &d);
        let mut out = sides(vec![
            labeled("d_t^k inverse", d),
            labeled("-k! X", value_of(&x_field, t0, x, -kf)?),
        ]);
        let mut target = [labeled("T phi . d_t^k inverse", pushed), labeled("-k! Y", value_of(&y_field, t0, &y, -kf)?)];
        for c in target[1].components.iter_mut() {
            *c *= opts.rhs_sign;
        }
        out.extra.push(compare(&target[0], &target[1], opts.tol));
        out.extra_values.extend(target);
        Ok(out)
    });
    report.order = k + opts.extra_order;
    report.k = Some(k);
    report.lower_order_max = Some(lower);
    report.finish()
}

/// `L_X L_Y s - L_Y L_X s = L_{[X,Y]} s`.
pub fn verify_bracket(
    x_field: &VectorField,
    y_field: &VectorField,
    s: &dyn JetSource,
    points: &[Vec<f64>],
    opts: &VerifyOptions,
) -> IdentityReport {
    let ly = LieDerivative {
        field: y_field,
        section: s,
    };
    let lx = LieDerivative {
        field: x_field,
        section: s,
    };
    let lxly = LieDerivative {
        field: x_field,
        section: &ly,
    };
    let lylx = LieDerivative {
        field: y_field,
        section: &lx,
    };
    let xy = bracket(x_field, y_field);
    let rhs = LieDerivative { field: &xy, section: s };
    let mut report = run_points(Identity::Bracket, points, 0.0, opts, |x| {
        let a = lxly.value_at(0.0, x)?.components;
        let b = lylx.value_at(0.0, x)?.components;
        let lhs: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
        Ok(sides(vec![
            labeled("L_X L_Y s - L_Y L_X s", lhs),
            labeled("L_[X,Y] s", value_of(&rhs, 0.0, x, 1.0)?),
        ]))
    });
    report.order = 2;
    report.finish()
}

/// Analytic `L_X s` against the flow definition `d/dt|_0 (Fl^X_t)^* s`.
pub fn verify_lie_oracle(
    field: &VectorField,
    s: &dyn JetSource,
    points: &[Vec<f64>],
    flow_tol: f64,
    opts: &VerifyOptions,
) -> IdentityReport {
    let lie = LieDerivative { field, section: s };
    let mut report = run_points(Identity::LieOracle, points, 0.0, opts, |x| {
        Ok(sides(vec![
            labeled("L_X s", value_of(&lie, 0.0, x, 1.0)?),
            labeled(
                "d/dt pullback along flow",
                lie_derivative_flow(field, s, x, FdScheme::default(), flow_tol)?.components,
            ),
        ]))
    });
    report.order = 1;
    report.finish()
}

/// Scalar test functions on `R^m` for the derivation form of the tangent
/// vector check.
pub fn scalar_battery(m: usize) -> Vec<SmoothMap> {
    let sum = (1..=m).map(|i| format!("x{i}")).collect::<Vec<_>>().join(" + ");
    let last = format!("x{m}");
    let sources = [
        sum.clone(),
        format!("exp(0.3*({sum}))"),
        format!("sin(x1)*{last}"),
        format!("(2 + x1^2)^0.5 + {last}^3"),
    ];
    sources
        .iter()
        .map(|src| SmoothMap::parse(&[src], m, false, None).expect("battery expressions are valid"))
        .collect()
}

/// Invariance of the first non-vanishing derivative of a curve `c: R → M` at
/// 0 under a diffeomorphism `ψ`: `(ψ∘c)^(k)(0) = T_{c(0)}ψ · c^(k)(0)`, and
/// `(f∘c)^(k)(0) = df(c^(k)(0))` for each scalar `f` in `battery`.
pub fn verify_lemma2_invariance(
    c: &SmoothMap,
    psi: &SmoothMap,
    battery: &[SmoothMap],
    opts: &VerifyOptions,
) -> IdentityReport {
    let identity = Identity::Lemma2;
    let m = psi.in_dim;
    let setup = (|| {
        if c.out_dim != m || psi.out_dim != m {
            return Err(Error::Dimension {
                expected: m,
                got: c.out_dim,
            });
        }
        let k_max = opts.k.unwrap_or(0).max(opts.k_max);
        let cj = c.jet_at(0.0, &[], k_max)?;
        let norms: Vec<f64> = (1..=k_max)
            .map(|j| {
                cj.iter()
                    .map(|q| q.time_derivative(j).map(f64::abs))
                    .try_fold(0.0f64, |a, v| v.map(|v| a.max(v)))
            })
            .collect::<Result<_>>()?;
        let k = match opts.k {
            Some(k) => k,
            None => norms
                .iter()
                .position(|&v| v > opts.eps_zero)
                .map(|i| i + 1)
                .ok_or(Error::NoNonVanishingDerivative(k_max))?,
        };
        let lower = norms[..k.saturating_sub(1)].iter().copied().fold(0.0, f64::max);
        if k == 0 || lower > opts.eps_zero {
            return Err(Error::OrderPrecondition {
                order: k,
                size: lower,
                eps: opts.eps_zero,
            });
        }
        Ok((k, lower))
    })();
    let (k, lower) = match setup {
        Ok(v) => v,
        Err(e) => return IdentityReport::failed(identity, opts, &e),
    };
    let order = k + opts.extra_order;
    let outcome = (|| {
        let cj = c.jet_at(0.0, &[], order)?;
        let c0: Vec<f64> = cj.iter().map(|j| j.value()).collect();
        let ck: Vec<f64> = cj.iter().map(|j| j.time_derivative(k)).collect::<Result<_>>()?;
        let tvar = variables(cj[0].context(), &c0, 0.0)?.pop().unwrap();
        let mut args = cj.clone();
        args.push(tvar);
        let mut base = c0.clone();
        base.push(0.0);
        let along = |f: &SmoothMap| -> Result<(Vec<f64>, Vec<f64>)> {
            let fj = f.jet_at(0.0, &c0, order)?;
            let direct = fj
                .iter()
                .map(|j| j.compose(&base, &args)?.time_derivative(k))
                .collect::<Result<Vec<_>>>()?;
            let jac = jacobian_values(&fj, m)?;
            Ok((direct, linalg::mat_vec(&jac, &ck)))
        };
        let (direct, linear) = along(psi)?;
        let mut out = sides(vec![labeled("(psi o c)^(k)", direct), labeled("T psi . c^(k)", linear)]);
        for (i, f) in battery.iter().enumerate() {
            let (d, l) = along(f)?;
            let mut rhs = labeled(&format!("df_{i}(c^(k))"), l);
            for v in rhs.components.iter_mut() {
                *v *= opts.rhs_sign;
            }
            let lhs = labeled(&format!("(f_{i} o c)^(k)"), d);
            out.extra.push(compare(&lhs, &rhs, opts.tol));
            out.extra_values.push(lhs);
            out.extra_values.push(rhs);
        }
        Ok((c0, out))
    })();
    let mut report = IdentityReport::new(identity, opts);
    report.records = match outcome {
        Ok((c0, out)) => vec![record(&c0, 0.0, Ok(out), opts)],
        Err(e) => vec![record(&[], 0.0, Err(e), opts)],
    };
    report.order = order;
    report.k = Some(k);
    report.lower_order_max = Some(lower);
    report.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::DiffeoCurve;
    use crate::sections::Section;

    fn line() -> Domain {
        Domain::new(vec![-3.0], vec![3.0]).unwrap()
    }

    fn curve(c: &str) -> DiffeoCurve {
        DiffeoCurve::parse(&[c], line(), (-1.0, 1.0)).unwrap()
    }

    fn section(spec: FunctorSpec, c: &str) -> Section {
        Section::parse(spec, line(), &[c]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn opts(id: Identity) -> VerifyOptions {
        VerifyOptions::new(id)
    }

    #[test]
    fn adapted_fields() {
        let c = curve("exp(t)*x1");
        let (x, y) = curve_fields(&c);
        for t0 in [0.0, 0.4, -0.7] {
            close(x.value_at(t0, &[1.3]).unwrap().components[0], 1.3, 1e-13);
            close(y.value_at(t0, &[1.3]).unwrap().components[0], 1.3, 1e-13);
        }
        let c = curve("x1 + 0.5*t");
        let (x, y) = curve_fields(&c);
        assert_eq!(x.value_at(0.3, &[1.0]).unwrap().components, vec![0.5]);
        close(y.value_at(0.3, &[1.0]).unwrap().components[0], 0.5, 1e-15);
        let c = curve("x1 + t*x1^2");
        let (x, y) = curve_fields(&c);
        assert_eq!(x.value_at(0.0, &[0.7]).unwrap(), y.value_at(0.0, &[0.7]).unwrap());
        close(x.value_at(0.0, &[0.7]).unwrap().components[0], 0.49, 1e-15);
    }

    #[test]
    fn first_nonvanishing() {
        let pts = vec![vec![0.5], vec![-1.0], vec![1.5]];
        let c = curve("x1 + t^3*x1^2");
        let (k, xi) = first_nonvanishing_derivative(&c, 0.0, 5, EPS_ZERO, &pts).unwrap().unwrap();
        assert_eq!(k, 3);
        close(xi.at(&[1.5]).unwrap().1[0], 2.25, 1e-14);
        let c = curve("x1");
        assert!(first_nonvanishing_derivative(&c, 0.0, 6, EPS_ZERO, &pts).unwrap().is_none());
        let c = curve("x1 + t^2*sin(x1) + t^4*x1");
        let (k, xi) = first_nonvanishing_derivative(&c, 0.0, 5, EPS_ZERO, &pts).unwrap().unwrap();
        assert_eq!(k, 2);
        close(xi.at(&[1.0]).unwrap().1[0], 1f64.sin(), 1e-14);
    }

    #[test]
    fn eq1_examples() {
        let field = VectorField::parse(&["x1"], false, line()).unwrap();
        let flow = DiffeoCurve::flow_of(field, (-1.0, 1.0), 1e-12).unwrap();
        let dx = section(FunctorSpec::COTANGENT, "1");
        let r = verify_eq1(&flow, &dx, 0.0, &[vec![1.0]], &opts(Identity::Eq1));
        assert!(r.pass, "{r:?}");
        for v in &r.records[0].values {
            close(v.components[0], 1.0, 1e-12);
        }
        let r = verify_eq1(&flow, &dx, 0.3, &[vec![1.0], vec![-0.5]], &opts(Identity::Eq1));
        assert!(r.pass);

        let r = verify_eq1(&curve("x1 + t"), &dx, 0.2, &[vec![0.4]], &opts(Identity::Eq1));
        assert!(r.pass);
        assert!(r.records[0].values.iter().all(|v| v.components[0] == 0.0));

        let rho = section(FunctorSpec::density(1.0), "1");
        let r = verify_eq1(&curve("exp(t)*x1"), &rho, 0.0, &[vec![0.9]], &opts(Identity::Eq1));
        for v in &r.records[0].values {
            close(v.components[0], 1.0, 1e-13);
        }
    }

    #[test]
    fn eq2_examples() {
        let dx = section(FunctorSpec::COTANGENT, "1");
        let r = verify_eq2(&curve("exp(t)*x1"), &dx, 0.0, &[vec![1.0]], &opts(Identity::Eq2));
        assert!(r.pass, "{r:?}");
        for v in &r.records[0].values {
            close(v.components[0], -1.0, 1e-12);
        }
        let r = verify_eq2(&curve("x1 + t"), &dx, 0.1, &[vec![0.2]], &opts(Identity::Eq2));
        assert!(r.pass);

        let plane = Domain::cube(2, 2.0);
        let c = DiffeoCurve::parse(
            &["x1 + 0.2*t*x2^2 + 0.1*sin(t)*x1*x2", "x2 + 0.3*t^2*x1 - 0.1*t*x2^3"],
            plane.clone(),
            (-1.0, 1.0),
        )
        .unwrap();
        let s = Section::parse(FunctorSpec::ENDOMORPHISM, plane.clone(), &["x1*x2", "1 + x2", "x1^2", "cos(x2)"]).unwrap();
        let pts = sample_points(&plane, 6, 7);
        let mut o = opts(Identity::Eq2);
        o.fd_oracle = true;
        let r = verify_eq2(&c, &s, 0.35, &pts, &o);
        assert!(r.pass, "{:?}", r.max_abs_err);
        assert_eq!(r.coverage, 1.0);
        let r = verify_eq1(&c, &s, 0.35, &pts, &opts(Identity::Eq1));
        assert!(r.pass && r.max_abs_err < 1e-10, "{}", r.max_abs_err);
    }

    #[test]
    fn lemma6_examples() {
        let f = section(FunctorSpec::TRIVIAL, "x1^2");
        let r = verify_lemma6(&curve("x1 + t^2*x1^2"), &f, &[vec![1.0]], &opts(Identity::Lemma6));
        assert!(r.pass);
        assert_eq!(r.k, Some(2));
        close(r.records[0].values[0].components[0], 4.0, 1e-13);
        close(r.records[0].values[1].components[0], 4.0, 1e-13);

        let dx = section(FunctorSpec::COTANGENT, "1");
        let half_pi = std::f64::consts::FRAC_PI_2;
        let r = verify_lemma6(&curve("x1 + t^3*sin(x1)"), &dx, &[vec![half_pi]], &opts(Identity::Lemma6));
        assert!(r.pass);
        assert_eq!(r.k, Some(3));
        close(r.records[0].values[0].components[0], 0.0, 1e-13);

        let r = verify_lemma6(&curve("x1 + 0.1 + t"), &dx, &[vec![1.0]], &opts(Identity::Lemma6));
        assert!(!r.pass);
        assert!(r.error.is_some());
    }

    #[test]
    fn cor2_examples() {
        let s = section(FunctorSpec::COTANGENT, "x1 + cos(x1)");
        let pts = vec![vec![0.3], vec![-0.8], vec![1.1]];
        let (e3, e4) = verify_cor2(&curve("x1 + (t - 0.4)^2*x1^2"), &s, 0.4, &pts, &opts(Identity::Eq3));
        assert!(e3.pass && e4.pass, "{e3:?}");
        assert_eq!(e3.k, Some(2));

        // φ_t = ψ ∘ (x + t² g) with ψ = x + 0.3 sin x, g = x²
        let c = curve("(x1 + t^2*x1^2) + 0.3*sin(x1 + t^2*x1^2)");
        let (e3, e4) = verify_cor2(&c, &s, 0.0, &pts, &opts(Identity::Eq3).with_tol(Tolerances { abs: 1e-7, rel: 0.0 }));
        assert!(e3.pass && e4.pass, "{} {}", e3.max_abs_err, e4.max_abs_err);
        let along = VectorFieldAlongMap { curve: &c, t0: 0.0, k: 2 };
        let x = along.pulled_back().value_at(0.0, &[0.5]).unwrap().components[0];
        close(x, 0.25, 1e-14);

        let mut o = opts(Identity::Eq3);
        o.k = Some(2);
        let (e3, _) = verify_cor2(&curve("x1 + t*x1"), &s, 0.0, &pts, &o);
        assert!(matches!(e3.error.as_deref(), Some(m) if m.contains("order")));
    }

    #[test]
    fn inverse_curve_examples() {
        let pts = vec![vec![0.5], vec![1.2]];
        let r = inverse_curve_derivative(&curve("exp(t)*x1"), 0.0, &pts, &opts(Identity::InverseCurve));
        assert!(r.pass);
        close(r.records[0].values[0].components[0], -0.5, 1e-14);
        let r = inverse_curve_derivative(&curve("x1 + t^2*x1^2"), 0.0, &pts, &opts(Identity::InverseCurve));
        assert!(r.pass);
        assert_eq!(r.k, Some(2));
        close(r.records[1].values[0].components[0], -2.0 * 1.44, 1e-12);
        let r = inverse_curve_derivative(&curve("x1"), 0.0, &pts, &opts(Identity::InverseCurve));
        assert!(r.error.is_some());
        let r = inverse_curve_derivative(&curve("x1 + sin(t)*x1^2/4"), 0.6, &pts, &opts(Identity::InverseCurve));
        assert!(r.pass, "{}", r.max_abs_err);
    }

    #[test]
    fn bracket_examples() {
        let x = VectorField::parse(&["x1"], false, line()).unwrap();
        let y = VectorField::parse(&["1"], false, line()).unwrap();
        let s = section(FunctorSpec::TRIVIAL, "x1");
        let r = verify_bracket(&x, &y, &s, &[vec![1.0]], &opts(Identity::Bracket));
        assert!(r.pass);
        close(r.records[0].values[0].components[0], -1.0, 1e-15);
        close(r.records[0].values[1].components[0], -1.0, 1e-15);
        let r = verify_bracket(&x, &x, &s, &[vec![1.0]], &opts(Identity::Bracket));
        assert!(r.records[0].values.iter().all(|v| v.components[0] == 0.0));

        let plane = Domain::cube(2, 2.0);
        let x = VectorField::parse(&["x2", "0"], false, plane.clone()).unwrap();
        let y = VectorField::parse(&["0", "x1"], false, plane.clone()).unwrap();
        let dx1 = Section::parse(FunctorSpec::COTANGENT, plane.clone(), &["1", "0"]).unwrap();
        let r = verify_bracket(&x, &y, &dx1, &sample_points(&plane, 5, 1), &opts(Identity::Bracket));
        assert!(r.pass);
    }

    #[test]
    fn lemma2_examples() {
        let c = SmoothMap::parse(&["t^2", "0"], 0, true, None).unwrap();
        let psi = SmoothMap::parse(&["x1 + x2", "x2 + x1^2"], 2, false, None).unwrap();
        let r = verify_lemma2_invariance(&c, &psi, &scalar_battery(2), &opts(Identity::Lemma2));
        assert!(r.pass, "{r:?}");
        assert_eq!(r.k, Some(2));
        assert_eq!(r.records[0].values[0].components, vec![2.0, 0.0]);

        let id = SmoothMap::parse(&["x1", "x2"], 2, false, None).unwrap();
        let c = SmoothMap::parse(&["t^3*sin(1)", "t^3"], 0, true, None).unwrap();
        let r = verify_lemma2_invariance(&c, &id, &[], &opts(Identity::Lemma2));
        assert!(r.pass);
        let a = SmoothMap::parse(&["2*x1 - x2", "0.5*x1 + 3*x2"], 2, false, None).unwrap();
        let r = verify_lemma2_invariance(&c, &a, &[], &opts(Identity::Lemma2));
        assert!(r.pass);
        let s1 = 1f64.sin();
        let v = &r.records[0].values[1].components;
        close(v[0], 6.0 * (2.0 * s1 - 1.0), 1e-13);

        let mut o = opts(Identity::Lemma2);
        o.k = Some(3);
        let c = SmoothMap::parse(&["t + t^3", "0"], 0, true, None).unwrap();
        assert!(verify_lemma2_invariance(&c, &psi, &[], &o).error.is_some());
    }

    #[test]
    fn mutation_breaks_identity() {
        let s = section(FunctorSpec::COTANGENT, "x1^2 + 1");
        let mut o = opts(Identity::Eq1);
        o.rhs_sign = -1.0;
        let r = verify_eq1(&curve("x1 + t*sin(x1)/3"), &s, 0.2, &[vec![0.7]], &o);
        assert!(!r.pass);
        assert!(r.max_abs_err > 1e3 * o.tol.abs);
    }

    #[test]
    fn coverage_rule() {
        // φ_t(x) = x + t leaves [-3, 3] near the right edge
        let s = section(FunctorSpec::TRIVIAL, "x1");
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![2.95 - 0.5 * i as f64]).collect();
        let r = verify_eq1(&curve("x1 + t"), &s, 0.9, &pts, &opts(Identity::Eq1));
        assert_eq!(r.coverage, 0.8);
        assert!(r.valid && r.pass);
        let r = verify_eq1(&curve("x1 + t"), &s, 0.9, &pts[..3], &opts(Identity::Eq1));
        assert!(!r.valid && !r.pass);
    }

    #[test]
    fn error_measure() {
        assert_eq!(errors(&[0.0], &[0.0]), (0.0, 0.0));
        assert_eq!(errors(&[1.0, 2.0], &[1.0, 1.0]), (1.0, 0.5));
    }
}
