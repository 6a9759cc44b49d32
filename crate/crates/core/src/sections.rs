//! Sections of natural bundles, their pullbacks and push-forwards along curves
//! of diffeomorphisms, and Lie derivatives.
//!
//! Everything that behaves like a section implements [`JetSource`]: given a
//! base point `(t0, x0)` it returns the jets of its fiber components in the
//! variables `(x, t)`. Derived sections (pullbacks, Lie derivatives, adapted
//! vector fields) are thin wrappers that request one extra order from their
//! inputs, so arbitrary nesting yields exact derivatives of the result.

use crate::bundles::{apply_induced, apply_pullback, FiberValue, FunctorSpec};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{Jet, JetContext};
use crate::maps::{eval_jets, jacobian_jets, Curve, DiffeoCurve, Domain, InverseCurve};
use crate::scalar::Scalar;

/// A smooth section, or anything that can be expanded like one.
pub trait JetSource: Sync {
    fn dim(&self) -> usize;

    fn spec(&self) -> FunctorSpec;

    /// Jets of the fiber components at `(t0, x0)` in context `(dim, order)`.
    fn jets(&self, t0: f64, x0: &[f64], order: usize) -> Result<Vec<Jet>>;

    fn value_at(&self, t0: f64, x0: &[f64]) -> Result<FiberValue> {
        let comps = self.jets(t0, x0, 0)?.iter().map(|j| j.value()).collect();
        FiberValue::new(self.spec(), self.dim(), comps)
    }
}

/// A closed-form section `s ∈ Γ(F(M))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub spec: FunctorSpec,
    pub domain: Domain,
    pub components: Vec<Expr>,
}

impl Section {
    pub fn new(spec: FunctorSpec, domain: Domain, components: Vec<Expr>) -> Result<Section> {
        let m = domain.dim();
        if components.len() != spec.fiber_dim(m) {
            return Err(Error::Dimension {
                expected: spec.fiber_dim(m),
                got: components.len(),
            });
        }
        for c in &components {
            if c.uses_time() {
                return Err(Error::TimeNotAllowed { offset: 0 });
            }
            if c.space_arity() > m {
                return Err(Error::Dimension {
                    expected: m,
                    got: c.space_arity(),
                });
            }
        }
        Ok(Section {
            spec,
            domain,
            components,
        })
    }

    pub fn parse<S: AsRef<str>>(spec: FunctorSpec, domain: Domain, components: &[S]) -> Result<Section> {
        let m = domain.dim();
        let components = components
            .iter()
            .map(|c| Expr::parse(c.as_ref(), m, false))
            .collect::<Result<Vec<_>>>()?;
        Section::new(spec, domain, components)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<FiberValue> {
        self.value_at(0.0, x)
    }
}

impl JetSource for Section {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn spec(&self) -> FunctorSpec {
        self.spec
    }

    fn jets(&self, t0: f64, x0: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.domain.check(x0)?;
        let ctx = JetContext::new(self.dim(), order)?;
        eval_jets(&self.components, &ctx, x0, t0)
    }
}

/// A (possibly time-dependent) vector field given by expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub components: Vec<Expr>,
    pub time_dependent: bool,
    pub domain: Domain,
}

impl VectorField {
    pub fn new(components: Vec<Expr>, time_dependent: bool, domain: Domain) -> Result<VectorField> {
        let m = domain.dim();
        if components.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: components.len(),
            });
        }
        for c in &components {
            if c.uses_time() && !time_dependent {
                return Err(Error::TimeNotAllowed { offset: 0 });
            }
        }
        Ok(VectorField {
            components,
            time_dependent,
            domain,
        })
    }

    pub fn parse<S: AsRef<str>>(components: &[S], time_dependent: bool, domain: Domain) -> Result<VectorField> {
        let m = domain.dim();
        let components = components
            .iter()
            .map(|c| Expr::parse(c.as_ref(), m, time_dependent))
            .collect::<Result<Vec<_>>>()?;
        VectorField::new(components, time_dependent, domain)
    }

    /// `X(t, x)` over any scalar type.
    pub fn eval<R: Scalar>(&self, t: &R, x: &[R]) -> Result<Vec<R>> {
        self.components.iter().map(|c| c.eval(x, Some(t))).collect()
    }
}

impl JetSource for VectorField {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn spec(&self) -> FunctorSpec {
        FunctorSpec::TANGENT
    }

    fn jets(&self, t0: f64, x0: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.domain.check(x0)?;
        let ctx = JetContext::new(self.dim(), order)?;
        eval_jets(&self.components, &ctx, x0, t0)
    }
}

/// Jets of `L_X T` from order-`K` jets of `X` and `T`; the result has order
/// `K - 1`. Uses the coordinate formula
///
/// ```text
/// (L_X T)^{i..}_{j..} = X^a ∂_a T^{i..}_{j..} − Σ_r ∂_a X^{i_r} T^{..a..}_{j..}
///                      + Σ_s ∂_{j_s} X^a T^{i..}_{..a..} + w (div X) T^{i..}_{j..}
/// ```
pub fn lie_derivative_jets(spec: FunctorSpec, field: &[Jet], section: &[Jet]) -> Result<Vec<Jet>> {
    let m = field.len();
    let n = spec.fiber_dim(m);
    if section.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: section.len(),
        });
    }
    let order = field[0].order();
    if order == 0 {
        return Err(Error::OrderExceeded { requested: 1, max: 0 });
    }
    let lower = order - 1;
    let x: Vec<Jet> = field.iter().map(|j| j.truncate(lower)).collect::<Result<_>>()?;
    let t: Vec<Jet> = section.iter().map(|j| j.truncate(lower)).collect::<Result<_>>()?;
    let dx = jacobian_jets(field, m)?; // dx[i][a] = ∂_a X^i
    let dt = jacobian_jets(section, m)?; // dt[c][a] = ∂_a T^c
    let div = (0..m).map(|i| dx[i][i].clone()).reduce(|s, v| s + v).unwrap();
    let mut out = Vec::with_capacity(n);
    for c in 0..n {
        let mut acc = Jet::zero(x[0].context());
        for a in 0..m {
            acc = acc + &x[a] * &dt[c][a];
        }
        for slot in 0..spec.rank() {
            let stride = spec.stride(m, slot);
            let idx = (c / stride) % m;
            let rest = c - idx * stride;
            for a in 0..m {
                if slot < spec.p as usize {
                    acc = acc - &dx[idx][a] * &t[rest + a * stride];
                } else {
                    acc = acc + &dx[a][idx] * &t[rest + a * stride];
                }
            }
        }
        if spec.w != 0.0 {
            acc = acc + (&div * &t[c]).scale(spec.w);
        }
        out.push(acc);
    }
    Ok(out)
}

/// `L_X s` as a section.
pub struct LieDerivative<'a> {
    pub field: &'a dyn JetSource,
    pub section: &'a dyn JetSource,
}

impl JetSource for LieDerivative<'_> {
    fn dim(&self) -> usize {
        self.section.dim()
    }

    fn spec(&self) -> FunctorSpec {
        self.section.spec()
    }

    fn jets(&self, t0: f64, x0: &[f64], order: usize) -> Result<Vec<Jet>> {
        let x = self.field.jets(t0, x0, order + 1)?;
        let s = self.section.jets(t0, x0, order + 1)?;
        lie_derivative_jets(self.section.spec(), &x, &s)
    }
}

/// The Lie bracket `[X, Y] = L_X Y` of two vector fields.
pub fn bracket<'a>(x: &'a dyn JetSource, y: &'a dyn JetSource) -> LieDerivative<'a> {
    LieDerivative { field: x, section: y }
}

/// `(t, x) ↦ (φ_t^* s)(x) = F(φ_t^{-1}) s(φ_t(x))`.
pub struct Pullback<'a> {
    pub curve: &'a dyn Curve,
    pub section: &'a dyn JetSource,
}

impl JetSource for Pullback<'_> {
    fn dim(&self) -> usize {
        self.section.dim()
    }

    fn spec(&self) -> FunctorSpec {
        self.section.spec()
    }

    fn jets(&self, t0: f64, x0: &[f64], order: usize) -> Result<Vec<Jet>> {
        let m = self.dim();
        let phi = self.curve.jets(t0, x0, order + 1)?;
        let jac = jacobian_jets(&phi, m)?;
        let mut args: Vec<Jet> = phi.iter().map(|j| j.truncate(order)).collect::<Result<_>>()?;
        let ctx = args[0].context().clone();
        args.push(Jet::variable(m, t0, &ctx)?);
        let mut base: Vec<f64> = phi.iter().map(|j| j.value()).collect();
        let s = self.section.jets(t0, &base, order)?;
        base.push(t0);
        let composed = s.iter().map(|j| j.compose(&base, &args)).collect::<Result<Vec<_>>>()?;
        apply_pullback(self.spec(), &jac, &composed)
    }
}

/// `(φ_t)_* s`, evaluated as `F(φ_t) ∘ s ∘ φ_t^{-1}` with the forward
/// Jacobian taken at the preimage.
pub struct Pushforward<'a> {
    pub curve: &'a dyn Curve,
    pub section: &'a dyn JetSource,
}

impl JetSource for Pushforward<'_> {
    fn dim(&self) -> usize {
        self.section.dim()
    }

    fn spec(&self) -> FunctorSpec {
        self.section.spec()
    }

    fn jets(&self, t0: f64, x0: &[f64], order: usize) -> Result<Vec<Jet>> {
        let m = self.dim();
        let inverse = InverseCurve { curve: self.curve };
        let psi = inverse.jets(t0, x0, order)?;
        let ctx = psi[0].context().clone();
        let x_star: Vec<f64> = psi.iter().map(|j| j.value()).collect();
        let phi = self.curve.jets(t0, &x_star, order + 1)?;
        let jac_at_star = jacobian_jets(&phi, m)?;
        let mut args = psi;
        args.push(Jet::variable(m, t0, &ctx)?);
        let mut base = x_star.clone();
        base.push(t0);
        let jac = jac_at_star
            .iter()
            .map(|row| row.iter().map(|j| j.compose(&base, &args)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let s = self.section.jets(t0, &x_star, order)?;
        let composed = s.iter().map(|j| j.compose(&base, &args)).collect::<Result<Vec<_>>>()?;
        apply_induced(self.spec(), &jac, &composed)
    }
}

/// `(φ_t^{-1})^* s`: the pullback along the inverse curve.
pub fn inverse_pullback<'a>(inverse: &'a InverseCurve<'a>, section: &'a dyn JetSource) -> Pullback<'a> {
    Pullback { curve: inverse, section }
}

/// A section scaled by a constant, e.g. `-L_X s`.
pub struct Scaled<'a> {
    pub factor: f64,
    pub inner: &'a dyn JetSource,
}

impl JetSource for Scaled<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn spec(&self) -> FunctorSpec {
        self.inner.spec()
    }

    fn jets(&self, t0: f64, x0: &[f64], order: usize) -> Result<Vec<Jet>> {
        Ok(self
            .inner
            .jets(t0, x0, order)?
            .into_iter()
            .map(|j| j.scale(self.factor))
            .collect())
    }
}

pub fn pullback_at(curve: &dyn Curve, t: f64, s: &dyn JetSource, x: &[f64]) -> Result<FiberValue> {
    Pullback { curve, section: s }.value_at(t, x)
}

pub fn pushforward_at(curve: &dyn Curve, t: f64, s: &dyn JetSource, x: &[f64]) -> Result<FiberValue> {
    Pushforward { curve, section: s }.value_at(t, x)
}

/// `(L_X s)(x)` from the coordinate formula, with `X` frozen at time `t`.
pub fn lie_derivative_analytic(field: &dyn JetSource, s: &dyn JetSource, t: f64, x: &[f64]) -> Result<FiberValue> {
    LieDerivative { field, section: s }.value_at(t, x)
}

/// Central differences with Richardson extrapolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdScheme {
    pub step: f64,
    pub halvings: usize,
}

impl Default for FdScheme {
    fn default() -> Self {
        FdScheme {
            step: 1e-2,
            halvings: 2,
        }
    }
}

/// Derivative at `t0` of a vector-valued function of one variable.
pub fn richardson_derivative<F>(f: F, t0: f64, scheme: FdScheme) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(scheme.halvings + 1);
    let mut h = scheme.step;
    for _ in 0..=scheme.halvings {
        let plus = f(t0 + h)?;
        let minus = f(t0 - h)?;
        table.push(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect());
        h *= 0.5;
    }
    // the central difference has an even error expansion: eliminate h², h⁴, ...
    let mut factor = 4.0;
    while table.len() > 1 {
        table = table
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(fine, coarse)| (factor * fine - coarse) / (factor - 1.0)).collect())
            .collect();
        factor *= 4.0;
    }
    Ok(table.pop().unwrap())
}

/// `L_X s` from its definition `d/dt|_0 (Fl^X_t)^* s`, differentiated
/// numerically. The independent check of [`lie_derivative_analytic`].
pub fn lie_derivative_flow(
    field: &VectorField,
    s: &dyn JetSource,
    x: &[f64],
    scheme: FdScheme,
    tol: f64,
) -> Result<FiberValue> {
    let window = 2.0 * scheme.step;
    let flow = DiffeoCurve::flow_of(field.clone(), (-window, window), tol)?;
    let d = richardson_derivative(|t| Ok(pullback_at(&flow, t, s, x)?.components), 0.0, scheme)?;
    FiberValue::new(s.spec(), s.dim(), d)
}
