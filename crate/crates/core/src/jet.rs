//! Truncated multivariate Taylor series ("jets").
//!
//! A [`Jet`] holds the Taylor coefficients of a smooth function of the `m`
//! space variables `x1..xm` and the time variable `t` around a base point,
//! truncated at total degree `K`. Variable index `m` is time.
//!
//! Coefficients are stored densely in graded-lexicographic order. Because the
//! order is graded, the monomials of an order-`K'` context with `K' < K` form a
//! prefix of the order-`K` list; truncation is a prefix copy and the
//! derivative of an order-`K` jet is an exact order-`K-1` jet.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::scalar::{Elementary, Scalar};

struct Tables {
    space_dim: usize,
    max_order: usize,
    nvars: usize,
    monomials: Vec<Vec<u8>>,
    degree: Vec<usize>,
    /// Dense lookup from the base-(K+1) encoding of a multi-index to its rank.
    index: Vec<u32>,
    /// `(i, j, k)`: coefficient `i` times coefficient `j` lands on `k`.
    mul: Vec<(u32, u32, u32)>,
    /// `α!` per monomial.
    factorial: Vec<f64>,
    /// For every non-constant monomial `α = parent + e_var`, `(parent, var)`.
    parent: Vec<(u32, u8)>,
}

impl Tables {
    fn build(space_dim: usize, max_order: usize) -> Tables {
        let nvars = space_dim + 1;
        let mut monomials = Vec::new();
        let mut degree = Vec::new();
        for d in 0..=max_order {
            let mut current = vec![0u8; nvars];
            enumerate_degree(d, 0, &mut current, &mut monomials);
            degree.resize(monomials.len(), d);
        }
        let base = max_order + 1;
        let mut index = vec![u32::MAX; base.pow(nvars as u32)];
        for (rank, alpha) in monomials.iter().enumerate() {
            index[encode(alpha, base)] = rank as u32;
        }
        let n = monomials.len();
        let mut mul = Vec::new();
        let mut buf = vec![0u8; nvars];
        for i in 0..n {
            for j in 0..n {
                if degree[i] + degree[j] > max_order {
                    continue;
                }
                for v in 0..nvars {
                    buf[v] = monomials[i][v] + monomials[j][v];
                }
                mul.push((i as u32, j as u32, index[encode(&buf, base)]));
            }
        }
        let factorial = monomials
            .iter()
            .map(|a| a.iter().map(|&e| (1..=e as u64).product::<u64>() as f64).product())
            .collect();
        let mut parent = vec![(0u32, 0u8); n];
        for (rank, alpha) in monomials.iter().enumerate().skip(1) {
            let var = alpha.iter().position(|&e| e > 0).unwrap();
            let mut p = alpha.clone();
            p[var] -= 1;
            parent[rank] = (index[encode(&p, base)], var as u8);
        }
        Tables {
            space_dim,
            max_order,
            nvars,
            monomials,
            degree,
            index,
            mul,
            factorial,
            parent,
        }
    }
}

/// All exponent vectors of total degree `remaining` over variables `pos..`,
/// lexicographically descending in the first variable.
fn enumerate_degree(remaining: usize, pos: usize, current: &mut [u8], out: &mut Vec<Vec<u8>>) {
    if pos == current.len() - 1 {
        current[pos] = remaining as u8;
        out.push(current.to_vec());
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e as u8;
        enumerate_degree(remaining - e, pos + 1, current, out);
    }
    current[pos] = 0;
}

fn encode(alpha: &[u8], base: usize) -> usize {
    alpha.iter().rev().fold(0, |acc, &e| acc * base + e as usize)
}

fn cache() -> &'static Mutex<HashMap<(usize, usize), Arc<Tables>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Tables>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub const MAX_SPACE_DIM: usize = 4;
pub const MAX_ORDER: usize = 10;

/// Shape shared by all jets combined in one operation: `m` space variables,
/// one time variable and truncation order `K`.
#[derive(Clone)]
pub struct JetContext {
    tables: Arc<Tables>,
}

impl JetContext {
    pub fn new(space_dim: usize, max_order: usize) -> Result<JetContext> {
        if space_dim == 0 {
            return Err(Error::InvalidDomain("jet context needs at least one space variable".into()));
        }
        if space_dim > MAX_SPACE_DIM {
            return Err(Error::Dimension {
                expected: MAX_SPACE_DIM,
                got: space_dim,
            });
        }
        if max_order > MAX_ORDER {
            return Err(Error::OrderExceeded {
                requested: max_order,
                max: MAX_ORDER,
            });
        }
        let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
        let tables = map
            .entry((space_dim, max_order))
            .or_insert_with(|| Arc::new(Tables::build(space_dim, max_order)))
            .clone();
        Ok(JetContext { tables })
    }

    pub fn space_dim(&self) -> usize {
        self.tables.space_dim
    }

    pub fn max_order(&self) -> usize {
        self.tables.max_order
    }

    /// `m + 1`: the space variables plus time.
    pub fn nvars(&self) -> usize {
        self.tables.nvars
    }

    /// Index of the time variable.
    pub fn time_var(&self) -> usize {
        self.tables.space_dim
    }

    /// Number of multi-indices of total degree at most `K` in `m + 1` variables.
    pub fn len(&self) -> usize {
        self.tables.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn monomials(&self) -> impl Iterator<Item = &[u8]> {
        self.tables.monomials.iter().map(|m| m.as_slice())
    }

    /// The same variables at another truncation order.
    pub fn with_order(&self, order: usize) -> JetContext {
        if order == self.max_order() {
            return self.clone();
        }
        JetContext::new(self.space_dim(), order).expect("valid context")
    }

    /// Rank of a multi-index, or `None` if its degree exceeds `K`.
    pub fn rank(&self, alpha: &[usize]) -> Result<Option<usize>> {
        if alpha.len() != self.nvars() {
            return Err(Error::MultiIndexLength {
                got: alpha.len(),
                expected: self.nvars(),
            });
        }
        let deg: usize = alpha.iter().sum();
        if deg > self.max_order() {
            return Ok(None);
        }
        let base = self.max_order() + 1;
        let code = alpha.iter().rev().fold(0, |acc, &e| acc * base + e);
        Ok(Some(self.tables.index[code] as usize))
    }

    /// Multi-index `k·e_t`.
    pub fn time_index(&self, k: usize) -> Vec<usize> {
        self.unit_index(self.time_var(), k)
    }

    /// Multi-index `k·e_var`.
    pub fn unit_index(&self, var: usize, k: usize) -> Vec<usize> {
        let mut a = vec![0; self.nvars()];
        a[var] = k;
        a
    }

    fn same(&self, other: &JetContext) -> bool {
        Arc::ptr_eq(&self.tables, &other.tables)
            || (self.space_dim() == other.space_dim() && self.max_order() == other.max_order())
    }
}

impl PartialEq for JetContext {
    fn eq(&self, other: &Self) -> bool {
        self.same(other)
    }
}

impl fmt::Debug for JetContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JetContext(m={}, K={})", self.space_dim(), self.max_order())
    }
}

/// Truncated Taylor expansion of a scalar function of `(x1..xm, t)`.
#[derive(Clone, PartialEq)]
pub struct Jet {
    ctx: JetContext,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(c: f64, ctx: &JetContext) -> Jet {
        let mut coeffs = vec![0.0; ctx.len()];
        coeffs[0] = c;
        Jet {
            ctx: ctx.clone(),
            coeffs,
        }
    }

    pub fn zero(ctx: &JetContext) -> Jet {
        Jet::constant(0.0, ctx)
    }

    /// The jet of the coordinate function `var` at base value `a`.
    /// Index `m` is time.
    pub fn variable(var: usize, a: f64, ctx: &JetContext) -> Result<Jet> {
        if var >= ctx.nvars() {
            return Err(Error::VariableOutOfRange {
                index: var,
                nvars: ctx.nvars(),
            });
        }
        let mut jet = Jet::constant(a, ctx);
        if ctx.max_order() >= 1 {
            let r = ctx.rank(&ctx.unit_index(var, 1))?.unwrap();
            jet.coeffs[r] = 1.0;
        }
        Ok(jet)
    }

    /// Builds a jet from raw coefficients in graded-lex order.
    pub fn from_coefficients(ctx: &JetContext, coeffs: Vec<f64>) -> Result<Jet> {
        if coeffs.len() != ctx.len() {
            return Err(Error::Dimension {
                expected: ctx.len(),
                got: coeffs.len(),
            });
        }
        Ok(Jet {
            ctx: ctx.clone(),
            coeffs,
        })
    }

    pub fn context(&self) -> &JetContext {
        &self.ctx
    }

    pub fn order(&self) -> usize {
        self.ctx.max_order()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of `α`; zero if `|α| > K`.
    pub fn coefficient(&self, alpha: &[usize]) -> Result<f64> {
        Ok(self.ctx.rank(alpha)?.map_or(0.0, |r| self.coeffs[r]))
    }

    /// The mixed partial `∂^α` at the base point, i.e. `α!·coefficient(α)`.
    pub fn extract_derivative(&self, alpha: &[usize]) -> Result<f64> {
        let deg: usize = alpha.iter().sum();
        match self.ctx.rank(alpha)? {
            Some(r) => Ok(self.ctx.tables.factorial[r] * self.coeffs[r]),
            None => Err(Error::OrderExceeded {
                requested: deg,
                max: self.order(),
            }),
        }
    }

    /// `∂_t^k` at the base point.
    pub fn time_derivative(&self, k: usize) -> Result<f64> {
        self.extract_derivative(&self.ctx.time_index(k))
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn check(&self, other: &Jet) -> Result<()> {
        if self.ctx.same(&other.ctx) {
            Ok(())
        } else {
            Err(Error::ContextMismatch(
                self.ctx.space_dim(),
                self.order(),
                other.ctx.space_dim(),
                other.order(),
            ))
        }
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Jet {
            ctx: self.ctx.clone(),
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Jet {
            ctx: self.ctx.clone(),
            coeffs,
        })
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.ctx.tables.mul {
            coeffs[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Ok(Jet {
            ctx: self.ctx.clone(),
            coeffs,
        })
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        self.try_mul(&other.apply(Elementary::Recip)?)
    }

    pub fn add_const(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// `f ∘ self`, by Horner evaluation of the univariate Taylor series of `f`
    /// at `value()` in the nilpotent part `self - value()`.
    pub fn apply(&self, f: Elementary) -> Result<Jet> {
        let a0 = self.value();
        if f == Elementary::Abs {
            if a0 == 0.0 {
                return Err(Error::Domain { func: "abs", value: a0 });
            }
            return Ok(self.scale(a0.signum()));
        }
        let series = f.taylor_coefficients(a0, self.order())?;
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = Jet::constant(series[self.order()], &self.ctx);
        for c in series[..self.order()].iter().rev() {
            acc = acc.try_mul(&h)?;
            acc.coeffs[0] += c;
        }
        Ok(acc)
    }

    /// `∂/∂var` as an exact jet of order `K - 1`.
    pub fn partial(&self, var: usize) -> Result<Jet> {
        if var >= self.ctx.nvars() {
            return Err(Error::VariableOutOfRange {
                index: var,
                nvars: self.ctx.nvars(),
            });
        }
        if self.order() == 0 {
            return Err(Error::OrderExceeded {
                requested: 1,
                max: 0,
            });
        }
        let lower = self.ctx.with_order(self.order() - 1);
        let mut coeffs = vec![0.0; lower.len()];
        let mut alpha = vec![0usize; self.ctx.nvars()];
        for (r, mono) in lower.monomials().enumerate() {
            for (a, &e) in alpha.iter_mut().zip(mono) {
                *a = e as usize;
            }
            alpha[var] += 1;
            let src = self.ctx.rank(&alpha)?.expect("degree within K");
            coeffs[r] = alpha[var] as f64 * self.coeffs[src];
        }
        Ok(Jet { ctx: lower, coeffs })
    }

    /// Antiderivative in `var` vanishing on the hyperplane through the base
    /// point; the top-degree part is truncated.
    pub fn integrate(&self, var: usize) -> Result<Jet> {
        if var >= self.ctx.nvars() {
            return Err(Error::VariableOutOfRange {
                index: var,
                nvars: self.ctx.nvars(),
            });
        }
        let mut coeffs = vec![0.0; self.coeffs.len()];
        let mut alpha = vec![0usize; self.ctx.nvars()];
        for (r, mono) in self.ctx.tables.monomials.iter().enumerate() {
            if self.ctx.tables.degree[r] == self.order() {
                break;
            }
            for (a, &e) in alpha.iter_mut().zip(mono) {
                *a = e as usize;
            }
            alpha[var] += 1;
            let dst = self.ctx.rank(&alpha)?.expect("degree within K");
            coeffs[dst] = self.coeffs[r] / alpha[var] as f64;
        }
        Ok(Jet {
            ctx: self.ctx.clone(),
            coeffs,
        })
    }

    /// Drops every coefficient above total degree `order`.
    pub fn truncate(&self, order: usize) -> Result<Jet> {
        if order > self.order() {
            return Err(Error::OrderExceeded {
                requested: order,
                max: self.order(),
            });
        }
        let ctx = self.ctx.with_order(order);
        let coeffs = self.coeffs[..ctx.len()].to_vec();
        Ok(Jet { ctx, coeffs })
    }

    /// Substitutes `args` for the variables of `self`: evaluates
    /// `Σ_α c_α Π (args_i - base_i)^α_i` in the context of `args`, where `base`
    /// is the point `self` was expanded around.
    pub fn compose(&self, base: &[f64], args: &[Jet]) -> Result<Jet> {
        let nvars = self.ctx.nvars();
        if args.len() != nvars || base.len() != nvars {
            return Err(Error::Dimension {
                expected: nvars,
                got: args.len().min(base.len()),
            });
        }
        let target = args[0].ctx.clone();
        for a in &args[1..] {
            args[0].check(a)?;
        }
        let diffs: Vec<Jet> = args.iter().zip(base).map(|(a, b)| a.add_const(-b)).collect();
        let nilpotent = diffs.iter().all(|d| d.value() == 0.0);
        let tables = &self.ctx.tables;
        let mut powers: Vec<Option<Jet>> = vec![None; tables.monomials.len()];
        powers[0] = Some(Jet::constant(1.0, &target));
        let mut out = Jet::constant(self.coeffs[0], &target);
        for r in 1..tables.monomials.len() {
            if nilpotent && tables.degree[r] > target.max_order() {
                break;
            }
            let (p, var) = tables.parent[r];
            let prod = powers[p as usize]
                .as_ref()
                .expect("parent precedes child in graded order")
                .try_mul(&diffs[var as usize])?;
            let c = self.coeffs[r];
            if c != 0.0 {
                for (o, v) in out.coeffs.iter_mut().zip(&prod.coeffs) {
                    *o += c * v;
                }
            }
            powers[r] = Some(prod);
        }
        Ok(out)
    }
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        self.coeffs[0]
    }

    fn lift(&self, c: f64) -> Self {
        Jet::constant(c, &self.ctx)
    }

    fn scale(&self, c: f64) -> Self {
        Jet {
            ctx: self.ctx.clone(),
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
        }
    }

    fn checked_div(&self, rhs: &Self) -> Result<Self> {
        self.try_div(rhs)
    }

    fn apply(&self, f: Elementary) -> Result<Self> {
        Jet::apply(self, f)
    }

    fn sup_norm(&self) -> f64 {
        self.max_abs()
    }
}

// Operator impls panic on context mismatch; use the `try_*` methods where the
// contexts are not known to agree.
impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        self.try_add(&rhs).expect("jet context mismatch")
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self.try_sub(&rhs).expect("jet context mismatch")
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.try_mul(&rhs).expect("jet context mismatch")
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.try_add(rhs).expect("jet context mismatch")
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.try_sub(rhs).expect("jet context mismatch")
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.try_mul(rhs).expect("jet context mismatch")
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.ctx.space_dim();
        let mut first = true;
        for (mono, c) in self.ctx.monomials().zip(&self.coeffs) {
            if *c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (v, &e) in mono.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if v == m {
                    write!(f, "·t")?;
                } else {
                    write!(f, "·x{}", v + 1)?;
                }
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Constant-in-context helper used by pipelines that assemble jets of maps.
pub fn variables(ctx: &JetContext, base: &[f64], t0: f64) -> Result<Vec<Jet>> {
    let m = ctx.space_dim();
    if base.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: base.len(),
        });
    }
    let mut vars = Vec::with_capacity(m + 1);
    for (i, &a) in base.iter().enumerate() {
        vars.push(Jet::variable(i, a, ctx)?);
    }
    vars.push(Jet::variable(m, t0, ctx)?);
    Ok(vars)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(m: usize, k: usize) -> JetContext {
        JetContext::new(m, k).unwrap()
    }

    fn coeffs_1d(j: &Jet) -> Vec<f64> {
        // coefficients of x^0..x^K for m = 1, t-free jets
        (0..=j.order()).map(|n| j.coefficient(&[n, 0]).unwrap()).collect()
    }

    #[test]
    fn monomial_count() {
        // C(m + 1 + K, K)
        assert_eq!(ctx(1, 2).len(), 6);
        assert_eq!(ctx(2, 3).len(), 20);
        assert_eq!(ctx(3, 4).len(), 70);
    }

    #[test]
    fn lower_order_is_prefix() {
        let hi = ctx(2, 4);
        let lo = ctx(2, 2);
        for (a, b) in lo.monomials().zip(hi.monomials()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn const_and_var() {
        let c = ctx(1, 2);
        let k = Jet::constant(3.0, &c);
        assert_eq!(k.value(), 3.0);
        assert!(k.coefficients()[1..].iter().all(|&v| v == 0.0));
        let x = Jet::variable(0, 0.5, &c).unwrap();
        assert_eq!(coeffs_1d(&x), vec![0.5, 1.0, 0.0]);
        let t = Jet::variable(1, 0.0, &ctx(1, 1)).unwrap();
        assert_eq!(t.coefficient(&[0, 1]).unwrap(), 1.0);
        assert!(matches!(
            Jet::variable(2, 0.0, &c),
            Err(Error::VariableOutOfRange { .. })
        ));
    }

    #[test]
    fn binomial_square_and_truncation() {
        let c2 = ctx(1, 2);
        let one_x = Jet::variable(0, 0.0, &c2).unwrap().add_const(1.0);
        assert_eq!(coeffs_1d(&(&one_x * &one_x)), vec![1.0, 2.0, 1.0]);
        let c1 = ctx(1, 1);
        let one_x = Jet::variable(0, 0.0, &c1).unwrap().add_const(1.0);
        assert_eq!(coeffs_1d(&(&one_x * &one_x)), vec![1.0, 2.0]);
    }

    #[test]
    fn geometric_series() {
        // oracle: 1/(1-x) = Σ x^n
        let c = ctx(1, 3);
        let x = Jet::variable(0, 0.0, &c).unwrap();
        let den = Jet::constant(1.0, &c) - x;
        let q = Jet::constant(1.0, &c).try_div(&den).unwrap();
        assert_eq!(coeffs_1d(&q), vec![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn elementary_series() {
        let c = ctx(1, 3);
        let x = Jet::variable(0, 0.0, &c).unwrap();
        let e = x.apply(Elementary::Exp).unwrap();
        let expect = [1.0, 1.0, 0.5, 1.0 / 6.0];
        for (a, b) in coeffs_1d(&e).iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let t = Jet::variable(1, 0.0, &c).unwrap();
        let s = t.apply(Elementary::Sin).unwrap();
        assert_eq!(s.coefficient(&[0, 1]).unwrap(), 1.0);
        assert_eq!(s.coefficient(&[0, 2]).unwrap(), 0.0);
        assert!((s.coefficient(&[0, 3]).unwrap() + 1.0 / 6.0).abs() < 1e-15);

        // binomial series oracle: (1+x)^(1/2) = 1 + x/2 - x²/8
        let c2 = ctx(1, 2);
        let u = Jet::variable(0, 0.0, &c2).unwrap().add_const(1.0);
        let r = u.apply(Elementary::Pow(0.5)).unwrap();
        let expect = [1.0, 0.5, -0.125];
        for (a, b) in coeffs_1d(&r).iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn elementary_domain_errors() {
        let c = ctx(1, 2);
        let z = Jet::variable(0, 0.0, &c).unwrap();
        assert!(matches!(z.apply(Elementary::Log), Err(Error::Domain { .. })));
        assert!(matches!(z.apply(Elementary::Abs), Err(Error::Domain { .. })));
        assert!(matches!(z.apply(Elementary::Sqrt), Err(Error::Domain { .. })));
        assert!(matches!(
            Jet::constant(1.0, &c).try_div(&z),
            Err(Error::DivisionByZero)
        ));
        let neg = z.add_const(-2.0);
        assert_eq!(neg.apply(Elementary::Abs).unwrap(), neg.scale(-1.0));
    }

    #[test]
    fn extract_mixed_derivatives() {
        let c = ctx(1, 3);
        let x = Jet::variable(0, 0.0, &c).unwrap();
        assert_eq!((&x * &x).extract_derivative(&[2, 0]).unwrap(), 2.0);

        let x = Jet::variable(0, 3.0, &c).unwrap();
        let t = Jet::variable(1, 0.0, &c).unwrap();
        let f = t.apply(Elementary::Exp).unwrap() * x;
        assert!((f.time_derivative(1).unwrap() - 3.0).abs() < 1e-15);

        // oracle: ∂_t³ sin(tx) = -x³ cos(tx) → -8 at x=2, t=0
        let x = Jet::variable(0, 2.0, &c).unwrap();
        let t = Jet::variable(1, 0.0, &c).unwrap();
        let f = (t * x).apply(Elementary::Sin).unwrap();
        assert!((f.time_derivative(3).unwrap() + 8.0).abs() < 1e-13);
        assert!(matches!(
            f.extract_derivative(&[2, 2]),
            Err(Error::OrderExceeded { .. })
        ));
    }

    #[test]
    fn mismatch_is_an_error() {
        let a = Jet::constant(1.0, &ctx(1, 2));
        let b = Jet::constant(1.0, &ctx(1, 3));
        assert!(matches!(a.try_add(&b), Err(Error::ContextMismatch(..))));
        assert!(matches!(a.try_mul(&b), Err(Error::ContextMismatch(..))));
    }

    #[test]
    fn partial_and_integrate() {
        let c = ctx(2, 3);
        let x = Jet::variable(0, 1.0, &c).unwrap();
        let y = Jet::variable(1, 2.0, &c).unwrap();
        // f = x²y → ∂_x f = 2xy = 4 at (1,2), ∂_x∂_y f = 2x = 2
        let f = &(&x * &x) * &y;
        let fx = f.partial(0).unwrap();
        assert_eq!(fx.order(), 2);
        assert!((fx.value() - 4.0).abs() < 1e-15);
        assert!((fx.extract_derivative(&[0, 1, 0]).unwrap() - 2.0).abs() < 1e-15);
        let g = f.integrate(0).unwrap().partial(0).unwrap();
        assert_eq!(g.truncate(2).unwrap(), f.truncate(2).unwrap());
    }

    #[test]
    fn compose_matches_direct_evaluation() {
        let c = ctx(1, 4);
        let x = Jet::variable(0, 0.3, &c).unwrap();
        let t = Jet::variable(1, 0.1, &c).unwrap();
        // outer: sin(u) expanded at u=0.7, v=0.1 (second slot unused)
        let u = Jet::variable(0, 0.7, &c).unwrap();
        let outer = u.apply(Elementary::Sin).unwrap();
        // inner u(x,t) = x + t·x + 0.37 has value 0.7 at the base point
        let inner = (&x + &(&t * &x)).add_const(0.4 - 0.03);
        let composed = outer.compose(&[0.7, 0.1], &[inner.clone(), t]).unwrap();
        let direct = inner.apply(Elementary::Sin).unwrap();
        for (a, b) in composed.coefficients().iter().zip(direct.coefficients()) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }
}
