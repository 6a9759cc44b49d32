//! First-order natural vector bundles: tensor densities of type `(p, q)` and
//! weight `w`.
//!
//! For a local diffeomorphism `f` with Jacobian `J` at `x`, the fiber map
//! `F(f)` acts on components `T^{i_1..i_p}_{j_1..j_q}` by
//!
//! ```text
//! |det J|^{-w} · J^{i_1}_{a_1} ··· J^{i_p}_{a_p} (J^{-1})^{b_1}_{j_1} ··· (J^{-1})^{b_q}_{j_q} T^{a..}_{b..}
//! ```
//!
//! Components are stored row-major over `(i_1..i_p, j_1..j_q)`, contravariant
//! slots first. With this convention the pullback of a density is
//! `(φ*ρ)(x) = ρ(φ(x))·|det Dφ(x)|^w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::{Elementary, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctorSpec {
    pub p: u32,
    pub q: u32,
    #[serde(default)]
    pub w: f64,
}

impl FunctorSpec {
    pub const TRIVIAL: FunctorSpec = FunctorSpec { p: 0, q: 0, w: 0.0 };
    pub const TANGENT: FunctorSpec = FunctorSpec { p: 1, q: 0, w: 0.0 };
    pub const COTANGENT: FunctorSpec = FunctorSpec { p: 0, q: 1, w: 0.0 };
    pub const ENDOMORPHISM: FunctorSpec = FunctorSpec { p: 1, q: 1, w: 0.0 };

    pub fn new(p: u32, q: u32, w: f64) -> FunctorSpec {
        FunctorSpec { p, q, w }
    }

    pub fn density(w: f64) -> FunctorSpec {
        FunctorSpec { p: 0, q: 0, w }
    }

    pub fn rank(&self) -> usize {
        (self.p + self.q) as usize
    }

    pub fn fiber_dim(&self, m: usize) -> usize {
        m.pow(self.p + self.q)
    }

    /// Splits a component index into its slot indices.
    pub fn slots(&self, m: usize, mut component: usize) -> Vec<usize> {
        let mut out = vec![0; self.rank()];
        for s in out.iter_mut().rev() {
            *s = component % m;
            component /= m;
        }
        out
    }

    /// Stride of slot `k` in the row-major layout.
    pub fn stride(&self, m: usize, slot: usize) -> usize {
        m.pow((self.rank() - 1 - slot) as u32)
    }
}

impl std::fmt::Display for FunctorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.p, self.q, self.w)
    }
}

/// An element of the fiber `F(M)_x` in trivialized coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberValue {
    pub spec: FunctorSpec,
    pub dim: usize,
    pub components: Vec<f64>,
}

impl FiberValue {
    pub fn new(spec: FunctorSpec, dim: usize, components: Vec<f64>) -> Result<FiberValue> {
        if components.len() != spec.fiber_dim(dim) {
            return Err(Error::Dimension {
                expected: spec.fiber_dim(dim),
                got: components.len(),
            });
        }
        Ok(FiberValue { spec, dim, components })
    }

    pub fn sup_norm(&self) -> f64 {
        self.components.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Contracts every contravariant slot with `contra[i][a]`, every covariant slot
/// with `co[b][j]`, then scales by `density`.
pub fn transform<R: Scalar>(
    spec: FunctorSpec,
    m: usize,
    contra: &Matrix<R>,
    co: &Matrix<R>,
    density: Option<&R>,
    components: &[R],
) -> Result<Vec<R>> {
    let n = spec.fiber_dim(m);
    if components.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: components.len(),
        });
    }
    let mut cur = components.to_vec();
    for slot in 0..spec.rank() {
        let stride = spec.stride(m, slot);
        let contravariant = slot < spec.p as usize;
        let next = (0..n)
            .map(|c| {
                let idx = (c / stride) % m;
                let rest = c - idx * stride;
                (0..m)
                    .map(|a| {
                        let coef = if contravariant {
                            contra[idx][a].clone()
                        } else {
                            co[a][idx].clone()
                        };
                        coef * cur[rest + a * stride].clone()
                    })
                    .reduce(|s, v| s + v)
                    .unwrap()
            })
            .collect();
        cur = next;
    }
    if let Some(d) = density {
        cur = cur.into_iter().map(|v| v * d.clone()).collect();
    }
    Ok(cur)
}

/// `|det|^{power}`, or `None` when the power is zero.
fn density_factor<R: Scalar>(det: &R, power: f64) -> Result<Option<R>> {
    if power == 0.0 {
        return Ok(None);
    }
    if det.value() == 0.0 {
        return Err(Error::SingularJacobian { det: 0.0 });
    }
    Ok(Some(det.apply(Elementary::Abs)?.apply(Elementary::Pow(power))?))
}

/// `F(f)` applied to a fiber vector, with `jac` the Jacobian of `f`.
pub fn apply_induced<R: Scalar>(spec: FunctorSpec, jac: &Matrix<R>, components: &[R]) -> Result<Vec<R>> {
    let inv = linalg::inverse(jac)?;
    let det = linalg::determinant(jac)?;
    let density = density_factor(&det, -spec.w)?;
    transform(spec, jac.len(), jac, &inv, density.as_ref(), components)
}

/// `F(f^{-1})` applied to a fiber vector over `f(x)`, with `jac = T_x f`.
/// This is the fiber part of the pullback `f^*s = F(f^{-1}) ∘ s ∘ f`.
pub fn apply_pullback<R: Scalar>(spec: FunctorSpec, jac: &Matrix<R>, components: &[R]) -> Result<Vec<R>> {
    let inv = linalg::inverse(jac)?;
    let det = linalg::determinant(jac)?;
    let density = density_factor(&det, spec.w)?;
    transform(spec, jac.len(), &inv, jac, density.as_ref(), components)
}

/// The matrix of `F(f)` on the fiber, for `J = T_x f`.
pub fn induced_map(spec: FunctorSpec, jac: &Matrix<f64>) -> Result<Matrix<f64>> {
    let m = jac.len();
    let n = spec.fiber_dim(m);
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        cols.push(apply_induced(spec, jac, &e)?);
    }
    Ok((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctorLawReport {
    /// Relative error of `F(J2·J1)` against `F(J2)·F(J1)`.
    pub composition_rel_err: f64,
    /// Max deviation of `F(I)` from the identity.
    pub identity_err: f64,
    pub pass: bool,
}

pub const FUNCTOR_LAW_TOL: f64 = 1e-12;

pub fn check_functoriality(spec: FunctorSpec, j1: &Matrix<f64>, j2: &Matrix<f64>) -> Result<FunctorLawReport> {
    let m = j1.len();
    let lhs = induced_map(spec, &linalg::mat_mul(j2, j1))?;
    let rhs = linalg::mat_mul(&induced_map(spec, j2)?, &induced_map(spec, j1)?);
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (a, b) in lhs.iter().flatten().zip(rhs.iter().flatten()) {
        diff = diff.max((a - b).abs());
        scale = scale.max(a.abs()).max(b.abs());
    }
    let composition_rel_err = if scale == 0.0 { diff } else { diff / scale };
    let id = induced_map(spec, &linalg::identity(m))?;
    let identity_err = id
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, v)| (v - if i == j { 1.0 } else { 0.0 }).abs()))
        .fold(0.0, f64::max);
    Ok(FunctorLawReport {
        composition_rel_err,
        identity_err,
        pass: composition_rel_err <= FUNCTOR_LAW_TOL && identity_err == 0.0,
    })
}
