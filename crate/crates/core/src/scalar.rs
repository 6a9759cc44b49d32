//! The numeric interface shared by plain reals and jets.
//!
//! Expression evaluation, the small dense linear algebra in [`crate::linalg`]
//! and the fiber transformations in [`crate::bundles`] are written once against
//! [`Scalar`] and run over `f64` for values or over [`crate::jet::Jet`] for
//! derivatives.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Smooth univariate functions available in the expression language.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Recip,
    /// `u^r` for a constant real exponent.
    Pow(f64),
}

impl Elementary {
    pub fn name(&self) -> &'static str {
        match self {
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Exp => "exp",
            Elementary::Log => "log",
            Elementary::Sqrt => "sqrt",
            Elementary::Abs => "abs",
            Elementary::Recip => "recip",
            Elementary::Pow(_) => "pow",
        }
    }

    /// Normalized Taylor coefficients `f^(n)(a)/n!` for `n = 0..=order`.
    ///
    /// `Abs` is not handled here; it is `sign(a)·u` on both scalars and jets.
    pub(crate) fn taylor_coefficients(&self, a: f64, order: usize) -> Result<Vec<f64>> {
        let mut c = Vec::with_capacity(order + 1);
        match *self {
            Elementary::Exp => {
                let e = a.exp();
                let mut fact = 1.0;
                for n in 0..=order {
                    if n > 0 {
                        fact *= n as f64;
                    }
                    c.push(e / fact);
                }
            }
            Elementary::Sin | Elementary::Cos => {
                let (s, co) = a.sin_cos();
                // derivative cycle of sin: sin, cos, -sin, -cos
                let cycle = [s, co, -s, -co];
                let shift = if *self == Elementary::Cos { 1 } else { 0 };
                let mut fact = 1.0;
                for n in 0..=order {
                    if n > 0 {
                        fact *= n as f64;
                    }
                    c.push(cycle[(n + shift) % 4] / fact);
                }
            }
            Elementary::Log => {
                if !(a > 0.0) {
                    return Err(Error::Domain { func: "log", value: a });
                }
                c.push(a.ln());
                let mut p = 1.0;
                for n in 1..=order {
                    p *= a;
                    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                    c.push(sign / (n as f64 * p));
                }
            }
            Elementary::Recip => {
                if a == 0.0 {
                    return Err(Error::DivisionByZero);
                }
                let inv = 1.0 / a;
                let mut p = inv;
                for n in 0..=order {
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    c.push(sign * p);
                    p *= inv;
                }
            }
            Elementary::Sqrt => {
                if a < 0.0 || (a == 0.0 && order > 0) {
                    return Err(Error::Domain { func: "sqrt", value: a });
                }
                return binomial_series(a, 0.5, order, "sqrt");
            }
            Elementary::Pow(r) => return binomial_series(a, r, order, "pow"),
            Elementary::Abs => unreachable!("abs is applied as sign(value)·u"),
        }
        Ok(c)
    }
}

/// Coefficients of `(a + h)^r = Σ C(r, n) a^(r-n) h^n`.
fn binomial_series(a: f64, r: f64, order: usize, func: &'static str) -> Result<Vec<f64>> {
    let integer = r.fract() == 0.0 && r.abs() <= i32::MAX as f64;
    if !integer && !(a > 0.0) {
        return Err(Error::Domain { func, value: a });
    }
    if integer && a == 0.0 && r < 0.0 {
        return Err(Error::DivisionByZero);
    }
    let mut c = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    for n in 0..=order {
        if n > 0 {
            binom *= (r - (n - 1) as f64) / n as f64;
        }
        let power = if integer {
            let e = r as i64 - n as i64;
            if binom == 0.0 {
                0.0
            } else {
                a.powi(e as i32)
            }
        } else {
            a.powf(r - n as f64)
        };
        c.push(binom * power);
    }
    Ok(c)
}

/// A commutative ring with the fallible operations the expression language
/// needs.
pub trait Scalar:
    Clone
    + std::fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// The value at the base point (degree-0 coefficient for jets).
    fn value(&self) -> f64;
    /// A constant of the same kind as `self` (same jet context).
    fn lift(&self, c: f64) -> Self;
    fn scale(&self, c: f64) -> Self;
    fn checked_div(&self, rhs: &Self) -> Result<Self>;
    fn apply(&self, f: Elementary) -> Result<Self>;
    /// Magnitude used for error control: `|v|` for reals, the largest
    /// coefficient for jets.
    fn sup_norm(&self) -> f64;
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }

    fn lift(&self, c: f64) -> Self {
        c
    }

    fn scale(&self, c: f64) -> Self {
        self * c
    }

    fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if *rhs == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self / rhs)
    }

    fn apply(&self, f: Elementary) -> Result<Self> {
        let a = *self;
        match f {
            Elementary::Abs => {
                if a == 0.0 {
                    return Err(Error::Domain { func: "abs", value: a });
                }
                Ok(a.abs())
            }
            other => Ok(other.taylor_coefficients(a, 0)?[0]),
        }
    }

    fn sup_norm(&self) -> f64 {
        self.abs()
    }
}
