//! Dense univariate polynomials in the radial variable `r`.
//!
//! Coefficients are stored densely from degree 0 upward. The scalar type is
//! generic so the same code runs in plain `f64` and in double-double
//! ([`Dd`]) precision; the iterates used for shooting are evaluated at `r = 1`
//! where alternating high-degree terms cancel heavily, and `f64` is not
//! enough there once `|a|` grows past a few tens.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Double-double scalar (about 32 significant digits).
pub type Dd = TwoFloat;

/// Real scalar usable as a polynomial coefficient.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn mul_f64(self, k: f64) -> Self;
    fn div_f64(self, k: f64) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    /// Exact zero. Magnitude-based pruning is never applied to coefficients.
    fn is_structural_zero(self) -> bool {
        self == Self::zero()
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn mul_f64(self, k: f64) -> Self {
        self * k
    }
    #[inline]
    fn div_f64(self, k: f64) -> Self {
        self / k
    }
}

impl Scalar for Dd {
    #[inline]
    fn from_f64(x: f64) -> Self {
        TwoFloat::from(x)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }
    #[inline]
    fn mul_f64(self, k: f64) -> Self {
        self * k
    }
    #[inline]
    fn div_f64(self, k: f64) -> Self {
        self / k
    }
    #[inline]
    fn is_structural_zero(self) -> bool {
        self.hi() == 0.0 && self.lo() == 0.0
    }
}

/// Dense polynomial `sum_k coeffs[k] r^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly<S = f64> {
    coeffs: Vec<S>,
}

/// Polynomial with `f64` coefficients.
pub type RPoly = Poly<f64>;

/// Polynomial with double-double coefficients.
pub type DdPoly = Poly<Dd>;

impl<S: Scalar> Poly<S> {
    /// Builds a polynomial, trimming trailing structural zeros.
    pub fn new(mut coeffs: Vec<S>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_structural_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_f64_coeffs(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| S::from_f64(c)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// `c r^k`
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut coeffs = vec![S::zero(); k + 1];
        coeffs[k] = S::from_f64(c);
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// Coefficient of `r^k` (zero past the stored length).
    pub fn coeff(&self, k: usize) -> S {
        self.coeffs.get(k).copied().unwrap_or_else(S::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation.
    pub fn eval(&self, r: f64) -> S {
        let mut acc = S::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul_f64(r) + c;
        }
        acc
    }

    /// Horner evaluation rounded to `f64`.
    pub fn evaluate(&self, r: f64) -> f64 {
        self.eval(r).to_f64()
    }

    pub fn differentiate(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c.mul_f64(k as f64))
                .collect(),
        )
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c.mul_f64(k)).collect())
    }

    /// `p * p`, using the symmetry of the convolution.
    pub fn square(&self) -> Self {
        let n = self.coeffs.len();
        if n == 0 {
            return Self::zero();
        }
        let mut out = vec![S::zero(); 2 * n - 1];
        for i in 0..n {
            let ci = self.coeffs[i];
            if ci.is_structural_zero() {
                continue;
            }
            out[2 * i] += ci * ci;
            let twice = ci.mul_f64(2.0);
            for j in (i + 1)..n {
                let cj = self.coeffs[j];
                if cj.is_structural_zero() {
                    continue;
                }
                out[i + j] += twice * cj;
            }
        }
        Self::new(out)
    }

    /// Closed form of `r -> int_0^r (t - r)/t^2 f(t) dt`.
    ///
    /// Each monomial `t^k` (k >= 2) maps to `-r^k / (k (k - 1))`. A nonzero
    /// `t^0` or `t^1` term makes the integral diverge at `t = 0`.
    pub fn apply_vim_kernel(&self) -> Result<Self> {
        for power in 0..2 {
            let c = self.coeff(power);
            if !c.is_structural_zero() {
                return Err(Error::NonIntegrableDefect {
                    power,
                    coefficient: c.to_f64(),
                });
            }
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if k < 2 || c.is_structural_zero() {
                    S::zero()
                } else {
                    -c.div_f64((k * (k - 1)) as f64)
                }
            })
            .collect();
        Ok(Self::new(coeffs))
    }

    pub fn to_f64(&self) -> RPoly {
        Poly::new(self.coeffs.iter().map(|c| c.to_f64()).collect())
    }

    pub fn to_dd(&self) -> DdPoly {
        Poly::new(self.coeffs.iter().map(|c| Dd::from_f64(c.to_f64())).collect())
    }
}

impl<S: Scalar> Default for Poly<S> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<S: Scalar> Add for &Poly<S> {
    type Output = Poly<S>;

    fn add(self, rhs: &Poly<S>) -> Poly<S> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<S: Scalar> Add for Poly<S> {
    type Output = Poly<S>;

    fn add(self, rhs: Poly<S>) -> Poly<S> {
        &self + &rhs
    }
}

impl<S: Scalar> Sub for &Poly<S> {
    type Output = Poly<S>;

    fn sub(self, rhs: &Poly<S>) -> Poly<S> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<S: Scalar> Sub for Poly<S> {
    type Output = Poly<S>;

    fn sub(self, rhs: Poly<S>) -> Poly<S> {
        &self - &rhs
    }
}

impl<S: Scalar> Neg for &Poly<S> {
    type Output = Poly<S>;

    fn neg(self) -> Poly<S> {
        Poly::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

impl<S: Scalar> Mul for &Poly<S> {
    type Output = Poly<S>;

    fn mul(self, rhs: &Poly<S>) -> Poly<S> {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![S::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_structural_zero() {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl<S: Scalar> Mul for Poly<S> {
    type Output = Poly<S>;

    fn mul(self, rhs: Poly<S>) -> Poly<S> {
        &self * &rhs
    }
}

/// `p + q`
pub fn add<S: Scalar>(p: &Poly<S>, q: &Poly<S>) -> Poly<S> {
    p + q
}

/// `p * q` by direct convolution.
pub fn mul<S: Scalar>(p: &Poly<S>, q: &Poly<S>) -> Poly<S> {
    p * q
}
