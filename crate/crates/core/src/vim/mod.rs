//! Variational iteration for `r^2 w'' - r w' = w^2/2 + lambda r^4 / 2`.
//!
//! One step is `w_{n+1} = w_n + int_0^r (t - r)/t^2 F_n(t) dt` where `F_n` is
//! the equation defect of `w_n`. Starting from `w_0 = a r^2` every iterate is
//! a polynomial whose `r^0` and `r^1` coefficients vanish, which is what keeps
//! the singular kernel integrable.

mod multiplier;
mod symbolic;

pub use multiplier::{multiplier, multiplier_dt, multiplier_dtt, multiplier_residuals, MultiplierResiduals};
pub use symbolic::{symbolic_iterate, symbolic_iterate_with_budget, APoly, Monomial, SYMBOLIC_MAX_ITER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{DdPoly, Poly, RPoly, Scalar};

/// Inputs of one iteration run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VimProblem {
    pub lambda: f64,
    /// Coefficient of the initial guess `w_0 = a r^2`.
    pub a: f64,
    pub n_iter: usize,
}

impl VimProblem {
    pub fn new(lambda: f64, a: f64, n_iter: usize) -> Result<Self> {
        if n_iter == 0 {
            return Err(Error::InvalidConfig("n_iter must be at least 1".into()));
        }
        Ok(Self { lambda, a, n_iter })
    }

    /// `w_0 = a r^2`
    pub fn initial_guess<S: Scalar>(&self) -> Poly<S> {
        Poly::monomial(self.a, 2)
    }
}

/// Whether the quadratic term takes part in the defect.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nonlinearity {
    Full,
    /// Drops `w^2/2`, leaving the Euler-type linear equation.
    Dropped,
}

/// `F(t) = t^2 w'' - t w' - w^2/2 - lambda t^4 / 2` as a polynomial.
pub fn ode_defect<S: Scalar>(w: &Poly<S>, lambda: f64) -> Poly<S> {
    defect_with(w, lambda, Nonlinearity::Full)
}

pub fn defect_with<S: Scalar>(w: &Poly<S>, lambda: f64, nonlinearity: Nonlinearity) -> Poly<S> {
    let len = match nonlinearity {
        Nonlinearity::Full => (2 * w.coeffs().len()).max(5),
        Nonlinearity::Dropped => w.coeffs().len().max(5),
    };
    let mut out = vec![S::zero(); len];
    // t^2 w'' - t w' maps t^k to k (k - 2) t^k
    for (k, &c) in w.coeffs().iter().enumerate() {
        if !c.is_structural_zero() {
            out[k] = c.mul_f64((k as f64) * (k as f64 - 2.0));
        }
    }
    if nonlinearity == Nonlinearity::Full {
        for (k, c) in w.square().coeffs().iter().enumerate() {
            if !c.is_structural_zero() {
                out[k] += -c.mul_f64(0.5);
            }
        }
    }
    if lambda != 0.0 {
        out[4] += S::from_f64(-0.5 * lambda);
    }
    Poly::new(out)
}

/// `w + K[F(w)]`
pub fn vim_step<S: Scalar>(w: &Poly<S>, lambda: f64) -> Result<Poly<S>> {
    step_with(w, lambda, Nonlinearity::Full)
}

pub fn step_with<S: Scalar>(w: &Poly<S>, lambda: f64, nonlinearity: Nonlinearity) -> Result<Poly<S>> {
    let correction = defect_with(w, lambda, nonlinearity).apply_vim_kernel()?;
    Ok(w + &correction)
}

/// Runs `n_iter` steps from `a r^2` in scalar type `S`.
pub fn iterate_in<S: Scalar>(prob: &VimProblem) -> Poly<S> {
    iterate_with(prob, Nonlinearity::Full)
}

pub fn iterate_with<S: Scalar>(prob: &VimProblem, nonlinearity: Nonlinearity) -> Poly<S> {
    let mut w = prob.initial_guess::<S>();
    for _ in 0..prob.n_iter {
        // The initial guess has no r^0/r^1 terms and each step preserves that,
        // so the kernel cannot reject the defect.
        w = step_with(&w, prob.lambda, nonlinearity).expect("iterate lost its zero r^0/r^1 coefficients");
    }
    w
}

/// `w_{n_iter}` in `f64`.
pub fn iterate(prob: &VimProblem) -> RPoly {
    iterate_in::<f64>(prob)
}

/// `w_{n_iter}` in double-double precision.
pub fn iterate_dd(prob: &VimProblem) -> DdPoly {
    iterate_in(prob)
}

/// All iterates `w_0, ..., w_{n_iter}`.
pub fn iterates<S: Scalar>(prob: &VimProblem) -> Vec<Poly<S>> {
    let mut out = Vec::with_capacity(prob.n_iter + 1);
    let mut w = prob.initial_guess::<S>();
    out.push(w.clone());
    for _ in 0..prob.n_iter {
        w = vim_step(&w, prob.lambda).expect("iterate lost its zero r^0/r^1 coefficients");
        out.push(w.clone());
    }
    out
}
