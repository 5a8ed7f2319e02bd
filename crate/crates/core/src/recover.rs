//! Height profile recovery, pointwise residuals and the linear-regime
//! closed forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{DdPoly, Poly, RPoly, Scalar};
use crate::shooting::{BoundaryKind, Label};
use crate::vim::ode_defect;

/// `phi` with `r phi' = w` and `phi(1) = 0`: each `c_k r^k` of `w` becomes
/// `c_k (r^k - 1) / k`.
pub fn recover_phi<S: Scalar>(w: &Poly<S>) -> Result<Poly<S>> {
    for power in 0..2 {
        let c = w.coeff(power);
        if !c.is_structural_zero() {
            return Err(Error::NonRecoverable {
                power,
                coefficient: c.to_f64(),
            });
        }
    }
    let mut coeffs = vec![S::zero(); w.coeffs().len()];
    let mut constant = S::zero();
    for (k, &c) in w.coeffs().iter().enumerate().skip(2) {
        if c.is_structural_zero() {
            continue;
        }
        let term = c.div_f64(k as f64);
        coeffs[k] = term;
        constant += -term;
    }
    if let Some(c0) = coeffs.first_mut() {
        *c0 = constant;
    }
    Ok(Poly::new(coeffs))
}

/// `r = 0.0, 0.1, ..., 0.9`, the tabulation grid.
pub fn table_grid() -> Vec<f64> {
    (0..10).map(|i| i as f64 / 10.0).collect()
}

/// `n + 1` equispaced points covering `[0, 1]`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualTable {
    pub grid: Vec<f64>,
    /// `r^2 w'' - r w' - w^2/2 - lambda r^4 / 2` at each grid point.
    pub values: Vec<f64>,
    pub label: Option<Label>,
    pub bc: Option<BoundaryKind>,
    pub lambda: f64,
}

impl ResidualTable {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn with_branch(mut self, bc: BoundaryKind, label: Label) -> Self {
        self.bc = Some(bc);
        self.label = Some(label);
        self
    }
}

/// Evaluates the exact polynomial defect of `w` on `grid`.
pub fn residual_table<S: Scalar>(w: &Poly<S>, lambda: f64, grid: &[f64]) -> ResidualTable {
    let defect = ode_defect(w, lambda);
    ResidualTable {
        grid: grid.to_vec(),
        values: grid.iter().map(|&r| defect.evaluate(r)).collect(),
        label: None,
        bc: None,
        lambda,
    }
}

/// A solved (or closed-form) branch: `w`, its height profile, and where it
/// came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub phi: DdPoly,
    pub w: DdPoly,
    pub a_star: f64,
    pub bc: BoundaryKind,
    pub lambda: f64,
}

impl Profile {
    pub fn from_w(w: DdPoly, a_star: f64, bc: BoundaryKind, lambda: f64) -> Result<Self> {
        let phi = recover_phi(&w)?;
        Ok(Self {
            phi,
            w,
            a_star,
            bc,
            lambda,
        })
    }

    pub fn phi_at(&self, r: f64) -> f64 {
        self.phi.evaluate(r)
    }

    pub fn w_at(&self, r: f64) -> f64 {
        self.w.evaluate(r)
    }

    pub fn phi_f64(&self) -> RPoly {
        self.phi.to_f64()
    }

    pub fn w_f64(&self) -> RPoly {
        self.w.to_f64()
    }

    /// `max |phi|` over a 101-point grid.
    pub fn sup_norm(&self) -> f64 {
        unit_grid(100)
            .into_iter()
            .map(|r| self.phi_at(r).abs())
            .fold(0.0, f64::max)
    }

    pub fn residual_table(&self, grid: &[f64]) -> ResidualTable {
        residual_table(&self.w, self.lambda, grid)
    }

    /// `phi` keeps one sign on `[0, 1)` (101-point sample).
    pub fn is_sign_definite(&self) -> bool {
        let values: Vec<f64> = unit_grid(100)[..100].iter().map(|&r| self.phi_at(r)).collect();
        values.iter().all(|&v| v >= 0.0) || values.iter().all(|&v| v <= 0.0)
    }
}

/// Closed-form solution of the problem without the quadratic term.
///
/// `w = lambda/16 r^2 (r^2 - c)` with `c = 1, 2, 3` for Dirichlet, Navier
/// type one and Navier type two.
pub fn linear_approximation(bc: BoundaryKind, lambda: f64) -> Profile {
    let c = match bc {
        BoundaryKind::Dirichlet => 1.0,
        BoundaryKind::NavierOne => 2.0,
        BoundaryKind::NavierTwo => 3.0,
    };
    let a = -lambda * c / 16.0;
    let w = DdPoly::from_f64_coeffs(&[0.0, 0.0, a, 0.0, lambda / 16.0]);
    Profile::from_w(w, a, bc, lambda).expect("closed form has no r^0/r^1 terms")
}
