//! The Lagrange multiplier `mu(t) = (t - r) / t^2` and its stationarity
//! conditions.
//!
//! Residuals are formed in double-double arithmetic: for small `t` the three
//! terms of the second-order condition are of size `r / t^2` and cancel, so a
//! plain `f64` evaluation loses the `1e-12` target near the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Dd, Scalar};

/// `x / y` to full double-double accuracy.
///
/// `TwoFloat`'s own `Dd / Dd` forms `1 - y.hi * (1 / y.hi)` without a fused
/// multiply-add and so only delivers about `f64` precision; one Newton step
/// on the reciprocal, with the correction formed in double-double, fixes it.
fn div_dd(x: Dd, y: Dd) -> Dd {
    let y0 = Dd::from_f64(1.0 / y.hi());
    let recip = y0 + y0 * (Dd::from_f64(1.0) - y * y0);
    x * recip
}

fn mu_dd(t: Dd, r: Dd) -> Dd {
    div_dd(t - r, t * t)
}

fn mu_dt_dd(t: Dd, r: Dd) -> Dd {
    div_dd(r * 2.0 - t, t * t * t)
}

fn mu_dtt_dd(t: Dd, r: Dd) -> Dd {
    div_dd(t * 2.0 - r * 6.0, t * t * t * t)
}

pub fn multiplier(t: f64, r: f64) -> f64 {
    mu_dd(Dd::from_f64(t), Dd::from_f64(r)).to_f64()
}

/// `d mu / dt`
pub fn multiplier_dt(t: f64, r: f64) -> f64 {
    mu_dt_dd(Dd::from_f64(t), Dd::from_f64(r)).to_f64()
}

/// `d^2 mu / dt^2`
pub fn multiplier_dtt(t: f64, r: f64) -> f64 {
    mu_dtt_dd(Dd::from_f64(t), Dd::from_f64(r)).to_f64()
}

/// Residuals of the three stationarity conditions at one `(t, r)` sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierResiduals {
    /// `1 - mu'(r) r^2 - 2 r mu(r)`, taken at `t = r`; `None` when `r = 0`.
    pub boundary_value: Option<f64>,
    /// `mu(r)` at `t = r`; `None` when `r = 0`.
    pub boundary_derivative: Option<f64>,
    /// `t^2 mu'' + 4 t mu' + 2 mu`
    pub interior: f64,
}

impl MultiplierResiduals {
    pub fn max_abs(&self) -> f64 {
        [self.boundary_value, self.boundary_derivative, Some(self.interior)]
            .into_iter()
            .flatten()
            .map(f64::abs)
            .fold(0.0, f64::max)
    }
}

pub fn multiplier_residuals(samples: &[(f64, f64)]) -> Result<Vec<MultiplierResiduals>> {
    samples
        .iter()
        .map(|&(t, r)| {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("multiplier needs t > 0, got t = {t}")));
            }
            if !(0.0..=1.0).contains(&r) || t > 1.0 {
                return Err(Error::Domain(format!("sample ({t}, {r}) outside (0,1] x [0,1]")));
            }
            let (td, rd) = (Dd::from_f64(t), Dd::from_f64(r));
            let interior = td * td * mu_dtt_dd(td, rd) + td * mu_dt_dd(td, rd) * 4.0 + mu_dd(td, rd) * 2.0;
            let (boundary_value, boundary_derivative) = if r > 0.0 {
                let at = mu_dd(rd, rd);
                let value = Dd::from_f64(1.0) - mu_dt_dd(rd, rd) * rd * rd - rd * at * 2.0;
                (Some(value.to_f64()), Some(at.to_f64()))
            } else {
                (None, None)
            };
            Ok(MultiplierResiduals {
                boundary_value,
                boundary_derivative,
                interior: interior.to_f64(),
            })
        })
        .collect()
}
