//! Independent check of the iteration: the same equation integrated as an
//! initial value problem with classic fixed-step RK4, started from a series
//! expansion just off the singular point, and shot on `a`.
//!
//! Nothing here shares code with the polynomial path except the root scan.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recover::unit_grid;
use crate::shooting::{find_branches, scan_roots, BoundaryKind, Label, ShootingConfig};

/// `|w|` beyond which a trajectory is declared blown up.
pub const BLOWUP: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IvpConfig {
    /// Where the series hands over to the integrator.
    pub r0: f64,
    /// Nominal RK4 step; shrunk slightly so that `1 - r0` is a whole number of steps.
    pub h: f64,
    /// Terms of the series start, 1 to 3.
    pub series_terms: usize,
}

impl Default for IvpConfig {
    fn default() -> Self {
        Self {
            r0: 1e-4,
            h: 1e-4,
            series_terms: 2,
        }
    }
}

impl IvpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r0 < 1.0) {
            return Err(Error::InvalidConfig(format!("r0 must lie in (0, 1), got {}", self.r0)));
        }
        if !(self.h > 0.0 && self.h <= 1e-3) {
            return Err(Error::InvalidConfig(format!("h must lie in (0, 1e-3], got {}", self.h)));
        }
        if !(1..=3).contains(&self.series_terms) {
            return Err(Error::InvalidConfig(format!(
                "series_terms must be 1, 2 or 3, got {}",
                self.series_terms
            )));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        ((1.0 - self.r0) / self.h).ceil() as usize
    }
}

/// Two-term series `w = a r^2 + (a^2 + lambda)/16 r^4` and its derivative.
pub fn series_start(a: f64, lambda: f64, r0: f64) -> (f64, f64) {
    series_start_with(a, lambda, r0, 2)
}

/// Series start with `terms` terms; the third is `a (a^2 + lambda) / 384 r^6`.
pub fn series_start_with(a: f64, lambda: f64, r0: f64, terms: usize) -> (f64, f64) {
    let c4 = (a * a + lambda) / 16.0;
    let c6 = a * c4 / 24.0;
    let coeffs = [(2, a), (4, c4), (6, c6)];
    let mut w = 0.0;
    let mut dw = 0.0;
    for &(k, c) in coeffs.iter().take(terms) {
        w += c * r0.powi(k);
        dw += k as f64 * c * r0.powi(k - 1);
    }
    (w, dw)
}

fn rhs(r: f64, w: f64, dw: f64, lambda: f64) -> f64 {
    dw / r + w * w / (2.0 * r * r) + 0.5 * lambda * r * r
}

fn rk4_step(r: f64, w: f64, dw: f64, h: f64, lambda: f64) -> (f64, f64) {
    let k1w = dw;
    let k1d = rhs(r, w, dw, lambda);
    let k2w = dw + 0.5 * h * k1d;
    let k2d = rhs(r + 0.5 * h, w + 0.5 * h * k1w, k2w, lambda);
    let k3w = dw + 0.5 * h * k2d;
    let k3d = rhs(r + 0.5 * h, w + 0.5 * h * k2w, k3w, lambda);
    let k4w = dw + h * k3d;
    let k4d = rhs(r + h, w + h * k3w, k4w, lambda);
    (
        w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
        dw + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
    )
}

/// Integrates from `r0` to 1, calling `visit(r, w, w')` at every node.
fn integrate<V: FnMut(f64, f64, f64)>(a: f64, lambda: f64, cfg: &IvpConfig, mut visit: V) -> Result<(f64, f64)> {
    cfg.validate()?;
    let n = cfg.steps();
    let h = (1.0 - cfg.r0) / n as f64;
    let (mut w, mut dw) = series_start_with(a, lambda, cfg.r0, cfg.series_terms);
    visit(cfg.r0, w, dw);
    for i in 0..n {
        let r = cfg.r0 + i as f64 * h;
        (w, dw) = rk4_step(r, w, dw, h, lambda);
        let r_next = if i + 1 == n { 1.0 } else { cfg.r0 + (i + 1) as f64 * h };
        if !(w.abs() <= BLOWUP) {
            return Err(Error::Overflow { r: r_next, w });
        }
        visit(r_next, w, dw);
    }
    Ok((w, dw))
}

/// `(w(1), w'(1))`
pub fn ivp_integrate(a: f64, lambda: f64, cfg: &IvpConfig) -> Result<(f64, f64)> {
    integrate(a, lambda, cfg, |_, _, _| {})
}

/// Dense output of one integration, starting at `r0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub a: f64,
    pub lambda: f64,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub w_prime: Vec<f64>,
    /// `phi = -int_r^1 w/s ds` by the composite trapezoid rule.
    pub phi: Vec<f64>,
}

impl Trajectory {
    /// `phi` at any `r` in `[0, 1]`: linear interpolation between nodes and
    /// the series `w/r ~ a r` below `r0`.
    pub fn phi_at(&self, r: f64) -> f64 {
        let r0 = self.r[0];
        if r <= r0 {
            return self.phi[0] - 0.5 * self.a * (r0 * r0 - r * r);
        }
        let i = self.r.partition_point(|&x| x <= r).min(self.r.len() - 1);
        let (x0, x1) = (self.r[i - 1], self.r[i]);
        let t = if x1 > x0 { (r - x0) / (x1 - x0) } else { 0.0 };
        self.phi[i - 1] + t * (self.phi[i] - self.phi[i - 1])
    }
}

pub fn ivp_trajectory(a: f64, lambda: f64, cfg: &IvpConfig) -> Result<Trajectory> {
    let mut traj = Trajectory {
        a,
        lambda,
        r: Vec::new(),
        w: Vec::new(),
        w_prime: Vec::new(),
        phi: Vec::new(),
    };
    integrate(a, lambda, cfg, |r, w, dw| {
        traj.r.push(r);
        traj.w.push(w);
        traj.w_prime.push(dw);
    })?;
    let n = traj.r.len();
    let mut phi = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let (r0, r1) = (traj.r[i], traj.r[i + 1]);
        phi[i] = phi[i + 1] - 0.5 * (r1 - r0) * (traj.w[i] / r0 + traj.w[i + 1] / r1);
    }
    traj.phi = phi;
    Ok(traj)
}

/// Observed order of convergence of `w(1)` from runs at `h`, `h/2`, `h/4`.
///
/// With `h` much larger than `r0` the first steps sit in the singular
/// region and the observed order drops, so measure with `r0` well above `h`
/// (e.g. `r0 = 1e-2`, three series terms, `h = 1e-3`).
pub fn empirical_order(a: f64, lambda: f64, cfg: &IvpConfig) -> Result<f64> {
    let run = |h: f64| ivp_integrate(a, lambda, &IvpConfig { h, ..*cfg }).map(|(w, _)| w);
    let (w1, w2, w4) = (run(cfg.h)?, run(cfg.h / 2.0)?, run(cfg.h / 4.0)?);
    Ok(((w1 - w2) / (w2 - w4)).abs().log2())
}

/// Boundary functional from the integrator; NaN for blown-up trajectories.
pub fn oracle_residual(a: f64, lambda: f64, bc: BoundaryKind, cfg: &IvpConfig) -> f64 {
    match ivp_integrate(a, lambda, cfg) {
        Ok((w1, dw1)) => bc.residual_from_values(w1, dw1),
        Err(_) => f64::NAN,
    }
}

/// Default scan resolution for [`oracle_branches`]; coarser than the
/// polynomial scan because each evaluation is a full integration.
pub const ORACLE_GRID_POINTS: usize = 1600;

/// Zeros of the integrator's boundary functional on `window`.
pub fn oracle_branches(lambda: f64, bc: BoundaryKind, window: (f64, f64)) -> Result<Vec<f64>> {
    oracle_branches_with(lambda, bc, window, ORACLE_GRID_POINTS, &IvpConfig::default())
}

pub fn oracle_branches_with(
    lambda: f64,
    bc: BoundaryKind,
    window: (f64, f64),
    grid_points: usize,
    cfg: &IvpConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || grid_points == 0 {
        return Err(Error::InvalidConfig(format!("a-window [{lo}, {hi}] is empty")));
    }
    Ok(scan_roots(|a| oracle_residual(a, lambda, bc, cfg), lo, hi, grid_points)
        .into_iter()
        .map(|r| r.a)
        .collect())
}

/// One iteration branch against its nearest integrator root.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchComparison {
    pub label: Label,
    pub a_vim: f64,
    pub a_oracle: Option<f64>,
    /// `|a_vim - a_oracle|`
    pub root_deviation: f64,
    /// `max |phi_vim - phi_oracle|` on 101 points.
    pub profile_deviation: f64,
}

impl BranchComparison {
    pub fn max_deviation(&self) -> f64 {
        self.root_deviation.max(self.profile_deviation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub bc: BoundaryKind,
    pub lambda: f64,
    pub vim_count: usize,
    pub oracle_roots: Vec<f64>,
    pub branches: Vec<BranchComparison>,
}

impl CrossCheck {
    /// Same number of branches and every deviation within `tol`.
    pub fn agrees(&self, tol: f64) -> bool {
        self.vim_count == self.oracle_roots.len() && self.branches.iter().all(|b| b.max_deviation() <= tol)
    }

    pub fn max_deviation(&self) -> f64 {
        self.branches
            .iter()
            .map(BranchComparison::max_deviation)
            .fold(0.0, f64::max)
    }
}

/// Solves `lambda` both ways and pairs each iteration root with the
/// nearest integrator root.
pub fn cross_validate(lambda: f64, bc: BoundaryKind, shooting: &ShootingConfig, ivp: &IvpConfig) -> Result<CrossCheck> {
    let set = find_branches(lambda, bc, shooting)?;
    let oracle_roots = oracle_branches_with(lambda, bc, shooting.window, ORACLE_GRID_POINTS, ivp)?;
    let grid = unit_grid(100);
    let mut branches = Vec::with_capacity(set.len());
    for root in &set.roots {
        let nearest = oracle_roots
            .iter()
            .copied()
            .min_by(|x, y| (x - root.a_star).abs().total_cmp(&(y - root.a_star).abs()));
        let (root_deviation, profile_deviation) = match nearest {
            Some(a) => {
                let profile = root.profile();
                let traj = ivp_trajectory(a, lambda, ivp)?;
                let dev = grid
                    .iter()
                    .map(|&r| (profile.phi_at(r) - traj.phi_at(r)).abs())
                    .fold(0.0, f64::max);
                ((a - root.a_star).abs(), dev)
            }
            None => (f64::INFINITY, f64::INFINITY),
        };
        branches.push(BranchComparison {
            label: root.label,
            a_vim: root.a_star,
            a_oracle: nearest,
            root_deviation,
            profile_deviation,
        });
    }
    Ok(CrossCheck {
        bc,
        lambda,
        vim_count: set.len(),
        oracle_roots,
        branches,
    })
}
