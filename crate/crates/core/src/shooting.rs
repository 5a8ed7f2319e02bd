//! Shooting on the free coefficient `a` of the initial guess `w_0 = a r^2`.
//!
//! For fixed `lambda` the right boundary condition applied to the truncated
//! iterate gives a scalar function `B(a)`. Its real zeros are the solution
//! branches; they are bracketed on a uniform grid and refined by bisection.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Poly, Scalar};
use crate::recover::{Profile, ResidualTable};
use crate::vim::{iterate_dd, VimProblem};

/// Right boundary condition on `w` at `r = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryKind {
    /// `w(1) = 0`
    #[serde(rename = "dirichlet")]
    Dirichlet,
    /// `w'(1) = 0`
    #[serde(rename = "navier1")]
    NavierOne,
    /// `w(1) = w'(1)`
    #[serde(rename = "navier2")]
    NavierTwo,
}

impl BoundaryKind {
    pub const ALL: [BoundaryKind; 3] = [
        BoundaryKind::Dirichlet,
        BoundaryKind::NavierOne,
        BoundaryKind::NavierTwo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::NavierOne => "navier1",
            BoundaryKind::NavierTwo => "navier2",
        }
    }

    /// Truncation depth used by default: 6 for Dirichlet, 7 otherwise.
    pub fn default_iterations(self) -> usize {
        match self {
            BoundaryKind::Dirichlet => 6,
            BoundaryKind::NavierOne | BoundaryKind::NavierTwo => 7,
        }
    }

    fn weight(self, k: usize) -> f64 {
        match self {
            BoundaryKind::Dirichlet => 1.0,
            BoundaryKind::NavierOne => k as f64,
            BoundaryKind::NavierTwo => 1.0 - k as f64,
        }
    }

    /// Boundary functional of `w`, accumulated in the polynomial's own
    /// precision before rounding.
    pub fn residual<S: Scalar>(self, w: &Poly<S>) -> f64 {
        self.residual_with_scale(w).0
    }

    /// The functional together with the sum of the magnitudes of its terms,
    /// which bounds how much cancellation the sum went through.
    pub fn residual_with_scale<S: Scalar>(self, w: &Poly<S>) -> (f64, f64) {
        let mut acc = S::zero();
        let mut scale = 0.0;
        for (k, &c) in w.coeffs().iter().enumerate() {
            if !c.is_structural_zero() {
                let term = c.mul_f64(self.weight(k));
                scale += term.to_f64().abs();
                acc += term;
            }
        }
        (acc.to_f64(), scale)
    }

    /// Same functional evaluated from sampled endpoint values.
    pub fn residual_from_values(self, w1: f64, w1_prime: f64) -> f64 {
        match self {
            BoundaryKind::Dirichlet => w1,
            BoundaryKind::NavierOne => w1_prime,
            BoundaryKind::NavierTwo => w1 - w1_prime,
        }
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" | "d" => Ok(BoundaryKind::Dirichlet),
            "navier1" | "navier-one" | "n1" => Ok(BoundaryKind::NavierOne),
            "navier2" | "navier-two" | "n2" => Ok(BoundaryKind::NavierTwo),
            other => Err(Error::InvalidConfig(format!(
                "unknown boundary condition {other:?} (expected dirichlet, navier1 or navier2)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Lower,
    Upper,
    Positive,
    Negative,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Lower => "lower",
            Label::Upper => "upper",
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lower" => Ok(Label::Lower),
            "upper" => Ok(Label::Upper),
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            other => Err(Error::InvalidConfig(format!("unknown branch label {other:?}"))),
        }
    }
}

/// Search settings for [`find_branches`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    pub window: (f64, f64),
    pub grid_points: usize,
    pub n_iter: usize,
    /// Required `|B(a*)|`.
    pub root_tol: f64,
}

/// Default `a`-search window.
pub const DEFAULT_WINDOW: (f64, f64) = (-120.0, 40.0);
pub const DEFAULT_GRID_POINTS: usize = 4000;
pub const DEFAULT_ROOT_TOL: f64 = 1e-11;
/// Roots closer than this in `a` are reported as a fold.
pub const FOLD_SEPARATION: f64 = 1e-6;

impl ShootingConfig {
    pub fn for_bc(bc: BoundaryKind) -> Self {
        Self {
            window: DEFAULT_WINDOW,
            grid_points: DEFAULT_GRID_POINTS,
            n_iter: bc.default_iterations(),
            root_tol: DEFAULT_ROOT_TOL,
        }
    }

    pub fn with_n_iter(mut self, n_iter: usize) -> Self {
        self.n_iter = n_iter;
        self
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.window = (lo, hi);
        self
    }

    pub fn with_grid_points(mut self, grid_points: usize) -> Self {
        self.grid_points = grid_points;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.window;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidConfig(format!("a-window [{lo}, {hi}] is empty")));
        }
        if self.grid_points < 100 {
            return Err(Error::InvalidConfig(format!(
                "grid_points must be >= 100, got {}",
                self.grid_points
            )));
        }
        if self.n_iter == 0 {
            return Err(Error::InvalidConfig("n_iter must be at least 1".into()));
        }
        if !(self.root_tol > 0.0) {
            return Err(Error::InvalidConfig("root_tol must be positive".into()));
        }
        Ok(())
    }
}

/// One isolated zero of the boundary residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRoot {
    pub a_star: f64,
    pub bc: BoundaryKind,
    pub lambda: f64,
    pub label: Label,
    /// Grid cell where `B` changed sign.
    pub bracket: (f64, f64),
    pub n_iter: usize,
    /// `B(a_star)`
    pub residual: f64,
}

impl BranchRoot {
    pub fn problem(&self) -> VimProblem {
        VimProblem {
            lambda: self.lambda,
            a: self.a_star,
            n_iter: self.n_iter,
        }
    }

    /// Re-runs the iteration at `a_star` and recovers the profile.
    pub fn profile(&self) -> Profile {
        profile_at(self.a_star, self.lambda, self.bc, self.n_iter)
    }
}

/// Roots of `B` on the search window, sorted by `a`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BranchSet {
    pub roots: Vec<BranchRoot>,
    /// Two roots closer than [`FOLD_SEPARATION`].
    pub fold: bool,
}

impl BranchSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn by_label(&self, label: Label) -> Option<&BranchRoot> {
        self.roots.iter().find(|r| r.label == label)
    }
}

/// A root together with its profile and residual table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionBranch {
    pub root: BranchRoot,
    pub profile: Profile,
    pub table: ResidualTable,
}

/// Unit roundoff of double-double arithmetic.
const DD_UNIT: f64 = 4.930380657631324e-32;

/// Largest tolerated rounding error in `B` before it is reported as NaN.
pub const RESIDUAL_NOISE_LIMIT: f64 = 1e-5;

/// Boundary functional of `w_{n_iter}(a, lambda)` at `r = 1`.
///
/// For large `|a|` the terms of `w(1)` grow like `|a|^(2^n)` while the sum
/// stays moderate; once the cancellation exceeds what double-double can
/// carry the sign of `B` is noise, and NaN is returned instead.
pub fn boundary_residual(a: f64, lambda: f64, bc: BoundaryKind, n_iter: usize) -> f64 {
    let w = iterate_dd(&VimProblem { lambda, a, n_iter });
    let (b, scale) = bc.residual_with_scale(&w);
    if scale * DD_UNIT > RESIDUAL_NOISE_LIMIT {
        f64::NAN
    } else {
        b
    }
}

pub fn profile_at(a: f64, lambda: f64, bc: BoundaryKind, n_iter: usize) -> Profile {
    let w = iterate_dd(&VimProblem { lambda, a, n_iter });
    Profile::from_w(w, a, bc, lambda).expect("iterate lost its zero r^0/r^1 coefficients")
}

/// An unlabelled zero: `(a, bracket, B(a))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawRoot {
    pub a: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
}

/// Bisection inside a sign-change cell, run to floating-point resolution.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, mut f_lo: f64, mut f_hi: f64) -> (f64, f64) {
    for _ in 0..200 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return (mid, 0.0);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    if f_lo.abs() <= f_hi.abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    }
}

/// Minimizes `sign * f` on `[lo, hi]` by golden-section search.
fn golden_min<F: Fn(f64) -> f64>(f: &F, sign: f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (sign * f(x1), sign * f(x2));
    for _ in 0..200 {
        if !(x1 > lo && x2 < hi && x1 < x2) || f1 <= 0.0 || f2 <= 0.0 {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = sign * f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = sign * f(x2);
        }
    }
    if f1 <= f2 {
        (x1, sign * f1)
    } else {
        (x2, sign * f2)
    }
}

/// Zeros of `f` on `n` uniform cells of `[lo, hi]`.
///
/// Sign changes are refined by bisection and grid points where `f` is
/// exactly zero are roots themselves. A pair of roots closer together than
/// the grid spacing leaves no sign change, so every local minimum of `|f|`
/// is also searched; if `f` crosses zero there both roots are reported.
/// Cells with a non-finite endpoint are skipped, and a second root sharing a
/// cell with an exact zero on the grid is not resolved. Output is sorted by
/// `a`.
/// Grid samples are evaluated in parallel.
pub fn scan_roots<F: Fn(f64) -> f64 + Sync>(f: F, lo: f64, hi: f64, n: usize) -> Vec<RawRoot> {
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    // grid samples are independent; collecting keeps their order
    let fs: Vec<f64> = xs.par_iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..=n {
        if fs[i] == 0.0 {
            roots.push(RawRoot {
                a: xs[i],
                bracket: (xs[i], xs[i]),
                residual: 0.0,
            });
            continue;
        }
        if i == n {
            break;
        }
        let (f0, f1) = (fs[i], fs[i + 1]);
        if !(f0.is_finite() && f1.is_finite()) || f1 == 0.0 {
            continue;
        }
        if (f0 < 0.0) != (f1 < 0.0) {
            let (a, residual) = bisect(&f, xs[i], xs[i + 1], f0, f1);
            roots.push(RawRoot {
                a,
                bracket: (xs[i], xs[i + 1]),
                residual,
            });
        }
    }
    for i in 1..n {
        let (fl, fm, fr) = (fs[i - 1], fs[i], fs[i + 1]);
        if !(fl.is_finite() && fm.is_finite() && fr.is_finite()) || fm == 0.0 {
            continue;
        }
        let sign = fm.signum();
        let same_sign = sign * fl > 0.0 && sign * fr > 0.0;
        if !same_sign || sign * fm > sign * fl || sign * fm > sign * fr {
            continue;
        }
        let (xm, f_min) = golden_min(&f, sign, xs[i - 1], xs[i + 1]);
        if f_min == 0.0 {
            // tangency: the double root is reported twice
            for _ in 0..2 {
                roots.push(RawRoot {
                    a: xm,
                    bracket: (xs[i - 1], xs[i + 1]),
                    residual: 0.0,
                });
            }
        } else if sign * f_min < 0.0 {
            let (a1, r1) = bisect(&f, xs[i - 1], xm, fl, f_min);
            let (a2, r2) = bisect(&f, xm, xs[i + 1], f_min, fr);
            roots.push(RawRoot {
                a: a1,
                bracket: (xs[i - 1], xm),
                residual: r1,
            });
            roots.push(RawRoot {
                a: a2,
                bracket: (xm, xs[i + 1]),
                residual: r2,
            });
        }
    }
    roots.sort_by(|x, y| x.a.total_cmp(&y.a));
    roots
}

/// Unlabelled zeros of the boundary residual on the configured window.
pub fn find_roots(lambda: f64, bc: BoundaryKind, cfg: &ShootingConfig) -> Result<Vec<RawRoot>> {
    cfg.validate()?;
    let n_iter = cfg.n_iter;
    Ok(scan_roots(
        |a| boundary_residual(a, lambda, bc, n_iter),
        cfg.window.0,
        cfg.window.1,
        cfg.grid_points,
    ))
}

/// Number of zeros of the boundary residual; cheaper than
/// [`find_branches`] since nothing is classified.
pub fn count_roots(lambda: f64, bc: BoundaryKind, cfg: &ShootingConfig) -> Result<usize> {
    Ok(find_roots(lambda, bc, cfg)?.len())
}

/// Labels for a set of profiles sharing one `lambda`.
///
/// For `lambda >= 0` the branch with the smaller sup-norm of `phi` is the
/// lower one. For `lambda < 0` each branch is labelled by the sign of
/// `phi(1/2)`.
pub fn classify_branches(lambda: f64, profiles: &[Profile]) -> Result<Vec<Label>> {
    if lambda < 0.0 {
        return profiles
            .iter()
            .map(|p| {
                let mid = p.phi_at(0.5);
                if mid > 0.0 {
                    Ok(Label::Positive)
                } else if mid < 0.0 {
                    Ok(Label::Negative)
                } else {
                    Err(Error::AmbiguousClassification { difference: 0.0 })
                }
            })
            .collect();
    }
    let norms: Vec<f64> = profiles.iter().map(Profile::sup_norm).collect();
    let mut order: Vec<usize> = (0..profiles.len()).collect();
    order.sort_by(|&i, &j| norms[i].total_cmp(&norms[j]));
    let mut labels = vec![Label::Upper; profiles.len()];
    if let Some(&lowest) = order.first() {
        labels[lowest] = Label::Lower;
    }
    if order.len() >= 2 {
        let difference = norms[order[1]] - norms[order[0]];
        if difference < 1e-9 {
            return Err(Error::AmbiguousClassification { difference });
        }
    }
    Ok(labels)
}

/// Label for a single root given its own profile and the profiles of the
/// other roots at the same `lambda`.
pub fn classify_branch(root: BranchRoot, profile: &Profile, others: &[Profile]) -> Result<BranchRoot> {
    let mut all = vec![profile.clone()];
    all.extend_from_slice(others);
    let labels = classify_branches(root.lambda, &all)?;
    Ok(BranchRoot {
        label: labels[0],
        ..root
    })
}

/// `phi_lower <= phi_upper` on a 101-point grid.
pub fn ordering_holds(lower: &Profile, upper: &Profile) -> bool {
    crate::recover::unit_grid(100)
        .into_iter()
        .all(|r| lower.phi_at(r) <= upper.phi_at(r) + 1e-12)
}

fn has_fold(roots: &[RawRoot]) -> bool {
    roots.windows(2).any(|w| (w[1].a - w[0].a).abs() < FOLD_SEPARATION)
}

/// Solves, labels and tabulates every branch in the window.
pub fn solve_branches(lambda: f64, bc: BoundaryKind, cfg: &ShootingConfig) -> Result<(Vec<SolutionBranch>, bool)> {
    let raw = find_roots(lambda, bc, cfg)?;
    let fold = has_fold(&raw);
    let profiles: Vec<Profile> = raw.iter().map(|r| profile_at(r.a, lambda, bc, cfg.n_iter)).collect();
    let labels = match classify_branches(lambda, &profiles) {
        Ok(labels) => labels,
        // merged branches: report both with provisional labels and the fold flag
        Err(Error::AmbiguousClassification { .. }) if fold || raw.len() == 2 => {
            let mut l = vec![Label::Upper; raw.len()];
            l[0] = Label::Lower;
            l
        }
        Err(e) => return Err(e),
    };
    let grid = crate::recover::table_grid();
    let branches = raw
        .iter()
        .zip(profiles)
        .zip(labels)
        .map(|((r, profile), label)| {
            let root = BranchRoot {
                a_star: r.a,
                bc,
                lambda,
                label,
                bracket: r.bracket,
                n_iter: cfg.n_iter,
                residual: r.residual,
            };
            let table = profile.residual_table(&grid).with_branch(bc, label);
            SolutionBranch { root, profile, table }
        })
        .collect();
    Ok((branches, fold))
}

/// Labelled zeros of the boundary residual, sorted by `a`.
pub fn find_branches(lambda: f64, bc: BoundaryKind, cfg: &ShootingConfig) -> Result<BranchSet> {
    let (branches, fold) = solve_branches(lambda, bc, cfg)?;
    Ok(BranchSet {
        roots: branches.into_iter().map(|b| b.root).collect(),
        fold,
    })
}
