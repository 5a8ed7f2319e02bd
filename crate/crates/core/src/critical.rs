//! Parameter sweeps in `lambda`, the branch gap, and bisection for the fold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recover::unit_grid;
use crate::shooting::{count_roots, solve_branches, BoundaryKind, Label, ShootingConfig, SolutionBranch};

/// Summary of one branch inside a [`SweepRecord`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    pub a_star: f64,
    pub sup_norm_phi: f64,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub lambda: f64,
    pub bc: BoundaryKind,
    pub branch_count: usize,
    pub branches: Vec<BranchSummary>,
    pub fold_flag: bool,
    pub n_iter: usize,
    /// Full branches; kept for gap computations and profile output.
    #[serde(skip)]
    pub solutions: Vec<SolutionBranch>,
}

impl SweepRecord {
    pub fn from_branches(
        lambda: f64,
        bc: BoundaryKind,
        n_iter: usize,
        solutions: Vec<SolutionBranch>,
        fold_flag: bool,
    ) -> Self {
        let branches = solutions
            .iter()
            .map(|s| BranchSummary {
                a_star: s.root.a_star,
                sup_norm_phi: s.profile.sup_norm(),
                label: s.root.label,
            })
            .collect::<Vec<_>>();
        Self {
            lambda,
            bc,
            branch_count: branches.len(),
            branches,
            fold_flag,
            n_iter,
            solutions,
        }
    }
}

/// One record per `lambda` using the default search settings for `bc`.
pub fn sweep(lambdas: &[f64], bc: BoundaryKind) -> Result<Vec<SweepRecord>> {
    sweep_with(lambdas, bc, &ShootingConfig::for_bc(bc))
}

pub fn sweep_with(lambdas: &[f64], bc: BoundaryKind, cfg: &ShootingConfig) -> Result<Vec<SweepRecord>> {
    lambdas.iter().map(|&lambda| sweep_point(lambda, bc, cfg)).collect()
}

pub fn sweep_point(lambda: f64, bc: BoundaryKind, cfg: &ShootingConfig) -> Result<SweepRecord> {
    let (solutions, fold) = solve_branches(lambda, bc, cfg)?;
    Ok(SweepRecord::from_branches(lambda, bc, cfg.n_iter, solutions, fold))
}

/// `max |phi_1 - phi_2|` over 101 points of `[0, 1]`.
pub fn branch_gap(record: &SweepRecord) -> Result<f64> {
    match record.solutions.as_slice() {
        [first, second] => Ok(unit_grid(100)
            .into_iter()
            .map(|r| (first.profile.phi_at(r) - second.profile.phi_at(r)).abs())
            .fold(0.0, f64::max)),
        other => Err(Error::NotTwoBranches { count: other.len() }),
    }
}

/// `lambda_crit` recomputed at another depth; `None` when the bracket does
/// not straddle the fold at that depth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub n_iter: usize,
    pub lambda_crit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    pub bc: BoundaryKind,
    pub lambda_crit: f64,
    /// Two or more branches at `bracket.0`, none at `bracket.1`.
    pub bracket: (f64, f64),
    pub n_iter_used: usize,
}

/// Bisection for the fold at the default depth for `bc`.
pub fn find_critical_lambda(bc: BoundaryKind, lo: f64, hi: f64, tol: f64) -> Result<CriticalEstimate> {
    find_critical_lambda_with(bc, lo, hi, tol, &ShootingConfig::for_bc(bc))
}

/// Bisects on the predicate "at least two branches". Never solves exactly at
/// the fold, where the double root defeats sign-change bracketing.
pub fn find_critical_lambda_with(
    bc: BoundaryKind,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    cfg: &ShootingConfig,
) -> Result<CriticalEstimate> {
    if !(tol > 0.0) || !(lo < hi) {
        return Err(Error::InvalidConfig(format!(
            "critical search needs lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}"
        )));
    }
    let lo_count = count_roots(lo, bc, cfg)?;
    let hi_count = count_roots(hi, bc, cfg)?;
    if lo_count < 2 || hi_count != 0 {
        return Err(Error::InvalidBracket {
            lo,
            hi,
            lo_count,
            hi_count,
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if count_roots(mid, bc, cfg)? >= 2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalEstimate {
        bc,
        lambda_crit: 0.5 * (lo + hi),
        bracket: (lo, hi),
        n_iter_used: cfg.n_iter,
    })
}

/// Repeats the search at `n_iter - 1` and `n_iter + 1`.
pub fn critical_sensitivity(
    est: &CriticalEstimate,
    lo: f64,
    hi: f64,
    tol: f64,
    cfg: &ShootingConfig,
) -> Vec<Sensitivity> {
    [est.n_iter_used.saturating_sub(1), est.n_iter_used + 1]
        .into_iter()
        .filter(|&n| n >= 1)
        .map(|n| {
            let lambda_crit = find_critical_lambda_with(est.bc, lo, hi, tol, &cfg.with_n_iter(n))
                .ok()
                .map(|e| e.lambda_crit);
            Sensitivity { n_iter: n, lambda_crit }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast(bc: BoundaryKind) -> ShootingConfig {
        ShootingConfig::for_bc(bc).with_grid_points(800)
    }

    #[test]
    fn gap_needs_two_branches() {
        let rec = SweepRecord::from_branches(1.0, BoundaryKind::NavierOne, 7, vec![], false);
        assert_eq!(branch_gap(&rec), Err(Error::NotTwoBranches { count: 0 }));
        assert_eq!(rec.branch_count, 0);
    }

    #[test]
    fn sweep_records_are_consistent() {
        let cfg = fast(BoundaryKind::NavierOne);
        let recs = sweep_with(&[0.0, 40.0], BoundaryKind::NavierOne, &cfg).unwrap();
        assert_eq!(recs[0].branch_count, 2);
        assert_eq!(recs[0].branches.len(), 2);
        assert!(!recs[0].fold_flag);
        assert!(recs[0]
            .branches
            .iter()
            .any(|b| b.a_star == 0.0 && b.sup_norm_phi == 0.0));
        assert_eq!(recs[1].branch_count, 0);
        assert!(branch_gap(&recs[0]).unwrap() > 0.0);
        // field order is part of the output format
        let json = serde_json::to_string(&recs[1]).unwrap();
        assert_eq!(
            json,
            r#"{"lambda":40.0,"bc":"navier1","branch_count":0,"branches":[],"fold_flag":false,"n_iter":7}"#
        );
    }

    #[test]
    fn bad_bracket_is_reported() {
        let cfg = fast(BoundaryKind::NavierTwo);
        let err = find_critical_lambda_with(BoundaryKind::NavierTwo, 0.0, 5.0, 0.1, &cfg).unwrap_err();
        assert!(
            matches!(
                err,
                Error::InvalidBracket {
                    lo_count: 2,
                    hi_count: 2,
                    ..
                }
            ),
            "{err:?}"
        );
        assert!(find_critical_lambda_with(BoundaryKind::NavierTwo, 5.0, 1.0, 0.1, &cfg).is_err());
        assert!(find_critical_lambda_with(BoundaryKind::NavierTwo, 5.0, 20.0, 0.0, &cfg).is_err());
    }

    #[test]
    fn bracket_straddles_the_fold() {
        let cfg = fast(BoundaryKind::NavierTwo);
        let est = find_critical_lambda_with(BoundaryKind::NavierTwo, 5.0, 20.0, 0.05, &cfg).unwrap();
        let (lo, hi) = est.bracket;
        assert!(hi - lo <= 0.05);
        assert!(count_roots(lo, BoundaryKind::NavierTwo, &cfg).unwrap() >= 2);
        assert_eq!(count_roots(hi, BoundaryKind::NavierTwo, &cfg).unwrap(), 0);
    }
}
