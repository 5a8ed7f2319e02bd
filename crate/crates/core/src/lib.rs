//! Solver for the radial stationary epitaxial-growth problem
//!
//! ```text
//! r^2 w'' - r w' = w^2 / 2 + lambda r^4 / 2,   w = r phi',   phi(1) = 0
//! ```
//!
//! with one of three right boundary conditions on `w`. Solutions are built
//! by variational iteration from `w_0 = a r^2`, the free coefficient `a` is
//! fixed by shooting, and the critical deposition rate is located by
//! bisecting on the number of branches. An independent Runge-Kutta shooting
//! solver is included for cross-checks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod critical;
pub mod error;
pub mod oracle;
pub mod poly;
pub mod recover;
pub mod shooting;
pub mod vim;

pub use critical::{
    branch_gap, critical_sensitivity, find_critical_lambda, find_critical_lambda_with, sweep, sweep_point, sweep_with,
    BranchSummary, CriticalEstimate, Sensitivity, SweepRecord,
};
pub use error::{Error, Result};
pub use oracle::{cross_validate, ivp_integrate, ivp_trajectory, oracle_branches, CrossCheck, IvpConfig, Trajectory};
pub use poly::{Dd, DdPoly, Poly, RPoly, Scalar};
pub use recover::{linear_approximation, recover_phi, residual_table, table_grid, unit_grid, Profile, ResidualTable};
pub use shooting::{
    boundary_residual, find_branches, solve_branches, BoundaryKind, BranchRoot, BranchSet, Label, ShootingConfig,
    SolutionBranch,
};
pub use vim::{iterate, ode_defect, symbolic_iterate, vim_step, APoly, VimProblem};
