//! The subcommands. Each returns the process exit code on success.

use std::fmt;
use std::io;

use epibvp_core::critical::sweep_point;
use epibvp_core::recover::table_grid;
use epibvp_core::{
    branch_gap, critical_sensitivity, cross_validate, find_critical_lambda_with, linear_approximation, BoundaryKind,
    CrossCheck, Error, IvpConfig, Label, Sensitivity, ShootingConfig, SolutionBranch, SweepRecord,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, RunConfig, UsageError};
use crate::output::{json, lambda_tag, num, opt_num, Csv, OutDir};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_BRACKET: u8 = 2;
pub const EXIT_NO_BRANCH: u8 = 3;
pub const EXIT_MISMATCH: u8 = 4;

pub const CRITICAL_TOL: f64 = 0.01;
pub const ORACLE_TOL: f64 = 5e-2;

pub const CONFIG_ECHO: &str = "effective-config.toml";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::InvalidBracket { .. }) => EXIT_BRACKET,
            _ => EXIT_USAGE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<UsageError> for CliError {
    fn from(e: UsageError) -> Self {
        CliError::Usage(e.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

type CmdResult = Result<u8, CliError>;

/// Resolved config plus the output directory and worker pool.
struct Run {
    cfg: RunConfig,
    out: OutDir,
    pool: rayon::ThreadPool,
}

impl Run {
    fn start(cfg: RunConfig) -> Result<Self, CliError> {
        let out = OutDir::create(&cfg.out)?;
        let echo = toml::to_string(&cfg.echo()).map_err(|e| CliError::Usage(e.to_string()))?;
        out.write(CONFIG_ECHO, &echo)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
        Ok(Self { cfg, out, pool })
    }

    fn bc(&self) -> BoundaryKind {
        self.cfg.bc
    }

    fn ext(&self) -> &'static str {
        match self.cfg.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// Runs `f` for every `lambda` on the pool; results keep input order.
    fn per_lambda<T, F>(&self, lambdas: &[f64], f: F) -> Result<Vec<T>, CliError>
    where
        T: Send,
        F: Fn(f64) -> epibvp_core::Result<T> + Sync + Send,
    {
        Ok(self.pool.install(|| {
            lambdas
                .par_iter()
                .map(|&l| f(l))
                .collect::<epibvp_core::Result<Vec<T>>>()
        })?)
    }

    fn sweep(&self, lambdas: &[f64], shoot: &ShootingConfig) -> Result<Vec<SweepRecord>, CliError> {
        let bc = self.bc();
        self.per_lambda(lambdas, |l| sweep_point(l, bc, shoot))
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        self.out.write(name, contents)?;
        Ok(())
    }
}

fn shooting(cfg: &RunConfig) -> ShootingConfig {
    ShootingConfig::for_bc(cfg.bc)
        .with_n_iter(cfg.n_iter)
        .with_window(cfg.a_window.0, cfg.a_window.1)
}

/// Labels present in `records`, in a fixed order.
fn labels_present(records: &[SweepRecord]) -> Vec<Label> {
    [Label::Lower, Label::Upper, Label::Positive, Label::Negative]
        .into_iter()
        .filter(|l| records.iter().any(|r| r.branches.iter().any(|b| b.label == *l)))
        .collect()
}

fn branch_of(record: &SweepRecord, label: Label) -> Option<&SolutionBranch> {
    record.solutions.iter().find(|s| s.root.label == label)
}

// ---------------------------------------------------------------- solve

#[derive(Serialize)]
struct ProfileFile<'a> {
    bc: BoundaryKind,
    lambda: f64,
    label: Label,
    a_star: f64,
    n_iter: usize,
    r: &'a [f64],
    w: Vec<f64>,
    phi: Vec<f64>,
    residual: Vec<f64>,
}

#[derive(Serialize)]
struct BranchReport {
    label: Label,
    a_star: f64,
    sup_norm_phi: f64,
    boundary_residual: f64,
    within_tol: bool,
    profile: String,
}

#[derive(Serialize)]
struct LambdaReport {
    lambda: f64,
    branch_count: usize,
    fold_flag: bool,
    branches: Vec<BranchReport>,
}

#[derive(Serialize)]
struct SolveSummary {
    bc: BoundaryKind,
    n_iter: usize,
    root_tol: f64,
    results: Vec<LambdaReport>,
}

pub fn solve(cfg: RunConfig) -> CmdResult {
    let lambdas = cfg.lambda_values()?;
    let mut shoot = shooting(&cfg);
    if let Some(tol) = cfg.tol {
        shoot.root_tol = tol;
    }
    let run = Run::start(cfg)?;
    let records = run.sweep(&lambdas, &shoot)?;
    let grid = run.cfg.sample_grid();
    let bc = run.bc();

    let mut results = Vec::with_capacity(records.len());
    for rec in &records {
        let mut branches = Vec::new();
        for sol in &rec.solutions {
            let p = &sol.profile;
            let file = format!(
                "profile-{bc}-{}-{}.{}",
                lambda_tag(rec.lambda),
                sol.root.label,
                run.ext()
            );
            let w: Vec<f64> = grid.iter().map(|&r| p.w_at(r)).collect();
            let phi: Vec<f64> = grid.iter().map(|&r| p.phi_at(r)).collect();
            let residual = p.residual_table(&grid).values;
            let body = match run.cfg.format {
                Format::Csv => {
                    let mut csv = Csv::new(["r", "w", "phi", "residual"]);
                    for i in 0..grid.len() {
                        csv.push(vec![num(grid[i]), num(w[i]), num(phi[i]), num(residual[i])]);
                    }
                    csv.render()
                }
                Format::Json => json(&ProfileFile {
                    bc,
                    lambda: rec.lambda,
                    label: sol.root.label,
                    a_star: sol.root.a_star,
                    n_iter: rec.n_iter,
                    r: &grid,
                    w,
                    phi,
                    residual,
                }),
            };
            run.write(&file, &body)?;
            branches.push(BranchReport {
                label: sol.root.label,
                a_star: sol.root.a_star,
                sup_norm_phi: p.sup_norm(),
                boundary_residual: sol.root.residual,
                within_tol: sol.root.residual.abs() <= shoot.root_tol,
                profile: file,
            });
        }
        results.push(LambdaReport {
            lambda: rec.lambda,
            branch_count: rec.branch_count,
            fold_flag: rec.fold_flag,
            branches,
        });
    }

    let summary = SolveSummary {
        bc,
        n_iter: shoot.n_iter,
        root_tol: shoot.root_tol,
        results,
    };
    let body = match run.cfg.format {
        Format::Csv => {
            let mut csv = Csv::new([
                "lambda",
                "branch_count",
                "fold_flag",
                "label",
                "a_star",
                "sup_norm_phi",
                "boundary_residual",
                "within_tol",
            ]);
            for res in &summary.results {
                let head = [num(res.lambda), res.branch_count.to_string(), res.fold_flag.to_string()];
                if res.branches.is_empty() {
                    let mut row = head.to_vec();
                    row.extend(std::iter::repeat_n(String::new(), 5));
                    csv.push(row);
                }
                for b in &res.branches {
                    let mut row = head.to_vec();
                    row.extend([
                        b.label.to_string(),
                        num(b.a_star),
                        num(b.sup_norm_phi),
                        num(b.boundary_residual),
                        b.within_tol.to_string(),
                    ]);
                    csv.push(row);
                }
            }
            csv.render()
        }
        Format::Json => json(&summary),
    };
    run.write(&format!("summary.{}", run.ext()), &body)?;

    let mut found = 0;
    for res in &summary.results {
        if res.branches.is_empty() {
            println!("{bc} lambda={}: no branch", num(res.lambda));
        }
        for b in &res.branches {
            found += 1;
            println!(
                "{bc} lambda={} {}: a*={} sup|phi|={} B(a*)={}",
                num(res.lambda),
                b.label,
                num(b.a_star),
                num(b.sup_norm_phi),
                num(b.boundary_residual)
            );
        }
    }
    if found == 0 {
        eprintln!(
            "no solution branch in a-window [{}, {}]",
            num(shoot.window.0),
            num(shoot.window.1)
        );
        return Ok(EXIT_NO_BRANCH);
    }
    Ok(EXIT_OK)
}

// ------------------------------------------------------- residual-table

#[derive(Serialize)]
struct Column {
    lambda: f64,
    a_star: Option<f64>,
    values: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct ColumnFile<'a> {
    bc: BoundaryKind,
    label: Label,
    n_iter: usize,
    r: &'a [f64],
    columns: Vec<Column>,
}

fn render_columns(format: Format, file: &ColumnFile<'_>) -> String {
    match format {
        Format::Csv => {
            let mut header = vec!["r".to_string()];
            header.extend(file.columns.iter().map(|c| lambda_tag(c.lambda)));
            let mut csv = Csv::new(header);
            for (i, &r) in file.r.iter().enumerate() {
                let mut row = vec![num(r)];
                row.extend(file.columns.iter().map(|c| opt_num(c.values.as_ref().map(|v| v[i]))));
                csv.push(row);
            }
            csv.render()
        }
        Format::Json => json(file),
    }
}

/// Writes one file per label with a column per `lambda`; `values` extracts
/// the column for a branch.
fn write_columns<F>(
    run: &Run,
    prefix: &str,
    records: &[SweepRecord],
    labels: &[Label],
    grid: &[f64],
    values: F,
) -> Result<usize, CliError>
where
    F: Fn(&SolutionBranch) -> Vec<f64>,
{
    let mut filled = 0;
    for &label in labels {
        let columns: Vec<Column> = records
            .iter()
            .map(|rec| {
                let sol = branch_of(rec, label);
                filled += sol.is_some() as usize;
                Column {
                    lambda: rec.lambda,
                    a_star: sol.map(|s| s.root.a_star),
                    values: sol.map(&values),
                }
            })
            .collect();
        let file = ColumnFile {
            bc: run.bc(),
            label,
            n_iter: run.cfg.n_iter,
            r: grid,
            columns,
        };
        let name = format!("{prefix}-{}-{label}.{}", run.bc(), run.ext());
        run.write(&name, &render_columns(run.cfg.format, &file))?;
    }
    Ok(filled)
}

pub fn residual_table(cfg: RunConfig) -> CmdResult {
    let lambdas = cfg.lambda_values()?;
    let shoot = shooting(&cfg);
    let run = Run::start(cfg)?;
    let records = run.sweep(&lambdas, &shoot)?;
    let labels = match run.cfg.branch {
        Some(label) => vec![label],
        None => labels_present(&records),
    };
    let grid = table_grid();
    let filled = write_columns(&run, "residuals", &records, &labels, &grid, |s| s.table.values.clone())?;
    for rec in &records {
        let names: Vec<String> = rec.branches.iter().map(|b| b.label.to_string()).collect();
        println!(
            "{} lambda={}: {} branch(es) {}",
            run.bc(),
            num(rec.lambda),
            rec.branch_count,
            names.join(" ")
        );
    }
    if filled == 0 {
        eprintln!("no matching branch for any lambda");
        return Ok(EXIT_NO_BRANCH);
    }
    Ok(EXIT_OK)
}

// ------------------------------------------------------------- critical

/// Brackets that contain the fold at the default depths.
pub fn default_bracket(bc: BoundaryKind) -> (f64, f64) {
    match bc {
        BoundaryKind::NavierTwo => (5.0, 20.0),
        BoundaryKind::NavierOne => (20.0, 40.0),
        BoundaryKind::Dirichlet => (140.0, 200.0),
    }
}

#[derive(Serialize)]
struct CriticalReport {
    bc: BoundaryKind,
    lambda_crit: f64,
    bracket: (f64, f64),
    n_iter: usize,
    sensitivity: Vec<Sensitivity>,
}

pub fn critical(cfg: RunConfig) -> CmdResult {
    let (dlo, dhi) = default_bracket(cfg.bc);
    let (lo, hi) = (cfg.lo.unwrap_or(dlo), cfg.hi.unwrap_or(dhi));
    let tol = cfg.tol.unwrap_or(CRITICAL_TOL);
    let shoot = shooting(&cfg);
    let run = Run::start(cfg)?;
    let (est, sensitivity) = run.pool.install(|| -> epibvp_core::Result<_> {
        let est = find_critical_lambda_with(run.bc(), lo, hi, tol, &shoot)?;
        let sens = critical_sensitivity(&est, lo, hi, tol, &shoot);
        Ok((est, sens))
    })?;
    let report = CriticalReport {
        bc: est.bc,
        lambda_crit: est.lambda_crit,
        bracket: est.bracket,
        n_iter: est.n_iter_used,
        sensitivity,
    };
    let body = json(&report);
    run.write("critical.json", &body)?;
    print!("{body}");
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------- sweep

#[derive(Serialize)]
struct SweepRow<'a> {
    #[serde(flatten)]
    record: &'a SweepRecord,
    gap: Option<f64>,
}

#[derive(Serialize)]
struct SweepFile<'a> {
    bc: BoundaryKind,
    n_iter: usize,
    records: Vec<SweepRow<'a>>,
}

pub fn sweep(cfg: RunConfig) -> CmdResult {
    let lambdas = cfg.lambda_values()?;
    let shoot = shooting(&cfg);
    let run = Run::start(cfg)?;
    let records = run.sweep(&lambdas, &shoot)?;
    let rows: Vec<SweepRow> = records
        .iter()
        .map(|record| SweepRow {
            record,
            gap: branch_gap(record).ok(),
        })
        .collect();

    let body = match run.cfg.format {
        Format::Csv => {
            let mut csv = Csv::new([
                "lambda",
                "branch_count",
                "fold_flag",
                "gap",
                "label",
                "a_star",
                "sup_norm_phi",
            ]);
            for row in &rows {
                let rec = row.record;
                let head = [
                    num(rec.lambda),
                    rec.branch_count.to_string(),
                    rec.fold_flag.to_string(),
                    opt_num(row.gap),
                ];
                if rec.branches.is_empty() {
                    let mut line = head.to_vec();
                    line.extend(std::iter::repeat_n(String::new(), 3));
                    csv.push(line);
                }
                for b in &rec.branches {
                    let mut line = head.to_vec();
                    line.extend([b.label.to_string(), num(b.a_star), num(b.sup_norm_phi)]);
                    csv.push(line);
                }
            }
            csv.render()
        }
        Format::Json => json(&SweepFile {
            bc: run.bc(),
            n_iter: shoot.n_iter,
            records: rows,
        }),
    };
    run.write(&format!("sweep.{}", run.ext()), &body)?;

    let grid = run.cfg.sample_grid();
    write_columns(&run, "phi", &records, &labels_present(&records), &grid, |s| {
        grid.iter().map(|&r| s.profile.phi_at(r)).collect()
    })?;
    for rec in &records {
        println!(
            "{} lambda={}: {} branch(es), gap {}",
            run.bc(),
            num(rec.lambda),
            rec.branch_count,
            branch_gap(rec).map(num).unwrap_or_else(|_| "-".into())
        );
    }
    Ok(EXIT_OK)
}

// --------------------------------------------------------------- linear

#[derive(Serialize)]
struct LinearFile<'a> {
    bc: BoundaryKind,
    lambda: f64,
    r: &'a [f64],
    w: Vec<f64>,
    phi: Vec<f64>,
    /// Ascending powers of `r`.
    w_coefficients: Vec<f64>,
    phi_coefficients: Vec<f64>,
}

pub fn linear(cfg: RunConfig) -> CmdResult {
    let lambdas = cfg.lambda_values()?;
    let run = Run::start(cfg)?;
    let grid = run.cfg.sample_grid();
    let bc = run.bc();
    let mut coeffs = Csv::new(["lambda", "power", "w", "phi"]);
    for &lambda in &lambdas {
        let p = linear_approximation(bc, lambda);
        let (w_poly, phi_poly) = (p.w_f64(), p.phi_f64());
        let degree = w_poly.coeffs().len().max(phi_poly.coeffs().len());
        let w_coefficients: Vec<f64> = (0..degree).map(|k| w_poly.coeff(k)).collect();
        let phi_coefficients: Vec<f64> = (0..degree).map(|k| phi_poly.coeff(k)).collect();
        for k in 0..degree {
            coeffs.push(vec![
                num(lambda),
                k.to_string(),
                num(w_coefficients[k]),
                num(phi_coefficients[k]),
            ]);
        }
        let file = LinearFile {
            bc,
            lambda,
            r: &grid,
            w: grid.iter().map(|&r| p.w_at(r)).collect(),
            phi: grid.iter().map(|&r| p.phi_at(r)).collect(),
            w_coefficients,
            phi_coefficients,
        };
        let body = match run.cfg.format {
            Format::Csv => {
                let mut csv = Csv::new(["r", "w", "phi"]);
                for ((r, w), phi) in grid.iter().zip(&file.w).zip(&file.phi) {
                    csv.push(vec![num(*r), num(*w), num(*phi)]);
                }
                csv.render()
            }
            Format::Json => json(&file),
        };
        run.write(&format!("linear-{bc}-{}.{}", lambda_tag(lambda), run.ext()), &body)?;
        println!("{bc} lambda={}: phi(0)={}", num(lambda), num(p.phi_at(0.0)));
    }
    if run.cfg.format == Format::Csv {
        run.write("linear-coefficients.csv", &coeffs.render())?;
    }
    Ok(EXIT_OK)
}

// --------------------------------------------------------- oracle-check

#[derive(Serialize)]
struct CheckRow<'a> {
    #[serde(flatten)]
    check: &'a CrossCheck,
    agrees: bool,
}

#[derive(Serialize)]
struct CheckFile<'a> {
    bc: BoundaryKind,
    n_iter: usize,
    tol: f64,
    ivp: IvpConfig,
    checks: Vec<CheckRow<'a>>,
}

pub fn oracle_check(cfg: RunConfig) -> CmdResult {
    let lambdas = cfg.lambda_values()?;
    let tol = cfg.tol.unwrap_or(ORACLE_TOL);
    let shoot = shooting(&cfg);
    let ivp = IvpConfig::default();
    let run = Run::start(cfg)?;
    let bc = run.bc();
    let checks = run.per_lambda(&lambdas, |l| cross_validate(l, bc, &shoot, &ivp))?;

    let body = match run.cfg.format {
        Format::Csv => {
            let mut csv = Csv::new([
                "lambda",
                "vim_count",
                "oracle_count",
                "label",
                "a_vim",
                "a_oracle",
                "root_deviation",
                "profile_deviation",
                "agrees",
            ]);
            for c in &checks {
                let head = [num(c.lambda), c.vim_count.to_string(), c.oracle_roots.len().to_string()];
                if c.branches.is_empty() {
                    let mut row = head.to_vec();
                    row.extend(std::iter::repeat_n(String::new(), 5));
                    row.push(c.agrees(tol).to_string());
                    csv.push(row);
                }
                for b in &c.branches {
                    let mut row = head.to_vec();
                    row.extend([
                        b.label.to_string(),
                        num(b.a_vim),
                        opt_num(b.a_oracle),
                        num(b.root_deviation),
                        num(b.profile_deviation),
                        (c.vim_count == c.oracle_roots.len() && b.max_deviation() <= tol).to_string(),
                    ]);
                    csv.push(row);
                }
            }
            csv.render()
        }
        Format::Json => json(&CheckFile {
            bc,
            n_iter: shoot.n_iter,
            tol,
            ivp,
            checks: checks
                .iter()
                .map(|check| CheckRow {
                    check,
                    agrees: check.agrees(tol),
                })
                .collect(),
        }),
    };
    run.write(&format!("oracle-check.{}", run.ext()), &body)?;

    let mut ok = true;
    for c in &checks {
        let agrees = c.agrees(tol);
        ok &= agrees;
        println!(
            "{bc} lambda={}: {} vs {} branch(es) {}",
            num(c.lambda),
            c.vim_count,
            c.oracle_roots.len(),
            if agrees { "ok" } else { "MISMATCH" }
        );
        for b in &c.branches {
            println!("  {}: max deviation {}", b.label, num(b.max_deviation()));
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_MISMATCH })
}
