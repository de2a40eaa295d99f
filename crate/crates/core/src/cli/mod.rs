//! Command-line driver: `solve`, `check`, `compare` and `bench`.
//!
//! Every command reads one TOML run configuration. Reports go to the
//! returned [`Outcome`]; artifacts go to the configured output directory,
//! each stamped with the configuration hash.

pub mod config;
pub mod output;

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boundary::{assemble_layer_ops_with, box_edges, discretize_box_boundary, discretize_circle, projectors, BoundarySampling, CircleRule, DNTrace};
use crate::geometry::{Point, Rect};
use crate::leaf::build_leaf_fd;
use crate::linalg::{op_norm, vec_norm, CMat};
use crate::medium::{Medium, WaveContext};
use crate::merge::merge_pair;
use crate::oracle::{eval_scattered_volume, solve_lippmann_schwinger, VolumeGrid};
use crate::solver::{Factorization, FactorTimings, Outputs, ProjectorMode, SolveTimings};
use crate::C64;

pub use config::{ConfigError, RunConfig, ORACLE_UNKNOWN_LIMIT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_CHECK: i32 = 3;
pub const EXIT_COMPARE: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Check,
    Compare,
    Bench,
}

/// Exit code plus the text printed on standard output.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
}

/// A command that could not run to completion.
#[derive(Clone, Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_CONFIG, message: e.to_string() }
    }

    fn stage(stage: &str, e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_SOLVER, message: format!("{stage} failed: {e}") }
    }
}

pub fn run(command: Command, config: &Path) -> Result<Outcome, Failure> {
    let cfg = RunConfig::load(config).map_err(Failure::config)?;
    match command {
        Command::Solve => solve(&cfg).map(|s| Outcome { code: EXIT_OK, report: s.report() }),
        Command::Check => {
            let lines = check(&cfg)?;
            let ok = lines.iter().all(|l| l.pass);
            let report = lines.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("\n");
            Ok(Outcome { code: if ok { EXIT_OK } else { EXIT_CHECK }, report })
        }
        Command::Compare => {
            let r = compare(&cfg)?;
            Ok(Outcome { code: if r.pass() { EXIT_OK } else { EXIT_COMPARE }, report: r.report() })
        }
        Command::Bench => bench(&cfg).map(|b| Outcome { code: EXIT_OK, report: b.report() }),
    }
}

/// Ratio of scaled boundary norms, zero when the denominator vanishes.
pub fn weighted_ratio(num: &crate::solver::DNPair, den: &crate::solver::DNPair, b: &BoundarySampling, k: f64) -> f64 {
    let d = den.weighted_norm(b, k);
    if d == 0.0 {
        0.0
    } else {
        num.weighted_norm(b, k) / d
    }
}

fn factor(cfg: &RunConfig, medium: Medium) -> Result<Factorization, Failure> {
    let ctx = cfg.context().map_err(Failure::config)?;
    Factorization::new(ctx, medium, cfg.solver()).map_err(|e| Failure::stage("factorization", e))
}

fn write_artifact(cfg: &RunConfig, name: &str, contents: &str) -> Result<(), Failure> {
    output::write(&cfg.output.dir, name, contents).map_err(|e| Failure::stage(&format!("writing {name}"), e))
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub config_hash: String,
    pub k: f64,
    pub levels: usize,
    pub leaves: usize,
    pub leaf_ranks: Vec<usize>,
    pub root_rank: usize,
    pub boundary_nodes: usize,
    pub residual: f64,
    pub truncated: usize,
    pub projector: ProjectorMode,
    /// Scattered over incident trace norm on the domain boundary.
    pub scattered_norm_ratio: f64,
    /// `‖P₋[v; ∂ₙv]‖ / ‖[v; ∂ₙv]‖`, zero for a radiating field.
    pub outgoing_defect: f64,
    pub factor_timings: FactorTimings,
    pub solve_timings: SolveTimings,
}

impl SolveSummary {
    pub fn report(&self) -> String {
        format!(
            "root rank {} on {} nodes, residual {:.3e}, scattered/incident {:.3e}, outgoing defect {:.3e}\nfactorization {:.3}s, solve {:.3}s",
            self.root_rank,
            self.boundary_nodes,
            self.residual,
            self.scattered_norm_ratio,
            self.outgoing_defect,
            self.factor_timings.total(),
            self.solve_timings.total()
        )
    }
}

/// `‖P₋x‖ / ‖x‖` in the scaled trace norm.
pub fn outgoing_defect(f: &Factorization, trace: &crate::solver::DNPair) -> f64 {
    let x = crate::linalg::col(&trace.stacked());
    let px = &f.p_minus * &x;
    let s = f.boundary().row_scales(f.ctx.k);
    let norm = |m: &CMat| (0..m.nrows()).map(|i| (m[(i, 0)] * s[i]).norm_sqr()).sum::<f64>().sqrt();
    let d = norm(&x);
    if d == 0.0 {
        0.0
    } else {
        norm(&px) / d
    }
}

/// Factor, solve and write `total_field.csv`, `scattered_boundary.csv`,
/// `scattered_probes.csv` and `summary.json`.
pub fn solve(cfg: &RunConfig) -> Result<SolveSummary, Failure> {
    let medium = cfg.medium.medium().map_err(Failure::config)?;
    let f = factor(cfg, medium)?;
    let wave = cfg.incident.wave();
    let probes = cfg.probes();
    let s = f
        .solve(&wave, &Outputs { interior: Some(cfg.output.grid), exterior: probes.clone() })
        .map_err(|e| Failure::stage("solve", e))?;
    let hash = cfg.hash();
    let summary = SolveSummary {
        config_hash: hash.clone(),
        k: f.ctx.k,
        levels: cfg.tree.levels,
        leaves: f.leaves.len(),
        leaf_ranks: f.leaf_ranks(),
        root_rank: s.diagnostics.root_rank,
        boundary_nodes: f.boundary().len(),
        residual: s.diagnostics.residual,
        truncated: s.diagnostics.truncated,
        projector: s.diagnostics.projector,
        scattered_norm_ratio: weighted_ratio(&s.scattered_trace, &s.incident_data, f.boundary(), f.ctx.k),
        outgoing_defect: outgoing_defect(&f, &s.scattered_trace),
        factor_timings: f.timings,
        solve_timings: s.diagnostics.timings,
    };
    let grid = s.interior.as_ref().expect("interior was requested");
    write_artifact(cfg, "total_field.csv", &output::field_csv(&hash, grid))?;
    write_artifact(cfg, "scattered_boundary.csv", &output::boundary_csv(&hash, f.boundary(), &s.scattered_trace))?;
    write_artifact(cfg, "scattered_probes.csv", &output::probes_csv(&hash, &probes, &s.exterior))?;
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Failure::stage("summary", e))?;
    write_artifact(cfg, "summary.json", &json)?;
    Ok(summary)
}

/// One line of the `check` report.
#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub pass: bool,
}

impl CheckLine {
    fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, limit, pass: measured <= limit }
    }

    fn equal(name: impl Into<String>, measured: usize, expected: usize) -> Self {
        Self { name: name.into(), measured: measured as f64, limit: expected as f64, pass: measured == expected }
    }
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {:<32} measured {:.3e}  limit {:.3e}", self.name, self.measured, self.limit)
    }
}

/// Orthonormal Fourier modes `|n| ≤ p/4` of a `p`-point circle, repeated over `blocks` stacked blocks.
fn resolved_modes(p: usize, blocks: usize) -> CMat {
    let nb = (p / 4) as i64;
    let per = (2 * nb + 1) as usize;
    let scale = 1.0 / (p as f64).sqrt();
    Mat::from_fn(blocks * p, blocks * per, |i, j| {
        if i / p != j / per {
            return C64::new(0.0, 0.0);
        }
        let n = (j % per) as i64 - nb;
        C64::from_polar(scale, std::f64::consts::TAU * (n * (i % p) as i64) as f64 / p as f64)
    })
}

/// Projector and Calderón identities on the unit circle, in operator norm
/// over the modes the `p`-point rule resolves.
pub fn operator_checks(cfg: &RunConfig) -> Result<Vec<CheckLine>, Failure> {
    let c = &cfg.check;
    let ctx = WaveContext::new(c.k.unwrap_or(cfg.wave.k), cfg.wave.epsilon).map_err(Failure::config)?;
    let rule = match c.rule {
        config::CircleRuleName::Spectral => CircleRule::Spectral,
        config::CircleRuleName::Kress => CircleRule::Kress,
    };
    let b = Arc::new(discretize_circle(Point::default(), 1.0, c.p).map_err(Failure::config)?);
    let ops = assemble_layer_ops_with(&ctx, b, rule).map_err(|e| Failure::stage("operator assembly", e))?;
    let (pm, pp) = projectors(&ops);
    let (f2, f1) = (resolved_modes(c.p, 2), resolved_modes(c.p, 1));
    let norm = |m: CMat, f: &CMat| op_norm((&m * f).as_ref()).map_err(|e| Failure::stage("operator norm", e));
    let id = faer::Scale(C64::new(0.25, 0.0)) * Mat::<C64>::identity(c.p, c.p);
    Ok(vec![
        CheckLine::at_most("projector idempotency", norm(&pm * &pm - &pm, &f2)?, c.projector_tol),
        CheckLine::at_most("projector complement", norm(&pp * &pm, &f2)?, c.projector_tol),
        CheckLine::at_most("calderon S T = K^2 - I/4", norm(&ops.s * &ops.t - (&ops.k * &ops.k - &id), &f1)?, c.calderon_tol),
        CheckLine::at_most("calderon T S = K'^2 - I/4", norm(&ops.t * &ops.s - (&ops.kp * &ops.kp - &id), &f1)?, c.calderon_tol),
        CheckLine::at_most("calderon K S = S K'", norm(&ops.k * &ops.s - &ops.s * &ops.kp, &f1)?, c.calderon_tol),
        CheckLine::at_most("calderon T K = K' T", norm(&ops.t * &ops.k - &ops.kp * &ops.t, &f1)?, c.calderon_tol),
    ])
}

fn random_trace(rect: &Rect, q: usize, r: usize, rng: &mut ChaCha8Rng) -> DNTrace {
    let b = Arc::new(discretize_box_boundary(rect, q).expect("valid box"));
    let p = b.len();
    let data = Mat::from_fn(2 * p, r, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    DNTrace::new(b, data).expect("consistent shape")
}

/// Null dimension of merging two random unit-square traces, against `r₁ + r₂ − 2g`.
pub fn merge_bookkeeping(trials: usize, seed: u64) -> Result<CheckLine, Failure> {
    let q = 4;
    let (a, b) = (Rect::new(0.0, 0.0, 1.0, 1.0), Rect::new(1.0, 0.0, 2.0, 1.0));
    let mut segs = Vec::new();
    for (s, e) in box_edges(&Rect::new(0.0, 0.0, 2.0, 1.0)) {
        let n = s.dist(e).round() as usize;
        for i in 0..n {
            let t = |u: f64| Point::new(s.x + (e.x - s.x) * u, s.y + (e.y - s.y) * u);
            segs.push((t(i as f64 / n as f64), t((i + 1) as f64 / n as f64)));
        }
    }
    let parent = Arc::new(BoundarySampling::from_segments(&segs, q, true).map_err(|e| Failure::stage("merge check", e))?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..trials {
        let (r1, r2) = (rng.gen_range(8..20), rng.gen_range(8..20));
        let g1 = random_trace(&a, q, r1, &mut rng);
        let g2 = random_trace(&b, q, r2, &mut rng);
        let m = merge_pair(&g1, &g2, parent.clone(), 1.0, 1e-12, None).map_err(|e| Failure::stage("merge check", e))?;
        if m.stats.null_dim != r1 + r2 - 2 * q {
            mismatches += 1;
        }
    }
    Ok(CheckLine::equal(format!("merge null dimension ({trials} trials)"), mismatches, 0))
}

pub fn fd_bookkeeping(cfg: &RunConfig) -> Vec<CheckLine> {
    let ctx = WaveContext::new(cfg.wave.k, cfg.wave.epsilon).expect("validated");
    let side = cfg.medium.side / (1usize << cfg.tree.levels) as f64;
    let rect = Rect::square(0.0, 0.0, side);
    [4, 6, 8, 12]
        .iter()
        .map(|&m| {
            let found = match build_leaf_fd(&ctx, &Medium::homogeneous(rect), &rect, m, m) {
                Ok(leaf) => leaf.rank(),
                Err(crate::Error::DegenerateLeaf { found, .. }) => found,
                Err(_) => 0,
            };
            CheckLine::equal(format!("fd null dimension m={m}"), found, 4 * m)
        })
        .collect()
}

/// A plane wave pushed through a homogeneous tree built with the run's settings.
pub fn plane_wave_survival(cfg: &RunConfig) -> Result<Vec<CheckLine>, Failure> {
    let f = factor(cfg, Medium::homogeneous(cfg.medium.support()))?;
    let wave = crate::solver::IncidentWave::plane(cfg.incident.direction, C64::new(1.0, 0.0));
    let n = cfg.output.grid.min(32);
    let s = f.solve(&wave, &Outputs { interior: Some(n), exterior: Vec::new() }).map_err(|e| Failure::stage("plane-wave solve", e))?;
    let grid = s.interior.as_ref().expect("interior was requested");
    let err = grid.scattered(&f.ctx, &wave).map_err(|e| Failure::stage("plane-wave solve", e))?.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(vec![
        CheckLine::at_most("plane wave scattered ratio", weighted_ratio(&s.scattered_trace, &s.incident_data, f.boundary(), f.ctx.k), 1e-6),
        CheckLine::at_most("plane wave interior max error", err, cfg.check.survival_tol),
    ])
}

pub fn check(cfg: &RunConfig) -> Result<Vec<CheckLine>, Failure> {
    let mut lines = operator_checks(cfg)?;
    lines.extend(fd_bookkeeping(cfg));
    lines.push(merge_bookkeeping(cfg.check.merge_trials, cfg.check.seed)?);
    lines.extend(plane_wave_survival(cfg)?);
    Ok(lines)
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub config_hash: String,
    pub oracle_n_side: usize,
    pub oracle_unknowns: usize,
    pub exterior_error: f64,
    pub interior_error: f64,
    pub tolerance: f64,
    pub interior_tolerance: f64,
    pub twss_seconds: f64,
    pub oracle_seconds: f64,
}

impl CompareReport {
    pub fn pass(&self) -> bool {
        self.exterior_error <= self.tolerance && self.interior_error <= self.interior_tolerance
    }

    pub fn report(&self) -> String {
        let v = |ok: bool| if ok { "PASS" } else { "FAIL" };
        format!(
            "{} exterior scattered field: relative L2 error {:.3e} (tolerance {:.1e})\n{} interior total field: relative L2 error {:.3e} (tolerance {:.1e})\noracle n_side {} with {} unknowns; twss {:.2}s, oracle {:.2}s",
            v(self.exterior_error <= self.tolerance),
            self.exterior_error,
            self.tolerance,
            v(self.interior_error <= self.interior_tolerance),
            self.interior_error,
            self.interior_tolerance,
            self.oracle_n_side,
            self.oracle_unknowns,
            self.twss_seconds,
            self.oracle_seconds
        )
    }
}

/// `‖a − b‖ / ‖b‖`, falling back to `‖a − b‖ / ‖fallback‖` when `b` vanishes.
fn relative_error(a: &[C64], b: &[C64], fallback: &[C64]) -> f64 {
    let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nb = vec_norm(b);
    let den = if nb > 1e-14 * vec_norm(fallback) { nb } else { vec_norm(fallback) };
    if den == 0.0 {
        vec_norm(&d)
    } else {
        vec_norm(&d) / den
    }
}

/// Solve with the factorization and with the dense volume oracle and compare.
pub fn compare(cfg: &RunConfig) -> Result<CompareReport, Failure> {
    let medium = cfg.medium.medium().map_err(Failure::config)?;
    let c = &cfg.compare;
    let support = medium.support();
    let grid = VolumeGrid::new(support, c.n_side).map_err(Failure::config)?;
    let unknowns = grid.points.iter().filter(|&&p| medium.q(p) != 0.0).count();
    if unknowns > ORACLE_UNKNOWN_LIMIT {
        return Err(Failure::config(format!("oracle would need {unknowns} unknowns, above the limit of {ORACLE_UNKNOWN_LIMIT}")));
    }
    let h = grid.spacing();
    let off_node = |x: f64, x0: f64| {
        let t = (x - x0) / h - 0.5;
        (t - t.round()).abs() > 1e-6
    };
    let interior_points = crate::solver::cell_centers(&support, c.grid);
    if interior_points.iter().any(|p| !off_node(p.x, support.x0) && !off_node(p.y, support.y0)) {
        return Err(Failure::config(format!("compare.grid {} shares points with the oracle grid of side {}", c.grid, c.n_side)));
    }

    let probes = cfg.probes();
    let wave = cfg.incident.wave();
    let t = Instant::now();
    let f = factor(cfg, medium)?;
    let s = f
        .solve(&wave, &Outputs { interior: Some(c.grid), exterior: probes.clone() })
        .map_err(|e| Failure::stage("solve", e))?;
    let twss_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let ctx = f.ctx;
    let sigma = solve_lippmann_schwinger(&ctx, &medium, &grid, &wave).map_err(|e| Failure::stage("oracle", e))?;
    let v_probe = eval_scattered_volume(&ctx, &grid, &sigma, &probes);
    let v_inside = eval_scattered_volume(&ctx, &grid, &sigma, &interior_points);
    let oracle_seconds = t.elapsed().as_secs_f64();

    let u_probe = wave.values(&ctx, &probes).map_err(|e| Failure::stage("oracle", e))?;
    let u_inside = wave.values(&ctx, &interior_points).map_err(|e| Failure::stage("oracle", e))?;
    let oracle_total: Vec<C64> = u_inside.iter().zip(&v_inside).map(|(a, b)| a + b).collect();
    let twss_total = &s.interior.as_ref().expect("interior was requested").total;

    let report = CompareReport {
        config_hash: cfg.hash(),
        oracle_n_side: c.n_side,
        oracle_unknowns: unknowns,
        exterior_error: relative_error(&s.exterior, &v_probe, &u_probe),
        interior_error: relative_error(twss_total, &oracle_total, &u_inside),
        tolerance: c.tolerance,
        interior_tolerance: c.interior_tolerance.unwrap_or(c.tolerance),
        twss_seconds,
        oracle_seconds,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::stage("report", e))?;
    write_artifact(cfg, "compare.json", &json)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub k: f64,
    pub levels: usize,
    /// Leaves times squared trace nodes per leaf edge.
    pub n: usize,
    pub factor_seconds: f64,
    /// Leaf construction share of `factor_seconds`.
    pub leaf_seconds: f64,
    /// Coefficient fit, trace assembly and downward pass.
    pub solve_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub config_hash: String,
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of log factorization time against log N.
    pub slope: f64,
    /// The same slope with leaf construction left out.
    pub upward_slope: f64,
    /// Solve over factorization time at the largest wavenumber.
    pub solve_ratio: f64,
}

impl BenchReport {
    pub fn report(&self) -> String {
        let mut s = String::from("       k  L         N   factor (s)   leaves (s)    solve (s)\n");
        for r in &self.rows {
            s += &format!("{:8.2} {:2} {:9} {:12.4} {:12.4} {:12.4}\n", r.k, r.levels, r.n, r.factor_seconds, r.leaf_seconds, r.solve_seconds);
        }
        s += &format!(
            "factorization slope vs N: {:.3} (without leaves {:.3})\nsolve/factorization at largest k: {:.3}",
            self.slope, self.upward_slope, self.solve_ratio
        );
        s
    }
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn bench(cfg: &RunConfig) -> Result<BenchReport, Failure> {
    let b = &cfg.bench;
    if b.wavenumbers.len() < 3 {
        return Err(Failure::config(format!("bench needs at least 3 wavenumbers, got {}", b.wavenumbers.len())));
    }
    if b.levels.len() != b.wavenumbers.len() {
        return Err(Failure::config("bench.levels must list one depth per wavenumber"));
    }
    let medium = cfg.medium.medium().map_err(Failure::config)?;
    let wave = cfg.incident.wave();
    let mut rows = Vec::new();
    for (&k, &levels) in b.wavenumbers.iter().zip(&b.levels) {
        let mut run = cfg.clone();
        run.wave.k = k;
        run.tree.levels = levels;
        let (mut factor_seconds, mut solve_seconds, mut leaf_seconds) = (f64::INFINITY, f64::INFINITY, 0.0);
        let mut n = 0;
        for _ in 0..b.repeats {
            let t = Instant::now();
            let f = factor(&run, medium)?;
            let elapsed = t.elapsed().as_secs_f64();
            if elapsed < factor_seconds {
                factor_seconds = elapsed;
                leaf_seconds = f.timings.leaves;
            }
            n = f.leaves.len() * run.leaf.nodes_per_edge * run.leaf.nodes_per_edge;
            let s = f.solve(&wave, &Outputs { interior: Some(1), exterior: Vec::new() }).map_err(|e| Failure::stage("solve", e))?;
            let t = s.diagnostics.timings;
            solve_seconds = solve_seconds.min(t.coefficients + t.traces + t.downward);
        }
        log::info!("bench k={k} L={levels}: factor {factor_seconds:.3}s, solve {solve_seconds:.4}s");
        rows.push(BenchRow { k, levels, n, factor_seconds, leaf_seconds, solve_seconds });
    }
    let n: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let slope = log_log_slope(&n, &rows.iter().map(|r| r.factor_seconds).collect::<Vec<_>>());
    let upward_slope = log_log_slope(&n, &rows.iter().map(|r| r.factor_seconds - r.leaf_seconds).collect::<Vec<_>>());
    let last = rows.iter().max_by(|a, b| a.k.total_cmp(&b.k)).expect("at least three rows");
    let report = BenchReport { config_hash: cfg.hash(), slope, upward_slope, solve_ratio: last.solve_seconds / last.factor_seconds, rows };
    let mut csv = format!("# config {}\n# k,levels,n,factor_s,leaf_s,solve_s\n", report.config_hash);
    for r in &report.rows {
        csv += &format!(
            "{},{},{},{},{},{}\n",
            output::num(r.k),
            r.levels,
            r.n,
            output::num(r.factor_seconds),
            output::num(r.leaf_seconds),
            output::num(r.solve_seconds)
        );
    }
    write_artifact(cfg, "bench.csv", &csv)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str, dir: &Path) -> RunConfig {
        RunConfig::parse(&format!("[wave]\nk = 6.0\n[tree]\nlevels = 1\n[output]\ndir = {:?}\ngrid = 8\n{extra}", dir.to_str().unwrap())).unwrap()
    }

    #[test]
    fn slope_of_power_law() {
        let x = [10.0, 40.0, 160.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((log_log_slope(&x, &y) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn relative_error_falls_back_when_reference_vanishes() {
        let z = [C64::new(0.0, 0.0); 2];
        let u = [C64::new(3.0, 0.0), C64::new(0.0, 4.0)];
        let a = [C64::new(1e-9, 0.0), C64::new(0.0, 0.0)];
        assert!((relative_error(&a, &z, &u) - 2e-10).abs() < 1e-20);
        assert_eq!(relative_error(&u, &u, &u), 0.0);
    }

    #[test]
    fn homogeneous_solve_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("", dir.path());
        let s = solve(&c).unwrap();
        assert!(s.scattered_norm_ratio <= 1e-6, "{}", s.scattered_norm_ratio);
        for name in ["total_field.csv", "scattered_boundary.csv", "scattered_probes.csv", "summary.json"] {
            let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
            assert!(text.contains(&c.hash()), "{name}");
        }
        let field = std::fs::read_to_string(dir.path().join("total_field.csv")).unwrap();
        assert_eq!(field.lines().count(), 2 + 64);
    }

    #[test]
    fn coarse_circle_fails_operator_checks() {
        let dir = tempfile::tempdir().unwrap();
        let fine = operator_checks(&cfg("[check]\nk = 10.0\n", dir.path())).unwrap();
        assert!(fine.iter().all(|l| l.pass), "{fine:?}");
        let coarse = operator_checks(&cfg("[check]\nk = 10.0\np = 16\n", dir.path())).unwrap();
        assert!(coarse.iter().take(2).all(|l| !l.pass), "{coarse:?}");
    }

    #[test]
    fn bookkeeping_checks_pass() {
        assert!(merge_bookkeeping(5, 3).unwrap().pass);
        let dir = tempfile::tempdir().unwrap();
        assert!(fd_bookkeeping(&cfg("", dir.path())).iter().all(|l| l.pass));
    }

    #[test]
    fn compare_guards() {
        let dir = tempfile::tempdir().unwrap();
        let big = cfg("[medium]\nkind = \"gaussian\"\n[compare]\nn_side = 200\n", dir.path());
        assert_eq!(compare(&big).unwrap_err().code, EXIT_CONFIG);
        let clash = cfg("[compare]\nn_side = 21\ngrid = 21\n", dir.path());
        assert_eq!(compare(&clash).unwrap_err().code, EXIT_CONFIG);
    }

    #[test]
    fn homogeneous_compare_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let r = compare(&cfg("[compare]\nn_side = 16\ngrid = 9\n", dir.path())).unwrap();
        assert_eq!(r.oracle_unknowns, 0);
        assert!(r.pass(), "{r:?}");
        assert!(r.exterior_error < 1e-6 && r.interior_error < 1e-5);
    }

    #[test]
    fn bench_needs_three_wavenumbers() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("[bench]\nwavenumbers = [4.0, 8.0]\nlevels = [1, 2]\n", dir.path());
        assert_eq!(bench(&c).unwrap_err().code, EXIT_CONFIG);
        let c = cfg("[bench]\nwavenumbers = [4.0, 8.0, 16.0]\nlevels = [1, 2]\n", dir.path());
        assert_eq!(bench(&c).unwrap_err().code, EXIT_CONFIG);
    }
}
