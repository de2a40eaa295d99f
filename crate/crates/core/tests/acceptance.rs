//! End-to-end acceptance criteria. Each test prints one `PASS`/`FAIL` line to
//! stderr, past the harness capture, and then asserts the same verdict.

use std::io::Write;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twss::boundary::{assemble_layer_ops, discretize_circle, projectors};
use twss::cli::config::RunConfig;
use twss::cli::{bench, fd_bookkeeping, merge_bookkeeping, operator_checks, outgoing_defect, weighted_ratio, CheckLine};
use twss::linalg::col;
use twss::oracle::{eval_scattered_volume, solve_lippmann_schwinger, VolumeGrid};
use twss::solver::{incident_trace, DNPair, Factorization, IncidentWave, LeafMethod, Outputs};
use twss::{Medium, Point, WaveContext, C64};

// timings are part of several criteria, so the tests take turns
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: &str, pass: bool, detail: String) {
    let line = format!("{id} {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn config(text: &str) -> RunConfig {
    let cfg = RunConfig::parse(text).expect("valid config");
    cfg.validate().expect("valid config");
    cfg
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn summarize(lines: &[CheckLine]) -> String {
    lines.iter().map(|l| format!("{}={:.2e}", l.name.replace(' ', "_"), l.measured)).collect::<Vec<_>>().join(" ")
}

fn rel_l2(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

#[test]
fn a1_projector_algebra() {
    let _turn = serial();
    let cfg = config("[wave]\nk = 2.0\n[check]\np = 128\nprojector_tol = 1e-8\ncalderon_tol = 1e-7\n");
    let t = Instant::now();
    let lines = operator_checks(&cfg).unwrap();
    let seconds = t.elapsed().as_secs_f64();
    let pass = lines.iter().all(|l| l.pass) && seconds < 5.0;
    report("A1", pass, format!("{} time={seconds:.2}s", summarize(&lines)));
    assert!(pass);
}

#[test]
fn a2_entire_wave_reproduction() {
    let _turn = serial();
    let t = Instant::now();
    let ctx = WaveContext::new(2.0, 1e-10).unwrap();
    let b = Arc::new(discretize_circle(Point::default(), 1.0, 128).unwrap());
    let ops = assemble_layer_ops(&ctx, b.clone()).unwrap();
    let (pm, pp) = projectors(&ops);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut keep, mut kill) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let amp = C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        let wave = IncidentWave::plane(rng.gen_range(0.0..std::f64::consts::TAU), amp);
        let u = incident_trace(&wave, &b, &ctx).unwrap();
        let x = col(&u.stacked());
        let apply = |m: &twss::linalg::CMat| {
            let y = m * &x;
            DNPair::from_stacked(&(0..y.nrows()).map(|i| y[(i, 0)]).collect::<Vec<_>>()).unwrap()
        };
        let norm = u.weighted_norm(&b, ctx.k);
        keep = keep.max(apply(&pm).sub(&u).weighted_norm(&b, ctx.k) / norm);
        kill = kill.max(apply(&pp).weighted_norm(&b, ctx.k) / norm);
    }
    let seconds = t.elapsed().as_secs_f64();
    let pass = keep <= 1e-8 && kill <= 1e-8 && seconds < 5.0;
    report("A2", pass, format!("invariance={keep:.2e} annihilation={kill:.2e} time={seconds:.2}s"));
    assert!(pass);
}

#[test]
fn a3_zero_scatterer() {
    let _turn = serial();
    let t = Instant::now();
    let cfg = config(include_str!("../configs/homogeneous.toml"));
    assert_eq!((cfg.wave.k, cfg.tree.levels, cfg.output.grid), (10.0, 2, 64));
    let medium = Medium::homogeneous(cfg.medium.support());
    let f = Factorization::new(cfg.context().unwrap(), medium, cfg.solver()).unwrap();
    let wave = cfg.incident.wave();
    let s = f.solve(&wave, &Outputs { interior: Some(64), exterior: Vec::new() }).unwrap();
    let ratio = weighted_ratio(&s.scattered_trace, &s.incident_data, f.boundary(), f.ctx.k);
    let grid = s.interior.as_ref().unwrap();
    let exact = wave.values(&f.ctx, &grid.points).unwrap();
    let err = grid.total.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let seconds = t.elapsed().as_secs_f64();
    let pass = ratio <= 1e-6 && err <= 1e-5 && seconds < 60.0;
    report("A3", pass, format!("scattered_ratio={ratio:.2e} interior_max_error={err:.2e} time={seconds:.2}s"));
    assert!(pass);
}

/// Scattered probe field of the bump with `directions` plane waves per leaf wavenumber.
fn bump_solution(cfg: &RunConfig, directions: usize) -> (Factorization, Vec<C64>, DNPair) {
    let mut solver = cfg.solver();
    match &mut solver.leaf.method {
        LeafMethod::Collocation { directions: d, .. } => *d = directions,
        LeafMethod::Fd { .. } => panic!("the bump scenario uses collocation leaves"),
    }
    let f = Factorization::new(cfg.context().unwrap(), cfg.medium.medium().unwrap(), solver).unwrap();
    let s = f.solve(&cfg.incident.wave(), &Outputs { interior: None, exterior: cfg.probes() }).unwrap();
    (f, s.exterior, s.scattered_trace)
}

/// Oracle agreement and outgoing-ness share one bump run.
#[test]
fn a4_a7_gaussian_bump() {
    let _turn = serial();
    let t = Instant::now();
    let cfg = config(include_str!("../configs/bump.toml"));
    assert_eq!(cfg.compare.n_side, 96);
    let medium = cfg.medium.medium().unwrap();
    let ctx = cfg.context().unwrap();
    let wave = cfg.incident.wave();
    let probes = cfg.probes();
    assert_eq!(probes.len(), 16);

    let oracle: Vec<Vec<C64>> = [48, 64, cfg.compare.n_side]
        .iter()
        .map(|&n| {
            let grid = VolumeGrid::new(medium.support(), n).unwrap();
            let sigma = solve_lippmann_schwinger(&ctx, &medium, &grid, &wave).unwrap();
            eval_scattered_volume(&ctx, &grid, &sigma, &probes)
        })
        .collect();
    let (d1, d2) = (rel_l2(&oracle[0], &oracle[1]), rel_l2(&oracle[1], &oracle[2]));
    let reference = &oracle[2];

    let (_, coarse, _) = bump_solution(&cfg, 48);
    let (f, fine, trace) = bump_solution(&cfg, 64);
    let (e_coarse, e_fine) = (rel_l2(&coarse, reference), rel_l2(&fine, reference));
    let seconds = t.elapsed().as_secs_f64();
    let pass4 = d2 < d1 && e_fine <= 1e-3 && e_fine < e_coarse && seconds < 600.0;
    report(
        "A4",
        pass4,
        format!(
            "error={e_fine:.3e} (limit 1e-3) coarser_leaves={e_coarse:.3e} oracle_self_differences={d1:.2e},{d2:.2e} time={seconds:.1}s"
        ),
    );

    let defect = outgoing_defect(&f, &trace);
    let pass7 = defect <= 1e-3;
    report("A7", pass7, format!("outgoing_defect={defect:.3e} (limit 1e-3)"));
    assert!(pass4 && pass7, "A4 {pass4}, A7 {pass7}");
}

#[test]
fn a5_dimension_bookkeeping() {
    let _turn = serial();
    let t = Instant::now();
    let cfg = config(include_str!("../configs/homogeneous.toml"));
    let mut lines = fd_bookkeeping(&cfg);
    lines.push(merge_bookkeeping(20, 5).unwrap());
    let seconds = t.elapsed().as_secs_f64();
    let pass = lines.iter().all(|l| l.pass) && seconds < 30.0;
    report("A5", pass, format!("{} time={seconds:.2}s", summarize(&lines)));
    assert!(pass);
}

#[test]
fn a6_complexity_slope() {
    let _turn = serial();
    let t = Instant::now();
    let mut cfg = config(include_str!("../configs/bench.toml"));
    let out = tempfile::tempdir().unwrap();
    cfg.output.dir = out.path().to_path_buf();
    let b = bench(&cfg).unwrap();
    let seconds = t.elapsed().as_secs_f64();
    let pass = (1.2..=1.8).contains(&b.slope) && b.solve_ratio <= 0.2 && seconds < 900.0;
    let sizes: Vec<String> = b.rows.iter().map(|r| format!("{}:{:.3}s", r.n, r.factor_seconds)).collect();
    report(
        "A6",
        pass,
        format!(
            "slope={:.3} (limit [1.2, 1.8]) without_leaves={:.3} solve_ratio={:.4} runs={} time={seconds:.1}s",
            b.slope,
            b.upward_slope,
            b.solve_ratio,
            sizes.join(",")
        ),
    );
    assert!(pass);
}

#[test]
fn a8_multi_incidence_reuse() {
    let _turn = serial();
    let cfg = config(include_str!("../configs/bump.toml"));
    let ctx = cfg.context().unwrap();
    let medium = cfg.medium.medium().unwrap();
    let outputs = Outputs { interior: None, exterior: cfg.probes() };
    let t = Instant::now();
    let shared = Factorization::new(ctx, medium, cfg.solver()).unwrap();
    let factor_seconds = t.elapsed().as_secs_f64();
    let (mut worst, mut slowest) = (0.0f64, 0.0f64);
    for j in 0..5 {
        let wave = IncidentWave::plane(j as f64 * 1.1, one());
        let t = Instant::now();
        let reused = shared.solve(&wave, &outputs).unwrap();
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let fresh = Factorization::new(ctx, medium, cfg.solver()).unwrap().solve(&wave, &outputs).unwrap();
        worst = worst.max(rel_l2(&reused.exterior, &fresh.exterior));
        worst = worst.max(rel_l2(&reused.total_trace.stacked(), &fresh.total_trace.stacked()));
    }
    let ratio = slowest / factor_seconds;
    let pass = worst <= 1e-12 && ratio <= 0.1;
    report("A8", pass, format!("max_difference={worst:.2e} solve/factor={ratio:.4} factor={factor_seconds:.2}s"));
    assert!(pass);
}
