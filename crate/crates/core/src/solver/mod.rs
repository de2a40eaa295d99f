//! Scattering pipeline: factor the domain once, then solve for any incident wave.
//!
//! The root solution space `G` is split by the incident projector into
//! `G₀ = P₋G`. Coefficients `γ` fit the incident data `G₀γ ≈ u₀`, after which
//! the total trace is `Gγ`, the scattered trace `(G − G₀)γ`, and the interior
//! field follows by pushing `γ` down the tree.

mod incident;

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{assemble_layer_ops, eval_green_representation, projectors, BoundarySampling, DNTrace, LayerOperators, Side};
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::leaf::{build_leaf_collocation, build_leaf_fd, compress_basis, gauss_collocation_points, LeafBasis, PlaneWaveBasisSpec};
use crate::linalg::{col, to_vec, CMat, TruncatedSvd};
use crate::medium::{Medium, WaveContext};
use crate::merge::{build_quadtree, downward_pass, reconstruct_interior, upward_pass, MergeStrategy, QuadTree};
use crate::C64;

pub use incident::{incident_trace, DNPair, IncidentKind, IncidentWave};
use incident::{curve_distance, inside_closed};

/// Residual above which the incident data is declared unrepresentable.
pub const ILL_POSED_RESIDUAL: f64 = 1e-2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectorMode {
    /// Fit only the Dirichlet rows of `P₋G`.
    #[default]
    Half,
    /// Fit Dirichlet and Neumann rows.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum LeafMethod {
    /// `m × m` finite-difference mesh per leaf.
    Fd { m: usize },
    /// Plane waves with `directions × wavenumbers` members, `points × points`
    /// Gauss collocation and null-space tolerance `tol`. The wavenumbers
    /// cover `[k·n_min·(1 − spread), k·n_max·(1 + spread)]` over the leaf.
    Collocation { directions: usize, wavenumbers: usize, points: usize, tol: f64, spread: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "FlatLeafConfig", into = "FlatLeafConfig")]
pub struct LeafConfig {
    pub method: LeafMethod,
    /// Gauss–Legendre trace nodes per leaf edge.
    pub nodes_per_edge: usize,
    /// Relative tolerance of the leaf trace compression.
    pub compress: f64,
}

impl Default for LeafConfig {
    fn default() -> Self {
        FlatLeafConfig::default().into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LeafMethodName {
    Fd,
    Collocation,
}

/// Serialized form of [`LeafConfig`]: one flat table, every key optional.
/// Keys that belong to the other method are kept but ignored.
#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FlatLeafConfig {
    method: LeafMethodName,
    m: usize,
    directions: usize,
    wavenumbers: usize,
    points: usize,
    tol: f64,
    spread: f64,
    nodes_per_edge: usize,
    compress: f64,
}

impl Default for FlatLeafConfig {
    fn default() -> Self {
        Self {
            method: LeafMethodName::Collocation,
            m: 16,
            directions: 64,
            wavenumbers: 3,
            points: 12,
            tol: 1e-2,
            spread: 0.0,
            nodes_per_edge: 16,
            compress: 1e-10,
        }
    }
}

impl From<FlatLeafConfig> for LeafConfig {
    fn from(f: FlatLeafConfig) -> Self {
        let method = match f.method {
            LeafMethodName::Fd => LeafMethod::Fd { m: f.m },
            LeafMethodName::Collocation => LeafMethod::Collocation {
                directions: f.directions,
                wavenumbers: f.wavenumbers,
                points: f.points,
                tol: f.tol,
                spread: f.spread,
            },
        };
        Self { method, nodes_per_edge: f.nodes_per_edge, compress: f.compress }
    }
}

impl From<LeafConfig> for FlatLeafConfig {
    fn from(c: LeafConfig) -> Self {
        let mut f = FlatLeafConfig { nodes_per_edge: c.nodes_per_edge, compress: c.compress, ..Default::default() };
        match c.method {
            LeafMethod::Fd { m } => {
                f.method = LeafMethodName::Fd;
                f.m = m;
            }
            LeafMethod::Collocation { directions, wavenumbers, points, tol, spread } => {
                f.method = LeafMethodName::Collocation;
                (f.directions, f.wavenumbers, f.points, f.tol, f.spread) = (directions, wavenumbers, points, tol, spread);
            }
        }
        f
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub levels: usize,
    pub strategy: MergeStrategy,
    /// Relative tolerance of the continuity null space at every merge.
    pub merge_tol: f64,
    /// Optional recompression of merged traces.
    pub merge_compress: Option<f64>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { levels: 2, strategy: MergeStrategy::Quad, merge_tol: 3e-3, merge_compress: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tree: TreeConfig,
    pub leaf: LeafConfig,
    pub projector: ProjectorMode,
    /// Truncation of the coefficient solve; `None` means `10·ε`.
    pub reg_tol: Option<f64>,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("merge tolerance", self.tree.merge_tol)?;
        if let Some(c) = self.tree.merge_compress {
            unit("merge compression", c)?;
        }
        unit("leaf compression", self.leaf.compress)?;
        if let Some(r) = self.reg_tol {
            unit("regularization tolerance", r)?;
        }
        if self.leaf.nodes_per_edge < 4 {
            return Err(Error::InvalidCount { what: "nodes per edge", value: self.leaf.nodes_per_edge });
        }
        match self.leaf.method {
            LeafMethod::Fd { m } if m < 3 => Err(Error::InvalidCount { what: "finite-difference mesh size", value: m }),
            LeafMethod::Collocation { directions, wavenumbers, points, tol, spread } => {
                if directions == 0 || wavenumbers == 0 || points == 0 {
                    return Err(Error::InvalidCount { what: "collocation family size", value: 0 });
                }
                if !(0.0..1.0).contains(&spread) {
                    return Err(Error::InvalidParameter(format!("wavenumber spread must lie in [0, 1), got {spread}")));
                }
                unit("leaf null-space tolerance", tol)
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct FactorTimings {
    pub leaves: f64,
    pub upward: f64,
    pub operators: f64,
    pub split: f64,
}

impl FactorTimings {
    pub fn total(&self) -> f64 {
        self.leaves + self.upward + self.operators + self.split
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SolveTimings {
    pub coefficients: f64,
    pub traces: f64,
    pub downward: f64,
    pub interior: f64,
    pub exterior: f64,
}

impl SolveTimings {
    pub fn total(&self) -> f64 {
        self.coefficients + self.traces + self.downward + self.interior + self.exterior
    }
}

/// `G₀ = P₋G` on the root boundary.
///
/// Both blocks are formed; the projector mode only decides which rows the
/// coefficient fit sees.
pub fn split_top(root: &DNTrace, p_minus: &CMat) -> Result<DNTrace> {
    if p_minus.nrows() != root.data.nrows() || p_minus.ncols() != root.data.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "projector of size {}x{} for a trace with {} rows",
            p_minus.nrows(),
            p_minus.ncols(),
            root.data.nrows()
        )));
    }
    DNTrace::new(root.boundary.clone(), p_minus * &root.data)
}

/// Coefficients from one fit with their diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct CoefficientSolve {
    pub gamma: Vec<C64>,
    pub residual: f64,
    pub truncated: usize,
    pub rank: usize,
    pub projector: ProjectorMode,
}

/// Truncated-SVD fit of `G₀γ ≈ u₀`, reusable across incident waves.
pub struct CoefficientSolver {
    mode: ProjectorMode,
    scales: Vec<f64>,
    rows: usize,
    tsvd: TruncatedSvd,
}

impl CoefficientSolver {
    pub fn new(g0: &DNTrace, k: f64, reg_tol: f64, mode: ProjectorMode) -> Result<Self> {
        let p = g0.nodes();
        let rows = match mode {
            ProjectorMode::Half => p,
            ProjectorMode::Full => 2 * p,
        };
        let scales = g0.boundary.row_scales(k)[..rows].to_vec();
        let a = Mat::from_fn(rows, g0.rank(), |i, j| g0.data[(i, j)] * scales[i]);
        Ok(Self { mode, scales, rows, tsvd: TruncatedSvd::new(a.as_ref(), reg_tol)? })
    }

    pub fn mode(&self) -> ProjectorMode {
        self.mode
    }

    pub fn solve(&self, u0: &DNPair) -> Result<CoefficientSolve> {
        let stacked = u0.stacked();
        if stacked.len() < self.rows {
            return Err(Error::ShapeMismatch(format!("incident data of length {} for {} rows", stacked.len(), self.rows)));
        }
        let b: Vec<C64> = stacked[..self.rows].iter().zip(&self.scales).map(|(v, s)| v * s).collect();
        let bn = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let gamma = self.tsvd.solve(col(&b).as_ref());
        let residual = if bn == 0.0 {
            0.0
        } else {
            let fit = self.tsvd.apply(gamma.as_ref());
            (0..b.len()).map(|i| (fit[(i, 0)] - b[i]).norm_sqr()).sum::<f64>().sqrt() / bn
        };
        if residual > ILL_POSED_RESIDUAL {
            return Err(Error::IllPosed { residual });
        }
        Ok(CoefficientSolve {
            gamma: to_vec(gamma.as_ref()),
            residual,
            truncated: self.tsvd.dropped,
            rank: self.tsvd.rank(),
            projector: self.mode,
        })
    }
}

/// One-shot coefficient fit.
pub fn solve_coefficients(g0: &DNTrace, u0: &DNPair, k: f64, reg_tol: f64, mode: ProjectorMode) -> Result<CoefficientSolve> {
    CoefficientSolver::new(g0, k, reg_tol, mode)?.solve(u0)
}

fn apply(a: &CMat, gamma: &[C64]) -> Result<Vec<C64>> {
    if a.ncols() != gamma.len() {
        return Err(Error::ShapeMismatch(format!("{} coefficients for {} columns", gamma.len(), a.ncols())));
    }
    Ok(to_vec((a * col(gamma)).as_ref()))
}

/// `(G − G₀)γ`.
pub fn scattered_trace(root: &DNTrace, g0: &DNTrace, gamma: &[C64]) -> Result<DNPair> {
    if root.data.shape() != g0.data.shape() {
        return Err(Error::ShapeMismatch("root and incident traces differ in shape".into()));
    }
    DNPair::from_stacked(&apply(&(&root.data - &g0.data), gamma)?)
}

/// Scattered field outside the domain from its boundary data.
pub fn evaluate_scattered_exterior(
    ctx: &WaveContext,
    boundary: &BoundarySampling,
    scattered: &DNPair,
    targets: &[Point],
) -> Result<Vec<C64>> {
    if let Some(t) = targets.iter().find(|&&t| inside_closed(boundary, t)) {
        return Err(Error::TargetInsideDomain { x: t.x, y: t.y });
    }
    Ok(eval_green_representation(ctx, boundary, &scattered.dirichlet, &scattered.neumann, targets, Side::Exterior)?.values)
}

/// Cell centres of an `n × n` grid on `rect`, row index `iy·n + ix`.
pub fn cell_centers(rect: &Rect, n: usize) -> Vec<Point> {
    let (hx, hy) = (rect.width() / n as f64, rect.height() / n as f64);
    (0..n)
        .flat_map(|iy| (0..n).map(move |ix| Point::new(rect.x0 + (ix as f64 + 0.5) * hx, rect.y0 + (iy as f64 + 0.5) * hy)))
        .collect()
}

/// Interior total field on a cell-centred grid.
#[derive(Clone, Debug, Serialize)]
pub struct FieldGrid {
    pub n: usize,
    pub points: Vec<Point>,
    pub total: Vec<C64>,
}

impl FieldGrid {
    /// Total minus the analytic incident wave.
    pub fn scattered(&self, ctx: &WaveContext, wave: &IncidentWave) -> Result<Vec<C64>> {
        let u0 = wave.values(ctx, &self.points)?;
        Ok(self.total.iter().zip(u0).map(|(u, v)| u - v).collect())
    }
}

/// What to evaluate besides the boundary traces.
#[derive(Clone, Debug, Default)]
pub struct Outputs {
    /// Side of the interior cell-centred grid.
    pub interior: Option<usize>,
    pub exterior: Vec<Point>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub residual: f64,
    pub truncated: usize,
    pub fit_rank: usize,
    pub projector: ProjectorMode,
    pub root_rank: usize,
    pub timings: SolveTimings,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScatteringSolution {
    pub wave: IncidentWave,
    pub gamma: Vec<C64>,
    pub total_trace: DNPair,
    /// Incident component `G₀γ` recovered from the solution space.
    pub incident_trace: DNPair,
    /// Analytic incident data the fit was asked to match.
    pub incident_data: DNPair,
    pub scattered_trace: DNPair,
    pub interior: Option<FieldGrid>,
    pub exterior: Vec<C64>,
    pub diagnostics: Diagnostics,
}

/// Everything that does not depend on the incident wave.
pub struct Factorization {
    pub ctx: WaveContext,
    pub medium: Medium,
    pub config: SolverConfig,
    pub tree: QuadTree,
    pub leaves: Vec<LeafBasis>,
    pub operators: LayerOperators,
    pub p_minus: CMat,
    pub g0: DNTrace,
    pub timings: FactorTimings,
    reg_tol: f64,
    fit: CoefficientSolver,
    full_fit: OnceLock<Result<CoefficientSolver>>,
}

fn build_leaf(ctx: &WaveContext, medium: &Medium, rect: &Rect, cfg: &LeafConfig) -> Result<LeafBasis> {
    let q = cfg.nodes_per_edge;
    let raw = match cfg.method {
        LeafMethod::Fd { m } => build_leaf_fd(ctx, medium, rect, m, q)?,
        LeafMethod::Collocation { directions, wavenumbers, points, tol, spread } => {
            let colloc = gauss_collocation_points(rect, points);
            let corners = [Point::new(rect.x0, rect.y0), Point::new(rect.x1, rect.y0), Point::new(rect.x1, rect.y1), Point::new(rect.x0, rect.y1)];
            let probe: Vec<Point> = colloc.iter().copied().chain(corners).collect();
            let (lo, hi) = medium.n_range(&probe);
            let spec = PlaneWaveBasisSpec::equispaced(ctx.k, (lo * (1.0 - spread), hi * (1.0 + spread)), directions, wavenumbers)?;
            build_leaf_collocation(ctx, medium, rect, &spec, &colloc, tol, q)?
        }
    };
    compress_basis(&raw, ctx, cfg.compress)
}

impl Factorization {
    /// Factor the support box of `medium`.
    pub fn new(ctx: WaveContext, medium: Medium, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let domain = medium.support();
        if !domain.is_square() {
            return Err(Error::UnsupportedGeometry("the domain must be a square".into()));
        }
        let mut tree = build_quadtree(&domain, config.tree.levels, config.leaf.nodes_per_edge, config.tree.strategy)?;

        let t = Instant::now();
        let leaves = tree
            .leaf_rects()
            .par_iter()
            .map(|r| build_leaf(&ctx, &medium, r, &config.leaf))
            .collect::<Result<Vec<_>>>()?;
        let leaves_time = t.elapsed().as_secs_f64();

        let t = Instant::now();
        upward_pass(&mut tree, &leaves, ctx.k, config.tree.merge_tol, config.tree.merge_compress)?;
        let upward_time = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let root = tree.root_node().trace.clone().expect("upward pass fills the root");
        let operators = assemble_layer_ops(&ctx, root.boundary.clone())?;
        let (p_minus, _) = projectors(&operators);
        let operators_time = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let g0 = split_top(&root, &p_minus)?;
        let reg_tol = config.reg_tol.unwrap_or(10.0 * ctx.epsilon);
        let fit = CoefficientSolver::new(&g0, ctx.k, reg_tol, config.projector)?;
        let split_time = t.elapsed().as_secs_f64();

        log::info!(
            "factored {} leaves, root rank {} on {} nodes in {:.3}s",
            leaves.len(),
            root.rank(),
            root.nodes(),
            leaves_time + upward_time + operators_time + split_time
        );
        Ok(Self {
            ctx,
            medium,
            config,
            tree,
            leaves,
            operators,
            p_minus,
            g0,
            timings: FactorTimings { leaves: leaves_time, upward: upward_time, operators: operators_time, split: split_time },
            reg_tol,
            fit,
            full_fit: OnceLock::new(),
        })
    }

    pub fn domain(&self) -> Rect {
        self.tree.root_node().rect
    }

    pub fn root_trace(&self) -> &DNTrace {
        self.tree.root_node().trace.as_ref().expect("factored tree has a root trace")
    }

    pub fn boundary(&self) -> &Arc<BoundarySampling> {
        &self.root_trace().boundary
    }

    /// Trace rank of every leaf.
    pub fn leaf_ranks(&self) -> Vec<usize> {
        self.leaves.iter().map(|l| l.rank()).collect()
    }

    fn coefficients(&self, u0: &DNPair) -> Result<CoefficientSolve> {
        match self.fit.solve(u0) {
            Err(Error::IllPosed { residual }) if self.fit.mode() == ProjectorMode::Half => {
                log::warn!("half-projector fit left residual {residual:.3e}; retrying with the full projector");
                let full = self
                    .full_fit
                    .get_or_init(|| CoefficientSolver::new(&self.g0, self.ctx.k, self.reg_tol, ProjectorMode::Full));
                full.as_ref().map_err(Clone::clone)?.solve(u0)
            }
            other => other,
        }
    }

    /// Total field at interior points, grouped by leaf.
    pub fn interior_field(&self, gamma: &[C64], points: &[Point]) -> Result<Vec<C64>> {
        let leaf_gamma = downward_pass(&self.tree, &col(gamma))?;
        self.interior_from_leaves(&leaf_gamma, points)
    }

    fn interior_from_leaves(&self, leaf_gamma: &[CMat], points: &[Point]) -> Result<Vec<C64>> {
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); self.leaves.len()];
        for (i, &p) in points.iter().enumerate() {
            let j = self.tree.locate(p).ok_or(Error::TargetOutsideLeaf { x: p.x, y: p.y })?;
            groups[j].push(i);
        }
        let parts = groups
            .par_iter()
            .enumerate()
            .map(|(j, idx)| {
                let pts: Vec<Point> = idx.iter().map(|&i| points[i]).collect();
                reconstruct_interior(&self.leaves[j], &to_vec(leaf_gamma[j].as_ref()), &pts)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = vec![C64::new(0.0, 0.0); points.len()];
        for (idx, vals) in groups.iter().zip(parts) {
            for (&i, v) in idx.iter().zip(vals) {
                out[i] = v;
            }
        }
        Ok(out)
    }

    /// Solve for one incident wave against this factorization.
    pub fn solve(&self, wave: &IncidentWave, outputs: &Outputs) -> Result<ScatteringSolution> {
        let domain = self.domain();
        if let IncidentKind::Monopole { source } = wave.kind {
            if domain.outer_distance(source) <= 0.0 || curve_distance(self.boundary(), source) == 0.0 {
                return Err(Error::SourceOnBoundary);
            }
        }
        if let Some(t) = outputs.exterior.iter().find(|t| domain.contains(**t)) {
            return Err(Error::TargetInsideDomain { x: t.x, y: t.y });
        }
        let mut timings = SolveTimings::default();

        let t = Instant::now();
        let incident_data = incident_trace(wave, self.boundary(), &self.ctx)?;
        let fit = self.coefficients(&incident_data)?;
        timings.coefficients = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let root = self.root_trace();
        let total_trace = DNPair::from_stacked(&apply(&root.data, &fit.gamma)?)?;
        let incident_component = DNPair::from_stacked(&apply(&self.g0.data, &fit.gamma)?)?;
        let scattered = total_trace.sub(&incident_component);
        timings.traces = t.elapsed().as_secs_f64();

        let interior = match outputs.interior {
            Some(n) => {
                let t = Instant::now();
                let leaf_gamma = downward_pass(&self.tree, &col(&fit.gamma))?;
                timings.downward = t.elapsed().as_secs_f64();
                let t = Instant::now();
                let points = cell_centers(&domain, n);
                let total = self.interior_from_leaves(&leaf_gamma, &points)?;
                timings.interior = t.elapsed().as_secs_f64();
                Some(FieldGrid { n, points, total })
            }
            None => None,
        };

        let t = Instant::now();
        let exterior = if outputs.exterior.is_empty() {
            Vec::new()
        } else {
            evaluate_scattered_exterior(&self.ctx, self.boundary(), &scattered, &outputs.exterior)?
        };
        timings.exterior = t.elapsed().as_secs_f64();

        log::debug!("solve residual {:.3e}, {} directions truncated", fit.residual, fit.truncated);
        Ok(ScatteringSolution {
            wave: *wave,
            diagnostics: Diagnostics {
                residual: fit.residual,
                truncated: fit.truncated,
                fit_rank: fit.rank,
                projector: fit.projector,
                root_rank: root.rank(),
                timings,
            },
            gamma: fit.gamma,
            total_trace,
            incident_trace: incident_component,
            incident_data,
            scattered_trace: scattered,
            interior,
            exterior,
        })
    }
}

/// Factor and solve in one call.
pub fn solve_vsp(
    ctx: WaveContext,
    medium: Medium,
    config: SolverConfig,
    wave: &IncidentWave,
    outputs: &Outputs,
) -> Result<(Factorization, ScatteringSolution)> {
    let f = Factorization::new(ctx, medium, config)?;
    let s = f.solve(wave, outputs)?;
    Ok((f, s))
}
