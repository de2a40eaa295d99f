use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::{Point, Rect};
use crate::medium::{Medium, WaveContext};
use crate::solver::{IncidentWave, LeafConfig, ProjectorMode, SolverConfig, TreeConfig};
use crate::C64;

/// Largest number of dense oracle unknowns `compare` agrees to build.
pub const ORACLE_UNKNOWN_LIMIT: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSection {
    pub k: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    1e-10
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncidentKindName {
    #[default]
    Plane,
    Monopole,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncidentSection {
    pub kind: IncidentKindName,
    /// Propagation angle in radians.
    pub direction: f64,
    pub source_x: f64,
    pub source_y: f64,
    pub amplitude_re: f64,
    pub amplitude_im: f64,
}

impl Default for IncidentSection {
    fn default() -> Self {
        Self { kind: IncidentKindName::Plane, direction: 0.0, source_x: 2.0, source_y: 0.0, amplitude_re: 1.0, amplitude_im: 0.0 }
    }
}

impl IncidentSection {
    pub fn wave(&self) -> IncidentWave {
        let a = C64::new(self.amplitude_re, self.amplitude_im);
        match self.kind {
            IncidentKindName::Plane => IncidentWave::plane(self.direction, a),
            IncidentKindName::Monopole => IncidentWave::monopole(Point::new(self.source_x, self.source_y), a),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediumKind {
    #[default]
    Homogeneous,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumSection {
    pub kind: MediumKind,
    pub amplitude: f64,
    pub width: f64,
    pub center_x: f64,
    pub center_y: f64,
    /// Lower-left corner and side of the support square.
    pub x0: f64,
    pub y0: f64,
    pub side: f64,
}

impl Default for MediumSection {
    fn default() -> Self {
        Self { kind: MediumKind::Homogeneous, amplitude: 0.5, width: 0.1, center_x: 0.0, center_y: 0.0, x0: -0.5, y0: -0.5, side: 1.0 }
    }
}

impl MediumSection {
    pub fn support(&self) -> Rect {
        Rect::square(self.x0, self.y0, self.side)
    }

    pub fn medium(&self) -> crate::Result<Medium> {
        if !(self.side > 0.0) {
            return Err(crate::Error::InvalidParameter(format!("support side must be positive, got {}", self.side)));
        }
        match self.kind {
            MediumKind::Homogeneous => Ok(Medium::homogeneous(self.support())),
            MediumKind::Gaussian => Medium::gaussian_bump(self.amplitude, self.width, Point::new(self.center_x, self.center_y), self.support()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectorSection {
    pub mode: ProjectorMode,
    pub reg_tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Side of the cell-centred interior grid.
    pub grid: usize,
    /// Exterior probes on a circle around the support centre.
    pub probes: usize,
    /// Probe radius; defaults to the support side.
    pub probe_radius: Option<f64>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), grid: 64, probes: 16, probe_radius: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircleRuleName {
    Spectral,
    #[default]
    Kress,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    /// Nodes on the unit circle used for the operator checks.
    pub p: usize,
    /// Wavenumber of the operator checks; defaults to the run's.
    pub k: Option<f64>,
    pub rule: CircleRuleName,
    pub projector_tol: f64,
    pub calderon_tol: f64,
    /// Interior max-norm error allowed for a plane wave through the tree.
    pub survival_tol: f64,
    pub merge_trials: usize,
    pub seed: u64,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self { p: 128, k: None, rule: CircleRuleName::Kress, projector_tol: 1e-8, calderon_tol: 1e-7, survival_tol: 1e-5, merge_trials: 20, seed: 7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub n_side: usize,
    /// Relative L2 tolerance on the exterior scattered field.
    pub tolerance: f64,
    /// Relative L2 tolerance on the interior total field; defaults to `tolerance`.
    pub interior_tolerance: Option<f64>,
    /// Side of the shared interior grid; must avoid the oracle's cell centres.
    pub grid: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self { n_side: 64, tolerance: 1e-3, interior_tolerance: None, grid: 21 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub wavenumbers: Vec<f64>,
    /// Tree depth per wavenumber; keep `4^L / k²` fixed for proportional refinement.
    pub levels: Vec<usize>,
    pub repeats: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self { wavenumbers: vec![5.0, 10.0, 20.0], levels: vec![1, 2, 3], repeats: 1 }
    }
}

/// Everything one command needs, parsed from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub wave: WaveSection,
    #[serde(default)]
    pub incident: IncidentSection,
    #[serde(default)]
    pub medium: MediumSection,
    #[serde(default)]
    pub tree: TreeConfig,
    #[serde(default)]
    pub leaf: LeafConfig,
    #[serde(default)]
    pub projector: ProjectorSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub check: CheckSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub bench: BenchSection,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let cfg = Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.to_path_buf(), message },
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse { path: PathBuf::new(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |e: crate::Error| ConfigError::Invalid(e.to_string());
        self.context().map_err(bad)?;
        self.medium.medium().map_err(bad)?;
        self.solver().validate().map_err(bad)?;
        if let Some(r) = self.projector.reg_tol {
            if !(r > 0.0 && r < 1.0) {
                return Err(ConfigError::Invalid(format!("projector.reg_tol must lie in (0, 1), got {r}")));
            }
        }
        if self.output.grid == 0 || self.output.probes == 0 {
            return Err(ConfigError::Invalid("output.grid and output.probes must be positive".into()));
        }
        if let Some(r) = self.output.probe_radius {
            let half_diag = self.medium.side * std::f64::consts::FRAC_1_SQRT_2;
            if !(r > half_diag) {
                return Err(ConfigError::Invalid(format!("output.probe_radius {r} must exceed the support half-diagonal {half_diag:.4}")));
            }
        }
        if self.check.p < 8 || self.check.merge_trials == 0 {
            return Err(ConfigError::Invalid("check.p must be at least 8 and check.merge_trials positive".into()));
        }
        if self.compare.n_side < 2 || self.compare.grid == 0 || !(self.compare.tolerance > 0.0) {
            return Err(ConfigError::Invalid("compare needs n_side ≥ 2, a positive grid and a positive tolerance".into()));
        }
        if self.bench.wavenumbers.iter().any(|k| !(*k > 0.0)) || self.bench.repeats == 0 {
            return Err(ConfigError::Invalid("bench wavenumbers must be positive and repeats at least 1".into()));
        }
        Ok(())
    }

    pub fn context(&self) -> crate::Result<WaveContext> {
        WaveContext::new(self.wave.k, self.wave.epsilon)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { tree: self.tree.clone(), leaf: self.leaf.clone(), projector: self.projector.mode, reg_tol: self.projector.reg_tol }
    }

    pub fn probe_radius(&self) -> f64 {
        self.output.probe_radius.unwrap_or(self.medium.side)
    }

    /// Exterior probes, equally spaced on a circle around the support centre.
    pub fn probes(&self) -> Vec<Point> {
        let c = self.medium.support().center();
        let r = self.probe_radius();
        let n = self.output.probes;
        (0..n)
            .map(|j| {
                let p = Point::polar(r, std::f64::consts::TAU * j as f64 / n as f64);
                Point::new(c.x + p.x, c.y + p.y)
            })
            .collect()
    }

    /// SHA-256 of the parsed configuration, independent of layout and comments.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[wave]\nk = 10.0\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.wave.epsilon, 1e-10);
        assert_eq!(c.solver(), SolverConfig::default());
        assert_eq!(c.output.grid, 64);
        assert_eq!(c.probes().len(), 16);
        assert!((c.probes()[4].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
[wave]
k = 8.0
epsilon = 1e-8

[incident]
kind = "monopole"
source_x = 1.5
source_y = 0.5

[medium]
kind = "gaussian"
amplitude = 0.5
width = 0.1

[tree]
levels = 3
strategy = "pairwise"
merge_tol = 1e-3

[leaf]
method = "fd"
m = 10
nodes_per_edge = 10

[projector]
mode = "full"

[output]
dir = "results"
grid = 32
"#;
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.tree.levels, 3);
        assert_eq!(c.projector.mode, ProjectorMode::Full);
        assert!(matches!(c.incident.wave().kind, crate::solver::IncidentKind::Monopole { .. }));
        let again = RunConfig::parse(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn partial_leaf_section_keeps_other_defaults() {
        let c = RunConfig::parse("[wave]\nk = 1.0\n[leaf]\nnodes_per_edge = 20\n").unwrap();
        let d = LeafConfig::default();
        assert_eq!(c.leaf.nodes_per_edge, 20);
        assert_eq!(c.leaf.method, d.method);
    }

    #[test]
    fn hash_ignores_layout_but_not_values() {
        let a = RunConfig::parse(MINIMAL).unwrap();
        let b = RunConfig::parse("# comment\n[wave]\nk    = 10.0\nepsilon = 1e-10\n").unwrap();
        let c = RunConfig::parse("[wave]\nk = 10.5\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn invalid_configs_rejected() {
        for text in [
            "",
            "[wave]\nk = -1.0\n",
            "[wave]\nk = 1.0\ncolour = 3\n",
            "[wave]\nk = 1.0\n[medium]\nkind = \"gaussian\"\nwidth = 0.4\n",
            "[wave]\nk = 1.0\n[tree]\nmerge_tol = 2.0\n",
            "[wave]\nk = 1.0\n[leaf]\nnodes = 4\n",
            "[wave]\nk = 1.0\n[leaf]\nmethod = \"spectral\"\n",
            "[wave]\nk = 1.0\n[output]\nprobe_radius = 0.6\n",
            "[wave]\nk = 1.0\n[bench]\nwavenumbers = [1.0, 0.0, 2.0]\n",
        ] {
            assert!(RunConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn missing_file_names_the_path() {
        let e = RunConfig::load(Path::new("/nonexistent/run.toml")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/run.toml"));
    }
}
