//! Experiment configuration: a TOML file, a named preset, or both, with every
//! default materialized so that reports are self-describing.

use std::path::{Path, PathBuf};

use bargmann_lens::model_bundle::BallDomain;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown preset `{name}` (expected one of: {})", PRESETS.join(", "))]
    UnknownPreset { name: String },
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

pub const PRESETS: [&str; 5] = ["model-check", "torus-n1", "cp1", "torus-n2", "torus-n2-ladder"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub family: FamilyConfig,
    #[serde(default)]
    pub ladder: LadderConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub model_check: ModelCheckConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Where the files go is not part of the experiment: excluded from the
    /// materialized config and its hash.
    #[serde(default, skip_serializing)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Torus,
    Cp1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Complex dimension; the projective line is always 1.
    #[serde(default = "one")]
    pub n: usize,
}

fn one() -> usize {
    1
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self { kind: BackendKind::Torus, n: 1 }
    }
}

/// Complex numbers are written `[re, im]`.
pub type ComplexPair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// `θ_{j_1}(z_1) ⋯ θ_{j_n}(z_n)`.
    Theta { js: Vec<u32> },
    /// `θ_j - θ_{k-j}` on the one-dimensional torus.
    OddTheta { j: u32 },
    /// Peaked kernel combination vanishing at the chart center; offsets are
    /// in chart units (`g_k`-scale), one complex vector per peak.
    Coherent { offsets: Vec<Vec<ComplexPair>>, weights: Vec<ComplexPair> },
    /// `P(ζ)` in the affine trivialization. With `random_degree` the
    /// coefficients are drawn from the run seed instead.
    Cp1Poly {
        #[serde(default)]
        coeffs: Vec<ComplexPair>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        random_degree: Option<usize>,
    },
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig::OddTheta { j: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub powers: Vec<u32>,
    /// Shared chart center, real interleaved coordinates; empty means the
    /// origin.
    #[serde(default)]
    pub center: Vec<f64>,
    /// Per-rung centers; overrides `center` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Vec<f64>>>,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self { powers: vec![4, 16, 64], center: vec![0.0, 0.0], centers: None }
    }
}

impl LadderConfig {
    pub fn center_of(&self, rung: usize) -> &[f64] {
        match &self.centers {
            Some(c) => &c[rung],
            None => &self.center,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points_per_axis: usize,
    pub radius: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { points_per_axis: 129, radius: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Seminorm order for rung distances.
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_subball")]
    pub subball_radius: f64,
    /// Transversality level as a fraction of `max |σ|`.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Zero loci, symplectic margins and curvature (complex dimension ≥ 2).
    #[serde(default)]
    pub zero_set: bool,
    /// Points per axis of the coarser grid used for the pulled-back
    /// connection, which needs several transports per node.
    #[serde(default = "default_connection_points")]
    pub connection_points_per_axis: usize,
}

fn default_order() -> usize {
    1
}
fn default_subball() -> f64 {
    0.5
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_connection_points() -> usize {
    17
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            order: default_order(),
            subball_radius: default_subball(),
            epsilon: default_epsilon(),
            zero_set: false,
            connection_points_per_axis: default_connection_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCheckConfig {
    #[serde(default = "default_polynomials")]
    pub polynomials: usize,
    #[serde(default = "default_max_degree")]
    pub max_degree: usize,
}

fn default_polynomials() -> usize {
    20
}
fn default_max_degree() -> usize {
    5
}

impl Default for ModelCheckConfig {
    fn default() -> Self {
        Self { polynomials: default_polynomials(), max_degree: default_max_degree() }
    }
}

/// Acceptance thresholds. A check is only emitted when its threshold is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    // model-check
    #[serde(default = "some_1e12", skip_serializing_if = "Option::is_none")]
    pub model_curvature: Option<f64>,
    #[serde(default = "default_fd_order", skip_serializing_if = "Option::is_none")]
    pub fd_order: Option<[f64; 2]>,
    #[serde(default = "some_1e12", skip_serializing_if = "Option::is_none")]
    pub radial_flatness: Option<f64>,
    #[serde(default = "some_1e8", skip_serializing_if = "Option::is_none")]
    pub holomorphy_gap: Option<f64>,
    // sweep
    #[serde(default)]
    pub require_cauchy: bool,
    /// Limit candidate's dbar defect at most this fraction of the first
    /// rung's, or below `dbar_floor`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dbar_ratio: Option<f64>,
    #[serde(default = "default_dbar_floor")]
    pub dbar_floor: f64,
    /// Every structure deviation (C⁰ and C¹) on every rung.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure_deviation: Option<f64>,
    /// Range for the log-log slope of the C⁰ metric deviation against `k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure_slope: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_convergence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symplectic_margin: Option<f64>,
    /// Transversality margin must exceed this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transversality: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature_ratio: Option<f64>,
    /// Rungs below this power are reported but do not enter the curvature
    /// ratio check.
    #[serde(default)]
    pub curvature_ratio_min_k: u32,
}

fn some_1e12() -> Option<f64> {
    Some(1e-12)
}
fn some_1e8() -> Option<f64> {
    Some(1e-8)
}
fn default_fd_order() -> Option<[f64; 2]> {
    Some([1.8, 2.2])
}
fn default_dbar_floor() -> f64 {
    1e-10
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            model_curvature: some_1e12(),
            fd_order: default_fd_order(),
            radial_flatness: some_1e12(),
            holomorphy_gap: some_1e8(),
            require_cauchy: false,
            dbar_ratio: None,
            dbar_floor: default_dbar_floor(),
            structure_deviation: None,
            structure_slope: None,
            seed_convergence: None,
            symplectic_margin: None,
            transversality: None,
            curvature_ratio: None,
            curvature_ratio_min_k: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}


/// Overrides from the command line, applied after the file and preset.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub k_ladder: Option<Vec<u32>>,
    pub center: Option<Vec<f64>>,
    pub grid: Option<usize>,
    pub epsilon: Option<f64>,
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let c = |re: f64, im: f64| [re, im];
        let mut cfg = ExperimentConfig::default();
        match name {
            "model-check" => {}
            "torus-n1" => {
                cfg.thresholds.require_cauchy = true;
                cfg.thresholds.dbar_ratio = Some(0.5);
                cfg.thresholds.structure_deviation = Some(1e-10);
            }
            "cp1" => {
                cfg.backend = BackendConfig { kind: BackendKind::Cp1, n: 1 };
                cfg.family = FamilyConfig::Cp1Poly { coeffs: vec![], random_degree: Some(3) };
                cfg.ladder = LadderConfig { powers: vec![8, 32, 128], center: vec![0.3, 0.2], centers: None };
                cfg.grid = GridConfig { points_per_axis: 33, radius: 0.9 };
                cfg.thresholds.structure_slope = Some([-1.3, -0.7]);
            }
            "torus-n2" | "torus-n2-ladder" => {
                cfg.backend = BackendConfig { kind: BackendKind::Torus, n: 2 };
                cfg.family = FamilyConfig::Coherent {
                    offsets: vec![vec![c(0.6, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.6)]],
                    weights: vec![c(1.0, 0.0), c(1.0, 0.0)],
                };
                cfg.ladder.center = vec![0.0; 4];
                cfg.grid = GridConfig { points_per_axis: 33, radius: 0.9 };
                cfg.diagnostics.zero_set = true;
                cfg.thresholds.seed_convergence = Some(0.95);
                cfg.thresholds.symplectic_margin = Some(0.5);
                cfg.thresholds.transversality = Some(0.0);
                if name == "torus-n2" {
                    cfg.ladder.powers = vec![16];
                } else {
                    cfg.ladder.powers = vec![4, 16, 64, 256];
                    cfg.thresholds.curvature_ratio = Some(3.0);
                    cfg.thresholds.curvature_ratio_min_k = 16;
                }
            }
            other => return Err(ConfigError::UnknownPreset { name: other.to_string() }),
        }
        Ok(cfg)
    }

    /// Preset (or defaults) first, then the file's sections replace whole
    /// top-level tables, then command-line overrides.
    pub fn load(path: Option<&Path>, preset: Option<&str>, overrides: &Overrides) -> Result<Self, ConfigError> {
        let mut cfg = match preset {
            Some(p) => Self::preset(p)?,
            None => Self::default(),
        };
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
            cfg = cfg.merge_toml(&text)?;
        }
        cfg.apply(overrides);
        if cfg.ladder.center.is_empty() {
            cfg.ladder.center = vec![0.0; 2 * cfg.complex_dim()];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn merge_toml(self, text: &str) -> Result<Self, ConfigError> {
        let file: toml::Table = toml::from_str(text)?;
        let mut base = toml::Table::try_from(&self).expect("config serializes to a table");
        for (key, value) in file {
            base.insert(key, value);
        }
        Ok(base.try_into()?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(k) = &o.k_ladder {
            self.ladder.powers = k.clone();
            self.ladder.centers = None;
        }
        if let Some(c) = &o.center {
            self.ladder.center = c.clone();
            self.ladder.centers = None;
        }
        if let Some(g) = o.grid {
            self.grid.points_per_axis = g;
        }
        if let Some(e) = o.epsilon {
            self.diagnostics.epsilon = e;
        }
    }

    pub fn complex_dim(&self) -> usize {
        match self.backend.kind {
            BackendKind::Torus => self.backend.n,
            BackendKind::Cp1 => 1,
        }
    }

    pub fn domain(&self) -> Result<BallDomain, ConfigError> {
        BallDomain::new(self.complex_dim(), self.grid.radius, self.grid.points_per_axis)
            .map_err(|e| invalid("grid", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.complex_dim();
        if self.backend.kind == BackendKind::Torus && !(1..=2).contains(&n) {
            return Err(invalid("backend.n", format!("torus dimension {n} outside 1..=2")));
        }
        if self.backend.kind == BackendKind::Cp1 && self.backend.n != 1 {
            return Err(invalid("backend.n", "the projective line has n = 1"));
        }
        let p = &self.ladder.powers;
        if p.is_empty() {
            return Err(invalid("ladder.powers", "empty ladder"));
        }
        if p[0] == 0 {
            return Err(invalid("ladder.powers", "powers must be positive"));
        }
        if p.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("ladder.powers", format!("{p:?} is not strictly increasing")));
        }
        let centers: Vec<&[f64]> = (0..p.len()).map(|i| self.ladder.center_of(i)).collect();
        if let Some(c) = &self.ladder.centers {
            if c.len() != p.len() {
                return Err(invalid("ladder.centers", format!("{} centers for {} rungs", c.len(), p.len())));
            }
        }
        for c in &centers {
            if c.len() != 2 * n || c.iter().any(|x| !x.is_finite()) {
                return Err(invalid("ladder.center", format!("expected {} finite coordinates, got {c:?}", 2 * n)));
            }
        }
        if !(self.grid.radius > 0.0 && self.grid.radius <= 1.0) {
            return Err(invalid("grid.radius", format!("{} outside (0, 1]", self.grid.radius)));
        }
        self.domain()?;
        let d = &self.diagnostics;
        if d.order > 3 {
            return Err(invalid("diagnostics.order", format!("{} exceeds 3", d.order)));
        }
        if !(d.subball_radius > 0.0 && d.subball_radius < self.grid.radius) {
            return Err(invalid("diagnostics.subball_radius", format!("{} outside (0, grid radius)", d.subball_radius)));
        }
        if !(d.epsilon > 0.0 && d.epsilon.is_finite()) {
            return Err(invalid("diagnostics.epsilon", "must be positive"));
        }
        BallDomain::new(n, self.grid.radius, d.connection_points_per_axis)
            .map_err(|e| invalid("diagnostics.connection_points_per_axis", e.to_string()))?;
        if self.model_check.polynomials == 0 {
            return Err(invalid("model_check.polynomials", "must be positive"));
        }
        self.validate_family(n)?;
        self.validate_thresholds()
    }

    fn validate_family(&self, n: usize) -> Result<(), ConfigError> {
        let kmin = self.ladder.powers[0];
        let torus = self.backend.kind == BackendKind::Torus;
        match &self.family {
            FamilyConfig::Theta { js } => {
                if !torus {
                    return Err(invalid("family", "theta sections need the torus backend"));
                }
                if js.len() != n {
                    return Err(invalid("family.js", format!("{} indices for dimension {n}", js.len())));
                }
                if let Some(j) = js.iter().find(|&&j| j >= kmin) {
                    return Err(invalid("family.js", format!("index {j} not below the smallest power {kmin}")));
                }
            }
            FamilyConfig::OddTheta { j } => {
                if !torus || n != 1 {
                    return Err(invalid("family", "odd theta pairs need the one-dimensional torus"));
                }
                if *j == 0 || *j >= kmin {
                    return Err(invalid("family.j", format!("{j} outside 1..{kmin}")));
                }
                if let Some(k) = self.ladder.powers.iter().find(|&&k| 2 * j == k) {
                    return Err(invalid("family.j", format!("θ_{j} is its own partner at k = {k}")));
                }
            }
            FamilyConfig::Coherent { offsets, weights } => {
                if !torus {
                    return Err(invalid("family", "coherent families need the torus backend"));
                }
                if offsets.is_empty() || offsets.len() != weights.len() {
                    return Err(invalid("family", format!("{} offsets, {} weights", offsets.len(), weights.len())));
                }
                if offsets.iter().any(|o| o.len() != n) {
                    return Err(invalid("family.offsets", format!("each offset needs {n} complex entries")));
                }
            }
            FamilyConfig::Cp1Poly { coeffs, random_degree } => {
                if torus {
                    return Err(invalid("family", "polynomial sections need the cp1 backend"));
                }
                let degree = match random_degree {
                    Some(d) => *d,
                    None if coeffs.is_empty() => return Err(invalid("family.coeffs", "no coefficients")),
                    None => coeffs.len() - 1,
                };
                if degree > kmin as usize {
                    return Err(invalid("family", format!("degree {degree} exceeds the smallest power {kmin}")));
                }
            }
        }
        Ok(())
    }

    fn validate_thresholds(&self) -> Result<(), ConfigError> {
        let t = &self.thresholds;
        let positive = [
            ("thresholds.model_curvature", t.model_curvature),
            ("thresholds.radial_flatness", t.radial_flatness),
            ("thresholds.holomorphy_gap", t.holomorphy_gap),
            ("thresholds.dbar_ratio", t.dbar_ratio),
            ("thresholds.dbar_floor", Some(t.dbar_floor)),
            ("thresholds.structure_deviation", t.structure_deviation),
            ("thresholds.seed_convergence", t.seed_convergence),
            ("thresholds.symplectic_margin", t.symplectic_margin),
            ("thresholds.curvature_ratio", t.curvature_ratio),
        ];
        for (field, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(field, format!("tolerance {v} must be positive")));
                }
            }
        }
        if (t.require_cauchy || t.dbar_ratio.is_some()) && self.ladder.powers.len() < 3 {
            return Err(invalid("ladder.powers", "limit checks need at least 3 rungs"));
        }
        if let Some(v) = t.transversality {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid("thresholds.transversality", format!("{v} must be non-negative")));
            }
        }
        for (field, r) in [("thresholds.fd_order", t.fd_order), ("thresholds.structure_slope", t.structure_slope)] {
            if let Some([lo, hi]) = r {
                if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
                    return Err(invalid(field, format!("empty range [{lo}, {hi}]")));
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
