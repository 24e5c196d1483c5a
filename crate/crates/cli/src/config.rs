//! Experiment configuration: a TOML file with one table per concern. Every
//! key has a default, and the defaults reproduce the worked example
//! (α = 0.6, b = 1/2, ω = [1/6, 1/3], y₀ = sin 2πx).

use std::path::{Path, PathBuf};

use fracobs::regional::{ConstraintBand, EnlargedOptions, Subregion};
use fracobs::sensing::{Sensor, TimeQuadrature, ZoneProfile};
use fracobs::special::sin_pi;
use fracobs::spectral::{dirichlet_basis, project, synthesize, EigenBasis, GridFunction, SpectralState};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("{0}")]
    Syntax(String),
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub sensor: SensorSection,
    pub omega: OmegaSection,
    pub band: BandSection,
    pub initial: InitialSection,
    pub observation: ObservationSection,
    pub check: CheckSection,
    pub reconstruction: ReconstructionSection,
    pub quadrature: QuadratureSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub alpha: f64,
    pub horizon: f64,
    /// Truncation level N. The kernel of mode k decays like 1/|λ_k| ~ k⁻²,
    /// so 20 modes leave about 0.25 % of the first mode's weight.
    pub n_modes: usize,
    pub grid_size: usize,
    pub length: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { alpha: 0.6, horizon: 1.0, n_modes: 20, grid_size: 240, length: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SensorKindSpec {
    Pointwise,
    Zone,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSpec {
    Constant,
    Eigenfunction,
    Csv,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SensorSection {
    pub kind: SensorKindSpec,
    /// b for a pointwise sensor.
    pub position: f64,
    /// D = [a, b] for a zone sensor.
    pub support: [f64; 2],
    pub profile: ProfileSpec,
    /// Value of a constant profile.
    pub value: f64,
    /// Eigenfunction index of an eigenfunction profile.
    pub mode: usize,
    /// Samples of a csv profile on a uniform grid spanning the zone.
    pub samples: Option<PathBuf>,
}

impl Default for SensorSection {
    fn default() -> Self {
        Self {
            kind: SensorKindSpec::Pointwise,
            position: 0.5,
            support: [0.4, 0.6],
            profile: ProfileSpec::Constant,
            value: 1.0,
            mode: 1,
            samples: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OmegaSection {
    pub intervals: Vec<[f64; 2]>,
}

impl Default for OmegaSection {
    fn default() -> Self {
        Self { intervals: vec![[1.0 / 6.0, 1.0 / 3.0]] }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSpec {
    /// |y₀| on ω.
    AbsInitial,
    /// y₀ on ω.
    Initial,
    Zero,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BandSection {
    pub reference: ReferenceSpec,
    pub below: f64,
    pub above: f64,
    /// Explicit β and γ on the ω grid; both or neither.
    pub beta: Option<PathBuf>,
    pub gamma: Option<PathBuf>,
}

impl Default for BandSection {
    fn default() -> Self {
        Self { reference: ReferenceSpec::AbsInitial, below: 1.0, above: 1.0, beta: None, gamma: None }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    /// At most one of the three; none means the "sin2pix" preset.
    pub preset: Option<String>,
    pub mode: Option<usize>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ObservationSection {
    pub n_times: usize,
    pub snapshots: Vec<f64>,
    pub noise: f64,
    pub seed: u64,
}

impl Default for ObservationSection {
    fn default() -> Self {
        Self { n_times: 200, snapshots: vec![0.1, 0.5, 1.0], noise: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSection {
    pub trial_dim: usize,
    pub svd_threshold: f64,
    pub gramian_threshold: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        let d = EnlargedOptions::default();
        Self { trial_dim: 8, svd_threshold: d.svd_threshold, gramian_threshold: d.gramian_threshold }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructionSection {
    pub trial_dim: usize,
    /// Tikhonov shift; absent means 1e-10·trace(Λ)/m.
    pub eps: Option<f64>,
    /// External observation record; absent means simulate from `initial`.
    pub record: Option<PathBuf>,
}

impl Default for ReconstructionSection {
    fn default() -> Self {
        Self { trial_dim: 12, eps: None, record: None }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    pub nodes: usize,
    pub panels: usize,
    pub levels: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let q = TimeQuadrature::default();
        Self { nodes: q.nodes, panels: q.panels, levels: q.levels }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl ExperimentConfig {
    /// Parses TOML text; relative paths inside it are resolved against `base`.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        if let Some(base) = base {
            let fix = |p: &mut Option<PathBuf>| {
                if let Some(path) = p {
                    if path.is_relative() {
                        *path = base.join(&*path);
                    }
                }
            };
            fix(&mut cfg.sensor.samples);
            fix(&mut cfg.band.beta);
            fix(&mut cfg.band.gamma);
            fix(&mut cfg.initial.csv);
            fix(&mut cfg.reconstruction.record);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.to_path_buf(), message: e.to_string() })?;
        Self::from_toml(&text, path.parent()).map_err(|e| match e {
            ConfigError::Syntax(m) => ConfigError::Syntax(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.model;
        if !(m.alpha > 0.0 && m.alpha <= 1.0) {
            return Err(invalid("model.alpha", format!("must lie in (0, 1], got {}", m.alpha)));
        }
        if !(m.horizon > 0.0 && m.horizon.is_finite()) {
            return Err(invalid("model.horizon", format!("must be positive, got {}", m.horizon)));
        }
        if m.n_modes == 0 {
            return Err(invalid("model.n_modes", "must be at least 1"));
        }
        if m.grid_size < 2 {
            return Err(invalid("model.grid_size", format!("must be at least 2, got {}", m.grid_size)));
        }
        if !(m.length > 0.0 && m.length.is_finite()) {
            return Err(invalid("model.length", format!("must be positive, got {}", m.length)));
        }

        let s = &self.sensor;
        match s.kind {
            SensorKindSpec::Pointwise => {
                if !(s.position > 0.0 && s.position < m.length) {
                    return Err(invalid("sensor.position", format!("must lie in (0, {}), got {}", m.length, s.position)));
                }
            }
            SensorKindSpec::Zone => {
                let [a, b] = s.support;
                if !(0.0 <= a && a < b && b <= m.length) {
                    return Err(invalid("sensor.support", format!("need 0 <= a < b <= {}, got [{a}, {b}]", m.length)));
                }
                match s.profile {
                    ProfileSpec::Constant if !s.value.is_finite() => {
                        return Err(invalid("sensor.value", "must be finite"));
                    }
                    ProfileSpec::Eigenfunction if s.mode == 0 => {
                        return Err(invalid("sensor.mode", "eigenfunction indices start at 1"));
                    }
                    ProfileSpec::Csv if s.samples.is_none() => {
                        return Err(invalid("sensor.samples", "a csv profile needs a samples path"));
                    }
                    _ => {}
                }
            }
        }

        if self.omega.intervals.is_empty() {
            return Err(invalid("omega.intervals", "need at least one interval"));
        }
        for &[a, b] in &self.omega.intervals {
            if !(0.0 <= a && a < b && b <= m.length) {
                return Err(invalid("omega.intervals", format!("need 0 <= a < b <= {}, got [{a}, {b}]", m.length)));
            }
        }

        let band = &self.band;
        if band.beta.is_some() != band.gamma.is_some() {
            return Err(invalid("band", "beta and gamma files must be given together"));
        }
        if !(band.below.is_finite() && band.above.is_finite()) {
            return Err(invalid("band", "below and above must be finite"));
        }
        if band.below + band.above < 0.0 {
            return Err(invalid("band", format!("beta > gamma: below + above = {} < 0", band.below + band.above)));
        }

        let init = &self.initial;
        let given = init.preset.is_some() as usize + init.mode.is_some() as usize + init.csv.is_some() as usize;
        if given > 1 {
            return Err(invalid("initial", "give exactly one of preset, mode, csv"));
        }
        if let Some(p) = &init.preset {
            if p != "sin2pix" {
                return Err(invalid("initial.preset", format!("unknown preset \"{p}\" (known: sin2pix)")));
            }
        }
        if let Some(k) = init.mode {
            if k == 0 || k > m.n_modes {
                return Err(invalid("initial.mode", format!("must lie in 1..={}, got {k}", m.n_modes)));
            }
        }

        let o = &self.observation;
        if o.n_times < 2 {
            return Err(invalid("observation.n_times", format!("must be at least 2, got {}", o.n_times)));
        }
        if let Some(&t) = o.snapshots.iter().find(|&&t| !(t > 0.0 && t <= m.horizon)) {
            return Err(invalid("observation.snapshots", format!("times must lie in (0, {}], got {t}", m.horizon)));
        }
        if !(o.noise >= 0.0 && o.noise.is_finite()) {
            return Err(invalid("observation.noise", format!("must be non-negative, got {}", o.noise)));
        }

        let c = &self.check;
        if c.trial_dim == 0 {
            return Err(invalid("check.trial_dim", "must be at least 1"));
        }
        if !(c.svd_threshold > 0.0 && c.svd_threshold < 1.0) {
            return Err(invalid("check.svd_threshold", format!("must lie in (0, 1), got {}", c.svd_threshold)));
        }
        if !(c.gramian_threshold > 0.0 && c.gramian_threshold < 1.0) {
            return Err(invalid("check.gramian_threshold", format!("must lie in (0, 1), got {}", c.gramian_threshold)));
        }

        let r = &self.reconstruction;
        if r.trial_dim == 0 {
            return Err(invalid("reconstruction.trial_dim", "must be at least 1"));
        }
        if let Some(eps) = r.eps {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(invalid("reconstruction.eps", format!("must be non-negative, got {eps}")));
            }
        }

        let q = &self.quadrature;
        if q.nodes == 0 || q.panels == 0 || q.levels == 0 {
            return Err(invalid("quadrature", "nodes, panels and levels must be at least 1"));
        }
        Ok(())
    }

    pub fn time_quadrature(&self) -> TimeQuadrature {
        TimeQuadrature { nodes: self.quadrature.nodes, panels: self.quadrature.panels, levels: self.quadrature.levels }
    }

    pub fn enlarged_options(&self) -> EnlargedOptions {
        EnlargedOptions {
            trial_dim: self.check.trial_dim,
            svd_threshold: self.check.svd_threshold,
            gramian_threshold: self.check.gramian_threshold,
            quadrature: self.time_quadrature(),
        }
    }
}

/// Everything an experiment needs, built from a validated config.
pub struct Setup {
    pub basis: EigenBasis,
    pub sensor: Sensor,
    pub omega: Subregion,
    pub initial: SpectralState,
    pub band: ConstraintBand,
}

impl Setup {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self, BuildError> {
        let m = &cfg.model;
        let basis = dirichlet_basis(m.n_modes, m.grid_size, m.length).map_err(|e| BuildError::at("model", e))?;
        let sensor = build_sensor(cfg, &basis)?;
        let omega = Subregion::new(cfg.omega.intervals.iter().map(|&[a, b]| (a, b)).collect(), m.length)
            .map_err(|e| BuildError::at("omega.intervals", e))?;
        let initial = build_initial(cfg, &basis)?;
        let band = build_band(cfg, &basis, &omega, &initial)?;
        Ok(Self { basis, sensor, omega, initial, band })
    }
}

/// A library error tagged with the config field it came from.
#[derive(Debug)]
pub struct BuildError {
    pub field: &'static str,
    pub source: fracobs::Error,
}

impl BuildError {
    fn at(field: &'static str, source: fracobs::Error) -> Self {
        Self { field, source }
    }
}

impl std::fmt::Display for BuildError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.source)
    }
}

fn build_sensor(cfg: &ExperimentConfig, basis: &EigenBasis) -> Result<Sensor, BuildError> {
    let s = &cfg.sensor;
    let sensor = match s.kind {
        SensorKindSpec::Pointwise => Sensor::pointwise(basis, s.position),
        SensorKindSpec::Zone => {
            let profile = match s.profile {
                ProfileSpec::Constant => ZoneProfile::Constant(s.value),
                ProfileSpec::Eigenfunction => ZoneProfile::Eigenfunction(s.mode),
                ProfileSpec::Csv => {
                    let path = s.samples.as_deref().unwrap_or(Path::new(""));
                    ZoneProfile::Samples(GridFunction::read_csv(path).map_err(|e| BuildError::at("sensor.samples", e))?)
                }
            };
            Sensor::zone(basis, (s.support[0], s.support[1]), profile)
        }
    };
    sensor.map_err(|e| BuildError::at("sensor", e))
}

fn build_initial(cfg: &ExperimentConfig, basis: &EigenBasis) -> Result<SpectralState, BuildError> {
    let n = basis.n_modes();
    let init = &cfg.initial;
    if let Some(path) = &init.csv {
        let f = GridFunction::read_csv(path).map_err(|e| BuildError::at("initial.csv", e))?;
        return project(&f, basis).map_err(|e| BuildError::at("initial.csv", e));
    }
    if let Some(k) = init.mode {
        return Ok(SpectralState::mode(n, k));
    }
    if n < 2 {
        return Err(BuildError::at(
            "initial.preset",
            fracobs::Error::InvalidParameter("sin2pix needs at least 2 modes".into()),
        ));
    }
    // sin(2πx/L) = φ₂ √(L/2)
    Ok(SpectralState::mode(n, 2).scaled((basis.length() / 2.0).sqrt()))
}

fn build_band(
    cfg: &ExperimentConfig,
    basis: &EigenBasis,
    omega: &Subregion,
    initial: &SpectralState,
) -> Result<ConstraintBand, BuildError> {
    let b = &cfg.band;
    if let (Some(beta), Some(gamma)) = (&b.beta, &b.gamma) {
        let beta = GridFunction::read_csv(beta).map_err(|e| BuildError::at("band.beta", e))?;
        let gamma = GridFunction::read_csv(gamma).map_err(|e| BuildError::at("band.gamma", e))?;
        return ConstraintBand::new(beta, gamma).map_err(|e| BuildError::at("band", e));
    }
    let grid = omega.sample_grid(&basis.grid());
    let band = match b.reference {
        ReferenceSpec::Zero => ConstraintBand::constant(grid, -b.below, b.above),
        ReferenceSpec::Initial | ReferenceSpec::AbsInitial => {
            // exact values where the state is known in closed form, so that
            // a band touching zero is not pushed off it by rounding
            let reference = match (&cfg.initial.csv, cfg.initial.mode) {
                (Some(_), _) => synthesize(initial, basis, &grid),
                (None, Some(k)) => GridFunction::from_fn(grid, |x| basis.eigenfunction(k, x)),
                (None, None) => GridFunction::from_fn(grid, |x| sin_pi(2.0 * x / basis.length())),
            }
            .map_err(|e| BuildError::at("band", e))?;
            if b.reference == ReferenceSpec::Initial {
                ConstraintBand::around(&reference, b.below, b.above)
            } else {
                ConstraintBand::around_abs(&reference, b.below, b.above)
            }
        }
    };
    band.map_err(|e| BuildError::at("band", e))
}
