//! Pointwise and zone sensors, observation records, the observation map
//! K_α and its adjoint, and the admissibility estimate.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mlf::{kernel_primitive, singular_kernel};
use crate::quadrature::{composite_legendre, graded_singular, simpson_weights, NodesWeights};
use crate::spectral::{project_fn, propagate, EigenBasis, GridFunction, SpectralState};

/// Weight function of a zone sensor.
#[derive(Debug, Clone, PartialEq)]
pub enum ZoneProfile {
    Constant(f64),
    /// The k-th eigenfunction (1-based) of the basis the sensor is bound to.
    Eigenfunction(usize),
    /// Samples on a uniform grid spanning the zone.
    Samples(GridFunction),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SensorKind {
    Pointwise { b: f64 },
    Zone { d: (f64, f64), profile: ZoneProfile },
}

/// A sensor bound to an eigenbasis: g_k = φ_k(b) or ⟨φ_k, f⟩_{L²(D)}.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensor {
    kind: SensorKind,
    gains: Vec<f64>,
}

impl Sensor {
    pub fn pointwise(basis: &EigenBasis, b: f64) -> Result<Self> {
        if !(0.0..=basis.length()).contains(&b) {
            return Err(Error::Domain(format!("sensor location {b} lies outside [0, {}]", basis.length())));
        }
        let gains = (1..=basis.n_modes()).map(|k| basis.eigenfunction(k, b)).collect();
        Ok(Self { kind: SensorKind::Pointwise { b }, gains })
    }

    pub fn zone(basis: &EigenBasis, d: (f64, f64), profile: ZoneProfile) -> Result<Self> {
        let (lo, hi) = d;
        if !(lo >= 0.0 && hi <= basis.length() && hi > lo) {
            return Err(Error::Domain(format!(
                "zone [{lo}, {hi}] must be a subinterval of [0, {}] with positive length",
                basis.length()
            )));
        }
        let gains = match &profile {
            ZoneProfile::Constant(v) => project_fn(|_| *v, &[d], basis)?.coefficients,
            ZoneProfile::Eigenfunction(j) => {
                if *j == 0 {
                    return Err(Error::InvalidParameter("eigenfunction index is 1-based".into()));
                }
                project_fn(|x| basis.eigenfunction(*j, x), &[d], basis)?.coefficients
            }
            ZoneProfile::Samples(f) => sampled_gains(f, d, basis)?,
        };
        Ok(Self { kind: SensorKind::Zone { d, profile }, gains })
    }

    pub fn kind(&self) -> &SensorKind {
        &self.kind
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn n_modes(&self) -> usize {
        self.gains.len()
    }

    pub fn is_pointwise(&self) -> bool {
        matches!(self.kind, SensorKind::Pointwise { .. })
    }

    fn check_state(&self, state: &SpectralState) -> Result<()> {
        if state.len() != self.gains.len() {
            return Err(Error::GridMismatch(format!(
                "state has {} coefficients, sensor is bound to {} modes",
                state.len(),
                self.gains.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Sensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SensorKind::Pointwise { b } => write!(f, "pointwise(b={b})"),
            SensorKind::Zone { d, profile } => {
                let p = match profile {
                    ZoneProfile::Constant(v) => format!("constant {v}"),
                    ZoneProfile::Eigenfunction(k) => format!("phi_{k}"),
                    ZoneProfile::Samples(g) => format!("{} samples", g.len()),
                };
                write!(f, "zone(D=[{}, {}], f={p})", d.0, d.1)
            }
        }
    }
}

fn sampled_gains(f: &GridFunction, d: (f64, f64), basis: &EigenBasis) -> Result<Vec<f64>> {
    let n = f.len();
    if n < 2 {
        return Err(Error::InvalidParameter("zone profile needs at least two samples".into()));
    }
    let scale = (d.1 - d.0).abs().max(1.0);
    if (f.grid[0] - d.0).abs() > 1e-9 * scale || (f.grid[n - 1] - d.1).abs() > 1e-9 * scale {
        return Err(Error::GridMismatch("zone profile grid must span the zone exactly".into()));
    }
    let h = (d.1 - d.0) / (n - 1) as f64;
    let uniform = f.grid.iter().enumerate().all(|(i, &x)| (x - (d.0 + i as f64 * h)).abs() <= 1e-9 * h);
    let weights: Vec<f64> = if uniform && (n - 1).is_multiple_of(2) {
        simpson_weights(n - 1, h)?
    } else {
        let mut w = vec![0.0; n];
        for i in 0..n - 1 {
            let dx = f.grid[i + 1] - f.grid[i];
            w[i] += 0.5 * dx;
            w[i + 1] += 0.5 * dx;
        }
        w
    };
    Ok((1..=basis.n_modes())
        .map(|k| {
            f.grid
                .iter()
                .zip(&f.values)
                .zip(&weights)
                .map(|((&x, &v), &w)| w * v * basis.eigenfunction(k, x))
                .sum()
        })
        .collect())
}

/// C y for a state in spectral coordinates.
#[allow(non_snake_case)]
pub fn apply_C(state: &SpectralState, sensor: &Sensor) -> Result<f64> {
    sensor.check_state(state)?;
    Ok(state.coefficients.iter().zip(sensor.gains()).map(|(c, g)| c * g).sum())
}

/// Time orientation of an observation record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// z(t) = C y(t)
    Forward,
    /// z(t) = C y(T - t)
    Reversed,
}

impl Convention {
    pub fn flipped(self) -> Self {
        match self {
            Convention::Forward => Convention::Reversed,
            Convention::Reversed => Convention::Forward,
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Forward => "forward",
            Convention::Reversed => "reversed",
        })
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "forward" => Ok(Convention::Forward),
            "reversed" => Ok(Convention::Reversed),
            other => Err(Error::Convention(format!("unknown convention {other:?}"))),
        }
    }
}

/// Sampled sensor output on [0, T]. When `weights` is present the samples
/// sit on quadrature nodes and `Σ w_j z_j h(t_j)` approximates
/// `∫ z h dt`; otherwise each sample stands for the cell between the
/// midpoints of its neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecord {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub weights: Option<Vec<f64>>,
    pub convention: Convention,
    pub horizon: f64,
}

impl ObservationRecord {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        weights: Option<Vec<f64>>,
        convention: Convention,
        horizon: f64,
    ) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} times but {} samples",
                times.len(),
                values.len()
            )));
        }
        if let Some(w) = &weights {
            if w.len() != times.len() {
                return Err(Error::GridMismatch("weights do not match the time grid".into()));
            }
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("observation times must be strictly increasing".into()));
        }
        if times[0] < 0.0 || times[times.len() - 1] > horizon {
            return Err(Error::InvalidParameter(format!("observation times must lie in [0, {horizon}]")));
        }
        if values.iter().chain(weights.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("observation record has non-finite entries".into()));
        }
        Ok(Self { times, values, weights, convention, horizon })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn symmetric_grid(&self) -> bool {
        let n = self.times.len();
        (0..n).all(|j| (self.times[j] + self.times[n - 1 - j] - self.horizon).abs() <= 1e-12 * self.horizon)
    }

    /// The same signal in the opposite convention. On grids symmetric
    /// about T/2 the time array is kept and only the samples are reversed,
    /// which makes reversal an exact involution.
    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        let weights = self.weights.clone().map(|mut w| {
            w.reverse();
            w
        });
        let times = if self.symmetric_grid() {
            self.times.clone()
        } else {
            self.times.iter().rev().map(|t| self.horizon - t).collect()
        };
        Self { times, values, weights, convention: self.convention.flipped(), horizon: self.horizon }
    }

    pub fn in_convention(&self, convention: Convention) -> Self {
        if self.convention == convention {
            self.clone()
        } else {
            self.reversed()
        }
    }

    /// L²(0, T) inner product of two records on the same grid.
    pub fn inner(&self, other: &ObservationRecord) -> Result<f64> {
        if self.times != other.times || self.convention != other.convention {
            return Err(Error::GridMismatch("records do not share a grid and convention".into()));
        }
        let w = self.cell_weights();
        Ok(self.values.iter().zip(&other.values).zip(&w).map(|((a, b), w)| a * b * w).sum())
    }

    /// Quadrature weights if present, else the midpoint cell widths.
    pub fn cell_weights(&self) -> Vec<f64> {
        if let Some(w) = &self.weights {
            return w.clone();
        }
        let edges = self.cell_edges();
        edges.windows(2).map(|e| e[1] - e[0]).collect()
    }

    fn cell_edges(&self) -> Vec<f64> {
        let n = self.times.len();
        let mut edges = Vec::with_capacity(n + 1);
        edges.push(0.0);
        for j in 0..n - 1 {
            edges.push(0.5 * (self.times[j] + self.times[j + 1]));
        }
        edges.push(self.horizon);
        edges
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut r = self.clone();
        r.values.iter_mut().for_each(|v| *v *= a);
        r
    }

    /// Additive Gaussian noise with standard deviation `std`, reproducible
    /// from `seed`.
    pub fn with_noise(&self, std: f64, seed: u64) -> Result<Self> {
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise std must be non-negative, got {std}")));
        }
        let mut r = self.clone();
        if std == 0.0 {
            return Ok(r);
        }
        let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut r.values {
            *v += normal.sample(&mut rng);
        }
        Ok(r)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# convention={} horizon={:.16e}\n", self.convention, self.horizon);
        match &self.weights {
            Some(w) => {
                s.push_str("t,z,w\n");
                for ((t, z), w) in self.times.iter().zip(&self.values).zip(w) {
                    let _ = writeln!(s, "{t:.16e},{z:.16e},{w:.16e}");
                }
            }
            None => {
                s.push_str("t,z\n");
                for (t, z) in self.times.iter().zip(&self.values) {
                    let _ = writeln!(s, "{t:.16e},{z:.16e}");
                }
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut convention = None;
        let mut horizon = None;
        let mut columns = None;
        let (mut times, mut values, mut weights) = (Vec::new(), Vec::new(), Vec::new());
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for item in meta.split_whitespace() {
                    if let Some(v) = item.strip_prefix("convention=") {
                        convention = Some(v.parse::<Convention>()?);
                    } else if let Some(v) = item.strip_prefix("horizon=") {
                        horizon = Some(v.parse::<f64>().map_err(|e| Error::Parse { line: lineno, message: format!("horizon: {e}") })?);
                    }
                }
                continue;
            }
            if columns.is_none() {
                let names: Vec<&str> = line.split(',').map(str::trim).collect();
                match names.as_slice() {
                    ["t", "z"] => columns = Some(2),
                    ["t", "z", "w"] => columns = Some(3),
                    _ => {
                        return Err(Error::Parse { line: lineno, message: format!("expected header t,z or t,z,w, found {line:?}") })
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let ncol = columns.unwrap_or(2);
            if fields.len() != ncol {
                return Err(Error::Parse { line: lineno, message: format!("expected {ncol} columns, found {}", fields.len()) });
            }
            let parse = |f: &str| {
                f.trim().parse::<f64>().map_err(|e| Error::Parse { line: lineno, message: format!("{e}: {f:?}") })
            };
            times.push(parse(fields[0])?);
            values.push(parse(fields[1])?);
            if ncol == 3 {
                weights.push(parse(fields[2])?);
            }
        }
        let convention = convention.ok_or_else(|| Error::Convention("record does not declare its convention".into()))?;
        let horizon = horizon.ok_or_else(|| Error::Parse { line: 1, message: "record does not declare its horizon".into() })?;
        let weights = (columns == Some(3)).then_some(weights);
        Self::new(times, values, weights, convention, horizon)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Composite rule for ∫₀^T s^p g(s) ds with g smooth away from s = 0 but
/// varying on every scale |λ_k|^{-1/α}: geometrically graded panels with a
/// Gauss–Jacobi end panel on [0, T/10], equal Gauss–Legendre panels beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeQuadrature {
    pub nodes: usize,
    pub panels: usize,
    pub levels: usize,
}

impl Default for TimeQuadrature {
    fn default() -> Self {
        Self { nodes: 16, panels: 16, levels: 24 }
    }
}

impl TimeQuadrature {
    pub fn with_nodes(nodes: usize) -> Self {
        Self { nodes, ..Self::default() }
    }

    pub fn doubled(&self) -> Self {
        Self { nodes: 2 * self.nodes, ..*self }
    }

    pub fn rule(&self, horizon: f64, p: f64) -> Result<NodesWeights> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        if !(p > -1.0) {
            return Err(Error::Domain(format!(
                "time integral with weight s^{p} diverges at s = 0"
            )));
        }
        let eps = horizon / 10.0;
        let mut rule = graded_singular(eps, p, self.levels, 0.25, self.nodes)?;
        let rest = composite_legendre(eps, horizon, self.panels, self.nodes)?;
        rule.nodes.extend(rest.nodes);
        rule.weights.extend(rest.weights);
        Ok(rule)
    }
}

/// Matrix O with O[q][k] = g_k s_q^{α-1} E_{α,α}(λ_k s_q^α): row q maps a
/// state to its observation at time s_q.
pub fn observation_matrix(sensor: &Sensor, basis: &EigenBasis, alpha: f64, times: &[f64]) -> Result<DMatrix<f64>> {
    check_binding(sensor, basis)?;
    let n = basis.n_modes();
    let rows: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&s| {
            (0..n)
                .map(|k| {
                    let g = sensor.gains()[k];
                    if g == 0.0 {
                        Ok(0.0)
                    } else {
                        Ok(g * singular_kernel(alpha, s, basis.eigenvalues()[k])?)
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(times.len(), n, |q, k| rows[q][k]))
}

fn check_binding(sensor: &Sensor, basis: &EigenBasis) -> Result<()> {
    if sensor.n_modes() != basis.n_modes() {
        return Err(Error::GridMismatch(format!(
            "sensor bound to {} modes, basis has {}",
            sensor.n_modes(),
            basis.n_modes()
        )));
    }
    Ok(())
}

fn check_horizon(alpha: f64, horizon: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    Ok(())
}

/// Samples z(t_j) on the midpoint grid t_j = (j + 1/2) T / n.
pub fn observe(
    y0: &SpectralState,
    sensor: &Sensor,
    basis: &EigenBasis,
    alpha: f64,
    horizon: f64,
    n_times: usize,
    convention: Convention,
) -> Result<ObservationRecord> {
    check_horizon(alpha, horizon)?;
    if n_times < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 observation times, got {n_times}")));
    }
    let times: Vec<f64> = (0..n_times).map(|j| (j as f64 + 0.5) * horizon / n_times as f64).collect();
    let values = forward_values(y0, sensor, basis, alpha, &times)?;
    let forward = ObservationRecord::new(times, values, None, Convention::Forward, horizon)?;
    Ok(forward.in_convention(convention))
}

/// Forward observation sampled on the nodes of a quadrature rule; the
/// record carries the weights.
pub fn observe_on_rule(
    y0: &SpectralState,
    sensor: &Sensor,
    basis: &EigenBasis,
    alpha: f64,
    horizon: f64,
    rule: &NodesWeights,
) -> Result<ObservationRecord> {
    check_horizon(alpha, horizon)?;
    let values = forward_values(y0, sensor, basis, alpha, &rule.nodes)?;
    ObservationRecord::new(rule.nodes.clone(), values, Some(rule.weights.clone()), Convention::Forward, horizon)
}

fn forward_values(y0: &SpectralState, sensor: &Sensor, basis: &EigenBasis, alpha: f64, times: &[f64]) -> Result<Vec<f64>> {
    sensor.check_state(y0)?;
    check_binding(sensor, basis)?;
    times
        .par_iter()
        .map(|&t| apply_C(&propagate(y0, basis, t, alpha)?, sensor))
        .collect()
}

/// K*_α z: coefficient k is g_k ∫₀^T s^{α-1} E_{α,α}(λ_k s^α) z(s) ds.
///
/// Weighted records use their own weights. Otherwise z is taken as
/// piecewise constant on the record cells and the kernel is integrated
/// exactly over each cell through its primitive, which keeps the s^{α-1}
/// singularity out of the approximation.
pub fn k_adjoint(record: &ObservationRecord, sensor: &Sensor, basis: &EigenBasis, alpha: f64) -> Result<SpectralState> {
    if record.convention != Convention::Forward {
        return Err(Error::Convention("k_adjoint expects a forward-convention record".into()));
    }
    check_binding(sensor, basis)?;
    check_horizon(alpha, record.horizon)?;
    let coefficients = (0..basis.n_modes())
        .into_par_iter()
        .map(|k| {
            let g = sensor.gains()[k];
            if g == 0.0 {
                return Ok(0.0);
            }
            let lam = basis.eigenvalues()[k];
            let integral = match &record.weights {
                Some(w) => {
                    let mut acc = 0.0;
                    for ((&t, &z), &wj) in record.times.iter().zip(&record.values).zip(w) {
                        if z != 0.0 {
                            acc += wj * z * singular_kernel(alpha, t, lam)?;
                        }
                    }
                    acc
                }
                None => {
                    let edges = record.cell_edges();
                    let mut acc = 0.0;
                    let mut lower = 0.0;
                    for (j, &z) in record.values.iter().enumerate() {
                        let upper = kernel_primitive(alpha, edges[j + 1], lam)?;
                        acc += z * (upper - lower);
                        lower = upper;
                    }
                    acc
                }
            };
            Ok(g * integral)
        })
        .collect::<Result<Vec<f64>>>()?;
    SpectralState::new(coefficients)
}

/// Outcome of [`admissibility_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    /// Largest eigenvalue of the truncated observation Gramian, or +inf
    /// when the time integral diverges.
    pub m_estimate: f64,
    pub level: usize,
    pub admissible: bool,
    pub warning: Option<String>,
}

/// Mode Gramian G_jk = ∫₀^T g_j g_k K_j(s) K_k(s) ds on a rule for the
/// s^{2α-2} endpoint behaviour.
pub fn mode_gramian(sensor: &Sensor, basis: &EigenBasis, alpha: f64, horizon: f64, quad: &TimeQuadrature) -> Result<DMatrix<f64>> {
    check_horizon(alpha, horizon)?;
    let rule = quad.rule(horizon, 2.0 * alpha - 2.0)?;
    let o = observation_matrix(sensor, basis, alpha, &rule.nodes)?;
    let mut wo = o.clone();
    for (q, w) in rule.weights.iter().enumerate() {
        wo.row_mut(q).scale_mut(*w);
    }
    let g = o.transpose() * wo;
    Ok(0.5 * (&g + g.transpose()))
}

/// M_N = largest eigenvalue of the truncated observation Gramian, so that
/// ∫₀^T ‖C H_α(s) y₀‖² ds ≤ M_N ‖y₀‖² on the first N modes.
///
/// For α ≤ 1/2 the integrand behaves like s^{2α-2}(C y₀)² near s = 0 and
/// the integral diverges for every state the sensor sees; the estimate is
/// then +inf with a warning rather than an error.
pub fn admissibility_estimate(
    sensor: &Sensor,
    basis: &EigenBasis,
    alpha: f64,
    horizon: f64,
    quad: &TimeQuadrature,
) -> Result<Admissibility> {
    check_horizon(alpha, horizon)?;
    check_binding(sensor, basis)?;
    let level = basis.n_modes();
    if alpha <= 0.5 {
        let kind = if sensor.is_pointwise() { "pointwise" } else { "zone" };
        let blind = sensor.gains().iter().all(|&g| g == 0.0);
        return Ok(Admissibility {
            m_estimate: if blind { 0.0 } else { f64::INFINITY },
            level,
            admissible: blind,
            warning: Some(format!(
                "alpha = {alpha} <= 1/2: the {kind} observation energy integrates s^(2 alpha - 2) near s = 0 and diverges mode-wise"
            )),
        });
    }
    let g = mode_gramian(sensor, basis, alpha, horizon, quad)?;
    let eig = SymmetricEigen::new(g);
    let m = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    Ok(Admissibility { m_estimate: m, level, admissible: true, warning: None })
}
