//! Subregions, order-interval constraints and the regional observability
//! tests built on the truncated observation map.

use std::fmt;
use std::fmt::Write as _;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hum::{assemble_gramian, GSpace};
use crate::quadrature::composite_legendre;
use crate::sensing::{observe, Convention, Sensor, TimeQuadrature};
use crate::spectral::{EigenBasis, GridFunction, SpectralState};

/// A finite union of disjoint closed intervals inside [0, L].
#[derive(Debug, Clone, PartialEq)]
pub struct Subregion {
    intervals: Vec<(f64, f64)>,
}

impl Subregion {
    pub fn new(mut intervals: Vec<(f64, f64)>, length: f64) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidParameter("subregion needs at least one interval".into()));
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidParameter(format!("interval [{a}, {b}] must have positive length")));
            }
            if a < 0.0 || b > length {
                return Err(Error::InvalidParameter(format!("interval [{a}, {b}] leaves the domain [0, {length}]")));
            }
        }
        if intervals.windows(2).any(|w| w[1].0 <= w[0].1) {
            return Err(Error::InvalidParameter("subregion intervals must be disjoint".into()));
        }
        Ok(Self { intervals })
    }

    /// The single interval [a, b].
    pub fn interval(a: f64, b: f64, length: f64) -> Result<Self> {
        Self::new(vec![(a, b)], length)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        let tol = 1e-12 * self.intervals.last().map_or(1.0, |i| i.1.abs().max(1.0));
        self.intervals.iter().any(|&(a, b)| x >= a - tol && x <= b + tol)
    }

    /// Indices of the grid points lying in the subregion.
    pub fn grid_indices(&self, grid: &[f64]) -> Vec<usize> {
        grid.iter().enumerate().filter(|(_, &x)| self.contains(x)).map(|(i, _)| i).collect()
    }

    /// Grid points lying in the subregion.
    pub fn sample_grid(&self, grid: &[f64]) -> Vec<f64> {
        self.grid_indices(grid).into_iter().map(|i| grid[i]).collect()
    }
}

impl fmt::Display for Subregion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.intervals.iter().map(|(a, b)| format!("[{a}, {b}]")).collect();
        f.write_str(&parts.join(" u "))
    }
}

/// Pointwise bounds β ≤ γ sampled on the grid of a subregion.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBand {
    pub beta: GridFunction,
    pub gamma: GridFunction,
}

impl ConstraintBand {
    pub fn new(beta: GridFunction, gamma: GridFunction) -> Result<Self> {
        if beta.grid != gamma.grid {
            return Err(Error::GridMismatch("band bounds are sampled on different grids".into()));
        }
        if let Some(i) = (0..beta.len()).find(|&i| beta.values[i] > gamma.values[i]) {
            return Err(Error::InvalidParameter(format!(
                "band has beta > gamma at x = {} ({} > {})",
                beta.grid[i], beta.values[i], gamma.values[i]
            )));
        }
        Ok(Self { beta, gamma })
    }

    /// β ≡ lo, γ ≡ hi.
    pub fn constant(grid: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        let beta = GridFunction::from_fn(grid.clone(), |_| lo)?;
        let gamma = GridFunction::from_fn(grid, |_| hi)?;
        Self::new(beta, gamma)
    }

    /// β = |r| − below, γ = |r| + above.
    pub fn around_abs(reference: &GridFunction, below: f64, above: f64) -> Result<Self> {
        let beta = GridFunction::new(reference.grid.clone(), reference.values.iter().map(|v| v.abs() - below).collect())?;
        let gamma = GridFunction::new(reference.grid.clone(), reference.values.iter().map(|v| v.abs() + above).collect())?;
        Self::new(beta, gamma)
    }

    /// β = r − below, γ = r + above.
    pub fn around(reference: &GridFunction, below: f64, above: f64) -> Result<Self> {
        let beta = GridFunction::new(reference.grid.clone(), reference.values.iter().map(|v| v - below).collect())?;
        let gamma = GridFunction::new(reference.grid.clone(), reference.values.iter().map(|v| v + above).collect())?;
        Self::new(beta, gamma)
    }

    pub fn grid(&self) -> &[f64] {
        &self.beta.grid
    }

    pub fn contains_zero(&self) -> bool {
        self.beta.values.iter().zip(&self.gamma.values).all(|(b, g)| *b <= 0.0 && *g >= 0.0)
    }

    /// True when β = γ = 0 at every sample.
    pub fn is_zero(&self) -> bool {
        self.beta.values.iter().chain(&self.gamma.values).all(|v| *v == 0.0)
    }

    /// The band restricted to a smaller sample grid.
    pub fn restricted_to(&self, omega: &Subregion) -> Result<Self> {
        Self::new(restrict(&self.beta, omega)?, restrict(&self.gamma, omega)?)
    }
}

/// χ_ω f: the samples of f that lie in ω.
pub fn restrict(f: &GridFunction, omega: &Subregion) -> Result<GridFunction> {
    let idx = omega.grid_indices(&f.grid);
    if idx.is_empty() {
        return Err(Error::GridMismatch(format!("no grid point of the function lies in {omega}")));
    }
    GridFunction::new(idx.iter().map(|&i| f.grid[i]).collect(), idx.iter().map(|&i| f.values[i]).collect())
}

/// χ*_ω g: zero extension of g from ω to the full grid.
pub fn extend(g: &GridFunction, omega: &Subregion, full_grid: &[f64]) -> Result<GridFunction> {
    let idx = omega.grid_indices(full_grid);
    if idx.len() != g.len() || idx.iter().zip(&g.grid).any(|(&i, &x)| full_grid[i] != x) {
        return Err(Error::GridMismatch("function is not sampled on the subregion grid".into()));
    }
    let mut values = vec![0.0; full_grid.len()];
    for (&i, &v) in idx.iter().zip(&g.values) {
        values[i] = v;
    }
    GridFunction::new(full_grid.to_vec(), values)
}

/// β ≤ g ≤ γ at every sample.
pub fn in_band(g: &GridFunction, band: &ConstraintBand) -> Result<bool> {
    if g.grid != band.beta.grid {
        return Err(Error::GridMismatch("function and band are sampled on different grids".into()));
    }
    Ok(g.values
        .iter()
        .zip(band.beta.values.iter().zip(&band.gamma.values))
        .all(|(v, (b, c))| *b <= *v && *v <= *c))
}

/// Orthonormal Legendre polynomials on each interval of ω, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBasis {
    /// (interval index, degree) for every trial function
    functions: Vec<(usize, usize)>,
    intervals: Vec<(f64, f64)>,
}

impl TrialBasis {
    /// `m` functions split over the intervals in proportion to their
    /// length, at least one per interval.
    pub fn legendre(omega: &Subregion, m: usize) -> Result<Self> {
        let intervals = omega.intervals().to_vec();
        if m < intervals.len() {
            return Err(Error::InvalidParameter(format!(
                "trial dimension {m} is smaller than the number of intervals {}",
                intervals.len()
            )));
        }
        let total = omega.measure();
        let mut counts = vec![1usize; intervals.len()];
        let mut remaining = m - intervals.len();
        let ideal: Vec<f64> = intervals.iter().map(|(a, b)| m as f64 * (b - a) / total).collect();
        while remaining > 0 {
            let j = (0..intervals.len())
                .max_by(|&x, &y| (ideal[x] - counts[x] as f64).total_cmp(&(ideal[y] - counts[y] as f64)))
                .expect("at least one interval");
            counts[j] += 1;
            remaining -= 1;
        }
        let functions = counts.iter().enumerate().flat_map(|(j, &c)| (0..c).map(move |d| (j, d))).collect();
        Ok(Self { functions, intervals })
    }

    pub fn dim(&self) -> usize {
        self.functions.len()
    }

    pub fn eval(&self, i: usize, x: f64) -> f64 {
        let (j, degree) = self.functions[i];
        let (a, b) = self.intervals[j];
        if x < a || x > b {
            return 0.0;
        }
        let u = 2.0 * (x - a) / (b - a) - 1.0;
        ((2 * degree + 1) as f64 / (b - a)).sqrt() * legendre_p(degree, u)
    }

    /// Σ a_i ψ_i(x).
    pub fn combine(&self, a: &[f64], x: f64) -> f64 {
        a.iter().enumerate().map(|(i, ai)| ai * self.eval(i, x)).sum()
    }

    /// Gauss–Legendre nodes and weights covering ω, fine enough for
    /// products of trial functions with the first `modes` eigenfunctions.
    pub fn omega_rule(&self, modes: usize, length: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let max_degree = self.functions.iter().map(|f| f.1).max().unwrap_or(0);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for &(a, b) in &self.intervals {
            let waves = modes as f64 * (b - a) / length;
            let panels = (2.0 * waves).ceil().max(2.0) as usize;
            let nw = composite_legendre(a, b, panels, 16.max(max_degree + 2))?;
            nodes.extend(nw.nodes);
            weights.extend(nw.weights);
        }
        Ok((nodes, weights))
    }

    /// Largest deviation of the trial Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> Result<f64> {
        let (nodes, weights) = self.omega_rule(1, 1.0)?;
        let m = self.dim();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let ip: f64 = nodes.iter().zip(&weights).map(|(&x, &w)| w * self.eval(i, x) * self.eval(j, x)).sum();
                worst = worst.max((ip - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        Ok(worst)
    }
}

fn legendre_p(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Result of [`weak_observability_test`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeakVerdict {
    pub observable: bool,
    /// sup_t |K_α y₀(t)| over the sampled times
    pub residual: f64,
    pub state_norm: f64,
}

/// Whether y₀ leaves a trace in the output: NOT observable iff
/// sup_t |K_α y₀| ≤ tol·‖y₀‖ on `n_times` midpoint samples.
pub fn weak_observability_test(
    y0: &SpectralState,
    sensor: &Sensor,
    basis: &EigenBasis,
    alpha: f64,
    horizon: f64,
    tol: f64,
    n_times: usize,
) -> Result<WeakVerdict> {
    let norm = y0.norm();
    if norm == 0.0 {
        return Err(Error::Degenerate("the zero state is trivially unobservable".into()));
    }
    let rec = observe(y0, sensor, basis, alpha, horizon, n_times, Convention::Forward)?;
    let residual = rec.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(WeakVerdict { observable: residual > tol * norm, residual, state_norm: norm })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    ExactlyObservable,
    NotObservable,
    /// The kernel is nontrivial but none of it lies in the band.
    ObservableAtLevel(usize),
    /// The band excludes 0, so Ker ∩ [β, γ] = {0} cannot hold as stated.
    ZeroOutsideBand,
}

impl Verdict {
    pub fn is_observable(&self) -> bool {
        matches!(self, Verdict::ExactlyObservable | Verdict::ObservableAtLevel(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::ExactlyObservable => f.write_str("EXACTLY_OBSERVABLE"),
            Verdict::NotObservable => f.write_str("NOT_OBSERVABLE"),
            Verdict::ObservableAtLevel(n) => write!(f, "OBSERVABLE_AT_LEVEL_{n}"),
            Verdict::ZeroOutsideBand => f.write_str("ZERO_OUTSIDE_BAND"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnlargedOptions {
    /// Trial dimension m on ω.
    pub trial_dim: usize,
    /// Singular values below this fraction of the largest span the kernel.
    pub svd_threshold: f64,
    /// Gramian eigenvalues below this fraction of the largest count as zero.
    pub gramian_threshold: f64,
    pub quadrature: TimeQuadrature,
}

impl Default for EnlargedOptions {
    fn default() -> Self {
        Self {
            trial_dim: 8,
            svd_threshold: 1e-8,
            gramian_threshold: 1e-14,
            quadrature: TimeQuadrature::default(),
        }
    }
}

/// Verdict and diagnostics of [`enlarged_observability_test`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnlargedReport {
    pub verdict: Verdict,
    pub level: usize,
    pub trial_dim: usize,
    pub singular_values: Vec<f64>,
    pub svd_threshold: f64,
    pub kernel_dim: usize,
    pub gramian_eigenvalues: Vec<f64>,
    pub gramian_threshold: f64,
    pub gramian_nonsingular: bool,
    pub band_contains_zero: bool,
    pub band_is_zero: bool,
    /// Whether some element of the truncated range of χ_ω K*_α lies in the band.
    pub range_meets_band: bool,
    /// Trial coordinates and ω samples of a nonzero kernel element in the band.
    pub witness_coefficients: Option<Vec<f64>>,
    pub witness: Option<GridFunction>,
    /// Discrete L²(0, T) norm of the witness's observation.
    pub witness_observation_norm: Option<f64>,
}

impl EnlargedReport {
    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "verdict: {}", self.verdict);
        let _ = writeln!(s, "strategic: {}", self.verdict.is_observable());
        let _ = writeln!(s, "modes: {}", self.level);
        let _ = writeln!(s, "trial_dim: {}", self.trial_dim);
        let _ = writeln!(s, "svd_threshold: {:.16e}", self.svd_threshold);
        let _ = writeln!(s, "singular_values: {}", list(&self.singular_values));
        let _ = writeln!(s, "kernel_dim: {}", self.kernel_dim);
        let _ = writeln!(s, "gramian_threshold: {:.16e}", self.gramian_threshold);
        let _ = writeln!(s, "gramian_eigenvalues: {}", list(&self.gramian_eigenvalues));
        let _ = writeln!(s, "gramian_nonsingular: {}", self.gramian_nonsingular);
        let _ = writeln!(s, "band_contains_zero: {}", self.band_contains_zero);
        if self.band_is_zero {
            let _ = writeln!(s, "note: band is {{0}}; the only admissible state is zero");
        }
        if !self.band_contains_zero {
            let _ = writeln!(s, "note: 0 is outside [beta, gamma]; the kernel condition is vacuous as stated");
        }
        let _ = writeln!(s, "range_meets_band: {}", self.range_meets_band);
        if let (Some(a), Some(n)) = (&self.witness_coefficients, self.witness_observation_norm) {
            let _ = writeln!(s, "witness_coefficients: {}", list(a));
            let _ = writeln!(s, "witness_observation_norm: {n:.16e}");
        }
        s
    }
}

/// Tests Ker(K_α χ*_ω) ∩ [β, γ] = {0} on the truncated system.
///
/// The observation map of the lifted trial basis is sampled on the time
/// rule of the converged Gramian with square-root weights, so that its
/// Gram matrix is exactly that Gramian; its numerical kernel comes from
/// the SVD. A kernel element in the band is searched for by maximising and
/// minimising each kernel coordinate over the band polytope: when 0 is in
/// the band, the polytope is {0} exactly when all those optima vanish.
pub fn enlarged_observability_test(
    sensor: &Sensor,
    omega: &Subregion,
    band: &ConstraintBand,
    alpha: f64,
    horizon: f64,
    basis: &EigenBasis,
    opts: &EnlargedOptions,
) -> Result<EnlargedReport> {
    let gspace = GSpace::new(omega.clone(), band.clone(), opts.trial_dim, basis)?;
    let gram = assemble_gramian(&gspace, sensor, basis, alpha, horizon, &opts.quadrature)?;
    let m = gspace.dim();

    let obs = gram.weighted_observation(&gspace, sensor, basis)?;
    let svd = obs.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::Degenerate("SVD returned no right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let s_max = singular_values.first().copied().unwrap_or(0.0);
    let kernel_rows: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| !(svd.singular_values[i] > opts.svd_threshold * s_max))
        .collect();
    let kernel = DMatrix::from_fn(m, kernel_rows.len(), |r, c| v_t[(kernel_rows[c], r)]);

    let eig = SymmetricEigen::new(gram.matrix.clone());
    let mut gramian_eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    gramian_eigenvalues.sort_by(f64::total_cmp);
    let g_max = gramian_eigenvalues.last().copied().unwrap_or(0.0);
    let g_min = gramian_eigenvalues.first().copied().unwrap_or(0.0);
    let gramian_nonsingular = g_max > 0.0 && g_min > opts.gramian_threshold * g_max;

    let samples = gspace.trial_values();
    let band_contains_zero = band.contains_zero();
    let range_cols: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > opts.gramian_threshold * g_max).collect();
    let range = DMatrix::from_fn(m, range_cols.len(), |r, c| eig.eigenvectors[(r, range_cols[c])]);
    let range_meets_band = band_contains_zero || find_in_band(&(samples * &range), band, false)?.is_some();

    let witness_coords = if kernel.ncols() == 0 {
        None
    } else {
        find_in_band(&(samples * &kernel), band, band_contains_zero)?
    };

    let verdict = if !band_contains_zero {
        Verdict::ZeroOutsideBand
    } else if kernel.ncols() == 0 {
        Verdict::ExactlyObservable
    } else if witness_coords.is_some() {
        Verdict::NotObservable
    } else {
        Verdict::ObservableAtLevel(basis.n_modes())
    };

    let (witness_coefficients, witness, witness_observation_norm) = match witness_coords {
        Some(a) => {
            let coeffs = &kernel * DVector::from_vec(a);
            let w = GridFunction::new(gspace.omega_grid().to_vec(), (samples * &coeffs).iter().copied().collect())?;
            let obs_norm = (&obs * &coeffs).norm();
            (Some(coeffs.iter().copied().collect()), Some(w), Some(obs_norm))
        }
        None => (None, None, None),
    };

    Ok(EnlargedReport {
        verdict,
        level: basis.n_modes(),
        trial_dim: m,
        singular_values,
        svd_threshold: opts.svd_threshold,
        kernel_dim: kernel.ncols(),
        gramian_eigenvalues,
        gramian_threshold: opts.gramian_threshold,
        gramian_nonsingular,
        band_contains_zero,
        band_is_zero: band.is_zero(),
        range_meets_band,
        witness_coefficients,
        witness,
        witness_observation_norm,
    })
}

/// True iff the sensor is exactly [β, γ]-strategic in ω at this level.
pub fn strategic_sensor_test(
    sensor: &Sensor,
    omega: &Subregion,
    band: &ConstraintBand,
    alpha: f64,
    horizon: f64,
    basis: &EigenBasis,
    opts: &EnlargedOptions,
) -> Result<bool> {
    Ok(enlarged_observability_test(sensor, omega, band, alpha, horizon, basis, opts)?.verdict.is_observable())
}

const LP_BOX: f64 = 1e6;

/// Shrinks `a` towards 0, which lies in the band, until S a meets the
/// bounds exactly; the LP solution may overshoot them by its feasibility
/// tolerance.
fn pull_into_band(s: &DMatrix<f64>, band: &ConstraintBand, a: Vec<f64>) -> Vec<f64> {
    let v = s * DVector::from_column_slice(&a);
    let mut t = 1.0f64;
    for (r, &x) in v.iter().enumerate() {
        let (lo, hi) = (band.beta.values[r], band.gamma.values[r]);
        if x > hi {
            t = t.min(hi / x);
        } else if x < lo {
            t = t.min(lo / x);
        }
    }
    if t >= 1.0 {
        return a;
    }
    let t = t * (1.0 - 1e-12);
    a.into_iter().map(|x| x * t).collect()
}
const LP_NONZERO: f64 = 1e-9;

/// Looks for coordinates a with β ≤ S a ≤ γ at every sample. With
/// `nonzero` set, only a ≠ 0 counts: each coordinate is maximised and
/// minimised in turn and the first optimum away from zero is returned.
fn find_in_band(s: &DMatrix<f64>, band: &ConstraintBand, nonzero: bool) -> Result<Option<Vec<f64>>> {
    let d = s.ncols();
    if d == 0 {
        let ok = band.contains_zero();
        return Ok(ok.then(Vec::new));
    }
    let solve = |target: Option<(usize, OptimizationDirection)>| -> Result<Option<Vec<f64>>> {
        let direction = target.map_or(OptimizationDirection::Minimize, |t| t.1);
        let mut lp = Problem::new(direction);
        let vars: Vec<_> = (0..d)
            .map(|j| lp.add_var(if target.map(|t| t.0) == Some(j) { 1.0 } else { 0.0 }, (-LP_BOX, LP_BOX)))
            .collect();
        for r in 0..s.nrows() {
            let expr: Vec<_> = vars.iter().enumerate().map(|(j, v)| (*v, s[(r, j)])).collect();
            lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, band.beta.values[r]);
            lp.add_constraint(expr.as_slice(), ComparisonOp::Le, band.gamma.values[r]);
        }
        match lp.solve() {
            Ok(sol) => Ok(Some(vars.iter().map(|v| *sol.var_value(*v)).collect())),
            Err(minilp::Error::Infeasible) => Ok(None),
            Err(e) => Err(Error::LinearProgram(e.to_string())),
        }
    };
    if !nonzero {
        return solve(None);
    }
    for j in 0..d {
        for dir in [OptimizationDirection::Maximize, OptimizationDirection::Minimize] {
            match solve(Some((j, dir)))? {
                Some(a) if a[j].abs() > LP_NONZERO => return Ok(Some(pull_into_band(s, band, a))),
                Some(_) => {}
                None => return Ok(None),
            }
        }
    }
    Ok(None)
}
