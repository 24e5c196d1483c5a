//! Hilbert Uniqueness Method: the observation Gramian on the constrained
//! space, the adjoint datum from measurements, and the reconstruction of
//! the initial state on ω.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::regional::{in_band, ConstraintBand, Subregion, TrialBasis};
use crate::sensing::{k_adjoint, mode_gramian, observation_matrix, observe_on_rule, Convention, ObservationRecord, Sensor, TimeQuadrature};
use crate::spectral::{EigenBasis, GridFunction, SpectralState};

/// Functions vanishing outside ω whose restriction is expanded in an
/// orthonormal trial basis of L²(ω). `lifted[(k, i)] = ⟨φ_k, χ*_ω ψ_i⟩`.
#[derive(Debug, Clone)]
pub struct GSpace {
    omega: Subregion,
    band: ConstraintBand,
    trial: TrialBasis,
    lifted: DMatrix<f64>,
    omega_grid: Vec<f64>,
    trial_values: DMatrix<f64>,
    rule: (Vec<f64>, Vec<f64>),
}

impl GSpace {
    pub fn new(omega: Subregion, band: ConstraintBand, m: usize, basis: &EigenBasis) -> Result<Self> {
        let omega_grid = omega.sample_grid(&basis.grid());
        if omega_grid.is_empty() {
            return Err(Error::GridMismatch(format!("no basis grid point lies in {omega}")));
        }
        if band.grid() != omega_grid.as_slice() {
            return Err(Error::GridMismatch(format!(
                "band is sampled on {} points, the grid of {omega} has {}",
                band.grid().len(),
                omega_grid.len()
            )));
        }
        let trial = TrialBasis::legendre(&omega, m)?;
        let rule = trial.omega_rule(basis.n_modes(), basis.length())?;
        let n = basis.n_modes();
        let mut lifted = DMatrix::zeros(n, m);
        for (&x, &w) in rule.0.iter().zip(&rule.1) {
            for i in 0..m {
                let wp = w * trial.eval(i, x);
                if wp == 0.0 {
                    continue;
                }
                for k in 0..n {
                    lifted[(k, i)] += wp * basis.eigenfunction(k + 1, x);
                }
            }
        }
        let trial_values = DMatrix::from_fn(omega_grid.len(), m, |r, i| trial.eval(i, omega_grid[r]));
        Ok(Self { omega, band, trial, lifted, omega_grid, trial_values, rule })
    }

    pub fn dim(&self) -> usize {
        self.trial.dim()
    }

    pub fn omega(&self) -> &Subregion {
        &self.omega
    }

    pub fn band(&self) -> &ConstraintBand {
        &self.band
    }

    pub fn trial(&self) -> &TrialBasis {
        &self.trial
    }

    /// N × m matrix of eigen-coefficients of the lifted trial functions.
    pub fn lifted(&self) -> &DMatrix<f64> {
        &self.lifted
    }

    pub fn omega_grid(&self) -> &[f64] {
        &self.omega_grid
    }

    /// Trial functions sampled on the ω grid, one column each.
    pub fn trial_values(&self) -> &DMatrix<f64> {
        &self.trial_values
    }

    /// Spectral coefficients of χ*_ω Σ a_i ψ_i.
    pub fn lift(&self, a: &[f64]) -> Result<SpectralState> {
        self.check_dim(a.len())?;
        SpectralState::new((&self.lifted * DVector::from_column_slice(a)).iter().copied().collect())
    }

    /// ⟨c, χ*_ω ψ_i⟩ for a state in spectral coordinates: the operator
    /// P = χ*_ω χ_ω written in trial coordinates.
    pub fn restrict_state(&self, c: &SpectralState) -> Result<Vec<f64>> {
        if c.len() != self.lifted.nrows() {
            return Err(Error::GridMismatch(format!(
                "state has {} coefficients, the space was built on {} modes",
                c.len(),
                self.lifted.nrows()
            )));
        }
        Ok((self.lifted.transpose() * DVector::from_column_slice(&c.coefficients)).iter().copied().collect())
    }

    /// Σ a_i ψ_i on the ω grid.
    pub fn synthesize(&self, a: &[f64]) -> Result<GridFunction> {
        self.check_dim(a.len())?;
        let v = &self.trial_values * DVector::from_column_slice(a);
        GridFunction::new(self.omega_grid.clone(), v.iter().copied().collect())
    }

    /// L²(ω) projection of f onto the trial space.
    pub fn fit<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.rule.0.iter().zip(&self.rule.1).map(|(&x, &w)| w * f(x) * self.trial.eval(i, x)).sum())
            .collect()
    }

    /// ‖Σ a_i ψ_i − f‖_{L²(ω)}.
    pub fn l2_distance<F: Fn(f64) -> f64>(&self, a: &[f64], f: F) -> f64 {
        self.rule
            .0
            .iter()
            .zip(&self.rule.1)
            .map(|(&x, &w)| w * (self.trial.combine(a, x) - f(x)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// ‖f‖_{L²(ω)}.
    pub fn l2_norm<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.rule.0.iter().zip(&self.rule.1).map(|(&x, &w)| w * f(x).powi(2)).sum::<f64>().sqrt()
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::GridMismatch(format!("{n} coefficients for a space of dimension {}", self.dim())));
        }
        Ok(())
    }
}

/// Λ in trial coordinates: Λ_ij = ∫₀^T (C H_α(s) ψ_i)(C H_α(s) ψ_j) ds.
#[derive(Debug, Clone, PartialEq)]
pub struct Gramian {
    pub matrix: DMatrix<f64>,
    pub alpha: f64,
    pub horizon: f64,
    pub sensor: String,
    /// The rule the returned matrix was computed with.
    pub quadrature: TimeQuadrature,
    /// Largest entry change, relative to the largest entry, in the last
    /// node doubling.
    pub refinement_change: f64,
}

const GRAMIAN_REFINE_TOL: f64 = 1e-8;
const GRAMIAN_MAX_NODES: usize = 128;

impl Gramian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// The time rule for the s^{2α-2} endpoint behaviour of the integrand.
    pub fn time_rule(&self) -> Result<crate::quadrature::NodesWeights> {
        self.quadrature.rule(self.horizon, 2.0 * self.alpha - 2.0)
    }

    /// √w_q · C H_α(s_q) ψ_i on the Gramian's own time rule; its Gram
    /// matrix reproduces `matrix` up to symmetrisation.
    pub fn weighted_observation(&self, gspace: &GSpace, sensor: &Sensor, basis: &EigenBasis) -> Result<DMatrix<f64>> {
        let rule = self.time_rule()?;
        let mut o = observation_matrix(sensor, basis, self.alpha, &rule.nodes)?;
        for (q, w) in rule.weights.iter().enumerate() {
            o.row_mut(q).scale_mut(w.sqrt());
        }
        Ok(o * gspace.lifted())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for r in 0..self.dim() {
            let row: Vec<String> = (0..self.dim()).map(|c| format!("{:.16e}", self.matrix[(r, c)])).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }
}

/// Assembles Λ and doubles the nodes per panel until no entry moves by
/// more than 1e-8 of the largest.
pub fn assemble_gramian(
    gspace: &GSpace,
    sensor: &Sensor,
    basis: &EigenBasis,
    alpha: f64,
    horizon: f64,
    quad: &TimeQuadrature,
) -> Result<Gramian> {
    if gspace.lifted().nrows() != basis.n_modes() {
        return Err(Error::GridMismatch("space and basis disagree on the number of modes".into()));
    }
    if alpha <= 0.5 && sensor.gains().iter().any(|&g| g != 0.0) {
        return Err(Error::Domain(format!(
            "alpha = {alpha} <= 1/2: the observation energy integral diverges at s = 0"
        )));
    }
    let project = |g: DMatrix<f64>| {
        let l = gspace.lifted().transpose() * g * gspace.lifted();
        0.5 * (&l + l.transpose())
    };
    let mut q = *quad;
    let mut current = project(mode_gramian(sensor, basis, alpha, horizon, &q)?);
    loop {
        let finer_q = q.doubled();
        let finer = project(mode_gramian(sensor, basis, alpha, horizon, &finer_q)?);
        let scale = finer.amax();
        let change = if scale == 0.0 { 0.0 } else { (&finer - &current).amax() / scale };
        if change < GRAMIAN_REFINE_TOL {
            return Ok(Gramian {
                matrix: finer,
                alpha,
                horizon,
                sensor: sensor.to_string(),
                quadrature: finer_q,
                refinement_change: change,
            });
        }
        if finer_q.nodes >= GRAMIAN_MAX_NODES {
            return Err(Error::Quadrature(format!(
                "Gramian entries still moved by {change:e} at {} nodes per panel",
                finer_q.nodes
            )));
        }
        q = finer_q;
        current = finer;
    }
}

/// Θ(0) from a reversed-convention record: coefficient k is
/// ∫₀^T (T−τ)^{α-1} E_{α,α}(λ_k (T−τ)^α) g_k z(τ) dτ, evaluated as K*_α of
/// the same signal in forward time.
pub fn adjoint_state(record: &ObservationRecord, sensor: &Sensor, basis: &EigenBasis, alpha: f64) -> Result<SpectralState> {
    if record.convention != Convention::Reversed {
        return Err(Error::Convention("the adjoint datum is built from a reversed-convention record".into()));
    }
    if record.weights.is_none() {
        let n = record.len();
        let spacing = if n > 1 {
            record.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
        } else {
            record.horizon
        };
        let lead = record.times[0];
        let trail = record.horizon - record.times[n - 1];
        if lead > spacing || trail > spacing {
            return Err(Error::InvalidParameter(format!(
                "record leaves [0, {}] uncovered (gaps {lead:e} and {trail:e} at the ends)",
                record.horizon
            )));
        }
    }
    k_adjoint(&record.reversed(), sensor, basis, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Cholesky,
    ConjugateGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumSolution {
    pub phi0: Vec<f64>,
    /// ‖Λφ₀ − rhs‖ / ‖rhs‖ against the unregularised Λ.
    pub residual: f64,
    pub regularization: f64,
    pub method: SolveMethod,
}

/// Default Tikhonov shift 1e-10 · trace(Λ) / m.
pub fn default_regularization(gram: &DMatrix<f64>) -> f64 {
    1e-10 * gram.trace() / gram.nrows().max(1) as f64
}

/// Solves (Λ + εI) φ₀ = rhs: Cholesky when the shifted matrix is positive
/// definite, conjugate gradients on the normal equations otherwise.
pub fn solve_hum(gram: &DMatrix<f64>, rhs: &[f64], eps: f64) -> Result<HumSolution> {
    let m = gram.nrows();
    if gram.ncols() != m || rhs.len() != m {
        return Err(Error::GridMismatch(format!(
            "Gramian is {}x{}, right-hand side has {} entries",
            gram.nrows(),
            gram.ncols(),
            rhs.len()
        )));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("regularization must be non-negative, got {eps}")));
    }
    let b = DVector::from_column_slice(rhs);
    if b.iter().all(|&v| v == 0.0) {
        return Ok(HumSolution { phi0: vec![0.0; m], residual: 0.0, regularization: eps, method: SolveMethod::Cholesky });
    }
    if eps == 0.0 {
        let e = SymmetricEigen::new(gram.clone()).eigenvalues;
        let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = e.iter().copied().fold(0.0, f64::max);
        if !(lo > 4.0 * m as f64 * f64::EPSILON * hi) {
            return Err(Error::IllPosed { min_eigenvalue: lo, max_eigenvalue: hi, suggested_eps: default_regularization(gram) });
        }
    }
    let a = gram + DMatrix::identity(m, m) * eps;
    let (x, method) = match a.clone().cholesky() {
        Some(ch) => (ch.solve(&b), SolveMethod::Cholesky),
        None => (conjugate_gradient_normal(&a, &b, 20 * m.max(10))?, SolveMethod::ConjugateGradient),
    };
    let residual = (gram * &x - &b).norm() / b.norm();
    Ok(HumSolution { phi0: x.iter().copied().collect(), residual, regularization: eps, method })
}

fn conjugate_gradient_normal(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> Result<DVector<f64>> {
    let at = a.transpose();
    let rhs = &at * b;
    let mut x = DVector::zeros(a.ncols());
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    let stop = 1e-28 * rr;
    for _ in 0..max_iter {
        if rr <= stop {
            return Ok(x);
        }
        let ap = &at * (a * &p);
        let denom = p.dot(&ap);
        if !(denom > 0.0) {
            break;
        }
        let step = rr / denom;
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        let rr_next = r.dot(&r);
        p = &r + &p * (rr_next / rr);
        rr = rr_next;
    }
    if x.iter().all(|v| v.is_finite()) && rr <= 1e-12 * rhs.dot(&rhs) {
        Ok(x)
    } else {
        Err(Error::PrecisionNotReached { partial: x.norm(), terms: max_iter })
    }
}

/// Where the measurements come from.
#[derive(Debug, Clone)]
pub enum Measurements<'a> {
    /// Simulate the output of χ*_ω χ_ω y₀, the part of y₀ the method
    /// reconstructs, sampled on the Gramian's time rule.
    Simulate { y0: &'a SpectralState, noise_std: f64, seed: u64 },
    /// An external record in either convention.
    Record(&'a ObservationRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub phi0: Vec<f64>,
    pub y0_omega: GridFunction,
    /// χ_ω y₀ on the ω grid when the true state is known.
    pub truth_omega: Option<GridFunction>,
    /// Relative L²(ω) error against the truth when known.
    pub relative_error: Option<f64>,
    pub residual: f64,
    pub in_band: bool,
    pub regularization_used: f64,
    pub gramian_eigenvalues: Vec<f64>,
    pub record: ObservationRecord,
}

impl ReconstructionResult {
    /// ω-grid CSV: x, true value (if known), reconstruction, β, γ.
    pub fn to_csv(&self, band: &ConstraintBand) -> String {
        let mut s = String::new();
        let truth = self.truth_omega.as_ref();
        s.push_str(if truth.is_some() { "x,true,reconstructed,beta,gamma\n" } else { "x,reconstructed,beta,gamma\n" });
        for i in 0..self.y0_omega.len() {
            let x = self.y0_omega.grid[i];
            let _ = match truth {
                Some(t) => writeln!(
                    s,
                    "{x:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    t.values[i], self.y0_omega.values[i], band.beta.values[i], band.gamma.values[i]
                ),
                None => writeln!(
                    s,
                    "{x:.16e},{:.16e},{:.16e},{:.16e}",
                    self.y0_omega.values[i], band.beta.values[i], band.gamma.values[i]
                ),
            };
        }
        s
    }
}

/// Full pipeline: Λ, Θ(0), P Θ(0), (Λ + εI) φ₀ = P Θ(0), then y₀¹ = χ_ω φ₀.
/// `eps = None` uses [`default_regularization`]. The result is reported
/// against the band but never projected onto it.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct(
    source: Measurements<'_>,
    sensor: &Sensor,
    gspace: &GSpace,
    basis: &EigenBasis,
    alpha: f64,
    horizon: f64,
    eps: Option<f64>,
    quad: &TimeQuadrature,
) -> Result<ReconstructionResult> {
    let gram = assemble_gramian(gspace, sensor, basis, alpha, horizon, quad)?;
    let (record, truth) = match source {
        Measurements::Simulate { y0, noise_std, seed } => {
            let y = y0.clone();
            let truth_fn = move |x: f64| -> f64 {
                y.coefficients.iter().enumerate().map(|(k, c)| c * basis.eigenfunction(k + 1, x)).sum()
            };
            let omega_part = SpectralState::new(gspace.omega().intervals().iter().try_fold(
                vec![0.0; basis.n_modes()],
                |mut acc, &iv| -> Result<Vec<f64>> {
                    let part = crate::spectral::project_fn(&truth_fn, &[iv], basis)?;
                    acc.iter_mut().zip(&part.coefficients).for_each(|(a, p)| *a += p);
                    Ok(acc)
                },
            )?)?;
            // graded nodes sit far below the rounding unit of T, so this
            // record stays in forward time: T - (T - s) would collapse them
            let rule = gram.time_rule()?;
            let record = observe_on_rule(&omega_part, sensor, basis, alpha, horizon, &rule)?.with_noise(noise_std, seed)?;
            let grid = gspace.omega_grid().to_vec();
            let truth_grid = GridFunction::from_fn(grid, &truth_fn)?;
            let norm = gspace.l2_norm(&truth_fn);
            (record, Some((truth_grid, truth_fn, norm)))
        }
        Measurements::Record(r) => {
            if (r.horizon - horizon).abs() > 1e-12 * horizon {
                return Err(Error::InvalidParameter(format!(
                    "record horizon {} differs from the configured horizon {horizon}",
                    r.horizon
                )));
            }
            (r.clone(), None)
        }
    };
    let theta = match record.convention {
        Convention::Forward if record.weights.is_some() => k_adjoint(&record, sensor, basis, alpha)?,
        _ => adjoint_state(&record.in_convention(Convention::Reversed), sensor, basis, alpha)?,
    };
    let rhs = gspace.restrict_state(&theta)?;
    let eps = eps.unwrap_or_else(|| default_regularization(&gram.matrix));
    let sol = solve_hum(&gram.matrix, &rhs, eps)?;
    let y0_omega = gspace.synthesize(&sol.phi0)?;
    let inside = in_band(&y0_omega, gspace.band())?;
    let (truth_omega, relative_error) = match truth {
        Some((grid_fn, f, norm)) => {
            let err = gspace.l2_distance(&sol.phi0, &f);
            (Some(grid_fn), Some(if norm > 0.0 { err / norm } else { err }))
        }
        None => (None, None),
    };
    Ok(ReconstructionResult {
        phi0: sol.phi0,
        y0_omega,
        truth_omega,
        relative_error,
        residual: sol.residual,
        in_band: inside,
        regularization_used: eps,
        gramian_eigenvalues: gram.eigenvalues(),
        record,
    })
}
