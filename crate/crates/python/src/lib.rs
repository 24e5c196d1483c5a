//! Python bindings. Pointwise sensors on the unit interval with Dirichlet
//! eigenfunctions; states are passed as eigen-coefficient lists.

use fracobs::example::{run_example as run_core_example, ExampleConfig};
use fracobs::hum::{reconstruct as core_reconstruct, GSpace, Measurements};
use fracobs::mlf::{self, MlfParams};
use fracobs::regional::{enlarged_observability_test, ConstraintBand, EnlargedOptions, Subregion};
use fracobs::selftest::run_selftest;
use fracobs::sensing::{observe as core_observe, Convention, Sensor, TimeQuadrature};
use fracobs::spectral::{dirichlet_basis_1d, EigenBasis, SpectralState};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: fracobs::Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

struct Problem {
    basis: EigenBasis,
    sensor: Sensor,
    omega: Subregion,
    band: ConstraintBand,
}

fn problem(position: f64, omega: &[(f64, f64)], lower: f64, upper: f64, modes: usize, grid: usize) -> PyResult<Problem> {
    let basis = dirichlet_basis_1d(modes, grid).map_err(to_py)?;
    let sensor = Sensor::pointwise(&basis, position).map_err(to_py)?;
    let omega = Subregion::new(omega.to_vec(), 1.0).map_err(to_py)?;
    let band = ConstraintBand::constant(omega.sample_grid(&basis.grid()), lower, upper).map_err(to_py)?;
    Ok(Problem { basis, sensor, omega, band })
}

fn state(coefficients: Vec<f64>, modes: usize) -> PyResult<SpectralState> {
    if coefficients.len() != modes {
        return Err(PyValueError::new_err(format!("expected {modes} coefficients, got {}", coefficients.len())));
    }
    SpectralState::new(coefficients).map_err(to_py)
}

/// E_{α,β}(z).
#[pyfunction]
fn mittag_leffler(alpha: f64, beta: f64, z: f64) -> PyResult<f64> {
    mlf::mittag_leffler(&MlfParams::new(alpha, beta).map_err(to_py)?, z).map_err(to_py)
}

/// t^{α-1} E_{α,α}(λ t^α).
#[pyfunction]
fn singular_kernel(alpha: f64, t: f64, lam: f64) -> PyResult<f64> {
    mlf::singular_kernel(alpha, t, lam).map_err(to_py)
}

#[pyfunction]
fn wright_density(alpha: f64, theta: f64) -> PyResult<f64> {
    mlf::wright_density(alpha, theta).map_err(to_py)
}

/// ∫₀^∞ θ^ν ξ_α(θ) dθ.
#[pyfunction]
fn wright_moment(alpha: f64, nu: f64) -> PyResult<f64> {
    mlf::wright_moment(alpha, nu).map_err(to_py)
}

/// Output y(b, t) on the midpoint grid of [0, T]; returns (times, values).
#[pyfunction]
#[pyo3(signature = (coefficients, position, alpha, horizon = 1.0, n_times = 200))]
fn observe(coefficients: Vec<f64>, position: f64, alpha: f64, horizon: f64, n_times: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let modes = coefficients.len();
    let basis = dirichlet_basis_1d(modes, 4 * modes.max(1)).map_err(to_py)?;
    let sensor = Sensor::pointwise(&basis, position).map_err(to_py)?;
    let y0 = state(coefficients, modes)?;
    let rec = core_observe(&y0, &sensor, &basis, alpha, horizon, n_times, Convention::Forward).map_err(to_py)?;
    Ok((rec.times, rec.values))
}

#[pyclass(frozen, get_all)]
struct EnlargedResult {
    verdict: String,
    observable: bool,
    kernel_dim: usize,
    singular_values: Vec<f64>,
    gramian_eigenvalues: Vec<f64>,
    gramian_nonsingular: bool,
    /// (x, value) samples of a nonzero kernel element in the band.
    witness: Option<(Vec<f64>, Vec<f64>)>,
    report: String,
}

/// Enlarged observability of a pointwise sensor on ω with the constant
/// band [lower, upper].
#[pyfunction]
#[pyo3(signature = (position, omega, alpha, lower = -1.0, upper = 1.0, modes = 20, grid = 240, trial_dim = 8, horizon = 1.0))]
#[allow(clippy::too_many_arguments)]
fn enlarged_test(
    position: f64,
    omega: Vec<(f64, f64)>,
    alpha: f64,
    lower: f64,
    upper: f64,
    modes: usize,
    grid: usize,
    trial_dim: usize,
    horizon: f64,
) -> PyResult<EnlargedResult> {
    let p = problem(position, &omega, lower, upper, modes, grid)?;
    let opts = EnlargedOptions { trial_dim, ..EnlargedOptions::default() };
    let r = enlarged_observability_test(&p.sensor, &p.omega, &p.band, alpha, horizon, &p.basis, &opts).map_err(to_py)?;
    Ok(EnlargedResult {
        verdict: r.verdict.to_string(),
        observable: r.verdict.is_observable(),
        kernel_dim: r.kernel_dim,
        singular_values: r.singular_values.clone(),
        gramian_eigenvalues: r.gramian_eigenvalues.clone(),
        gramian_nonsingular: r.gramian_nonsingular,
        witness: r.witness.as_ref().map(|w| (w.grid.clone(), w.values.clone())),
        report: r.to_text(),
    })
}

#[pyclass(frozen, get_all)]
struct Reconstruction {
    x: Vec<f64>,
    values: Vec<f64>,
    truth: Vec<f64>,
    relative_error: f64,
    residual: f64,
    in_band: bool,
    regularization: f64,
}

/// Simulate-then-reconstruct of the ω-part of a state with HUM.
#[pyfunction]
#[pyo3(signature = (coefficients, position, omega, alpha, lower = -2.0, upper = 2.0, grid = 240, trial_dim = 12, noise = 0.0, seed = 0, eps = None, horizon = 1.0))]
#[allow(clippy::too_many_arguments)]
fn reconstruct(
    coefficients: Vec<f64>,
    position: f64,
    omega: Vec<(f64, f64)>,
    alpha: f64,
    lower: f64,
    upper: f64,
    grid: usize,
    trial_dim: usize,
    noise: f64,
    seed: u64,
    eps: Option<f64>,
    horizon: f64,
) -> PyResult<Reconstruction> {
    let modes = coefficients.len();
    let p = problem(position, &omega, lower, upper, modes, grid)?;
    let y0 = state(coefficients, modes)?;
    let gspace = GSpace::new(p.omega, p.band, trial_dim, &p.basis).map_err(to_py)?;
    let source = Measurements::Simulate { y0: &y0, noise_std: noise, seed };
    let r = core_reconstruct(source, &p.sensor, &gspace, &p.basis, alpha, horizon, eps, &TimeQuadrature::default())
        .map_err(to_py)?;
    Ok(Reconstruction {
        x: r.y0_omega.grid.clone(),
        values: r.y0_omega.values.clone(),
        truth: r.truth_omega.map(|t| t.values).unwrap_or_default(),
        relative_error: r.relative_error.unwrap_or(f64::NAN),
        residual: r.residual,
        in_band: r.in_band,
        regularization: r.regularization_used,
    })
}

#[pyclass(frozen, get_all)]
struct ExampleResult {
    null_trace_max: f64,
    weakly_observable: bool,
    constant_closed_form: f64,
    constant_quadrature: f64,
    constant_computed: f64,
    profile_t: Vec<f64>,
    profile_computed: Vec<f64>,
    profile_closed_form: Vec<f64>,
    truth_in_band: bool,
    verdict: String,
    relative_error: f64,
    in_band: bool,
    report: String,
}

/// Pointwise sensor at 1/2, y₀ = sin 2πx, ω = [1/6, 1/3].
#[pyfunction]
#[pyo3(signature = (alpha = 0.6, modes = 20))]
fn run_example(alpha: f64, modes: usize) -> PyResult<ExampleResult> {
    let r = run_core_example(&ExampleConfig { alpha, n_modes: modes, ..ExampleConfig::default() }).map_err(to_py)?;
    Ok(ExampleResult {
        null_trace_max: r.null_trace.residual,
        weakly_observable: r.null_trace.observable,
        constant_closed_form: r.constant_closed_form,
        constant_quadrature: r.constant_quadrature,
        constant_computed: r.constant_computed,
        profile_t: r.profile.iter().map(|p| p.t).collect(),
        profile_computed: r.profile.iter().map(|p| p.computed).collect(),
        profile_closed_form: r.profile.iter().map(|p| p.closed_form).collect(),
        truth_in_band: r.truth_in_band,
        verdict: r.enlarged.verdict.to_string(),
        relative_error: r.reconstruction.relative_error.unwrap_or(f64::NAN),
        in_band: r.reconstruction.in_band,
        report: r.to_text(),
    })
}

type CheckTuple = (String, f64, f64, Option<bool>);

/// List of (name, value, tolerance, passed); passed is None for
/// diagnostics without a verdict.
#[pyfunction]
fn selftest() -> PyResult<Vec<CheckTuple>> {
    Ok(run_selftest().map_err(to_py)?.into_iter().map(|c| (c.name, c.value, c.tolerance, c.passed)).collect())
}

#[pymodule]
fn pyfracobs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(mittag_leffler, m)?)?;
    m.add_function(wrap_pyfunction!(singular_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(wright_density, m)?)?;
    m.add_function(wrap_pyfunction!(wright_moment, m)?)?;
    m.add_function(wrap_pyfunction!(observe, m)?)?;
    m.add_function(wrap_pyfunction!(enlarged_test, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(run_example, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    m.add_class::<EnlargedResult>()?;
    m.add_class::<Reconstruction>()?;
    m.add_class::<ExampleResult>()?;
    Ok(())
}
