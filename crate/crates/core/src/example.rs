//! The one-dimensional worked example: Ω = (0, 1), a point sensor at
//! b = 1/2, y₀ = sin(2πx) and the subregion ω₁ = [1/6, 1/3] with band
//! |y₀| ± 1.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write;

use crate::error::Result;
use crate::hum::{reconstruct, GSpace, Measurements, ReconstructionResult};
use crate::mlf::{mittag_leffler, singular_kernel, MlfParams};
use crate::quadrature::{adaptive, AdaptiveOptions};
use crate::regional::{
    enlarged_observability_test, in_band, weak_observability_test, ConstraintBand, EnlargedOptions, EnlargedReport,
    Subregion, WeakVerdict,
};
use crate::sensing::{Sensor, TimeQuadrature};
use crate::special::sin_pi;
use crate::spectral::{dirichlet_basis_1d, project_fn, GridFunction, SpectralState};

pub const SENSOR_POSITION: f64 = 0.5;
pub const OMEGA: (f64, f64) = (1.0 / 6.0, 1.0 / 3.0);

/// (3√3 − 1)/(6π).
pub fn closed_form_constant() -> f64 {
    (3.0 * 3f64.sqrt() - 1.0) / (6.0 * PI)
}

/// 2∫_{1/6}^{1/3} sin(2πx) sin(πx) dx by adaptive quadrature.
pub fn quadrature_constant() -> Result<f64> {
    let opts = AdaptiveOptions { abs_tol: 0.0, rel_tol: 1e-14, max_intervals: 200 };
    let (v, _) = adaptive(|x| 2.0 * sin_pi(2.0 * x) * sin_pi(x), OMEGA.0, OMEGA.1, &[], opts)?;
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleConfig {
    pub alpha: f64,
    pub n_modes: usize,
    pub grid_size: usize,
    pub horizon: f64,
    /// trial dimension of the reconstruction
    pub hum_dim: usize,
    /// trial dimension of the enlarged observability test
    pub check_dim: usize,
    pub n_times: usize,
    pub profile_points: usize,
    pub noise_std: f64,
    pub seed: u64,
    pub eps: Option<f64>,
    pub quadrature: TimeQuadrature,
}

impl Default for ExampleConfig {
    fn default() -> Self {
        Self {
            alpha: 0.6,
            n_modes: 20,
            grid_size: 240,
            horizon: 1.0,
            hum_dim: 12,
            check_dim: 8,
            n_times: 200,
            profile_points: 10,
            noise_std: 0.0,
            seed: 0,
            eps: None,
            quadrature: TimeQuadrature::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub t: f64,
    /// g₁ ⟨χ_ω y₀, φ₁⟩ K₁(t) from the discretised operators
    pub computed: f64,
    /// (3√3 − 1)/(6π) t^{α−1} E_{α,α}(−π² t^α)
    pub closed_form: f64,
}

impl ProfilePoint {
    pub fn relative_error(&self) -> f64 {
        (self.computed - self.closed_form).abs() / self.closed_form.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleReport {
    pub config: ExampleConfig,
    pub null_trace: WeakVerdict,
    pub constant_closed_form: f64,
    pub constant_quadrature: f64,
    pub constant_computed: f64,
    pub profile: Vec<ProfilePoint>,
    pub truth_in_band: bool,
    pub enlarged: EnlargedReport,
    pub reconstruction: ReconstructionResult,
    pub band: ConstraintBand,
}

impl ExampleReport {
    pub fn constant_relative_error(&self) -> f64 {
        (self.constant_quadrature - self.constant_closed_form).abs() / self.constant_closed_form
    }

    pub fn profile_max_relative_error(&self) -> f64 {
        self.profile.iter().map(ProfilePoint::relative_error).fold(0.0, f64::max)
    }

    pub fn profile_csv(&self) -> String {
        let mut s = String::from("t,computed,closed_form,relative_error\n");
        for p in &self.profile {
            let _ = writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e}", p.t, p.computed, p.closed_form, p.relative_error());
        }
        s
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "alpha: {}", c.alpha);
        let _ = writeln!(s, "modes: {}", c.n_modes);
        let _ = writeln!(s, "sensor: b = {SENSOR_POSITION}");
        let _ = writeln!(s, "null_trace_max: {:.16e}", self.null_trace.residual);
        let _ = writeln!(s, "y0_norm: {:.16e}", self.null_trace.state_norm);
        let _ = writeln!(
            s,
            "weakly_observable_in_domain: {} ({})",
            self.null_trace.observable,
            if self.null_trace.observable { "sin(2 pi x) leaves a trace" } else { "sin(2 pi x) is invisible at b = 1/2" }
        );
        let _ = writeln!(s, "constant_closed_form: {:.16e}", self.constant_closed_form);
        let _ = writeln!(s, "constant_quadrature: {:.16e}", self.constant_quadrature);
        let _ = writeln!(s, "constant_computed: {:.16e}", self.constant_computed);
        let _ = writeln!(s, "constant_relative_error: {:.16e}", self.constant_relative_error());
        let _ = writeln!(s, "profile_max_relative_error: {:.16e}", self.profile_max_relative_error());
        let _ = writeln!(s, "truth_in_band: {}", self.truth_in_band);
        s.push_str("[enlarged]\n");
        s.push_str(&self.enlarged.to_text());
        s.push_str("[reconstruction]\n");
        let r = &self.reconstruction;
        if let Some(e) = r.relative_error {
            let _ = writeln!(s, "relative_error: {e:.16e}");
        }
        let _ = writeln!(s, "residual: {:.16e}", r.residual);
        let _ = writeln!(s, "in_band: {}", r.in_band);
        let _ = writeln!(s, "regularization: {:.16e}", r.regularization_used);
        s
    }
}

/// y₀ = sin(2πx) = φ₂/√2 on the first `n` modes.
pub fn initial_state(n: usize) -> SpectralState {
    SpectralState::mode(n, 2).scaled(FRAC_1_SQRT_2)
}

pub fn run_example(config: &ExampleConfig) -> Result<ExampleReport> {
    let alpha = config.alpha;
    let basis = dirichlet_basis_1d(config.n_modes, config.grid_size)?;
    let sensor = Sensor::pointwise(&basis, SENSOR_POSITION)?;
    let y0 = initial_state(config.n_modes);
    let y0_fn = |x: f64| sin_pi(2.0 * x);

    let null_trace = weak_observability_test(&y0, &sensor, &basis, alpha, config.horizon, 1e-12, config.n_times)?;

    let omega = Subregion::interval(OMEGA.0, OMEGA.1, basis.length())?;
    let restricted = project_fn(y0_fn, omega.intervals(), &basis)?;
    let constant_computed = sensor.gains()[0] * restricted.coefficients[0];
    let lambda1 = basis.eigenvalue(1);
    let ml = MlfParams::new(alpha, alpha)?;
    let constant_closed_form = closed_form_constant();
    let profile = (1..=config.profile_points)
        .map(|i| {
            let t = i as f64 * config.horizon / config.profile_points as f64;
            let computed = constant_computed * singular_kernel(alpha, t, lambda1)?;
            let closed_form = constant_closed_form * t.powf(alpha - 1.0) * mittag_leffler(&ml, -PI * PI * t.powf(alpha))?;
            Ok(ProfilePoint { t, computed, closed_form })
        })
        .collect::<Result<Vec<_>>>()?;

    let omega_grid = omega.sample_grid(&basis.grid());
    let reference = GridFunction::from_fn(omega_grid, y0_fn)?;
    let band = ConstraintBand::around_abs(&reference, 1.0, 1.0)?;
    let truth_in_band = in_band(&reference, &band)?;

    let opts = EnlargedOptions { trial_dim: config.check_dim, quadrature: config.quadrature, ..EnlargedOptions::default() };
    let enlarged = enlarged_observability_test(&sensor, &omega, &band, alpha, config.horizon, &basis, &opts)?;

    let gspace = GSpace::new(omega, band.clone(), config.hum_dim, &basis)?;
    let source = Measurements::Simulate { y0: &y0, noise_std: config.noise_std, seed: config.seed };
    let reconstruction =
        reconstruct(source, &sensor, &gspace, &basis, alpha, config.horizon, config.eps, &config.quadrature)?;

    Ok(ExampleReport {
        config: config.clone(),
        null_trace,
        constant_closed_form,
        constant_quadrature: quadrature_constant()?,
        constant_computed,
        profile,
        truth_in_band,
        enlarged,
        reconstruction,
        band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constants_agree() {
        assert_relative_eq!(closed_form_constant(), 0.2226128000135976, max_relative = 1e-15);
        assert_relative_eq!(quadrature_constant().unwrap(), closed_form_constant(), max_relative = 1e-13);
    }

    #[test]
    fn classical_example_runs() {
        let cfg = ExampleConfig { alpha: 1.0, ..ExampleConfig::default() };
        let r = run_example(&cfg).unwrap();
        assert!(!r.null_trace.observable);
        assert!(r.null_trace.residual <= 1e-12 * r.null_trace.state_norm);
        assert!(r.profile_max_relative_error() < 1e-9);
        assert!(r.truth_in_band);
        assert!(r.enlarged.verdict.is_observable());
        assert!(r.reconstruction.relative_error.unwrap() < 1e-2);
        assert!(r.reconstruction.in_band);
    }
}
