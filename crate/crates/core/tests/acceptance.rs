//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p fracobs --test acceptance -- --nocapture` to see the
//! lines on success as well.

use std::time::{Duration, Instant};

use fracobs::example::{closed_form_constant, initial_state, OMEGA, SENSOR_POSITION};
use fracobs::hum::{reconstruct, GSpace, Measurements};
use fracobs::mlf::{kernel_primitive, mittag_leffler, singular_kernel, wright_moment, MlfParams};
use fracobs::quadrature::{adaptive, AdaptiveOptions};
use fracobs::regional::{
    enlarged_observability_test, in_band, ConstraintBand, EnlargedOptions, Subregion,
};
use fracobs::rlcalc::{
    check_reflection_identities, reflect, right_rl_derivative, right_rl_integral, rl_derivative, TimeSeries,
};
use fracobs::sensing::{k_adjoint, observe, Convention, ObservationRecord, Sensor, TimeQuadrature, ZoneProfile};
use fracobs::spectral::{dirichlet_basis_1d, project_fn, EigenBasis, GridFunction, SpectralState};
use fracobs::special::{gamma, rgamma, sin_pi};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

/// Full-grid residuals, interior residuals, right-sided deviations from closed form.
type Reflection = ([f64; 4], [f64; 4], [f64; 2]);

fn err(e: fracobs::Error) -> String {
    e.to_string()
}

struct Line {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn run(id: usize, name: &'static str, budget_s: f64, f: impl FnOnce() -> Outcome) -> Line {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let budget = Duration::from_secs_f64(budget_s);
    let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    Line { id, name, passed: ok && elapsed < budget, detail, elapsed, budget }
}

fn null_observation() -> Outcome {
    let n = 20;
    let basis = dirichlet_basis_1d(n, 4 * n).map_err(err)?;
    let sensor = Sensor::pointwise(&basis, SENSOR_POSITION).map_err(err)?;
    let y0 = initial_state(n);
    let mut worst = 0.0f64;
    for &alpha in &[0.6, 0.8, 1.0] {
        let rec = observe(&y0, &sensor, &basis, alpha, 1.0, 200, Convention::Forward).map_err(err)?;
        let peak = rec.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(peak / y0.norm());
    }
    Ok((worst <= 1e-12, format!("max |z|/|y0| = {worst:.3e} (tol 1e-12)")))
}

fn restricted_coefficient() -> Outcome {
    let basis = dirichlet_basis_1d(20, 240).map_err(err)?;
    let sensor = Sensor::pointwise(&basis, SENSOR_POSITION).map_err(err)?;
    let restricted = project_fn(|x| sin_pi(2.0 * x), &[OMEGA], &basis).map_err(err)?;
    let computed = sensor.gains()[0] * restricted.coefficients[0];

    // oracle: 2 ∫_ω sin(2πx) sin(πx) dx by adaptive Gauss–Kronrod
    let opts = AdaptiveOptions { abs_tol: 0.0, rel_tol: 1e-14, max_intervals: 1000 };
    let oracle = 2.0 * adaptive(|x| (2.0 * std::f64::consts::PI * x).sin() * (std::f64::consts::PI * x).sin(), OMEGA.0, OMEGA.1, &[], opts)
        .map_err(err)?
        .0;
    let constant_err = (closed_form_constant() - oracle).abs() / oracle;
    let computed_err = (computed - oracle).abs() / oracle;

    let mut profile_err = 0.0f64;
    let pi2 = std::f64::consts::PI.powi(2);
    for &alpha in &[0.6, 0.8, 1.0] {
        let ml = MlfParams::new(alpha, alpha).map_err(err)?;
        for i in 1..=10 {
            let t = i as f64 / 10.0;
            let got = computed * singular_kernel(alpha, t, basis.eigenvalue(1)).map_err(err)?;
            let closed = closed_form_constant() * t.powf(alpha - 1.0) * mittag_leffler(&ml, -pi2 * t.powf(alpha)).map_err(err)?;
            profile_err = profile_err.max((got - closed).abs() / closed.abs());
        }
    }
    let worst = constant_err.max(computed_err).max(profile_err);
    Ok((
        worst <= 1e-6,
        format!(
            "closed form vs oracle {constant_err:.2e}, computed vs oracle {computed_err:.2e}, profile {profile_err:.2e} (tol 1e-6)"
        ),
    ))
}

fn wright_density() -> Outcome {
    let mut norm_err = 0.0f64;
    let mut moment_err = 0.0f64;
    for &alpha in &[0.3, 0.5, 0.8] {
        for &nu in &[0.0, 0.5, 1.0, 2.0] {
            let expect = gamma(1.0 + nu) / gamma(1.0 + alpha * nu);
            let rel = (wright_moment(alpha, nu).map_err(err)? - expect).abs() / expect;
            if nu == 0.0 {
                norm_err = norm_err.max(rel);
            } else {
                moment_err = moment_err.max(rel);
            }
        }
    }
    Ok((
        norm_err <= 1e-6 && moment_err <= 1e-5,
        format!("normalization {norm_err:.2e} (tol 1e-6), moments {moment_err:.2e} (tol 1e-5)"),
    ))
}

/// Closed-form right-sided operators of f(t) = t(T − t), written in u = T − t.
fn right_oracles(alpha: f64, horizon: f64, u: f64) -> (f64, f64) {
    let d = horizon * u.powf(1.0 - alpha) * rgamma(2.0 - alpha) - 2.0 * u.powf(2.0 - alpha) * rgamma(3.0 - alpha);
    let i = horizon * u.powf(1.0 + alpha) * rgamma(2.0 + alpha) - 2.0 * u.powf(2.0 + alpha) * rgamma(3.0 + alpha);
    (d, i)
}

fn reflection_at(dt: f64) -> Result<Reflection, String> {
    let (alpha, horizon) = (0.5, 1.0);
    let n = (horizon / dt).round() as usize;
    let f = TimeSeries::from_fn(0.0, dt, n, |t| t * (horizon - t)).map_err(err)?;
    let report = check_reflection_identities(alpha, &f).map_err(err)?;
    let q = reflect(&f);
    let rd = right_rl_derivative(&q, alpha).map_err(err)?;
    let ri = right_rl_integral(&q, alpha).map_err(err)?;
    let mut oracle = [0.0f64; 2];
    for j in 0..=n {
        let t = f.time(j);
        let (d, i) = right_oracles(alpha, horizon, horizon - t);
        oracle[0] = oracle[0].max((rd.values[j] - d).abs());
        oracle[1] = oracle[1].max((ri.values[j] - i).abs());
    }
    Ok((report.residuals, report.interior, oracle))
}

fn reflection_identities() -> Outcome {
    let (coarse, coarse_inner, oracle) = reflection_at(1e-3)?;
    let (fine, fine_inner, _) = reflection_at(5e-4)?;
    let worst = coarse.iter().chain(&oracle).copied().fold(0.0, f64::max);
    let shrink: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| c / f).collect();
    let min_shrink = shrink.iter().copied().fold(f64::INFINITY, f64::min);
    let inner: Vec<f64> = coarse_inner.iter().zip(&fine_inner).map(|(c, f)| c / f).collect();
    let list = |v: &[f64]| v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ");
    let ratios = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(", ");
    Ok((
        worst <= 5e-2 && min_shrink >= 1.5,
        format!(
            "residuals [{}], right-sided vs closed form [{}] (tol 5e-2); shrink [{}] (need 1.5), on [0.1T, 0.9T] [{}]",
            list(&coarse),
            list(&oracle),
            ratios(&shrink),
            ratios(&inner)
        ),
    ))
}

/// Samples c(t) = t^{α-1} E_{α,α}(λ t^α) on [0, 1]. The t = 0 sample is
/// infinite; `mass_window` = Some(M) replaces it by the value that makes
/// dt Σ_{j≤M} c_j equal ∫₀^{M dt} c, None sets it to zero.
fn sampled_mode(alpha: f64, lambda: f64, dt: f64, mass_window: Option<usize>) -> Result<TimeSeries, String> {
    let n = (1.0 / dt).round() as usize;
    let mut s = TimeSeries::from_fn(0.0, dt, n, |t| {
        if t == 0.0 {
            0.0
        } else {
            singular_kernel(alpha, t, lambda).unwrap_or(f64::NAN)
        }
    })
    .map_err(err)?;
    if let Some(m) = mass_window {
        let sum: f64 = s.values[1..=m].iter().sum();
        s.values[0] = kernel_primitive(alpha, m as f64 * dt, lambda).map_err(err)? / dt - sum;
    }
    Ok(s)
}

fn pde_residual() -> Outcome {
    let dt: f64 = 1e-4;
    let first = (0.1 / dt).round() as usize;
    let basis = dirichlet_basis_1d(5, 20).map_err(err)?;
    let mut corrected = 0.0f64;
    let mut plain = 0.0f64;
    for &alpha in &[0.5, 0.8] {
        for k in 1..=5 {
            let lambda = basis.eigenvalue(k);
            for (window, worst) in [(Some(first), &mut corrected), (None, &mut plain)] {
                let c = sampled_mode(alpha, lambda, dt, window)?;
                let d = rl_derivative(&c, alpha).map_err(err)?;
                for j in first..c.len() {
                    let expect = lambda * c.values[j];
                    *worst = worst.max((d.values[j] - expect).abs() / expect.abs());
                }
            }
        }
    }
    Ok((
        corrected <= 1e-2,
        format!("max relative residual {corrected:.2e} (tol 1e-2); with the t = 0 sample set to zero {plain:.2e}"),
    ))
}

fn initial_limit() -> Outcome {
    let basis = dirichlet_basis_1d(20, 80).map_err(err)?;
    let lam_n = basis.eigenvalue(20).abs();
    let mut worst = 0.0f64;
    for &alpha in &[0.5, 1.0] {
        let ml = MlfParams::new(alpha, 1.0).map_err(err)?;
        let t = 1e-6 / lam_n.powf(1.0 / alpha);
        for &lam in basis.eigenvalues() {
            worst = worst.max((mittag_leffler(&ml, lam * t.powf(alpha)).map_err(err)? - 1.0).abs());
        }
    }
    Ok((worst <= 1e-2, format!("max_k |E(λ_k t^α) - 1| = {worst:.3e} (tol 1e-2)")))
}

fn cross_consistency() -> Outcome {
    let basis = dirichlet_basis_1d(12, 96).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut agree = 0;
    let mut kernels = 0;
    let mut worst_obs = 0.0f64;
    let mut witness_ok = true;
    for i in 0..10 {
        // every third configuration is centred on a pointwise sensor at 1/2
        let (sensor, omega) = match i % 3 {
            0 => {
                let h = rng.random_range(0.05..0.4);
                (Sensor::pointwise(&basis, 0.5), Subregion::interval(0.5 - h, 0.5 + h, 1.0))
            }
            1 => {
                let lo = rng.random_range(0.05..0.5);
                let len = rng.random_range(0.1..0.45);
                (Sensor::pointwise(&basis, rng.random_range(0.05..0.95)), Subregion::interval(lo, lo + len, 1.0))
            }
            _ => {
                let a = rng.random_range(0.0..0.6);
                let profile = if rng.random_bool(0.5) { ZoneProfile::Constant(1.0) } else { ZoneProfile::Eigenfunction(rng.random_range(1..=15)) };
                let lo = rng.random_range(0.05..0.5);
                let len = rng.random_range(0.1..0.45);
                (Sensor::zone(&basis, (a, a + 0.3), profile), Subregion::interval(lo, lo + len, 1.0))
            }
        };
        let (sensor, omega) = (sensor.map_err(err)?, omega.map_err(err)?);
        let band = ConstraintBand::constant(
            omega.sample_grid(&basis.grid()),
            -rng.random_range(0.1..2.0),
            rng.random_range(0.1..2.0),
        )
        .map_err(err)?;
        let alpha = [0.6, 0.8, 1.0][rng.random_range(0..3)];
        let opts = EnlargedOptions { trial_dim: rng.random_range(2..=8), ..EnlargedOptions::default() };
        let r = enlarged_observability_test(&sensor, &omega, &band, alpha, 1.0, &basis, &opts).map_err(err)?;
        if (r.kernel_dim == 0) == r.gramian_nonsingular {
            agree += 1;
        }
        if r.kernel_dim > 0 {
            kernels += 1;
            match (&r.witness, r.witness_observation_norm) {
                (Some(w), Some(obs)) => {
                    witness_ok &= in_band(w, &band).map_err(err)?;
                    worst_obs = worst_obs.max(obs);
                }
                _ => witness_ok = false,
            }
        }
    }
    Ok((
        agree == 10 && witness_ok && worst_obs <= 1e-8,
        format!(
            "verdicts agree {agree}/10, {kernels} with a kernel, witnesses in band: {witness_ok}, max witness observation {worst_obs:.2e} (tol 1e-8)"
        ),
    ))
}

fn hum_fixed_point() -> Outcome {
    let basis = dirichlet_basis_1d(20, 240).map_err(err)?;
    let sensor = Sensor::pointwise(&basis, SENSOR_POSITION).map_err(err)?;
    let omega = Subregion::interval(OMEGA.0, OMEGA.1, 1.0).map_err(err)?;
    let reference = GridFunction::from_fn(omega.sample_grid(&basis.grid()), |x| sin_pi(2.0 * x)).map_err(err)?;
    let band = ConstraintBand::around_abs(&reference, 1.0, 1.0).map_err(err)?;
    let gspace = GSpace::new(omega, band, 12, &basis).map_err(err)?;
    let y0 = initial_state(20);
    let mut ok = true;
    let mut parts = Vec::new();
    for &alpha in &[0.6, 1.0] {
        let source = Measurements::Simulate { y0: &y0, noise_std: 0.0, seed: 0 };
        let r = reconstruct(source, &sensor, &gspace, &basis, alpha, 1.0, None, &TimeQuadrature::default()).map_err(err)?;
        let e = r.relative_error.unwrap_or(f64::INFINITY);
        ok &= e <= 1e-2 && r.in_band;
        parts.push(format!("alpha {alpha}: error {e:.2e}, in band {}", r.in_band));
    }
    Ok((ok, format!("{} (tol 1e-2)", parts.join("; "))))
}

fn output(y0: &SpectralState, sensor: &Sensor, basis: &EigenBasis, alpha: f64, t: f64) -> f64 {
    (0..basis.n_modes())
        .map(|k| sensor.gains()[k] * y0.coefficients[k] * singular_kernel(alpha, t, basis.eigenvalue(k + 1)).unwrap_or(f64::NAN))
        .sum()
}

fn adjoint_consistency() -> Outcome {
    let n = 10;
    let basis = dirichlet_basis_1d(n, 4 * n).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let breaks: Vec<f64> = (1..50).map(|k| 0.5f64.powi(k)).collect();
    let opts = AdaptiveOptions { abs_tol: 0.0, rel_tol: 1e-11, max_intervals: 20_000 };
    let mut worst = 0.0f64;
    for i in 0..20 {
        let alpha = if i < 10 { 0.6 } else { 1.0 };
        let sensor = if i % 2 == 0 {
            Sensor::pointwise(&basis, rng.random_range(0.02..0.98))
        } else {
            let lo = rng.random_range(0.0..0.6);
            Sensor::zone(&basis, (lo, lo + 0.4), ZoneProfile::Constant(1.0))
        }
        .map_err(err)?;
        let y0 = SpectralState::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).map_err(err)?;
        let a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z = |t: f64| a.iter().enumerate().map(|(j, aj)| aj * (j as f64 * std::f64::consts::PI * t).cos()).sum::<f64>();

        let direct = adaptive(|t| output(&y0, &sensor, &basis, alpha, t) * z(t), 0.0, 1.0, &breaks, opts).map_err(err)?.0;
        let out_norm = adaptive(|t| output(&y0, &sensor, &basis, alpha, t).powi(2), 0.0, 1.0, &breaks, opts).map_err(err)?.0.sqrt();
        let z_norm = adaptive(|t| z(t).powi(2), 0.0, 1.0, &[], opts).map_err(err)?.0.sqrt();

        let rule = TimeQuadrature::default().rule(1.0, alpha - 1.0).map_err(err)?;
        let values = rule.nodes.iter().map(|&t| z(t)).collect();
        let rec = ObservationRecord::new(rule.nodes.clone(), values, Some(rule.weights.clone()), Convention::Forward, 1.0).map_err(err)?;
        let dual = y0.dot(&k_adjoint(&rec, &sensor, &basis, alpha).map_err(err)?);
        worst = worst.max((direct - dual).abs() / (out_norm * z_norm));
    }
    Ok((worst <= 1e-6, format!("max |<Ky0, z> - <y0, K*z>| / (|Ky0| |z|) = {worst:.2e} (tol 1e-6)")))
}

#[test]
fn acceptance() {
    let lines = vec![
        run(1, "null observation of sin(2πx) at b = 1/2", 1.0, null_observation),
        run(2, "restricted observation coefficient", 1.0, restricted_coefficient),
        run(3, "Wright density normalization and moments", 5.0, wright_density),
        run(4, "reflection identities", 5.0, reflection_identities),
        run(5, "fractional PDE residual of mode coefficients", 10.0, pde_residual),
        run(6, "initial-condition limit", 1.0, initial_limit),
        run(7, "kernel and Gramian verdicts agree", 30.0, cross_consistency),
        run(8, "HUM reconstruction fixed point", 60.0, hum_fixed_point),
        run(9, "adjoint consistency", 10.0, adjoint_consistency),
    ];
    println!();
    for l in &lines {
        println!(
            "{} [{}] {}: {} ({:.2} s, budget {:.0} s)",
            if l.passed { "PASS" } else { "FAIL" },
            l.id,
            l.name,
            l.detail,
            l.elapsed.as_secs_f64(),
            l.budget.as_secs_f64()
        );
    }
    let failed: Vec<usize> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
