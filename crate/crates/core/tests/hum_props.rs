use fracobs::example::{initial_state, OMEGA};
use fracobs::hum::{assemble_gramian, reconstruct, solve_hum, GSpace, Measurements};
use fracobs::mlf::singular_kernel;
use fracobs::quadrature::{adaptive, AdaptiveOptions};
use fracobs::regional::{enlarged_observability_test, ConstraintBand, EnlargedOptions, Subregion, Verdict};
use fracobs::sensing::{k_adjoint, observe, observe_on_rule, Convention, Sensor, TimeQuadrature, ZoneProfile};
use fracobs::spectral::{dirichlet_basis_1d, EigenBasis, GridFunction};
use nalgebra::{DVector, SymmetricEigen};
use proptest::prelude::*;

fn basis() -> EigenBasis {
    dirichlet_basis_1d(12, 96).unwrap()
}

fn space(basis: &EigenBasis, lo: f64, hi: f64, m: usize) -> GSpace {
    let omega = Subregion::interval(lo, hi, 1.0).unwrap();
    let band = ConstraintBand::constant(omega.sample_grid(&basis.grid()), -1.0, 1.0).unwrap();
    GSpace::new(omega, band, m, basis).unwrap()
}

fn sensor_from(basis: &EigenBasis, point: bool, a: f64) -> Sensor {
    if point {
        Sensor::pointwise(basis, a).unwrap()
    } else {
        Sensor::zone(basis, (a * 0.5, a * 0.5 + 0.3), ZoneProfile::Constant(1.0)).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gramian_is_the_observation_energy(
        point in any::<bool>(),
        a in 0.05f64..0.95,
        lo in 0.05f64..0.5,
        len in 0.1f64..0.45,
        v in prop::collection::vec(-1.0f64..1.0, 4),
        alpha in prop_oneof![Just(1.0), 0.6f64..1.0],
    ) {
        let basis = basis();
        let sensor = sensor_from(&basis, point, a);
        let gspace = space(&basis, lo, lo + len, 4);
        let gram = assemble_gramian(&gspace, &sensor, &basis, alpha, 1.0, &TimeQuadrature::default()).unwrap();
        let quad = gram.matrix.iter().enumerate().map(|(idx, g)| g * v[idx % 4] * v[idx / 4]).sum::<f64>();

        let c = gspace.lift(&v).unwrap();
        let weights: Vec<f64> = (0..basis.n_modes()).map(|k| sensor.gains()[k] * c.coefficients[k]).collect();
        let out = |s: f64| -> f64 {
            weights.iter().enumerate().map(|(k, w)| w * singular_kernel(alpha, s, basis.eigenvalue(k + 1)).unwrap()).sum()
        };
        let breaks: Vec<f64> = (1..60).map(|k| 0.5f64.powi(k)).collect();
        let opts = AdaptiveOptions { abs_tol: 0.0, rel_tol: 1e-10, max_intervals: 20_000 };
        let energy = adaptive(|s| out(s).powi(2), 0.0, 1.0, &breaks, opts).unwrap().0;
        prop_assert!((quad - energy).abs() <= 1e-6 * energy, "{quad} vs {energy}");
    }

    #[test]
    fn noiseless_data_is_a_fixed_point(
        point in any::<bool>(),
        a in 0.05f64..0.95,
        lo in 0.05f64..0.5,
        len in 0.2f64..0.45,
        coeffs in prop::collection::vec(-1.0f64..1.0, 3),
        alpha in prop_oneof![Just(1.0), Just(0.8)],
    ) {
        let basis = basis();
        let sensor = sensor_from(&basis, point, a);
        let gspace = space(&basis, lo, lo + len, 3);
        let gram = assemble_gramian(&gspace, &sensor, &basis, alpha, 1.0, &TimeQuadrature::default()).unwrap();
        let eig = gram.eigenvalues();
        // well-conditioned configurations only
        prop_assume!(eig[0] > 1e-10 * eig[eig.len() - 1]);
        let y = gspace.lift(&coeffs).unwrap();
        let rec = observe_on_rule(&y, &sensor, &basis, alpha, 1.0, &gram.time_rule().unwrap()).unwrap();
        let rhs = gspace.restrict_state(&k_adjoint(&rec, &sensor, &basis, alpha).unwrap()).unwrap();
        let sol = solve_hum(&gram.matrix, &rhs, 0.0).unwrap();
        let cond = eig[eig.len() - 1] / eig[0];
        let err = sol.phi0.iter().zip(&coeffs).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let norm = coeffs.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-12 * cond * norm, "error {err:e}, condition {cond:e}");
    }

    #[test]
    fn exact_observability_makes_the_gramian_invertible(
        point in any::<bool>(),
        a in 0.05f64..0.95,
        lo in 0.05f64..0.5,
        len in 0.1f64..0.45,
        m in 2usize..=6,
        alpha in prop_oneof![Just(1.0), Just(0.75)],
    ) {
        let basis = basis();
        let sensor = sensor_from(&basis, point, a);
        let gspace = space(&basis, lo, lo + len, m);
        let opts = EnlargedOptions { trial_dim: m, ..EnlargedOptions::default() };
        let report = enlarged_observability_test(&sensor, gspace.omega(), gspace.band(), alpha, 1.0, &basis, &opts).unwrap();
        let gram = assemble_gramian(&gspace, &sensor, &basis, alpha, 1.0, &opts.quadrature).unwrap();
        let eig = gram.eigenvalues();
        if report.verdict == Verdict::ExactlyObservable {
            prop_assert!(eig[0] > opts.svd_threshold.powi(2) * eig[eig.len() - 1]);
        }
    }
}

fn example_space(basis: &EigenBasis, m: usize) -> GSpace {
    let omega = Subregion::interval(OMEGA.0, OMEGA.1, 1.0).unwrap();
    let grid = omega.sample_grid(&basis.grid());
    let reference = GridFunction::from_fn(grid, |x| fracobs::special::sin_pi(2.0 * x)).unwrap();
    GSpace::new(omega, ConstraintBand::around_abs(&reference, 1.0, 1.0).unwrap(), m, basis).unwrap()
}

#[test]
fn error_grows_with_noise() {
    let basis = dirichlet_basis_1d(20, 240).unwrap();
    let sensor = Sensor::pointwise(&basis, 0.5).unwrap();
    let gspace = example_space(&basis, 8);
    let y0 = initial_state(20);
    let quad = TimeQuadrature::default();
    let mut prev = 0.0;
    for &noise in &[1e-6, 1e-4, 1e-2] {
        let mean = (0..4u64)
            .map(|seed| {
                let source = Measurements::Simulate { y0: &y0, noise_std: noise, seed };
                reconstruct(source, &sensor, &gspace, &basis, 1.0, 1.0, Some(1e-8), &quad).unwrap().relative_error.unwrap()
            })
            .sum::<f64>()
            / 4.0;
        assert!(mean > prev, "noise {noise}: mean error {mean} after {prev}");
        prev = mean;
    }
}

#[test]
fn reconstruction_is_continuous_at_unit_order() {
    let basis = dirichlet_basis_1d(20, 240).unwrap();
    let sensor = Sensor::pointwise(&basis, 0.5).unwrap();
    let gspace = example_space(&basis, 12);
    let y0 = initial_state(20);
    let quad = TimeQuadrature::default();
    let run = |alpha: f64| {
        let source = Measurements::Simulate { y0: &y0, noise_std: 0.0, seed: 0 };
        reconstruct(source, &sensor, &gspace, &basis, alpha, 1.0, None, &quad).unwrap().y0_omega
    };
    let near = run(1.0 - 1e-3);
    let classical = run(1.0);
    let diff = near.values.iter().zip(&classical.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = classical.values.iter().map(|b| b * b).sum::<f64>().sqrt();
    assert!(diff <= 0.05 * norm, "relative difference {}", diff / norm);
}

#[test]
fn hum_agrees_with_dense_least_squares() {
    let basis = dirichlet_basis_1d(20, 240).unwrap();
    let sensor = Sensor::pointwise(&basis, 0.5).unwrap();
    let gspace = example_space(&basis, 12);
    let y0 = initial_state(20);
    let quad = TimeQuadrature::default();
    for &alpha in &[0.6, 1.0] {
        let source = Measurements::Simulate { y0: &y0, noise_std: 0.0, seed: 0 };
        let hum = reconstruct(source, &sensor, &gspace, &basis, alpha, 1.0, None, &quad).unwrap();
        let gram = assemble_gramian(&gspace, &sensor, &basis, alpha, 1.0, &quad).unwrap();

        // min |√W (O a - z)| by SVD, straight from the record
        let a = gram.weighted_observation(&gspace, &sensor, &basis).unwrap();
        let w = hum.record.weights.as_ref().unwrap();
        let b = DVector::from_iterator(w.len(), w.iter().zip(&hum.record.values).map(|(w, z)| w.sqrt() * z));
        let svd = a.svd(true, true);
        let cutoff = 1e-4 * svd.singular_values.max();
        let fit = svd.solve(&b, cutoff).unwrap();

        let eig = SymmetricEigen::new(gram.matrix.clone());
        let top = eig.eigenvalues.max();
        let diff = DVector::from_column_slice(&hum.phi0) - &fit;
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > 1e-8 * top {
                let v = eig.eigenvectors.column(i);
                num += v.dot(&diff).powi(2);
                den += v.dot(&fit).powi(2);
            }
        }
        let rel = (num / den).sqrt();
        assert!(rel <= 1e-6, "alpha {alpha}: HUM and least squares differ by {rel:e} on the well-conditioned subspace");
    }
}

#[test]
fn zero_measurements_give_zero() {
    let basis = basis();
    let sensor = Sensor::pointwise(&basis, 0.3).unwrap();
    let gspace = space(&basis, 0.2, 0.6, 4);
    let rec = observe(&fracobs::spectral::SpectralState::zeros(12), &sensor, &basis, 0.8, 1.0, 50, Convention::Forward).unwrap();
    let r = reconstruct(Measurements::Record(&rec), &sensor, &gspace, &basis, 0.8, 1.0, None, &TimeQuadrature::default()).unwrap();
    assert!(r.phi0.iter().all(|&x| x == 0.0));
    assert!(r.in_band);
    assert!(r.relative_error.is_none());

    // a band that excludes zero reports the zero reconstruction as outside
    let omega = Subregion::interval(0.2, 0.6, 1.0).unwrap();
    let band = ConstraintBand::constant(omega.sample_grid(&basis.grid()), 0.5, 1.0).unwrap();
    let shifted = GSpace::new(omega, band, 4, &basis).unwrap();
    let r = reconstruct(Measurements::Record(&rec), &sensor, &shifted, &basis, 0.8, 1.0, None, &TimeQuadrature::default()).unwrap();
    assert!(!r.in_band);
}
