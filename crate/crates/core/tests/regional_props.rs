use fracobs::hum::{assemble_gramian, GSpace};
use fracobs::regional::{
    enlarged_observability_test, extend, in_band, restrict, ConstraintBand, EnlargedOptions, Subregion, Verdict,
};
use fracobs::sensing::{Sensor, TimeQuadrature, ZoneProfile};
use fracobs::spectral::{dirichlet_basis_1d, EigenBasis, GridFunction};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn basis() -> EigenBasis {
    dirichlet_basis_1d(12, 96).unwrap()
}

fn opts(m: usize) -> EnlargedOptions {
    EnlargedOptions { trial_dim: m, ..EnlargedOptions::default() }
}

fn unit_band(basis: &EigenBasis, omega: &Subregion) -> ConstraintBand {
    ConstraintBand::constant(omega.sample_grid(&basis.grid()), -1.0, 1.0).unwrap()
}

/// ∫₀^T e^{(λ_k + λ_l)s} ds assembled on the lifted trial basis.
fn classical_gramian(gspace: &GSpace, sensor: &Sensor, basis: &EigenBasis, horizon: f64) -> DMatrix<f64> {
    let n = basis.n_modes();
    let modes = DMatrix::from_fn(n, n, |k, l| {
        let s = basis.eigenvalue(k + 1) + basis.eigenvalue(l + 1);
        sensor.gains()[k] * sensor.gains()[l] * (s * horizon).exp_m1() / s
    });
    let psi = gspace.lifted();
    psi.transpose() * modes * psi
}

fn nonsingular(g: &DMatrix<f64>, threshold: f64) -> bool {
    let e = SymmetricEigen::new(g.clone()).eigenvalues;
    let max = e.iter().copied().fold(f64::MIN, f64::max);
    let min = e.iter().copied().fold(f64::MAX, f64::min);
    max > 0.0 && min > threshold * max
}

fn sensor_from(basis: &EigenBasis, point: bool, a: f64) -> Sensor {
    if point {
        Sensor::pointwise(basis, a).unwrap()
    } else {
        Sensor::zone(basis, (a * 0.5, a * 0.5 + 0.3), ZoneProfile::Constant(1.0)).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn observability_passes_to_subregions(
        b in 0.05f64..0.95,
        lo in 0.05f64..0.4,
        len in 0.2f64..0.5,
        inner in (0.0f64..0.3, 0.4f64..1.0),
        alpha in prop_oneof![Just(0.8), Just(1.0)],
    ) {
        let basis = basis();
        let sensor = Sensor::pointwise(&basis, b).unwrap();
        let hi = (lo + len).min(0.95);
        let w1 = Subregion::interval(lo, hi, 1.0).unwrap();
        let r1 = enlarged_observability_test(&sensor, &w1, &unit_band(&basis, &w1), alpha, 1.0, &basis, &opts(4)).unwrap();
        prop_assume!(r1.verdict == Verdict::ExactlyObservable);
        let a2 = lo + inner.0 * (hi - lo);
        let b2 = a2 + inner.1 * (hi - a2);
        let w2 = Subregion::interval(a2, b2, 1.0).unwrap();
        let band2 = unit_band(&basis, &w1).restricted_to(&w2).unwrap();
        let r2 = enlarged_observability_test(&sensor, &w2, &band2, alpha, 1.0, &basis, &opts(4)).unwrap();
        prop_assert_eq!(r2.verdict, Verdict::ExactlyObservable, "{} inside {}", w2, w1);
    }

    #[test]
    fn unit_order_matches_classical_diffusion(
        point in any::<bool>(),
        a in 0.05f64..0.95,
        lo in 0.05f64..0.5,
        len in 0.1f64..0.45,
        m in 2usize..=6,
    ) {
        let basis = basis();
        let sensor = sensor_from(&basis, point, a);
        let omega = Subregion::interval(lo, lo + len, 1.0).unwrap();
        let gspace = GSpace::new(omega.clone(), unit_band(&basis, &omega), m, &basis).unwrap();
        let gram = assemble_gramian(&gspace, &sensor, &basis, 1.0, 1.0, &TimeQuadrature::default()).unwrap();
        let classical = classical_gramian(&gspace, &sensor, &basis, 1.0);
        let diff = (&gram.matrix - &classical).norm();
        prop_assert!(diff <= 1e-8 * classical.norm(), "Gramian deviation {diff:e}");
        let report = enlarged_observability_test(&sensor, &omega, gspace.band(), 1.0, 1.0, &basis, &opts(m)).unwrap();
        prop_assert_eq!(report.gramian_nonsingular, nonsingular(&classical, report.gramian_threshold));
    }

    #[test]
    fn kernel_is_empty_iff_gramian_is_nonsingular(
        point in any::<bool>(),
        a in 0.05f64..0.95,
        lo in 0.05f64..0.5,
        len in 0.1f64..0.45,
        m in 2usize..=8,
        alpha in prop_oneof![Just(0.75), Just(1.0)],
    ) {
        let basis = basis();
        let sensor = sensor_from(&basis, point, a);
        let omega = Subregion::interval(lo, lo + len, 1.0).unwrap();
        let r = enlarged_observability_test(&sensor, &omega, &unit_band(&basis, &omega), alpha, 1.0, &basis, &opts(m)).unwrap();
        prop_assert_eq!(r.kernel_dim == 0, r.gramian_nonsingular);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extension_is_adjoint_to_restriction(
        lo in 0.0f64..0.6,
        len in 0.05f64..0.4,
        g_seed in prop::collection::vec(-1.0f64..1.0, 4),
        h_seed in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let basis = basis();
        let grid = basis.grid();
        let weights = basis.weights();
        let omega = Subregion::interval(lo, (lo + len).min(1.0), 1.0).unwrap();
        let poly = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, ci| acc * x + ci);
        let h = GridFunction::from_fn(grid.clone(), |x| poly(&h_seed, x)).unwrap();
        let g = GridFunction::from_fn(omega.sample_grid(&grid), |x| poly(&g_seed, x)).unwrap();
        let eg = extend(&g, &omega, &grid).unwrap();
        let rh = restrict(&h, &omega).unwrap();
        let idx = omega.grid_indices(&grid);
        let lhs: f64 = (0..grid.len()).map(|i| weights[i] * eg.values[i] * h.values[i]).sum();
        let rhs: f64 = idx.iter().zip(&g.values).zip(&rh.values).map(|((&i, a), b)| weights[i] * a * b).sum();
        let scale: f64 = (0..grid.len()).map(|i| weights[i] * (eg.values[i] * h.values[i]).abs()).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-14 * scale.max(1e-300));
        prop_assert_eq!(restrict(&eg, &omega).unwrap(), g);
        for (i, v) in eg.values.iter().enumerate() {
            if !omega.contains(grid[i]) {
                prop_assert_eq!(*v, 0.0);
            }
        }
    }
}

#[test]
fn antisymmetric_states_hide_from_a_centred_sensor() {
    let basis = basis();
    let sensor = Sensor::pointwise(&basis, 0.5).unwrap();
    let omega = Subregion::interval(0.25, 0.75, 1.0).unwrap();
    let band = unit_band(&basis, &omega);
    for &alpha in &[0.75, 1.0] {
        let r = enlarged_observability_test(&sensor, &omega, &band, alpha, 1.0, &basis, &opts(4)).unwrap();
        assert_eq!(r.verdict, Verdict::NotObservable);
        assert!(!r.gramian_nonsingular);
        // odd Legendre degrees on an interval centred at the sensor
        assert_eq!(r.kernel_dim, 2);
        let w = r.witness.as_ref().unwrap();
        assert!(in_band(w, &band).unwrap());
        assert!(w.values.iter().any(|v| v.abs() > 1e-6));
        assert!(r.witness_observation_norm.unwrap() <= 1e-8);
    }
}

#[test]
fn band_excluding_zero_is_reported() {
    let basis = basis();
    let sensor = Sensor::pointwise(&basis, 0.5).unwrap();
    let omega = Subregion::interval(0.25, 0.75, 1.0).unwrap();
    let band = ConstraintBand::constant(omega.sample_grid(&basis.grid()), 0.5, 1.0).unwrap();
    let r = enlarged_observability_test(&sensor, &omega, &band, 1.0, 1.0, &basis, &opts(4)).unwrap();
    assert_eq!(r.verdict, Verdict::ZeroOutsideBand);
    assert!(r.range_meets_band);
}
