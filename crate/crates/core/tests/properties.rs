use std::sync::Arc;

use num_complex::Complex64;
use pdm_core::classical_dynamics::ScalarField;
use pdm_core::em_coupling::{hermite_functions, shell_points};
use pdm_core::mass_models::generating_relation_residual;
use pdm_core::operators::{build_pseudo_momentum, build_von_roos, symmetrize};
use pdm_core::output::to_stable_json;
use pdm_core::point_transform::{pull_wavefunction, push_wavefunction};
use pdm_core::tridiag::SymmetricTridiagonal;
use pdm_core::*;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(32)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn ordering_sum_is_minus_one(alpha in -2.0..2.0f64, beta in -2.0..2.0f64) {
        let o = OrderingParams::from_alpha_beta(alpha, beta);
        prop_assert!((o.alpha() + o.beta() + o.gamma() + 1.0).abs() <= 1e-12);
        prop_assert!(OrderingParams::new(o.alpha(), o.beta(), o.gamma()).is_ok());
    }

    #[test]
    fn map_is_monotone_and_invertible(a in 0.05..2.0f64, x in -2.9..2.9f64) {
        let g = Grid::uniform(-3.0, 3.0, 601).unwrap();
        let map = build_map(&MassProfile::quadratic(a), &g).unwrap();
        prop_assert!(map.q_values().windows(2).all(|w| w[1] > w[0]));
        let q = map.q_at(x).unwrap();
        prop_assert!((map.x_at(q).unwrap() - x).abs() < 1e-8);
    }

    #[test]
    fn norm_preserved_through_transform(a in 0.1..2.0f64, centre in -1.0..1.0f64) {
        let g = Grid::uniform(-8.0, 8.0, 1601).unwrap();
        let m = MassProfile::quadratic(a);
        let map = build_map(&m, &g).unwrap();
        let phi = GriddedWavefunction::sample(g, Measure::Dx, |x| Complex64::new((-(x - centre).powi(2)).exp(), 0.0));
        let psi = pull_wavefunction(&phi, &map, &m).unwrap();
        let rel = (psi.norm_squared() - phi.norm_squared()).abs() / phi.norm_squared();
        prop_assert!(rel < 1e-6, "rel {}", rel);
        let back = push_wavefunction(&psi, &map, &m).unwrap();
        for (u, v) in back.values.iter().zip(&phi.values) {
            prop_assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn symmetrized_operator_is_exactly_symmetric(width in 2.0..20.0f64, alpha in -1.0..0.5f64, beta in -1.0..0.0f64) {
        let g = Grid::uniform(-4.0, 4.0, 201).unwrap();
        let op = build_von_roos(&MassProfile::gaussian(width), &PotentialSpec::new(|x| x * x), OrderingParams::from_alpha_beta(alpha, beta), &g).unwrap();
        let s = symmetrize(&op).unwrap();
        prop_assert!(s.scaling.iter().all(|d| *d > 0.0));
        let (l, _, u) = s.operator.matrix.real_tridiagonal();
        prop_assert_eq!(l, u);
    }

    #[test]
    fn pseudo_momentum_hermitian_for_any_quadratic_mass(a in 0.0..3.0f64) {
        let g = Grid::uniform(-2.0, 2.0, 101).unwrap();
        let pi = build_pseudo_momentum(&MassProfile::quadratic(a), &g).unwrap();
        prop_assert!(pi.matrix.hermiticity_defect() <= 1e-12);
    }

    #[test]
    fn s_unity_relation_holds(lambda in 0.0..5.0f64, dof in 1u32..5, r in 0.1..10.0f64) {
        let e = PairCatalogEntry::s_unity(lambda, dof).unwrap();
        prop_assert!(generating_relation_residual(&e.mass, &e.scalar, dof, r).abs() <= 1e-8);
    }

    #[test]
    fn symmetric_gauge_always_eligible(lambda in 0.1..4.0f64, b0 in -3.0..3.0f64, seed in any::<u64>()) {
        let e = PairCatalogEntry::m_quadratic(lambda, 3).unwrap();
        let spec = VectorPotentialSpec::new(GaugeFamily::Symmetric, b0, e.scalar, e.mass);
        let rep = gauge_divergence_residual(&spec, &shell_points(20, 0.2, 5.0, seed)).unwrap();
        prop_assert!(rep.max_residual <= 1e-10);
    }

    #[test]
    fn landau_levels_equally_spaced_and_k1_free(b0 in 0.1..5.0f64, neg in any::<bool>(), k1 in -3.0..3.0f64, k3 in -2.0..2.0f64, n in 0i64..50) {
        let e = if neg { -1.0 } else { 1.0 };
        let a = landau_energy(b0, e, k1, k3, n).unwrap();
        let b = landau_energy(b0, e, 0.0, k3, n + 1).unwrap();
        prop_assert!((b - a - 2.0 * b0).abs() <= 1e-12 * b.abs());
        prop_assert_eq!(a, landau_energy(b0, e, 0.0, k3, n).unwrap());
    }

    #[test]
    fn hermite_functions_bounded(x in -40.0..40.0f64) {
        // Cramér's inequality.
        let bound = std::f64::consts::PI.powf(-0.25) * (1.0 + 1e-12);
        for v in hermite_functions(120, x) {
            prop_assert!(v.is_finite() && v.abs() <= bound);
        }
    }

    #[test]
    fn sturm_count_monotone(diag in prop::collection::vec(-5.0..5.0f64, 2..30), shift in -10.0..10.0f64) {
        let n = diag.len();
        let t = SymmetricTridiagonal::new(diag, vec![0.7; n - 1]).unwrap();
        prop_assert!(t.sturm_count(shift) <= t.sturm_count(shift + 0.5));
        let (lo, hi) = t.gershgorin();
        prop_assert_eq!(t.sturm_count(lo - 1e-9), 0);
        prop_assert_eq!(t.sturm_count(hi + 1e-9), n);
    }

    #[test]
    fn harmonic_energy_conserved(x0 in -1.0..1.0f64, p0 in -1.0..1.0f64) {
        prop_assume!(x0.abs() + p0.abs() > 0.1);
        let f = ClassicalFields::new(1)
            .with_mass_profile(&MassProfile::inverse_quartic())
            .with_potential(ScalarField::new(|x| x[0] * x[0]).with_gradient(|x| vec![2.0 * x[0]]));
        let t = integrate(&ClassicalState::new(vec![x0], vec![p0]), &f, 2e-4, 5000, Scheme::Rk4).unwrap();
        prop_assert!(t.drift <= 1e-8, "drift {}", t.drift);
    }

    #[test]
    fn stable_json_round_trips(values in prop::collection::vec(-1e300..1e300f64, 0..20)) {
        let s = to_stable_json(&values).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, values);
    }
}

#[test]
fn potential_closure_type_is_shareable() {
    let v: PotentialFn = Arc::new(|q| q * q);
    let w = v.clone();
    std::thread::spawn(move || assert_eq!(w(2.0), 4.0)).join().unwrap();
}
