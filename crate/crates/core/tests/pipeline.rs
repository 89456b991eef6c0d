use std::sync::Arc;

use pdm_core::classical_dynamics::{legendre_residual, ScalarField};
use pdm_core::em_coupling::{build_pdm_eigenfunction, shell_points};
use pdm_core::output::to_stable_json;
use pdm_core::point_transform::{pull_wavefunction_onto, push_wavefunction};
use pdm_core::*;

#[test]
fn tabulated_mass_matches_analytic_spectrum() {
    // The same mass from a CSV table and from its closed form.
    let table: String = (0..=400)
        .map(|i| {
            let x = -10.0 + 0.05 * i as f64;
            format!("{x},{}\n", 1.0 + 0.25 * x * x)
        })
        .collect();
    let tab = MassProfile::from_csv(format!("x,m\n{table}").as_bytes(), false).unwrap();
    let exact = MassProfile::quadratic(0.25);
    let v: PotentialFn = Arc::new(|q| q * q);
    let opts = SpectralOptions::default();
    let a = isospectrality_check(&exact, &v, (-6.0, 6.0), 2001, 4, 1e-3, &opts).unwrap();
    let b = isospectrality_check(&tab, &v, (-6.0, 6.0), 2001, 4, 1e-3, &opts).unwrap();
    assert!(a.passed && b.passed);
    for (x, y) in a.e_x.iter().zip(&b.e_x) {
        assert!((x - y).abs() < 1e-4 * x.abs(), "{x} vs {y}");
    }
}

#[test]
fn eigenfunction_maps_between_coordinates() {
    // Ground state of −∂_q² + q² pushed to x must be the x-space eigenvector.
    let m = MassProfile::quadratic(0.25);
    let xg = Grid::uniform(-6.0, 6.0, 2001).unwrap();
    let map = build_map(&m, &xg).unwrap().reanchored(0.0).unwrap();
    let v = PotentialSpec::through_map(&map, |q| q * q);
    let x_side = solve_pdm(&m, &v, OrderingParams::mm_ordering(), &xg, 1, true).unwrap();
    let phi = x_side.eigenvectors.unwrap().remove(0);
    let qg = Grid::uniform(map.q_range().0, map.q_range().1, 4001).unwrap();
    let gs = GriddedWavefunction::sample(qg.clone(), Measure::Dq, |q| {
        num_complex::Complex64::new(std::f64::consts::PI.powf(-0.25) * (-q * q / 2.0).exp(), 0.0)
    });
    let pushed = push_wavefunction(&gs, &map, &m).unwrap();
    let overlap: Vec<f64> = pushed
        .values
        .iter()
        .zip(&phi.values)
        .map(|(a, b)| a.re * b.re)
        .collect();
    let s = pdm_core::numerics::simpson(xg.points(), &overlap);
    assert!((s.abs() - 1.0).abs() < 1e-4, "{s}");
    let pulled = pull_wavefunction_onto(&pushed, &map, &m, &qg).unwrap();
    assert!((pulled.norm_squared() - 1.0).abs() < 1e-6);
}

#[test]
fn landau_example_document() {
    let cfg = LandauConfig {
        b0: 1.0,
        charge: 1.0,
        field: 0.0,
        k1: 0.0,
        k3: 0.0,
    };
    let r = solve_example_numeric(cfg, None, 4001, 6, true).unwrap();
    let pair = PairCatalogEntry::s_unity(1.0, 3).unwrap();
    let spec = VectorPotentialSpec::new(GaugeFamily::Symmetric, cfg.b0, pair.scalar.clone(), pair.mass.clone());
    let gauge = gauge_divergence_residual(&spec, &shell_points(100, 0.5, 5.0, 1)).unwrap();
    let doc = serde_json::json!({
        "config": cfg,
        "analytic_spectrum": r.analytic,
        "numeric_spectrum": r.numeric,
        "overlaps": r.overlaps,
        "gauge_report": gauge,
    });
    let text = to_stable_json(&doc).unwrap();
    let back: serde_json::Value = serde_json::from_str(&text).unwrap();
    let analytic: Vec<f64> = serde_json::from_value(back["analytic_spectrum"].clone()).unwrap();
    assert_eq!(analytic, vec![1.0, 3.0, 5.0, 7.0, 9.0, 11.0]);
    assert_eq!(text, to_stable_json(&doc).unwrap());
    // The PDM eigenfunction is finite across the shell.
    let sol = LandauSolution::new(cfg, 0).unwrap();
    let phi = build_pdm_eigenfunction(&sol, &pair.mass, &pair.scalar, &shell_points(50, 0.5, 3.0, 2)).unwrap();
    assert!(phi.iter().all(|v| v.norm().is_finite()));
}

#[test]
fn classical_trajectory_round_trip_through_csv() {
    let f = ClassicalFields::new(2)
        .with_mass_profile(&MassProfile::quadratic(0.5).into_radial())
        .with_potential(ScalarField::new(|x| x[0] * x[0] + x[1] * x[1]));
    let s = ClassicalState::from_velocity(vec![0.5, 0.0], &[0.0, 0.8], &f).unwrap();
    let t = integrate(&s, &f, 1e-3, 2000, Scheme::Rk4).unwrap();
    assert!(t.drift < 1e-8, "{:e}", t.drift);
    assert!(legendre_residual(&t, &f).unwrap() < 1e-12);
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        vec!["t", "x1", "x2", "P1", "P2", "E"]
    );
    assert_eq!(rd.records().count(), 2001);
}
