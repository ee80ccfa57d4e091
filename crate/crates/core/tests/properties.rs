use dicke_core::analytic::theta3;
use dicke_core::classical::*;
use dicke_core::coherent::*;
use dicke_core::dynamics::*;
use dicke_core::maps::*;
use dicke_core::model::*;
use proptest::prelude::*;

fn decomposition() -> impl Strategy<Value = Decomposition> {
    prop::collection::vec((0.01f64..1.0, 0.05f64..2.0), 2..40).prop_map(|v| {
        let mut e = 0.0;
        let (mut energies, mut weights) = (Vec::new(), Vec::new());
        for (w, gap) in v {
            e += gap;
            energies.push(e);
            weights.push(w);
        }
        Decomposition::from_weights(energies, weights).unwrap()
    })
}

fn times() -> Vec<f64> {
    (0..200).map(|k| 0.37 * k as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn survival_probability_is_bounded(d in decomposition()) {
        let s = survival_probability(&d, &times(), &SpOptions::default()).unwrap();
        prop_assert!((s.sp[0] - 1.0).abs() < 1e-12);
        for v in &s.sp {
            prop_assert!(*v >= 0.0 && *v <= 1.0 + 1e-12);
        }
        prop_assert!(d.pr >= 1.0 - 1e-12 && d.pr <= d.len() as f64 + 1e-9);
        prop_assert!((infinite_time_average(&d) - 1.0 / d.pr).abs() < 1e-12);
    }

    #[test]
    fn survival_probability_ignores_energy_offset(d in decomposition(), shift in -50.0f64..50.0) {
        let moved = Decomposition::from_weights(d.energies.iter().map(|e| e + shift).collect(), d.weights.clone()).unwrap();
        let a = survival_probability(&d, &times(), &SpOptions::default()).unwrap();
        let b = survival_probability(&moved, &times(), &SpOptions::default()).unwrap();
        for (x, y) in a.sp.iter().zip(&b.sp) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        prop_assert!((moved.mean_energy - d.mean_energy - shift).abs() < 1e-9);
    }

    #[test]
    fn theta3_matches_series(x in -10.0f64..10.0, y in 0.0f64..0.95) {
        let brute = 1.0 + 2.0 * (1..=400).map(|p| y.powi(p * p) * (2.0 * p as f64 * x).cos()).sum::<f64>();
        prop_assert!((theta3(x, y).unwrap() - brute).abs() < 1e-12);
        prop_assert!((theta3(x + std::f64::consts::PI, y).unwrap() - theta3(x, y).unwrap()).abs() < 1e-11);
    }

    #[test]
    fn map_csv_round_trips_exactly(values in prop::collection::vec(prop::option::of(any::<f64>().prop_filter("finite", |v| v.is_finite())), 12)) {
        let grid = MapGrid::new(3, 4);
        let records = values.iter().map(|v| v.map_or(MapRecord::missing(PointStatus::OffShell), MapRecord::ok)).collect();
        let map = ScalarMap { grid, records };
        let back = ScalarMap::from_csv(&map.to_csv(), grid).unwrap();
        for i in 0..grid.len() {
            prop_assert_eq!(map.value(i).map(f64::to_bits), back.value(i).map(f64::to_bits));
            prop_assert_eq!(map.records[i].status, back.records[i].status);
        }
    }

    #[test]
    fn phase_labels_round_trip(q in -4.0f64..4.0, p in -4.0f64..4.0, x in -0.99f64..0.99, phi in -3.1f64..3.1) {
        let params = ModelParams::new(1.0, 1.0, 1.0, 12.0).unwrap();
        let pt = PhasePoint::scaled(q, p, x, phi, &params);
        let back = labels_to_phase(&phase_to_labels(&pt, &params).unwrap(), &params);
        prop_assert!((back.q - pt.q).abs() < 1e-10);
        prop_assert!((back.p - pt.p).abs() < 1e-10);
        prop_assert!((back.jz - pt.jz).abs() < 1e-9);
        let dphi = (back.phi - pt.phi).rem_euclid(std::f64::consts::TAU);
        prop_assert!(dphi.min(std::f64::consts::TAU - dphi) < 1e-10);
        prop_assert!((0.0..std::f64::consts::TAU).contains(&back.phi));
    }

    #[test]
    fn surface_points_lie_on_the_shell(e in -2.0f64..-0.5, phi in -3.1f64..3.1, x in -0.95f64..0.95) {
        let params = ModelParams::new(1.0, 1.0, 1.0, 20.0).unwrap();
        let s = PoincareSurface::scaled(params, e);
        if let Some(pt) = s.point(phi, x) {
            prop_assert!(pt.p == 0.0);
            prop_assert!((hcl(&pt, &params) / params.j() - e).abs() < 1e-10);
        }
    }

    #[test]
    fn coherent_state_norm_splits_by_parity(q in -1.0f64..1.0, p in -1.0f64..1.0, x in -0.8f64..0.8, phi in -3.0f64..3.0) {
        let params = ModelParams::new(1.0, 1.0, 1.0, 4.0).unwrap();
        let cp = phase_to_labels(&PhasePoint::scaled(q, p, x, phi, &params), &params).unwrap();
        let plus = coherent_vector(&cp, &params, &BasisSpec::new(&params, 60, Parity::Positive)).unwrap();
        let minus = coherent_vector(&cp, &params, &BasisSpec::new(&params, 60, Parity::Negative)).unwrap();
        prop_assert!((plus.norm_captured + minus.norm_captured - 1.0).abs() < 1e-10);
        prop_assert!((plus.norm_captured - (1.0 + parity_expectation(&cp, &params)) / 2.0).abs() < 1e-10);
    }
}
