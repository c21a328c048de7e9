use kinetic_core::euler::{energy_dissipation, hugoniot_from_right, hugoniot_solve, rh_residual, EulerState, KSet};
use kinetic_core::flux::Flux;
use kinetic_core::front::{front_track, FrontTrackParams, FrontTrackingSolution};
use kinetic_core::measure::{Atom, AtomicMeasure3, Segment};
use kinetic_core::oleinik::oleinik_check;
use kinetic_core::pwc::PiecewiseConstant;
use kinetic_core::report::{measure_csv, read_measure_csv};
use proptest::prelude::*;

fn pieces() -> impl Strategy<Value = PiecewiseConstant> {
    (1usize..12).prop_flat_map(|n| {
        (prop::collection::vec(0.01f64..0.5, n), prop::collection::vec(0u32..=64, n + 1)).prop_map(|(gaps, lv)| {
            let mut x = -1.0;
            let breaks = gaps
                .iter()
                .map(|g| {
                    x += g;
                    x
                })
                .collect();
            PiecewiseConstant::new(breaks, lv.iter().map(|&k| k as f64 / 64.0).collect()).unwrap()
        })
    })
}

fn solve(data: &PiecewiseConstant, t: f64) -> FrontTrackingSolution {
    front_track(data, &Flux::burgers(), t, FrontTrackParams { dv: 1.0 / 64.0, max_fronts: 100_000 }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mass_balance_and_bounds(data in pieces()) {
        let t = 1.0;
        let sol = solve(&data, t);
        let (a, b) = (-4.0, 8.0);
        let f = Flux::burgers();
        let flux_in = t * (f.f(data.left_value()) - f.f(data.right_value()));
        let defect = sol.mass(t, a, b) - sol.mass(0.0, a, b) - flux_in;
        prop_assert!(defect.abs() < 1e-10, "mass defect {defect}");
        let snap = sol.snapshot(t);
        prop_assert!(snap.min_value() >= data.min_value() - 1e-12);
        prop_assert!(snap.max_value() <= data.max_value() + 1e-12);
        prop_assert!(sol.total_variation(t) <= data.total_variation() + 1e-12);
    }

    #[test]
    fn one_sided_lipschitz(data in pieces(), t in 0.1f64..1.0) {
        let sol = solve(&data, 1.0);
        let probes: Vec<f64> = (0..=600).map(|i| -3.0 + 6.0 * i as f64 / 600.0).collect();
        let q = oleinik_check(&sol, t, &probes).unwrap();
        prop_assert!(q <= 1.0 / t + 1e-9, "quotient {q} at t = {t}");
    }

    #[test]
    fn hugoniot_states_are_admissible(w in -1.0f64..1.0, rho in 0.5f64..2.0, s in 1e-3f64..0.3, fam in 1u8..=2) {
        let k = KSet::default();
        let base = EulerState::from_wz(w, w + 2.0 * rho);
        let sh = hugoniot_solve(base, fam, s, &k).unwrap();
        prop_assert!(rh_residual(&sh.left, &sh.right, sh.sigma) < 1e-10);
        prop_assert!(energy_dissipation(&sh.left, &sh.right, sh.sigma) <= 1e-12);
        let back = hugoniot_from_right(sh.right, fam, s, &k).unwrap();
        prop_assert!((back.left.rho - base.rho).abs() < 1e-9 && (back.left.m - base.m).abs() < 1e-9);
        prop_assert!((back.sigma - sh.sigma).abs() < 1e-9);
    }

    #[test]
    fn measure_table_round_trip(
        atoms in prop::collection::vec((0.0f64..1.0, -2.0f64..2.0, 0.0f64..1.0, -1.0f64..1.0), 0..20),
        segs in prop::collection::vec((0.0f64..1.0, -2.0f64..2.0, 0.0f64..0.5, 0.0f64..0.5, -3.0f64..3.0), 0..20),
    ) {
        let m = AtomicMeasure3 {
            atoms: atoms.iter().map(|&(t, x, v, w)| Atom { t, x, v, w }).collect(),
            segments: segs.iter().map(|&(t, x, va, dl, density)| Segment { t, x, va, vb: va + dl, density }).collect(),
            ..Default::default()
        };
        prop_assert_eq!(read_measure_csv(&measure_csv(&m).unwrap()).unwrap(), m);
    }
}
