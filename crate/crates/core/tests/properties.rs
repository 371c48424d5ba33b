use elasticflow::discretization::{energy, l2_distance};
use elasticflow::flow::{mm_step, symmetry_residual, FlowConfig};
use elasticflow::io::fmt15;
use elasticflow::rearrange::{rearrange, step_norm, symmetric_step_norm};
use elasticflow::specialfn::{g, g_inv};
use elasticflow::{GridFunction, Obstacle, UniformGrid};
use proptest::prelude::*;

fn sine_series(grid: UniformGrid, coeffs: &[f64]) -> GridFunction {
    let mut v: Vec<f64> = (0..grid.nodes())
        .map(|i| {
            let x = grid.x(i);
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * (std::f64::consts::PI * (k + 1) as f64 * x).sin() / ((k + 1) * (k + 1)) as f64)
                .sum()
        })
        .collect();
    v[0] = 0.0;
    v[grid.n()] = 0.0;
    GridFunction::new(grid, v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rearrangement_is_a_sorted_permutation(values in prop::collection::vec(0.0f64..10.0, 5..80)) {
        let grid = UniformGrid::new(values.len() - 1).unwrap();
        let f = GridFunction::new(grid, values.clone()).unwrap();
        let pair = rearrange(&f).unwrap();
        let star = pair.f_star.values();
        prop_assert!(star.windows(2).all(|w| w[0] >= w[1]));
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        prop_assert_eq!(star, &sorted[..]);
        prop_assert_eq!(symmetry_residual(&pair.f_sym), 0.0);
        for p in [1.0, 2.0, f64::INFINITY] {
            let base = step_norm(&f, p);
            prop_assert!((step_norm(&pair.f_star, p) - base).abs() <= 1e-12 * (1.0 + base));
            prop_assert!((symmetric_step_norm(&f, p).unwrap() - base).abs() <= 1e-12 * (1.0 + base));
        }
    }

    #[test]
    fn energy_is_reflection_invariant(coeffs in prop::collection::vec(-1.0f64..1.0, 1..6), n in 8usize..120) {
        let u = sine_series(UniformGrid::new(n).unwrap(), &coeffs);
        let e = energy(&u).unwrap();
        let r = energy(&u.reversed()).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert!((e - r).abs() <= 1e-12 * (1.0 + e));
    }

    #[test]
    fn g_and_g_inv_round_trip(s in -50.0f64..50.0) {
        let y = g(s).unwrap();
        prop_assert!(y.abs() < 0.5 * elasticflow::specialfn::c0());
        prop_assert!((g_inv(y).unwrap() - s).abs() <= 1e-8 * (1.0 + s.abs()));
    }

    #[test]
    fn fmt15_keeps_fifteen_digits(x in prop::num::f64::NORMAL) {
        let back: f64 = fmt15(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-14 * x.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn minimizing_movement_step_decreases_phi(
        coeffs in prop::collection::vec(-0.3f64..0.3, 1..4),
        height in 0.005f64..0.1,
        tau_exp in -4.0f64..-2.0,
    ) {
        let grid = UniformGrid::new(40).unwrap();
        let psi = Obstacle::cone(grid, height).unwrap();
        let raw = sine_series(grid, &coeffs);
        let lifted: Vec<f64> = raw.values().iter().zip(psi.values()).map(|(u, p)| u.max(*p)).collect();
        let f = GridFunction::new(grid, lifted).unwrap();
        let cfg = FlowConfig {
            tau: 10f64.powf(tau_exp),
            ..FlowConfig::default()
        };
        let (u, kkt) = mm_step(&f, &psi, &cfg).unwrap();
        prop_assert!(psi.admits(&u));
        let phi = energy(&u).unwrap() + l2_distance(&u, &f).unwrap().powi(2) / (2.0 * cfg.tau);
        let e_f = energy(&f).unwrap();
        prop_assert!(phi <= e_f + 64.0 * f64::EPSILON * (1.0 + e_f));
        prop_assert!(kkt.is_valid());
    }

    #[test]
    fn symmetric_data_gives_symmetric_steps(c1 in 0.0f64..0.4, c3 in -0.2f64..0.2, height in 0.005f64..0.05) {
        let grid = UniformGrid::new(40).unwrap();
        let psi = Obstacle::cone(grid, height).unwrap();
        let raw = sine_series(grid, &[c1, 0.0, c3]);
        let lifted: Vec<f64> = raw.values().iter().zip(psi.values()).map(|(u, p)| u.max(*p)).collect();
        let f = GridFunction::new(grid, lifted).unwrap();
        let (u, _) = mm_step(&f, &psi, &FlowConfig::default()).unwrap();
        prop_assert!(symmetry_residual(&u) <= 1e-10);
    }
}
