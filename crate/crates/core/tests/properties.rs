use proptest::prelude::*;

use stochastic_stokes::harness::{fit_rate, moment_error};
use stochastic_stokes::noise::{pairwise_sum, BrownianDriver};
use stochastic_stokes::spectral::{leray_project, SpectralField};
use stochastic_stokes::TorusMesh;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coarse_increments_are_fine_sums(seed in any::<u64>(), stream in 0u64..1000, level in 0usize..8) {
        let d = BrownianDriver::with_stream(seed, stream, 0.5, 256).unwrap();
        let fine = d.fine_increments();
        let coarse = d.increments_at_level(level).unwrap();
        let w = 1 << level;
        for (i, c) in coarse.iter().enumerate() {
            prop_assert_eq!(*c, pairwise_sum(&fine[i * w..(i + 1) * w]));
        }
    }

    #[test]
    fn leray_projection_is_idempotent_and_orthogonal(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
        use std::f64::consts::PI;
        let f = SpectralField::from_fn_vector(8, 1.0, &|x| [
            a * (2.0 * PI * x[0]).sin() + b * (2.0 * PI * x[1]).cos(),
            c * (2.0 * PI * (x[0] - x[1])).sin() + a * b * (4.0 * PI * x[1]).cos(),
        ]).unwrap();
        let p = leray_project(&f);
        let pp = leray_project(&p);
        prop_assert_eq!(pp.data(), p.data());
        let rest = f.difference(&p);
        let lhs = p.l2_norm().powi(2) + rest.l2_norm().powi(2);
        prop_assert!((lhs - f.l2_norm().powi(2)).abs() <= 1e-12 * lhs.max(1.0));
    }

    #[test]
    fn mesh_counts(n in 2usize..24, l in 0.1f64..10.0) {
        let m = TorusMesh::new(l, n).unwrap();
        prop_assert_eq!(m.num_vertices(), n * n);
        prop_assert_eq!(m.num_edges(), 3 * n * n);
        prop_assert_eq!(m.num_triangles(), 2 * n * n);
        prop_assert!((m.h() - l * 2f64.sqrt() / n as f64).abs() <= 1e-14 * l);
    }

    #[test]
    fn power_laws_are_fitted_exactly(p in 0.1f64..3.0, c in 0.01f64..100.0) {
        let pts: Vec<(f64, f64)> = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
            .iter()
            .map(|&x: &f64| (x, c * x.powf(p)))
            .collect();
        let fit = fit_rate(&pts).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-10);
        prop_assert!(fit.r2 > 1.0 - 1e-10);
    }

    #[test]
    fn lyapunov_monotonicity(v in prop::collection::vec(0.0f64..1e3, 2..64), q in 2.0f64..12.0, dq in 0.0f64..6.0) {
        let lo = moment_error(&v, q).unwrap().value;
        let hi = moment_error(&v, q + dq).unwrap().value;
        prop_assert!(lo <= hi);
    }
}
