//! Property tests for the structural invariants: grid construction,
//! partition symmetry, flow exactness and continuity, and config
//! round-trips.

use proptest::prelude::*;

use fbmsde::coeffs::Family;
use fbmsde::fbm::{covariance, generate_circulant};
use fbmsde::flow::{build_partition, PiecewiseFlow};
use fbmsde::scheme::{Generator, SchemeConfig};
use fbmsde::{builtin_family, path_stats};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn paths_start_at_zero_on_uniform_grids(
        n in 1usize..200,
        seed in any::<u64>(),
        hurst in 0.05f64..0.95,
        horizon in 0.1f64..5.0,
    ) {
        let p = generate_circulant(n, horizon, hurst, seed).unwrap();
        prop_assert_eq!(p.values()[0], 0.0);
        prop_assert_eq!(p.times().len(), n + 1);
        let dt = horizon / n as f64;
        for (i, t) in p.times().iter().enumerate() {
            prop_assert!((t - i as f64 * dt).abs() <= 1e-12 * horizon.max(1.0));
        }
        prop_assert!(p.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn covariance_is_symmetric_and_psd_on_pairs(
        s in 0.0f64..4.0,
        t in 0.0f64..4.0,
        hurst in 0.05f64..0.95,
    ) {
        let ab = covariance(s, t, hurst).unwrap();
        let ba = covariance(t, s, hurst).unwrap();
        prop_assert_eq!(ab, ba);
        let aa = covariance(s, s, hurst).unwrap();
        let bb = covariance(t, t, hurst).unwrap();
        prop_assert!(aa >= 0.0 && bb >= 0.0);
        // 2x2 Gram determinant of a genuine covariance is nonnegative.
        prop_assert!(aa * bb - ab * ab >= -1e-12 * (aa * bb).max(1.0));
    }

    #[test]
    fn partition_nodes_are_symmetric_and_uniform(
        radius in 1e-3f64..50.0,
        level in 1usize..300,
    ) {
        let p = build_partition(radius, level).unwrap();
        let l = level as isize;
        prop_assert_eq!(p.node(0), 0.0);
        prop_assert_eq!(p.node(l), radius / level as f64 * level as f64);
        for i in 0..=l {
            prop_assert_eq!(p.node(-i), -p.node(i));
        }
        let nodes = p.nodes();
        prop_assert_eq!(nodes.len(), 2 * level + 1);
        for w in nodes.windows(2) {
            prop_assert!((w[1] - w[0] - p.spacing()).abs() <= 4.0 * f64::EPSILON * radius);
        }
    }

    #[test]
    fn taylor_flow_is_exact_for_additive_noise(
        c in -3.0f64..3.0,
        z in -5.0f64..5.0,
        u in -2.0f64..2.0,
        level in 1usize..64,
    ) {
        let pair = builtin_family(Family::Additive(c)).unwrap();
        let flow = PiecewiseFlow::new(build_partition(2.0, level).unwrap(), pair, 100.0);
        let v = flow.psi(z, u).unwrap();
        prop_assert!((v - (z + c * u)).abs() <= 1e-12 * (1.0 + z.abs() + (c * u).abs()));
    }

    #[test]
    fn taylor_flow_is_continuous_near_nodes(
        z in -1.0f64..1.0,
        i in 1isize..16,
        level in 16usize..64,
    ) {
        let pair = builtin_family(Family::Trig(1.0, 1.0)).unwrap();
        let flow = PiecewiseFlow::new(build_partition(1.0, level).unwrap(), pair, 100.0);
        let i = i.min(level as isize - 1);
        let node = flow.partition().node(i);
        let eps = 1e-9 * flow.partition().spacing();
        let below = flow.psi(z, node - eps).unwrap();
        let at = flow.psi(z, node).unwrap();
        let above = flow.psi(z, node + eps).unwrap();
        // psi is Lipschitz in u with constant sup |sigma| (1 + o(1)).
        prop_assert!((at - below).abs() <= 2.0 * eps + 1e-13);
        prop_assert!((above - at).abs() <= 2.0 * eps + 1e-13);
    }

    #[test]
    fn stats_dominate_subsampled_stats(
        seed in any::<u64>(),
        hurst in 0.28f64..0.48,
    ) {
        let p = generate_circulant(64, 1.0, hurst, seed).unwrap();
        let q = p.subsample(4).unwrap();
        let sp = path_stats(&p, 0.01).unwrap();
        let sq = path_stats(&q, 0.01).unwrap();
        prop_assert!(sq.sup_norm <= sp.sup_norm);
        prop_assert!(sq.holder_norm <= sp.holder_norm * (1.0 + 1e-12));
    }

    #[test]
    fn scheme_config_round_trips(
        n in 1usize..64,
        hurst in 0.26f64..0.49,
        seed in any::<u64>(),
        x0 in -2.0f64..2.0,
    ) {
        let cfg = SchemeConfig {
            n,
            q: 8,
            hurst,
            horizon: 1.0,
            x0,
            rho: 0.01,
            seed,
            coeffs: Family::Trig(1.0, 1.0),
            oracle_tol: 1e-10,
            generator: Generator::Circulant,
            level_override: None,
            stats_inflation: 1.0,
        };
        let json = serde_json::to_string(&cfg).unwrap();
        let back: SchemeConfig = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(cfg, back);
    }
}
