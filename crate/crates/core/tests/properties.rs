//! Randomized invariants of the quadrature, truncation and controller rules.

use beast_flex::{
    adapt_q, build_contour, detect_stagnation, filter_value, orthonormalize_truncate,
    random_initial_block, resize_subspace, smallest_nonconverged_residual, BlockVectors64,
    Interval, IterationMode, RitzSet, RuleKind, SolverConfig, StagnationStatistic,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn interval_strategy() -> impl Strategy<Value = (f64, f64)> {
    (-50.0f64..50.0, 1e-3f64..40.0).prop_map(|(lo, width)| (lo, lo + width))
}

proptest! {
    // Node count adaptation never shrinks the rule and is monotone in the
    // observed residual drop.
    #[test]
    fn adapt_q_never_decreases(q in 2usize..200, drop in 1e-8f64..10.0) {
        let q_new = adapt_q(q, drop, false);
        prop_assert!(q_new >= q);
        let q_even = adapt_q(q, drop, true);
        prop_assert!(q_even >= q);
        prop_assert_eq!(q_even % 2, 0);
    }

    #[test]
    fn adapt_q_monotone_in_drop(q in 2usize..100, a in 1e-8f64..10.0, b in 1e-8f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(adapt_q(q, lo, false) <= adapt_q(q, hi, false));
    }

    // Half-contour with conjugate completion equals the full rule for real
    // test points (real pencils), for both quadrature kinds and all moments.
    #[test]
    fn half_contour_matches_full_on_real_axis(
        (lo, hi) in interval_strategy(),
        ecc in 0.05f64..1.0,
        q_half in 1usize..30,
        k in 0usize..4,
        x in -100.0f64..100.0,
    ) {
        let q = 2 * q_half;
        let iv = Interval::new(lo, hi).unwrap();
        for kind in [RuleKind::GaussLegendre, RuleKind::Trapezoidal] {
            let full = build_contour(iv, ecc, kind, q, false).unwrap();
            let half = build_contour(iv, ecc, kind, q, true).unwrap();
            let lam = Complex64::new(x, 0.0);
            let (Ok(a), Ok(b)) = (filter_value(&full, k, lam), filter_value(&half, k, lam))
            else {
                // landed exactly on a node; nothing to compare
                return Ok(());
            };
            prop_assert!((a - b).norm() <= 1e-10 * (1.0 + a.norm()));
        }
    }

    // The offset trapezoid rule on the unit circle has the closed form
    // f_0(lambda) = 1 / (1 + lambda^q).
    #[test]
    fn trapezoid_closed_form(q_half in 2usize..12, x in -1.8f64..1.8, y in -1.8f64..1.8) {
        let q = 2 * q_half;
        let iv = Interval::new(-1.0, 1.0).unwrap();
        let rule = build_contour(iv, 1.0, RuleKind::Trapezoidal, q, false).unwrap();
        let lam = Complex64::new(x, y);
        if (lam.norm() - 1.0).abs() < 1e-3 {
            return Ok(()); // too close to the contour for a stable comparison
        }
        let Ok(f) = filter_value(&rule, 0, lam) else { return Ok(()) };
        let exact = Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) + lam.powu(q as u32));
        prop_assert!((f - exact).norm() <= 1e-9 * (1.0 + exact.norm()), "{f} vs {exact}");
    }

    // Orthonormalization: Q has orthonormal columns spanning the input up to
    // the truncation threshold, and sigma is non-increasing.
    #[test]
    fn truncated_basis_is_orthonormal_and_spans(
        n in 4usize..24,
        p in 1usize..10,
        seed in 0u64..1000,
    ) {
        let p = p.min(n);
        let u = random_initial_block::<f64>(n, p, seed);
        let (q, rank, sigma) = orthonormalize_truncate(&u, 1e-14).unwrap();
        prop_assert_eq!(q.ncols(), rank);
        let gram = q.adjoint() * &q;
        let eye = BlockVectors64::identity(rank, rank);
        prop_assert!((gram - eye).norm() < 1e-12);
        for w in sigma.as_slice().windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        // random Gaussian blocks are full rank with probability 1
        prop_assert_eq!(rank, p.min(n));
        let residual = &u - &q * (q.adjoint() * &u);
        prop_assert!(residual.norm() <= 1e-10 * u.norm());
    }

    // The stagnation statistic ignores converged and out-of-interval pairs
    // and is invariant under reordering.
    #[test]
    fn stagnation_residual_is_permutation_invariant(
        residuals in prop::collection::vec(1e-16f64..1.0, 1..12),
        flags in prop::collection::vec(any::<bool>(), 12),
        perm_seed in 0u64..100,
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let k = residuals.len();
        let in_interval: Vec<bool> = flags[..k].to_vec();
        let make = |res: &[f64], ii: &[bool]| RitzSet::<f64> {
            lambda: vec![0.0; res.len()],
            x: BlockVectors64::zeros(4, res.len()),
            residual: res.to_vec(),
            in_interval: ii.to_vec(),
            converged: res.iter().map(|&r| r < 1e-13).collect(),
            locked: vec![false; res.len()],
        };
        let base = make(&residuals, &in_interval);
        let mut idx: Vec<usize> = (0..k).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed);
        idx.shuffle(&mut rng);
        let shuffled = make(
            &idx.iter().map(|&i| residuals[i]).collect::<Vec<_>>(),
            &idx.iter().map(|&i| in_interval[i]).collect::<Vec<_>>(),
        );
        for stat in [StagnationStatistic::Min, StagnationStatistic::Max] {
            let a = smallest_nonconverged_residual(&base, 1e-13, stat);
            let b = smallest_nonconverged_residual(&shuffled, 1e-13, stat);
            prop_assert_eq!(a, b);
        }
    }

    // Stagnation detection fires exactly when the drop rate exceeds the
    // threshold and both residuals exist.
    #[test]
    fn stagnation_matches_ratio(prev in 1e-14f64..1.0, cur in 1e-14f64..1.0) {
        let hit = detect_stagnation(Some(prev), Some(cur), 0.01);
        prop_assert_eq!(hit, cur / prev > 0.01);
        prop_assert!(!detect_stagnation(None, Some(cur), 0.01));
        prop_assert!(!detect_stagnation(Some(prev), None, 0.01));
    }

    // Resizing invariants: m0 = s * rhs_1, rhs_1 respects the floor, and the
    // target never drops below factor * 1 even when everything is locked.
    #[test]
    fn resize_respects_floor_and_layout(
        n_expect in 1usize..500,
        locked in 0usize..500,
        s in 1usize..8,
        factor in 1.01f64..3.0,
    ) {
        let mut config = SolverConfig::<f64>::new(IterationMode::MomentOuter, n_expect);
        config.subspace_factor = factor;
        let (rhs_1, m0) = resize_subspace(&config, locked, s);
        prop_assert_eq!(m0, s * rhs_1);
        prop_assert!(rhs_1 >= config.min_rhs);
        let remaining = n_expect.saturating_sub(locked).max(1);
        let target = (factor * remaining as f64).ceil() as usize;
        prop_assert!(m0 >= target.min(s * config.min_rhs.max(target.div_ceil(s))));
        // enough columns to cover the target
        prop_assert!(s * rhs_1 >= target || rhs_1 == config.min_rhs);
    }
}
