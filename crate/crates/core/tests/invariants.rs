//! Property suites over randomly drawn parameters.

use proptest::prelude::*;
use puzzleforge_core::interval::RealInterval;
use puzzleforge_core::measures;
use puzzleforge_core::puzzle;
use puzzleforge_core::regular::{self, DEFAULT_KAPPA};
use puzzleforge_core::scalar::{self, ScalarMapParam};
use puzzleforge_core::strongreg::{check_diamond, Itinerary, ItineraryEntry};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Levels tile [-beta, beta], stay symmetric, and refine.
    #[test]
    fn puzzle_levels_tile_and_refine(a in -2.0f64..-0.76, n in 1usize..8) {
        let p = ScalarMapParam::new(a).unwrap();
        let beta = scalar::fixed_points(p).unwrap().beta;
        let coarse = puzzle::puzzle_level(p, n - 1);
        let fine = puzzle::puzzle_level(p, n);
        let total: f64 = fine.pieces.iter().map(|q| q.interval.len()).sum();
        prop_assert!(((total - 2.0 * beta) / (2.0 * beta)).abs() <= 1e-9);
        for (c, d) in fine.cut_points.iter().zip(fine.cut_points.iter().rev()) {
            prop_assert!((c + d).abs() <= 1e-9);
        }
        for c in &coarse.cut_points {
            prop_assert!(fine.cut_points.iter().any(|d| (c - d).abs() <= 1e-9));
        }
        prop_assert!(fine.pieces.len() <= (1 << (n + 1)) + 1);
    }

    /// Every enumerated maximal regular interval passes the standalone
    /// verifier with the same branch signs.
    #[test]
    fn enumerated_intervals_verify(offset in 1e-5f64..5e-2) {
        let p = ScalarMapParam::new(-2.0 + offset).unwrap();
        let report = regular::enumerate_regular(p, 8, DEFAULT_KAPPA);
        for r in &report.regular_intervals {
            let reg = regular::is_regular(p, &r.piece, DEFAULT_KAPPA)
                .map_err(|e| TestCaseError::fail(format!("{e:?}")))?;
            prop_assert_eq!(&reg.branch_certificate, &r.branch_certificate);
        }
    }

    /// Orbit log-derivative sums agree with a direct per-step recomputation.
    #[test]
    fn orbit_log_sums_consistent(a in -2.0f64..-1.0, x0 in -0.9f64..0.9, n in 1usize..200) {
        let p = ScalarMapParam::new(a).unwrap();
        let seg = scalar::orbit_with_derivative(p, x0, n);
        let mut acc = 0.0f64;
        for k in 0..n {
            acc += (2.0 * seg.values[k]).abs().ln();
            let got = seg.log_derivative_partial_sums[k];
            if acc.is_finite() {
                prop_assert!((got - acc).abs() <= 1e-10 * acc.abs().max(1.0));
            }
        }
    }

    /// The simplicity-ratio margin is the exact pass/fail threshold: the
    /// check passes iff theta is at least the margin.
    #[test]
    fn diamond_margin_is_threshold(
        orders in prop::collection::vec((1usize..40, prop::bool::ANY), 1..12),
        theta in 0.0f64..1.0,
    ) {
        let mut it = Itinerary::new(5);
        let mut nonsimple = 0usize;
        let mut t = 5usize;
        for &(n, simple) in &orders {
            if !simple {
                nonsimple += n;
            }
            it.cumulative_orders.push(t);
            it.nonsimple_order_sum.push(nonsimple);
            it.entries.push(ItineraryEntry {
                interval: regular::RegularInterval {
                    piece: puzzle::PuzzlePiece {
                        interval: RealInterval::new(0.1, 0.2),
                        order: n,
                        index: 0,
                    },
                    order: n,
                    is_simple: simple,
                    branch_certificate: vec![1; n],
                },
                order: n,
                time: t,
                landing: 0.15,
            });
            t += n;
        }
        let check = check_diamond(&it, theta);
        prop_assert_eq!(check.pass, check.margin <= theta);
        prop_assert!((0.0..=1.0).contains(&check.margin));
    }

    /// Histograms are normalized, non-negative, and reproducible.
    #[test]
    fn histograms_normalized(a in -2.0f64..-1.0, seed in any::<u64>()) {
        let p = ScalarMapParam::new(a).unwrap();
        let h = measures::ulam_density(p, 64, 20_000, 4, seed);
        let sum: f64 = h.masses.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(h.masses.iter().all(|&m| m >= 0.0));
        let h2 = measures::ulam_density(p, 64, 20_000, 4, seed);
        prop_assert_eq!(h, h2);
    }
}
