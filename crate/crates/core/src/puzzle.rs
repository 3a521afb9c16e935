//! Puzzle pieces of the quadratic family.
//!
//! The pieces of order `n` are the closures of the connected components of
//! `[-beta, beta]` minus the `n`-th preimages of the fixed-point pair
//! `{alpha, -alpha}`. Successive orders are related by nesting (each piece
//! sits inside a unique piece of the previous order) and by the map (each
//! piece's image sits inside a unique piece of the previous order).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::RealInterval;
use crate::scalar::{self, ScalarMapParam};

/// Tolerance for merging numerically coincident cut points.
pub const EPS_DEDUP: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum PuzzleError {
    /// Containment of a piece in the coarser level failed; indicates a
    /// numerically inconsistent pair of levels.
    #[error("piece {piece} of order {order} is not contained in a single piece of the coarser level")]
    Unrelated { piece: RealInterval, order: usize },
}

/// One puzzle piece: an interval, its order, and its left-to-right index
/// within the level. The index carries no semantic weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PuzzlePiece {
    pub interval: RealInterval,
    pub order: usize,
    pub index: usize,
}

/// All pieces of one order, tiling `[-beta, beta]` with disjoint interiors.
#[derive(Clone, Debug, PartialEq)]
pub struct PuzzleLevel {
    pub order: usize,
    pub pieces: Vec<PuzzlePiece>,
    /// Strictly increasing cut points, the interior endpoints of the tiling.
    pub cut_points: Vec<f64>,
}

impl PuzzleLevel {
    /// The piece whose interval contains `x`, preferring interior hits.
    pub fn piece_containing(&self, x: f64) -> Option<&PuzzlePiece> {
        // Binary search over left endpoints, then check the hit.
        let idx = self
            .pieces
            .partition_point(|piece| piece.interval.lo <= x)
            .saturating_sub(1);
        let piece = self.pieces.get(idx)?;
        piece.interval.contains(x).then_some(piece)
    }
}

/// Sorted, deduplicated preimages `P_a^{-n}({alpha, -alpha})` inside
/// `[-beta, beta]`, computed by recursive inverse branches
/// `x = +-sqrt(y - a)`.
pub fn preimage_set(p: ScalarMapParam, n: usize) -> Vec<f64> {
    let fp = scalar::fixed_points(p).expect("parameter admits fixed points");
    let a = p.a();
    let mut current: Vec<f64> = vec![fp.alpha, -fp.alpha];
    dedup_sorted(&mut current);
    for _ in 0..n {
        let mut next = Vec::with_capacity(current.len() * 2);
        for &y in &current {
            let r = y - a;
            if r < 0.0 {
                continue;
            }
            let root = r.sqrt();
            next.push(-root);
            next.push(root);
        }
        dedup_sorted(&mut next);
        current = next;
    }
    current
}

fn dedup_sorted(values: &mut Vec<f64>) {
    values.sort_by(f64::total_cmp);
    values.dedup_by(|b, a| (*b - *a).abs() <= EPS_DEDUP);
}

/// The level of order `n`: closures of the components of `[-beta, beta]`
/// minus `preimage_set(p, n)`.
pub fn puzzle_level(p: ScalarMapParam, n: usize) -> PuzzleLevel {
    let fp = scalar::fixed_points(p).expect("parameter admits fixed points");
    let beta = fp.beta;
    let mut cuts = preimage_set(p, n);
    // Drop cut points numerically coincident with the outer boundary; the
    // fixed points never coincide with +-beta in exact arithmetic, but the
    // dedup guards degenerate parameters.
    cuts.retain(|&c| c > -beta + EPS_DEDUP && c < beta - EPS_DEDUP);
    let mut pieces = Vec::with_capacity(cuts.len() + 1);
    let mut lo = -beta;
    for (index, &c) in cuts.iter().enumerate() {
        pieces.push(PuzzlePiece { interval: RealInterval::new(lo, c), order: n, index });
        lo = c;
    }
    pieces.push(PuzzlePiece {
        interval: RealInterval::new(lo, beta),
        order: n,
        index: cuts.len(),
    });
    PuzzleLevel { order: n, pieces, cut_points: cuts }
}

/// The unique order-`(n-1)` piece containing `piece`.
pub fn parent_piece(
    level_n: &PuzzleLevel,
    level_n_minus_1: &PuzzleLevel,
    piece: &PuzzlePiece,
) -> Result<PuzzlePiece, PuzzleError> {
    debug_assert_eq!(level_n.order, piece.order);
    debug_assert_eq!(level_n.order, level_n_minus_1.order + 1);
    locate(level_n_minus_1, piece.interval, piece.order)
}

/// The unique order-`(n-1)` piece containing the image `P_a(piece)`.
///
/// The image is the hull of the endpoint images, extended by the critical
/// value when the critical point is interior to the piece.
pub fn image_piece(
    p: ScalarMapParam,
    level_n: &PuzzleLevel,
    level_n_minus_1: &PuzzleLevel,
    piece: &PuzzlePiece,
) -> Result<PuzzlePiece, PuzzleError> {
    debug_assert_eq!(level_n.order, piece.order);
    debug_assert_eq!(level_n.order, level_n_minus_1.order + 1);
    let image = map_interval(p, piece.interval);
    locate(level_n_minus_1, image, piece.order)
}

/// Image of an interval under `P_a`, as an interval.
pub fn map_interval(p: ScalarMapParam, iv: RealInterval) -> RealInterval {
    let (flo, fhi) = (scalar::eval_map(p, iv.lo), scalar::eval_map(p, iv.hi));
    let mut image = RealInterval::hull(flo, fhi);
    if iv.contains_interior(0.0) {
        // The minimum of x^2 + a over the piece is the critical value.
        image = RealInterval::new(p.a(), image.hi);
    }
    image
}

fn locate(
    level: &PuzzleLevel,
    target: RealInterval,
    order: usize,
) -> Result<PuzzlePiece, PuzzleError> {
    let host = level
        .piece_containing(target.mid())
        .copied()
        .filter(|h| h.interval.contains_interval(&target, EPS_DEDUP));
    host.ok_or(PuzzleError::Unrelated { piece: target, order })
}

/// Memoized puzzle levels for one parameter, extended on demand.
///
/// The cache is owned by the caller; the module itself promises nothing
/// beyond purity of the construction functions.
#[derive(Clone, Debug)]
pub struct LevelCache {
    param: ScalarMapParam,
    levels: Vec<PuzzleLevel>,
}

impl LevelCache {
    pub fn new(param: ScalarMapParam) -> Self {
        Self { param, levels: Vec::new() }
    }

    pub fn param(&self) -> ScalarMapParam {
        self.param
    }

    pub fn level(&mut self, n: usize) -> &PuzzleLevel {
        while self.levels.len() <= n {
            let next = self.levels.len();
            self.levels.push(puzzle_level(self.param, next));
        }
        &self.levels[n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ReturnConvention;
    use approx::assert_abs_diff_eq;

    fn cheb() -> ScalarMapParam {
        ScalarMapParam::new(-2.0).unwrap()
    }

    #[test]
    fn preimages_order_zero_and_one_at_chebychev() {
        let s0 = preimage_set(cheb(), 0);
        assert_eq!(s0, vec![-1.0, 1.0]);
        let s1 = preimage_set(cheb(), 1);
        assert_eq!(s1.len(), 4);
        let sqrt3 = 3f64.sqrt();
        for (got, want) in s1.iter().zip([-sqrt3, -1.0, 1.0, sqrt3]) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-12);
        }
    }

    #[test]
    fn preimages_order_two_match_root_scan_oracle() {
        // Brute-force oracle: scan P^2(x) -+ 1 for sign changes on a fine
        // grid over [-2, 2] and bisect each bracket.
        let p = cheb();
        let f = |x: f64, t: f64| {
            let y = scalar::eval_map(p, x);
            scalar::eval_map(p, y) - t
        };
        let mut roots = Vec::new();
        let grid = 1_000_000usize;
        for &target in &[-1.0f64, 1.0] {
            let mut prev_x = -2.0f64;
            let mut prev_v = f(prev_x, target);
            for i in 1..=grid {
                let x = -2.0 + 4.0 * (i as f64) / (grid as f64);
                let v = f(x, target);
                if prev_v == 0.0 {
                    roots.push(prev_x);
                } else if prev_v * v < 0.0 {
                    let (mut lo, mut hi) = (prev_x, x);
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if f(lo, target) * f(mid, target) <= 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    roots.push(0.5 * (lo + hi));
                }
                prev_x = x;
                prev_v = v;
            }
            if prev_v == 0.0 {
                roots.push(prev_x);
            }
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|b, a| (*b - *a).abs() <= 1e-9);

        let got = preimage_set(p, 2);
        assert_eq!(got.len(), 8);
        assert_eq!(roots.len(), 8);
        for (g, r) in got.iter().zip(roots.iter()) {
            assert_abs_diff_eq!(g, r, epsilon = 1e-9);
        }
        // Closed forms: +-sqrt(2 +- sqrt(3)), +-1, +-sqrt(3).
        let expect = {
            let mut v = vec![
                -(2f64 + 3f64.sqrt()).sqrt(),
                -(3f64).sqrt(),
                -1.0,
                -(2f64 - 3f64.sqrt()).sqrt(),
                (2f64 - 3f64.sqrt()).sqrt(),
                1.0,
                3f64.sqrt(),
                (2f64 + 3f64.sqrt()).sqrt(),
            ];
            v.sort_by(f64::total_cmp);
            v
        };
        for (g, e) in got.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(g, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn levels_zero_and_one_at_chebychev() {
        let level0 = puzzle_level(cheb(), 0);
        let ivs: Vec<_> = level0.pieces.iter().map(|q| q.interval).collect();
        assert_eq!(
            ivs,
            vec![
                RealInterval::new(-2.0, -1.0),
                RealInterval::new(-1.0, 1.0),
                RealInterval::new(1.0, 2.0)
            ]
        );
        let level1 = puzzle_level(cheb(), 1);
        assert_eq!(level1.pieces.len(), 5);
        let sqrt3 = 3f64.sqrt();
        assert_abs_diff_eq!(level1.pieces[0].interval.hi, -sqrt3, epsilon = 1e-12);
        assert_eq!(level1.pieces[2].interval, RealInterval::new(-1.0, 1.0));
    }

    #[test]
    fn piece_count_matches_counting_oracle() {
        for a in [-2.0, -1.99, -1.8, -1.6] {
            let p = ScalarMapParam::new(a).unwrap();
            for n in 0..=10 {
                let cuts = preimage_set(p, n);
                let fp = scalar::fixed_points(p).unwrap();
                let interior =
                    cuts.iter().filter(|&&c| c.abs() < fp.beta - EPS_DEDUP).count();
                let level = puzzle_level(p, n);
                assert_eq!(level.pieces.len(), interior + 1, "a={a} n={n}");
                assert!(level.pieces.len() <= (1 << (n + 1)) + 1);
            }
        }
    }

    #[test]
    fn parent_piece_examples() {
        let p = cheb();
        let l0 = puzzle_level(p, 0);
        let l1 = puzzle_level(p, 1);
        let left = l1.pieces[1]; // [-sqrt3, -1]
        let parent = parent_piece(&l1, &l0, &left).unwrap();
        assert_eq!(parent.interval, RealInterval::new(-2.0, -1.0));
        let central = l1.pieces[2]; // [-1, 1] nests onto itself at a = -2
        let parent = parent_piece(&l1, &l0, &central).unwrap();
        assert_eq!(parent.interval, RealInterval::new(-1.0, 1.0));
    }

    #[test]
    fn image_piece_examples() {
        let p = cheb();
        let l0 = puzzle_level(p, 0);
        let l1 = puzzle_level(p, 1);
        let right = l1.pieces[3]; // [1, sqrt3] maps onto [-1, 1]
        let image = image_piece(p, &l1, &l0, &right).unwrap();
        assert_eq!(image.interval, RealInterval::new(-1.0, 1.0));
        let leftmost = l1.pieces[0]; // [-2, -sqrt3] maps onto [1, 2]
        let image = image_piece(p, &l1, &l0, &leftmost).unwrap();
        assert_eq!(image.interval, RealInterval::new(1.0, 2.0));
    }

    #[test]
    fn nesting_and_images_resolve_uniquely_to_order_ten() {
        for a in [-2.0, -1.94, -1.75] {
            let p = ScalarMapParam::new(a).unwrap();
            let mut cache = LevelCache::new(p);
            for n in 1..=10 {
                let coarse = cache.level(n - 1).clone();
                let fine = cache.level(n).clone();
                for piece in &fine.pieces {
                    let parent = parent_piece(&fine, &coarse, piece).unwrap();
                    assert!(parent.interval.contains_interval(&piece.interval, EPS_DEDUP));
                    let image = image_piece(p, &fine, &coarse, piece).unwrap();
                    let mapped = map_interval(p, piece.interval);
                    assert!(image.interval.contains_interval(&mapped, 1e-8));
                }
            }
        }
    }

    #[test]
    fn tiling_refinement_symmetry_invariants() {
        for a in [-2.0, -1.97, -1.83] {
            let p = ScalarMapParam::new(a).unwrap();
            let fp = scalar::fixed_points(p).unwrap();
            let mut prev_cuts: Option<Vec<f64>> = None;
            for n in 0..=10 {
                let level = puzzle_level(p, n);
                // Tiling: lengths sum to 2 beta.
                let total: f64 = level.pieces.iter().map(|q| q.interval.len()).sum();
                assert!(((total - 2.0 * fp.beta) / (2.0 * fp.beta)).abs() <= 1e-9);
                // Strictly increasing cut points.
                for w in level.cut_points.windows(2) {
                    assert!(w[0] < w[1]);
                }
                // Symmetry under x -> -x.
                for (c, d) in level.cut_points.iter().zip(level.cut_points.iter().rev()) {
                    assert_abs_diff_eq!(*c, -*d, epsilon = EPS_DEDUP);
                }
                // Refinement: previous cuts persist.
                if let Some(prev) = prev_cuts {
                    for c in &prev {
                        assert!(
                            level
                                .cut_points
                                .iter()
                                .any(|d| (c - d).abs() <= EPS_DEDUP),
                            "a={a} n={n}: cut {c} lost"
                        );
                    }
                }
                prev_cuts = Some(level.cut_points);
            }
        }
    }

    #[test]
    fn central_piece_straddles_critical_point_until_return_time() {
        // The piece containing 0 shrinks but keeps 0 interior for orders
        // below the return time.
        let p = ScalarMapParam::new(-2.0 + 1e-4).unwrap();
        let m = scalar::critical_return_time(p, 10_000, ReturnConvention::CriticalPoint).unwrap();
        for n in 0..m.min(12) {
            let level = puzzle_level(p, n);
            let central = level.piece_containing(0.0).unwrap();
            assert!(central.interval.contains_interior(0.0));
        }
    }
}
