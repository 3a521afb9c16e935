//! Regular intervals and the exponential-covering test.
//!
//! A regular interval of order `n` is a puzzle piece sent monotonically onto
//! the central interval `A = [alpha, -alpha]` by `P_a^n`, whose inverse
//! branch extends over a fixed enlargement of `A` without meeting the
//! critical point. The measure of the part of `A` not covered by regular
//! intervals of order `<= n` decays exponentially at well-behaved
//! parameters; the fitted decay rate is reported, never asserted against a
//! hard threshold.
//!
//! Enumeration works backwards: every regular interval is the pullback of
//! `A` along a chain of signed inverse branches, so the tree of all valid
//! pullbacks is walked directly instead of testing each puzzle piece. A
//! branch is kept when its pullback lands inside `A` with a live extension
//! and is not contained in an interval kept earlier (which also closes its
//! entire subtree, since deeper pullbacks only shrink).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::interval::RealInterval;
use crate::puzzle::{PuzzlePiece, EPS_DEDUP};
use crate::scalar::{self, ReturnConvention, ScalarMapParam};

/// Default extension factor: the enlarged interval adds `kappa` times the
/// half-length of `A` on each side.
///
/// The value is deliberately small: the deepest simple intervals sit with
/// their inner edge a few percent of their length away from the critical
/// point, and a larger enlargement makes their inverse-branch extension
/// cross the critical value, truncating the simple family.
pub const DEFAULT_KAPPA: f64 = 0.005;

/// Gaps shorter than this are treated as numerically closed when the
/// uncovered set is assembled.
const GAP_TOL: f64 = 1e-9;

/// Hard ceiling on explored pullback branches, to keep pathological
/// parameters from blowing up the walk.
const MAX_BRANCH_NODES: usize = 4_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum RegularError {
    /// The critical orbit never re-enters `A` within the step budget, so the
    /// simple family is undefined (e.g. the Chebychev parameter).
    #[error("critical return time not found within {0} steps")]
    NoReturnTime(usize),
    /// The set left uncovered by the simple intervals is not a single
    /// interval around the critical point; the parameter is not admissible.
    #[error("uncovered set is not a single central gap ({0} gaps, central = {1})")]
    GapNotCentral(usize, bool),
}

/// Which of the three regularity conditions failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularityFailure {
    /// (a) The piece is not mapped exactly onto `A` by its iterate.
    ImageNotOntoA,
    /// (b) Some forward image of the piece carries the critical point.
    CriticalPointInterior,
    /// (c) The inverse branch does not extend over the enlarged interval.
    ExtensionFailed,
}

/// A certified regular interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularInterval {
    pub piece: PuzzlePiece,
    pub order: usize,
    /// Order below the critical return time (the finitely many simple
    /// intervals cover `A` up to a central gap of width about `2^-M`).
    pub is_simple: bool,
    /// Signs of the forward images `P_a^k(piece)` relative to 0 for
    /// `k < order`; this pins down the monotone branch.
    pub branch_certificate: Vec<i8>,
}

impl RegularInterval {
    pub fn interval(&self) -> RealInterval {
        self.piece.interval
    }
}

/// Outcome of the maximal-regular-interval enumeration inside `A`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverReport {
    pub a: f64,
    pub kappa: f64,
    pub order_cap: usize,
    /// Highest order fully explored; lower than `order_cap` only if the
    /// branch budget was exhausted.
    pub complete_to_order: usize,
    /// `A = [alpha, -alpha]`.
    pub core: RealInterval,
    /// Critical-point return time, when found within the internal budget.
    pub return_time: Option<usize>,
    /// Length of `A` not covered by kept intervals of order `<= n`, indexed
    /// by `n - 1` for `n = 1..=complete_to_order`.
    pub uncovered_measure: Vec<f64>,
    /// Least-squares decay rate of `log uncovered` over the last half of the
    /// explored orders (positive = exponential covering).
    pub fitted_rate: f64,
    /// Maximal regular intervals inside `A`, sorted by left endpoint.
    pub regular_intervals: Vec<RegularInterval>,
    /// Monte-Carlo cross-check of the final uncovered fraction, when run.
    pub mc_seed: Option<u64>,
    pub mc_uncovered: Option<f64>,
}

impl CoverReport {
    /// Kept intervals of order `<= n`, in left-to-right order.
    pub fn intervals_up_to(&self, n: usize) -> impl Iterator<Item = &RegularInterval> {
        self.regular_intervals.iter().filter(move |r| r.order <= n)
    }

    /// The kept interval containing `x`, if any.
    pub fn interval_containing(&self, x: f64) -> Option<&RegularInterval> {
        let idx = self
            .regular_intervals
            .partition_point(|r| r.interval().lo <= x)
            .checked_sub(1)?;
        let r = &self.regular_intervals[idx];
        r.interval().contains(x).then_some(r)
    }

    /// Inner edge of the unresolved region around the critical point: the
    /// largest `g` such that `(-g, g)` meets no kept interval.
    pub fn central_gap_radius(&self) -> f64 {
        self.regular_intervals
            .iter()
            .map(|r| {
                let iv = r.interval();
                if iv.contains(0.0) {
                    0.0
                } else if iv.hi < 0.0 {
                    -iv.hi
                } else {
                    iv.lo
                }
            })
            .fold(self.core.hi, f64::min)
    }

    /// JSON document: orders, uncovered lengths, fitted rate, and intervals
    /// as `[lo, hi, order, simple]` rows.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "a": self.a,
            "kappa": self.kappa,
            "order_cap": self.order_cap,
            "complete_to_order": self.complete_to_order,
            "core": [self.core.lo, self.core.hi],
            "return_time": self.return_time,
            "orders": (1..=self.complete_to_order).collect::<Vec<_>>(),
            "uncovered": self.uncovered_measure,
            "rate": self.fitted_rate,
            "intervals": self
                .regular_intervals
                .iter()
                .map(|r| json!([r.interval().lo, r.interval().hi, r.order, r.is_simple]))
                .collect::<Vec<_>>(),
            "mc_seed": self.mc_seed,
            "mc_uncovered": self.mc_uncovered,
        })
    }
}

/// The enlarged interval `A~`: `A` padded by `kappa * |A| / 2` on each side.
pub fn enlarged_core(core: RealInterval, kappa: f64) -> RealInterval {
    core.enlarged(kappa * core.len() * 0.5)
}

/// Pull an interval back through one signed inverse branch
/// `y -> sign * sqrt(y - a)`. `None` when the radicand goes negative or the
/// result meets the critical point.
pub(crate) fn pull_back(iv: RealInterval, a: f64, sign: i8) -> Option<RealInterval> {
    let rlo = iv.lo - a;
    let rhi = iv.hi - a;
    if rlo <= 0.0 {
        // Branch undefined over part of the interval, or the pullback
        // touches 0 and the branch is not a diffeomorphism.
        return None;
    }
    let (slo, shi) = (rlo.sqrt(), rhi.sqrt());
    Some(if sign > 0 {
        RealInterval::new(slo, shi)
    } else {
        RealInterval::new(-shi, -slo)
    })
}

/// Verifies that `piece` is a regular interval for `P_a` with extension
/// factor `kappa`.
///
/// The branch signs are read off the forward endpoint orbits, then the piece
/// is re-derived by pulling `A` back along the signed chain, which is
/// numerically stable; a mismatch means the piece does not map onto `A`.
pub fn is_regular(
    p: ScalarMapParam,
    piece: &PuzzlePiece,
    kappa: f64,
) -> Result<RegularInterval, RegularityFailure> {
    let n = piece.order;
    assert!(n >= 1, "regular intervals have order >= 1");
    let core = scalar::core_interval(p).expect("admissible parameter");
    let a = p.a();

    // Forward pass: signs of the intermediate images.
    let mut signs = Vec::with_capacity(n);
    let (mut lo, mut hi) = (piece.interval.lo, piece.interval.hi);
    for _ in 0..n {
        let (ilo, ihi) = (lo.min(hi), lo.max(hi));
        if ilo < 0.0 && ihi > 0.0 {
            return Err(RegularityFailure::CriticalPointInterior);
        }
        signs.push(if ilo + ihi >= 0.0 { 1i8 } else { -1i8 });
        lo = scalar::eval_map(p, lo);
        hi = scalar::eval_map(p, hi);
    }

    // Backward verification: pull A down the signed chain and compare.
    let mut back = core;
    for &s in signs.iter().rev() {
        back = pull_back(back, a, s).ok_or(RegularityFailure::ImageNotOntoA)?;
        if back.contains(0.0) {
            return Err(RegularityFailure::CriticalPointInterior);
        }
    }
    if back.endpoint_distance(&piece.interval) > EPS_DEDUP {
        return Err(RegularityFailure::ImageNotOntoA);
    }

    // Extension: the same chain must carry the enlarged interval.
    let mut ext = enlarged_core(core, kappa);
    for &s in signs.iter().rev() {
        ext = pull_back(ext, a, s).ok_or(RegularityFailure::ExtensionFailed)?;
        if ext.contains(0.0) {
            return Err(RegularityFailure::ExtensionFailed);
        }
    }

    let m = scalar::critical_return_time(p, 100_000, ReturnConvention::CriticalPoint);
    Ok(RegularInterval {
        piece: *piece,
        order: n,
        is_simple: m.is_some_and(|m| n < m),
        branch_certificate: signs,
    })
}

struct Branch {
    iv: RealInterval,
    /// Pullback of the enlarged interval along the same chain; dies (and
    /// stays dead for this node, though not for its descendants, which pull
    /// back smaller sets) when the extension fails.
    ext: Option<RealInterval>,
    signs: Vec<i8>,
}

/// Enumerates all maximal regular intervals of order `<= order_cap` inside
/// `A` and reports the uncovered measure per order with a fitted decay rate.
pub fn enumerate_regular(p: ScalarMapParam, order_cap: usize, kappa: f64) -> CoverReport {
    assert!(order_cap >= 1);
    let core = scalar::core_interval(p).expect("admissible parameter");
    let a = p.a();
    let ext0 = enlarged_core(core, kappa);
    let m = scalar::critical_return_time(p, 100_000, ReturnConvention::CriticalPoint);

    let mut kept: Vec<RegularInterval> = Vec::new();
    let mut covered_by_order = vec![0.0f64; order_cap + 1];
    let mut frontier = vec![Branch { iv: core, ext: Some(ext0), signs: Vec::new() }];
    let mut nodes = 0usize;
    let mut complete_to_order = 0usize;

    #[allow(clippy::needless_range_loop)] // `order` names the level being built
    'orders: for order in 1..=order_cap {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for parent in &frontier {
            for sign in [-1i8, 1i8] {
                nodes += 1;
                if nodes > MAX_BRANCH_NODES {
                    break 'orders;
                }
                let Some(iv) = pull_back(parent.iv, a, sign) else { continue };
                let ext = parent.ext.and_then(|e| {
                    pull_back(e, a, sign).filter(|child| !child.contains(0.0))
                });
                let mut signs = Vec::with_capacity(order);
                signs.push(sign);
                signs.extend_from_slice(&parent.signs);

                let inside = core.contains_interval(&iv, EPS_DEDUP);
                if inside {
                    // Absorption: anything inside an earlier kept interval
                    // can never be maximal, nor can its descendants.
                    if find_container(&kept, &iv).is_some() {
                        continue;
                    }
                    if ext.is_some() {
                        covered_by_order[order] += iv.len();
                        kept.push(RegularInterval {
                            piece: PuzzlePiece { interval: iv, order, index: 0 },
                            order,
                            is_simple: m.is_some_and(|m| order < m),
                            branch_certificate: signs,
                        });
                        kept.sort_by(|x, y| x.interval().lo.total_cmp(&y.interval().lo));
                        continue;
                    }
                }
                next.push(Branch { iv, ext, signs });
            }
        }
        frontier = next;
        complete_to_order = order;
        if frontier.is_empty() {
            // Everything below is absorbed; deeper orders add nothing.
            complete_to_order = order_cap;
            break;
        }
    }

    let mut uncovered = Vec::with_capacity(complete_to_order);
    let mut covered = 0.0f64;
    for newly_covered in covered_by_order.iter().take(complete_to_order + 1).skip(1) {
        covered += newly_covered;
        uncovered.push((core.len() - covered).max(0.0));
    }

    // Left-to-right index within each order.
    let mut per_order_counter = std::collections::HashMap::new();
    for r in &mut kept {
        let c = per_order_counter.entry(r.order).or_insert(0usize);
        r.piece.index = *c;
        r.piece.order = r.order;
        *c += 1;
    }

    let fitted_rate = fit_decay_rate(&uncovered);
    CoverReport {
        a,
        kappa,
        order_cap,
        complete_to_order,
        core,
        return_time: m,
        uncovered_measure: uncovered,
        fitted_rate,
        regular_intervals: kept,
        mc_seed: None,
        mc_uncovered: None,
    }
}

fn find_container(kept: &[RegularInterval], iv: &RealInterval) -> Option<usize> {
    // kept is sorted by lo; the container, if any, is the last interval
    // starting at or before iv.lo.
    let idx = kept.partition_point(|r| r.interval().lo <= iv.lo + EPS_DEDUP).checked_sub(1)?;
    kept[idx].interval().contains_interval(iv, EPS_DEDUP).then_some(idx)
}

/// Least-squares exponential decay rate of a positive sequence over its last
/// half: the negated slope of `ln u(n)` against `n`.
fn fit_decay_rate(uncovered: &[f64]) -> f64 {
    let n = uncovered.len();
    if n < 2 {
        return 0.0;
    }
    let start = n / 2;
    let pts: Vec<(f64, f64)> = uncovered
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, &u)| u > 0.0)
        .map(|(i, &u)| ((i + 1) as f64, u.ln()))
        .collect();
    if pts.len() < 2 {
        // Fully covered within the window: decay is effectively immediate.
        return f64::INFINITY;
    }
    let k = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let denom = k * sxx - sx * sx;
    if denom == 0.0 {
        return 0.0;
    }
    -(k * sxy - sx * sy) / denom
}

/// Attaches a Monte-Carlo membership cross-check to a report: the sampled
/// uncovered length of `A` under `samples` uniform draws with the given
/// seed.
pub fn monte_carlo_uncovered(report: &mut CoverReport, samples: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let core = report.core;
    let mut misses = 0usize;
    for _ in 0..samples {
        let x = core.lo + rng.random::<f64>() * core.len();
        if report.interval_containing(x).is_none() {
            misses += 1;
        }
    }
    report.mc_seed = Some(seed);
    report.mc_uncovered = Some(core.len() * misses as f64 / samples as f64);
}

/// The simple intervals: maximal regular intervals of order below the
/// critical return time, together with the central gap they leave around
/// the critical point.
///
/// Fails with [`RegularError::GapNotCentral`] when the uncovered set is not
/// a single interval containing 0 — the signature of a parameter outside
/// the admissible regime.
pub fn simple_intervals(
    p: ScalarMapParam,
    kappa: f64,
) -> Result<(Vec<RegularInterval>, RealInterval), RegularError> {
    let max_steps = 100_000;
    let m = scalar::critical_return_time(p, max_steps, ReturnConvention::CriticalPoint)
        .ok_or(RegularError::NoReturnTime(max_steps))?;
    if m < 2 {
        return Err(RegularError::GapNotCentral(0, false));
    }
    let report = enumerate_regular(p, m - 1, kappa);
    let core = report.core;

    // Walk the kept intervals left to right and collect the gaps.
    let mut gaps: Vec<RealInterval> = Vec::new();
    let mut cursor = core.lo;
    for r in &report.regular_intervals {
        let iv = r.interval();
        if iv.lo - cursor > GAP_TOL {
            gaps.push(RealInterval::new(cursor, iv.lo));
        }
        cursor = cursor.max(iv.hi);
    }
    if core.hi - cursor > GAP_TOL {
        gaps.push(RealInterval::new(cursor, core.hi));
    }

    let central = gaps.len() == 1 && gaps[0].contains(0.0);
    if !central || report.regular_intervals.is_empty() {
        return Err(RegularError::GapNotCentral(
            gaps.len(),
            gaps.first().is_some_and(|g| g.contains(0.0)),
        ));
    }
    let gap = gaps[0];
    let simples = report
        .regular_intervals
        .into_iter()
        .map(|mut r| {
            r.is_simple = true;
            r
        })
        .collect();
    Ok((simples, gap))
}

/// Distortion of `P_a^n` over a regular interval: the ratio of the largest
/// to the smallest derivative magnitude over a sampling grid.
pub fn distortion_ratio(p: ScalarMapParam, reg: &RegularInterval, grid: usize) -> f64 {
    let iv = reg.interval();
    let mut min_log = f64::INFINITY;
    let mut max_log = f64::NEG_INFINITY;
    for i in 0..=grid {
        let x0 = iv.lo + iv.len() * (i as f64) / (grid as f64);
        let mut x = x0;
        let mut acc = 0.0;
        for _ in 0..reg.order {
            acc += (2.0 * x).abs().ln();
            x = scalar::eval_map(p, x);
        }
        min_log = min_log.min(acc);
        max_log = max_log.max(acc);
    }
    (max_log - min_log).exp()
}
