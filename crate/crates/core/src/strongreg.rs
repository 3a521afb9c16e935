//! Strong-regularity classification and parapuzzle windows.
//!
//! The critical value's orbit is followed through its returns to the core
//! interval `A`. Each return must land in a regular interval (the itinerary
//! condition); the classification additionally requires that non-simple
//! orders stay a small fraction of the total order at every stage (the
//! simplicity-ratio condition, with the fraction `theta` surfaced as an
//! explicit knob — the underlying notion is a qualitative "most"). Windows
//! of parameters sharing an itinerary prefix form the parapuzzle.
//!
//! The itinerary clock counts steps applied to the critical value, so the
//! first landing `P_a^M(a)` is the first return of the critical orbit to
//! `A`; see [`crate::scalar::ReturnConvention`].

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::interval::RealInterval;
use crate::regular::{self, CoverReport, RegularInterval};
use crate::scalar::{self, ReturnConvention, ScalarMapParam};

/// Bisection floor in parameter space for parapuzzle windows.
pub const EPS_PARAM: f64 = 1e-14;

/// Why an itinerary could not be extended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockReason {
    /// The landing fell inside the unresolved window around the critical
    /// point: a deep return, excluded at this resolution.
    CentralGap,
    /// The landing fell in uncovered dust away from the critical point; a
    /// deeper cover might still resolve it.
    UncoveredDust,
}

/// One itinerary step: the regular interval hit by a return, its order, the
/// landing time and the landing point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ItineraryEntry {
    pub interval: RegularInterval,
    pub order: usize,
    /// Steps applied to the critical value to reach this landing.
    pub time: usize,
    pub landing: f64,
}

/// A sequence of returns of the critical value through regular intervals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Itinerary {
    /// First-return time of the critical value to `A`.
    pub start_time: usize,
    pub entries: Vec<ItineraryEntry>,
    /// `cumulative_orders[j] = start_time + n_0 + ... + n_{j-1}`: the landing
    /// time of entry `j`.
    pub cumulative_orders: Vec<usize>,
    /// Running sum of orders over non-simple entries, one value per entry.
    pub nonsimple_order_sum: Vec<usize>,
}

impl Itinerary {
    pub fn new(start_time: usize) -> Self {
        Self {
            start_time,
            entries: Vec::new(),
            cumulative_orders: Vec::new(),
            nonsimple_order_sum: Vec::new(),
        }
    }

    /// Landing time of the next (not yet recorded) return.
    pub fn next_time(&self) -> usize {
        match self.entries.last() {
            Some(e) => e.time + e.order,
            None => self.start_time,
        }
    }

    /// Running total of recorded orders.
    pub fn total_order(&self) -> usize {
        self.entries.iter().map(|e| e.order).sum()
    }
}

/// Pass/fail of the simplicity-ratio condition with its worst ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiamondCheck {
    pub pass: bool,
    /// `max_j` of (non-simple order sum / total order sum) after `j`
    /// entries; 0 for an all-simple itinerary.
    pub margin: f64,
}

/// Checks that non-simple orders stay under `theta` times the total order at
/// every stage of the itinerary.
pub fn check_diamond(it: &Itinerary, theta: f64) -> DiamondCheck {
    let mut total = 0usize;
    let mut margin = 0.0f64;
    for (j, e) in it.entries.iter().enumerate() {
        total += e.order;
        let ratio = it.nonsimple_order_sum[j] as f64 / total as f64;
        margin = margin.max(ratio);
    }
    DiamondCheck { pass: margin <= theta, margin }
}

/// Appends the regular interval containing the current return of the
/// critical value, or reports why none contains it.
pub fn extend_itinerary(
    p: ScalarMapParam,
    it: &Itinerary,
    cover: &CoverReport,
) -> Result<Itinerary, BlockReason> {
    let t = it.next_time();
    let mut x = p.a();
    for _ in 0..t {
        x = scalar::eval_map(p, x);
    }
    match cover.interval_containing(x) {
        Some(r) => {
            let mut out = it.clone();
            let nonsimple_prev = out.nonsimple_order_sum.last().copied().unwrap_or(0);
            out.cumulative_orders.push(t);
            out.nonsimple_order_sum
                .push(nonsimple_prev + if r.is_simple { 0 } else { r.order });
            out.entries.push(ItineraryEntry {
                interval: r.clone(),
                order: r.order,
                time: t,
                landing: x,
            });
            Ok(out)
        }
        None => {
            if x.abs() < cover.central_gap_radius() {
                Err(BlockReason::CentralGap)
            } else {
                Err(BlockReason::UncoveredDust)
            }
        }
    }
}

/// Why a parameter was excluded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExclusionReason {
    /// A return landed in the central gap.
    CentralGapReturn,
    /// The simplicity-ratio condition failed.
    DiamondFailure,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    StronglyRegularCandidate,
    Excluded { reason: ExclusionReason, step: usize },
    Undetermined,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub verdict: Verdict,
    pub depth_reached: usize,
    /// Worst simplicity ratio seen along the itinerary.
    pub diamond_margin: f64,
    /// Critical-value return time, when finite.
    pub return_time: Option<usize>,
}

/// Classification knobs; `theta` is deliberately explicit since the
/// simplicity condition only demands "a small fraction".
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ClassifyParams {
    pub depth: usize,
    pub theta: f64,
    pub order_cap: usize,
    pub kappa: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        Self { depth: 20, theta: 0.1, order_cap: 16, kappa: regular::DEFAULT_KAPPA }
    }
}

/// Classifies one parameter by extending its itinerary up to `depth`
/// returns.
///
/// Verdicts: a return into the central gap excludes; a simplicity-ratio
/// failure excludes; a landing in unresolved dust (or an infinite return
/// time) leaves the parameter undetermined at this `order_cap`.
pub fn classify_parameter(p: ScalarMapParam, params: &ClassifyParams) -> ClassificationResult {
    let m_cv = scalar::critical_return_time(p, 100_000, ReturnConvention::CriticalValue);
    let Some(m_cv) = m_cv else {
        return ClassificationResult {
            verdict: Verdict::Undetermined,
            depth_reached: 0,
            diamond_margin: 0.0,
            return_time: None,
        };
    };
    let cover = regular::enumerate_regular(p, params.order_cap, params.kappa);
    classify_with_cover(p, m_cv, &cover, params)
}

/// Classification against a precomputed cover (the cover must belong to the
/// same parameter).
pub fn classify_with_cover(
    p: ScalarMapParam,
    m_cv: usize,
    cover: &CoverReport,
    params: &ClassifyParams,
) -> ClassificationResult {
    debug_assert_eq!(cover.a, p.a());
    if params.depth == 0 {
        // Nothing extended, nothing decided.
        return ClassificationResult {
            verdict: Verdict::Undetermined,
            depth_reached: 0,
            diamond_margin: 0.0,
            return_time: Some(m_cv),
        };
    }
    let mut it = Itinerary::new(m_cv);
    let mut margin = 0.0f64;
    for step in 0..params.depth {
        match extend_itinerary(p, &it, cover) {
            Ok(next) => {
                it = next;
                let check = check_diamond(&it, params.theta);
                margin = check.margin;
                if !check.pass {
                    return ClassificationResult {
                        verdict: Verdict::Excluded {
                            reason: ExclusionReason::DiamondFailure,
                            step,
                        },
                        depth_reached: it.entries.len(),
                        diamond_margin: margin,
                        return_time: Some(m_cv),
                    };
                }
            }
            Err(BlockReason::CentralGap) => {
                return ClassificationResult {
                    verdict: Verdict::Excluded {
                        reason: ExclusionReason::CentralGapReturn,
                        step,
                    },
                    depth_reached: it.entries.len(),
                    diamond_margin: margin,
                    return_time: Some(m_cv),
                };
            }
            Err(BlockReason::UncoveredDust) => {
                return ClassificationResult {
                    verdict: Verdict::Undetermined,
                    depth_reached: it.entries.len(),
                    diamond_margin: margin,
                    return_time: Some(m_cv),
                };
            }
        }
    }
    ClassificationResult {
        verdict: Verdict::StronglyRegularCandidate,
        depth_reached: it.entries.len(),
        diamond_margin: margin,
        return_time: Some(m_cv),
    }
}

/// Classifies an even grid of parameters over `window`, in parallel, in
/// deterministic `a`-ascending order.
pub fn classify_sweep(
    window: RealInterval,
    count: usize,
    params: &ClassifyParams,
) -> Vec<(f64, ClassificationResult)> {
    let step = if count > 1 { window.len() / (count - 1) as f64 } else { 0.0 };
    (0..count)
        .into_par_iter()
        .map(|i| {
            let a = window.lo + step * i as f64;
            let p = ScalarMapParam::new(a).expect("window within admissible range");
            (a, classify_parameter(p, params))
        })
        .collect()
}

/// Itinerary prefix symbol: which regular interval (order and left-to-right
/// index) a return hits, or how the itinerary ends. Symbols are purely
/// combinatorial so they can be compared across nearby parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ItinerarySymbol {
    Entry { order: usize, index: usize },
    Blocked(BlockReason),
    NoReturn,
}

impl BlockReason {
    fn symbol(self) -> ItinerarySymbol {
        ItinerarySymbol::Blocked(self)
    }
}

/// A maximal parameter window with a constant itinerary prefix, verified at
/// the endpoints and midpoint (full-interval constancy is not certified).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParapuzzleWindow {
    pub param_interval: RealInterval,
    pub prefix: Vec<ItinerarySymbol>,
    /// False for slivers that hit the bisection floor unresolved.
    pub resolved: bool,
}

impl ParapuzzleWindow {
    /// Subdivision of this window at the next itinerary entry.
    pub fn children(&self, prefix_depth: usize, params: &ClassifyParams) -> Vec<ParapuzzleWindow> {
        parapuzzle_decompose(self.param_interval, prefix_depth, params)
    }
}

/// Itinerary prefix of length at most `prefix_depth` at one parameter.
fn prefix_symbols(a: f64, prefix_depth: usize, params: &ClassifyParams) -> Vec<ItinerarySymbol> {
    let Ok(p) = ScalarMapParam::new(a) else {
        return vec![ItinerarySymbol::NoReturn];
    };
    let Some(m_cv) = scalar::critical_return_time(p, 100_000, ReturnConvention::CriticalValue)
    else {
        return vec![ItinerarySymbol::NoReturn];
    };
    let cover = regular::enumerate_regular(p, params.order_cap, params.kappa);
    let mut it = Itinerary::new(m_cv);
    let mut out = Vec::with_capacity(prefix_depth);
    for _ in 0..prefix_depth {
        match extend_itinerary(p, &it, &cover) {
            Ok(next) => {
                let e = next.entries.last().unwrap();
                out.push(ItinerarySymbol::Entry {
                    order: e.order,
                    index: e.interval.piece.index,
                });
                it = next;
            }
            Err(reason) => {
                out.push(reason.symbol());
                break;
            }
        }
    }
    out
}

/// Decomposes a parameter window into maximal subwindows on which the
/// itinerary prefix of length `prefix_depth` is constant.
///
/// Constancy is probed at subwindow endpoints and midpoint; bisection stops
/// at the width floor [`EPS_PARAM`], below which a sliver is emitted
/// unresolved. The returned windows tile the input exactly.
pub fn parapuzzle_decompose(
    window: RealInterval,
    prefix_depth: usize,
    params: &ClassifyParams,
) -> Vec<ParapuzzleWindow> {
    if prefix_depth == 0 {
        return vec![ParapuzzleWindow {
            param_interval: window,
            prefix: Vec::new(),
            resolved: true,
        }];
    }
    let mut cache: HashMap<u64, Vec<ItinerarySymbol>> = HashMap::new();
    let symbols = |a: f64, cache: &mut HashMap<u64, Vec<ItinerarySymbol>>| {
        cache
            .entry(a.to_bits())
            .or_insert_with(|| prefix_symbols(a, prefix_depth, params))
            .clone()
    };

    let mut out: Vec<ParapuzzleWindow> = Vec::new();
    let mut stack = vec![window];
    while let Some(seg) = stack.pop() {
        let s_lo = symbols(seg.lo, &mut cache);
        let s_hi = symbols(seg.hi, &mut cache);
        let mid = seg.mid();
        let s_mid = symbols(mid, &mut cache);
        if s_lo == s_hi && s_lo == s_mid {
            out.push(ParapuzzleWindow { param_interval: seg, prefix: s_lo, resolved: true });
        } else if seg.len() <= EPS_PARAM {
            out.push(ParapuzzleWindow { param_interval: seg, prefix: s_mid, resolved: false });
        } else {
            // Right first so the left half is processed first off the stack.
            stack.push(RealInterval::new(mid, seg.hi));
            stack.push(RealInterval::new(seg.lo, mid));
        }
    }
    out.sort_by(|x, y| x.param_interval.lo.total_cmp(&y.param_interval.lo));

    // Merge adjacent resolved windows left over from bisection.
    let mut merged: Vec<ParapuzzleWindow> = Vec::new();
    for w in out {
        match merged.last_mut() {
            Some(last)
                if last.resolved
                    && w.resolved
                    && last.prefix == w.prefix
                    && (last.param_interval.hi - w.param_interval.lo).abs() <= EPS_PARAM =>
            {
                last.param_interval =
                    RealInterval::new(last.param_interval.lo, w.param_interval.hi);
            }
            _ => merged.push(w),
        }
    }
    merged
}
