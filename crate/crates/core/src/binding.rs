//! The binding algorithm for the quadratic family.
//!
//! The critical value's orbit is watched for returns into the window
//! `(-delta, delta)`. A return is either outside the window (case a, keep
//! expanding), a bound return (case b, the orbit shadows the critical orbit
//! for the binding time `k` before separating), or a deep return below the
//! cutoff `exp(-alpha_ba * N)` (case c, excluded). The bound-time budget
//! keeps the total length of binding periods before `N` under
//! `alpha_frac * N`; parameters that overrun it are excluded. Selection
//! advances whole parameter windows at once along their critical curves,
//! splitting at scenario boundaries so that binding periods agree across
//! each window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::RealInterval;
use crate::scalar::{self, ScalarMapParam};

#[derive(Debug, Error, PartialEq)]
pub enum BindingError {
    /// Orbits failed to separate within the binding-time search cap.
    #[error("binding did not separate within {0} steps")]
    BindingOverflow(usize),
    /// The critical-value orbit hit the critical point exactly.
    #[error("orbit hit the critical point exactly at step {0}")]
    CriticalHit(usize),
}

/// Scenario of one return of the critical value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BindingCase {
    /// (a) outside the critical window; expansion continues.
    Outside,
    /// (b) inside the window but not too deep; bound for `k` steps.
    Bound,
    /// (c) deeper than the cutoff; excluded from the selection.
    Deep,
}

/// Tunable constants of the binding scheme.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BindingKnobs {
    /// Half-width of the critical window.
    pub delta: f64,
    /// Closeness threshold defining the binding period.
    pub delta_sep: f64,
    /// Bound-time budget: binding lengths before `N` must stay below
    /// `alpha_frac * N`.
    pub alpha_frac: f64,
    /// Case-(c) cutoff exponent: a return at time `N` deeper than
    /// `exp(-alpha_ba * N)` is excluded.
    pub alpha_ba: f64,
    /// Minimum critical-curve length before a window counts as a boundary
    /// sliver.
    pub ell_min: f64,
    /// Search cap for the binding time.
    pub max_k: usize,
    /// Parameter-space resolution: windows that cannot settle a common
    /// scenario above this width stop splitting and follow their midpoint
    /// parameter instead. The critical curve stretches exponentially with
    /// `N`, so full window tracking is only possible down to a resolution.
    pub resolution: f64,
}

impl Default for BindingKnobs {
    fn default() -> Self {
        Self {
            delta: 0.05,
            delta_sep: 0.025,
            alpha_frac: 0.1,
            alpha_ba: 0.05,
            ell_min: 0.02,
            max_k: 64,
            resolution: 1e-8,
        }
    }
}

/// One recorded return of the critical value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnEvent {
    /// Steps applied to the critical value at the return.
    pub time: usize,
    /// Depth `|P_a^N(a)|` of the return.
    pub depth: f64,
    pub binding_time: usize,
    pub case: BindingCase,
}

/// Per-parameter history of returns and exclusion status.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BindingLedger {
    pub a: f64,
    pub returns: Vec<ReturnEvent>,
    pub excluded_at: Option<(usize, String)>,
}

impl BindingLedger {
    pub fn new(a: f64) -> Self {
        Self { a, returns: Vec::new(), excluded_at: None }
    }

    /// Total number of bound steps at times `< n`; binding periods are
    /// disjoint, each occupying times `time+1 ..= time+k`.
    pub fn total_bound_before(&self, n: usize) -> usize {
        self.returns
            .iter()
            .filter(|r| r.case == BindingCase::Bound && r.time < n)
            .map(|r| r.binding_time.min(n.saturating_sub(r.time + 1)))
            .sum()
    }
}

/// Metric used by the expansion estimate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum ExpansionMetric {
    /// Weight `1/sqrt(4 - x^2)`, clipped away from the endpoints; at the
    /// Chebychev parameter this turns the map into a uniform doubling.
    Adapted { clip: f64 },
    Flat,
}

impl Default for ExpansionMetric {
    fn default() -> Self {
        ExpansionMetric::Adapted { clip: 0.05 }
    }
}

fn weight(metric: ExpansionMetric, x: f64) -> f64 {
    match metric {
        ExpansionMetric::Adapted { clip } => 1.0 / (4.0 - x * x).max(clip).sqrt(),
        ExpansionMetric::Flat => 1.0,
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum ExpansionEstimate {
    /// Minimum per-step expansion over sampled points outside the window.
    Lambda { lambda: f64, samples: usize },
    /// The window swallowed the core interval, or no orbit point fell
    /// outside it.
    Degenerate,
}

/// Empirical per-step expansion outside `[-delta, delta]` in the chosen
/// metric, sampled along the critical value's orbit.
pub fn expansion_outside(
    p: ScalarMapParam,
    delta: f64,
    n: usize,
    metric: ExpansionMetric,
) -> ExpansionEstimate {
    assert!(delta > 0.0);
    let core = scalar::core_interval(p).expect("admissible parameter");
    if delta >= core.len() * 0.5 {
        return ExpansionEstimate::Degenerate;
    }
    let mut x = p.a();
    let mut lambda = f64::INFINITY;
    let mut samples = 0usize;
    for _ in 0..n {
        if x.abs() > delta {
            let fx = scalar::eval_map(p, x);
            let rate = (2.0 * x).abs() * weight(metric, fx) / weight(metric, x);
            lambda = lambda.min(rate);
            samples += 1;
        }
        x = scalar::eval_map(p, x);
    }
    if samples == 0 {
        ExpansionEstimate::Degenerate
    } else {
        ExpansionEstimate::Lambda { lambda, samples }
    }
}

/// Classifies the return at time `n_ret` and computes its binding time.
///
/// Case (a) when `|P_a^N(a)| >= delta` (binding time 0); case (c) when the
/// return is deeper than `exp(-alpha_ba * N)`; otherwise case (b) with `k`
/// the largest number of steps through which the return orbit stays within
/// `delta_sep` of the critical orbit. The binding time is capped at `N - 1`
/// and at `max_k`; failure to separate is an overflow error.
pub fn binding_time(
    p: ScalarMapParam,
    knobs: &BindingKnobs,
    n_ret: usize,
) -> Result<(usize, BindingCase), BindingError> {
    let mut x = p.a();
    for _ in 0..n_ret {
        x = scalar::eval_map(p, x);
    }
    let depth = x.abs();
    if depth >= knobs.delta {
        return Ok((0, BindingCase::Outside));
    }
    if depth < (-knobs.alpha_ba * n_ret as f64).exp() {
        return Ok((0, BindingCase::Deep));
    }
    let cap = knobs.max_k.min(n_ret.saturating_sub(1));
    let mut z = x; // return orbit: P_a^{N+j}(a)
    let mut y = 0.0f64; // critical orbit: P_a^j(0)
    let mut k = 0usize;
    for j in 0..=cap {
        if (z - y).abs() > knobs.delta_sep {
            return Ok((k, BindingCase::Bound));
        }
        k = j;
        z = scalar::eval_map(p, z);
        y = scalar::eval_map(p, y);
    }
    Err(BindingError::BindingOverflow(cap))
}

/// The bound-time budget: total binding length before `n` stays below
/// `alpha_frac * n`.
pub fn check_h(ledger: &BindingLedger, n: usize, alpha_frac: f64) -> bool {
    ledger.total_bound_before(n) as f64 <= alpha_frac * n as f64
}

/// Collet–Eckmann growth estimate along the critical value's orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CeEstimate {
    /// `(1/n) log |DP_a^n(a)|`.
    pub rate: f64,
    /// Running minimum of the per-step rate over the tail `[n/2, n]`, a
    /// liminf proxy.
    pub tail_min: f64,
}

/// Derivative growth rate along the critical value's orbit, with a
/// tail-minimum liminf proxy. Errors when the orbit hits the critical point
/// exactly.
pub fn collet_eckmann_estimate(
    p: ScalarMapParam,
    n: usize,
) -> Result<CeEstimate, BindingError> {
    assert!(n >= 1);
    let mut x = p.a();
    let mut acc = 0.0f64;
    let mut tail_min = f64::INFINITY;
    let mut rate = 0.0;
    for m in 1..=n {
        if x == 0.0 {
            return Err(BindingError::CriticalHit(m - 1));
        }
        acc += (2.0 * x).abs().ln();
        rate = acc / m as f64;
        if m * 2 >= n {
            tail_min = tail_min.min(rate);
        }
        x = scalar::eval_map(p, x);
    }
    Ok(CeEstimate { rate, tail_min })
}

// ---------------------------------------------------------------------------
// Parameter selection along critical curves.
// ---------------------------------------------------------------------------

/// Abutment tolerance when merging reported windows.
const WIDTH_FLOOR: f64 = 1e-12;

/// Budget on simultaneously tracked windows.
const MAX_WINDOWS: usize = 400_000;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct Probe {
    a: f64,
    /// `P_a^time(a)` for the window's current time.
    x: f64,
}

impl Probe {
    fn fresh(a: f64, time: usize) -> Self {
        let p = ScalarMapParam::new(a).expect("window within admissible range");
        let mut x = a;
        for _ in 0..time {
            x = scalar::eval_map(p, x);
        }
        Self { a, x }
    }

    fn advance(&mut self, steps: usize) {
        let p = ScalarMapParam::new(self.a).expect("probe parameter");
        for _ in 0..steps {
            self.x = scalar::eval_map(p, self.x);
        }
    }

    fn scenario(&self, time: usize, knobs: &BindingKnobs) -> BindingCase {
        let depth = self.x.abs();
        if depth >= knobs.delta {
            BindingCase::Outside
        } else if depth < (-knobs.alpha_ba * time as f64).exp() {
            BindingCase::Deep
        } else {
            BindingCase::Bound
        }
    }
}

/// A parameter window advancing along its critical curve `a -> P_a^N(a)`.
///
/// Binding periods are kept identical across the window (checked at the
/// endpoints and midpoint — a numerical proxy for full-window constancy,
/// noted in every report), and the current time is never inside a binding
/// period. Below the configured resolution the window stops splitting and
/// follows its midpoint parameter (`point_mode`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalCurveWindow {
    pub param_interval: RealInterval,
    pub time: usize,
    probes: [Probe; 3],
    pub history: BindingLedger,
    bound_total: usize,
    birth_time: usize,
    pub point_mode: bool,
}

impl CriticalCurveWindow {
    fn root(window: RealInterval) -> Self {
        Self {
            param_interval: window,
            time: 0,
            probes: [
                Probe::fresh(window.lo, 0),
                Probe::fresh(window.mid(), 0),
                Probe::fresh(window.hi, 0),
            ],
            history: BindingLedger::new(window.mid()),
            bound_total: 0,
            birth_time: 0,
            point_mode: false,
        }
    }

    /// Endpoint images `P_a^N(a)` at both ends.
    pub fn endpoint_images(&self) -> (f64, f64) {
        (self.probes[0].x, self.probes[2].x)
    }

    /// Length of the critical curve across the window.
    pub fn curve_length(&self) -> f64 {
        (self.probes[2].x - self.probes[0].x).abs()
    }

    fn split(&self) -> (Self, Self) {
        let mid = self.param_interval.mid();
        let left = Self {
            param_interval: RealInterval::new(self.param_interval.lo, mid),
            time: self.time,
            probes: [
                self.probes[0],
                Probe::fresh(0.5 * (self.param_interval.lo + mid), self.time),
                self.probes[1],
            ],
            history: BindingLedger {
                a: 0.5 * (self.param_interval.lo + mid),
                ..self.history.clone()
            },
            bound_total: self.bound_total,
            birth_time: self.time,
            point_mode: false,
        };
        let right = Self {
            param_interval: RealInterval::new(mid, self.param_interval.hi),
            time: self.time,
            probes: [
                self.probes[1],
                Probe::fresh(0.5 * (mid + self.param_interval.hi), self.time),
                self.probes[2],
            ],
            history: BindingLedger {
                a: 0.5 * (mid + self.param_interval.hi),
                ..self.history.clone()
            },
            bound_total: self.bound_total,
            birth_time: self.time,
            point_mode: false,
        };
        (left, right)
    }
}

/// Why a window left the selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExclusionKind {
    /// Case (c): return deeper than the cutoff.
    DeepReturn,
    /// Case (b) whose binding time would overrun the bound-time budget, or
    /// failed to separate at all.
    BudgetOverflow,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct ExclusionStat {
    pub count: usize,
    pub measure: f64,
}

/// A window that survived to `n_max`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurvivorWindow {
    pub param_interval: RealInterval,
    pub curve_length: f64,
    pub returns: usize,
    pub bound_total: usize,
    /// Number of sub-`ell_min` neighbours folded into this row.
    pub merged: usize,
    /// Curve shorter than `ell_min` with no neighbour to merge into.
    pub short_flag: bool,
    /// The window hit the parameter resolution and was followed through its
    /// midpoint parameter; the endpoint/midpoint schedule agreement is not
    /// certified.
    pub resolution_limited: bool,
    pub ledger: BindingLedger,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectionReport {
    pub window: RealInterval,
    pub n_max: usize,
    pub knobs: BindingKnobs,
    pub survivors: Vec<SurvivorWindow>,
    pub surviving_measure: f64,
    /// Total width of windows alive at each time `0..=n_max`.
    pub survivor_measure_by_time: Vec<f64>,
    pub exclusions: Vec<(ExclusionKind, ExclusionStat)>,
    pub truncated: bool,
}

impl SelectionReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

enum StepOutcome {
    Survived(CriticalCurveWindow),
    Continue(CriticalCurveWindow),
    Split {
        parent_span: (f64, usize, usize),
        left: CriticalCurveWindow,
        right: CriticalCurveWindow,
    },
    Excluded(CriticalCurveWindow, ExclusionKind),
}

fn step_window(
    mut w: CriticalCurveWindow,
    n_max: usize,
    knobs: &BindingKnobs,
) -> StepOutcome {
    if w.time >= n_max {
        return StepOutcome::Survived(w);
    }
    let scenario = if w.point_mode {
        w.probes[1].scenario(w.time, knobs)
    } else {
        let scenarios =
            [w.probes[0], w.probes[1], w.probes[2]].map(|p| p.scenario(w.time, knobs));
        if scenarios[0] != scenarios[1] || scenarios[1] != scenarios[2] {
            if w.param_interval.len() <= knobs.resolution {
                w.point_mode = true;
            } else {
                let parent_span = (w.param_interval.len(), w.birth_time, w.time);
                let (left, right) = w.split();
                return StepOutcome::Split { parent_span, left, right };
            }
        }
        scenarios[1]
    };
    match scenario {
        BindingCase::Outside => {
            for p in &mut w.probes {
                p.advance(1);
            }
            w.time += 1;
            StepOutcome::Continue(w)
        }
        BindingCase::Deep => {
            w.history.excluded_at = Some((w.time, "deep return (case c)".into()));
            StepOutcome::Excluded(w, ExclusionKind::DeepReturn)
        }
        BindingCase::Bound => {
            // Binding periods must agree across the window (the endpoint and
            // midpoint check); split until they do or the resolution is hit.
            let probe_set: &[Probe] =
                if w.point_mode { &w.probes[1..2] } else { &w.probes };
            let times: Vec<_> = probe_set
                .iter()
                .map(|probe| {
                    let p = ScalarMapParam::new(probe.a).expect("probe parameter");
                    binding_time(p, knobs, w.time)
                })
                .collect();
            let all_equal = times.windows(2).all(|t| t[0] == t[1]);
            if !all_equal {
                if w.param_interval.len() <= knobs.resolution {
                    w.point_mode = true;
                } else {
                    let parent_span = (w.param_interval.len(), w.birth_time, w.time);
                    let (left, right) = w.split();
                    return StepOutcome::Split { parent_span, left, right };
                }
            }
            let mid_idx = if w.point_mode && times.len() == 1 { 0 } else { 1 };
            match &times[mid_idx.min(times.len() - 1)] {
                Err(_) => {
                    w.history.excluded_at = Some((w.time, "binding overflow".into()));
                    StepOutcome::Excluded(w, ExclusionKind::BudgetOverflow)
                }
                Ok((k, _case)) => {
                    let k = *k;
                    let end = w.time + k;
                    if (w.bound_total + k) as f64 > knobs.alpha_frac * end as f64 {
                        w.history.excluded_at =
                            Some((w.time, format!("budget overflow at k={k}")));
                        return StepOutcome::Excluded(w, ExclusionKind::BudgetOverflow);
                    }
                    w.history.returns.push(ReturnEvent {
                        time: w.time,
                        depth: w.probes[1].x.abs(),
                        binding_time: k,
                        case: BindingCase::Bound,
                    });
                    w.bound_total += k;
                    for p in &mut w.probes {
                        p.advance(k + 1);
                    }
                    w.time += k + 1;
                    StepOutcome::Continue(w)
                }
            }
        }
    }
}

/// Runs the parameter selection over `window` up to time `n_max`.
///
/// Windows advance in deterministic supersteps (ordered by left endpoint);
/// scenario-(a) windows iterate once, scenario-(b) windows jump to the end
/// of their binding period, scenario-(c) windows and budget violators are
/// discarded. Survivors shorter than `ell_min` in curve length are folded
/// into an abutting surviving neighbour for reporting.
pub fn run_selection(
    window: RealInterval,
    n_max: usize,
    knobs: &BindingKnobs,
) -> SelectionReport {
    let mut active = vec![CriticalCurveWindow::root(window)];
    let mut finished: Vec<CriticalCurveWindow> = Vec::new();
    let mut exclusions: std::collections::HashMap<ExclusionKind, ExclusionStat> =
        std::collections::HashMap::new();
    // (width, alive-from, alive-to) records for the per-time measure.
    let mut spans: Vec<(f64, usize, usize)> = Vec::new();
    let mut truncated = false;

    while !active.is_empty() {
        if active.len() > MAX_WINDOWS {
            truncated = true;
            for w in active.drain(..) {
                spans.push((w.param_interval.len(), w.birth_time, w.time));
            }
            break;
        }
        active.sort_by(|x, y| {
            x.param_interval
                .lo
                .total_cmp(&y.param_interval.lo)
                .then(x.param_interval.hi.total_cmp(&y.param_interval.hi))
        });
        let outcomes: Vec<StepOutcome> = std::mem::take(&mut active)
            .into_par_iter()
            .map(|w| step_window(w, n_max, knobs))
            .collect();
        for outcome in outcomes {
            match outcome {
                StepOutcome::Survived(w) => {
                    spans.push((w.param_interval.len(), w.birth_time, n_max + 1));
                    finished.push(w);
                }
                StepOutcome::Continue(w) => active.push(w),
                StepOutcome::Split { parent_span, left, right } => {
                    spans.push(parent_span);
                    active.push(left);
                    active.push(right);
                }
                StepOutcome::Excluded(w, kind) => {
                    spans.push((w.param_interval.len(), w.birth_time, w.time));
                    let stat = exclusions.entry(kind).or_default();
                    stat.count += 1;
                    stat.measure += w.param_interval.len();
                }
            }
        }
    }

    finished.sort_by(|x, y| x.param_interval.lo.total_cmp(&y.param_interval.lo));
    let surviving_measure: f64 =
        finished.iter().map(|w| w.param_interval.len()).sum();

    // Half-open spans: a window counts at the times it was evaluated,
    // children take over exactly at the split time.
    let mut measure_by_time = vec![0.0f64; n_max + 1];
    for &(width, t0, t1) in &spans {
        for slot in measure_by_time.iter_mut().take(t1.min(n_max + 1)).skip(t0) {
            *slot += width;
        }
    }

    // Fold short survivors into an abutting neighbour (boundary-effect
    // trimming); isolated short windows stay, flagged.
    let mut survivors: Vec<SurvivorWindow> = Vec::new();
    for w in finished {
        let short = w.curve_length() < knobs.ell_min;
        let abuts = survivors.last().is_some_and(|last| {
            (last.param_interval.hi - w.param_interval.lo).abs() <= WIDTH_FLOOR
        });
        if short && abuts {
            let last = survivors.last_mut().unwrap();
            last.param_interval =
                RealInterval::new(last.param_interval.lo, w.param_interval.hi);
            last.merged += 1;
            last.resolution_limited |= w.point_mode;
            continue;
        }
        survivors.push(SurvivorWindow {
            param_interval: w.param_interval,
            curve_length: w.curve_length(),
            returns: w.history.returns.len(),
            bound_total: w.bound_total,
            merged: 0,
            short_flag: short && !abuts,
            resolution_limited: w.point_mode,
            ledger: w.history,
        });
    }

    let mut exclusions: Vec<_> = exclusions.into_iter().collect();
    exclusions.sort_by_key(|(k, _)| *k as u8);
    SelectionReport {
        window,
        n_max,
        knobs: *knobs,
        survivors,
        surviving_measure,
        survivor_measure_by_time: measure_by_time,
        exclusions,
        truncated,
    }
}
