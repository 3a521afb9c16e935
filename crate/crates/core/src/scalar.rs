//! Core evaluation of the quadratic family `P_a(x) = x^2 + a`.
//!
//! Holds the parameter type, fixed points, the invariant core interval,
//! orbit segments with running log-derivative sums, and the return time of
//! the critical orbit to the central interval `A = [alpha, -alpha]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::RealInterval;

/// Residual tolerance for fixed-point identities.
pub const EPS_FIX: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ScalarError {
    /// `1 - 4a < 0`: the fixed-point equation has no real roots.
    #[error("no real fixed points for a = {0} (discriminant 1-4a < 0)")]
    NoRealFixedPoints(f64),
    /// `invariant_core` called outside its contract range `[-2, -1]`.
    #[error("[P_a(0), P_a^2(0)] is not invariant for a = {0} (need a in [-2, -1])")]
    NotInvariant(f64),
    /// Parameter outside the admissible range `[-2, 1/4]`.
    #[error("parameter a = {0} outside the admissible range [-2, 0.25]")]
    ParamOutOfRange(f64),
}

/// One real parameter `a` selecting the map `P_a(x) = x^2 + a`.
///
/// Valid range is `[-2, 1/4]`, where real fixed points exist.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarMapParam {
    a: f64,
}

impl ScalarMapParam {
    pub fn new(a: f64) -> Result<Self, ScalarError> {
        if !a.is_finite() || !(-2.0..=0.25).contains(&a) {
            return Err(ScalarError::ParamOutOfRange(a));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

/// The two solutions of `P_a(x) = x`, ordered `alpha <= beta`.
///
/// For `a <= -3/4` they satisfy `-beta < alpha < -alpha < beta` and both are
/// repelling; `alpha` is the orientation-reversing one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointPair {
    pub alpha: f64,
    pub beta: f64,
}

/// Which orbit the return time `M` counts.
///
/// The critical-point convention asks for the smallest `M >= 1` with
/// `P_a^M(0)` interior to `A`; the critical-value convention counts steps
/// applied to the critical value `a` instead and is smaller by exactly one.
/// Both are exposed because the box combinatorics (symbol count `2M - 2`,
/// central gap of width about `2^-M`) are stated in the critical-value
/// clock, while the interval machinery defaults to the critical point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReturnConvention {
    #[default]
    CriticalPoint,
    CriticalValue,
}

/// A finite forward orbit with running log-derivative partial sums.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSegment {
    pub start: f64,
    /// `values[k] = P_a^k(start)`, length `n + 1`.
    pub values: Vec<f64>,
    /// `log_derivative_partial_sums[k] = sum_{i <= k} log|2 values[i]|`,
    /// length `n`; entry `k` is the log-derivative of `P_a^{k+1}` at `start`.
    pub log_derivative_partial_sums: Vec<f64>,
    /// Indices `k` with `values[k] == 0` exactly.
    pub zero_hits: Vec<usize>,
}

impl OrbitSegment {
    /// Log-derivative of `P_a^n` at the start point, when defined.
    pub fn log_derivative(&self, n: usize) -> Option<f64> {
        if n == 0 {
            return Some(0.0);
        }
        self.log_derivative_partial_sums.get(n - 1).copied()
    }
}

/// `P_a(x) = x^2 + a`.
#[inline]
pub fn eval_map(p: ScalarMapParam, x: f64) -> f64 {
    x * x + p.a()
}

/// `P_a'(x) = 2x`.
#[inline]
pub fn eval_derivative(_p: ScalarMapParam, x: f64) -> f64 {
    2.0 * x
}

/// Roots of `x^2 - x + a = 0`, ordered `alpha <= beta`.
pub fn fixed_points(p: ScalarMapParam) -> Result<FixedPointPair, ScalarError> {
    let a = p.a();
    let disc = 1.0 - 4.0 * a;
    if disc < 0.0 {
        return Err(ScalarError::NoRealFixedPoints(a));
    }
    let s = disc.sqrt();
    Ok(FixedPointPair { alpha: 0.5 * (1.0 - s), beta: 0.5 * (1.0 + s) })
}

/// The central interval `A = [alpha, -alpha]`. Requires `a < 0` so that
/// `alpha < 0`.
pub fn core_interval(p: ScalarMapParam) -> Result<RealInterval, ScalarError> {
    let fp = fixed_points(p)?;
    if fp.alpha >= 0.0 {
        return Err(ScalarError::ParamOutOfRange(p.a()));
    }
    Ok(RealInterval::new(fp.alpha, -fp.alpha))
}

/// The invariant interval `[P_a(0), P_a^2(0)] = [a, a^2 + a]` for
/// `a in [-2, -1]`.
pub fn invariant_core(p: ScalarMapParam) -> Result<RealInterval, ScalarError> {
    let a = p.a();
    if !(-2.0..=-1.0).contains(&a) {
        return Err(ScalarError::NotInvariant(a));
    }
    let core = RealInterval::new(a, a * a + a);
    debug_assert!({
        // P is monotone on each side of 0, so the image of the core is the
        // hull of P(0)=a and the larger endpoint image.
        let img_hi = eval_map(p, core.lo).max(eval_map(p, core.hi));
        core.contains(a) && img_hi <= core.hi + 1e-12
    });
    Ok(core)
}

/// Full forward orbit of `x0` with running sums of `log|2 x_i|`.
///
/// An exact hit of the critical point is flagged, not fatal: the
/// corresponding log term is `-inf` and subsequent sums stay `-inf`.
pub fn orbit_with_derivative(p: ScalarMapParam, x0: f64, n: usize) -> OrbitSegment {
    let mut values = Vec::with_capacity(n + 1);
    let mut sums = Vec::with_capacity(n);
    let mut zero_hits = Vec::new();
    let mut x = x0;
    let mut acc = 0.0f64;
    values.push(x);
    for k in 0..n {
        if x == 0.0 {
            zero_hits.push(k);
        }
        acc += (2.0 * x).abs().ln();
        sums.push(acc);
        x = eval_map(p, x);
        values.push(x);
    }
    if n > 0 && *values.last().unwrap() == 0.0 {
        zero_hits.push(n);
    }
    OrbitSegment { start: x0, values, log_derivative_partial_sums: sums, zero_hits }
}

/// Smallest `M >= 1` such that the critical orbit re-enters the open
/// interval `(alpha, -alpha)`, under the requested convention.
///
/// A landing exactly on the boundary counts as no return: boundary points
/// belong to the stable set of the orientation-reversing fixed point.
/// Returns `None` when no return happens within `max_steps`.
pub fn critical_return_time(
    p: ScalarMapParam,
    max_steps: usize,
    convention: ReturnConvention,
) -> Option<usize> {
    let fp = fixed_points(p).ok()?;
    if fp.alpha >= 0.0 {
        return None;
    }
    let (alpha, neg_alpha) = (fp.alpha, -fp.alpha);
    // Orbit of the critical point; the critical-value clock is the same
    // sequence with the index shifted down by one.
    let mut x = 0.0f64;
    for m in 1..=max_steps {
        x = eval_map(p, x);
        if alpha < x && x < neg_alpha {
            return match convention {
                ReturnConvention::CriticalPoint => Some(m),
                ReturnConvention::CriticalValue => Some(m - 1),
            };
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xprec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eval_map_examples() {
        let p = ScalarMapParam::new(-2.0).unwrap();
        assert_eq!(eval_map(p, 0.0), -2.0);
        assert_eq!(eval_map(p, 2.0), 2.0);
        let p = ScalarMapParam::new(-1.5).unwrap();
        assert_eq!(eval_map(p, 0.5), -1.25);
    }

    #[test]
    fn fixed_points_from_quadratic_formula() {
        // Oracle: roots of x^2 - x + a via the explicit formula.
        let p = ScalarMapParam::new(-2.0).unwrap();
        let fp = fixed_points(p).unwrap();
        assert_eq!(fp.alpha, -1.0);
        assert_eq!(fp.beta, 2.0);

        let p = ScalarMapParam::new(-1.0).unwrap();
        let fp = fixed_points(p).unwrap();
        let sqrt5 = 5f64.sqrt();
        assert_abs_diff_eq!(fp.alpha, 0.5 * (1.0 - sqrt5), epsilon = 1e-15);
        assert_abs_diff_eq!(fp.beta, 0.5 * (1.0 + sqrt5), epsilon = 1e-15);

        let p = ScalarMapParam::new(0.25).unwrap();
        let fp = fixed_points(p).unwrap();
        assert_eq!(fp.alpha, 0.5);
        assert_eq!(fp.beta, 0.5);
    }

    #[test]
    fn fixed_point_residuals_over_sampled_parameters() {
        for i in 0..1000 {
            let a = -2.0 + 2.25 * (i as f64) / 999.0;
            let p = ScalarMapParam::new(a).unwrap();
            let fp = fixed_points(p).unwrap();
            assert!((eval_map(p, fp.alpha) - fp.alpha).abs() <= EPS_FIX);
            assert!((eval_map(p, fp.beta) - fp.beta).abs() <= EPS_FIX);
        }
    }

    #[test]
    fn ordering_below_minus_three_quarters() {
        for i in 0..100 {
            let a = -2.0 + 1.2499 * (i as f64) / 99.0;
            let p = ScalarMapParam::new(a).unwrap();
            let fp = fixed_points(p).unwrap();
            assert!(-fp.beta < fp.alpha && fp.alpha < -fp.alpha && -fp.alpha < fp.beta);
        }
    }

    #[test]
    fn no_real_fixed_points_rejected_by_param_range() {
        assert!(ScalarMapParam::new(0.26).is_err());
        // Inside the type's range the discriminant is always >= 0, so the
        // NoRealFixedPoints arm is unreachable through the public API.
        let fp = fixed_points(ScalarMapParam::new(0.25).unwrap()).unwrap();
        assert_eq!(fp.alpha, fp.beta);
    }

    #[test]
    fn invariant_core_examples() {
        let core = invariant_core(ScalarMapParam::new(-2.0).unwrap()).unwrap();
        assert_eq!(core, RealInterval::new(-2.0, 2.0));
        let core = invariant_core(ScalarMapParam::new(-1.0).unwrap()).unwrap();
        assert_eq!(core, RealInterval::new(-1.0, 0.0));
        let core = invariant_core(ScalarMapParam::new(-1.5).unwrap()).unwrap();
        assert_eq!(core, RealInterval::new(-1.5, 0.75));
        assert_eq!(
            invariant_core(ScalarMapParam::new(-0.5).unwrap()),
            Err(ScalarError::NotInvariant(-0.5))
        );
    }

    #[test]
    fn orbit_on_chebychev_fixed_ray() {
        // -2 -> 2 -> 2 -> 2, derivative 4 at every step.
        let p = ScalarMapParam::new(-2.0).unwrap();
        let seg = orbit_with_derivative(p, -2.0, 3);
        assert_eq!(seg.values, vec![-2.0, 2.0, 2.0, 2.0]);
        assert_abs_diff_eq!(seg.log_derivative_partial_sums[0], 4f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(seg.log_derivative_partial_sums[1], 16f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(seg.log_derivative_partial_sums[2], 64f64.ln(), epsilon = 1e-14);
        assert!(seg.zero_hits.is_empty());
    }

    #[test]
    fn orbit_flags_critical_start() {
        let p = ScalarMapParam::new(-2.0).unwrap();
        let seg = orbit_with_derivative(p, 0.0, 2);
        assert_eq!(seg.values, vec![0.0, -2.0, 2.0]);
        assert_eq!(seg.zero_hits, vec![0]);
        assert_eq!(seg.log_derivative_partial_sums[0], f64::NEG_INFINITY);
    }

    #[test]
    fn orbit_matches_extended_precision_oracle() {
        let p = ScalarMapParam::new(-1.9).unwrap();
        let seg = orbit_with_derivative(p, 0.0, 10);
        let oracle = xprec::quad_orbit(-1.9, 0.0, 10);
        for (got, want) in seg.values.iter().zip(oracle.iter()) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-9);
        }
    }

    #[test]
    fn log_sums_agree_with_direct_products() {
        // Relative agreement between the running log sums and log of the
        // direct product of |2 x_i|, recomputed in chunks to avoid overflow.
        let p = ScalarMapParam::new(-1.7).unwrap();
        let seg = orbit_with_derivative(p, 0.3, 1000);
        let mut log_prod = 0.0f64;
        for k in 0..1000 {
            log_prod += (2.0 * seg.values[k]).abs().ln();
            let got = seg.log_derivative_partial_sums[k];
            let scale = log_prod.abs().max(1.0);
            assert!((got - log_prod).abs() / scale <= 1e-10);
        }
    }

    #[test]
    fn semi_conjugacy_with_doubling_at_chebychev() {
        // P_{-2}(2 cos 2 pi t) = 2 cos(2 pi * 2t), sampled over 10^4 angles.
        let p = ScalarMapParam::new(-2.0).unwrap();
        for i in 0..10_000 {
            let theta = i as f64 / 10_000.0;
            let x = 2.0 * (2.0 * std::f64::consts::PI * theta).cos();
            let lhs = eval_map(p, x);
            let rhs = 2.0 * (4.0 * std::f64::consts::PI * theta).cos();
            assert!((lhs - rhs).abs() <= 1e-12, "theta={theta}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn return_time_by_direct_iteration_oracle() {
        // Independent oracle: naive iteration with the open-interval rule.
        let oracle = |a: f64, max: usize| -> Option<usize> {
            let alpha = 0.5 * (1.0 - (1.0 - 4.0 * a).sqrt());
            let mut x = 0.0f64;
            for m in 1..=max {
                x = x * x + a;
                if alpha < x && x < -alpha {
                    return Some(m);
                }
            }
            None
        };
        for &a in &[-1.0, -1.2, -1.5, -1.99, -2.0 + 1e-6, -2.0 + 1e-4] {
            let p = ScalarMapParam::new(a).unwrap();
            let got = critical_return_time(p, 10_000, ReturnConvention::CriticalPoint);
            assert_eq!(got, oracle(a, 10_000), "a = {a}");
        }
    }

    #[test]
    fn conventions_differ_by_one() {
        let p = ScalarMapParam::new(-2.0 + 1e-4).unwrap();
        let mcp = critical_return_time(p, 10_000, ReturnConvention::CriticalPoint).unwrap();
        let mcv = critical_return_time(p, 10_000, ReturnConvention::CriticalValue).unwrap();
        assert_eq!(mcp, mcv + 1);
        // At a = -1 the critical orbit is 0 -> -1 -> 0: the critical point
        // re-enters (alpha, -alpha) at step 2, the critical value at step 1.
        let p = ScalarMapParam::new(-1.0).unwrap();
        assert_eq!(critical_return_time(p, 100, ReturnConvention::CriticalPoint), Some(2));
        assert_eq!(critical_return_time(p, 100, ReturnConvention::CriticalValue), Some(1));
    }

    #[test]
    fn chebychev_orbit_never_returns() {
        let p = ScalarMapParam::new(-2.0).unwrap();
        assert_eq!(critical_return_time(p, 100_000, ReturnConvention::CriticalPoint), None);
    }

    #[test]
    fn return_time_grows_logarithmically_near_chebychev() {
        // M ~ log(1/eps)/log 4 + O(1): check the oracle value sits within a
        // generous additive band around the asymptotic prediction.
        for &eps in &[1e-3, 1e-4, 1e-5, 1e-6, 1e-8] {
            let p = ScalarMapParam::new(-2.0 + eps).unwrap();
            let m = critical_return_time(p, 100_000, ReturnConvention::CriticalPoint).unwrap()
                as f64;
            let predicted = (1.0 / eps).ln() / 4f64.ln();
            assert!(
                (m - predicted).abs() <= 4.0,
                "eps={eps}: M={m} predicted={predicted}"
            );
        }
    }
}
