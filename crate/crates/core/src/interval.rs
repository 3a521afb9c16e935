//! Closed real intervals with ordered endpoints.

use serde::{Deserialize, Serialize};

/// A closed interval `[lo, hi]` with `lo <= hi`.
///
/// This is the universal 1-D geometric object of the crate: puzzle pieces,
/// the core interval `A`, parameter windows and histogram supports are all
/// `RealInterval`s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealInterval {
    pub lo: f64,
    pub hi: f64,
}

impl RealInterval {
    /// Builds an interval, panicking on a reversed or non-finite pair.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo.is_finite() && hi.is_finite(), "interval endpoints must be finite");
        assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Self { lo, hi }
    }

    /// Interval spanned by two values in either order.
    pub fn hull(a: f64, b: f64) -> Self {
        if a <= b {
            Self::new(a, b)
        } else {
            Self::new(b, a)
        }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Closed containment of a point.
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Strict interior containment of a point.
    pub fn contains_interior(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// Containment of another interval, with slack `tol` on each side.
    pub fn contains_interval(&self, other: &RealInterval, tol: f64) -> bool {
        self.lo - tol <= other.lo && other.hi <= self.hi + tol
    }

    /// Symmetric enlargement by `pad` on each side.
    pub fn enlarged(&self, pad: f64) -> Self {
        Self::new(self.lo - pad, self.hi + pad)
    }

    /// Intersection, or `None` when disjoint.
    pub fn intersect(&self, other: &RealInterval) -> Option<RealInterval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Some(RealInterval { lo, hi })
        } else {
            None
        }
    }

    /// Endpoint-wise distance to another interval, as a sup metric.
    pub fn endpoint_distance(&self, other: &RealInterval) -> f64 {
        (self.lo - other.lo).abs().max((self.hi - other.hi).abs())
    }
}

impl std::fmt::Display for RealInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_orders_endpoints() {
        let i = RealInterval::hull(2.0, -1.0);
        assert_eq!(i.lo, -1.0);
        assert_eq!(i.hi, 2.0);
        assert_eq!(i.len(), 3.0);
    }

    #[test]
    fn containment_and_intersection() {
        let a = RealInterval::new(0.0, 1.0);
        let b = RealInterval::new(0.25, 0.5);
        assert!(a.contains_interval(&b, 0.0));
        assert!(!b.contains_interval(&a, 0.0));
        assert_eq!(a.intersect(&b), Some(b));
        let c = RealInterval::new(2.0, 3.0);
        assert!(a.intersect(&c).is_none());
    }

    #[test]
    #[should_panic]
    fn reversed_endpoints_panic() {
        let _ = RealInterval::new(1.0, 0.0);
    }
}
