//! Double-double arithmetic for test oracles.
//!
//! A value is stored as an unevaluated sum `hi + lo` of two binary64
//! numbers, giving roughly 106 bits of significand. Only the handful of
//! operations needed to iterate `x^2 + a` and sum logarithmic derivatives
//! are provided. This module exists solely so that oracles can re-run an
//! orbit at higher precision; production paths stay in binary64.

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

/// Error-free sum of two floats (Knuth two-sum).
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Error-free product via FMA.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl DD {
    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add_f64(self, x: f64) -> DD {
        self + DD::from_f64(x)
    }

    pub fn sqr(self) -> DD {
        self * self
    }

    pub fn abs(self) -> DD {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            DD { hi: -self.hi, lo: -self.lo }
        } else {
            self
        }
    }
}

impl std::ops::Add for DD {
    type Output = DD;
    fn add(self, other: DD) -> DD {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = two_sum(s, e);
        DD { hi, lo }
    }
}

impl std::ops::Mul for DD {
    type Output = DD;
    fn mul(self, other: DD) -> DD {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = two_sum(p, e);
        DD { hi, lo }
    }
}

/// One quadratic-family step `x^2 + a` in double-double precision.
#[inline]
pub fn quad_step(x: DD, a: f64) -> DD {
    x.sqr().add_f64(a)
}

/// Iterates `x^2 + a` for `n` steps in double-double precision and returns
/// the full orbit rounded to binary64.
pub fn quad_orbit(a: f64, x0: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut x = DD::from_f64(x0);
    out.push(x.to_f64());
    for _ in 0..n {
        x = quad_step(x, a);
        out.push(x.to_f64());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_small_integers() {
        let x = DD::from_f64(3.0);
        let y = x.sqr().add_f64(-2.0);
        assert_eq!(y.to_f64(), 7.0);
        assert_eq!(y.lo, 0.0);
    }

    #[test]
    fn captures_rounding_residual() {
        // 1 + 2^-60 is not representable in binary64; DD keeps the tail.
        let x = DD::from_f64(1.0).add_f64(2f64.powi(-60));
        assert_eq!(x.hi, 1.0);
        assert_eq!(x.lo, 2f64.powi(-60));
    }

    #[test]
    fn chebychev_fixed_point_is_exact() {
        // 2 -> 2 under x^2 - 2, with no drift in extended precision.
        let orbit = quad_orbit(-2.0, 2.0, 50);
        assert!(orbit.iter().all(|&v| v == 2.0));
    }
}
