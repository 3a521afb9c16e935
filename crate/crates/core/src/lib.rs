//! Numerical machinery for non-uniformly hyperbolic dynamics at desk scale.
//!
//! The crate is organised around the quadratic family `P_a(x) = x^2 + a`:
//!
//! * [`scalar`] — evaluation, fixed points, invariant interval, orbits with
//!   derivative bookkeeping, critical return times;
//! * [`puzzle`] — puzzle pieces of all orders and their nesting/image
//!   relations;
//! * [`regular`] — regular intervals, the exponential-covering test and the
//!   simple intervals near the Chebychev parameter;
//! * [`strongreg`] — critical-value itineraries, the simplicity-ratio test,
//!   parameter classification and parapuzzle windows;
//! * [`binding`] — the binding algorithm: returns, binding times, the
//!   bound-time budget, Collet–Eckmann estimates and parameter selection
//!   along critical curves;
//! * [`measures`] — Lyapunov exponents, orbit-histogram invariant densities
//!   and empirical-measure diagnostics;
//! * [`henon`] — the Henon and generalized plane families, trapping regions,
//!   plane exponents, and the box/piece/star-product combinatorics.
//!
//! Everything computes in binary64. [`xprec`] provides a small double-double
//! type used by test oracles that need extra precision.

pub mod binding;
pub mod henon;
pub mod interval;
pub mod measures;
pub mod puzzle;
pub mod regular;
pub mod scalar;
pub mod strongreg;
pub mod xprec;

pub use interval::RealInterval;
pub use scalar::{FixedPointPair, OrbitSegment, ReturnConvention, ScalarMapParam};

/// Format a float with 17 significant decimal digits, enough to round-trip
/// any binary64 value through text.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
