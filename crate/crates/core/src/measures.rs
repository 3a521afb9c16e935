//! Lyapunov exponents, invariant-density estimates and empirical-measure
//! diagnostics for the quadratic family.
//!
//! Densities are estimated by orbit histograms (the Birkhoff average of bin
//! indicators), which matches the empirical-measure definition of a basin
//! directly and is memory-light. Multiple seeded starts are averaged; the
//! generator and seed are recorded so reports reproduce bit for bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt17;
use crate::interval::RealInterval;
use crate::scalar::{self, ScalarMapParam};

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    /// The orbit landed exactly on the critical point; the log-derivative
    /// is undefined.
    #[error("orbit hit the critical point exactly at step {0}")]
    CriticalHit(usize),
}

/// A normalized mass histogram over an interval support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityHistogram {
    pub support: RealInterval,
    pub bin_count: usize,
    /// Masses summing to 1; all non-negative.
    pub masses: Vec<f64>,
}

impl DensityHistogram {
    fn from_counts(support: RealInterval, counts: Vec<u64>) -> Self {
        let total: u64 = counts.iter().sum();
        let masses = counts
            .iter()
            .map(|&c| c as f64 / total.max(1) as f64)
            .collect();
        Self { support, bin_count: counts.len(), masses }
    }

    pub fn bin_width(&self) -> f64 {
        self.support.len() / self.bin_count as f64
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.support.lo + (i as f64 + 0.5) * self.bin_width()
    }

    /// Index of the bin containing `x`, clamping boundary hits inward.
    pub fn bin_index(&self, x: f64) -> usize {
        let raw = ((x - self.support.lo) / self.bin_width()) as isize;
        raw.clamp(0, self.bin_count as isize - 1) as usize
    }

    /// L1 distance between two histograms over the same binning.
    pub fn l1_distance(&self, other: &DensityHistogram) -> f64 {
        assert_eq!(self.bin_count, other.bin_count);
        self.masses
            .iter()
            .zip(&other.masses)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Expectation of `f` over bin centers.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(i, &m)| m * f(self.bin_center(i)))
            .sum()
    }

    /// CSV rows `bin_center,mass` with full 17-digit formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center,mass\n");
        for (i, &m) in self.masses.iter().enumerate() {
            out.push_str(&fmt17(self.bin_center(i)));
            out.push(',');
            out.push_str(&fmt17(m));
            out.push('\n');
        }
        out
    }
}

/// Empirical statistics of one orbit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmpiricalStats {
    pub start: f64,
    pub n: usize,
    pub histogram: DensityHistogram,
    pub lyapunov_partial: f64,
}

/// Birkhoff Lyapunov exponent `(1/n) sum log |2 x_i|` after a burn-in.
pub fn lyapunov_1d(
    p: ScalarMapParam,
    x0: f64,
    n: usize,
    burn_in: usize,
) -> Result<f64, MeasureError> {
    let mut x = x0;
    for i in 0..burn_in {
        if x == 0.0 {
            return Err(MeasureError::CriticalHit(i));
        }
        x = scalar::eval_map(p, x);
    }
    let mut acc = 0.0f64;
    for i in 0..n {
        if x == 0.0 {
            return Err(MeasureError::CriticalHit(burn_in + i));
        }
        acc += (2.0 * x).abs().ln();
        x = scalar::eval_map(p, x);
    }
    Ok(acc / n as f64)
}

/// Orbit-histogram estimate of the invariant density over the invariant
/// core, averaged over `seeds` seeded starts.
///
/// The total sample budget `iterates` is split evenly across seeds; each
/// seed burns in before accumulating. The generator is ChaCha8 seeded from
/// `rng_seed`, so identical inputs reproduce identical histograms.
///
/// An orbit that lands exactly on a fixed point is restarted from a fresh
/// seeded draw: near the degenerate parameter, rounding maps the whole
/// width-`2^-26` critical window onto the fixed orbit, a set of zero
/// measure in exact arithmetic that would otherwise absorb a visible mass
/// fraction over long runs.
pub fn ulam_density(
    p: ScalarMapParam,
    bins: usize,
    iterates: usize,
    seeds: usize,
    rng_seed: u64,
) -> DensityHistogram {
    assert!(bins >= 1 && seeds >= 1);
    let support = scalar::invariant_core(p).expect("parameter in [-2, -1]");
    let per_seed = iterates / seeds;
    let burn = 1000usize;
    let width = support.len() / bins as f64;
    let fp = scalar::fixed_points(p).expect("fixed points exist");
    // Only repelling fixed points are rounding traps; a genuinely
    // attracting one (|2x| < 1) is where mass belongs.
    let traps: Vec<f64> = [fp.alpha, fp.beta]
        .into_iter()
        .filter(|x| (2.0 * x).abs() > 1.0)
        .collect();

    let counts: Vec<u64> = (0..seeds)
        .into_par_iter()
        .map(|s| {
            // Independent stream per seed; deterministic in (rng_seed, s).
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ (s as u64).wrapping_mul(0x9E3779B97F4A7C15));
            let mut local = vec![0u64; bins];
            let draw = |rng: &mut ChaCha8Rng| support.lo + rng.random::<f64>() * support.len();
            let mut x = draw(&mut rng);
            for _ in 0..burn {
                x = scalar::eval_map(p, x);
            }
            for _ in 0..per_seed {
                if traps.contains(&x) {
                    x = draw(&mut rng);
                }
                let idx = (((x - support.lo) / width) as isize)
                    .clamp(0, bins as isize - 1) as usize;
                local[idx] += 1;
                x = scalar::eval_map(p, x);
            }
            local
        })
        .reduce(
            || vec![0u64; bins],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    DensityHistogram::from_counts(support, counts)
}

/// Closed-form histogram of the arcsine density `1/(pi sqrt(4 - x^2))` on
/// `[-2, 2]`, the invariant density of the Chebychev parameter; each bin
/// mass is a difference of arcsines.
pub fn chebychev_reference(bins: usize) -> DensityHistogram {
    let support = RealInterval::new(-2.0, 2.0);
    let cdf = |x: f64| ((x / 2.0).clamp(-1.0, 1.0).asin() / std::f64::consts::PI) + 0.5;
    let width = 4.0 / bins as f64;
    let masses = (0..bins)
        .map(|i| {
            let lo = -2.0 + i as f64 * width;
            cdf(lo + width) - cdf(lo)
        })
        .collect();
    DensityHistogram { support, bin_count: bins, masses }
}

/// L1 distances between the growing empirical measure of one orbit and a
/// reference histogram, evaluated at the given checkpoints.
pub fn empirical_convergence(
    p: ScalarMapParam,
    x0: f64,
    checkpoints: &[usize],
    reference: &DensityHistogram,
) -> Vec<(usize, f64)> {
    let mut sorted = checkpoints.to_vec();
    sorted.sort_unstable();
    let support = reference.support;
    let bins = reference.bin_count;
    let width = support.len() / bins as f64;
    let mut counts = vec![0u64; bins];
    let mut x = x0;
    let mut out = Vec::with_capacity(sorted.len());
    let mut next = 0usize;
    let last = *sorted.last().unwrap_or(&0);
    // One sample is added per step, so the mass denominator is the step.
    for step in 0..=last {
        while next < sorted.len() && sorted[next] == step {
            let emp = DensityHistogram {
                support,
                bin_count: bins,
                masses: counts
                    .iter()
                    .map(|&c| c as f64 / (step as u64).max(1) as f64)
                    .collect(),
            };
            out.push((step, emp.l1_distance(reference)));
            next += 1;
        }
        let idx = (((x - support.lo) / width) as isize).clamp(0, bins as isize - 1) as usize;
        counts[idx] += 1;
        x = scalar::eval_map(p, x);
    }
    out
}

/// Full empirical statistics of one orbit: histogram plus the Lyapunov
/// partial average.
pub fn empirical_stats(
    p: ScalarMapParam,
    x0: f64,
    n: usize,
    bins: usize,
) -> EmpiricalStats {
    let support = scalar::invariant_core(p).expect("parameter in [-2, -1]");
    let width = support.len() / bins as f64;
    let mut counts = vec![0u64; bins];
    let mut x = x0;
    let mut acc = 0.0f64;
    for _ in 0..n {
        let idx = (((x - support.lo) / width) as isize).clamp(0, bins as isize - 1) as usize;
        counts[idx] += 1;
        acc += (2.0 * x).abs().ln();
        x = scalar::eval_map(p, x);
    }
    EmpiricalStats {
        start: x0,
        n,
        histogram: DensityHistogram::from_counts(support, counts),
        lyapunov_partial: acc / n.max(1) as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cheb() -> ScalarMapParam {
        ScalarMapParam::new(-2.0).unwrap()
    }

    #[test]
    fn lyapunov_log2_at_chebychev() {
        // The conjugacy with the doubling map forces exponent log 2.
        let l = lyapunov_1d(cheb(), 0.437161, 1_000_000, 100).unwrap();
        assert_abs_diff_eq!(l, 2f64.ln(), epsilon = 5e-3);
    }

    #[test]
    fn lyapunov_constant_orbit_at_beta() {
        let p = cheb();
        let beta = scalar::fixed_points(p).unwrap().beta;
        let l = lyapunov_1d(p, beta, 1000, 0).unwrap();
        assert_abs_diff_eq!(l, (2.0 * beta).ln(), epsilon = 1e-12);
    }

    #[test]
    fn lyapunov_negative_on_attracting_cycle() {
        // a = -1: orbits fall onto the superattracting 2-cycle so fast that
        // binary64 lands exactly on the critical point within a few dozen
        // steps; the last rate before the flagged hit is strongly negative.
        let p = ScalarMapParam::new(-1.0).unwrap();
        let mut last_ok = None;
        for n in 1..=60 {
            match lyapunov_1d(p, 0.3123, n, 0) {
                Ok(rate) => last_ok = Some((n, rate)),
                Err(MeasureError::CriticalHit(_)) => break,
            }
        }
        let (n, rate) = last_ok.expect("some prefix before the exact hit");
        assert!(rate < -1.0, "rate {rate} after {n} steps not strongly negative");
        assert!(matches!(
            lyapunov_1d(p, 0.3123, 10_000, 0),
            Err(MeasureError::CriticalHit(_))
        ));
    }

    #[test]
    fn lyapunov_burn_in_insensitive() {
        let a = lyapunov_1d(cheb(), 0.437161, 500_000, 100).unwrap();
        let b = lyapunov_1d(cheb(), 0.437161, 500_000, 200).unwrap();
        assert!((a - b).abs() < 1e-3);
    }

    #[test]
    fn ulam_density_close_to_arcsine_at_chebychev() {
        let hist = ulam_density(cheb(), 500, 2_000_000, 8, 12345);
        let reference = chebychev_reference(500);
        let d = hist.l1_distance(&reference);
        assert!(d <= 0.02, "L1 distance {d}");
        assert_abs_diff_eq!(hist.masses.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(hist.masses.iter().all(|&m| m >= 0.0));
    }

    #[test]
    fn ulam_density_reproducible() {
        let h1 = ulam_density(cheb(), 100, 100_000, 4, 7);
        let h2 = ulam_density(cheb(), 100, 100_000, 4, 7);
        assert_eq!(h1, h2);
    }

    #[test]
    fn attracting_cycle_concentrates_on_two_bins() {
        // a = -1: the invariant core is [-1, 0] and the cycle {0, -1} sits
        // at its endpoints; all mass lands in the first and last bin.
        let p = ScalarMapParam::new(-1.0).unwrap();
        let hist = ulam_density(p, 64, 100_000, 4, 3);
        let heavy: Vec<usize> = hist
            .masses
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 1e-3)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(heavy, vec![0, 63]);
        assert_abs_diff_eq!(hist.masses[0] + hist.masses[63], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn empirical_distances_decrease_for_generic_start() {
        let reference = chebychev_reference(200);
        let d = empirical_convergence(cheb(), 0.437161, &[1_000, 100_000], &reference);
        assert_eq!(d.len(), 2);
        assert!(d[0].1 >= 0.0 && d[1].1 >= 0.0);
        assert!(
            d[1].1 < d[0].1,
            "distance did not shrink: {} -> {}",
            d[0].1,
            d[1].1
        );
    }

    #[test]
    fn exceptional_orbit_does_not_converge() {
        // 1 -> -1 -> -1 -> ...: a preimage of the fixed point, exact in
        // binary64, so the empirical measure concentrates on one bin and
        // stays far from the acim.
        let reference = chebychev_reference(200);
        let d = empirical_convergence(cheb(), 1.0, &[1_000, 10_000], &reference);
        assert!(d[0].1 > 0.5, "distance {} unexpectedly small", d[0].1);
        assert!(d[1].1 > 0.5, "distance {} unexpectedly small", d[1].1);
    }

    #[test]
    fn exponent_matches_density_integral_at_chebychev() {
        // Consistency between the two estimators: integral of log|2x|
        // against the estimated density vs the Birkhoff exponent.
        let hist = ulam_density(cheb(), 1000, 2_000_000, 8, 99);
        let from_density = hist.expect(|x| (2.0 * x).abs().ln());
        let from_orbit = lyapunov_1d(cheb(), 0.437161, 1_000_000, 100).unwrap();
        let rel = (from_density - from_orbit).abs() / from_orbit.abs();
        assert!(rel <= 0.02, "relative gap {rel}");
    }

    #[test]
    fn empirical_stats_counts_and_rate() {
        let p = cheb();
        let stats = empirical_stats(p, 0.437161, 50_000, 128);
        assert_eq!(stats.n, 50_000);
        let total: u64 = (stats.histogram.masses.iter().sum::<f64>() * 50_000.0).round() as u64;
        assert_eq!(total, 50_000);
        assert_abs_diff_eq!(stats.lyapunov_partial, 2f64.ln(), epsilon = 0.05);
    }

    #[test]
    fn csv_round_trips_masses() {
        let hist = ulam_density(cheb(), 10, 10_000, 2, 1);
        let csv = hist.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("bin_center,mass"));
        for (i, line) in lines.enumerate() {
            let (c, m) = line.split_once(',').unwrap();
            assert_eq!(c.parse::<f64>().unwrap(), hist.bin_center(i));
            assert_eq!(m.parse::<f64>().unwrap(), hist.masses[i]);
        }
    }
}
