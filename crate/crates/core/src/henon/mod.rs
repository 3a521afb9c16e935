//! The Henon family and its rank-one generalization.
//!
//! Two base forms are supported: the classical diffeomorphism
//! `(x, y) -> (x^2 + a + y, -bx)` with constant Jacobian `b`, and the
//! rank-one endomorphism `(x, y) -> (x^2 + a, 0)` to which a small smooth
//! perturbation field `B(x, y, a)` may be added. The rank-one form is the
//! natural setting for the box combinatorics in [`boxes`], where stable
//! arcs are genuinely close to vertical; the classical form is used for
//! attractor, exponent and trapping diagnostics.

pub mod boxes;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boxes::{PlaneBox, PlanePiece, SimplePieces, VerticalArc};

#[derive(Debug, Error)]
pub enum PlaneError {
    #[error("no real fixed points (discriminant {0} < 0)")]
    NoFixedPoints(f64),
    #[error("orbit escaped the configured bound at step {0}")]
    Escaped(usize),
    #[error("fixed point is not a saddle (|unstable| = {0}, |stable| = {1})")]
    NotSaddle(f64, f64),
}

/// A smooth perturbation field `B(x, y, a)` with a declared uniform C2 size.
pub trait PerturbationField: Send + Sync {
    fn eval(&self, x: f64, y: f64, a: f64) -> (f64, f64);

    /// Uniform bound on the field and its first two derivatives.
    fn c2_size(&self) -> f64;

    /// Differential of the field; central finite differences by default.
    fn jacobian(&self, x: f64, y: f64, a: f64) -> [[f64; 2]; 2] {
        let h = 1e-6;
        let (fxp, fyp) = self.eval(x + h, y, a);
        let (fxm, fym) = self.eval(x - h, y, a);
        let (gxp, gyp) = self.eval(x, y + h, a);
        let (gxm, gym) = self.eval(x, y - h, a);
        [
            [(fxp - fxm) / (2.0 * h), (gxp - gxm) / (2.0 * h)],
            [(fyp - fym) / (2.0 * h), (gyp - gym) / (2.0 * h)],
        ]
    }
}

/// Example bump field: `eps * (sin x cos y, cos x sin y)`, C2 size `~eps`.
pub struct BumpField {
    pub eps: f64,
}

impl PerturbationField for BumpField {
    fn eval(&self, x: f64, y: f64, _a: f64) -> (f64, f64) {
        (self.eps * x.sin() * y.cos(), self.eps * x.cos() * y.sin())
    }

    fn c2_size(&self) -> f64 {
        self.eps
    }

    fn jacobian(&self, x: f64, y: f64, _a: f64) -> [[f64; 2]; 2] {
        [
            [self.eps * x.cos() * y.cos(), -self.eps * x.sin() * y.sin()],
            [-self.eps * x.sin() * y.sin(), self.eps * x.cos() * y.cos()],
        ]
    }
}

/// Base form of the plane map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlaneForm {
    /// `(x^2 + a + y, -bx)` plus the optional field.
    Henon,
    /// `(x^2 + a, 0)` plus the optional field.
    RankOne,
}

/// Parameters of a plane map.
#[derive(Clone)]
pub struct PlaneParams {
    pub a: f64,
    pub b: f64,
    pub form: PlaneForm,
    pub perturbation: Option<Arc<dyn PerturbationField>>,
    /// Overrides the box half-height `theta`; mandatory fallback for the
    /// fully degenerate case where `1/|log eps|` is undefined.
    pub theta_override: Option<f64>,
}

impl fmt::Debug for PlaneParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlaneParams")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("form", &self.form)
            .field("perturbation", &self.perturbation.as_ref().map(|p| p.c2_size()))
            .field("theta_override", &self.theta_override)
            .finish()
    }
}

impl PlaneParams {
    pub fn henon(a: f64, b: f64) -> Self {
        assert!(b.abs() < 1.0, "dissipative mode needs |b| < 1");
        Self { a, b, form: PlaneForm::Henon, perturbation: None, theta_override: None }
    }

    pub fn rank_one(a: f64) -> Self {
        Self { a, b: 0.0, form: PlaneForm::RankOne, perturbation: None, theta_override: None }
    }

    pub fn with_perturbation(mut self, field: Arc<dyn PerturbationField>) -> Self {
        self.perturbation = Some(field);
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta_override = Some(theta);
        self
    }

    /// Perturbation scale: `|b|` for the Henon form joined with the C2 size
    /// of the field.
    pub fn perturbation_size(&self) -> f64 {
        let field = self.perturbation.as_ref().map_or(0.0, |f| f.c2_size());
        match self.form {
            PlaneForm::Henon => self.b.abs().max(field),
            PlaneForm::RankOne => field,
        }
    }

    /// Box half-height.
    ///
    /// For the rank-one family this is `theta = 1/|log eps|` with `eps` the
    /// C2 size of the field. The classical form contracts the vertical
    /// coordinate to `-bx` in one step, so its boxes track the invariant
    /// strip `|y| <= 2|b|` instead (the `1/|log b|` scale belongs to the
    /// field formulation, where the vertical dependence is O(b)-small).
    pub fn theta(&self) -> f64 {
        if let Some(t) = self.theta_override {
            return t;
        }
        let eps = self.perturbation_size();
        if eps == 0.0 {
            return 0.05;
        }
        let log_scale = 1.0 / eps.ln().abs();
        match self.form {
            PlaneForm::RankOne => log_scale,
            PlaneForm::Henon if self.b != 0.0 => log_scale.min(2.0 * self.b.abs()),
            PlaneForm::Henon => log_scale,
        }
    }

    /// True when the dynamics collapses to the 1-D quadratic family on the
    /// horizontal axis.
    pub fn is_degenerate(&self) -> bool {
        self.b == 0.0 && self.perturbation.is_none()
    }
}

/// One step of the plane map.
pub fn henon_step(params: &PlaneParams, x: f64, y: f64) -> (f64, f64) {
    let (mut nx, mut ny) = match params.form {
        PlaneForm::Henon => (x * x + params.a + y, -params.b * x),
        PlaneForm::RankOne => (x * x + params.a, 0.0),
    };
    if let Some(field) = &params.perturbation {
        let (bx, by) = field.eval(x, y, params.a);
        nx += bx;
        ny += by;
    }
    (nx, ny)
}

/// Differential of the plane map at `(x, y)` and its determinant.
pub fn jacobian(params: &PlaneParams, x: f64, y: f64) -> ([[f64; 2]; 2], f64) {
    let mut j = match params.form {
        PlaneForm::Henon => [[2.0 * x, 1.0], [-params.b, 0.0]],
        PlaneForm::RankOne => [[2.0 * x, 0.0], [0.0, 0.0]],
    };
    if let Some(field) = &params.perturbation {
        let bj = field.jacobian(x, y, params.a);
        // PerturbationField::jacobian returns d(B1,B2)/dx in row 0 and
        // d(B1,B2)/dy in row 1; fold into df_i/dx_j layout.
        j[0][0] += bj[0][0];
        j[0][1] += bj[1][0];
        j[1][0] += bj[0][1];
        j[1][1] += bj[1][1];
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    (j, det)
}

/// A hyperbolic fixed point with its eigen-data.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PlaneFixedPoint {
    pub x: f64,
    pub y: f64,
    pub unstable_value: f64,
    pub stable_value: f64,
    pub unstable_vector: (f64, f64),
    pub stable_vector: (f64, f64),
}

/// Both fixed points of the unperturbed map, labelled like the
/// one-dimensional pair: the first has negative unstable eigenvalue
/// (alpha-like), the second positive (beta-like).
pub fn fixed_points_plane(
    params: &PlaneParams,
) -> Result<(PlaneFixedPoint, PlaneFixedPoint), PlaneError> {
    assert!(params.perturbation.is_none(), "closed-form fixed points need B = 0");
    let b_eff = match params.form {
        PlaneForm::Henon => params.b,
        PlaneForm::RankOne => 0.0,
    };
    // x = x^2 + a + y with y = -b x gives x^2 - (1+b) x + a = 0.
    let disc = (1.0 + b_eff) * (1.0 + b_eff) - 4.0 * params.a;
    if disc < 0.0 {
        return Err(PlaneError::NoFixedPoints(disc));
    }
    let s = disc.sqrt();
    let mut points = Vec::with_capacity(2);
    for x in [(1.0 + b_eff - s) * 0.5, (1.0 + b_eff + s) * 0.5] {
        let y = -b_eff * x;
        let (j, det) = jacobian(params, x, y);
        let tr = j[0][0] + j[1][1];
        let eig_disc = tr * tr - 4.0 * det;
        if eig_disc < 0.0 {
            return Err(PlaneError::NoFixedPoints(eig_disc));
        }
        let es = eig_disc.sqrt();
        let (l1, l2) = ((tr + es) * 0.5, (tr - es) * 0.5);
        let (lu, ls) = if l1.abs() >= l2.abs() { (l1, l2) } else { (l2, l1) };
        if lu.abs() <= 1.0 || ls.abs() >= 1.0 {
            return Err(PlaneError::NotSaddle(lu.abs(), ls.abs()));
        }
        let evec = |l: f64| -> (f64, f64) {
            // (J - l)v = 0; rows are [2x - l, 1] and [-b, -l].
            let v = if j[0][1].abs() > 1e-14 {
                (1.0, l - j[0][0])
            } else {
                (l - j[1][1], j[1][0])
            };
            let n = (v.0 * v.0 + v.1 * v.1).sqrt();
            if n == 0.0 {
                (0.0, 1.0)
            } else {
                (v.0 / n, v.1 / n)
            }
        };
        points.push(PlaneFixedPoint {
            x,
            y,
            unstable_value: lu,
            stable_value: ls,
            unstable_vector: evec(lu),
            stable_vector: evec(ls),
        });
    }
    let (p0, p1) = (points[0], points[1]);
    // Label by the sign of the unstable eigenvalue.
    if p0.unstable_value < 0.0 {
        Ok((p0, p1))
    } else {
        Ok((p1, p0))
    }
}

/// Outcome of a trapping-region check.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrappingResult {
    pub pass: bool,
    /// Smallest signed distance of an image point to the region boundary
    /// (positive = inside).
    pub margin: f64,
    /// Largest excursion outside the region (0 when trapped).
    pub max_penetration: f64,
    pub samples: usize,
}

/// Checks `f(region) inside region` on a `grid x grid` sample of the region.
pub fn trapping_check(
    params: &PlaneParams,
    region: &[(f64, f64)],
    grid: usize,
) -> TrappingResult {
    assert!(region.len() >= 3, "region must be a polygon");
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in region {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let mut margin = f64::INFINITY;
    let mut samples = 0usize;
    for i in 0..grid {
        for jj in 0..grid {
            let x = xmin + (xmax - xmin) * (i as f64 + 0.5) / grid as f64;
            let y = ymin + (ymax - ymin) * (jj as f64 + 0.5) / grid as f64;
            if !point_in_polygon(region, x, y) {
                continue;
            }
            samples += 1;
            let (fx, fy) = henon_step(params, x, y);
            margin = margin.min(signed_distance(region, fx, fy));
        }
    }
    TrappingResult {
        pass: samples > 0 && margin > 0.0,
        margin,
        max_penetration: (-margin).max(0.0),
        samples,
    }
}

/// Henon's classical trapping quadrilateral for `a = -1.4, b = -0.3`,
/// carried into the `(x^2 + a + y, -bx)` parametrization by the scaling
/// `(x, y) = (-1.4 X, -1.4 Y)` of the original coordinates.
pub fn classical_trapping_region() -> Vec<(f64, f64)> {
    [(-1.33, 0.42), (1.32, 0.133), (1.245, -0.14), (-1.06, -0.5)]
        .iter()
        .map(|&(x, y)| (-1.4 * x, -1.4 * y))
        .collect()
}

fn point_in_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if ((yi > y) != (yj > y)) && (x < (xj - xi) * (y - yi) / (yj - yi) + xi) {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn distance_to_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

fn signed_distance(poly: &[(f64, f64)], x: f64, y: f64) -> f64 {
    let n = poly.len();
    let mut d = f64::INFINITY;
    for i in 0..n {
        let (ax, ay) = poly[i];
        let (bx, by) = poly[(i + 1) % n];
        d = d.min(distance_to_segment(x, y, ax, ay, bx, by));
    }
    if point_in_polygon(poly, x, y) {
        d
    } else {
        -d
    }
}

/// Lyapunov exponents `(l1, l2)` with `l1 >= l2` via the orthogonalized
/// tangent cocycle. At `b = 0` the second exponent is `-inf`.
pub fn lyapunov_plane(
    params: &PlaneParams,
    x0: f64,
    y0: f64,
    n: usize,
    burn_in: usize,
    escape_radius: f64,
) -> Result<(f64, f64), PlaneError> {
    let (mut x, mut y) = (x0, y0);
    for i in 0..burn_in {
        (x, y) = henon_step(params, x, y);
        if x.abs() > escape_radius || y.abs() > escape_radius {
            return Err(PlaneError::Escaped(i));
        }
    }
    let (mut v1, mut v2) = ((1.0f64, 0.0f64), (0.0f64, 1.0f64));
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    for i in 0..n {
        let (j, _) = jacobian(params, x, y);
        let u1 = (j[0][0] * v1.0 + j[0][1] * v1.1, j[1][0] * v1.0 + j[1][1] * v1.1);
        let u2 = (j[0][0] * v2.0 + j[0][1] * v2.1, j[1][0] * v2.0 + j[1][1] * v2.1);
        let r1 = (u1.0 * u1.0 + u1.1 * u1.1).sqrt();
        s1 += r1.ln();
        if r1 > 0.0 {
            v1 = (u1.0 / r1, u1.1 / r1);
        }
        let dot = u2.0 * v1.0 + u2.1 * v1.1;
        let w2 = (u2.0 - dot * v1.0, u2.1 - dot * v1.1);
        let r2 = (w2.0 * w2.0 + w2.1 * w2.1).sqrt();
        s2 += r2.ln();
        if r2 > 0.0 {
            v2 = (w2.0 / r2, w2.1 / r2);
        } else {
            v2 = (-v1.1, v1.0);
        }
        (x, y) = henon_step(params, x, y);
        if x.abs() > escape_radius || y.abs() > escape_radius {
            return Err(PlaneError::Escaped(burn_in + i));
        }
    }
    let (l1, l2) = (s1 / n as f64, s2 / n as f64);
    Ok(if l1 >= l2 { (l1, l2) } else { (l2, l1) })
}

/// Orbit cloud plus an unstable-manifold sweep from the alpha-like saddle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttractorSample {
    pub orbit: Vec<(f64, f64)>,
    pub manifold: Vec<(f64, f64)>,
}

/// Samples the attractor: `n` post-burn-in orbit points started from the
/// region's centroid, and a forward sweep of a small unstable segment of
/// the alpha fixed point for comparison.
pub fn attractor_sample(
    params: &PlaneParams,
    region: &[(f64, f64)],
    n: usize,
    burn_in: usize,
) -> Result<AttractorSample, PlaneError> {
    let escape = 1e3;
    let cx = region.iter().map(|p| p.0).sum::<f64>() / region.len() as f64;
    let cy = region.iter().map(|p| p.1).sum::<f64>() / region.len() as f64;
    let (mut x, mut y) = (cx, cy);
    for i in 0..burn_in {
        (x, y) = henon_step(params, x, y);
        if x.abs() > escape || y.abs() > escape {
            return Err(PlaneError::Escaped(i));
        }
    }
    let mut orbit = Vec::with_capacity(n);
    for i in 0..n {
        orbit.push((x, y));
        (x, y) = henon_step(params, x, y);
        if x.abs() > escape || y.abs() > escape {
            return Err(PlaneError::Escaped(burn_in + i));
        }
    }

    // Unstable-manifold sweep: iterate a short segment along the unstable
    // eigenvector of the alpha point, dropping escapees.
    let mut manifold = Vec::new();
    if let Ok((alpha, _)) = fixed_points_plane(&PlaneParams {
        perturbation: None,
        ..params.clone()
    }) {
        let seg = 512usize;
        let eps = 1e-4;
        let sweeps = 24usize;
        let mut pts: Vec<(f64, f64)> = (0..seg)
            .map(|i| {
                let t = -1.0 + 2.0 * (i as f64) / (seg - 1) as f64;
                (
                    alpha.x + t * eps * alpha.unstable_vector.0,
                    alpha.y + t * eps * alpha.unstable_vector.1,
                )
            })
            .collect();
        for _ in 0..sweeps {
            for p in &mut pts {
                *p = henon_step(params, p.0, p.1);
            }
            pts.retain(|p| p.0.abs() < escape && p.1.abs() < escape);
            manifold.extend(pts.iter().copied());
            if manifold.len() > n {
                break;
            }
        }
        manifold.truncate(n);
    }
    Ok(AttractorSample { orbit, manifold })
}

/// Box-counting slope of a point cloud over dyadic grids `2^k` for
/// `k in exps`, fitted by least squares on `log N` against `k log 2`.
pub fn box_counting_slope(points: &[(f64, f64)], exps: std::ops::RangeInclusive<u32>) -> f64 {
    assert!(!points.is_empty());
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let w = (xmax - xmin).max(ymax - ymin).max(f64::MIN_POSITIVE);
    let mut pts = Vec::new();
    for k in exps {
        let cells = 1u64 << k;
        let mut occupied = std::collections::HashSet::new();
        for &(x, y) in points {
            let i = (((x - xmin) / w * cells as f64) as u64).min(cells - 1);
            let j = (((y - ymin) / w * cells as f64) as u64).min(cells - 1);
            occupied.insert((i, j));
        }
        pts.push((k as f64 * 2f64.ln(), (occupied.len() as f64).ln()));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
