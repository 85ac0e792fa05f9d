//! Stroke capture to Bézier curve parameters: projection onto the view
//! plane, arc-length resampling, piecewise cubic least-squares fitting and
//! constraint cleanup.

use serde::{Deserialize, Serialize};

use crate::design::{set_parameter, Configuration, CurvePlane, Design, DesignError, EditMode, EditOutcome, ParamKind, ParamValue};
use crate::geometry::{BezierPath, CubicBezier, R_MIN};
use crate::math::{point_segment_distance_2d, Vec2, Vec3, UP};

/// Points after arc-length resampling.
pub const RESAMPLE_COUNT: usize = 64;
/// Newton-Raphson reparameterization passes per segment fit.
pub const MAX_REPARAM_ITERATIONS: usize = 8;
/// Dense samples used when measuring deviation.
pub const DEVIATION_SAMPLES: usize = 256;

const COINCIDENT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub points: Vec<Vec3>,
    #[serde(default)]
    pub timestamps: Vec<f64>,
    pub view_dir: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub path: BezierPath,
    pub max_deviation: f64,
    pub modified_by_constraints: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SketchError {
    #[error("stroke points coincide; nothing to fit")]
    DegenerateStroke,
    #[error("need at least 4 points to fit, got {0}")]
    InsufficientPoints(usize),
    #[error("stroke contains non-finite values")]
    NonFinite,
    #[error("view direction has zero length")]
    BadViewDirection,
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// Drops consecutive duplicates.
fn dedup(points: &[Vec3]) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = Vec::with_capacity(points.len());
    for p in points {
        if out.last() != Some(p) {
            out.push(*p);
        }
    }
    out
}

/// 3-tap moving average with fixed endpoints.
fn smooth(points: &[Vec3]) -> Vec<Vec3> {
    let n = points.len();
    (0..n)
        .map(|i| if i == 0 || i + 1 == n { points[i] } else { (points[i - 1] + points[i] + points[i + 1]) / 3.0 })
        .collect()
}

/// In-plane basis `(u, v)` for a view direction; `v` follows world up.
fn plane_basis(view_dir: &Vec3) -> Option<(Vec3, Vec3, Vec3)> {
    let n = view_dir.try_normalize(1e-12)?;
    let v = (UP - n * UP.dot(&n))
        .try_normalize(1e-9)
        .unwrap_or_else(|| {
            let z = Vec3::z();
            (-z - n * (-z).dot(&n)).normalize()
        });
    Some((n.cross(&v), v, n))
}

/// Projects onto the plane through `origin` with normal `view_dir`, in
/// plane coordinates relative to `origin`. Exact isometry for points
/// already in that plane.
pub fn project_points(points: &[Vec3], view_dir: &Vec3, origin: &Vec3) -> Option<Vec<Vec2>> {
    let (u, v, _) = plane_basis(view_dir)?;
    Some(points.iter().map(|p| {
        let d = p - origin;
        Vec2::new(d.dot(&u), d.dot(&v))
    }).collect())
}

/// `count` points evenly spaced by arc length along the polyline.
pub fn resample(points: &[Vec2], count: usize) -> Vec<Vec2> {
    let count = count.max(2);
    let mut cum = vec![0.0];
    for w in points.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for k in 0..count {
        if k + 1 == count {
            out.push(*points.last().unwrap());
            break;
        }
        let s = total * k as f64 / (count - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { ((s - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(points[seg] + (points[seg + 1] - points[seg]) * t);
    }
    out
}

fn check_stroke(s: &Stroke) -> Result<Vec<Vec3>, SketchError> {
    if s.points.iter().any(|p| !p.iter().all(|c| c.is_finite())) || !s.view_dir.iter().all(|c| c.is_finite()) {
        return Err(SketchError::NonFinite);
    }
    let pts = dedup(&s.points);
    let Some(first) = pts.first() else {
        return Err(SketchError::DegenerateStroke);
    };
    if pts.iter().all(|p| (p - first).norm() <= COINCIDENT) {
        return Err(SketchError::DegenerateStroke);
    }
    Ok(pts)
}

fn project_with(s: &Stroke, origin: Option<&Vec3>) -> Result<Vec<Vec2>, SketchError> {
    let pts = smooth(&check_stroke(s)?);
    let centroid = pts.iter().sum::<Vec3>() / pts.len() as f64;
    let (_, _, n) = plane_basis(&s.view_dir).ok_or(SketchError::BadViewDirection)?;
    // The origin is moved into the stroke plane.
    let origin = origin.map_or(centroid, |o| o - n * (o - centroid).dot(&n));
    let flat = project_points(&pts, &s.view_dir, &origin).ok_or(SketchError::BadViewDirection)?;
    Ok(resample(&flat, RESAMPLE_COUNT))
}

/// Projects a stroke to [`RESAMPLE_COUNT`] plane points around its centroid.
pub fn project_stroke(s: &Stroke) -> Result<Vec<Vec2>, SketchError> {
    project_with(s, None)
}

/// Like [`project_stroke`], with coordinates measured from `origin`
/// (e.g. a lathe axis point) instead of the centroid.
pub fn project_stroke_about(s: &Stroke, origin: &Vec3) -> Result<Vec<Vec2>, SketchError> {
    project_with(s, Some(origin))
}

/// Default tolerance: 1% of the bounding-box diagonal.
pub fn default_tolerance(points: &[Vec2]) -> f64 {
    let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    0.01 * (hi - lo).norm()
}

fn chord_params(pts: &[Vec2]) -> Vec<f64> {
    let mut u = vec![0.0];
    for w in pts.windows(2) {
        u.push(u.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *u.last().unwrap();
    u.iter().map(|x| x / total).collect()
}

fn bernstein(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t]
}

/// Least-squares cubic with fixed endpoints and tangent directions.
fn generate(pts: &[Vec2], u: &[f64], t1: Vec2, t2: Vec2) -> CubicBezier {
    let (p0, p3) = (pts[0], pts[pts.len() - 1]);
    let mut c = [[0.0; 2]; 2];
    let mut x = [0.0; 2];
    for (p, &t) in pts.iter().zip(u) {
        let b = bernstein(t);
        let (a1, a2) = (t1 * b[1], t2 * b[2]);
        c[0][0] += a1.dot(&a1);
        c[0][1] += a1.dot(&a2);
        c[1][1] += a2.dot(&a2);
        let tmp = p - (p0 * (b[0] + b[1]) + p3 * (b[2] + b[3]));
        x[0] += a1.dot(&tmp);
        x[1] += a2.dot(&tmp);
    }
    c[1][0] = c[0][1];
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let (mut al, mut ar) = if det.abs() > 1e-18 {
        ((x[0] * c[1][1] - x[1] * c[0][1]) / det, (c[0][0] * x[1] - c[1][0] * x[0]) / det)
    } else {
        (0.0, 0.0)
    };
    let seg = (p3 - p0).norm();
    let eps = 1e-6 * seg;
    if al < eps || ar < eps || !al.is_finite() || !ar.is_finite() {
        al = seg / 3.0;
        ar = seg / 3.0;
    }
    CubicBezier::new(p0, p0 + t1 * al, p3 + t2 * ar, p3)
}

fn newton_step(b: &CubicBezier, p: &Vec2, t: f64) -> f64 {
    let d = b.point_at(t) - p;
    let d1 = b.derivative_at(t);
    let d2 = b.second_derivative_at(t);
    let num = d.dot(&d1);
    let den = d1.dot(&d1) + d.dot(&d2);
    if den.abs() < 1e-18 {
        return t;
    }
    (t - num / den).clamp(0.0, 1.0)
}

/// Max parametric error and its index.
fn param_error(b: &CubicBezier, pts: &[Vec2], u: &[f64]) -> (f64, usize) {
    let mut best = (0.0, 0);
    for (i, (p, &t)) in pts.iter().zip(u).enumerate() {
        let e = (b.point_at(t) - p).norm();
        if e > best.0 {
            best = (e, i);
        }
    }
    best
}

#[derive(Debug, Clone)]
struct Piece {
    start: usize,
    end: usize,
    t1: Vec2,
    t2: Vec2,
    curve: CubicBezier,
    error: f64,
    split_at: usize,
}

fn fit_piece(pts: &[Vec2], start: usize, end: usize, t1: Vec2, t2: Vec2) -> Piece {
    let span = &pts[start..=end];
    let mut u = chord_params(span);
    let mut curve = generate(span, &u, t1, t2);
    let (mut error, mut idx) = param_error(&curve, span, &u);
    for _ in 0..MAX_REPARAM_ITERATIONS {
        if error == 0.0 {
            break;
        }
        let nu: Vec<f64> = span.iter().zip(&u).map(|(p, &t)| newton_step(&curve, p, t)).collect();
        let c = generate(span, &nu, t1, t2);
        let (e, i) = param_error(&c, span, &nu);
        if e < error {
            curve = c;
            error = e;
            idx = i;
            u = nu;
        } else {
            break;
        }
    }
    let split_at = if idx > 0 && idx < span.len() - 1 { start + idx } else { start + span.len() / 2 };
    Piece { start, end, t1, t2, curve, error, split_at }
}

fn direction(a: Vec2, b: Vec2) -> Vec2 {
    (b - a).try_normalize(1e-15).unwrap_or_else(Vec2::zeros)
}

/// Tangent at `pts[0]` pointing into the curve, from a one-sided
/// second-order difference of the first distinct points.
fn end_tangent(pts: &[Vec2]) -> Vec2 {
    let p0 = pts[0];
    let mut rest = pts.iter().copied().filter(|p| *p != p0);
    let Some(p1) = rest.next() else {
        return Vec2::zeros();
    };
    let second = rest.find(|p| *p != p1);
    match second {
        Some(p2) if (p2 - p1).norm() < 4.0 * (p1 - p0).norm() && (p1 - p0).norm() < 4.0 * (p2 - p1).norm() => {
            let d = (p1 - p0) * 4.0 - (p2 - p0);
            if d.dot(&(p1 - p0)) > 0.0 {
                direction(Vec2::zeros(), d)
            } else {
                direction(p0, p1)
            }
        }
        _ => direction(p0, p1),
    }
}

/// Two-sided deviation between the input polyline and the fitted path.
pub fn measure_deviation(path: &BezierPath, pts: &[Vec2]) -> f64 {
    let poly_dist = |q: &Vec2, poly: &[Vec2]| {
        if poly.len() == 1 {
            return (q - poly[0]).norm();
        }
        poly.windows(2).map(|w| point_segment_distance_2d(q, &w[0], &w[1])).fold(f64::INFINITY, f64::min)
    };
    let dense = path.sample(DEVIATION_SAMPLES);
    let fine = path.sample(DEVIATION_SAMPLES * path.len());
    let a = dense.iter().map(|q| poly_dist(q, pts)).fold(0.0, f64::max);
    let b = pts.iter().map(|p| poly_dist(p, &fine)).fold(0.0, f64::max);
    a.max(b)
}

fn assemble(pieces: &[Piece]) -> BezierPath {
    BezierPath::new(pieces.iter().map(|p| p.curve).collect()).expect("pieces share endpoints")
}

fn score(pieces: &[Piece], pts: &[Vec2]) -> (BezierPath, f64) {
    let path = assemble(pieces);
    let param = pieces.iter().map(|p| p.error).fold(0.0, f64::max);
    let dev = param.max(measure_deviation(&path, pts));
    (path, dev)
}

/// Piecewise cubic fit with at most `budget` segments. Splits greedily at
/// the worst point and keeps the best result seen.
pub fn fit_bezier_path(pts: &[Vec2], budget: usize, tol: f64) -> Result<FitResult, SketchError> {
    if pts.len() < 4 {
        return Err(SketchError::InsufficientPoints(pts.len()));
    }
    if pts.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(SketchError::NonFinite);
    }
    let n = pts.len();
    if pts.iter().all(|p| (p - pts[0]).norm() == 0.0) {
        return Err(SketchError::DegenerateStroke);
    }
    let t1 = end_tangent(pts);
    let rev: Vec<Vec2> = pts.iter().rev().copied().collect();
    let t2 = end_tangent(&rev);

    let mut pieces = vec![fit_piece(pts, 0, n - 1, t1, t2)];
    let (mut best_path, mut best_dev) = score(&pieces, pts);
    while pieces.len() < budget.max(1) && best_dev > tol {
        let Some((worst, _)) = pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.end - p.start >= 2)
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
        else {
            break;
        };
        let p = pieces[worst].clone();
        let k = p.split_at;
        let mut center = direction(pts[k + 1], pts[k - 1]);
        if center == Vec2::zeros() {
            center = direction(pts[k], pts[k - 1]);
        }
        let left = fit_piece(pts, p.start, k, p.t1, center);
        let right = fit_piece(pts, k, p.end, -center, p.t2);
        pieces.splice(worst..=worst, [left, right]);
        let (path, dev) = score(&pieces, pts);
        if dev < best_dev {
            best_path = path;
            best_dev = dev;
        }
    }
    Ok(FitResult { path: best_path, max_deviation: best_dev, modified_by_constraints: false })
}

/// Outcome of [`apply_curve`]: the edit result and the normalized fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppliedCurve {
    pub outcome: EditOutcome,
    pub fit: FitResult,
}

/// Normalizes a fitted path into the parameter's profile frame and commits it.
pub fn apply_curve(design: &Design, config: &Configuration, name: &str, fit: &FitResult) -> Result<AppliedCurve, SketchError> {
    let def = design.param(name).ok_or_else(|| DesignError::UnknownParameter(name.to_string()))?;
    let ParamKind::Curve { plane, .. } = def.kind else {
        return Err(DesignError::KindMismatch { parameter: name.to_string(), expected: def.kind.name() }.into());
    };
    let mut path = fit.path.clone();
    if path.end().y < path.start().y {
        path = path.reversed();
    }
    let (lo, hi) = path.control_bounds();
    let span = hi.y - lo.y;
    let height = design.generator.number("height", config).filter(|h| *h > 0.0);
    let scale = match height {
        Some(h) if span > 0.0 => h / span,
        _ => 1.0,
    };
    let pts = path.control_points();
    let mean_x = pts.iter().map(|p| p.x).sum::<f64>() / pts.len() as f64;
    let mirror = if plane == CurvePlane::LatheProfile && mean_x < 0.0 { -1.0 } else { 1.0 };
    let mut modified = fit.modified_by_constraints;
    path = path.map(|p| Vec2::new(mirror * p.x * scale, (p.y - lo.y) * scale));
    if plane == CurvePlane::LatheProfile && path.control_points().iter().any(|p| p.x < R_MIN) {
        modified = true;
        path = path.map(|p| Vec2::new(p.x.max(R_MIN), p.y));
    }
    let outcome = set_parameter(design, config, name, ParamValue::Curve(path.clone()), EditMode::Commit)?;
    let max_deviation = fit.max_deviation * scale;
    Ok(AppliedCurve { outcome, fit: FitResult { path, max_deviation, modified_by_constraints: modified } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stroke(points: Vec<Vec3>) -> Stroke {
        Stroke { points, timestamps: vec![], view_dir: Vec3::new(0.0, 0.0, -1.0) }
    }

    #[test]
    fn two_point_stroke_gives_collinear_samples() {
        let s = stroke(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.3, 0.4, 0.0)]);
        let pts = project_stroke(&s).unwrap();
        assert_eq!(pts.len(), RESAMPLE_COUNT);
        let d = pts[RESAMPLE_COUNT - 1] - pts[0];
        assert!((d.norm() - 0.5).abs() < 1e-12);
        for p in &pts {
            let r = p - pts[0];
            assert!((r.x * d.y - r.y * d.x).abs() < 1e-12);
        }
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let s = stroke(vec![Vec3::new(1.0, 1.0, 1.0), Vec3::new(1.0005, 1.0, 1.0), Vec3::new(1.0, 1.0, 1.0)]);
        assert_eq!(project_stroke(&s), Err(SketchError::DegenerateStroke));
        assert_eq!(project_stroke(&stroke(vec![])), Err(SketchError::DegenerateStroke));
    }

    #[test]
    fn basis_is_up_aligned() {
        let pts = project_points(&[Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0)], &Vec3::new(0.0, 0.0, -1.0), &Vec3::zeros()).unwrap();
        assert!((pts[0] - Vec2::new(0.0, 1.0)).norm() < 1e-15);
        assert!((pts[1] - Vec2::new(1.0, 0.0)).norm() < 1e-15);
        let down = project_points(&[Vec3::new(0.0, 0.0, -1.0)], &-UP, &Vec3::zeros()).unwrap();
        assert!((down[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn line_fits_exactly() {
        let pts: Vec<Vec2> = (0..20).map(|i| Vec2::new(0.01 * i as f64, 0.02 * i as f64)).collect();
        let fit = fit_bezier_path(&pts, 3, 1e-6).unwrap();
        assert_eq!(fit.path.len(), 1);
        assert!(fit.max_deviation <= 1e-9);
        let c = fit.path.segments()[0].control_points();
        for q in &c[1..3] {
            let r = q - c[0];
            assert!((r.x * 0.02 - r.y * 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoints_and_budget() {
        let pts: Vec<Vec2> = (0..64).map(|i| {
            let t = i as f64 / 63.0 * 6.0;
            Vec2::new(t, t.sin())
        }).collect();
        for budget in 1..6 {
            let fit = fit_bezier_path(&pts, budget, 1e-9).unwrap();
            assert!(fit.path.len() <= budget);
            assert_eq!(fit.path.start(), pts[0]);
            assert_eq!(fit.path.end(), pts[63]);
        }
    }

    #[test]
    fn too_few_points() {
        assert_eq!(fit_bezier_path(&[Vec2::zeros(); 3], 1, 0.1), Err(SketchError::InsufficientPoints(3)));
    }

    #[test]
    fn resample_is_uniform() {
        let r = resample(&[Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 2.0)], 4);
        assert!((r[1] - Vec2::new(1.0, 0.0)).norm() < 1e-12);
        assert!((r[2] - Vec2::new(1.0, 1.0)).norm() < 1e-12);
    }
}
