use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::math::Vec2;

/// A planar cubic Bézier segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicBezier {
    pub p0: Vec2,
    pub p1: Vec2,
    pub p2: Vec2,
    pub p3: Vec2,
}

impl CubicBezier {
    pub fn new(p0: Vec2, p1: Vec2, p2: Vec2, p3: Vec2) -> Self {
        Self { p0, p1, p2, p3 }
    }

    pub fn control_points(&self) -> [Vec2; 4] {
        [self.p0, self.p1, self.p2, self.p3]
    }

    pub fn is_finite(&self) -> bool {
        self.control_points().iter().all(|p| p.x.is_finite() && p.y.is_finite())
    }

    /// Bernstein-form evaluation without range checking.
    pub fn point_at(&self, t: f64) -> Vec2 {
        let mt = 1.0 - t;
        let b0 = mt * mt * mt;
        let b1 = 3.0 * mt * mt * t;
        let b2 = 3.0 * mt * t * t;
        let b3 = t * t * t;
        self.p0 * b0 + self.p1 * b1 + self.p2 * b2 + self.p3 * b3
    }

    pub fn derivative_at(&self, t: f64) -> Vec2 {
        let mt = 1.0 - t;
        (self.p1 - self.p0) * (3.0 * mt * mt) + (self.p2 - self.p1) * (6.0 * mt * t) + (self.p3 - self.p2) * (3.0 * t * t)
    }

    pub fn second_derivative_at(&self, t: f64) -> Vec2 {
        let mt = 1.0 - t;
        (self.p2 - self.p1 * 2.0 + self.p0) * (6.0 * mt) + (self.p3 - self.p2 * 2.0 + self.p1) * (6.0 * t)
    }

    pub fn reversed(&self) -> Self {
        Self::new(self.p3, self.p2, self.p1, self.p0)
    }

    pub fn map(&self, f: impl Fn(Vec2) -> Vec2) -> Self {
        Self::new(f(self.p0), f(self.p1), f(self.p2), f(self.p3))
    }
}

/// Evaluates `b` at `t`, rejecting parameters outside `[0, 1]`.
pub fn eval_bezier(b: &CubicBezier, t: f64) -> Result<Vec2, GeometryError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::OutOfRangeT(t));
    }
    Ok(b.point_at(t))
}

/// A C0-continuous chain of cubic segments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BezierPath {
    segments: Vec<CubicBezier>,
}

impl BezierPath {
    /// Builds a path, checking that consecutive segments share endpoints exactly.
    pub fn new(segments: Vec<CubicBezier>) -> Result<Self, GeometryError> {
        if segments.is_empty() {
            return Err(GeometryError::EmptyPath);
        }
        if segments.iter().any(|s| !s.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        for (i, w) in segments.windows(2).enumerate() {
            if w[0].p3 != w[1].p0 {
                return Err(GeometryError::Discontinuous(i));
            }
        }
        Ok(Self { segments })
    }

    /// Builds a path from `3k + 1` control points.
    pub fn from_points(points: &[Vec2]) -> Result<Self, GeometryError> {
        if points.len() < 4 || (points.len() - 1) % 3 != 0 {
            return Err(GeometryError::BadControlPointCount(points.len()));
        }
        let segments = points
            .windows(4)
            .step_by(3)
            .map(|w| CubicBezier::new(w[0], w[1], w[2], w[3]))
            .collect();
        Self::new(segments)
    }

    pub fn segments(&self) -> &[CubicBezier] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// All control points, shared endpoints listed once.
    pub fn control_points(&self) -> Vec<Vec2> {
        let mut out = vec![self.segments[0].p0];
        for s in &self.segments {
            out.extend_from_slice(&[s.p1, s.p2, s.p3]);
        }
        out
    }

    pub fn start(&self) -> Vec2 {
        self.segments[0].p0
    }

    pub fn end(&self) -> Vec2 {
        self.segments[self.segments.len() - 1].p3
    }

    /// Evaluates at a global parameter `u` in `[0, len]`.
    pub fn point_at(&self, u: f64) -> Vec2 {
        let n = self.segments.len();
        let u = u.clamp(0.0, n as f64);
        let i = (u.floor() as usize).min(n - 1);
        self.segments[i].point_at(u - i as f64)
    }

    /// `count` points evenly spaced in the global parameter, endpoints included.
    pub fn sample(&self, count: usize) -> Vec<Vec2> {
        let n = self.segments.len() as f64;
        let count = count.max(2);
        (0..count).map(|k| self.point_at(n * k as f64 / (count - 1) as f64)).collect()
    }

    pub fn reversed(&self) -> Self {
        Self { segments: self.segments.iter().rev().map(CubicBezier::reversed).collect() }
    }

    /// Applies `f` to every control point. `f` must map equal points to equal points.
    pub fn map(&self, f: impl Fn(Vec2) -> Vec2) -> Self {
        Self { segments: self.segments.iter().map(|s| s.map(&f)).collect() }
    }

    /// Axis-aligned bounds of the control polygon, which contain the curve.
    pub fn control_bounds(&self) -> (Vec2, Vec2) {
        let pts = self.control_points();
        let mut lo = pts[0];
        let mut hi = pts[0];
        for p in &pts {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }
}

impl<'de> Deserialize<'de> for BezierPath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            segments: Vec<CubicBezier>,
        }
        let raw = Raw::deserialize(d)?;
        BezierPath::new(raw.segments).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch() -> CubicBezier {
        CubicBezier::new(Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0))
    }

    fn de_casteljau(pts: [Vec2; 4], t: f64) -> Vec2 {
        let mut p = pts.to_vec();
        while p.len() > 1 {
            p = p.windows(2).map(|w| w[0] + (w[1] - w[0]) * t).collect();
        }
        p[0]
    }

    #[test]
    fn endpoints_interpolate() {
        let b = arch();
        assert_eq!(eval_bezier(&b, 0.0).unwrap(), b.p0);
        assert_eq!(eval_bezier(&b, 1.0).unwrap(), b.p3);
    }

    #[test]
    fn midpoint_matches_de_casteljau() {
        let b = arch();
        let oracle = de_casteljau(b.control_points(), 0.5);
        assert!((oracle - Vec2::new(0.5, 0.75)).norm() < 1e-15);
        let p = eval_bezier(&b, 0.5).unwrap();
        assert!((p - oracle).norm() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range_parameter() {
        assert!(matches!(eval_bezier(&arch(), 1.5), Err(GeometryError::OutOfRangeT(_))));
        assert!(matches!(eval_bezier(&arch(), -0.1), Err(GeometryError::OutOfRangeT(_))));
    }

    #[test]
    fn path_requires_continuity() {
        let a = arch();
        let mut b = arch();
        b.p0 = Vec2::new(2.0, 0.0);
        assert!(matches!(BezierPath::new(vec![a, b]), Err(GeometryError::Discontinuous(0))));
        let pts: Vec<Vec2> = (0..7).map(|i| Vec2::new(i as f64, 0.0)).collect();
        assert_eq!(BezierPath::from_points(&pts).unwrap().len(), 2);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let b = arch();
        let h = 1e-6;
        for &t in &[0.1, 0.4, 0.9] {
            let fd = (b.point_at(t + h) - b.point_at(t - h)) / (2.0 * h);
            assert!((fd - b.derivative_at(t)).norm() < 1e-6);
        }
    }
}
