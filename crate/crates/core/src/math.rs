//! Small vector helpers shared across modules.

use nalgebra::{Vector2, Vector3};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// World up axis (Y-up convention).
pub const UP: Vec3 = Vec3::new(0.0, 1.0, 0.0);

/// Rotates `v` about the world up axis by `yaw` radians.
pub fn rotate_yaw(v: &Vec3, yaw: f64) -> Vec3 {
    let (s, c) = yaw.sin_cos();
    Vec3::new(c * v.x + s * v.z, v.y, -s * v.x + c * v.z)
}

/// Normalizes an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(std::f64::consts::TAU);
    if r >= std::f64::consts::TAU {
        0.0
    } else {
        r
    }
}

fn cross2(o: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain. Returns the hull counter-clockwise without the
/// closing point. Collinear points are dropped.
pub fn convex_hull_2d(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.iter().copied().filter(|p| p.x.is_finite() && p.y.is_finite()).collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Vec2> = Vec::with_capacity(pts.len());
    for p in &pts {
        while lower.len() >= 2 && cross2(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Vec2> = Vec::with_capacity(pts.len());
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross2(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Distance from `p` to the segment `ab`.
pub fn point_segment_distance_2d(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Signed distance from `p` to the boundary of a counter-clockwise convex
/// polygon: positive inside, negative outside. Degenerate polygons (fewer
/// than three vertices) have no interior, so the result is never positive.
pub fn signed_distance_to_convex_polygon(p: &Vec2, poly: &[Vec2]) -> f64 {
    match poly.len() {
        0 => f64::NEG_INFINITY,
        1 => -(p - poly[0]).norm(),
        2 => -point_segment_distance_2d(p, &poly[0], &poly[1]),
        n => {
            let mut inside = true;
            let mut min_edge = f64::INFINITY;
            for i in 0..n {
                let a = poly[i];
                let b = poly[(i + 1) % n];
                if cross2(&a, &b, p) < 0.0 {
                    inside = false;
                }
                min_edge = min_edge.min(point_segment_distance_2d(p, &a, &b));
            }
            if inside {
                min_edge
            } else {
                -min_edge
            }
        }
    }
}

/// Area of a simple polygon (positive for counter-clockwise order).
pub fn polygon_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut a = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    0.5 * a
}
