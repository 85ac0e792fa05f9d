//! Surfaces of revolution from a radius-over-height Bézier profile.

use std::f64::consts::TAU;

use super::{BezierPath, GeometryError, TriangleMesh, R_MIN};
use crate::math::{Vec2, Vec3};

/// Samples per Bézier segment along the profile.
pub const PROFILE_SAMPLES_PER_SEGMENT: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct LatheSpec {
    /// Profile in the (radius, height) plane.
    pub profile: BezierPath,
    pub height: f64,
    /// When set, radii are rescaled so the widest point has this diameter.
    pub diameter: Option<f64>,
    /// Zero for a solid body, otherwise a shell of this wall thickness.
    pub wall: f64,
    pub closed_bottom: bool,
    /// Total rotation (radians) of the top ring relative to the bottom.
    pub twist: f64,
    /// Horizontal (+x) offset of the top relative to the bottom.
    pub lean: f64,
    pub segments: usize,
}

/// Resolved rings: `(radius, height)` pairs from bottom to top.
#[derive(Debug, Clone, PartialEq)]
pub struct LatheRings {
    pub outer: Vec<Vec2>,
    /// Present for shells.
    pub inner: Option<Vec<Vec2>>,
    pub cavity_floor: f64,
    pub height: f64,
}

impl LatheRings {
    /// Inner radius at height `y`, linearly interpolated between rings.
    pub fn inner_radius_at(&self, y: f64) -> Option<f64> {
        let inner = self.inner.as_ref()?;
        interpolate_radius(inner, y)
    }

    /// Smallest inner radius over `[y0, y1]`, checking ring heights inside
    /// the window and both window ends.
    pub fn min_inner_radius(&self, y0: f64, y1: f64) -> Option<f64> {
        let inner = self.inner.as_ref()?;
        let mut best = f64::INFINITY;
        for y in [y0, y1] {
            best = best.min(interpolate_radius(inner, y)?);
        }
        for p in inner {
            if p.y >= y0 && p.y <= y1 {
                best = best.min(p.x);
            }
        }
        Some(best)
    }
}

fn interpolate_radius(rings: &[Vec2], y: f64) -> Option<f64> {
    for w in rings.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (lo, hi) = if a.y <= b.y { (a, b) } else { (b, a) };
        if y >= lo.y && y <= hi.y {
            if hi.y == lo.y {
                return Some(lo.x.min(hi.x));
            }
            let t = (y - lo.y) / (hi.y - lo.y);
            return Some(lo.x + (hi.x - lo.x) * t);
        }
    }
    None
}

impl LatheSpec {
    pub fn rings(&self) -> Result<LatheRings, GeometryError> {
        if !(self.height > 0.0) || !self.height.is_finite() {
            return Err(GeometryError::DegenerateProfile(format!("height {} must be positive", self.height)));
        }
        if self.wall < 0.0 || self.wall >= self.height {
            return Err(GeometryError::DegenerateProfile(format!("wall {} incompatible with height", self.wall)));
        }
        let mut path = self.profile.clone();
        if path.start().y > path.end().y {
            path = path.reversed();
        }
        let raw = path.sample(path.len() * PROFILE_SAMPLES_PER_SEGMENT + 1);
        let y0 = raw.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let y1 = raw.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        if !(y1 - y0 > 0.0) {
            return Err(GeometryError::DegenerateProfile("profile has no vertical extent".into()));
        }
        let rmax = raw.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        if !(rmax > 0.0) {
            return Err(GeometryError::DegenerateProfile("profile never leaves the axis".into()));
        }
        let rscale = match self.diameter {
            Some(d) => d / (2.0 * rmax),
            None => 1.0,
        };
        let rfloor = R_MIN + self.wall;
        let mut outer: Vec<Vec2> = raw
            .iter()
            .map(|p| Vec2::new((p.x * rscale).max(rfloor), (p.y - y0) / (y1 - y0) * self.height))
            .collect();
        outer.dedup_by(|a, b| (*a - *b).norm() < 1e-9);
        if outer.len() < 2 {
            return Err(GeometryError::DegenerateProfile("profile collapses to a point".into()));
        }
        let (inner, cavity_floor) = if self.wall > 0.0 {
            let floor = if self.closed_bottom { self.wall } else { 0.0 };
            let inner = outer
                .iter()
                .map(|p| Vec2::new(p.x - self.wall, floor + p.y * (self.height - floor) / self.height))
                .collect();
            (Some(inner), floor)
        } else {
            (None, 0.0)
        };
        Ok(LatheRings { outer, inner, cavity_floor, height: self.height })
    }

    pub fn mesh(&self) -> Result<TriangleMesh, GeometryError> {
        let rings = self.rings()?;
        let n = self.segments.max(3);
        let mut verts: Vec<Vec3> = Vec::new();
        let mut tris: Vec<[u32; 3]> = Vec::new();

        let place = |r: f64, y: f64, j: usize| -> Vec3 {
            let frac = y / self.height;
            let theta = TAU * j as f64 / n as f64 + self.twist * frac;
            Vec3::new(r * theta.cos() + self.lean * frac, y, r * theta.sin())
        };
        let center = |y: f64| Vec3::new(self.lean * y / self.height, y, 0.0);

        let push_rings = |profile: &[Vec2], verts: &mut Vec<Vec3>| -> u32 {
            let base = verts.len() as u32;
            for p in profile {
                for j in 0..n {
                    verts.push(place(p.x, p.y, j));
                }
            }
            base
        };
        let idx = |base: u32, k: usize, j: usize| base + (k * n + j % n) as u32;

        let outer_base = push_rings(&rings.outer, &mut verts);
        let m = rings.outer.len();
        for k in 0..m - 1 {
            for j in 0..n {
                let (a, b) = (idx(outer_base, k, j), idx(outer_base, k, j + 1));
                let (c, d) = (idx(outer_base, k + 1, j + 1), idx(outer_base, k + 1, j));
                tris.push([a, d, b]);
                tris.push([b, d, c]);
            }
        }

        match &rings.inner {
            None => {
                let top = verts.len() as u32;
                verts.push(center(rings.outer[m - 1].y));
                for j in 0..n {
                    tris.push([top, idx(outer_base, m - 1, j + 1), idx(outer_base, m - 1, j)]);
                }
                if self.closed_bottom {
                    let bottom = verts.len() as u32;
                    verts.push(center(rings.outer[0].y));
                    for j in 0..n {
                        tris.push([bottom, idx(outer_base, 0, j), idx(outer_base, 0, j + 1)]);
                    }
                }
            }
            Some(inner) => {
                let inner_base = push_rings(inner, &mut verts);
                for k in 0..m - 1 {
                    for j in 0..n {
                        let (a, b) = (idx(inner_base, k, j), idx(inner_base, k, j + 1));
                        let (c, d) = (idx(inner_base, k + 1, j + 1), idx(inner_base, k + 1, j));
                        tris.push([a, b, d]);
                        tris.push([b, c, d]);
                    }
                }
                for j in 0..n {
                    let (o0, o1) = (idx(outer_base, m - 1, j), idx(outer_base, m - 1, j + 1));
                    let (i0, i1) = (idx(inner_base, m - 1, j), idx(inner_base, m - 1, j + 1));
                    tris.push([o0, i0, o1]);
                    tris.push([o1, i0, i1]);
                }
                if self.closed_bottom {
                    let ob = verts.len() as u32;
                    verts.push(center(rings.outer[0].y));
                    let ib = verts.len() as u32;
                    verts.push(center(inner[0].y));
                    for j in 0..n {
                        tris.push([ob, idx(outer_base, 0, j), idx(outer_base, 0, j + 1)]);
                        tris.push([ib, idx(inner_base, 0, j + 1), idx(inner_base, 0, j)]);
                    }
                } else {
                    for j in 0..n {
                        let (o0, o1) = (idx(outer_base, 0, j), idx(outer_base, 0, j + 1));
                        let (i0, i1) = (idx(inner_base, 0, j), idx(inner_base, 0, j + 1));
                        tris.push([o0, o1, i0]);
                        tris.push([o1, i1, i0]);
                    }
                }
            }
        }

        let mut mesh = TriangleMesh::new();
        mesh.push_part("body", &verts, &tris);
        Ok(mesh)
    }
}
