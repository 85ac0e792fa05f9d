//! Bounding-volume hierarchy over triangles with watertight ray tests.

use serde::Serialize;

use crate::geometry::Aabb;
use crate::math::Vec3;

/// Lower end of the accepted ray interval.
pub const T_MIN: f64 = 1e-6;
const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hit {
    pub t: f64,
    pub triangle_id: usize,
}

/// Per-ray constants for the watertight test.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
    inv: Vec3,
    kx: usize,
    ky: usize,
    kz: usize,
    sx: f64,
    sy: f64,
    sz: f64,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        let a = dir.abs();
        let kz = if a.x >= a.y && a.x >= a.z {
            0
        } else if a.y >= a.z {
            1
        } else {
            2
        };
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if dir[kz] < 0.0 {
            std::mem::swap(&mut kx, &mut ky);
        }
        Self {
            origin,
            dir,
            inv: dir.map(|c| 1.0 / c),
            kx,
            ky,
            kz,
            sx: dir[kx] / dir[kz],
            sy: dir[ky] / dir[kz],
            sz: 1.0 / dir[kz],
        }
    }

    /// Watertight ray/triangle test (Woop, Benthin, Wald 2013), two-sided.
    /// Returns `t` when the hit lies in `(t_min, t_max)`.
    pub fn intersect(&self, v: &[Vec3; 3], t_min: f64, t_max: f64) -> Option<f64> {
        let (kx, ky, kz) = (self.kx, self.ky, self.kz);
        let a = v[0] - self.origin;
        let b = v[1] - self.origin;
        let c = v[2] - self.origin;
        let (ax, ay) = (a[kx] - self.sx * a[kz], a[ky] - self.sy * a[kz]);
        let (bx, by) = (b[kx] - self.sx * b[kz], b[ky] - self.sy * b[kz]);
        let (cx, cy) = (c[kx] - self.sx * c[kz], c[ky] - self.sy * c[kz]);
        let u = cx * by - cy * bx;
        let v_ = ax * cy - ay * cx;
        let w = bx * ay - by * ax;
        if (u < 0.0 || v_ < 0.0 || w < 0.0) && (u > 0.0 || v_ > 0.0 || w > 0.0) {
            return None;
        }
        let det = u + v_ + w;
        if det == 0.0 {
            return None;
        }
        let t_scaled = u * (self.sz * a[kz]) + v_ * (self.sz * b[kz]) + w * (self.sz * c[kz]);
        let t = t_scaled / det;
        (t > t_min && t < t_max && t.is_finite()).then_some(t)
    }

    fn hits_box(&self, b: &Aabb, t_max: f64) -> bool {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for k in 0..3 {
            let inv = self.inv[k];
            let mut near = (b.min[k] - self.origin[k]) * inv;
            let mut far = (b.max[k] - self.origin[k]) * inv;
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            // NaN from 0 * inf means the ray lies in the slab plane.
            if near.is_nan() || far.is_nan() {
                if self.origin[k] < b.min[k] || self.origin[k] > b.max[k] {
                    return false;
                }
                continue;
            }
            t0 = t0.max(near);
            t1 = t1.min(far * (1.0 + 4.0 * f64::EPSILON));
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

/// Keeps the nearer hit, the lower triangle id on equal `t`.
fn closer(best: Option<Hit>, cand: Hit) -> Option<Hit> {
    match best {
        Some(b) if b.t < cand.t || (b.t == cand.t && b.triangle_id < cand.triangle_id) => Some(b),
        _ => Some(cand),
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, count: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Bvh {
    tris: Vec<[Vec3; 3]>,
    /// Leaf order to original triangle id.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

fn tri_bounds(t: &[Vec3; 3]) -> Aabb {
    let mut b = Aabb::empty();
    for p in t {
        b.grow(p);
    }
    b
}

impl Bvh {
    pub fn build(vertices: &[Vec3], triangles: &[[u32; 3]]) -> Self {
        let tris: Vec<[Vec3; 3]> = triangles
            .iter()
            .map(|t| [vertices[t[0] as usize], vertices[t[1] as usize], vertices[t[2] as usize]])
            .collect();
        let centroids: Vec<Vec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let mut bvh = Bvh { tris, order: Vec::new(), nodes: Vec::new() };
        if !order.is_empty() {
            let n = order.len();
            bvh.build_node(&mut order, 0, n, &centroids);
        }
        bvh.order = order;
        bvh
    }

    fn build_node(&mut self, order: &mut [usize], start: usize, end: usize, centroids: &[Vec3]) -> usize {
        let mut bounds = Aabb::empty();
        let mut cb = Aabb::empty();
        for &i in &order[start..end] {
            bounds = bounds.union(&tri_bounds(&self.tris[i]));
            cb.grow(&centroids[i]);
        }
        let idx = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, start, count: end - start });
            return idx;
        }
        let ext = cb.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = (start + end) / 2;
        order[start..end].select_nth_unstable_by(mid - start, |a, b| {
            centroids[*a][axis].total_cmp(&centroids[*b][axis]).then(a.cmp(b))
        });
        self.nodes.push(Node::Leaf { bounds, start, count: 0 });
        let left = self.build_node(order, start, mid, centroids);
        let right = self.build_node(order, mid, end, centroids);
        self.nodes[idx] = Node::Inner { bounds, left, right };
        idx
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    pub fn triangle(&self, id: usize) -> &[Vec3; 3] {
        &self.tris[id]
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map_or(Aabb::empty(), |n| *n.bounds())
    }

    /// Nearest hit with `t` in `(T_MIN, max_t)`.
    pub fn raycast(&self, origin: &Vec3, dir: &Vec3, max_t: f64) -> Option<Hit> {
        self.traverse(&Ray::new(*origin, *dir), max_t, false)
    }

    /// Whether anything is hit in `(T_MIN, max_t)`.
    pub fn occluded(&self, origin: &Vec3, dir: &Vec3, max_t: f64) -> bool {
        self.traverse(&Ray::new(*origin, *dir), max_t, true).is_some()
    }

    fn traverse(&self, ray: &Ray, max_t: f64, any: bool) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<Hit> = None;
        let mut limit = max_t;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !ray.hits_box(node.bounds(), limit) {
                continue;
            }
            match *node {
                Node::Leaf { start, count, .. } => {
                    for &id in &self.order[start..start + count] {
                        // Inclusive upper bound so equal-t ties with lower ids are still seen.
                        let upper = if best.is_some() { next_up(limit) } else { limit };
                        if let Some(t) = ray.intersect(&self.tris[id], T_MIN, upper) {
                            best = closer(best, Hit { t, triangle_id: id });
                            limit = best.unwrap().t;
                            if any {
                                return best;
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        best
    }

    /// Reference answer testing every triangle.
    pub fn raycast_brute_force(&self, origin: &Vec3, dir: &Vec3, max_t: f64) -> Option<Hit> {
        let ray = Ray::new(*origin, *dir);
        let mut best = None;
        for (id, tri) in self.tris.iter().enumerate() {
            if let Some(t) = ray.intersect(tri, T_MIN, max_t) {
                best = closer(best, Hit { t, triangle_id: id });
            }
        }
        best
    }
}

fn next_up(x: f64) -> f64 {
    if x.is_finite() {
        f64::from_bits(if x >= 0.0 { x.to_bits() + 1 } else { x.to_bits() - 1 })
    } else {
        x
    }
}
