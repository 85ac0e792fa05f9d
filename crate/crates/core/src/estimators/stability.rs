//! Drop-test stability: a rigid convex body released onto a support plane,
//! plus the quasi-static support-polygon margin.

use nalgebra::{Matrix3, UnitQuaternion};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{EnvironmentScene, SupportPlane};
use crate::geometry::{mass_properties, TriangleMesh};
use crate::math::{convex_hull_2d, signed_distance_to_convex_polygon, Vec2, Vec3, UP};

pub const DT: f64 = 1.0 / 240.0;
pub const GRAVITY: f64 = 9.81;
pub const FRICTION: f64 = 0.5;
pub const DROP_HEIGHT: f64 = 0.02;
pub const SETTLE_SPEED: f64 = 1e-3;
pub const SETTLE_ANGULAR_SPEED: f64 = 1e-2;
pub const SETTLE_TIME: f64 = 0.5;
pub const MAX_TIME: f64 = 5.0;
pub const TOPPLE_ANGLE_DEG: f64 = 45.0;
/// Vertices this close to the plane count as contacts.
pub const CONTACT_BAND: f64 = 0.001;
pub const EROSION: f64 = 0.005;

const SOLVER_ITERATIONS: usize = 30;
const TRACE_STRIDE: usize = 8;
const SPECULATIVE_BAND: f64 = 0.002;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StabilityError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("no support plane under the design")]
    NoSupportPlane,
}

/// `p ↦ rotation · p + translation`. Rotation as a unit quaternion `[w, x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: [f64; 4],
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self { rotation: [1.0, 0.0, 0.0, 0.0], translation: Vec3::zeros() }
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        let [w, x, y, z] = self.rotation;
        UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z))
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.quaternion() * p + self.translation
    }
}

fn quat_array(q: &UnitQuaternion<f64>) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    /// Center of mass in world coordinates.
    pub position: Vec3,
    pub rotation: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub toppled: bool,
    pub settled: bool,
    pub settle_time: Option<f64>,
    /// Angle between the body's up axis and world up at the end, degrees.
    pub tilt_deg: f64,
    /// Maps the input mesh onto its final resting place.
    pub settled_pose: RigidTransform,
    pub quasi_static_margin: f64,
    pub contact_points: Vec<Vec3>,
    pub trace: Vec<TraceSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiStatic {
    pub margin: f64,
    pub center_of_mass: Vec3,
    /// Contact points of the rest pose, world coordinates.
    pub contact_points: Vec<Vec3>,
    /// Convex hull of the contacts in plane coordinates.
    pub support_polygon: Vec<Vec2>,
}

struct Body {
    com: Vec3,
    inv_inertia: Matrix3<f64>,
    /// Vertex offsets from the center of mass in the initial frame.
    points: Vec<Vec3>,
}

fn unique_vertices(mesh: &TriangleMesh) -> Vec<Vec3> {
    let mut used = vec![false; mesh.vertices.len()];
    for t in &mesh.triangles {
        for &i in t {
            used[i as usize] = true;
        }
    }
    let mut seen = std::collections::HashSet::new();
    mesh.vertices
        .iter()
        .zip(used)
        .filter(|(v, u)| *u && seen.insert([v.x.to_bits(), v.y.to_bits(), v.z.to_bits()]))
        .map(|(v, _)| *v)
        .collect()
}

/// Unit-mass body: center of mass and inertia from the watertight volume,
/// else the vertex average and the inertia of the bounding box.
fn body(mesh: &TriangleMesh) -> Result<Body, StabilityError> {
    if mesh.is_empty() {
        return Err(StabilityError::EmptyMesh);
    }
    let verts = unique_vertices(mesh);
    let (com, inertia) = match mass_properties(mesh) {
        Some(mp) => (mp.center_of_mass, mp.inertia / mp.volume),
        None => {
            let com = verts.iter().sum::<Vec3>() / verts.len() as f64;
            let e = mesh.bbox().extent().map(|c| c.max(1e-3));
            let d = |a: f64, b: f64| (a * a + b * b) / 12.0;
            (com, Matrix3::from_diagonal(&Vec3::new(d(e.y, e.z), d(e.x, e.z), d(e.x, e.y))))
        }
    };
    let inv_inertia = inertia.try_inverse().unwrap_or_else(Matrix3::identity);
    Ok(Body { com, inv_inertia, points: verts.iter().map(|v| v - com).collect() })
}

fn plane_basis(n: &Vec3) -> (Vec3, Vec3) {
    let seed = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::z() };
    let u = (seed - n * n.dot(&seed)).normalize();
    (u, n.cross(&u))
}

fn plane_coords(p: &Vec3, plane: &SupportPlane, u: &Vec3, w: &Vec3) -> Vec2 {
    let q = p - plane.normal * plane.signed_distance(p);
    Vec2::new(q.dot(u), q.dot(w))
}

/// Margin of the COM against the support polygon of `contacts`, eroded.
fn margin_for(com: &Vec3, contacts: &[Vec3], plane: &SupportPlane) -> (f64, Vec<Vec2>) {
    let (u, w) = plane_basis(&plane.normal);
    // Horizontal projection of the COM: slide it along gravity onto the plane.
    let s = plane.signed_distance(com) / plane.normal.dot(&UP);
    let foot = com - UP * s;
    let poly = convex_hull_2d(&contacts.iter().map(|p| plane_coords(p, plane, &u, &w)).collect::<Vec<_>>());
    let c = plane_coords(&foot, plane, &u, &w);
    (signed_distance_to_convex_polygon(&c, &poly) - EROSION, poly)
}

/// Lowers the mesh along gravity onto the plane without rotating it and
/// measures how far the COM sits inside the eroded support polygon.
pub fn quasi_static(mesh: &TriangleMesh, plane: &SupportPlane) -> Result<QuasiStatic, StabilityError> {
    let b = body(mesh)?;
    let verts: Vec<Vec3> = b.points.iter().map(|r| r + b.com).collect();
    let lowest = verts.iter().map(|v| plane.signed_distance(v)).fold(f64::INFINITY, f64::min);
    let drop = UP * (lowest / plane.normal.dot(&UP));
    let contacts: Vec<Vec3> =
        verts.iter().map(|v| v - drop).filter(|v| plane.signed_distance(v) <= CONTACT_BAND).collect();
    let com = b.com - drop;
    let (margin, poly) = margin_for(&com, &contacts, plane);
    Ok(QuasiStatic { margin, center_of_mass: com, contact_points: contacts, support_polygon: poly })
}

pub fn quasi_static_stability(mesh: &TriangleMesh, plane: &SupportPlane) -> Result<f64, StabilityError> {
    Ok(quasi_static(mesh, plane)?.margin)
}

#[derive(Clone, Copy)]
struct Contact {
    index: usize,
    r: Vec3,
    gap: f64,
    normal_mass: f64,
    tangent_mass: [f64; 2],
    lambda_n: f64,
    lambda_t: [f64; 2],
}

fn effective_mass(inv_i: &Matrix3<f64>, r: &Vec3, dir: &Vec3) -> f64 {
    let rn = r.cross(dir);
    let k = 1.0 + dir.dot(&(inv_i * rn).cross(r));
    1.0 / k
}

/// Drops the mesh from `DROP_HEIGHT` above the plane and simulates until it
/// settles or `MAX_TIME` passes.
pub fn estimate_stability(mesh: &TriangleMesh, plane: &SupportPlane) -> Result<StabilityReport, StabilityError> {
    let b = body(mesh)?;
    let n = plane.normal;
    let (t1, t2) = plane_basis(&n);
    let lowest = b.points.iter().map(|r| plane.signed_distance(&(r + b.com))).fold(f64::INFINITY, f64::min);
    let mut x = b.com + UP * ((DROP_HEIGHT - lowest) / n.dot(&UP));
    let mut q = UnitQuaternion::identity();
    let mut v = Vec3::zeros();
    let mut w = Vec3::zeros();
    let mut warm: Vec<Option<(f64, [f64; 2])>> = vec![None; b.points.len()];
    let mut trace = vec![TraceSample { t: 0.0, position: x, rotation: quat_array(&q) }];
    let steps = (MAX_TIME / DT).round() as usize;
    let settle_steps = (SETTLE_TIME / DT).round() as usize;
    let mut still = 0usize;
    let mut settle_time = None;
    let mut contacts: Vec<Contact> = Vec::new();

    for step in 1..=steps {
        v -= UP * (GRAVITY * DT);
        let rot = q.to_rotation_matrix();
        let inv_i = rot.matrix() * b.inv_inertia * rot.matrix().transpose();
        let reach = SPECULATIVE_BAND.max(2.0 * v.norm() * DT);
        contacts.clear();
        for (index, p) in b.points.iter().enumerate() {
            let r = rot * p;
            let gap = n.dot(&(x + r)) - plane.offset;
            if gap < reach {
                contacts.push(Contact {
                    index,
                    r,
                    gap,
                    normal_mass: effective_mass(&inv_i, &r, &n),
                    tangent_mass: [effective_mass(&inv_i, &r, &t1), effective_mass(&inv_i, &r, &t2)],
                    lambda_n: 0.0,
                    lambda_t: [0.0; 2],
                });
            }
        }
        let mut next_warm = vec![None; b.points.len()];
        let apply = |v: &mut Vec3, w: &mut Vec3, r: &Vec3, imp: Vec3| {
            *v += imp;
            *w += inv_i * r.cross(&imp);
        };
        for c in &mut contacts {
            if let Some((ln, lt)) = warm[c.index] {
                c.lambda_n = ln;
                c.lambda_t = lt;
                apply(&mut v, &mut w, &c.r, n * ln + t1 * lt[0] + t2 * lt[1]);
            }
        }
        for _ in 0..SOLVER_ITERATIONS {
            for c in &mut contacts {
                let vel = v + w.cross(&c.r);
                let target = -c.gap.max(0.0) / DT;
                let new = (c.lambda_n + (target - n.dot(&vel)) * c.normal_mass).max(0.0);
                let d = new - c.lambda_n;
                c.lambda_n = new;
                apply(&mut v, &mut w, &c.r, n * d);

                let vel = v + w.cross(&c.r);
                let mut lt = [
                    c.lambda_t[0] - t1.dot(&vel) * c.tangent_mass[0],
                    c.lambda_t[1] - t2.dot(&vel) * c.tangent_mass[1],
                ];
                let limit = FRICTION * c.lambda_n;
                let mag = (lt[0] * lt[0] + lt[1] * lt[1]).sqrt();
                if mag > limit {
                    let s = if mag > 0.0 { limit / mag } else { 0.0 };
                    lt = [lt[0] * s, lt[1] * s];
                }
                let d = [lt[0] - c.lambda_t[0], lt[1] - c.lambda_t[1]];
                c.lambda_t = lt;
                apply(&mut v, &mut w, &c.r, t1 * d[0] + t2 * d[1]);
            }
        }
        for c in &contacts {
            if c.lambda_n > 0.0 {
                next_warm[c.index] = Some((c.lambda_n, c.lambda_t));
            }
        }
        warm = next_warm;

        x += v * DT;
        q = UnitQuaternion::from_scaled_axis(w * DT) * q;
        // Position projection: push the body out of the plane.
        let rot = q.to_rotation_matrix();
        let pen = b.points.iter().map(|p| n.dot(&(x + rot * p)) - plane.offset).fold(f64::INFINITY, f64::min);
        if pen < 0.0 {
            x -= n * pen;
        }

        if step % TRACE_STRIDE == 0 {
            trace.push(TraceSample { t: step as f64 * DT, position: x, rotation: quat_array(&q) });
        }
        if v.norm() < SETTLE_SPEED && w.norm() < SETTLE_ANGULAR_SPEED {
            still += 1;
            if still >= settle_steps {
                settle_time = Some(step as f64 * DT);
                break;
            }
        } else {
            still = 0;
        }
    }
    if trace.last().map(|s| s.position) != Some(x) {
        let t = settle_time.unwrap_or(MAX_TIME);
        trace.push(TraceSample { t, position: x, rotation: quat_array(&q) });
    }

    let tilt_deg = (q * UP).angle(&UP).to_degrees();
    let rot = q.to_rotation_matrix();
    let contact_points: Vec<Vec3> = b
        .points
        .iter()
        .map(|p| x + rot * p)
        .filter(|p| plane.signed_distance(p) <= CONTACT_BAND)
        .collect();
    let settled_pose = RigidTransform { rotation: quat_array(&q), translation: x - rot * b.com };
    let quasi_static_margin = quasi_static(mesh, plane)?.margin;
    Ok(StabilityReport {
        toppled: settle_time.is_none() || tilt_deg > TOPPLE_ANGLE_DEG,
        settled: settle_time.is_some(),
        settle_time,
        tilt_deg,
        settled_pose,
        quasi_static_margin,
        contact_points,
        trace,
    })
}

/// Support plane under the mesh: the highest detected plane containing the
/// COM's footprint at or below the mesh's lowest point.
pub fn support_plane_for<'a>(mesh: &TriangleMesh, scene: &'a EnvironmentScene) -> Result<&'a SupportPlane, StabilityError> {
    let b = body(mesh)?;
    let lowest = b.points.iter().map(|r| (r + b.com).y).fold(f64::INFINITY, f64::min);
    scene.support_plane_below(b.com.x, b.com.z, lowest + DROP_HEIGHT).ok_or(StabilityError::NoSupportPlane)
}

pub fn estimate_stability_in(mesh: &TriangleMesh, scene: &EnvironmentScene) -> Result<StabilityReport, StabilityError> {
    estimate_stability(mesh, support_plane_for(mesh, scene)?)
}
