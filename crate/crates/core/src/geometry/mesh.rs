use std::collections::HashMap;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::math::{rotate_yaw, Vec3};

/// A named, contiguous range of triangles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshPart {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

/// Indexed triangle geometry in meters, Y-up.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub parts: Vec<MeshPart>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self { min: Vec3::repeat(f64::INFINITY), max: Vec3::repeat(f64::NEG_INFINITY) }
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb { min: self.min.inf(&o.min), max: self.max.sup(&o.max) }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }
}

impl TriangleMesh {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let t = self.triangles[i];
        [self.vertices[t[0] as usize], self.vertices[t[1] as usize], self.vertices[t[2] as usize]]
    }

    /// Appends `other` as new parts, keeping its part names.
    pub fn append(&mut self, other: &TriangleMesh) {
        let vbase = self.vertices.len() as u32;
        let tbase = self.triangles.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(other.triangles.iter().map(|t| [t[0] + vbase, t[1] + vbase, t[2] + vbase]));
        for p in &other.parts {
            self.parts.push(MeshPart { name: p.name.clone(), start: p.start + tbase, end: p.end + tbase });
        }
    }

    /// Appends raw geometry as one named part.
    pub fn push_part(&mut self, name: impl Into<String>, vertices: &[Vec3], triangles: &[[u32; 3]]) {
        let vbase = self.vertices.len() as u32;
        let start = self.triangles.len();
        self.vertices.extend_from_slice(vertices);
        self.triangles.extend(triangles.iter().map(|t| [t[0] + vbase, t[1] + vbase, t[2] + vbase]));
        self.parts.push(MeshPart { name: name.into(), start, end: self.triangles.len() });
    }

    /// Adds an axis-aligned box part with outward winding.
    pub fn push_cuboid(&mut self, name: impl Into<String>, min: Vec3, max: Vec3) {
        let (vs, ts) = cuboid(min, max);
        self.push_part(name, &vs, &ts);
    }

    pub fn part_names(&self) -> impl Iterator<Item = &str> {
        self.parts.iter().map(|p| p.name.as_str())
    }

    pub fn bbox(&self) -> Aabb {
        let mut b = Aabb::empty();
        for v in &self.vertices {
            b.grow(v);
        }
        b
    }

    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
            parts: self.parts.clone(),
        }
    }

    /// Rotates about world up by `yaw`, then translates by `position`.
    pub fn posed(&self, position: &Vec3, yaw: f64) -> TriangleMesh {
        self.map_vertices(|v| rotate_yaw(v, yaw) + position)
    }

    pub fn translated(&self, d: &Vec3) -> TriangleMesh {
        self.map_vertices(|v| v + d)
    }
}

/// Eight corners and twelve outward-wound triangles of an axis-aligned box.
pub fn cuboid(min: Vec3, max: Vec3) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let v = |x: bool, y: bool, z: bool| {
        Vec3::new(if x { max.x } else { min.x }, if y { max.y } else { min.y }, if z { max.z } else { min.z })
    };
    let verts = vec![
        v(false, false, false),
        v(true, false, false),
        v(true, true, false),
        v(false, true, false),
        v(false, false, true),
        v(true, false, true),
        v(true, true, true),
        v(false, true, true),
    ];
    let tris = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [3, 7, 6],
        [3, 6, 2],
        [0, 4, 7],
        [0, 7, 3],
        [1, 2, 6],
        [1, 6, 5],
    ];
    (verts, tris)
}

/// Volume, center of mass and inertia of the watertight parts of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassProperties {
    pub volume: f64,
    pub center_of_mass: Vec3,
    /// Inertia tensor about the center of mass for unit density.
    pub inertia: Matrix3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDiagnostics {
    pub watertight_per_part: Vec<bool>,
    pub volume: f64,
    pub center_of_mass: Vec3,
    /// False when no watertight volume exists and the vertex average was used.
    pub com_from_volume: bool,
    pub bbox: Aabb,
}

fn part_ranges(mesh: &TriangleMesh) -> Vec<(usize, usize)> {
    if mesh.parts.is_empty() {
        vec![(0, mesh.triangles.len())]
    } else {
        mesh.parts.iter().map(|p| (p.start, p.end)).collect()
    }
}

/// Every undirected edge used exactly twice, once in each direction.
pub fn is_watertight(triangles: &[[u32; 3]]) -> bool {
    if triangles.is_empty() {
        return false;
    }
    let mut directed: HashMap<(u32, u32), u32> = HashMap::with_capacity(triangles.len() * 3);
    for t in triangles {
        for k in 0..3 {
            *directed.entry((t[k], t[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    directed.iter().all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
}

fn tetra_accumulate(tris: impl Iterator<Item = [Vec3; 3]>) -> (f64, Vec3, Matrix3<f64>) {
    // Signed tetrahedra against the origin; second moments use the canonical
    // covariance of a unit tetrahedron.
    let canonical = Matrix3::new(2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0) / 120.0;
    let mut vol = 0.0;
    let mut first = Vec3::zeros();
    let mut cov = Matrix3::zeros();
    for [a, b, c] in tris {
        let m = Matrix3::from_columns(&[a, b, c]);
        let det = m.determinant();
        vol += det / 6.0;
        first += (a + b + c) * (det / 24.0);
        cov += m * canonical * m.transpose() * det;
    }
    (vol, first, cov)
}

/// Mass properties over watertight parts, or `None` if there is no volume.
pub fn mass_properties(mesh: &TriangleMesh) -> Option<MassProperties> {
    let mut vol = 0.0;
    let mut first = Vec3::zeros();
    let mut cov = Matrix3::zeros();
    for (s, e) in part_ranges(mesh) {
        let tris = &mesh.triangles[s..e];
        if !is_watertight(tris) {
            continue;
        }
        let (v, f, c) = tetra_accumulate((s..e).map(|i| mesh.triangle(i)));
        vol += v;
        first += f;
        cov += c;
    }
    if vol <= 0.0 {
        return None;
    }
    let com = first / vol;
    let cov_com = cov - com * com.transpose() * vol;
    let inertia = Matrix3::identity() * cov_com.trace() - cov_com;
    Some(MassProperties { volume: vol, center_of_mass: com, inertia })
}

pub fn vertex_average(mesh: &TriangleMesh) -> Vec3 {
    if mesh.vertices.is_empty() {
        return Vec3::zeros();
    }
    mesh.vertices.iter().sum::<Vec3>() / mesh.vertices.len() as f64
}

pub fn diagnose(mesh: &TriangleMesh) -> MeshDiagnostics {
    let watertight_per_part: Vec<bool> =
        part_ranges(mesh).into_iter().map(|(s, e)| is_watertight(&mesh.triangles[s..e])).collect();
    let (volume, center_of_mass, com_from_volume) = match mass_properties(mesh) {
        Some(mp) => (mp.volume, mp.center_of_mass, true),
        None => (0.0, vertex_average(mesh), false),
    };
    MeshDiagnostics { watertight_per_part, volume, center_of_mass, com_from_volume, bbox: mesh.bbox() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube() -> TriangleMesh {
        let mut m = TriangleMesh::new();
        m.push_cuboid("cube", Vec3::zeros(), Vec3::repeat(1.0));
        m
    }

    #[test]
    fn unit_cube_diagnostics() {
        let d = diagnose(&unit_cube());
        assert_eq!(d.watertight_per_part, vec![true]);
        assert!((d.volume - 1.0).abs() < 1e-12);
        assert!((d.center_of_mass - Vec3::repeat(0.5)).norm() < 1e-12);
    }

    #[test]
    fn open_cube_is_not_watertight() {
        let mut m = unit_cube();
        m.triangles.truncate(10);
        m.parts[0].end = 10;
        let d = diagnose(&m);
        assert_eq!(d.watertight_per_part, vec![false]);
        assert_eq!(d.volume, 0.0);
        assert!(!d.com_from_volume);
    }

    #[test]
    fn disjoint_cubes_add_volume() {
        let mut m = TriangleMesh::new();
        m.push_cuboid("a", Vec3::zeros(), Vec3::repeat(1.0));
        m.push_cuboid("b", Vec3::new(3.0, 0.0, 0.0), Vec3::new(4.0, 1.0, 1.0));
        let d = diagnose(&m);
        assert!((d.volume - 2.0).abs() < 1e-12);
        assert!((d.center_of_mass - Vec3::new(2.0, 0.5, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn cube_inertia_matches_closed_form() {
        let mut m = TriangleMesh::new();
        m.push_cuboid("box", Vec3::new(-0.1, 2.0, 5.0), Vec3::new(0.3, 2.2, 5.6));
        let mp = mass_properties(&m).unwrap();
        let (a, b, c) = (0.4, 0.2, 0.6);
        let vol = a * b * c;
        let expect = [vol * (b * b + c * c) / 12.0, vol * (a * a + c * c) / 12.0, vol * (a * a + b * b) / 12.0];
        for k in 0..3 {
            assert!((mp.inertia[(k, k)] - expect[k]).abs() < 1e-12, "{k}: {} vs {}", mp.inertia[(k, k)], expect[k]);
        }
        assert!(mp.inertia[(0, 1)].abs() < 1e-12);
    }
}
