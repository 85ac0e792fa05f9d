//! Binary STL: 80-byte header, u32 triangle count, then 50 bytes per
//! triangle (normal, three vertices as little-endian f32, u16 attribute).

use super::{GeometryError, TriangleMesh};
use crate::math::Vec3;

const HEADER: &[u8] = b"insitu binary STL, units: meters";

pub fn export_stl(mesh: &TriangleMesh) -> Result<Vec<u8>, GeometryError> {
    if mesh.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    let n = mesh.triangles.len();
    let mut out = Vec::with_capacity(84 + 50 * n);
    let mut header = [0u8; 80];
    header[..HEADER.len()].copy_from_slice(HEADER);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for i in 0..n {
        let [a, b, c] = mesh.triangle(i);
        let normal = (b - a).cross(&(c - a));
        let len = normal.norm();
        let normal = if len > 0.0 { normal / len } else { Vec3::zeros() };
        for v in [normal, a, b, c] {
            for k in 0..3 {
                out.extend_from_slice(&(v[k] as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    Ok(out)
}

/// Reads a binary STL into an unindexed mesh (three vertices per triangle).
pub fn import_stl(bytes: &[u8]) -> Result<TriangleMesh, GeometryError> {
    if bytes.len() < 84 {
        return Err(GeometryError::MalformedStl("shorter than header".into()));
    }
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if bytes.len() != 84 + 50 * n {
        return Err(GeometryError::MalformedStl(format!(
            "expected {} bytes for {n} triangles, got {}",
            84 + 50 * n,
            bytes.len()
        )));
    }
    let f = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64;
    let mut mesh = TriangleMesh::new();
    for t in 0..n {
        let base = 84 + 50 * t + 12;
        for k in 0..3 {
            let o = base + 12 * k;
            mesh.vertices.push(Vec3::new(f(o), f(o + 4), f(o + 8)));
        }
        let i = (3 * t) as u32;
        mesh.triangles.push([i, i + 1, i + 2]);
    }
    mesh.parts.push(super::MeshPart { name: "stl".into(), start: 0, end: n });
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_size_and_roundtrip() {
        let mut m = TriangleMesh::new();
        m.push_cuboid("c", Vec3::new(0.1, 0.2, 0.3), Vec3::new(1.1, 1.2, 1.3));
        let bytes = export_stl(&m).unwrap();
        assert_eq!(bytes.len(), 84 + 12 * 50);
        let back = import_stl(&bytes).unwrap();
        assert_eq!(back.triangles.len(), 12);
        for i in 0..12 {
            let a = m.triangle(i);
            let b = back.triangle(i);
            for k in 0..3 {
                assert!((a[k] - b[k]).abs().max() < 1e-6);
            }
        }
    }

    #[test]
    fn empty_mesh_is_rejected() {
        assert!(matches!(export_stl(&TriangleMesh::new()), Err(GeometryError::EmptyMesh)));
    }
}
