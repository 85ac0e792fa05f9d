//! OBJ and PLY scan import.

use serde::{Deserialize, Serialize};

use super::EnvironmentError;
use crate::geometry::TriangleMesh;
use crate::math::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanFormat {
    Obj,
    Ply,
}

impl ScanFormat {
    /// Guesses from a file extension.
    pub fn from_extension(path: &str) -> Option<Self> {
        let ext = path.rsplit('.').next()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(Self::Obj),
            "ply" => Some(Self::Ply),
            _ => None,
        }
    }
}

/// Source coordinate convention.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisRemap {
    #[default]
    YUp,
    /// Z-up sources: (x, y, z) becomes (x, z, -y).
    ZUp,
}

impl AxisRemap {
    pub fn apply(self, p: Vec3) -> Vec3 {
        match self {
            AxisRemap::YUp => p,
            AxisRemap::ZUp => Vec3::new(p.x, p.z, -p.y),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> EnvironmentError {
    EnvironmentError::Parse { line, message: message.into() }
}

fn push_polygon(tris: &mut Vec<[u32; 3]>, idx: &[u32], line: usize) -> Result<(), EnvironmentError> {
    match *idx {
        [a, b, c] => tris.push([a, b, c]),
        [a, b, c, d] => {
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
        _ => return Err(EnvironmentError::NonTriangulated { line, vertices: idx.len() }),
    }
    Ok(())
}

fn finish(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<TriangleMesh, EnvironmentError> {
    if triangles.is_empty() {
        return Err(EnvironmentError::EmptyScan);
    }
    let mut mesh = TriangleMesh::new();
    mesh.push_part("scan", &vertices, &triangles);
    Ok(mesh)
}

pub fn parse_obj(bytes: &[u8], remap: AxisRemap) -> Result<TriangleMesh, EnvironmentError> {
    let text = std::str::from_utf8(bytes).map_err(|e| parse_err(0, format!("not UTF-8: {e}")))?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut words = content.split_whitespace();
        match words.next() {
            Some("v") => {
                let c: Vec<f64> = words
                    .take(3)
                    .map(|w| w.parse::<f64>().map_err(|_| parse_err(line, format!("bad coordinate {w:?}"))))
                    .collect::<Result<_, _>>()?;
                if c.len() != 3 || c.iter().any(|x| !x.is_finite()) {
                    return Err(parse_err(line, "vertex needs three finite coordinates"));
                }
                vertices.push(remap.apply(Vec3::new(c[0], c[1], c[2])));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for w in words {
                    let head = w.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| parse_err(line, format!("bad face index {w:?}")))?;
                    let resolved = if i > 0 { i - 1 } else { vertices.len() as i64 + i };
                    if i == 0 || resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(parse_err(line, format!("face index {i} out of range")));
                    }
                    idx.push(resolved as u32);
                }
                push_polygon(&mut triangles, &idx, line)?;
            }
            _ => {}
        }
    }
    finish(vertices, triangles)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

fn ply_header(bytes: &[u8]) -> Result<(bool, Vec<Element>, usize, usize), EnvironmentError> {
    let mut pos = 0;
    let mut line_no = 0;
    let mut binary = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| parse_err(line_no + 1, "unterminated PLY header"))?;
        let line = std::str::from_utf8(&bytes[pos..pos + end])
            .map_err(|_| parse_err(line_no + 1, "header is not text"))?
            .trim();
        pos += end + 1;
        line_no += 1;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["ply"] if line_no == 1 => {}
            _ if line_no == 1 => return Err(parse_err(1, "missing ply magic")),
            ["format", "ascii", _] => binary = Some(false),
            ["format", "binary_little_endian", _] => binary = Some(true),
            ["format", f, ..] => return Err(parse_err(line_no, format!("unsupported format {f}"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| parse_err(line_no, "bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", c, i, name] => {
                let el = elements.last_mut().ok_or_else(|| parse_err(line_no, "property before element"))?;
                let bad = || parse_err(line_no, "bad list property type");
                el.props.push(Property::List {
                    name: name.to_string(),
                    count: Scalar::parse(c).ok_or_else(bad)?,
                    item: Scalar::parse(i).ok_or_else(bad)?,
                });
            }
            ["property", ty, name] => {
                let el = elements.last_mut().ok_or_else(|| parse_err(line_no, "property before element"))?;
                let ty = Scalar::parse(ty).ok_or_else(|| parse_err(line_no, format!("unknown type {ty}")))?;
                el.props.push(Property::Scalar { name: name.to_string(), ty });
            }
            ["end_header"] => break,
            _ => return Err(parse_err(line_no, format!("unexpected header line {line:?}"))),
        }
    }
    let binary = binary.ok_or_else(|| parse_err(line_no, "missing format line"))?;
    Ok((binary, elements, pos, line_no))
}

/// Streams element values from either encoding.
enum Body<'a> {
    Ascii { words: std::iter::Peekable<std::str::SplitWhitespace<'a>>, line: usize },
    Binary { bytes: &'a [u8], pos: usize },
}

impl Body<'_> {
    fn next(&mut self, ty: Scalar) -> Result<f64, EnvironmentError> {
        match self {
            Body::Ascii { words, line } => {
                let w = words.next().ok_or_else(|| parse_err(*line, "unexpected end of data"))?;
                w.parse::<f64>().map_err(|_| parse_err(*line, format!("bad number {w:?}")))
            }
            Body::Binary { bytes, pos } => {
                let n = ty.size();
                if *pos + n > bytes.len() {
                    return Err(parse_err(0, "unexpected end of binary data"));
                }
                let v = ty.read_le(&bytes[*pos..*pos + n]);
                *pos += n;
                Ok(v)
            }
        }
    }
}

pub fn parse_ply(bytes: &[u8], remap: AxisRemap) -> Result<TriangleMesh, EnvironmentError> {
    let (binary, elements, start, header_lines) = ply_header(bytes)?;
    let mut body = if binary {
        Body::Binary { bytes, pos: start }
    } else {
        let text = std::str::from_utf8(&bytes[start..]).map_err(|_| parse_err(header_lines + 1, "body is not text"))?;
        Body::Ascii { words: text.split_whitespace().peekable(), line: header_lines + 1 }
    };
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for el in &elements {
        for _ in 0..el.count {
            let mut xyz = [None; 3];
            let mut face: Option<Vec<u32>> = None;
            for p in &el.props {
                match p {
                    Property::Scalar { name, ty } => {
                        let v = body.next(*ty)?;
                        if let Some(k) = ["x", "y", "z"].iter().position(|a| a == name) {
                            xyz[k] = Some(v);
                        }
                    }
                    Property::List { name, count, item } => {
                        let n = body.next(*count)?;
                        if !(0.0..=1e6).contains(&n) {
                            return Err(parse_err(0, "bad list length"));
                        }
                        let items: Vec<f64> = (0..n as usize).map(|_| body.next(*item)).collect::<Result<_, _>>()?;
                        if name == "vertex_indices" || name == "vertex_index" {
                            face = Some(items.iter().map(|&i| i as u32).collect());
                        }
                    }
                }
            }
            if el.name == "vertex" {
                match xyz {
                    [Some(x), Some(y), Some(z)] if x.is_finite() && y.is_finite() && z.is_finite() => {
                        vertices.push(remap.apply(Vec3::new(x, y, z)))
                    }
                    _ => return Err(parse_err(0, "vertex without finite x, y, z")),
                }
            } else if el.name == "face" {
                let idx = face.ok_or_else(|| parse_err(0, "face without vertex_indices"))?;
                if idx.iter().any(|&i| i as usize >= vertices.len()) {
                    return Err(parse_err(0, "face index out of range"));
                }
                push_polygon(&mut triangles, &idx, 0)?;
            }
        }
        if let Body::Ascii { line, .. } = &mut body {
            *line += el.count;
        }
    }
    finish(vertices, triangles)
}

/// Serializes a mesh as ASCII OBJ (used for fixtures).
pub fn write_obj(mesh: &TriangleMesh) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obj_quads_are_split_and_ngons_rejected() {
        let m = parse_obj(b"v 0 0 0\nv 1 0 0\nv 1 0 1\nv 0 0 1\nf 1/1/1 2/2/2 3/3/3 4/4/4\n", AxisRemap::YUp).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
        let e = parse_obj(b"v 0 0 0\nv 1 0 0\nv 1 0 1\nv 0 0 1\nv 0 0 2\nf 1 2 3 4 5\n", AxisRemap::YUp).unwrap_err();
        assert!(matches!(e, EnvironmentError::NonTriangulated { line: 6, vertices: 5 }));
    }

    #[test]
    fn obj_negative_indices_and_errors() {
        let m = parse_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n", AxisRemap::YUp).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
        assert!(matches!(parse_obj(b"v 0 0\n", AxisRemap::YUp), Err(EnvironmentError::Parse { line: 1, .. })));
        assert!(matches!(parse_obj(b"v 0 0 0\nf 1 2 3\n", AxisRemap::YUp), Err(EnvironmentError::Parse { .. })));
        assert!(matches!(parse_obj(b"# nothing\n", AxisRemap::YUp), Err(EnvironmentError::EmptyScan)));
    }

    #[test]
    fn z_up_remap() {
        let m = parse_obj(b"v 1 2 3\nv 0 0 0\nv 0 0 1\nf 1 2 3\n", AxisRemap::ZUp).unwrap();
        assert_eq!(m.vertices[0], Vec3::new(1.0, 3.0, -2.0));
    }

    fn ply_header_text(format: &str) -> String {
        format!(
            "ply\nformat {format} 1.0\ncomment test\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n"
        )
    }

    #[test]
    fn ply_ascii_and_binary_agree() {
        let pts = [[0.0f32, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 1.0], [0.0, 0.0, 1.0]];
        let mut ascii = ply_header_text("ascii");
        for p in pts {
            ascii.push_str(&format!("{} {} {} 7\n", p[0], p[1], p[2]));
        }
        ascii.push_str("4 0 1 2 3\n");
        let mut bin = ply_header_text("binary_little_endian").into_bytes();
        for p in pts {
            for c in p {
                bin.extend_from_slice(&c.to_le_bytes());
            }
            bin.push(7);
        }
        bin.push(4);
        for i in 0..4i32 {
            bin.extend_from_slice(&i.to_le_bytes());
        }
        let a = parse_ply(ascii.as_bytes(), AxisRemap::YUp).unwrap();
        let b = parse_ply(&bin, AxisRemap::YUp).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.triangles.len(), 2);
    }

    #[test]
    fn ply_truncated_binary_is_an_error() {
        let mut bin = ply_header_text("binary_little_endian").into_bytes();
        bin.extend_from_slice(&[0, 0, 0]);
        assert!(matches!(parse_ply(&bin, AxisRemap::YUp), Err(EnvironmentError::Parse { .. })));
        assert!(matches!(parse_ply(b"plx\n", AxisRemap::YUp), Err(EnvironmentError::Parse { .. })));
    }

    #[test]
    fn obj_writer_round_trips() {
        let mut m = TriangleMesh::new();
        m.push_cuboid("scan", Vec3::zeros(), Vec3::new(1.0, 0.5, 0.25));
        let back = parse_obj(write_obj(&m).as_bytes(), AxisRemap::YUp).unwrap();
        assert_eq!(back, m);
    }
}
