//! Binary STL and ASCII OBJ writers, plus readers used for round-trip checks.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use legform_core::mesh::TriangleMesh;
use thiserror::Error;

pub const STL_HEADER_LEN: usize = 80;
pub const STL_TRIANGLE_LEN: usize = 50;

#[derive(Debug, Error)]
pub enum MeshFileError {
    #[error("io failure: {0}")]
    Io(#[from] io::Error),
    #[error("malformed {format} data: {message}")]
    Malformed { format: &'static str, message: String },
}

fn malformed(format: &'static str, message: impl Into<String>) -> MeshFileError {
    MeshFileError::Malformed { format, message: message.into() }
}

/// `84 + 50·n` bytes: header, triangle count, then normal and corners as
/// little-endian `f32` plus a zero attribute word per triangle.
pub fn stl_bytes(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(STL_HEADER_LEN + 4 + STL_TRIANGLE_LEN * mesh.triangle_count());
    let mut header = [0u8; STL_HEADER_LEN];
    let tag = b"legform binary stl";
    header[..tag.len()].copy_from_slice(tag);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangle_count() as u32).to_le_bytes());
    for (t, normal) in mesh.normals.iter().enumerate() {
        let corners = mesh.corners(t);
        for v in std::iter::once(normal).chain(corners.iter()) {
            for c in v {
                out.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

pub fn write_stl(mesh: &TriangleMesh, path: &Path) -> Result<usize, MeshFileError> {
    let bytes = stl_bytes(mesh);
    fs::write(path, &bytes)?;
    Ok(bytes.len())
}

/// Triangle soup from a binary STL: `(normal, corners)` per triangle.
pub fn parse_stl(bytes: &[u8]) -> Result<Vec<([f32; 3], [[f32; 3]; 3])>, MeshFileError> {
    if bytes.len() < STL_HEADER_LEN + 4 {
        return Err(malformed("stl", "shorter than header"));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().expect("4 bytes")) as usize;
    if bytes.len() != STL_HEADER_LEN + 4 + STL_TRIANGLE_LEN * count {
        return Err(malformed("stl", format!("{} bytes for {count} triangles", bytes.len())));
    }
    let f = |at: usize| f32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
    Ok((0..count)
        .map(|t| {
            let base = STL_HEADER_LEN + 4 + t * STL_TRIANGLE_LEN;
            let v = |k: usize| [f(base + 12 * k), f(base + 12 * k + 4), f(base + 12 * k + 8)];
            (v(0), [v(1), v(2), v(3)])
        })
        .collect())
}

/// `v x y z` lines then 1-based `f a b c` lines, six decimals.
pub fn obj_text(mesh: &TriangleMesh) -> String {
    let mut out = String::with_capacity(40 * (mesh.vertex_count() + mesh.triangle_count()));
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {:.6} {:.6} {:.6}", v[0], v[1], v[2]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

pub fn write_obj(mesh: &TriangleMesh, path: &Path) -> Result<usize, MeshFileError> {
    let text = obj_text(mesh);
    fs::write(path, text.as_bytes())?;
    Ok(text.len())
}

/// Reads the `v` and `f` records written by [`obj_text`].
pub fn parse_obj(text: &str) -> Result<TriangleMesh, MeshFileError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let xyz: Vec<f64> = fields
                    .map(|s| s.parse::<f64>().map_err(|e| malformed("obj", format!("line {}: {e}", n + 1))))
                    .collect::<Result<_, _>>()?;
                let [x, y, z] = xyz[..] else { return Err(malformed("obj", format!("line {}: expected 3 coordinates", n + 1))) };
                vertices.push([x, y, z]);
            }
            Some("f") => {
                let idx: Vec<u32> = fields
                    .map(|s| s.parse::<u32>().map_err(|e| malformed("obj", format!("line {}: {e}", n + 1))))
                    .collect::<Result<_, _>>()?;
                let [a, b, c] = idx[..] else { return Err(malformed("obj", format!("line {}: expected a triangle", n + 1))) };
                if a == 0 || b == 0 || c == 0 {
                    return Err(malformed("obj", format!("line {}: indices are 1-based", n + 1)));
                }
                triangles.push([a - 1, b - 1, c - 1]);
            }
            None => {}
            Some(other) if other.starts_with('#') => {}
            Some(other) => return Err(malformed("obj", format!("line {}: unsupported record {other:?}", n + 1))),
        }
    }
    TriangleMesh::new(vertices, triangles).map_err(|e| malformed("obj", e.to_string()))
}
