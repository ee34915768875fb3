//! Exposed-face surface extraction and rigid transforms.
//!
//! Every occupied voxel face whose neighbour is empty (or outside the grid)
//! becomes a quad split into two triangles. Vertices are shared between faces
//! that meet around a corner; where voxels touch only along an edge or at a
//! point the corner is split so each sheet of surface keeps its own vertex
//! and every edge still borders exactly two triangles.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::sim::cross;
use crate::voxel::VoxelGrid;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeshError {
    #[error("grid has no occupied voxels")]
    EmptyGrid,
    #[error("triangle {triangle} references vertex {index} of {vertex_count}")]
    IndexOutOfRange { triangle: usize, index: u32, vertex_count: usize },
    #[error("edge ({0}, {1}) is not shared by exactly two consistently oriented triangles")]
    OpenEdge(u32, u32),
    #[error("invalid transform: {0}")]
    InvalidTransform(&'static str),
}

/// Indexed triangle mesh in millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    /// Counter-clockwise when viewed from outside.
    pub triangles: Vec<[u32; 3]>,
    pub normals: Vec<[f64; 3]>,
}

fn unit_normal(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let n = cross(u, v);
    let len = libm::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
    if len > 0.0 {
        [n[0] / len, n[1] / len, n[2] / len]
    } else {
        [0.0; 3]
    }
}

impl TriangleMesh {
    /// Builds a mesh and derives normals from the winding.
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i as usize >= vertices.len()) {
                return Err(MeshError::IndexOutOfRange { triangle: t, index, vertex_count: vertices.len() });
            }
        }
        let mut mesh = Self { vertices, triangles, normals: Vec::new() };
        mesh.recompute_normals();
        Ok(mesh)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn recompute_normals(&mut self) {
        self.normals = self
            .triangles
            .iter()
            .map(|t| unit_normal(self.vertices[t[0] as usize], self.vertices[t[1] as usize], self.vertices[t[2] as usize]))
            .collect();
    }

    pub fn corners(&self, triangle: usize) -> [[f64; 3]; 3] {
        self.triangles[triangle].map(|i| self.vertices[i as usize])
    }

    /// Axis-aligned bounds `(min, max)`; `None` for a mesh without vertices.
    pub fn bounds(&self) -> Option<([f64; 3], [f64; 3])> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(mut lo, mut hi), v| {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
            (lo, hi)
        }))
    }

    /// Edge-pairing audit: each undirected edge is used by exactly two
    /// triangles, once in each direction.
    pub fn audit_edges(&self) -> Result<(), MeshError> {
        let mut directed: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                *directed.entry((t[k], t[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        for (&(a, b), &n) in &directed {
            if n != 1 || directed.get(&(b, a)) != Some(&1) {
                return Err(MeshError::OpenEdge(a, b));
            }
        }
        Ok(())
    }

    /// Scale per axis, then rotate by `angle` radians about `axis`, then translate.
    pub fn transform(&self, scale: [f64; 3], axis: [f64; 3], angle: f64, translation: [f64; 3]) -> Result<Self, MeshError> {
        if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(MeshError::InvalidTransform("scale factors must be positive"));
        }
        let len = libm::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
        if angle != 0.0 && !(len > 0.0) {
            return Err(MeshError::InvalidTransform("rotation axis must be non-zero"));
        }
        let rotation = if angle == 0.0 { None } else { Some(rotation_matrix([axis[0] / len, axis[1] / len, axis[2] / len], angle)) };
        let vertices = self
            .vertices
            .iter()
            .map(|v| {
                let s = [v[0] * scale[0], v[1] * scale[1], v[2] * scale[2]];
                let r = match &rotation {
                    Some(m) => [
                        m[0][0] * s[0] + m[0][1] * s[1] + m[0][2] * s[2],
                        m[1][0] * s[0] + m[1][1] * s[1] + m[1][2] * s[2],
                        m[2][0] * s[0] + m[2][1] * s[1] + m[2][2] * s[2],
                    ],
                    None => s,
                };
                [r[0] + translation[0], r[1] + translation[1], r[2] + translation[2]]
            })
            .collect();
        let mut mesh = Self { vertices, triangles: self.triangles.clone(), normals: Vec::new() };
        mesh.recompute_normals();
        Ok(mesh)
    }
}

/// Rodrigues rotation matrix for a unit axis.
fn rotation_matrix(k: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = libm::sincos(angle);
    let t = 1.0 - c;
    [
        [c + k[0] * k[0] * t, k[0] * k[1] * t - k[2] * s, k[0] * k[2] * t + k[1] * s],
        [k[1] * k[0] * t + k[2] * s, c + k[1] * k[1] * t, k[1] * k[2] * t - k[0] * s],
        [k[2] * k[0] * t - k[1] * s, k[2] * k[1] * t + k[0] * s, c + k[2] * k[2] * t],
    ]
}

type Point = [usize; 3];
type EdgeKey = (Point, Point);

fn edge_key(a: Point, b: Point) -> EdgeKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Copy)]
struct Face {
    cell: [isize; 3],
    /// The empty (or out-of-bounds) cell this face looks into.
    outside: [isize; 3],
    /// Corner lattice points, counter-clockwise from outside.
    corners: [Point; 4],
}

fn face_corners(cell: Point, axis: usize, positive: bool) -> [Point; 4] {
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let uv: [(usize, usize); 4] = if positive { [(0, 0), (1, 0), (1, 1), (0, 1)] } else { [(0, 0), (0, 1), (1, 1), (1, 0)] };
    uv.map(|(du, dv)| {
        let mut p = cell;
        p[axis] += positive as usize;
        p[u] += du;
        p[v] += dv;
        p
    })
}

/// Exposed voxel faces in canonical cell order, then `-x, +x, -y, +y, -z, +z`.
fn exposed_faces(grid: &VoxelGrid) -> Vec<Face> {
    let mut faces = Vec::new();
    for (x, y, z) in grid.occupied() {
        let cell = [x as isize, y as isize, z as isize];
        for axis in 0..3 {
            for positive in [false, true] {
                let mut n = cell;
                n[axis] += if positive { 1 } else { -1 };
                if !grid.get_signed(n[0], n[1], n[2]) {
                    faces.push(Face { cell, outside: n, corners: face_corners([x, y, z], axis, positive) });
                }
            }
        }
    }
    faces
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

struct Surface {
    faces: Vec<Face>,
    /// Faces along each lattice edge: two for a manifold edge, four where
    /// two voxels (or two gaps) meet only along the edge.
    edges: BTreeMap<EdgeKey, Vec<usize>>,
    /// `(face, slot)` incidences per corner, corners in sorted order.
    corners: Vec<(Point, Vec<(usize, usize)>)>,
}

impl Surface {
    fn new(faces: Vec<Face>) -> Self {
        let mut edges: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
        let mut corners: BTreeMap<(usize, usize, usize), (Point, Vec<(usize, usize)>)> = BTreeMap::new();
        for (f, face) in faces.iter().enumerate() {
            for slot in 0..4 {
                let c = face.corners[slot];
                edges.entry(edge_key(c, face.corners[(slot + 1) % 4])).or_default().push(f);
                corners.entry((c[1], c[2], c[0])).or_insert_with(|| (c, Vec::new())).1.push((f, slot));
            }
        }
        Self { faces, edges, corners: corners.into_values().collect() }
    }

    /// Whether `f` and `g` continue into each other across `edge`. A
    /// non-manifold edge pairs faces of the same voxel, or faces of the same
    /// gap when the edge is flipped.
    fn paired(&self, edge: &EdgeKey, f: usize, g: usize, flipped: &BTreeSet<EdgeKey>) -> bool {
        let sharing = &self.edges[edge];
        if sharing.len() == 2 {
            return true;
        }
        let (a, b) = (&self.faces[f], &self.faces[g]);
        if flipped.contains(edge) {
            a.outside == b.outside
        } else {
            a.cell == b.cell
        }
    }

    /// Vertex id per face corner: faces around a corner that continue into
    /// each other share one vertex.
    fn assign_vertices(&self, flipped: &BTreeSet<EdgeKey>) -> (Vec<[u32; 4]>, Vec<Point>) {
        let mut face_vertex = vec![[u32::MAX; 4]; self.faces.len()];
        let mut points = Vec::new();
        for (corner, incident) in &self.corners {
            let mut parent: Vec<usize> = (0..incident.len()).collect();
            for (i, &(f, slot)) in incident.iter().enumerate() {
                let face = &self.faces[f];
                for end in [face.corners[(slot + 1) % 4], face.corners[(slot + 3) % 4]] {
                    let edge = edge_key(*corner, end);
                    for &g in &self.edges[&edge] {
                        if g == f || !self.paired(&edge, f, g, flipped) {
                            continue;
                        }
                        let j = incident.iter().position(|&(h, _)| h == g).expect("edge face touches corner");
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
            let mut ids: Vec<(usize, u32)> = Vec::new();
            for (i, &(f, slot)) in incident.iter().enumerate() {
                let root = find(&mut parent, i);
                let id = match ids.iter().find(|(r, _)| *r == root) {
                    Some(&(_, id)) => id,
                    None => {
                        let id = points.len() as u32;
                        points.push(*corner);
                        ids.push((root, id));
                        id
                    }
                };
                face_vertex[f][slot] = id;
            }
        }
        (face_vertex, points)
    }

    /// Non-manifold edges whose two face pairs ended up on the same vertex pair.
    fn collapsed_edges(&self, face_vertex: &[[u32; 4]]) -> Vec<EdgeKey> {
        let ends = |f: usize, edge: &EdgeKey| {
            let slot = (0..4).find(|&k| edge_key(self.faces[f].corners[k], self.faces[f].corners[(k + 1) % 4]) == *edge);
            let k = slot.expect("face borders edge");
            let (a, b) = (face_vertex[f][k], face_vertex[f][(k + 1) % 4]);
            (a.min(b), a.max(b))
        };
        self.edges
            .iter()
            .filter(|(_, faces)| faces.len() == 4)
            .filter(|(edge, faces)| faces.iter().all(|&f| ends(f, edge) == ends(faces[0], edge)))
            .map(|(edge, _)| *edge)
            .collect()
    }
}

/// Passes of pairing repair before giving up.
const MAX_REPAIR_PASSES: usize = 64;

/// Surface mesh of the occupied voxels with the grid origin at `(0,0,0)`.
///
/// Where two voxels meet only along an edge, the faces on that edge are
/// paired per voxel; if both edge end points would still collapse onto one
/// vertex each, the edge is re-paired per gap instead.
pub fn voxel_to_mesh(grid: &VoxelGrid) -> Result<TriangleMesh, MeshError> {
    if grid.is_empty() {
        return Err(MeshError::EmptyGrid);
    }
    let surface = Surface::new(exposed_faces(grid));
    let mut flipped = BTreeSet::new();
    let (mut face_vertex, mut points) = surface.assign_vertices(&flipped);
    for _ in 0..MAX_REPAIR_PASSES {
        let collapsed = surface.collapsed_edges(&face_vertex);
        if collapsed.is_empty() {
            break;
        }
        for e in collapsed {
            if !flipped.remove(&e) {
                flipped.insert(e);
            }
        }
        (face_vertex, points) = surface.assign_vertices(&flipped);
    }

    let s = grid.dims().voxel_size;
    let vertices = points.iter().map(|c| [c[0] as f64 * s, c[1] as f64 * s, c[2] as f64 * s]).collect();
    let mut triangles = Vec::with_capacity(face_vertex.len() * 2);
    for v in &face_vertex {
        triangles.push([v[0], v[1], v[2]]);
        triangles.push([v[0], v[2], v[3]]);
    }
    let mesh = TriangleMesh::new(vertices, triangles)?;
    mesh.audit_edges()?;
    Ok(mesh)
}
