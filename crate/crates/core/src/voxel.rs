//! Dense voxel occupancy grids, 6-connected component labeling and the two
//! grid-level repairs used by the CPPN decoders (isolate + rescale).

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VoxelError {
    #[error("grid has no occupied voxels")]
    EmptyGrid,
    #[error("component {0} does not exist")]
    UnknownComponent(u32),
    #[error("expected a single connected component, found {0}")]
    MultipleComponents(usize),
    #[error("invalid grid dimensions: {0}")]
    InvalidDims(&'static str),
    #[error("occupancy has {got} cells, dimensions require {expected}")]
    CellCount { expected: usize, got: usize },
}

/// Lattice size and physical voxel edge length (millimetres).
///
/// `y` is the vertical axis; the leg spans from layer `0` to layer `ny - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridDims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub voxel_size: f64,
}

impl Default for GridDims {
    fn default() -> Self {
        Self { nx: 16, ny: 32, nz: 16, voxel_size: 5.0 }
    }
}

impl GridDims {
    pub fn new(nx: usize, ny: usize, nz: usize, voxel_size: f64) -> Result<Self, VoxelError> {
        let dims = Self { nx, ny, nz, voxel_size };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<(), VoxelError> {
        if self.nx == 0 || self.ny == 0 || self.nz == 0 {
            return Err(VoxelError::InvalidDims("every axis needs at least one voxel"));
        }
        if !(self.voxel_size > 0.0) || !self.voxel_size.is_finite() {
            return Err(VoxelError::InvalidDims("voxel size must be positive"));
        }
        Ok(())
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// Canonical linear index: x fastest, then z, then y.
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (z + self.nz * y)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let x = index % self.nx;
        let rest = index / self.nx;
        (x, rest / self.nz, rest % self.nz)
    }

    /// Indices of the in-bounds face neighbours of a cell.
    pub fn face_neighbors(&self, x: usize, y: usize, z: usize) -> impl Iterator<Item = usize> + '_ {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        let candidates = [
            (x > 0).then(|| (x - 1, y, z)),
            (x + 1 < nx).then(|| (x + 1, y, z)),
            (y > 0).then(|| (x, y - 1, z)),
            (y + 1 < ny).then(|| (x, y + 1, z)),
            (z > 0).then(|| (x, y, z - 1)),
            (z + 1 < nz).then(|| (x, y, z + 1)),
        ];
        candidates.into_iter().flatten().map(move |(a, b, c)| self.index(a, b, c))
    }
}

/// Boolean occupancy over a `nx × ny × nz` lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    dims: GridDims,
    cells: Vec<bool>,
}

impl VoxelGrid {
    pub fn empty(dims: GridDims) -> Self {
        Self { dims, cells: vec![false; dims.cell_count()] }
    }

    pub fn full(dims: GridDims) -> Self {
        Self { dims, cells: vec![true; dims.cell_count()] }
    }

    pub fn from_cells(dims: GridDims, cells: Vec<bool>) -> Result<Self, VoxelError> {
        dims.validate()?;
        if cells.len() != dims.cell_count() {
            return Err(VoxelError::CellCount { expected: dims.cell_count(), got: cells.len() });
        }
        Ok(Self { dims, cells })
    }

    pub fn from_fn(dims: GridDims, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let cells = (0..dims.cell_count())
            .map(|i| {
                let (x, y, z) = dims.coords(i);
                f(x, y, z)
            })
            .collect();
        Self { dims, cells }
    }

    /// Grid with exactly the listed cells occupied. Out-of-range coordinates panic.
    pub fn from_occupied(dims: GridDims, occupied: impl IntoIterator<Item = (usize, usize, usize)>) -> Self {
        let mut cells = vec![false; dims.cell_count()];
        for (x, y, z) in occupied {
            assert!(x < dims.nx && y < dims.ny && z < dims.nz, "voxel ({x},{y},{z}) out of bounds");
            cells[dims.index(x, y, z)] = true;
        }
        Self { dims, cells }
    }

    #[inline]
    pub fn dims(&self) -> GridDims {
        self.dims
    }

    #[inline]
    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.cells[self.dims.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        let i = self.dims.index(x, y, z);
        self.cells[i] = value;
    }

    /// Occupancy with out-of-bounds coordinates reading as empty.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize, z: isize) -> bool {
        let d = &self.dims;
        if x < 0 || y < 0 || z < 0 || x as usize >= d.nx || y as usize >= d.ny || z as usize >= d.nz {
            return false;
        }
        self.get(x as usize, y as usize, z as usize)
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    /// Coordinates of occupied cells in canonical order.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(i, _)| self.dims.coords(i))
    }

    /// Percentage of occupied cells, in `[0, 100]`.
    pub fn occupancy_percentage(&self) -> f64 {
        100.0 * self.occupied_count() as f64 / self.dims.cell_count() as f64
    }

    pub fn connected_components(&self) -> ComponentLabeling {
        ComponentLabeling::label(self)
    }

    /// True iff a single 6-connected component touches both `y = 0` and `y = ny - 1`.
    pub fn is_compliant(&self) -> bool {
        self.connected_components().spanning_component().is_some()
    }

    /// Grid containing only the cells labeled `id` in this grid's labeling.
    pub fn isolate_component(&self, id: u32) -> Result<VoxelGrid, VoxelError> {
        self.connected_components().isolate(id)
    }

    /// Nearest-neighbour resample of the single component's bounding box onto
    /// the whole lattice, independently per axis.
    pub fn scale_to_fill(&self) -> Result<VoxelGrid, VoxelError> {
        let labeling = self.connected_components();
        match labeling.component_count() {
            0 => return Err(VoxelError::EmptyGrid),
            1 => {}
            n => return Err(VoxelError::MultipleComponents(n)),
        }
        let bbox = labeling.bounding_box(1).ok_or(VoxelError::EmptyGrid)?;
        let d = self.dims;
        let xs: Vec<usize> = (0..d.nx).map(|c| resample(c, d.nx, bbox.min[0], bbox.max[0])).collect();
        let ys: Vec<usize> = (0..d.ny).map(|c| resample(c, d.ny, bbox.min[1], bbox.max[1])).collect();
        let zs: Vec<usize> = (0..d.nz).map(|c| resample(c, d.nz, bbox.min[2], bbox.max[2])).collect();
        Ok(VoxelGrid::from_fn(d, |x, y, z| self.get(xs[x], ys[y], zs[z])))
    }

    /// Layer-by-layer text dump, `#` full and `.` empty; one block per `y`
    /// layer (bottom first), rows are `z`, columns are `x`.
    pub fn to_layer_text(&self) -> String {
        let d = self.dims;
        let mut out = String::with_capacity((d.nx + 1) * d.nz * d.ny + 8 * d.ny);
        for y in 0..d.ny {
            let _ = writeln!(out, "y={y}");
            for z in 0..d.nz {
                for x in 0..d.nx {
                    out.push(if self.get(x, y, z) { '#' } else { '.' });
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Source coordinate for output coordinate `coord` along an axis of `extent`
/// cells when mapping the range `[lo, hi]` onto the whole axis.
fn resample(coord: usize, extent: usize, lo: usize, hi: usize) -> usize {
    let span = (hi - lo + 1) as f64;
    let offset = libm::floor((coord as f64 + 0.5) / extent as f64 * span) as usize;
    (lo + offset).min(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub min: [usize; 3],
    pub max: [usize; 3],
}

impl BoundingBox {
    fn point(x: usize, y: usize, z: usize) -> Self {
        Self { min: [x, y, z], max: [x, y, z] }
    }

    fn include(&mut self, x: usize, y: usize, z: usize) {
        for (axis, v) in [x, y, z].into_iter().enumerate() {
            self.min[axis] = self.min[axis].min(v);
            self.max[axis] = self.max[axis].max(v);
        }
    }
}

/// Component labels under face adjacency.
///
/// Ids start at 1 and are assigned in ascending canonical index of each
/// component's first cell; `0` marks empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLabeling {
    dims: GridDims,
    labels: Vec<u32>,
    sizes: Vec<usize>,
    boxes: Vec<BoundingBox>,
}

impl ComponentLabeling {
    fn label(grid: &VoxelGrid) -> Self {
        let dims = grid.dims;
        let mut labels = vec![0u32; dims.cell_count()];
        let mut sizes = Vec::new();
        let mut boxes = Vec::new();
        let mut queue = VecDeque::new();

        for start in 0..grid.cells.len() {
            if !grid.cells[start] || labels[start] != 0 {
                continue;
            }
            let id = sizes.len() as u32 + 1;
            let (sx, sy, sz) = dims.coords(start);
            let mut bbox = BoundingBox::point(sx, sy, sz);
            let mut size = 0usize;
            labels[start] = id;
            queue.push_back(start);
            while let Some(cell) = queue.pop_front() {
                size += 1;
                let (x, y, z) = dims.coords(cell);
                bbox.include(x, y, z);
                for n in dims.face_neighbors(x, y, z) {
                    if grid.cells[n] && labels[n] == 0 {
                        labels[n] = id;
                        queue.push_back(n);
                    }
                }
            }
            sizes.push(size);
            boxes.push(bbox);
        }
        Self { dims, labels, sizes, boxes }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    /// Label per cell in canonical order (0 = empty).
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_at(&self, x: usize, y: usize, z: usize) -> u32 {
        self.labels[self.dims.index(x, y, z)]
    }

    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn size(&self, id: u32) -> Option<usize> {
        self.sizes.get((id as usize).checked_sub(1)?).copied()
    }

    /// `(id, voxel count)` pairs in ascending id order.
    pub fn sizes(&self) -> impl Iterator<Item = (u32, usize)> + '_ {
        self.sizes.iter().enumerate().map(|(i, &s)| (i as u32 + 1, s))
    }

    pub fn bounding_box(&self, id: u32) -> Option<BoundingBox> {
        self.boxes.get((id as usize).checked_sub(1)?).copied()
    }

    /// First component (lowest id) reaching both the bottom and top layer.
    pub fn spanning_component(&self) -> Option<u32> {
        let top = self.dims.ny - 1;
        self.boxes
            .iter()
            .position(|b| b.min[1] == 0 && b.max[1] == top)
            .map(|i| i as u32 + 1)
    }

    /// Id of the largest component, smallest id on ties.
    pub fn largest_component(&self) -> Result<u32, VoxelError> {
        let mut best: Option<(u32, usize)> = None;
        for (id, size) in self.sizes() {
            if best.map_or(true, |(_, s)| size > s) {
                best = Some((id, size));
            }
        }
        best.map(|(id, _)| id).ok_or(VoxelError::EmptyGrid)
    }

    pub fn isolate(&self, id: u32) -> Result<VoxelGrid, VoxelError> {
        if id == 0 || id as usize > self.sizes.len() {
            return Err(VoxelError::UnknownComponent(id));
        }
        let cells = self.labels.iter().map(|&l| l == id).collect();
        Ok(VoxelGrid { dims: self.dims, cells })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(nx: usize, ny: usize, nz: usize) -> GridDims {
        GridDims::new(nx, ny, nz, 5.0).unwrap()
    }

    #[test]
    fn occupancy_percentage_cases() {
        let d = GridDims::default();
        assert_eq!(VoxelGrid::empty(d).occupancy_percentage(), 0.0);
        assert_eq!(VoxelGrid::full(d).occupancy_percentage(), 100.0);
        // 8192-cell grid, bottom half occupied: 16*16*16 = 4096 cells
        let half = VoxelGrid::from_fn(d, |_, y, _| y < 16);
        let counted = (0..d.ny)
            .flat_map(|y| (0..d.nz).flat_map(move |z| (0..d.nx).map(move |x| (x, y, z))))
            .filter(|&(x, y, z)| half.get(x, y, z))
            .count();
        assert_eq!(counted, 4096);
        assert_eq!(half.occupancy_percentage(), 50.0);
    }

    #[test]
    fn canonical_index_round_trip() {
        let d = dims(3, 4, 5);
        for i in 0..d.cell_count() {
            let (x, y, z) = d.coords(i);
            assert_eq!(d.index(x, y, z), i);
        }
        assert_eq!(d.index(1, 0, 0), 1);
        assert_eq!(d.index(0, 0, 1), 3);
        assert_eq!(d.index(0, 1, 0), 15);
    }

    #[test]
    fn single_voxel_component() {
        let g = VoxelGrid::from_occupied(dims(4, 4, 4), [(1, 2, 3)]);
        let l = g.connected_components();
        assert_eq!(l.component_count(), 1);
        assert_eq!(l.size(1), Some(1));
    }

    #[test]
    fn edge_and_corner_contacts_are_separate() {
        let edge = VoxelGrid::from_occupied(dims(4, 4, 4), [(0, 0, 0), (1, 1, 0)]);
        assert_eq!(edge.connected_components().component_count(), 2);
        let corner = VoxelGrid::from_occupied(dims(4, 4, 4), [(0, 0, 0), (1, 1, 1)]);
        assert_eq!(corner.connected_components().component_count(), 2);
    }

    #[test]
    fn labels_follow_canonical_order() {
        // (3,0,0) has index 3, (0,1,0) index 16: the x=3 cell is labeled first
        let g = VoxelGrid::from_occupied(dims(4, 4, 4), [(0, 1, 0), (3, 0, 0)]);
        let l = g.connected_components();
        assert_eq!(l.label_at(3, 0, 0), 1);
        assert_eq!(l.label_at(0, 1, 0), 2);
    }

    #[test]
    fn compliance_cases() {
        let d = dims(4, 8, 4);
        let column = VoxelGrid::from_fn(d, |x, _, z| x == 1 && z == 1);
        assert!(column.is_compliant());
        let broken = VoxelGrid::from_fn(d, |x, y, z| x == 1 && z == 1 && y != 4);
        assert!(!broken.is_compliant());
        let split = VoxelGrid::from_fn(d, |x, y, z| (x == 0 && z == 0 && y < 4) || (x == 3 && z == 3 && y >= 4));
        assert!(!split.is_compliant());
        assert!(!VoxelGrid::empty(d).is_compliant());
    }

    #[test]
    fn largest_component_tie_break() {
        let d = dims(8, 1, 1);
        // sizes {1: 2, 2: 3}
        let g = VoxelGrid::from_fn(d, |x, _, _| matches!(x, 0 | 1 | 3 | 4 | 5));
        assert_eq!(g.connected_components().largest_component(), Ok(2));
        // sizes {1: 2, 2: 2}
        let tie = VoxelGrid::from_fn(d, |x, _, _| matches!(x, 0 | 1 | 3 | 4));
        assert_eq!(tie.connected_components().largest_component(), Ok(1));
        assert_eq!(VoxelGrid::empty(d).connected_components().largest_component(), Err(VoxelError::EmptyGrid));
    }

    #[test]
    fn isolate_cases() {
        let d = dims(8, 1, 1);
        let g = VoxelGrid::from_fn(d, |x, _, _| matches!(x, 0 | 1 | 3 | 4 | 5));
        let big = g.isolate_component(2).unwrap();
        assert_eq!(big.occupied().map(|c| c.0).collect::<Vec<_>>(), vec![3, 4, 5]);
        assert_eq!(big.connected_components().component_count(), 1);
        assert_eq!(g.isolate_component(3), Err(VoxelError::UnknownComponent(3)));
        assert_eq!(g.isolate_component(0), Err(VoxelError::UnknownComponent(0)));

        let single = VoxelGrid::from_fn(d, |x, _, _| x < 3);
        assert_eq!(single.isolate_component(1).unwrap(), single);
    }

    #[test]
    fn scale_column_doubles_height() {
        let d = dims(16, 32, 16);
        let col = VoxelGrid::from_fn(d, |x, y, z| x == 7 && z == 8 && (8..24).contains(&y));
        let scaled = col.scale_to_fill().unwrap();
        // a 1x16x1 box fills the whole lattice horizontally as well
        assert_eq!(scaled, VoxelGrid::full(d));

        let thin = dims(1, 32, 1);
        let col = VoxelGrid::from_fn(thin, |_, y, _| (8..24).contains(&y));
        let scaled = col.scale_to_fill().unwrap();
        assert_eq!(scaled.occupied_count(), 32);
        assert!(scaled.is_compliant());
    }

    #[test]
    fn scale_identity_when_spanning() {
        let d = dims(4, 6, 4);
        let g = VoxelGrid::from_fn(d, |x, y, z| (x == 0 && z == 0) || (y == 5 && z == 0) || (x == 3 && z <= 3 && y == 5) || (x == 3 && y == 5));
        let l = g.connected_components();
        assert_eq!(l.component_count(), 1);
        let b = l.bounding_box(1).unwrap();
        assert_eq!((b.min, b.max), ([0, 0, 0], [3, 5, 3]));
        assert_eq!(g.scale_to_fill().unwrap(), g);
    }

    #[test]
    fn scale_errors() {
        let d = dims(4, 4, 4);
        assert_eq!(VoxelGrid::empty(d).scale_to_fill(), Err(VoxelError::EmptyGrid));
        let two = VoxelGrid::from_occupied(d, [(0, 0, 0), (2, 2, 2)]);
        assert_eq!(two.scale_to_fill(), Err(VoxelError::MultipleComponents(2)));
    }

    #[test]
    fn layer_text_golden() {
        let g = VoxelGrid::from_occupied(dims(3, 2, 2), [(0, 0, 0), (2, 1, 1)]);
        assert_eq!(g.to_layer_text(), "y=0\n#..\n...\ny=1\n...\n..#\n");
    }

    #[test]
    fn invalid_dims_rejected() {
        assert!(GridDims::new(0, 1, 1, 5.0).is_err());
        assert!(GridDims::new(1, 1, 1, 0.0).is_err());
        assert!(VoxelGrid::from_cells(dims(2, 2, 2), vec![false; 7]).is_err());
    }
}
