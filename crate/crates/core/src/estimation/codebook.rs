use faer::Mat;

use crate::geometry::ArrayGeometry;
use crate::linalg::{c64, cis, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodebookStructure {
    WholeArray,
    PerSubarray,
}

/// Sampled direction of one atom: direction cosines `(u, v)` along the
/// array's local x and y axes plus the integer grid coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub u: f64,
    pub v: f64,
    pub ix: usize,
    pub iy: usize,
}

/// Contiguous range of atoms that share one support (the whole array, or one
/// subarray).
#[derive(Debug, Clone, PartialEq)]
pub struct AtomBlock {
    pub atoms: std::ops::Range<usize>,
    pub grid_dims: (usize, usize),
    pub elements: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    /// `N x G`, unit-norm columns.
    pub atoms: CMat,
    pub grid: Vec<GridPoint>,
    pub structure: CodebookStructure,
    /// Owning subarray of every atom (per-subarray codebooks only).
    pub subarray_map: Option<Vec<usize>>,
    pub blocks: Vec<AtomBlock>,
}

impl Codebook {
    pub fn n_elements(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn block_of(&self, atom: usize) -> usize {
        match &self.subarray_map {
            Some(m) => m[atom],
            None => 0,
        }
    }
}

fn grid_size(oversampling: f64, n: usize) -> usize {
    ((oversampling * n as f64) - 1e-9).ceil().max(1.0) as usize
}

/// Uniform direction-cosine grid `-1 + 2k/G`, k = 0..G.
fn grid_value(k: usize, g: usize) -> f64 {
    -1.0 + 2.0 * k as f64 / g as f64
}

/// Appends the steering atoms of one block to `cols`, phases taken relative to
/// element `reference`.
fn push_block(
    geometry: &ArrayGeometry,
    elements: &[usize],
    reference: usize,
    dims: (usize, usize),
    cols: &mut Vec<(Vec<(usize, c64)>, GridPoint)>,
) {
    let pos = geometry.elements();
    let k = std::f64::consts::TAU / geometry.wavelength();
    let norm = 1.0 / (elements.len() as f64).sqrt();
    let p0 = pos[reference];
    for iy in 0..dims.1 {
        for ix in 0..dims.0 {
            let (u, v) = (grid_value(ix, dims.0), grid_value(iy, dims.1));
            let col = elements
                .iter()
                .map(|&n| {
                    let d = pos[n] - p0;
                    (n, cis(-k * (d.x() * u + d.y() * v)) * norm)
                })
                .collect();
            cols.push((col, GridPoint { u, v, ix, iy }));
        }
    }
}

fn assemble(
    n: usize,
    cols: Vec<(Vec<(usize, c64)>, GridPoint)>,
    structure: CodebookStructure,
    subarray_map: Option<Vec<usize>>,
    blocks: Vec<AtomBlock>,
) -> Codebook {
    let mut atoms = Mat::<c64>::zeros(n, cols.len());
    let mut grid = Vec::with_capacity(cols.len());
    for (j, (col, gp)) in cols.into_iter().enumerate() {
        for (i, z) in col {
            atoms[(i, j)] = z;
        }
        grid.push(gp);
    }
    Codebook {
        atoms,
        grid,
        structure,
        subarray_map,
        blocks,
    }
}

/// Whole-array steering atoms on `ceil(oversampling * n)` direction cosines
/// per planar axis, `n` being the element count along that axis.
pub fn build_far_field_codebook(geometry: &ArrayGeometry, oversampling: f64) -> Codebook {
    let l = geometry.layout();
    let dims = (
        grid_size(oversampling, l.k_cols * l.sub_cols),
        grid_size(oversampling, l.k_rows * l.sub_rows),
    );
    let elements: Vec<usize> = (0..geometry.len()).collect();
    let mut cols = Vec::with_capacity(dims.0 * dims.1);
    push_block(geometry, &elements, 0, dims, &mut cols);
    let blocks = vec![AtomBlock {
        atoms: 0..cols.len(),
        grid_dims: dims,
        elements,
    }];
    assemble(geometry.len(), cols, CodebookStructure::WholeArray, None, blocks)
}

/// Per-subarray steering atoms, each referenced at its subarray's reference
/// element and zero outside that subarray.
pub fn build_subarray_codebook(geometry: &ArrayGeometry, oversampling: f64) -> Codebook {
    let l = geometry.layout();
    let dims = (grid_size(oversampling, l.sub_cols), grid_size(oversampling, l.sub_rows));
    let mut cols = Vec::new();
    let mut map = Vec::new();
    let mut blocks = Vec::new();
    for p in 0..geometry.k_subarrays() {
        let elements = geometry.subarray_elements(p);
        let start = cols.len();
        push_block(geometry, &elements, geometry.subarray_reference()[p], dims, &mut cols);
        map.resize(cols.len(), p);
        blocks.push(AtomBlock {
            atoms: start..cols.len(),
            grid_dims: dims,
            elements,
        });
    }
    assemble(geometry.len(), cols, CodebookStructure::PerSubarray, Some(map), blocks)
}
