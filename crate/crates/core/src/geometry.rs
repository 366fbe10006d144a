//! Array geometry: compact uniform planar arrays, widely-spaced multi-subarray
//! layouts, rigid placement in a scene, apertures and Rayleigh distances.
//!
//! Every array lives in its own local frame, lies in the local `z = 0` plane
//! and is centred on the local origin. Elements are stored subarray-major and
//! row-major inside each subarray, so the first element of a subarray is its
//! lowest-row, lowest-column element and serves as the subarray reference.

use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wavelength in metres for a carrier given in GHz.
pub fn wavelength_from_ghz(frequency_ghz: f64) -> f64 {
    SPEED_OF_LIGHT / (frequency_ghz * 1e9)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        (*self - *other).norm()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0).then(|| *self * (1.0 / n))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

/// Proper rotation stored as a row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation([[f64; 3]; 3]);

impl Rotation {
    pub const IDENTITY: Rotation = Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Rejects matrices that are not orthonormal with determinant +1.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        let r = Rotation(m);
        let det = r.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "rotation determinant {det} is not +1"
            )));
        }
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                if (dot - expected).abs() > 1e-9 {
                    return Err(Error::invalid("rotation matrix is not orthonormal"));
                }
            }
        }
        Ok(r)
    }

    /// Right-handed rotation by `angle` radians about `axis`.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self> {
        let k = axis
            .normalized()
            .ok_or_else(|| Error::invalid("rotation axis must be nonzero"))?;
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let [x, y, z] = k.0;
        Ok(Rotation([
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]))
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        let m = &self.0;
        Vec3([
            m[0][0] * v.0[0] + m[0][1] * v.0[1] + m[0][2] * v.0[2],
            m[1][0] * v.0[0] + m[1][1] * v.0[1] + m[1][2] * v.0[2],
            m[2][0] * v.0[0] + m[2][1] * v.0[1] + m[2][2] * v.0[2],
        ])
    }

    /// `self * other`: applies `other` first.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        let (a, b) = (&self.0, &other.0);
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        Rotation(m)
    }

    /// Global-to-local direction mapping.
    pub fn apply_inverse(&self, v: &Vec3) -> Vec3 {
        let m = &self.0;
        Vec3([
            m[0][0] * v.0[0] + m[1][0] * v.0[1] + m[2][0] * v.0[2],
            m[0][1] * v.0[0] + m[1][1] * v.0[1] + m[2][1] * v.0[2],
            m[0][2] * v.0[0] + m[1][2] * v.0[1] + m[2][2] * v.0[2],
        ])
    }
}

/// Rigid placement of an array's local frame in the global scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub origin: Vec3,
    pub orientation: Rotation,
}

impl Pose {
    pub fn new(origin: Vec3, orientation: Rotation) -> Self {
        Pose {
            origin,
            orientation,
        }
    }

    pub fn identity() -> Self {
        Pose::new(Vec3::ZERO, Rotation::IDENTITY)
    }

    /// Array at `origin` whose boresight (local +z) points along `-z`,
    /// i.e. facing an array placed at the global origin with identity pose.
    pub fn facing_back(origin: Vec3) -> Self {
        // half turn about the y axis
        let r = Rotation([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]);
        Pose::new(origin, r)
    }

    pub fn to_global(&self, local: &Vec3) -> Vec3 {
        self.orientation.apply(local) + self.origin
    }
}

/// Grid layout parameters recorded by the constructors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLayout {
    pub k_rows: usize,
    pub k_cols: usize,
    pub sub_rows: usize,
    pub sub_cols: usize,
    /// Element pitch inside a subarray (m).
    pub intra_spacing: f64,
    /// Pitch of the subarray reference points (m).
    pub subarray_spacing: f64,
}

/// Element positions, subarray partition and wavelength of one array.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    wavelength: f64,
    elements: Vec<Vec3>,
    subarray_index: Vec<usize>,
    /// (row, col) of every element inside its subarray grid.
    grid_position: Vec<(usize, usize)>,
    k_subarrays: usize,
    subarray_reference: Vec<usize>,
    layout: GridLayout,
}

/// A set of elements sharing one plane-wave reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementBlock {
    pub reference: usize,
    pub elements: Vec<usize>,
}

impl ArrayGeometry {
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn elements(&self) -> &[Vec3] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn subarray_index(&self) -> &[usize] {
        &self.subarray_index
    }

    pub fn k_subarrays(&self) -> usize {
        self.k_subarrays
    }

    pub fn subarray_reference(&self) -> &[usize] {
        &self.subarray_reference
    }

    pub fn grid_position(&self) -> &[(usize, usize)] {
        &self.grid_position
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    /// Element indices of subarray `p`, in storage order.
    pub fn subarray_elements(&self, p: usize) -> Vec<usize> {
        self.subarray_index
            .iter()
            .enumerate()
            .filter_map(|(n, &s)| (s == p).then_some(n))
            .collect()
    }

    /// Stable fingerprint of wavelength and element positions, used to tag
    /// channel matrices with the geometries that produced them.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.wavelength.to_bits().hash(&mut h);
        for e in &self.elements {
            for c in e.0 {
                c.to_bits().hash(&mut h);
            }
        }
        self.subarray_index.hash(&mut h);
        h.finish()
    }

    /// Partition used by the hybrid model: each physical subarray split into
    /// `split x split` equal virtual subarrays, each referenced at its own
    /// lowest-row, lowest-column element.
    pub fn blocks(&self, split: usize) -> Result<Vec<ElementBlock>> {
        let GridLayout {
            sub_rows, sub_cols, ..
        } = self.layout;
        if split == 0 || sub_rows % split != 0 || sub_cols % split != 0 {
            return Err(Error::invalid(format!(
                "virtual split {split} does not divide the {sub_rows}x{sub_cols} subarray grid"
            )));
        }
        let (br, bc) = (sub_rows / split, sub_cols / split);
        let per_sub = split * split;
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); self.k_subarrays * per_sub];
        for (n, (&p, &(r, c))) in self
            .subarray_index
            .iter()
            .zip(&self.grid_position)
            .enumerate()
        {
            blocks[p * per_sub + (r / br) * split + c / bc].push(n);
        }
        Ok(blocks
            .into_iter()
            .map(|elements| {
                let reference = *elements
                    .iter()
                    .min_by_key(|&&n| self.grid_position[n])
                    .expect("virtual blocks are non-empty");
                ElementBlock {
                    reference,
                    elements,
                }
            })
            .collect())
    }

    /// Same array with elements reordered: new element `i` is old `order[i]`.
    pub fn with_element_order(&self, order: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::invalid("element order is not a permutation"));
        }
        let mut inverse = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        Ok(ArrayGeometry {
            wavelength: self.wavelength,
            elements: order.iter().map(|&i| self.elements[i]).collect(),
            subarray_index: order.iter().map(|&i| self.subarray_index[i]).collect(),
            grid_position: order.iter().map(|&i| self.grid_position[i]).collect(),
            k_subarrays: self.k_subarrays,
            subarray_reference: self.subarray_reference.iter().map(|&r| inverse[r]).collect(),
            layout: self.layout,
        })
    }

    /// Same array with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid("scale factor must be positive"));
        }
        let mut out = self.clone();
        for e in &mut out.elements {
            *e = *e * factor;
        }
        out.layout.intra_spacing *= factor;
        out.layout.subarray_spacing *= factor;
        Ok(out)
    }
}

fn check_count(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::invalid(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Compact uniform planar array with `n_rows x n_cols` elements.
pub fn build_upa(
    n_rows: usize,
    n_cols: usize,
    spacing_in_wavelengths: f64,
    wavelength: f64,
) -> Result<ArrayGeometry> {
    check_count("n_rows", n_rows)?;
    check_count("n_cols", n_cols)?;
    check_positive("spacing", spacing_in_wavelengths)?;
    check_positive("wavelength", wavelength)?;
    let d = spacing_in_wavelengths * wavelength;
    layout_grid(
        GridLayout {
            k_rows: 1,
            k_cols: 1,
            sub_rows: n_rows,
            sub_cols: n_cols,
            intra_spacing: d,
            subarray_spacing: d * n_rows.max(n_cols) as f64,
        },
        wavelength,
    )
}

/// Widely-spaced multi-subarray array: a `k_rows x k_cols` super-grid of
/// `sub_rows x sub_cols` subarrays.
pub fn build_wsms(
    k_rows: usize,
    k_cols: usize,
    sub_rows: usize,
    sub_cols: usize,
    intra_spacing_wl: f64,
    subarray_spacing_wl: f64,
    wavelength: f64,
) -> Result<ArrayGeometry> {
    for (name, v) in [
        ("k_rows", k_rows),
        ("k_cols", k_cols),
        ("sub_rows", sub_rows),
        ("sub_cols", sub_cols),
    ] {
        check_count(name, v)?;
    }
    check_positive("intra_spacing_wl", intra_spacing_wl)?;
    check_positive("wavelength", wavelength)?;
    let multi = k_rows * k_cols > 1;
    if multi {
        check_positive("subarray_spacing_wl", subarray_spacing_wl)?;
        let min_pitch = intra_spacing_wl * sub_rows.max(sub_cols) as f64;
        if subarray_spacing_wl < min_pitch * (1.0 - 1e-12) {
            return Err(Error::invalid(format!(
                "subarray spacing {subarray_spacing_wl} wavelengths overlaps subarrays \
                 (minimum {min_pitch})"
            )));
        }
    }
    let intra = intra_spacing_wl * wavelength;
    let pitch = if multi {
        subarray_spacing_wl * wavelength
    } else {
        intra * sub_rows.max(sub_cols) as f64
    };
    layout_grid(
        GridLayout {
            k_rows,
            k_cols,
            sub_rows,
            sub_cols,
            intra_spacing: intra,
            subarray_spacing: pitch,
        },
        wavelength,
    )
}

fn layout_grid(layout: GridLayout, wavelength: f64) -> Result<ArrayGeometry> {
    let GridLayout {
        k_rows,
        k_cols,
        sub_rows,
        sub_cols,
        intra_spacing: d,
        subarray_spacing: pitch,
    } = layout;
    let k = k_rows * k_cols;
    let per_sub = sub_rows * sub_cols;
    // offsets of the whole array's bounding box centre
    let x0 = ((k_cols - 1) as f64 * pitch + (sub_cols - 1) as f64 * d) / 2.0;
    let y0 = ((k_rows - 1) as f64 * pitch + (sub_rows - 1) as f64 * d) / 2.0;

    let mut elements = Vec::with_capacity(k * per_sub);
    let mut subarray_index = Vec::with_capacity(k * per_sub);
    let mut grid_position = Vec::with_capacity(k * per_sub);
    let mut subarray_reference = Vec::with_capacity(k);
    for kr in 0..k_rows {
        for kc in 0..k_cols {
            let p = kr * k_cols + kc;
            subarray_reference.push(elements.len());
            for r in 0..sub_rows {
                for c in 0..sub_cols {
                    let x = kc as f64 * pitch + c as f64 * d - x0;
                    let y = kr as f64 * pitch + r as f64 * d - y0;
                    elements.push(Vec3::new(x, y, 0.0));
                    subarray_index.push(p);
                    grid_position.push((r, c));
                }
            }
        }
    }
    Ok(ArrayGeometry {
        wavelength,
        elements,
        subarray_index,
        grid_position,
        k_subarrays: k,
        subarray_reference,
        layout,
    })
}

/// Maximum pairwise element distance.
pub fn aperture(geometry: &ArrayGeometry) -> f64 {
    let e = geometry.elements();
    let mut best = 0.0f64;
    for (i, a) in e.iter().enumerate() {
        for b in &e[i + 1..] {
            let dx = a.0[0] - b.0[0];
            let dy = a.0[1] - b.0[1];
            let dz = a.0[2] - b.0[2];
            best = best.max(dx * dx + dy * dy + dz * dz);
        }
    }
    best.sqrt()
}

/// Far-field boundary `2 S^2 / lambda` with `S` the aperture.
pub fn rayleigh_distance(geometry: &ArrayGeometry) -> f64 {
    let s = aperture(geometry);
    2.0 * s * s / geometry.wavelength()
}

/// An array geometry together with its placement in the scene.
#[derive(Debug, Clone)]
pub struct PlacedArray {
    geometry: ArrayGeometry,
    pose: Pose,
    global: Vec<Vec3>,
}

impl PlacedArray {
    pub fn new(geometry: ArrayGeometry, pose: Pose) -> Self {
        let global = geometry.elements().iter().map(|e| pose.to_global(e)).collect();
        PlacedArray {
            geometry,
            pose,
            global,
        }
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn pose(&self) -> &Pose {
        &self.pose
    }

    /// Element positions in the global frame.
    pub fn positions(&self) -> &[Vec3] {
        &self.global
    }

    pub fn len(&self) -> usize {
        self.global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global.is_empty()
    }
}
