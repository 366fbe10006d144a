//! Thin helpers over `faer` used across the crate.

use faer::prelude::*;
use faer::{Mat, MatRef};

use crate::error::{Error, Result};

pub use faer::c64;

pub type CMat = Mat<c64>;

/// Unit phasor `exp(j * phase)`.
#[inline]
pub fn cis(phase: f64) -> c64 {
    let (s, c) = phase.sin_cos();
    c64::new(c, s)
}

pub fn frobenius_sq(m: MatRef<'_, c64>) -> f64 {
    m.squared_norm_l2()
}

/// Singular values in non-increasing order.
pub fn singular_values(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let mut s = m
        .singular_values()
        .map_err(|e| Error::Numerical(format!("singular value decomposition failed: {e:?}")))?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Number of singular values above `rel_tol * s_max`.
pub fn numerical_rank(m: MatRef<'_, c64>, rel_tol: f64) -> Result<usize> {
    let s = singular_values(m)?;
    let max = s.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > rel_tol * max).count())
}

/// Thin SVD with singular values sorted in non-increasing order.
pub struct SortedSvd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn thin_svd(m: MatRef<'_, c64>) -> Result<SortedSvd> {
    let svd = m
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("singular value decomposition failed: {e:?}")))?;
    let k = svd.S().dim();
    let s_raw: Vec<f64> = (0..k).map(|i| svd.S()[i].re).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s_raw[b].total_cmp(&s_raw[a]).then(a.cmp(&b)));
    let u = Mat::from_fn(m.nrows(), k, |i, j| svd.U()[(i, order[j])]);
    let v = Mat::from_fn(m.ncols(), k, |i, j| svd.V()[(i, order[j])]);
    Ok(SortedSvd {
        u,
        s: order.iter().map(|&i| s_raw[i]).collect(),
        v,
    })
}

/// Least-squares solution of `a x = b`, or `None` when `a` is numerically
/// rank deficient (some `|R_ii|` below `1e-10 * max |R_ii|` in its QR).
pub fn lstsq(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Option<CMat> {
    if a.ncols() == 0 {
        return Some(Mat::zeros(0, b.ncols()));
    }
    if a.nrows() < a.ncols() {
        return None;
    }
    let qr = a.qr();
    let r = qr.thin_R();
    let diag: Vec<f64> = (0..a.ncols()).map(|i| r[(i, i)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 || diag.iter().any(|&d| d <= 1e-10 * max) {
        return None;
    }
    Some(qr.solve_lstsq(b))
}

/// Entrywise `exp(j * arg(z))` scaled by `magnitude`; zeros map to `magnitude`.
pub fn phase_only(z: c64, magnitude: f64) -> c64 {
    if z.norm() == 0.0 {
        c64::new(magnitude, 0.0)
    } else {
        z * (magnitude / z.norm())
    }
}
