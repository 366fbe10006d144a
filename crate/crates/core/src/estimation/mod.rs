//! Pilot-based compressed-sensing channel estimation.
//!
//! The channel is modelled as `H = A_rx X A_tx^H` with a sparse `X` over two
//! codebooks. Measurements `Y = W^H H F` see the dictionary through
//! `P = W^H A_rx` and `Phi = A_tx^H F`, so `Y = P X Phi`.

mod codebook;
mod omp;
mod pilots;
mod subarray;

pub use codebook::{build_far_field_codebook, build_subarray_codebook, AtomBlock, Codebook, CodebookStructure, GridPoint};
pub use omp::omp_estimate;
pub use pilots::{simulate_pilots, PilotObservation};
pub use subarray::{dse_estimate, sse_estimate};

use faer::Mat;

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::linalg::{c64, lstsq, CMat};

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub h_hat: ChannelMatrix,
    /// Selected `(rx_atom, tx_atom)` pairs.
    pub support: Vec<(usize, usize)>,
    /// Gains of the support pairs, in the scale of the observed channel.
    pub gains: Vec<c64>,
    /// Number of atom-versus-residual correlations evaluated.
    pub correlations: u64,
    /// Measurement residual norm after each selection step, starting with `|Y|`.
    pub residual_norms: Vec<f64>,
}

fn check_dims(obs: &PilotObservation, tx: &Codebook, rx: &Codebook) -> Result<()> {
    if rx.n_elements() != obs.n_rx() || tx.n_elements() != obs.n_tx() {
        return Err(Error::DimensionMismatch {
            expected: (obs.n_rx(), obs.n_tx()),
            actual: (rx.n_elements(), tx.n_elements()),
        });
    }
    Ok(())
}

/// `W^H A_rx[:, atoms]` (`M x k`), touching only the rows of block `b`.
fn sense_rx(obs: &PilotObservation, cb: &Codebook, b: usize, atoms: &[usize]) -> CMat {
    let rows = &cb.blocks[b].elements;
    let w = Mat::from_fn(rows.len(), obs.combiner.ncols(), |i, j| obs.combiner[(rows[i], j)]);
    let a = Mat::from_fn(rows.len(), atoms.len(), |i, j| cb.atoms[(rows[i], atoms[j])]);
    w.adjoint() * a
}

/// `A_tx[:, atoms]^H F` (`k x Q`), touching only the rows of block `b`.
fn sense_tx(obs: &PilotObservation, cb: &Codebook, b: usize, atoms: &[usize]) -> CMat {
    let rows = &cb.blocks[b].elements;
    let f = Mat::from_fn(rows.len(), obs.precoders.ncols(), |i, j| obs.precoders[(rows[i], j)]);
    let a = Mat::from_fn(rows.len(), atoms.len(), |i, j| cb.atoms[(rows[i], atoms[j])]);
    a.adjoint() * f
}

fn col_norms(m: &CMat) -> Vec<f64> {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect()
}

fn row_norms(m: &CMat) -> Vec<f64> {
    let mut n = vec![0.0; m.nrows()];
    for j in 0..m.ncols() {
        for (i, acc) in n.iter_mut().enumerate() {
            *acc += m[(i, j)].norm_sqr();
        }
    }
    n.into_iter().map(f64::sqrt).collect()
}

/// Index of the largest score, lowest index on ties; `None` if every entry is
/// excluded or not finite.
fn argmax(scores: impl Iterator<Item = f64>, skip: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.enumerate() {
        if skip(i) || !s.is_finite() {
            continue;
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// Sensing matrix of atom pairs: column `k` is `vec(P[:, r_k] Phi[t_k, :])`.
fn pair_sensing(p_cols: &CMat, phi_rows: &CMat, pairs: &[(usize, usize)]) -> CMat {
    let (m, q) = (p_cols.nrows(), phi_rows.ncols());
    Mat::from_fn(m * q, pairs.len(), |idx, k| {
        let (r, t) = pairs[k];
        p_cols[(idx % m, r)] * phi_rows[(t, idx / m)]
    })
}

fn vec_of(y: &CMat) -> CMat {
    let m = y.nrows();
    Mat::from_fn(m * y.ncols(), 1, |idx, _| y[(idx % m, idx / m)])
}

/// Least-squares gains of `pairs` (indices into `p_cols` columns / `phi_rows`
/// rows). Trailing pairs are dropped while the system is rank deficient.
fn fit_pairs(
    y: &CMat,
    p_cols: &CMat,
    phi_rows: &CMat,
    pairs: &mut Vec<(usize, usize)>,
) -> (Vec<c64>, CMat) {
    let yv = vec_of(y);
    loop {
        let s = pair_sensing(p_cols, phi_rows, pairs);
        if let Some(x) = lstsq(s.as_ref(), yv.as_ref()) {
            let fit = &s * &x;
            let m = y.nrows();
            let resid = Mat::from_fn(m, y.ncols(), |i, j| y[(i, j)] - fit[(i + m * j, 0)]);
            return ((0..pairs.len()).map(|k| x[(k, 0)]).collect(), resid);
        }
        pairs.pop();
        log::debug!("rank-deficient support, dropped newest pair");
    }
}

/// `sum_k g_k a_rx(r_k) a_tx(t_k)^H`, divided by the observation's
/// normalisation so the estimate is in the scale of the observed channel.
fn assemble(
    obs: &PilotObservation,
    tx: &Codebook,
    rx: &Codebook,
    support: &[(usize, usize)],
    gains: &[c64],
) -> ChannelMatrix {
    let (nr, nt) = (obs.n_rx(), obs.n_tx());
    let k = support.len();
    let ar = Mat::from_fn(nr, k, |i, j| rx.atoms[(i, support[j].0)] * gains[j] / obs.channel_scale);
    let at = Mat::from_fn(nt, k, |i, j| tx.atoms[(i, support[j].1)]);
    ChannelMatrix {
        entries: if k == 0 { Mat::zeros(nr, nt) } else { ar * at.adjoint() },
        model: obs.model,
        wavelength: obs.wavelength,
        tx_geometry_id: obs.tx_geometry_id,
        rx_geometry_id: obs.rx_geometry_id,
    }
}
