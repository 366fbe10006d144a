use faer::Mat;

use super::{argmax, assemble, check_dims, col_norms, fit_pairs, row_norms, sense_rx, sense_tx};
use super::{ChannelEstimate, Codebook, PilotObservation};
use crate::error::{Error, Result};
use crate::linalg::CMat;

fn sense_all(obs: &PilotObservation, cb: &Codebook, rx_side: bool) -> CMat {
    let (m, g) = if rx_side {
        (obs.measurements.nrows(), cb.n_atoms())
    } else {
        (cb.n_atoms(), obs.measurements.ncols())
    };
    let mut out = Mat::zeros(m, g);
    for (b, block) in cb.blocks.iter().enumerate() {
        let atoms: Vec<usize> = block.atoms.clone().collect();
        if rx_side {
            let s = sense_rx(obs, cb, b, &atoms);
            out.as_mut().get_mut(.., block.atoms.clone()).copy_from(&s);
        } else {
            let s = sense_tx(obs, cb, b, &atoms);
            out.as_mut().get_mut(block.atoms.clone(), ..).copy_from(&s);
        }
    }
    out
}

/// Orthogonal matching pursuit over all `(rx_atom, tx_atom)` pairs.
///
/// Each step picks the pair whose normalised sensing column correlates best
/// with the residual (lowest flat index `tx * G_rx + rx` on ties) and refits
/// all gains by least squares. Stops after `max_atoms` pairs or once the
/// residual falls to `residual_tol * |Y|`.
pub fn omp_estimate(
    obs: &PilotObservation,
    tx_codebook: &Codebook,
    rx_codebook: &Codebook,
    max_atoms: usize,
    residual_tol: f64,
) -> Result<ChannelEstimate> {
    check_dims(obs, tx_codebook, rx_codebook)?;
    if !(residual_tol >= 0.0) {
        return Err(Error::invalid("residual_tol must be non-negative"));
    }
    let y = &obs.measurements;
    let p = sense_all(obs, rx_codebook, true);
    let phi = sense_all(obs, tx_codebook, false);
    let (p_norm, phi_norm) = (col_norms(&p), row_norms(&phi));
    let g_rx = p.ncols();
    let phi_h = phi.adjoint().to_owned();
    let p_h = p.adjoint().to_owned();

    let y_norm = y.norm_l2();
    let mut residual = y.clone();
    let mut residual_norms = vec![y_norm];
    let mut support: Vec<(usize, usize)> = Vec::new();
    let mut gains = Vec::new();
    let mut correlations = 0u64;

    while support.len() < max_atoms && residual_norms.last().copied().unwrap_or(0.0) > residual_tol * y_norm {
        let c = &p_h * &residual * &phi_h;
        correlations += (c.nrows() * c.ncols()) as u64;
        let scores = (0..c.nrows() * c.ncols()).map(|flat| {
            let (r, t) = (flat % g_rx, flat / g_rx);
            let n = p_norm[r] * phi_norm[t];
            if n > 0.0 {
                c[(r, t)].norm() / n
            } else {
                0.0
            }
        });
        let Some(flat) = argmax(scores, |flat| support.contains(&(flat % g_rx, flat / g_rx))) else {
            break;
        };
        support.push((flat % g_rx, flat / g_rx));
        let before = support.len();
        let (g, r) = fit_pairs(y, &p, &phi, &mut support);
        gains = g;
        residual = r;
        if support.len() < before {
            // the newest atom made the system rank deficient
            break;
        }
        residual_norms.push(residual.norm_l2());
    }
    let h_hat = assemble(obs, tx_codebook, rx_codebook, &support, &gains);
    let gains = gains.into_iter().map(|g| g / obs.channel_scale).collect();
    Ok(ChannelEstimate {
        h_hat,
        support,
        gains,
        correlations,
        residual_norms,
    })
}
