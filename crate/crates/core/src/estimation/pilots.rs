use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{ChannelMatrix, ChannelModel};
use crate::error::{Error, Result};
use crate::linalg::{c64, cis, CMat};

/// Pilot measurements `Y = W^H H_n F + W^H N` of a channel normalised to unit
/// mean entry power, `H_n = channel_scale * H`.
///
/// All frames share one combiner bank `W`; column `q` of `Y` is frame `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    /// `M_rx x Q`.
    pub measurements: CMat,
    /// `N_rx x M_rx`, entries of magnitude `1/sqrt(N_rx)`.
    pub combiner: CMat,
    /// `N_tx x Q`, column `q` is the frame-`q` precoder, entries of magnitude
    /// `1/sqrt(N_tx)`.
    pub precoders: CMat,
    /// Per-entry noise variance of the normalised model (0 when disabled).
    pub noise_power: f64,
    pub seed: u64,
    pub channel_scale: f64,
    pub model: ChannelModel,
    pub wavelength: f64,
    pub tx_geometry_id: u64,
    pub rx_geometry_id: u64,
}

impl PilotObservation {
    pub fn n_rx(&self) -> usize {
        self.combiner.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.precoders.nrows()
    }

    pub fn n_measurements(&self) -> usize {
        self.measurements.nrows() * self.measurements.ncols()
    }
}

fn random_phases(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    let scale = 1.0 / (rows as f64).sqrt();
    let mut m = Mat::<c64>::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = cis(rng.random_range(0.0..std::f64::consts::TAU)) * scale;
        }
    }
    m
}

/// Simulates `q_frames` pilot frames, each observed through `m_rx` random
/// phase-shifter combiners. `snr_db = +inf` disables noise.
pub fn simulate_pilots(
    h: &ChannelMatrix,
    q_frames: usize,
    m_rx: usize,
    snr_db: f64,
    seed: u64,
) -> Result<PilotObservation> {
    let (n_rx, n_tx) = h.shape();
    if q_frames == 0 || m_rx == 0 || m_rx > n_rx {
        return Err(Error::invalid(format!(
            "need 1 <= m_rx <= {n_rx} and q_frames >= 1, got m_rx={m_rx}, q_frames={q_frames}"
        )));
    }
    if q_frames * m_rx >= n_rx * n_tx {
        return Err(Error::invalid(format!(
            "{} measurements do not compress a {n_rx}x{n_tx} channel",
            q_frames * m_rx
        )));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid("snr_db must be a number or +inf"));
    }
    let energy = h.entries.squared_norm_l2();
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::ZeroNorm);
    }
    let channel_scale = ((n_rx * n_tx) as f64 / energy).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let combiner = random_phases(&mut rng, n_rx, m_rx);
    let precoders = random_phases(&mut rng, n_tx, q_frames);
    let wh = combiner.adjoint().to_owned();
    let mut measurements = faer::Scale(c64::new(channel_scale, 0.0)) * (&wh * &h.entries * &precoders);

    let noise_power = if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    };
    if noise_power > 0.0 {
        let sd = (noise_power / 2.0).sqrt();
        let mut noise = Mat::<c64>::zeros(n_rx, q_frames);
        for j in 0..q_frames {
            for i in 0..n_rx {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                noise[(i, j)] = c64::new(re * sd, im * sd);
            }
        }
        measurements += &wh * &noise;
    }
    Ok(PilotObservation {
        measurements,
        combiner,
        precoders,
        noise_power,
        seed,
        channel_scale,
        model: h.model,
        wavelength: h.wavelength,
        tx_geometry_id: h.tx_geometry_id,
        rx_geometry_id: h.rx_geometry_id,
    })
}
