//! Spherical-wave (SWM), planar-wave (PWM) and hybrid spherical/planar-wave
//! (HSPM) channel synthesis from one shared geometric scene.

mod io;
mod paths;

pub use io::{read_channel_csv, write_channel_csv};
pub use paths::{sample_paths, PathKind, PathParams, ScattererBox, REFLECTION_GAIN_RANGE};

use std::fmt;
use std::str::FromStr;

use faer::Mat;

use crate::error::{Error, Result};
use crate::geometry::{ElementBlock, PlacedArray, Vec3};
use crate::linalg::{c64, cis, frobenius_sq, CMat};

/// Relative errors whose ratio underflows are reported at this level.
pub const ERROR_FLOOR_DB: f64 = -320.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelModel {
    Swm,
    Pwm,
    Hspm,
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelModel::Swm => "SWM",
            ChannelModel::Pwm => "PWM",
            ChannelModel::Hspm => "HSPM",
        })
    }
}

impl FromStr for ChannelModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SWM" => Ok(ChannelModel::Swm),
            "PWM" => Ok(ChannelModel::Pwm),
            "HSPM" => Ok(ChannelModel::Hspm),
            other => Err(Error::invalid(format!("unknown channel model `{other}`"))),
        }
    }
}

/// Complex `Nr x Nt` channel tagged with the model and geometries behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: CMat,
    pub model: ChannelModel,
    pub wavelength: f64,
    pub tx_geometry_id: u64,
    pub rx_geometry_id: u64,
}

impl ChannelMatrix {
    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }

    /// Copy with entries replaced, keeping the tags.
    pub fn with_entries(&self, entries: CMat) -> Self {
        ChannelMatrix {
            entries,
            ..self.clone()
        }
    }

    pub fn scaled(&self, factor: c64) -> Self {
        let entries = Mat::from_fn(self.nrows(), self.ncols(), |i, j| self.entries[(i, j)] * factor);
        self.with_entries(entries)
    }
}

fn check_scene(tx: &PlacedArray, rx: &PlacedArray, paths: &[PathParams]) -> Result<f64> {
    if paths.is_empty() {
        return Err(Error::invalid("a scene needs at least one path"));
    }
    let wl = tx.geometry().wavelength();
    if (wl - rx.geometry().wavelength()).abs() > 1e-15 * wl {
        return Err(Error::invalid("Tx and Rx wavelengths differ"));
    }
    if paths
        .iter()
        .filter(|p| p.kind == PathKind::LineOfSight)
        .count()
        > 1
    {
        return Err(Error::invalid("at most one line-of-sight path per scene"));
    }
    Ok(wl)
}

fn tag(entries: CMat, model: ChannelModel, wl: f64, tx: &PlacedArray, rx: &PlacedArray) -> ChannelMatrix {
    ChannelMatrix {
        entries,
        model,
        wavelength: wl,
        tx_geometry_id: tx.geometry().fingerprint(),
        rx_geometry_id: rx.geometry().fingerprint(),
    }
}

fn degenerate() -> Error {
    Error::DegenerateScene("zero propagation length between an element pair".into())
}

/// Exact spherical-wave channel: every Tx/Rx element pair gets its own
/// amplitude and phase from the true propagation length of each path.
pub fn gen_swm(tx: &PlacedArray, rx: &PlacedArray, paths: &[PathParams]) -> Result<ChannelMatrix> {
    let wl = check_scene(tx, rx, paths)?;
    let (nr, nt) = (rx.len(), tx.len());
    let mut h = Mat::<c64>::zeros(nr, nt);
    for (t, tp) in tx.positions().iter().enumerate() {
        for (r, rp) in rx.positions().iter().enumerate() {
            let mut acc = c64::new(0.0, 0.0);
            for path in paths {
                acc += path.pair_gain(tp, rp, wl).ok_or_else(degenerate)?;
            }
            h[(r, t)] = acc;
        }
    }
    Ok(tag(h, ChannelModel::Swm, wl, tx, rx))
}

/// Planar-wave channel: one complex gain per path taken at the reference
/// element pair (element 0 of each array), with whole-array steering vectors.
pub fn gen_pwm(tx: &PlacedArray, rx: &PlacedArray, paths: &[PathParams]) -> Result<ChannelMatrix> {
    let wl = check_scene(tx, rx, paths)?;
    let whole = |n: usize| ElementBlock {
        reference: 0,
        elements: (0..n).collect(),
    };
    let h = blockwise_planar(tx, rx, paths, &[whole(tx.len())], &[whole(rx.len())], wl)?;
    Ok(tag(h, ChannelModel::Pwm, wl, tx, rx))
}

/// Hybrid model: planar-wave inside each (virtual) subarray, exact spherical
/// gains between subarray reference elements. `virtual_split = s` divides every
/// physical subarray into `s x s` virtual subarrays.
pub fn gen_hspm(
    tx: &PlacedArray,
    rx: &PlacedArray,
    paths: &[PathParams],
    virtual_split: usize,
) -> Result<ChannelMatrix> {
    let wl = check_scene(tx, rx, paths)?;
    let tx_blocks = tx.geometry().blocks(virtual_split)?;
    let rx_blocks = rx.geometry().blocks(virtual_split)?;
    let h = blockwise_planar(tx, rx, paths, &tx_blocks, &rx_blocks, wl)?;
    Ok(tag(h, ChannelModel::Hspm, wl, tx, rx))
}

/// Steering phases `exp(-j 2 pi / lambda <p_n - p_ref, dir>)` over a block.
fn steering(positions: &[Vec3], block: &ElementBlock, dir: &Vec3, wl: f64) -> Vec<c64> {
    let reference = positions[block.reference];
    let k = std::f64::consts::TAU / wl;
    block
        .elements
        .iter()
        .map(|&n| cis(-k * (positions[n] - reference).dot(dir)))
        .collect()
}

fn blockwise_planar(
    tx: &PlacedArray,
    rx: &PlacedArray,
    paths: &[PathParams],
    tx_blocks: &[ElementBlock],
    rx_blocks: &[ElementBlock],
    wl: f64,
) -> Result<CMat> {
    let mut h = Mat::<c64>::zeros(rx.len(), tx.len());
    let (tpos, rpos) = (tx.positions(), rx.positions());
    for bq in tx_blocks {
        for bp in rx_blocks {
            let (t0, r0) = (tpos[bq.reference], rpos[bp.reference]);
            for path in paths {
                let g = path.pair_gain(&t0, &r0, wl).ok_or_else(degenerate)?;
                let (dep, arr) = path.directions(&t0, &r0)?;
                let a_tx = steering(tpos, bq, &dep, wl);
                let a_rx = steering(rpos, bp, &arr, wl);
                for (&t, at) in bq.elements.iter().zip(&a_tx) {
                    let at = at.conj();
                    for (&r, ar) in bp.elements.iter().zip(&a_rx) {
                        h[(r, t)] += g * *ar * at;
                    }
                }
            }
        }
    }
    Ok(h)
}

/// `10 log10(|A - B|_F^2 / |B|_F^2)`, floored at [`ERROR_FLOOR_DB`].
pub(crate) fn relative_error_db(estimate: &CMat, truth: &CMat) -> Result<f64> {
    if estimate.shape() != truth.shape() {
        return Err(Error::DimensionMismatch {
            expected: truth.shape(),
            actual: estimate.shape(),
        });
    }
    let denom = frobenius_sq(truth.as_ref());
    if !(denom > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let diff = estimate - truth;
    let ratio = frobenius_sq(diff.as_ref()) / denom;
    if !ratio.is_finite() {
        return Err(Error::Numerical("non-finite error ratio".into()));
    }
    let db = 10.0 * ratio.log10();
    Ok(if db < ERROR_FLOOR_DB { ERROR_FLOOR_DB } else { db })
}

/// Model approximation error against an SWM ground truth, in dB.
pub fn approximation_error_db(h_model: &ChannelMatrix, h_truth: &ChannelMatrix) -> Result<f64> {
    if h_truth.model != ChannelModel::Swm {
        return Err(Error::invalid(format!(
            "reference channel must be SWM, got {}",
            h_truth.model
        )));
    }
    relative_error_db(&h_model.entries, &h_truth.entries)
}

/// Real parameters needed to specify each model.
///
/// * SWM: amplitude and phase per antenna pair per path, `2 nt nr L`.
/// * PWM: amplitude, phase and two departure plus two arrival angles per
///   path, `6 L`.
/// * HSPM: the PWM set for every subarray pair, `6 L kt kr`.
///
/// The HSPM figure follows this convention; other counting conventions
/// (e.g. adding per-subarray distances) give larger but same-order totals.
pub fn count_parameters(
    model: ChannelModel,
    nt: usize,
    nr: usize,
    kt: usize,
    kr: usize,
    n_paths: usize,
) -> Result<u64> {
    if n_paths == 0 {
        return Err(Error::invalid("n_paths must be positive"));
    }
    let l = n_paths as u64;
    match model {
        ChannelModel::Swm => {
            if nt == 0 || nr == 0 {
                return Err(Error::invalid("antenna counts must be positive"));
            }
            Ok(2 * nt as u64 * nr as u64 * l)
        }
        ChannelModel::Pwm => Ok(6 * l),
        ChannelModel::Hspm => {
            if nt == 0 || nr == 0 || kt == 0 || kr == 0 {
                return Err(Error::invalid("antenna and subarray counts must be positive"));
            }
            if kt > nt || kr > nr {
                return Err(Error::invalid("more subarrays than antennas"));
            }
            Ok(6 * l * kt as u64 * kr as u64)
        }
    }
}
