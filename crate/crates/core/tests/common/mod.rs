//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use crossfield::channel::{ChannelMatrix, ChannelModel};
use crossfield::linalg::{c64, CMat};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Water-filling by exhaustive search over active sets: for every non-empty
/// subset, the closed-form level `mu = (P + sum noise/g) / |S|` is feasible
/// when every member gets positive power and every non-member would get none.
/// Among feasible sets the one of largest capacity wins.
pub fn water_filling_exhaustive(gains: &[f64], power: f64, noise: f64) -> Vec<f64> {
    let n = gains.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if set.iter().any(|&i| gains[i] <= 0.0) {
            continue;
        }
        let mu = (power + set.iter().map(|&i| noise / gains[i]).sum::<f64>()) / set.len() as f64;
        let inside_ok = set.iter().all(|&i| mu - noise / gains[i] > 0.0);
        let outside_ok = (0..n)
            .filter(|i| mask >> i & 1 == 0)
            .all(|i| gains[i] <= 0.0 || mu <= noise / gains[i]);
        if !(inside_ok && outside_ok) {
            continue;
        }
        let p: Vec<f64> = (0..n)
            .map(|i| if mask >> i & 1 == 1 { mu - noise / gains[i] } else { 0.0 })
            .collect();
        let c: f64 = p.iter().zip(gains).map(|(p, g)| (1.0 + p * g / noise).log2()).sum();
        if best.as_ref().is_none_or(|(bc, _)| c > *bc) {
            best = Some((c, p));
        }
    }
    best.expect("some active set is feasible").1
}

pub fn channel(entries: CMat) -> ChannelMatrix {
    ChannelMatrix {
        entries,
        model: ChannelModel::Swm,
        wavelength: 1e-3,
        tx_geometry_id: 0,
        rx_geometry_id: 0,
    }
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    Mat::from_fn(rows, cols, |_, _| {
        let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        c64::new(a, b)
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `log2 det(I + snr A A^H)` through Gaussian elimination with partial pivoting.
pub fn log2_det_identity_plus(a: &CMat, snr: f64) -> f64 {
    let n = a.nrows();
    let g = a * a.adjoint();
    let mut m = Mat::from_fn(n, n, |i, j| g[(i, j)] * snr + if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
    let mut acc = 0.0;
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[(i, k)].norm().total_cmp(&m[(j, k)].norm())).unwrap();
        for j in 0..n {
            let t = m[(k, j)];
            m[(k, j)] = m[(piv, j)];
            m[(piv, j)] = t;
        }
        let d = m[(k, k)];
        acc += d.norm().log2();
        for i in k + 1..n {
            let f = m[(i, k)] / d;
            for j in k..n {
                let t = m[(k, j)];
                m[(i, j)] -= f * t;
            }
        }
    }
    acc
}
