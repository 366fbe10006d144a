//! Block-diagonal constant-modulus hybrid beamforming for widely-spaced
//! multi-subarray arrays.

use faer::{Mat, Side};

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::linalg::{c64, phase_only, thin_svd, CMat};
use crate::metrics::{water_filling, PowerAllocation, ZERO_MODE_REL_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct HybridPrecoder {
    /// `N x N_rf`; column `r` is nonzero only on the elements of subarray `r`.
    pub analog: CMat,
    /// `N_rf x N_streams`.
    pub digital: CMat,
    pub power_allocation: PowerAllocation,
}

impl HybridPrecoder {
    pub fn n_streams(&self) -> usize {
        self.digital.ncols()
    }

    /// `analog * digital`.
    pub fn combined(&self) -> CMat {
        &self.analog * &self.digital
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridDesign {
    pub precoder: HybridPrecoder,
    pub combiner: HybridPrecoder,
    /// Set when fewer streams than requested were supported.
    pub streams_reduced: bool,
}

/// Constant-modulus analog block of subarray `p`: the entrywise phases of
/// `vector` on the subarray's elements, scaled by `1/sqrt(block size)`.
fn analog_block(out: &mut CMat, col: usize, elements: &[usize], vector: impl Fn(usize) -> c64) {
    let m = 1.0 / (elements.len() as f64).sqrt();
    for (k, &n) in elements.iter().enumerate() {
        out[(n, col)] = phase_only(vector(k), m);
    }
}

/// Analog stage `(F_a, W_a)`: one RF chain per subarray at each end. Block `r`
/// is the phase-only projection of the dominant singular vector of `h`
/// restricted to subarray `r`.
pub fn design_wsms_analog(
    h: &ChannelMatrix,
    tx_geo: &ArrayGeometry,
    rx_geo: &ArrayGeometry,
    n_rf: usize,
) -> Result<(CMat, CMat)> {
    if h.shape() != (rx_geo.len(), tx_geo.len()) {
        return Err(Error::DimensionMismatch {
            expected: (rx_geo.len(), tx_geo.len()),
            actual: h.shape(),
        });
    }
    if n_rf != tx_geo.k_subarrays() || n_rf != rx_geo.k_subarrays() {
        return Err(Error::invalid(format!(
            "n_rf = {n_rf} must equal the subarray count at both ends ({} Tx, {} Rx)",
            tx_geo.k_subarrays(),
            rx_geo.k_subarrays()
        )));
    }
    let (nr, nt) = h.shape();
    let mut fa = Mat::<c64>::zeros(nt, n_rf);
    let mut wa = Mat::<c64>::zeros(nr, n_rf);
    for r in 0..n_rf {
        let cols = tx_geo.subarray_elements(r);
        let hq = Mat::from_fn(nr, cols.len(), |i, j| h.entries[(i, cols[j])]);
        let v = thin_svd(hq.as_ref())?.v;
        analog_block(&mut fa, r, &cols, |k| v[(k, 0)]);

        let rows = rx_geo.subarray_elements(r);
        let hp = Mat::from_fn(rows.len(), nt, |i, j| h.entries[(rows[i], j)]);
        let u = thin_svd(hp.as_ref())?.u;
        analog_block(&mut wa, r, &rows, |k| u[(k, 0)]);
    }
    Ok((fa, wa))
}

/// Digital stage over a fixed analog stage: diagonalises `W_a^H H F_a` and
/// water-fills `power` over its strongest `n_streams` modes.
pub fn design_digital(
    h: &ChannelMatrix,
    analog_tx: CMat,
    analog_rx: CMat,
    n_streams: usize,
    power: f64,
    noise: f64,
) -> Result<HybridDesign> {
    let n_rf = analog_tx.ncols().min(analog_rx.ncols());
    if n_streams == 0 || n_streams > n_rf {
        return Err(Error::invalid(format!("need 1 <= n_streams <= n_rf, got {n_streams}")));
    }
    if analog_tx.nrows() != h.ncols() || analog_rx.nrows() != h.nrows() {
        return Err(Error::DimensionMismatch {
            expected: h.shape(),
            actual: (analog_rx.nrows(), analog_tx.nrows()),
        });
    }
    let heff = analog_rx.adjoint() * &h.entries * &analog_tx;
    let svd = thin_svd(heff.as_ref())?;
    let s_max = svd.s.first().copied().unwrap_or(0.0);
    let rank = svd.s.iter().filter(|&&s| s > ZERO_MODE_REL_TOL * s_max).count();
    if rank == 0 {
        return Err(Error::NoCapacity);
    }
    let streams = n_streams.min(rank);
    if streams < n_streams {
        log::warn!("effective channel supports {streams} of {n_streams} requested streams");
    }
    let gains: Vec<f64> = svd.s[..streams].iter().map(|s| s * s).collect();
    let alloc = water_filling(&gains, power, noise)?;
    Ok(HybridDesign {
        precoder: HybridPrecoder {
            analog: analog_tx,
            digital: svd.v.as_ref().get(.., ..streams).to_owned(),
            power_allocation: alloc.clone(),
        },
        combiner: HybridPrecoder {
            analog: analog_rx,
            digital: svd.u.as_ref().get(.., ..streams).to_owned(),
            power_allocation: alloc,
        },
        streams_reduced: streams < n_streams,
    })
}

/// [`design_wsms_analog`] followed by [`design_digital`].
pub fn design_wsms_hybrid(
    h: &ChannelMatrix,
    tx_geo: &ArrayGeometry,
    rx_geo: &ArrayGeometry,
    n_rf: usize,
    n_streams: usize,
    power: f64,
    noise: f64,
) -> Result<HybridDesign> {
    if n_streams == 0 || n_streams > n_rf {
        return Err(Error::invalid(format!("need 1 <= n_streams <= n_rf, got {n_streams}")));
    }
    let (fa, wa) = design_wsms_analog(h, tx_geo, rx_geo, n_rf)?;
    design_digital(h, fa, wa, n_streams, power, noise)
}

/// `log2 det(I + R^{-1} Heff P Heff^H / noise)` with `Heff = W^H H F`, `P` the
/// precoder's per-stream powers rescaled to `power`, and `R = W^H W` the
/// combiner noise correlation.
pub fn spectral_efficiency(
    h: &ChannelMatrix,
    precoder: &HybridPrecoder,
    combiner: &HybridPrecoder,
    power: f64,
    noise: f64,
) -> Result<f64> {
    if !(power >= 0.0 && noise > 0.0) {
        return Err(Error::invalid("power must be non-negative and noise positive"));
    }
    let f = precoder.combined();
    let w = combiner.combined();
    if f.nrows() != h.ncols() || w.nrows() != h.nrows() {
        return Err(Error::DimensionMismatch {
            expected: h.shape(),
            actual: (w.nrows(), f.nrows()),
        });
    }
    let ns = f.ncols();
    let p = &precoder.power_allocation.per_mode_power;
    if p.len() != ns {
        return Err(Error::invalid("power allocation length differs from the stream count"));
    }
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = if total > 0.0 {
        p.iter().map(|x| x * power / total).collect()
    } else {
        vec![power / ns as f64; ns]
    };

    // whiten the combiner noise: R = Q L Q^H, T = L^{-1/2} Q^H
    let r = w.adjoint() * &w;
    let eig = r
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let lam: Vec<f64> = (0..r.nrows()).map(|i| eig.S()[i].re).collect();
    let lam_max = lam.iter().cloned().fold(0.0, f64::max);
    if lam.iter().any(|&l| !(l > 1e-12 * lam_max)) {
        return Err(Error::Numerical("combiner noise correlation is singular".into()));
    }
    let q = eig.U();
    let t = Mat::from_fn(r.nrows(), r.ncols(), |i, j| q[(j, i)].conj() / lam[i].sqrt());

    let heff = &t * (w.adjoint() * &h.entries * &f);
    let scaled = Mat::from_fn(heff.nrows(), ns, |i, j| heff[(i, j)] * (p[j] / noise).sqrt());
    let gram = &scaled * scaled.adjoint();
    let ev = gram
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigenvalues failed: {e:?}")))?;
    Ok(ev.iter().map(|&l| (1.0 + l.max(0.0)).log2()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_pwm, gen_swm, sample_paths, ChannelModel, PathParams, ScattererBox};
    use crate::geometry::{build_upa, build_wsms, PlacedArray, Pose, Vec3};
    use crate::linalg::{cis, numerical_rank};
    use crate::metrics::capacity_bits;

    fn scene(spacing_wl: f64, d: f64, seed: u64) -> (ArrayGeometry, ChannelMatrix, Vec<PathParams>) {
        let g = build_wsms(2, 2, 4, 4, 0.5, spacing_wl, 1e-3).unwrap();
        let tx = PlacedArray::new(g.clone(), Pose::identity());
        let rx = PlacedArray::new(g.clone(), Pose::facing_back(Vec3::new(0.0, 0.0, d)));
        let b = ScattererBox::new(Vec3::new(0.1 * d, -0.1 * d, 0.25 * d), Vec3::new(0.3 * d, 0.1 * d, 0.75 * d));
        let paths = sample_paths(seed, 1, tx.pose(), rx.pose(), &b).unwrap();
        let h = gen_swm(&tx, &rx, &paths).unwrap();
        (g, h, paths)
    }

    fn diag(v: &[f64]) -> CMat {
        Mat::from_fn(v.len(), v.len(), |i, j| c64::new(if i == j { v[i] } else { 0.0 }, 0.0))
    }

    #[test]
    fn design_structure() {
        let (g, h, _) = scene(16.0, 0.5, 1);
        let d = design_wsms_hybrid(&h, &g, &g, 4, 4, 1e-2, 1e-9).unwrap();
        for hp in [&d.precoder, &d.combiner] {
            for r in 0..4 {
                for n in 0..g.len() {
                    let z = hp.analog[(n, r)];
                    if g.subarray_index()[n] == r {
                        assert!((z.norm() - 0.25).abs() < 1e-12);
                    } else {
                        assert_eq!(z, c64::new(0.0, 0.0));
                    }
                }
            }
            assert!(hp.combined().squared_norm_l2() <= hp.n_streams() as f64 + 1e-9);
        }
    }

    #[test]
    fn single_los_path_analog_is_conjugate_steering() {
        let g = build_wsms(2, 2, 4, 4, 0.5, 8.0, 1e-3).unwrap();
        let tx = PlacedArray::new(g.clone(), Pose::identity());
        let rx = PlacedArray::new(g.clone(), Pose::facing_back(Vec3::new(0.3, 0.2, 5.0)));
        let h = gen_pwm(&tx, &rx, &[PathParams::line_of_sight()]).unwrap();
        let d = design_wsms_hybrid(&h, &g, &g, 4, 1, 1.0, 1e-12).unwrap();
        // rank-1 H = g a_r a_t^H: each Tx block is a_t restricted, up to a common phase
        let hcol0 = (0..g.len()).map(|t| h.entries[(0, t)]).collect::<Vec<_>>();
        for r in 0..4 {
            let el = g.subarray_elements(r);
            let ratio0 = d.precoder.analog[(el[0], r)] / hcol0[el[0]].conj();
            for &n in &el {
                let ratio = d.precoder.analog[(n, r)] / hcol0[n].conj();
                assert!((ratio / ratio.norm() - ratio0 / ratio0.norm()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn hybrid_never_beats_capacity() {
        for seed in 0..5 {
            let (g, h, _) = scene(12.0, 1.0 + seed as f64, seed);
            for p in [1e-6, 1e-3, 1.0] {
                let d = design_wsms_hybrid(&h, &g, &g, 4, 4, p, 1e-9).unwrap();
                let se = spectral_efficiency(&h, &d.precoder, &d.combiner, p, 1e-9).unwrap();
                let c = capacity_bits(&h, p, 1e-9).unwrap();
                assert!(se <= c * (1.0 + 1e-9), "{se} > {c}");
            }
        }
    }

    #[test]
    fn analog_phase_rotation_is_absorbed() {
        let (g, h, _) = scene(12.0, 0.7, 3);
        let d = design_wsms_hybrid(&h, &g, &g, 4, 4, 1e-3, 1e-9).unwrap();
        let se = spectral_efficiency(&h, &d.precoder, &d.combiner, 1e-3, 1e-9).unwrap();
        let mut rotated = d.clone();
        for n in 0..g.len() {
            rotated.precoder.analog[(n, 2)] *= cis(1.1);
            rotated.combiner.analog[(n, 1)] *= cis(-0.4);
        }
        let redesigned = design_wsms_hybrid(&h, &g, &g, 4, 4, 1e-3, 1e-9).unwrap();
        let se_rot = {
            // digital stage re-derived from the rotated analog stage
            let heff = rotated.combiner.analog.adjoint() * &h.entries * &rotated.precoder.analog;
            let svd = thin_svd(heff.as_ref()).unwrap();
            rotated.precoder.digital = svd.v.clone();
            rotated.combiner.digital = svd.u.clone();
            spectral_efficiency(&h, &rotated.precoder, &rotated.combiner, 1e-3, 1e-9).unwrap()
        };
        assert!((se - se_rot).abs() < 1e-9 * se.max(1.0));
        assert_eq!(redesigned, d);
    }

    #[test]
    fn diagonal_identity_closed_form() {
        let h = ChannelMatrix {
            entries: diag(&[2.0, 0.5, 1.0]),
            model: ChannelModel::Swm,
            wavelength: 1e-3,
            tx_geometry_id: 0,
            rx_geometry_id: 0,
        };
        let p = vec![0.5, 1.0, 1.5];
        let eye = HybridPrecoder {
            analog: diag(&[1.0; 3]),
            digital: diag(&[1.0; 3]),
            power_allocation: PowerAllocation {
                per_mode_power: p.clone(),
                water_level: 0.0,
            },
        };
        let se = spectral_efficiency(&h, &eye, &eye, 3.0, 0.25).unwrap();
        let expect: f64 = [2.0f64, 0.5, 1.0]
            .iter()
            .zip(&p)
            .map(|(h, p)| (1.0 + p * h * h / 0.25).log2())
            .sum();
        assert!((se - expect).abs() < 1e-12);
    }

    #[test]
    fn fully_digital_svd_reaches_capacity() {
        let (_, h, _) = scene(10.0, 0.8, 4);
        let (power, noise) = (1e-4, 1e-10);
        let svd = thin_svd(h.entries.as_ref()).unwrap();
        let s_max = svd.s[0];
        let k = svd.s.iter().filter(|&&s| s > ZERO_MODE_REL_TOL * s_max).count();
        let gains: Vec<f64> = svd.s[..k].iter().map(|s| s * s).collect();
        let alloc = water_filling(&gains, power, noise).unwrap();
        let n = h.nrows();
        let tx = HybridPrecoder {
            analog: diag(&vec![1.0; n]),
            digital: svd.v.as_ref().get(.., ..k).to_owned(),
            power_allocation: alloc.clone(),
        };
        let rx = HybridPrecoder {
            analog: diag(&vec![1.0; n]),
            digital: svd.u.as_ref().get(.., ..k).to_owned(),
            power_allocation: alloc,
        };
        let se = spectral_efficiency(&h, &tx, &rx, power, noise).unwrap();
        let c = capacity_bits(&h, power, noise).unwrap();
        assert!((se - c).abs() <= 1e-6 * c);
    }

    #[test]
    fn matches_mutual_information_oracle() {
        // log2 det(s2 R + Heff P Heff^H) - log2 det(s2 R), determinants by LU
        fn log2_det(m: &CMat) -> f64 {
            let n = m.nrows();
            let mut a = m.clone();
            let mut acc = 0.0;
            for k in 0..n {
                let piv = (k..n).max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm())).unwrap();
                if piv != k {
                    for j in 0..n {
                        let t = a[(k, j)];
                        a[(k, j)] = a[(piv, j)];
                        a[(piv, j)] = t;
                    }
                }
                let d = a[(k, k)];
                acc += d.norm().log2();
                for i in k + 1..n {
                    let f = a[(i, k)] / d;
                    for j in k..n {
                        let t = a[(k, j)];
                        a[(i, j)] -= f * t;
                    }
                }
            }
            acc
        }
        let h = ChannelMatrix {
            entries: Mat::from_fn(5, 4, |i, j| cis((i * 7 + j * 3) as f64 * 0.37) * (1.0 + 0.2 * i as f64)),
            model: ChannelModel::Swm,
            wavelength: 1e-3,
            tx_geometry_id: 0,
            rx_geometry_id: 0,
        };
        let tx = HybridPrecoder {
            analog: Mat::from_fn(4, 2, |i, j| cis((i + 2 * j) as f64 + 0.9 * (i * j) as f64)),
            digital: Mat::from_fn(2, 2, |i, j| c64::new(1.0 + i as f64, j as f64 - 0.5)),
            power_allocation: PowerAllocation {
                per_mode_power: vec![0.7, 0.3],
                water_level: 0.0,
            },
        };
        let rx = HybridPrecoder {
            analog: Mat::from_fn(5, 3, |i, j| cis((3 * i + j) as f64 * 0.8 + 0.5 * (i * j * j) as f64)),
            digital: Mat::from_fn(3, 2, |i, j| c64::new(0.5 - j as f64, i as f64 * 0.3)),
            power_allocation: tx.power_allocation.clone(),
        };
        let noise = 0.3;
        let se = spectral_efficiency(&h, &tx, &rx, 2.0, noise).unwrap();
        let (f, w) = (tx.combined(), rx.combined());
        let heff = w.adjoint() * &h.entries * &f;
        let p = diag(&[1.4, 0.6]);
        let r = faer::Scale(c64::new(noise, 0.0)) * (w.adjoint() * &w);
        let signal = &heff * &p * heff.adjoint();
        let oracle = log2_det(&(&r + &signal)) - log2_det(&r);
        assert!((se - oracle).abs() < 1e-9, "{se} vs {oracle}");
    }

    #[test]
    fn singular_combiner_is_rejected() {
        let h = ChannelMatrix {
            entries: diag(&[1.0, 1.0]),
            model: ChannelModel::Swm,
            wavelength: 1e-3,
            tx_geometry_id: 0,
            rx_geometry_id: 0,
        };
        let tx = HybridPrecoder {
            analog: diag(&[1.0, 1.0]),
            digital: diag(&[1.0, 1.0]),
            power_allocation: PowerAllocation {
                per_mode_power: vec![1.0, 1.0],
                water_level: 0.0,
            },
        };
        let rx = HybridPrecoder {
            digital: Mat::from_fn(2, 2, |_, _| c64::new(1.0, 0.0)),
            ..tx.clone()
        };
        assert!(matches!(spectral_efficiency(&h, &tx, &rx, 1.0, 1.0), Err(Error::Numerical(_))));
    }

    #[test]
    fn stream_counts_follow_channel_rank() {
        // far-field compact array: the two-path PWM channel carries two streams
        let g = build_upa(4, 4, 0.5, 1e-3).unwrap();
        let tx = PlacedArray::new(g.clone(), Pose::identity());
        let rx = PlacedArray::new(g.clone(), Pose::facing_back(Vec3::new(0.0, 0.0, 20.0)));
        let b = ScattererBox::new(Vec3::new(2.0, -2.0, 5.0), Vec3::new(6.0, 2.0, 15.0));
        let paths = sample_paths(2, 1, tx.pose(), rx.pose(), &b).unwrap();
        let hp = gen_pwm(&tx, &rx, &paths).unwrap();
        assert!(numerical_rank(hp.entries.as_ref(), 1e-9).unwrap() <= 2);

        // widely spaced subarrays in the near field: four streams from two paths
        let (g, h, paths) = scene(16.0, 0.5, 5);
        assert_eq!(paths.len(), 2);
        let d = design_wsms_hybrid(&h, &g, &g, 4, 4, 1e-2, 1e-12).unwrap();
        assert!(!d.streams_reduced);
        assert_eq!(d.precoder.n_streams(), 4);
    }

    #[test]
    fn rejects_bad_configuration() {
        let (g, h, _) = scene(12.0, 1.0, 0);
        assert!(design_wsms_hybrid(&h, &g, &g, 3, 2, 1.0, 1.0).is_err());
        assert!(design_wsms_hybrid(&h, &g, &g, 4, 5, 1.0, 1.0).is_err());
        assert!(design_wsms_hybrid(&h, &g, &g, 4, 0, 1.0, 1.0).is_err());
    }
}
