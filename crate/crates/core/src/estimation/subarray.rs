use faer::Mat;

use super::{argmax, assemble, check_dims, col_norms, fit_pairs, row_norms, sense_rx, sense_tx};
use super::{ChannelEstimate, Codebook, CodebookStructure, PilotObservation};
use crate::error::{Error, Result};
use crate::linalg::{c64, lstsq, CMat};

/// Subarray whose estimate seeds the shrunken dictionaries of DSE.
const REFERENCE_BLOCK: usize = 0;

/// Separate side estimation: Rx atoms per Rx subarray, then Tx atoms per Tx
/// subarray with the Rx support fixed, then joint least-squares gains.
pub fn sse_estimate(
    obs: &PilotObservation,
    tx_codebook: &Codebook,
    rx_codebook: &Codebook,
    max_atoms_per_block: usize,
    residual_tol: f64,
) -> Result<ChannelEstimate> {
    estimate(obs, tx_codebook, rx_codebook, max_atoms_per_block, residual_tol, None)
}

/// Dictionary shrinkage estimation: a search over the reference subarray alone
/// gives reference atoms, then the SSE search runs with every subarray's
/// dictionary shrunk to atoms within `neighborhood_halfwidth` grid steps of
/// them. A neighbourhood covering the whole grid reproduces SSE.
pub fn dse_estimate(
    obs: &PilotObservation,
    tx_codebook: &Codebook,
    rx_codebook: &Codebook,
    neighborhood_halfwidth: usize,
    max_atoms_per_block: usize,
    residual_tol: f64,
) -> Result<ChannelEstimate> {
    estimate(
        obs,
        tx_codebook,
        rx_codebook,
        max_atoms_per_block,
        residual_tol,
        Some(neighborhood_halfwidth),
    )
}

/// Wrapped distance between two direction cosines, in grid steps of `dims`.
fn grid_distance(cb: &Codebook, a: usize, b: usize, dims: (usize, usize)) -> usize {
    let wrap = |d: f64| {
        let d = d.rem_euclid(2.0);
        d.min(2.0 - d)
    };
    let (ga, gb) = (cb.grid[a], cb.grid[b]);
    let dx = (wrap(ga.u - gb.u) * dims.0 as f64 / 2.0).round() as usize;
    let dy = (wrap(ga.v - gb.v) * dims.1 as f64 / 2.0).round() as usize;
    dx.max(dy)
}

fn candidates(cb: &Codebook, block: usize, seeds: Option<(&[usize], usize)>) -> Vec<usize> {
    let b = &cb.blocks[block];
    let all: Vec<usize> = b.atoms.clone().collect();
    let Some((refs, halfwidth)) = seeds else {
        return all;
    };
    let shrunk: Vec<usize> = all
        .iter()
        .copied()
        .filter(|&a| refs.iter().any(|&r| grid_distance(cb, a, r, b.grid_dims) <= halfwidth))
        .collect();
    if shrunk.is_empty() {
        log::info!("empty shrunken dictionary for block {block}, using the full block");
        all
    } else {
        shrunk
    }
}

/// Side-wise greedy selection shared by both stages.
///
/// `data` is observed as `D ~ S X` (Rx stage, `S` = sensed atom columns) or
/// `D ~ X S` (Tx stage, `S` = sensed atom rows); `sense` returns the sensed
/// atoms of one block in that orientation.
struct SideSearch<'a> {
    cb: &'a Codebook,
    rx_side: bool,
    data: &'a CMat,
    tol: f64,
}

struct SideResult {
    atoms: Vec<usize>,
    sensed: CMat,
    correlations: u64,
    residual_norms: Vec<f64>,
}

impl SideSearch<'_> {
    fn fit(&self, sensed: &CMat) -> Option<CMat> {
        if self.rx_side {
            let x = lstsq(sensed.as_ref(), self.data.as_ref())?;
            Some(self.data - sensed * x)
        } else {
            let st = sensed.transpose().to_owned();
            let dt = self.data.transpose().to_owned();
            let x = lstsq(st.as_ref(), dt.as_ref())?;
            Some(self.data - (st * x).transpose())
        }
    }

    fn append(&self, sensed: &CMat, extra: &CMat, k: usize) -> CMat {
        if self.rx_side {
            let mut out = Mat::zeros(sensed.nrows(), sensed.ncols() + 1);
            out.as_mut().get_mut(.., ..sensed.ncols()).copy_from(sensed);
            out.as_mut().col_mut(sensed.ncols()).copy_from(extra.col(k));
            out
        } else {
            let mut out = Mat::zeros(sensed.nrows() + 1, sensed.ncols());
            out.as_mut().get_mut(..sensed.nrows(), ..).copy_from(sensed);
            out.as_mut().row_mut(sensed.nrows()).copy_from(extra.row(k));
            out
        }
    }

    fn sense_pool(&self, sense: &impl Fn(usize, &[usize]) -> CMat, blocks: &[(usize, Vec<usize>)]) -> CMat {
        let parts: Vec<CMat> = blocks.iter().map(|(b, atoms)| sense(*b, atoms)).collect();
        let total: usize = blocks.iter().map(|(_, a)| a.len()).sum();
        let mut out = if self.rx_side {
            Mat::zeros(self.data.nrows(), total)
        } else {
            Mat::zeros(total, self.data.ncols())
        };
        let mut at = 0;
        for part in &parts {
            if self.rx_side {
                out.as_mut().get_mut(.., at..at + part.ncols()).copy_from(part);
                at += part.ncols();
            } else {
                out.as_mut().get_mut(at..at + part.nrows(), ..).copy_from(part);
                at += part.nrows();
            }
        }
        out
    }

    /// Greedy selection over the union of `blocks` (candidate atoms per
    /// block), at most `per_block` picks per block, continuing from `out`.
    fn phase(
        &self,
        sense: &impl Fn(usize, &[usize]) -> CMat,
        blocks: &[(usize, Vec<usize>)],
        per_block: usize,
        out: &mut SideResult,
        residual: &mut CMat,
    ) {
        let d_norm = out.residual_norms[0];
        let pool: Vec<(usize, usize)> = blocks
            .iter()
            .flat_map(|(b, atoms)| atoms.iter().map(move |&a| (*b, a)))
            .collect();
        let sensed = self.sense_pool(sense, blocks);
        let norms = if self.rx_side { col_norms(&sensed) } else { row_norms(&sensed) };
        let mut taken = vec![false; pool.len()];
        let mut picks = vec![0usize; self.cb.blocks.len()];
        let eligible = |k: usize, taken: &[bool], picks: &[usize]| !taken[k] && picks[pool[k].0] < per_block;
        loop {
            if residual.norm_l2() <= self.tol * d_norm {
                return;
            }
            let n_eligible = (0..pool.len()).filter(|&k| eligible(k, &taken, &picks)).count();
            if n_eligible == 0 {
                return;
            }
            let corr = if self.rx_side {
                row_norms(&(sensed.adjoint() * &*residual))
            } else {
                col_norms(&(&*residual * sensed.adjoint()))
            };
            out.correlations += n_eligible as u64;
            let scores = corr.iter().zip(&norms).map(|(c, n)| if *n > 0.0 { c / n } else { 0.0 });
            let Some(k) = argmax(scores, |k| !eligible(k, &taken, &picks)) else {
                return;
            };
            let grown = self.append(&out.sensed, &sensed, k);
            let Some(r) = self.fit(&grown) else {
                log::debug!("rank-deficient support, stopping selection");
                return;
            };
            taken[k] = true;
            picks[pool[k].0] += 1;
            out.atoms.push(pool[k].1);
            out.sensed = grown;
            *residual = r;
            out.residual_norms.push(residual.norm_l2());
        }
    }

    fn run(
        &self,
        sense: impl Fn(usize, &[usize]) -> CMat,
        per_block: usize,
        halfwidth: Option<usize>,
    ) -> SideResult {
        let empty = if self.rx_side {
            Mat::zeros(self.data.nrows(), 0)
        } else {
            Mat::zeros(0, self.data.ncols())
        };
        let fresh = || SideResult {
            atoms: Vec::new(),
            sensed: empty.clone(),
            correlations: 0,
            residual_norms: vec![self.data.norm_l2()],
        };
        let n_blocks = self.cb.blocks.len();
        // reference atoms from a search over the reference block alone
        let (seeds, scout_cost) = match halfwidth {
            None => (None, 0),
            Some(h) => {
                let mut scout = fresh();
                let reference = vec![(REFERENCE_BLOCK, candidates(self.cb, REFERENCE_BLOCK, None))];
                self.phase(&sense, &reference, per_block, &mut scout, &mut self.data.clone());
                (Some((scout.atoms, h)), scout.correlations)
            }
        };
        let pools: Vec<(usize, Vec<usize>)> = (0..n_blocks)
            .map(|b| (b, candidates(self.cb, b, seeds.as_ref().map(|(s, h)| (s.as_slice(), *h)))))
            .collect();
        let mut out = fresh();
        self.phase(&sense, &pools, per_block, &mut out, &mut self.data.clone());
        out.correlations += scout_cost;
        out
    }
}

fn estimate(
    obs: &PilotObservation,
    tx_cb: &Codebook,
    rx_cb: &Codebook,
    per_block: usize,
    tol: f64,
    halfwidth: Option<usize>,
) -> Result<ChannelEstimate> {
    check_dims(obs, tx_cb, rx_cb)?;
    if tx_cb.structure != CodebookStructure::PerSubarray || rx_cb.structure != CodebookStructure::PerSubarray {
        return Err(Error::invalid("subarray estimators need per-subarray codebooks"));
    }
    if !(tol >= 0.0) {
        return Err(Error::invalid("residual_tol must be non-negative"));
    }
    let y = &obs.measurements;

    let rx = SideSearch {
        cb: rx_cb,
        rx_side: true,
        data: y,
        tol,
    }
    .run(|b, atoms| sense_rx(obs, rx_cb, b, atoms), per_block, halfwidth);

    // Rx-side coefficients of every frame, to be explained by Tx atoms
    let z = if rx.atoms.is_empty() {
        Mat::<c64>::zeros(0, y.ncols())
    } else {
        lstsq(rx.sensed.as_ref(), y.as_ref()).expect("Rx support was solvable when selected")
    };
    let tx = SideSearch {
        cb: tx_cb,
        rx_side: false,
        data: &z,
        tol,
    }
    .run(|b, atoms| sense_tx(obs, tx_cb, b, atoms), per_block, halfwidth);

    // joint gains over all Rx x Tx atoms, then keep the strongest pairs of
    // every block pair and refit
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    if !rx.atoms.is_empty() && !tx.atoms.is_empty() {
        let st = tx.sensed.transpose().to_owned();
        let zt = z.transpose().to_owned();
        let dense = lstsq(st.as_ref(), zt.as_ref()).map(|x| x.transpose().to_owned());
        let Some(dense) = dense else {
            return Err(Error::Numerical("Tx support became rank deficient".into()));
        };
        for bq in 0..tx_cb.blocks.len() {
            for bp in 0..rx_cb.blocks.len() {
                let mut block: Vec<(usize, usize)> = Vec::new();
                for (j, &t) in tx.atoms.iter().enumerate() {
                    for (i, &r) in rx.atoms.iter().enumerate() {
                        if tx_cb.block_of(t) == bq && rx_cb.block_of(r) == bp {
                            block.push((i, j));
                        }
                    }
                }
                // strongest first, then lowest flat index
                block.sort_by(|a, b| {
                    dense[*b]
                        .norm()
                        .total_cmp(&dense[*a].norm())
                        .then((tx.atoms[a.1], rx.atoms[a.0]).cmp(&(tx.atoms[b.1], rx.atoms[b.0])))
                });
                pairs.extend(block.into_iter().take(per_block));
            }
        }
    }
    let (gains, resid) = fit_pairs(y, &rx.sensed, &tx.sensed, &mut pairs);
    let support: Vec<(usize, usize)> = pairs.iter().map(|&(i, j)| (rx.atoms[i], tx.atoms[j])).collect();
    let h_hat = assemble(obs, tx_cb, rx_cb, &support, &gains);
    let mut residual_norms = rx.residual_norms;
    residual_norms.push(resid.norm_l2());
    Ok(ChannelEstimate {
        h_hat,
        support,
        gains: gains.into_iter().map(|g| g / obs.channel_scale).collect(),
        correlations: rx.correlations + tx.correlations,
        residual_norms,
    })
}
