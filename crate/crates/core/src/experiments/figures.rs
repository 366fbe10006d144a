use rayon::prelude::*;

use super::config::{ExperimentConfig, Figure};
use super::seeds::{trial_seed, Stream};
use super::table::Table;
use crate::beamforming::{design_digital, design_wsms_analog, spectral_efficiency};
use crate::channel::{approximation_error_db, gen_hspm, gen_pwm, gen_swm, sample_paths, PathParams, ScattererBox};
use crate::error::Result;
use crate::estimation::{
    build_far_field_codebook, build_subarray_codebook, dse_estimate, omp_estimate, simulate_pilots, sse_estimate,
};
use crate::geometry::{build_upa, build_wsms, ArrayGeometry, PlacedArray, Pose, Vec3};
use crate::metrics::{
    capacity_equal_power_from_gains, capacity_from_gains, dbm_to_watts, eigenmode_gains, nmse_db,
};

/// Tx at the origin facing +z, Rx at `(0, 0, d)` facing back.
pub fn link(tx: &ArrayGeometry, rx: &ArrayGeometry, distance: f64) -> (PlacedArray, PlacedArray) {
    (
        PlacedArray::new(tx.clone(), Pose::identity()),
        PlacedArray::new(rx.clone(), Pose::facing_back(Vec3::new(0.0, 0.0, distance))),
    )
}

/// Scatterers in a box beside the link, scaled with the distance.
pub fn scatterer_box(distance: f64) -> ScattererBox {
    let d = distance;
    ScattererBox::new(Vec3::new(0.1 * d, -0.1 * d, 0.25 * d), Vec3::new(0.3 * d, 0.1 * d, 0.75 * d))
}

/// Paths of one trial. The draw depends only on the master seed and the
/// trial index, so every sweep point sees the same relative scene.
pub fn trial_paths(cfg: &ExperimentConfig, distance: f64, trial: usize) -> Result<Vec<PathParams>> {
    let (tx, rx) = (Pose::identity(), Pose::facing_back(Vec3::new(0.0, 0.0, distance)));
    sample_paths(
        trial_seed(cfg.seed, Stream::Paths, trial as u64),
        cfg.n_paths - 1,
        &tx,
        &rx,
        &scatterer_box(distance),
    )
}

pub fn wsms_geometry(cfg: &ExperimentConfig, spacing_wl: f64) -> Result<ArrayGeometry> {
    let (k, s) = (cfg.grid_side(), cfg.subarray_side());
    build_wsms(k, k, s, s, 0.5, spacing_wl, cfg.wavelength())
}

pub fn compact_geometry(cfg: &ExperimentConfig) -> Result<ArrayGeometry> {
    let side = cfg.grid_side() * cfg.subarray_side();
    build_upa(side, side, 0.5, cfg.wavelength())
}

/// Evaluates `job(point, trial)` for every pair, in parallel, and returns the
/// per-point averages. Reduction runs in trial order whatever the thread count.
fn averaged(
    n_points: usize,
    trials: usize,
    job: impl Fn(usize, usize) -> Result<Vec<f64>> + Sync,
) -> Result<Vec<Vec<f64>>> {
    let results: Vec<Vec<f64>> = (0..n_points * trials)
        .into_par_iter()
        .map(|i| job(i / trials, i % trials))
        .collect::<Result<_>>()?;
    Ok(results
        .chunks(trials)
        .map(|chunk| {
            let mut acc = vec![0.0; chunk[0].len()];
            for r in chunk {
                for (a, v) in acc.iter_mut().zip(r) {
                    *a += v;
                }
            }
            acc.iter().map(|a| a / trials as f64).collect()
        })
        .collect())
}

fn gap_percent(full: f64, approx: f64) -> f64 {
    100.0 * (full - approx) / full
}

pub fn spacing_label(spacing_wl: f64) -> String {
    if spacing_wl.fract() == 0.0 {
        format!("{spacing_wl:.0}wl")
    } else {
        format!("{spacing_wl}wl")
    }
}

/// SWM versus PWM capacity. Power is split evenly over the transmit
/// antennas; water-filled capacities are reported alongside.
pub fn run_fig_capacity(cfg: &ExperimentConfig) -> Result<Table> {
    let noise = dbm_to_watts(cfg.noise_dbm);
    let geos = cfg
        .subarray_spacing_wl
        .iter()
        .map(|&s| wsms_geometry(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let nd = cfg.distance_m.len();
    let avg = averaged(geos.len() * nd, cfg.trials, |point, trial| {
        let (geo, d) = (&geos[point / nd], cfg.distance_m[point % nd]);
        let (tx, rx) = link(geo, geo, d);
        let paths = trial_paths(cfg, d, trial)?;
        let gs = eigenmode_gains(&gen_swm(&tx, &rx, &paths)?)?;
        let gp = eigenmode_gains(&gen_pwm(&tx, &rx, &paths)?)?;
        let mut out = Vec::new();
        for &pdbm in &cfg.tx_power_dbm {
            let p = dbm_to_watts(pdbm);
            out.push(capacity_equal_power_from_gains(&gs, geo.len(), p, noise));
            out.push(capacity_equal_power_from_gains(&gp, geo.len(), p, noise));
            out.push(capacity_from_gains(&gs, p, noise)?);
            out.push(capacity_from_gains(&gp, p, noise)?);
        }
        Ok(out)
    })?;
    let mut table = Table::new(&[
        "subarray_spacing_wl",
        "tx_power_dbm",
        "distance_m",
        "capacity_swm",
        "capacity_pwm",
        "gap_percent",
        "capacity_swm_wf",
        "capacity_pwm_wf",
        "gap_percent_wf",
    ]);
    for (si, &spacing) in cfg.subarray_spacing_wl.iter().enumerate() {
        for (pi, &pdbm) in cfg.tx_power_dbm.iter().enumerate() {
            for (di, &d) in cfg.distance_m.iter().enumerate() {
                let v = &avg[si * nd + di][4 * pi..4 * pi + 4];
                table.push(vec![
                    spacing,
                    pdbm,
                    d,
                    v[0],
                    v[1],
                    gap_percent(v[0], v[1]),
                    v[2],
                    v[3],
                    gap_percent(v[2], v[3]),
                ]);
            }
        }
    }
    Ok(table)
}

/// PWM and HSPM approximation error against SWM, plus the SWM self-error
/// control column.
pub fn run_fig_approx_error(cfg: &ExperimentConfig) -> Result<Table> {
    let geos = cfg
        .subarray_spacing_wl
        .iter()
        .map(|&s| wsms_geometry(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let nd = cfg.distance_m.len();
    let avg = averaged(geos.len() * nd, cfg.trials, |point, trial| {
        let (geo, d) = (&geos[point / nd], cfg.distance_m[point % nd]);
        let (tx, rx) = link(geo, geo, d);
        let paths = trial_paths(cfg, d, trial)?;
        let swm = gen_swm(&tx, &rx, &paths)?;
        Ok(vec![
            approximation_error_db(&gen_pwm(&tx, &rx, &paths)?, &swm)?,
            approximation_error_db(&gen_hspm(&tx, &rx, &paths, 1)?, &swm)?,
            approximation_error_db(&swm, &swm)?,
        ])
    })?;
    let mut table = Table::new(&[
        "subarray_spacing_wl",
        "distance_m",
        "error_db_pwm",
        "error_db_hspm",
        "error_db_swm",
    ]);
    for (si, &spacing) in cfg.subarray_spacing_wl.iter().enumerate() {
        for (di, &d) in cfg.distance_m.iter().enumerate() {
            let v = &avg[si * nd + di];
            table.push(vec![spacing, d, v[0], v[1], v[2]]);
        }
    }
    Ok(table)
}

/// Pilot budget of the estimation figure: `N/2` combiners, `N/4` frames.
pub fn pilot_budget(n_antennas: usize) -> (usize, usize) {
    ((n_antennas / 4).max(1), (n_antennas / 2).max(1))
}

/// Residual stopping threshold, relative to `|Y|`, for measurements of a
/// unit-power channel at noise variance `sigma2`.
pub fn residual_tolerance(sigma2: f64) -> f64 {
    (sigma2 / (1.0 + sigma2)).sqrt()
}

/// NMSE of whole-array OMP (DFT codebook), separate side estimation and
/// dictionary shrinkage estimation. Each trial reuses its channel and pilot
/// matrices across the SNR sweep.
pub fn run_fig_estimation(cfg: &ExperimentConfig) -> Result<Table> {
    let geos = cfg
        .subarray_spacing_wl
        .iter()
        .map(|&s| wsms_geometry(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let books = geos
        .iter()
        .map(|g| (build_far_field_codebook(g, cfg.oversampling), build_subarray_codebook(g, cfg.oversampling)))
        .collect::<Vec<_>>();
    let (q_frames, m_rx) = pilot_budget(cfg.n_antennas);
    let nd = cfg.distance_m.len();
    let avg = averaged(geos.len() * nd, cfg.trials, |point, trial| {
        let (geo, d) = (&geos[point / nd], cfg.distance_m[point % nd]);
        let (ff, sub) = &books[point / nd];
        let (tx, rx) = link(geo, geo, d);
        let h = gen_swm(&tx, &rx, &trial_paths(cfg, d, trial)?)?;
        let pilot_seed = trial_seed(cfg.seed, Stream::Pilots, trial as u64);
        let l = cfg.n_paths;
        let mut out = Vec::new();
        for &snr in &cfg.snr_db {
            let obs = simulate_pilots(&h, q_frames, m_rx, snr, pilot_seed)?;
            let tol = residual_tolerance(obs.noise_power);
            let dft = omp_estimate(&obs, ff, ff, l, tol)?;
            let sse = sse_estimate(&obs, sub, sub, l, tol)?;
            let dse = dse_estimate(&obs, sub, sub, cfg.dse_halfwidth, l, tol)?;
            for e in [&dft, &sse, &dse] {
                out.push(nmse_db(&e.h_hat, &h)?);
            }
            for e in [&dft, &sse, &dse] {
                out.push(e.correlations as f64);
            }
        }
        Ok(out)
    })?;
    let mut table = Table::new(&[
        "subarray_spacing_wl",
        "distance_m",
        "snr_db",
        "nmse_db_dft",
        "nmse_db_sse",
        "nmse_db_dse",
        "correlations_dft",
        "correlations_sse",
        "correlations_dse",
    ]);
    for (si, &spacing) in cfg.subarray_spacing_wl.iter().enumerate() {
        for (di, &d) in cfg.distance_m.iter().enumerate() {
            for (k, &snr) in cfg.snr_db.iter().enumerate() {
                let v = &avg[si * nd + di][6 * k..6 * k + 6];
                let mut row = vec![spacing, d, snr];
                row.extend_from_slice(v);
                table.push(row);
            }
        }
    }
    Ok(table)
}

/// Hybrid WSMS spectral efficiency per subarray spacing against the
/// capacity of a compact half-wavelength array with the same element count.
pub fn run_fig_spectral_efficiency(cfg: &ExperimentConfig) -> Result<Table> {
    let noise = dbm_to_watts(cfg.noise_dbm);
    let compact = compact_geometry(cfg)?;
    let geos = cfg
        .subarray_spacing_wl
        .iter()
        .map(|&s| wsms_geometry(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let np = cfg.tx_power_dbm.len();
    let avg = averaged(cfg.distance_m.len(), cfg.trials, |di, trial| {
        let d = cfg.distance_m[di];
        let paths = trial_paths(cfg, d, trial)?;
        let (tx, rx) = link(&compact, &compact, d);
        let gc = eigenmode_gains(&gen_swm(&tx, &rx, &paths)?)?;
        let mut out = Vec::with_capacity(np * (1 + geos.len()));
        for &pdbm in &cfg.tx_power_dbm {
            out.push(capacity_from_gains(&gc, dbm_to_watts(pdbm), noise)?);
        }
        for geo in &geos {
            let (tx, rx) = link(geo, geo, d);
            let h = gen_swm(&tx, &rx, &paths)?;
            let (fa, wa) = design_wsms_analog(&h, geo, geo, cfg.n_rf)?;
            for &pdbm in &cfg.tx_power_dbm {
                let p = dbm_to_watts(pdbm);
                let design = design_digital(&h, fa.clone(), wa.clone(), cfg.n_rf, p, noise)?;
                out.push(spectral_efficiency(&h, &design.precoder, &design.combiner, p, noise)?);
            }
        }
        Ok(out)
    })?;
    let mut columns = vec!["distance_m".to_string(), "tx_power_dbm".into(), "se_compact".into()];
    columns.extend(cfg.subarray_spacing_wl.iter().map(|&s| format!("se_wsms_{}", spacing_label(s))));
    let mut table = Table::new(&columns);
    for (di, &d) in cfg.distance_m.iter().enumerate() {
        for (pi, &pdbm) in cfg.tx_power_dbm.iter().enumerate() {
            let v = &avg[di];
            let mut row = vec![d, pdbm, v[pi]];
            row.extend((0..geos.len()).map(|g| v[np * (1 + g) + pi]));
            table.push(row);
        }
    }
    Ok(table)
}

pub fn run_figure(cfg: &ExperimentConfig) -> Result<Table> {
    match cfg.figure {
        Figure::Capacity => run_fig_capacity(cfg),
        Figure::ApproxError => run_fig_approx_error(cfg),
        Figure::Estimation => run_fig_estimation(cfg),
        Figure::SpectralEfficiency => run_fig_spectral_efficiency(cfg),
    }
}
