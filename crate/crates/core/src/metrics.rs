//! Water-filling power allocation, channel capacity and NMSE.

use crate::channel::{relative_error_db, ChannelMatrix};
use crate::error::{Error, Result};
use crate::linalg::singular_values;

/// Singular values below this fraction of the largest are zero modes.
pub const ZERO_MODE_REL_TOL: f64 = 1e-12;
const BISECTION_REL_TOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;

/// Thermal noise density (dBm/Hz).
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Thermal noise power over `bandwidth_hz`, in dBm.
pub fn thermal_noise_dbm(bandwidth_hz: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub per_mode_power: Vec<f64>,
    pub water_level: f64,
}

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.per_mode_power.iter().sum()
    }
}

/// Capacity-achieving allocation `p_i = max(0, mu - noise / g_i)` with
/// `sum p_i = total_power`. The water level is bracketed by bisection, then
/// pinned to the closed form of the active set it identifies.
pub fn water_filling(channel_gains: &[f64], total_power: f64, noise_power: f64) -> Result<PowerAllocation> {
    if !(total_power > 0.0 && total_power.is_finite()) {
        return Err(Error::invalid("total power must be positive"));
    }
    if !(noise_power > 0.0 && noise_power.is_finite()) {
        return Err(Error::invalid("noise power must be positive"));
    }
    if channel_gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::invalid("channel gains must be finite and non-negative"));
    }
    let g_max = channel_gains.iter().cloned().fold(0.0, f64::max);
    if g_max <= 0.0 {
        return Err(Error::NoCapacity);
    }
    let floor = |g: f64| if g > 0.0 { noise_power / g } else { f64::INFINITY };
    let allocated = |mu: f64| -> f64 {
        channel_gains
            .iter()
            .map(|&g| (mu - floor(g)).max(0.0))
            .sum()
    };

    let mut lo = floor(g_max);
    let mut hi = total_power + floor(g_max);
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= BISECTION_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if allocated(mid) > total_power {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mu_bisect = 0.5 * (lo + hi);

    // Closed-form level over the active set found by bisection; the loop
    // shrinks the set if rounding left a mode exactly at the threshold.
    let mut active: Vec<usize> = (0..channel_gains.len())
        .filter(|&i| floor(channel_gains[i]) < mu_bisect)
        .collect();
    if active.is_empty() {
        active.push(
            channel_gains
                .iter()
                .position(|&g| g == g_max)
                .expect("g_max is attained"),
        );
    }
    let mu = loop {
        let mu = (total_power + active.iter().map(|&i| floor(channel_gains[i])).sum::<f64>())
            / active.len() as f64;
        let before = active.len();
        active.retain(|&i| floor(channel_gains[i]) < mu);
        if active.len() == before || active.is_empty() {
            break mu;
        }
    };
    let per_mode_power = channel_gains
        .iter()
        .map(|&g| (mu - floor(g)).max(0.0))
        .collect();
    Ok(PowerAllocation {
        per_mode_power,
        water_level: mu,
    })
}

/// Squared singular values of `h` with numerically zero modes removed.
pub fn eigenmode_gains(h: &ChannelMatrix) -> Result<Vec<f64>> {
    let s = singular_values(h.entries.as_ref())?;
    let s_max = s.first().copied().unwrap_or(0.0);
    Ok(s.into_iter()
        .filter(|&v| v > ZERO_MODE_REL_TOL * s_max)
        .map(|v| v * v)
        .collect())
}

/// Capacity in bits/s/Hz given eigenmode gains.
pub fn capacity_from_gains(gains: &[f64], total_power: f64, noise_power: f64) -> Result<f64> {
    let alloc = water_filling(gains, total_power, noise_power)?;
    Ok(gains
        .iter()
        .zip(&alloc.per_mode_power)
        .map(|(g, p)| (1.0 + p * g / noise_power).log2())
        .sum())
}

/// Water-filled MIMO capacity in bits/s/Hz.
pub fn capacity_bits(h: &ChannelMatrix, total_power: f64, noise_power: f64) -> Result<f64> {
    capacity_from_gains(&eigenmode_gains(h)?, total_power, noise_power)
}

/// Capacity without transmit CSI: `total_power` split evenly over the `N_tx`
/// antennas, `log2 det(I + P/(N_tx noise) H H^H)`.
pub fn capacity_equal_power(h: &ChannelMatrix, total_power: f64, noise_power: f64) -> Result<f64> {
    if !(total_power >= 0.0 && total_power.is_finite()) {
        return Err(Error::invalid("total power must be non-negative"));
    }
    if !(noise_power > 0.0 && noise_power.is_finite()) {
        return Err(Error::invalid("noise power must be positive"));
    }
    Ok(capacity_equal_power_from_gains(&eigenmode_gains(h)?, h.ncols(), total_power, noise_power))
}

/// [`capacity_equal_power`] given eigenmode gains and the transmit antenna count.
pub fn capacity_equal_power_from_gains(gains: &[f64], n_tx: usize, total_power: f64, noise_power: f64) -> f64 {
    let snr = total_power / (n_tx as f64 * noise_power);
    gains.iter().map(|g| (1.0 + snr * g).log2()).sum()
}

/// `10 log10(|H_est - H|_F^2 / |H|_F^2)`, floored at the crate error floor.
pub fn nmse_db(h_est: &ChannelMatrix, h_true: &ChannelMatrix) -> Result<f64> {
    relative_error_db(&h_est.entries, &h_true.entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelModel, ERROR_FLOOR_DB};
    use crate::linalg::c64;
    use faer::Mat;

    fn channel(entries: crate::linalg::CMat) -> ChannelMatrix {
        ChannelMatrix {
            entries,
            model: ChannelModel::Swm,
            wavelength: 1e-3,
            tx_geometry_id: 0,
            rx_geometry_id: 0,
        }
    }

    #[test]
    fn symmetric_modes_split_evenly() {
        let a = water_filling(&[1.0, 1.0], 2.0, 1.0).unwrap();
        assert!((a.per_mode_power[0] - 1.0).abs() < 1e-12);
        assert!((a.per_mode_power[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_power_closed_form_and_bound() {
        // diag(2, 1) under 2 W, unit noise: each antenna gets 1 W
        let h = channel(Mat::from_fn(2, 2, |i, j| c64::new(if i == j { 2.0 - i as f64 } else { 0.0 }, 0.0)));
        let c = capacity_equal_power(&h, 2.0, 1.0).unwrap();
        assert!((c - (5f64.log2() + 1.0)).abs() < 1e-12);
        assert!(c <= capacity_bits(&h, 2.0, 1.0).unwrap() + 1e-12);
        assert_eq!(capacity_equal_power(&h, 0.0, 1.0).unwrap(), 0.0);
        assert!(capacity_equal_power(&h, 1.0, 0.0).is_err());
    }

    #[test]
    fn single_mode_takes_everything() {
        let a = water_filling(&[4.0], 1.0, 1.0).unwrap();
        assert!((a.per_mode_power[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weak_mode_stays_dry() {
        let a = water_filling(&[2.0, 0.1], 0.1, 1.0).unwrap();
        assert!((a.per_mode_power[0] - 0.1).abs() < 1e-12);
        assert_eq!(a.per_mode_power[1], 0.0);
    }

    #[test]
    fn water_filling_errors() {
        assert_eq!(water_filling(&[0.0, 0.0], 1.0, 1.0), Err(Error::NoCapacity));
        assert!(water_filling(&[1.0], 0.0, 1.0).is_err());
        assert!(water_filling(&[1.0], 1.0, 0.0).is_err());
        assert!(water_filling(&[-1.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn extreme_scales_conserve_power() {
        // realistic link budgets: tiny gains, tiny noise
        let g = [3e-9, 1e-9, 2e-12, 0.0];
        let a = water_filling(&g, 0.0316, 2e-11).unwrap();
        assert!((a.total() - 0.0316).abs() < 1e-9 * 0.0316);
    }

    #[test]
    fn identity_channel_capacity() {
        let h = channel(Mat::from_fn(2, 2, |i, j| c64::new(if i == j { 1.0 } else { 0.0 }, 0.0)));
        assert!((capacity_bits(&h, 2.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nmse_identities() {
        let h = channel(Mat::from_fn(3, 2, |i, j| c64::new(i as f64 + 1.0, j as f64)));
        assert_eq!(nmse_db(&h, &h).unwrap(), ERROR_FLOOR_DB);
        let zero = h.scaled(c64::new(0.0, 0.0));
        assert!(nmse_db(&zero, &h).unwrap().abs() < 1e-12);
        let norm = h.entries.norm_l2();
        let e = Mat::from_fn(3, 2, |i, j| if i == 0 && j == 0 { c64::new(0.1 * norm, 0.0) } else { c64::new(0.0, 0.0) });
        let noisy = h.with_entries(&h.entries + &e);
        assert!((nmse_db(&noisy, &h).unwrap() + 20.0).abs() < 1e-9);
        assert_eq!(nmse_db(&h, &zero), Err(Error::ZeroNorm));
    }

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
        assert!((thermal_noise_dbm(5e9) + 77.01).abs() < 0.01);
    }
}
