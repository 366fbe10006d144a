use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::linalg::{c64, cis};

/// Magnitude range of single-bounce reflection gains.
pub const REFLECTION_GAIN_RANGE: (f64, f64) = (0.05, 0.3);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathKind {
    LineOfSight,
    SingleBounce { scatterer: Vec3 },
}

/// One propagation path of a scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    pub kind: PathKind,
    pub reflection_gain: c64,
}

impl PathParams {
    pub fn line_of_sight() -> Self {
        PathParams {
            kind: PathKind::LineOfSight,
            reflection_gain: c64::new(1.0, 0.0),
        }
    }

    pub fn single_bounce(scatterer: Vec3, reflection_gain: c64) -> Self {
        PathParams {
            kind: PathKind::SingleBounce { scatterer },
            reflection_gain,
        }
    }

    /// Propagation length from a Tx element at `tx` to an Rx element at `rx`.
    #[inline]
    pub fn length(&self, tx: &Vec3, rx: &Vec3) -> f64 {
        match &self.kind {
            PathKind::LineOfSight => tx.distance(rx),
            PathKind::SingleBounce { scatterer } => tx.distance(scatterer) + scatterer.distance(rx),
        }
    }

    /// Departure direction at `tx` and propagation direction of the arriving
    /// wave at `rx` (pointing from the last interaction point into the Rx).
    pub fn directions(&self, tx: &Vec3, rx: &Vec3) -> Result<(Vec3, Vec3)> {
        let (towards, from) = match &self.kind {
            PathKind::LineOfSight => (*rx, *tx),
            PathKind::SingleBounce { scatterer } => (*scatterer, *scatterer),
        };
        let dep = (towards - *tx)
            .normalized()
            .ok_or_else(|| Error::DegenerateScene("zero-length departure leg".into()))?;
        let arr = (*rx - from)
            .normalized()
            .ok_or_else(|| Error::DegenerateScene("zero-length arrival leg".into()))?;
        Ok((dep, arr))
    }

    /// Free-space complex gain between one Tx and one Rx element:
    /// `gain * lambda / (4 pi d) * exp(-j 2 pi d / lambda)`. Returns `None`
    /// for a zero propagation length.
    #[inline]
    pub fn pair_gain(&self, tx: &Vec3, rx: &Vec3, wavelength: f64) -> Option<c64> {
        let d = self.length(tx, rx);
        if !(d > 0.0) {
            return None;
        }
        let amplitude = wavelength / (4.0 * std::f64::consts::PI * d);
        let phase = -std::f64::consts::TAU * (d / wavelength);
        Some(self.reflection_gain * (cis(phase) * amplitude))
    }
}

/// Axis-aligned box that scatterers are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScattererBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl ScattererBox {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        ScattererBox { min, max }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p.0[i] >= self.min.0[i] && p.0[i] <= self.max.0[i])
    }

    fn validate(&self) -> Result<()> {
        let ok = (0..3).all(|i| {
            self.min.0[i].is_finite() && self.max.0[i].is_finite() && self.max.0[i] > self.min.0[i]
        });
        if !ok {
            return Err(Error::invalid(format!("degenerate scatterer box {self:?}")));
        }
        Ok(())
    }
}

/// One line-of-sight path followed by `n_nlos` single-bounce paths with
/// scatterers uniform in `volume` and reflection gains of uniform phase and
/// log-uniform magnitude in [`REFLECTION_GAIN_RANGE`].
pub fn sample_paths(
    seed: u64,
    n_nlos: usize,
    tx_pose: &Pose,
    rx_pose: &Pose,
    volume: &ScattererBox,
) -> Result<Vec<PathParams>> {
    volume.validate()?;
    if volume.contains(&tx_pose.origin) || volume.contains(&rx_pose.origin) {
        return Err(Error::invalid("scatterer box contains an array origin"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = REFLECTION_GAIN_RANGE;
    let mut paths = Vec::with_capacity(n_nlos + 1);
    paths.push(PathParams::line_of_sight());
    for _ in 0..n_nlos {
        let mut s = [0.0; 3];
        for (i, c) in s.iter_mut().enumerate() {
            *c = rng.random_range(volume.min.0[i]..volume.max.0[i]);
        }
        let magnitude = rng.random_range(lo.ln()..hi.ln()).exp();
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        paths.push(PathParams::single_bounce(Vec3(s), cis(phase) * magnitude));
    }
    Ok(paths)
}
