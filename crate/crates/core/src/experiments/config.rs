use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Capacity,
    ApproxError,
    Estimation,
    SpectralEfficiency,
}

impl Figure {
    pub const ALL: [Figure; 4] = [
        Figure::Capacity,
        Figure::ApproxError,
        Figure::Estimation,
        Figure::SpectralEfficiency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Capacity => "fig-capacity",
            Figure::ApproxError => "fig-approx-error",
            Figure::Estimation => "fig-estimation",
            Figure::SpectralEfficiency => "fig-spectral-efficiency",
        }
    }
}

/// Fully resolved experiment parameters. Sweeps are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub figure: Figure,
    pub frequency_ghz: f64,
    pub n_antennas: usize,
    pub n_subarrays: usize,
    pub n_rf: usize,
    pub n_paths: usize,
    pub subarray_spacing_wl: Vec<f64>,
    pub distance_m: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub tx_power_dbm: Vec<f64>,
    pub noise_dbm: f64,
    /// Codebook oversampling factor of the estimation figure.
    pub oversampling: f64,
    /// Neighbourhood half-width (grid steps) of dictionary shrinkage.
    pub dse_halfwidth: usize,
    pub trials: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
}

#[derive(Clone, Copy)]
enum Kind {
    Real,
    Count,
    Seed,
    Sweep,
    Path,
}

const KEYS: [(&str, Kind); 15] = [
    ("frequency_ghz", Kind::Real),
    ("n_antennas", Kind::Count),
    ("n_subarrays", Kind::Count),
    ("n_rf", Kind::Count),
    ("n_paths", Kind::Count),
    ("subarray_spacing_wl", Kind::Sweep),
    ("distance_m", Kind::Sweep),
    ("snr_db", Kind::Sweep),
    ("tx_power_dbm", Kind::Sweep),
    ("noise_dbm", Kind::Real),
    ("oversampling", Kind::Real),
    ("dse_halfwidth", Kind::Count),
    ("trials", Kind::Count),
    ("seed", Kind::Seed),
    ("output_path", Kind::Path),
];

enum Value {
    Real(f64),
    Int(u64),
    List(Vec<f64>),
    Path(PathBuf),
}

impl ExperimentConfig {
    pub fn defaults(figure: Figure) -> Self {
        let base = ExperimentConfig {
            figure,
            frequency_ghz: 300.0,
            n_antennas: 1024,
            n_subarrays: 4,
            n_rf: 4,
            n_paths: 2,
            subarray_spacing_wl: vec![64.0],
            distance_m: vec![40.0],
            snr_db: vec![15.0],
            tx_power_dbm: vec![15.0],
            noise_dbm: -77.0,
            oversampling: 1.0,
            dse_halfwidth: 2,
            trials: 50,
            seed: 0,
            output_path: None,
        };
        match figure {
            Figure::Capacity => ExperimentConfig {
                distance_m: vec![10.0, 12.0, 15.0, 18.0, 20.0, 25.0, 30.0, 40.0, 50.0, 60.0, 80.0, 100.0],
                tx_power_dbm: vec![2.0],
                ..base
            },
            Figure::ApproxError => ExperimentConfig {
                subarray_spacing_wl: vec![32.0],
                distance_m: vec![1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 100.0],
                ..base
            },
            Figure::Estimation => ExperimentConfig {
                subarray_spacing_wl: vec![48.0],
                snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
                ..base
            },
            Figure::SpectralEfficiency => ExperimentConfig {
                subarray_spacing_wl: vec![64.0, 128.0, 256.0],
                tx_power_dbm: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
                ..base
            },
        }
    }

    /// Side length of the square subarray super-grid.
    pub fn grid_side(&self) -> usize {
        exact_sqrt(self.n_subarrays).unwrap_or(0)
    }

    /// Side length of one square subarray.
    pub fn subarray_side(&self) -> usize {
        exact_sqrt(self.n_antennas / self.n_subarrays.max(1)).unwrap_or(0)
    }

    pub fn wavelength(&self) -> f64 {
        crate::geometry::wavelength_from_ghz(self.frequency_ghz)
    }

    fn set(&mut self, key: &str, v: Value) {
        match (key, v) {
            ("frequency_ghz", Value::Real(x)) => self.frequency_ghz = x,
            ("noise_dbm", Value::Real(x)) => self.noise_dbm = x,
            ("oversampling", Value::Real(x)) => self.oversampling = x,
            ("n_antennas", Value::Int(x)) => self.n_antennas = x as usize,
            ("n_subarrays", Value::Int(x)) => self.n_subarrays = x as usize,
            ("n_rf", Value::Int(x)) => self.n_rf = x as usize,
            ("n_paths", Value::Int(x)) => self.n_paths = x as usize,
            ("dse_halfwidth", Value::Int(x)) => self.dse_halfwidth = x as usize,
            ("trials", Value::Int(x)) => self.trials = x as usize,
            ("seed", Value::Int(x)) => self.seed = x,
            ("subarray_spacing_wl", Value::List(x)) => self.subarray_spacing_wl = x,
            ("distance_m", Value::List(x)) => self.distance_m = x,
            ("snr_db", Value::List(x)) => self.snr_db = x,
            ("tx_power_dbm", Value::List(x)) => self.tx_power_dbm = x,
            ("output_path", Value::Path(p)) => self.output_path = Some(p),
            _ => unreachable!("kind table and setter disagree on `{key}`"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("frequency_ghz", self.frequency_ghz),
            ("oversampling", self.oversampling),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be positive and finite"));
            }
        }
        if !self.noise_dbm.is_finite() {
            return Err(Error::config("noise_dbm", "must be finite"));
        }
        for (key, v) in [
            ("n_antennas", self.n_antennas),
            ("n_subarrays", self.n_subarrays),
            ("n_paths", self.n_paths),
            ("trials", self.trials),
        ] {
            if v == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        if exact_sqrt(self.n_subarrays).is_none() {
            return Err(Error::config("n_subarrays", "must be a perfect square"));
        }
        if !self.n_antennas.is_multiple_of(self.n_subarrays) || exact_sqrt(self.n_antennas / self.n_subarrays).is_none() {
            return Err(Error::config(
                "n_antennas",
                "must be n_subarrays times a perfect square",
            ));
        }
        if self.n_rf != self.n_subarrays {
            return Err(Error::config("n_rf", "must equal n_subarrays (one chain per subarray)"));
        }
        for (key, sweep) in [
            ("subarray_spacing_wl", &self.subarray_spacing_wl),
            ("distance_m", &self.distance_m),
            ("snr_db", &self.snr_db),
            ("tx_power_dbm", &self.tx_power_dbm),
        ] {
            if sweep.is_empty() {
                return Err(Error::config(key, "sweep is empty"));
            }
            if sweep.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(key, "sweep values must be finite"));
            }
            if sweep.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::config(key, "sweep must be strictly increasing"));
            }
        }
        if self.distance_m[0] <= 0.0 {
            return Err(Error::config("distance_m", "distances must be positive"));
        }
        let min_spacing = 0.5 * self.subarray_side() as f64;
        if self.subarray_spacing_wl[0] < min_spacing {
            return Err(Error::config(
                "subarray_spacing_wl",
                format!("subarrays overlap below {min_spacing} wavelengths"),
            ));
        }
        Ok(())
    }

    /// TOML lines echoing every resolved key.
    pub fn to_toml_lines(&self) -> Vec<String> {
        let list = |v: &[f64]| {
            let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
            format!("[{}]", items.join(", "))
        };
        let mut out = vec![
            format!("frequency_ghz = {:?}", self.frequency_ghz),
            format!("n_antennas = {}", self.n_antennas),
            format!("n_subarrays = {}", self.n_subarrays),
            format!("n_rf = {}", self.n_rf),
            format!("n_paths = {}", self.n_paths),
            format!("subarray_spacing_wl = {}", list(&self.subarray_spacing_wl)),
            format!("distance_m = {}", list(&self.distance_m)),
            format!("snr_db = {}", list(&self.snr_db)),
            format!("tx_power_dbm = {}", list(&self.tx_power_dbm)),
            format!("noise_dbm = {:?}", self.noise_dbm),
            format!("oversampling = {:?}", self.oversampling),
            format!("dse_halfwidth = {}", self.dse_halfwidth),
            format!("trials = {}", self.trials),
            format!("seed = {}", self.seed),
        ];
        if let Some(p) = &self.output_path {
            let mut s = String::new();
            let _ = write!(s, "output_path = {:?}", p.display().to_string());
            out.push(s);
        }
        out
    }
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

fn kind_of(key: &str) -> Result<Kind> {
    KEYS.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, kind)| *kind)
        .ok_or_else(|| Error::config(key, "unknown key"))
}

fn from_toml(key: &str, kind: Kind, v: &toml::Value) -> Result<Value> {
    let number = |v: &toml::Value| match v {
        toml::Value::Float(x) => Some(*x),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    };
    let bad = |want: &str| Error::config(key, format!("expected {want}, got {}", v.type_str()));
    match kind {
        Kind::Real => number(v).map(Value::Real).ok_or_else(|| bad("a number")),
        Kind::Count | Kind::Seed => match v {
            toml::Value::Integer(i) if *i >= 0 => Ok(Value::Int(*i as u64)),
            _ => Err(bad("a non-negative integer")),
        },
        Kind::Sweep => match v {
            toml::Value::Array(items) => items
                .iter()
                .map(|x| number(x).ok_or_else(|| bad("an array of numbers")))
                .collect::<Result<Vec<_>>>()
                .map(Value::List),
            _ => number(v).map(|x| Value::List(vec![x])).ok_or_else(|| bad("a number or array")),
        },
        Kind::Path => match v {
            toml::Value::String(s) => Ok(Value::Path(PathBuf::from(s))),
            _ => Err(bad("a string")),
        },
    }
}

fn from_flag(key: &str, kind: Kind, raw: &str) -> Result<Value> {
    let real = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::config(key, format!("`{s}` is not a number")))
    };
    match kind {
        Kind::Real => real(raw).map(Value::Real),
        Kind::Count | Kind::Seed => raw
            .trim()
            .parse::<u64>()
            .map(Value::Int)
            .map_err(|_| Error::config(key, format!("`{raw}` is not a non-negative integer"))),
        Kind::Sweep => raw.split(',').map(real).collect::<Result<Vec<_>>>().map(Value::List),
        Kind::Path => Ok(Value::Path(PathBuf::from(raw))),
    }
}

/// Figure defaults, then `file` (TOML, flat table of known keys), then
/// `overrides` as `(key, raw flag value)` with comma-separated sweeps.
pub fn parse_config(
    figure: Figure,
    file: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::defaults(figure);
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("config", e.message().to_string()))?;
        for (key, value) in &table {
            let kind = kind_of(key)?;
            cfg.set(key, from_toml(key, kind, value)?);
        }
    }
    for (key, raw) in overrides {
        let kind = kind_of(key)?;
        cfg.set(key, from_flag(key, kind, raw)?);
    }
    cfg.validate()?;
    Ok(cfg)
}
