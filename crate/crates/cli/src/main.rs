use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crossfield::experiments::{parse_config, run_figure, Figure};
use crossfield::Error;

#[derive(Parser)]
#[command(name = "crossfield", version, about = "Run the channel-model, estimation and beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// SWM vs PWM capacity over distance
    FigCapacity(Flags),
    /// PWM and HSPM approximation error over distance
    FigApproxError(Flags),
    /// DFT / SSE / DSE estimation NMSE over SNR
    FigEstimation(Flags),
    /// Hybrid WSMS spectral efficiency over transmit power
    FigSpectralEfficiency(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML file of config keys
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long = "freq-ghz")]
    freq_ghz: Option<String>,
    #[arg(long)]
    n_antennas: Option<String>,
    #[arg(long)]
    n_subarrays: Option<String>,
    #[arg(long)]
    n_rf: Option<String>,
    #[arg(long)]
    n_paths: Option<String>,
    /// Comma-separated list
    #[arg(long, allow_hyphen_values = true)]
    subarray_spacing_wl: Option<String>,
    /// Comma-separated list
    #[arg(long, allow_hyphen_values = true)]
    distance_m: Option<String>,
    /// Comma-separated list
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Comma-separated list
    #[arg(long, allow_hyphen_values = true)]
    tx_power_dbm: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    noise_dbm: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output CSV (stdout when absent)
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long)]
    threads: Option<usize>,
}

impl Flags {
    fn overrides(&self) -> Vec<(String, String)> {
        [
            ("frequency_ghz", &self.freq_ghz),
            ("n_antennas", &self.n_antennas),
            ("n_subarrays", &self.n_subarrays),
            ("n_rf", &self.n_rf),
            ("n_paths", &self.n_paths),
            ("subarray_spacing_wl", &self.subarray_spacing_wl),
            ("distance_m", &self.distance_m),
            ("snr_db", &self.snr_db),
            ("tx_power_dbm", &self.tx_power_dbm),
            ("noise_dbm", &self.noise_dbm),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("output_path", &self.out),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => 2,
        _ => 3,
    }
}

fn run(figure: Figure, flags: &Flags) -> Result<(), (u8, String)> {
    let cfg = parse_config(figure, flags.config.as_deref(), &flags.overrides()).map_err(|e| (exit_code(&e), e.to_string()))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = flags.threads {
        if n == 0 {
            return Err((2, "config error for `threads`: must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| (3, e.to_string()))?;
    log::info!("running {} with {} threads", figure.name(), pool.current_num_threads());
    let table = pool.install(|| run_figure(&cfg)).map_err(|e| (exit_code(&e), e.to_string()))?;
    let csv = table.to_csv(&cfg);
    match &cfg.output_path {
        Some(path) => std::fs::write(path, csv).map_err(|e| (1, format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout().write_all(csv.as_bytes()).map_err(|e| (1, e.to_string())),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (figure, flags) = match &cli.command {
        Command::FigCapacity(f) => (Figure::Capacity, f),
        Command::FigApproxError(f) => (Figure::ApproxError, f),
        Command::FigEstimation(f) => (Figure::Estimation, f),
        Command::FigSpectralEfficiency(f) => (Figure::SpectralEfficiency, f),
    };
    match run(figure, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
