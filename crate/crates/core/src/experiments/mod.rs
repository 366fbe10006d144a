//! Deterministic experiment runner for the four figures: capacity, model
//! approximation error, estimation NMSE and hybrid spectral efficiency.

mod config;
mod figures;
mod seeds;
mod table;

pub use config::{parse_config, ExperimentConfig, Figure};
pub use figures::{
    compact_geometry, link, pilot_budget, residual_tolerance, run_fig_approx_error, run_fig_capacity,
    run_fig_estimation, run_fig_spectral_efficiency, run_figure, scatterer_box, spacing_label, trial_paths,
    wsms_geometry,
};
pub use seeds::{splitmix64, trial_seed, Stream};
pub use table::{sig9, Table};
