//! Constant-velocity target tracking under heavy-tailed measurement noise,
//! with Monte Carlo evaluation of the filters.

mod filters;
mod monte_carlo;
mod noise;
mod presets;
mod scenario;

pub use filters::{default_shape, FilterKind, FilterSpec};
pub use monte_carlo::{
    effectiveness, rmse_over_runs, run_filter, run_monte_carlo, time_averaged, FilterReport, MonteCarloReport,
    RunResult,
};
pub use noise::{gaussian_draw, psd_sqrt, sample_measurement_noise, NoiseFamily};
pub use presets::{preset, PRESET_NAMES, SGAS_ALPHA_GRID, GM_U_GRID, ST_V_GRID};
pub use scenario::{cv_model, simulate_track, stream_rng, ScenarioConfig, StreamRole, Track};
