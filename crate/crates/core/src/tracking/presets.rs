use super::filters::{FilterKind, FilterSpec};
use super::noise::NoiseFamily;
use super::scenario::ScenarioConfig;

pub const SGAS_ALPHA_GRID: [f64; 9] = [0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.85];
pub const ST_V_GRID: [f64; 9] = [0.3, 0.5, 0.7, 0.9, 1.2, 1.7, 2.5, 3.5, 6.0];
pub const GM_U_GRID: [f64; 9] = [5.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8];

pub const PRESET_NAMES: [&str; 4] = ["gaussian", "sgas-sweep", "student-t-sweep", "gm-sweep"];

fn specs(kinds: &[FilterKind]) -> Vec<FilterSpec> {
    kinds.iter().map(|&k| FilterSpec::new(k)).collect()
}

const ROBUST: [FilterKind; 7] = [
    FilterKind::RkfSgasIs,
    FilterKind::RkfSgasGlq,
    FilterKind::RkfSgasGsis,
    FilterKind::RkfSgasGsgl,
    FilterKind::Rstkf,
    FilterKind::RkfSl,
    FilterKind::RkfVg,
];

/// Built-in scenario and optional noise-shape sweep, at desk scale.
pub fn preset(name: &str) -> Option<(ScenarioConfig, Option<Vec<f64>>)> {
    let with_kf = |extra: &[FilterKind]| {
        let mut kinds = vec![FilterKind::Kf];
        kinds.extend_from_slice(extra);
        kinds.extend_from_slice(&ROBUST);
        specs(&kinds)
    };
    let out = match name {
        "gaussian" => (
            ScenarioConfig::new(
                NoiseFamily::GaussianMixture { u: 1.0, p_outlier: 0.1 },
                with_kf(&[FilterKind::Kftncm]),
            ),
            None,
        ),
        "sgas-sweep" => (
            ScenarioConfig::new(NoiseFamily::Sgas { alpha: SGAS_ALPHA_GRID[0] }, with_kf(&[])),
            Some(SGAS_ALPHA_GRID.to_vec()),
        ),
        "student-t-sweep" => (
            ScenarioConfig::new(NoiseFamily::StudentT { v: ST_V_GRID[0] }, with_kf(&[FilterKind::Kftncm])),
            Some(ST_V_GRID.to_vec()),
        ),
        "gm-sweep" => (
            ScenarioConfig::new(
                NoiseFamily::GaussianMixture {
                    u: GM_U_GRID[0],
                    p_outlier: 0.1,
                },
                with_kf(&[FilterKind::Kftncm]),
            ),
            Some(GM_U_GRID.to_vec()),
        ),
        _ => return None,
    };
    Some(out)
}
