use std::path::Path;

use anyhow::{Context, Result};
use rkf_core::tracking::{run_monte_carlo, MonteCarloReport, ScenarioConfig};

use crate::output::{fmt_f64, write_csv};
use crate::plot::{line_chart, Chart, Series};

pub const RMSE_HEADER: [&str; 4] = ["step", "filter", "pos_rmse", "vel_rmse"];
pub const SUMMARY_HEADER: [&str; 8] = [
    "filter",
    "shape_param",
    "pos_rmse",
    "vel_rmse",
    "avg_iters",
    "avg_time_s",
    "fallback_ratio",
    "effective",
];

pub struct TrackOptions {
    pub plots: bool,
    pub timing: bool,
    /// Suffix filter labels with `@shape` in the CSVs.
    pub sweep: bool,
}

pub struct ScenarioResult {
    pub shape: f64,
    pub noise_name: &'static str,
    pub report: MonteCarloReport,
}

pub fn run_scenarios(scenarios: &[(f64, ScenarioConfig)], pool: &rayon::ThreadPool) -> Result<Vec<ScenarioResult>> {
    scenarios
        .iter()
        .map(|(shape, cfg)| {
            eprintln!("running {} = {shape} ({} runs x {} steps)", cfg.noise.name(), cfg.mc_runs, cfg.steps);
            let report = pool.install(|| run_monte_carlo(cfg))?;
            Ok(ScenarioResult {
                shape: *shape,
                noise_name: cfg.noise.name(),
                report,
            })
        })
        .collect()
}

fn csv_label(label: &str, shape: f64, sweep: bool) -> String {
    if sweep {
        format!("{label}@{shape}")
    } else {
        label.to_string()
    }
}

pub fn rmse_rows(results: &[ScenarioResult], sweep: bool) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for res in results {
        for f in &res.report.filters {
            let label = csv_label(&f.label, res.shape, sweep);
            for (i, (p, v)) in f.pos_rmse_time.iter().zip(&f.vel_rmse_time).enumerate() {
                rows.push(vec![(i + 1).to_string(), label.clone(), fmt_f64(*p), fmt_f64(*v)]);
            }
        }
    }
    rows
}

pub fn summary_rows(results: &[ScenarioResult], timing: bool) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for res in results {
        for f in &res.report.filters {
            let effective = if !f.applicable {
                "n/a".to_string()
            } else {
                f.effective.to_string()
            };
            rows.push(vec![
                f.label.clone(),
                fmt_f64(res.shape),
                fmt_f64(f.pos_rmse),
                fmt_f64(f.vel_rmse),
                fmt_f64(f.avg_iters),
                if timing { fmt_f64(f.avg_time_s) } else { String::new() },
                fmt_f64(f.fallback_ratio),
                effective,
            ]);
        }
    }
    rows
}

pub fn write_outputs(results: &[ScenarioResult], out_dir: &Path, opts: &TrackOptions) -> Result<()> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    write_csv(&out_dir.join("rmse_time.csv"), &RMSE_HEADER, &rmse_rows(results, opts.sweep))?;
    write_csv(&out_dir.join("summary.csv"), &SUMMARY_HEADER, &summary_rows(results, opts.timing))?;
    if opts.plots {
        if opts.sweep {
            sweep_plots(results, out_dir, opts.timing)?;
        } else {
            for res in results {
                time_plots(res, out_dir)?;
            }
        }
    }
    Ok(())
}

fn time_plots(res: &ScenarioResult, out_dir: &Path) -> Result<()> {
    for (file, what, pick) in [
        ("rmse_position.svg", "position RMSE", 0),
        ("rmse_velocity.svg", "velocity RMSE", 1),
    ] {
        let series: Vec<Series> = res
            .report
            .filters
            .iter()
            .filter(|f| f.applicable)
            .map(|f| {
                let ys = if pick == 0 { &f.pos_rmse_time } else { &f.vel_rmse_time };
                Series {
                    name: f.label.clone(),
                    points: ys.iter().enumerate().map(|(i, y)| ((i + 1) as f64, *y)).collect(),
                }
            })
            .collect();
        let title = format!("{what}, {} = {}", res.noise_name, res.shape);
        let chart = Chart {
            title: &title,
            x_label: "time step",
            y_label: what,
            log_y: true,
        };
        line_chart(&out_dir.join(file), &chart, &series)?;
    }
    Ok(())
}

/// Shapes spanning more than two decades go on a log axis.
fn shape_axis(results: &[ScenarioResult]) -> (bool, String) {
    let (lo, hi) = results
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.shape), hi.max(r.shape)));
    let symbol = match results.first().map(|r| r.noise_name) {
        Some("sgas") => "alpha",
        Some("gaussian-mixture") => "U",
        Some(_) => "v",
        None => "shape",
    };
    if lo > 0.0 && hi / lo > 100.0 {
        (true, format!("log10 {symbol}"))
    } else {
        (false, symbol.to_string())
    }
}

fn sweep_plots(results: &[ScenarioResult], out_dir: &Path, timing: bool) -> Result<()> {
    let (log_x, x_label) = shape_axis(results);
    let labels: Vec<&str> = results
        .first()
        .map(|r| r.report.filters.iter().map(|f| f.label.as_str()).collect())
        .unwrap_or_default();
    type Metric = fn(&rkf_core::tracking::FilterReport) -> f64;
    // (file, title, log y, effective runs only, metric)
    let mut metrics: Vec<(&str, &str, bool, bool, Metric)> = vec![
        ("sweep_pos_rmse.svg", "position RMSE", true, true, |f| f.pos_rmse),
        ("sweep_vel_rmse.svg", "velocity RMSE", true, true, |f| f.vel_rmse),
        ("sweep_iterations.svg", "average iterations", false, false, |f| f.avg_iters),
        ("sweep_fallback.svg", "fallback ratio", false, false, |f| f.fallback_ratio),
    ];
    if timing {
        metrics.push(("sweep_time.svg", "average time per run (s)", true, false, |f| f.avg_time_s));
    }
    for (file, what, log_y, effective_only, metric) in metrics {
        let series: Vec<Series> = labels
            .iter()
            .map(|label| Series {
                name: label.to_string(),
                points: results
                    .iter()
                    .filter_map(|r| {
                        let f = r.report.filter(label)?;
                        // a lost filter's RMSE says nothing about its accuracy
                        let y = if f.effective || !effective_only { metric(f) } else { f64::NAN };
                        Some((if log_x { r.shape.log10() } else { r.shape }, y))
                    })
                    .collect(),
            })
            .filter(|s| s.points.iter().any(|p| p.1.is_finite()))
            .collect();
        let chart = Chart {
            title: what,
            x_label: &x_label,
            y_label: what,
            log_y,
        };
        line_chart(&out_dir.join(file), &chart, &series)?;
    }
    Ok(())
}
