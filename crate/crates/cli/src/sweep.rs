use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rkf_core::scale::{
    estimate_glq, estimate_gs, estimate_hybrid, estimate_is, laguerre_rule, EstimateOutcome, GammaSeriesConfig,
    GsOutcome, HybridKind, ScalePosterior,
};
use rkf_core::stable::mixing_law;
use rkf_core::Error;

use crate::output::{fmt_f64, fmt_opt, write_csv};

pub const HEADER: [&str; 10] = [
    "alpha",
    "eta",
    "m",
    "method",
    "n_or_l",
    "value",
    "method_used",
    "gs_terms",
    "wall_ns",
    "status",
];

pub const DEFAULT_PARTICLES: usize = 100;
pub const DEFAULT_ORDER: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepMethod {
    Is,
    Glq,
    Gs,
    Gsis,
    Gsgl,
}

impl SweepMethod {
    pub fn name(self) -> &'static str {
        match self {
            SweepMethod::Is => "is",
            SweepMethod::Glq => "glq",
            SweepMethod::Gs => "gs",
            SweepMethod::Gsis => "gsis",
            SweepMethod::Gsgl => "gsgl",
        }
    }

    fn uses_particles(self) -> bool {
        matches!(self, SweepMethod::Is | SweepMethod::Gsis | SweepMethod::Gsgl)
    }

    fn uses_order(self) -> bool {
        matches!(self, SweepMethod::Glq | SweepMethod::Gsgl)
    }
}

/// Row status codes. Anything but `OK` leaves `value` empty.
pub mod status {
    pub const OK: u8 = 0;
    /// The Gamma series failed its stability test (plain `gs` only).
    pub const DIVERGED: u8 = 1;
    pub const DEGENERATE_ETA: u8 = 2;
    pub const NUMERICAL: u8 = 3;
    pub const UNSUPPORTED: u8 = 4;
}

#[derive(Debug, Clone)]
pub struct SweepArgs {
    pub alphas: Vec<f64>,
    pub etas: Vec<f64>,
    pub m: usize,
    pub method: SweepMethod,
    pub particles: Option<usize>,
    pub order: Option<usize>,
    pub seed: u64,
    pub series: GammaSeriesConfig,
    pub timing: bool,
}

impl SweepArgs {
    /// Flag-combination and range checks; failures are usage errors.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.order.is_some() && !self.method.uses_order() {
            return Err(format!("--l does not apply to --method {}", self.method.name()));
        }
        if self.particles.is_some() && !self.method.uses_particles() {
            return Err(format!("--n does not apply to --method {}", self.method.name()));
        }
        if self.alphas.is_empty() || self.etas.is_empty() {
            return Err("--alpha and --eta-grid need at least one value".into());
        }
        for &a in &self.alphas {
            mixing_law(a).map_err(|e| format!("--alpha {a}: {e}"))?;
        }
        if let Some(&eta) = self.etas.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return Err(format!("--eta-grid values must be finite and nonnegative, got {eta}"));
        }
        if self.m == 0 {
            return Err("--m must be positive".into());
        }
        if self.particles == Some(0) {
            return Err("--n must be positive".into());
        }
        if let Some(l) = self.order {
            laguerre_rule(l).map_err(|e| format!("--l {l}: {e}"))?;
        }
        self.series.validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    fn n_or_l(&self) -> Option<usize> {
        match self.method {
            SweepMethod::Is | SweepMethod::Gsis => Some(self.particles.unwrap_or(DEFAULT_PARTICLES)),
            SweepMethod::Glq | SweepMethod::Gsgl => Some(self.order.unwrap_or(DEFAULT_ORDER)),
            SweepMethod::Gs => None,
        }
    }
}

fn failure_status(e: &Error) -> u8 {
    match e {
        Error::DegenerateEta { .. } => status::DEGENERATE_ETA,
        Error::Unsupported(_) => status::UNSUPPORTED,
        _ => status::NUMERICAL,
    }
}

fn evaluate(args: &SweepArgs, post: &ScalePosterior, rng: &mut ChaCha8Rng) -> Result<Option<EstimateOutcome>, Error> {
    let particles = args.particles.unwrap_or(DEFAULT_PARTICLES);
    let rule = laguerre_rule(args.order.unwrap_or(DEFAULT_ORDER))?;
    match args.method {
        SweepMethod::Is => estimate_is(post, particles, rng).map(Some),
        SweepMethod::Glq => estimate_glq(post, rule).map(Some),
        SweepMethod::Gs => match estimate_gs(post, &args.series)? {
            GsOutcome::Converged(out) => Ok(Some(out)),
            GsOutcome::Diverged => Ok(None),
        },
        SweepMethod::Gsis => estimate_hybrid(HybridKind::Gsis, post, &args.series, particles, rule, rng).map(Some),
        SweepMethod::Gsgl => estimate_hybrid(HybridKind::Gsgl, post, &args.series, particles, rule, rng).map(Some),
    }
}

/// Rows in alpha-major order. Row `i` draws from its own ChaCha8 stream `i`.
pub fn sweep_rows(args: &SweepArgs) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::with_capacity(args.alphas.len() * args.etas.len());
    for &alpha in &args.alphas {
        let law = mixing_law(alpha)?;
        for &eta in &args.etas {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            rng.set_stream(rows.len() as u64);
            let post = ScalePosterior::new(eta, args.m, law)?;
            let start = Instant::now();
            let result = evaluate(args, &post, &mut rng);
            let wall_ns = start.elapsed().as_nanos();
            let (value, method_used, gs_terms, code) = match result {
                Ok(Some(out)) => (
                    fmt_f64(out.value),
                    out.method_used.as_str().to_string(),
                    fmt_opt(out.gs_terms_used),
                    status::OK,
                ),
                Ok(None) => (String::new(), "gs".to_string(), String::new(), status::DIVERGED),
                Err(e) => (String::new(), String::new(), String::new(), failure_status(&e)),
            };
            rows.push(vec![
                fmt_f64(alpha),
                fmt_f64(eta),
                args.m.to_string(),
                args.method.name().to_string(),
                fmt_opt(args.n_or_l()),
                value,
                method_used,
                gs_terms,
                if args.timing { wall_ns.to_string() } else { String::new() },
                code.to_string(),
            ]);
        }
    }
    Ok(rows)
}

pub fn run(args: &SweepArgs, out_dir: &Path) -> Result<()> {
    let rows = sweep_rows(args)?;
    std::fs::create_dir_all(out_dir)?;
    write_csv(&out_dir.join("scale_sweep.csv"), &HEADER, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(method: SweepMethod) -> SweepArgs {
        SweepArgs {
            alphas: vec![1.0],
            etas: vec![0.1, 10.0],
            m: 2,
            method,
            particles: None,
            order: None,
            seed: 3,
            series: GammaSeriesConfig::default(),
            timing: false,
        }
    }

    #[test]
    fn flag_combinations() {
        let mut a = args(SweepMethod::Is);
        a.order = Some(4);
        assert!(a.validate().is_err());
        let mut a = args(SweepMethod::Glq);
        a.particles = Some(10);
        assert!(a.validate().is_err());
        let mut a = args(SweepMethod::Gsgl);
        a.particles = Some(10);
        a.order = Some(4);
        assert!(a.validate().is_ok());
        let mut a = args(SweepMethod::Gs);
        a.alphas = vec![2.5];
        assert!(a.validate().is_err());
    }

    #[test]
    fn rows_are_seeded_per_row() {
        let a = args(SweepMethod::Is);
        let rows = sweep_rows(&a).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows, sweep_rows(&a).unwrap());
        let mut single = a.clone();
        single.etas = vec![0.1];
        assert_eq!(sweep_rows(&single).unwrap()[0], rows[0]);
        assert!(rows.iter().all(|r| r[8].is_empty() && r[9] == "0"));
    }

    #[test]
    fn degenerate_eta_row_is_flagged() {
        let mut a = args(SweepMethod::Glq);
        a.etas = vec![0.0];
        let row = &sweep_rows(&a).unwrap()[0];
        assert_eq!(row[5], "");
        assert_eq!(row[9], status::DEGENERATE_ETA.to_string());
    }
}
