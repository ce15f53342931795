use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rkf_core::stable::diagnostics::{kolmogorov_p_value, ks_statistic, laplace_check};
use rkf_core::stable::{mixing_law, sample_positive_stable};

pub const KS_LEVEL: f64 = 0.01;
pub const MAX_Z: f64 = 3.0;
pub const LAPLACE_POINTS: [f64; 3] = [0.5, 1.0, 2.0];

pub struct CheckArgs {
    pub alpha: f64,
    pub samples: usize,
    pub seed: u64,
}

pub enum CheckOutcome {
    Passed,
    Failed(Vec<String>),
}

/// Prints one line per diagnostic. `Err` is a domain error in the flags.
pub fn run(args: &CheckArgs) -> Result<CheckOutcome, String> {
    let law = mixing_law(args.alpha).map_err(|e| format!("--alpha {}: {e}", args.alpha))?;
    if args.samples < 2 {
        return Err("--samples must be at least 2".into());
    }
    if law.is_degenerate() {
        println!("alpha = 2: the mixing law is the point mass at 1; nothing to check");
        return Ok(CheckOutcome::Passed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let samples = sample_positive_stable(&law, args.samples, &mut rng);
    let mut failures = Vec::new();

    for s in LAPLACE_POINTS {
        let c = laplace_check(&law, &samples, s);
        let ok = c.passes(MAX_Z);
        let line = format!(
            "laplace s={s}: empirical {:.6} expected {:.6} z {:.3} {}",
            c.empirical,
            c.expected,
            c.z_score(),
            if ok { "ok" } else { "FAIL" }
        );
        println!("{line}");
        if !ok {
            failures.push(line);
        }
    }

    let d = ks_statistic(&samples, |y| law.cdf(y).unwrap_or(f64::NAN));
    let p = kolmogorov_p_value(d, samples.len() as f64);
    let ok = p >= KS_LEVEL;
    let line = format!("ks n={}: D {d:.6} p {p:.4} {}", samples.len(), if ok { "ok" } else { "FAIL" });
    println!("{line}");
    if !ok {
        failures.push(line);
    }

    Ok(if failures.is_empty() {
        CheckOutcome::Passed
    } else {
        CheckOutcome::Failed(failures)
    })
}
