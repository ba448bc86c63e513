//! Validator suite for the hard input distribution.
//!
//! Bundles the quantitative checks a hard-parameter set must pass: the closed
//! form for the unique-best-arm probability against Monte Carlo, the bound on
//! conditional mean complexity, the exhaustive gap-interval check, likelihood
//! normalization, and the conditioned-sampler acceptance rate. The CLI's
//! `validate-hard` command prints one PASS/FAIL line per check.

use crate::hard::{
    conditioned_acceptance_rate, estimate_conditional_h, estimate_pr_e0, exact_pr_e0,
    gap_interval_violations_exhaustive, gap_interval_violations_sampled, log_likelihood,
    HardParams,
};
use crate::rng::trial_stream;
use serde::{Deserialize, Serialize};

/// Sample counts and scopes for one validation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationOptions {
    #[serde(default = "default_e0_samples")]
    pub e0_samples: usize,
    #[serde(default = "default_h_samples")]
    pub h_samples: usize,
    #[serde(default = "default_acceptance_attempts")]
    pub acceptance_attempts: usize,
    /// `(eta, levels)` combinations for the gap-interval check; exhaustive up
    /// to 8 levels, sampled with `sampled_pairs` beyond.
    #[serde(default)]
    pub gap_checks: Vec<(f64, usize)>,
    #[serde(default = "default_sampled_pairs")]
    pub sampled_pairs: u64,
    #[serde(default = "default_normalization_lengths")]
    pub normalization_lengths: Vec<usize>,
}

fn default_e0_samples() -> usize {
    100_000
}
fn default_h_samples() -> usize {
    20_000
}
fn default_acceptance_attempts() -> usize {
    10_000
}
fn default_sampled_pairs() -> u64 {
    10_000_000
}
fn default_normalization_lengths() -> Vec<usize> {
    vec![1, 6, 12]
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            e0_samples: default_e0_samples(),
            h_samples: default_h_samples(),
            acceptance_attempts: default_acceptance_attempts(),
            gap_checks: Vec::new(),
            sampled_pairs: default_sampled_pairs(),
            normalization_lengths: default_normalization_lengths(),
        }
    }
}

/// Result of one named check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckOutcome {
            name,
            passed,
            detail,
        }
    }
}

/// Runs the full validator suite. Deterministic given the seed.
pub fn validate_hard_distribution(
    params: &HardParams,
    options: &ValidationOptions,
    seed: u64,
) -> Vec<CheckOutcome> {
    let mut checks = Vec::new();

    // 1. Closed-form unique-best-arm probability vs Monte Carlo.
    {
        let exact = exact_pr_e0(params);
        let mut rng = trial_stream(seed, 0);
        let (mc, _) = estimate_pr_e0(params, options.e0_samples, &mut rng);
        let se = (exact * (1.0 - exact) / options.e0_samples as f64).sqrt();
        let diff = (mc - exact).abs();
        checks.push(CheckOutcome::new(
            "e0_closed_form_vs_monte_carlo",
            diff <= 4.0 * se,
            format!(
                "exact={exact:.6} mc={mc:.6} |diff|={diff:.6} allowed={:.6} ({} samples)",
                4.0 * se,
                options.e0_samples
            ),
        ));
    }

    // 2. Conditional mean complexity below eta^(2+2L) L (one-sided, 2 SE slack).
    {
        let bound = params.expected_h_bound();
        let mut rng = trial_stream(seed, 1);
        match estimate_conditional_h(params, options.h_samples, &mut rng) {
            Ok((mean, se)) => checks.push(CheckOutcome::new(
                "conditional_complexity_bound",
                mean <= bound + 2.0 * se,
                format!("mean_H={mean:.1} se={se:.1} bound={bound:.1}"),
            )),
            Err(e) => checks.push(CheckOutcome::new(
                "conditional_complexity_bound",
                false,
                format!("estimator failed: {e}"),
            )),
        }
    }

    // 3. Gap interval eta^-t (1 +/- 2/eta) over bit-vector pairs.
    {
        let combos = if options.gap_checks.is_empty() {
            vec![(params.eta, params.levels.min(8))]
        } else {
            options.gap_checks.clone()
        };
        let mut detail = String::new();
        let mut passed = true;
        for (index, &(eta, levels)) in combos.iter().enumerate() {
            let (violations, mode) = if levels <= 8 {
                (
                    gap_interval_violations_exhaustive(eta, levels),
                    "exhaustive",
                )
            } else {
                let mut rng = trial_stream(seed, 2 + index as u64);
                (
                    gap_interval_violations_sampled(eta, levels, options.sampled_pairs, &mut rng),
                    "sampled",
                )
            };
            passed &= violations == 0;
            detail.push_str(&format!(
                "eta={eta} L={levels} ({mode}): {violations} violations; "
            ));
        }
        checks.push(CheckOutcome::new("gap_interval", passed, detail));
    }

    // 4. Likelihood normalization: sum over all 2^q sequences equals 1.
    {
        let mut passed = true;
        let mut worst: f64 = 0.0;
        for &q in &options.normalization_lengths {
            assert!(q <= 24, "normalization enumeration is for small q");
            for &x in &[0.5, params.mu_star_a, params.mu_star_b] {
                let mut total = 0.0;
                for mask in 0u64..(1 << q) {
                    let theta: Vec<u8> = (0..q).map(|j| ((mask >> j) & 1) as u8).collect();
                    total += log_likelihood(&theta, x).expect("interior mean").exp();
                }
                let err = (total - 1.0).abs();
                worst = worst.max(err);
                passed &= err <= 1e-10;
            }
        }
        checks.push(CheckOutcome::new(
            "likelihood_normalization",
            passed,
            format!(
                "worst |sum - 1| = {worst:.3e} over q in {:?}",
                options.normalization_lengths
            ),
        ));
    }

    // 5. Conditioned-sampler acceptance rate vs the 1/(2e) lower bound.
    {
        let floor = 1.0 / (2.0 * std::f64::consts::E);
        let mut rng = trial_stream(seed, 100);
        let (rate, se) = conditioned_acceptance_rate(params, options.acceptance_attempts, &mut rng);
        checks.push(CheckOutcome::new(
            "conditioned_acceptance_rate",
            rate >= floor - 2.0 * se,
            format!(
                "rate={rate:.4} se={se:.4} floor=1/(2e)={floor:.4} ({} attempts)",
                options.acceptance_attempts
            ),
        ));
    }

    checks
}
