//! Seeded, parallel Monte Carlo experiment runner.
//!
//! An [`ExperimentConfig`] fully describes one experiment: where instances
//! come from (an explicit instance, or hard instances resampled per trial),
//! which algorithm runs, the horizon, trial count, master seed, and worker
//! count. Trial `i` consumes the stream `(seed, i)` and nothing else, so the
//! outcome list, and the CSV rendered from it, is byte-identical for any
//! worker count.
//!
//! Summaries report the Wilson score interval of the success rate and, when
//! the instance complexity is known, the per-experiment speedup `H / T`.
//! `beta` proper is an infimum over all inputs; a simulator can only report
//! this per-experiment ratio.

use crate::algo::{run_centralized_baseline, run_col_learn, run_two_arm_weighted};
use crate::bandit::{gap_profile, Instance, RewardFamily};
use crate::hard::{sample_conditioned, sample_hard_instance, HardInstance, HardParams};
use crate::rng::{derive_seed, trial_stream, StreamId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stream index reserved for fixed-instance sampling, away from trial indices.
const FIXED_INSTANCE_STREAM: u64 = u64::MAX;

fn default_workers() -> usize {
    1
}

fn default_max_attempts() -> usize {
    10_000
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unsupported config schema {got}, expected 1")]
    UnsupportedSchema { got: u32 },
    #[error("invalid config: {reason}")]
    InvalidConfig { reason: String },
    #[error("trial {trial_index} failed: {message}")]
    TrialFailed { trial_index: usize, message: String },
    #[error(
        "target success rate {target} unreachable: Wilson lower bound at horizon {horizon_hi} \
         is {wilson_lo}"
    )]
    TargetUnreachable {
        horizon_hi: u64,
        wilson_lo: f64,
        target: f64,
    },
    #[error("failed to build worker pool: {0}")]
    WorkerPool(String),
}

fn invalid(reason: impl Into<String>) -> HarnessError {
    HarnessError::InvalidConfig {
        reason: reason.into(),
    }
}

/// Where each trial's instance comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    /// One fixed instance shared by every trial.
    Explicit { instance: Instance },
    /// Hard instances resampled per trial (the distributional success
    /// probability), optionally conditioned on the unique-best-arm event and
    /// complexity cap, then expanded to `K` agents.
    Hard {
        params: HardParams,
        #[serde(default)]
        conditioned: bool,
        #[serde(rename = "K")]
        agents: usize,
        #[serde(default = "default_max_attempts")]
        max_attempts: usize,
        /// When set, every trial reuses the instance drawn from this seed
        /// instead of resampling; for per-instance studies.
        #[serde(default)]
        fixed_instance_seed: Option<u64>,
    },
}

/// Which algorithm each trial runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    ColLearn {
        #[serde(rename = "R")]
        rounds: u32,
    },
    Centralized,
    /// The two-arm sign test; uses the explicit instance's weights and reward
    /// family (build the instance with `Instance::two_arm`).
    TwoArmWeighted {
        delta: f64,
    },
}

/// Declarative description of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Config format version; must be 1.
    pub schema: u32,
    pub experiment_id: String,
    pub instance_source: InstanceSource,
    pub algorithm: Algorithm,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

/// Problem dimensions a config resolves to; reported in CSV rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedDims {
    pub arms: usize,
    pub agents: usize,
    pub rounds: u32,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema != 1 {
            return Err(HarnessError::UnsupportedSchema { got: self.schema });
        }
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1"));
        }
        if self.workers == 0 {
            return Err(invalid("workers must be >= 1"));
        }
        match self.algorithm {
            Algorithm::ColLearn { rounds: 0 } => {
                return Err(invalid("col_learn needs R >= 1"));
            }
            Algorithm::TwoArmWeighted { delta } => {
                if !(delta != 0.0 && delta.abs() < 0.25) {
                    return Err(invalid(format!(
                        "two_arm_weighted delta {delta} must have magnitude in (0, 0.25)"
                    )));
                }
                match &self.instance_source {
                    InstanceSource::Explicit { instance } => {
                        if instance.arms() != 2 {
                            return Err(invalid(
                                "two_arm_weighted needs an explicit 2-arm instance \
                                 (it supplies the weights and reward family)",
                            ));
                        }
                    }
                    InstanceSource::Hard { .. } => {
                        return Err(invalid(
                            "two_arm_weighted runs on an explicit instance, not a hard source",
                        ));
                    }
                }
            }
            _ => {}
        }
        if let InstanceSource::Hard {
            agents,
            max_attempts,
            ..
        } = &self.instance_source
        {
            if *agents < 2 || *agents % 2 != 0 {
                return Err(invalid(format!(
                    "hard source K = {agents} must be even and >= 2"
                )));
            }
            if *max_attempts == 0 {
                return Err(invalid("hard source max_attempts must be >= 1"));
            }
        }
        Ok(())
    }

    pub fn resolved_dims(&self) -> ResolvedDims {
        let (arms, agents) = match &self.instance_source {
            InstanceSource::Explicit { instance } => (instance.arms(), instance.agents()),
            InstanceSource::Hard { params, agents, .. } => (params.n, *agents),
        };
        let rounds = match self.algorithm {
            Algorithm::ColLearn { rounds } => rounds,
            Algorithm::Centralized => (arms.next_power_of_two().trailing_zeros()).max(1),
            Algorithm::TwoArmWeighted { .. } => 1,
        };
        ResolvedDims {
            arms,
            agents,
            rounds,
        }
    }

    pub fn algorithm_label(&self) -> &'static str {
        match self.algorithm {
            Algorithm::ColLearn { .. } => "col_learn",
            Algorithm::Centralized => "centralized",
            Algorithm::TwoArmWeighted { .. } => "two_arm_weighted",
        }
    }

    pub fn source_label(&self) -> &'static str {
        match &self.instance_source {
            InstanceSource::Explicit { .. } => "explicit",
            InstanceSource::Hard { conditioned, .. } => {
                if *conditioned {
                    "hard_conditioned"
                } else {
                    "hard"
                }
            }
        }
    }
}

/// Result record of a single trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial_index: usize,
    /// The rng stream this trial consumed; unique per trial by construction.
    pub stream: StreamId,
    pub success: bool,
    pub pulls_per_agent: u64,
    pub rounds_used: u32,
    pub reals_communicated: u64,
    /// Instance complexity of this trial's instance, when defined.
    pub instance_h: Option<f64>,
    /// Per-trial failure, recorded rather than fatal.
    pub error: Option<String>,
}

/// Aggregate statistics over one experiment's trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub mean_pulls: f64,
    /// Mean instance complexity over trials where it was defined.
    pub mean_h: Option<f64>,
    /// Per-experiment speedup `mean_h / T`, when both are defined.
    pub speedup: Option<f64>,
    /// Filled by time-to-target search, absent for plain runs.
    pub time_to_target: Option<u64>,
}

/// Wilson score interval for a binomial proportion, clamped to `[0, 1]`.
/// The boundary cases 0 and `trials` pin the respective endpoint exactly.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    assert!(trials >= 1, "need at least one trial");
    assert!(successes <= trials, "more successes than trials");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let margin = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 {
        0.0
    } else {
        ((center - margin) / denom).clamp(0.0, 1.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        ((center + margin) / denom).clamp(0.0, 1.0)
    };
    (lo, hi)
}

/// Speedup `H / T`; `None` when the ratio is undefined.
pub fn compute_speedup(h: f64, horizon: u64) -> Option<f64> {
    if horizon == 0 || h <= 0.0 || !h.is_finite() {
        None
    } else {
        Some(h / horizon as f64)
    }
}

fn summarize(config: &ExperimentConfig, outcomes: &[TrialOutcome]) -> SummaryStats {
    let trials = outcomes.len();
    let successes = outcomes.iter().filter(|o| o.success).count();
    let (wilson_lo, wilson_hi) = wilson_interval(successes, trials, 1.96);
    let mean_pulls = outcomes
        .iter()
        .map(|o| o.pulls_per_agent as f64)
        .sum::<f64>()
        / trials as f64;
    let hs: Vec<f64> = outcomes.iter().filter_map(|o| o.instance_h).collect();
    let mean_h = if hs.is_empty() {
        None
    } else {
        Some(hs.iter().sum::<f64>() / hs.len() as f64)
    };
    SummaryStats {
        trials,
        successes,
        success_rate: successes as f64 / trials as f64,
        wilson_lo,
        wilson_hi,
        mean_pulls,
        mean_h,
        speedup: mean_h.and_then(|h| compute_speedup(h, config.horizon)),
        time_to_target: None,
    }
}

fn failed_outcome(trial_index: usize, stream: StreamId, message: String) -> TrialOutcome {
    TrialOutcome {
        trial_index,
        stream,
        success: false,
        pulls_per_agent: 0,
        rounds_used: 0,
        reals_communicated: 0,
        instance_h: None,
        error: Some(message),
    }
}

fn run_one_trial(
    config: &ExperimentConfig,
    trial_index: usize,
    explicit_h: Option<f64>,
) -> TrialOutcome {
    let stream = StreamId {
        seed: config.seed,
        stream: trial_index as u64,
    };
    let mut rng = trial_stream(stream.seed, stream.stream);

    match &config.instance_source {
        InstanceSource::Explicit { instance } => match config.algorithm {
            Algorithm::ColLearn { rounds } => {
                let res = run_col_learn(instance, rounds, config.horizon, &mut rng);
                TrialOutcome {
                    trial_index,
                    stream,
                    success: res.success,
                    pulls_per_agent: res.pulls_per_agent,
                    rounds_used: res.rounds_used,
                    reals_communicated: res.reals_communicated,
                    instance_h: explicit_h,
                    error: None,
                }
            }
            Algorithm::Centralized => {
                let res = run_centralized_baseline(
                    &instance.global_means(),
                    instance.reward_family(),
                    config.horizon,
                    &mut rng,
                );
                TrialOutcome {
                    trial_index,
                    stream,
                    success: res.success,
                    pulls_per_agent: res.pulls_per_agent,
                    rounds_used: res.rounds_used,
                    reals_communicated: res.reals_communicated,
                    instance_h: explicit_h,
                    error: None,
                }
            }
            Algorithm::TwoArmWeighted { delta } => {
                let success = run_two_arm_weighted(
                    delta,
                    instance.weights(),
                    config.horizon,
                    instance.reward_family(),
                    &mut rng,
                );
                TrialOutcome {
                    trial_index,
                    stream,
                    success,
                    pulls_per_agent: config.horizon,
                    rounds_used: 1,
                    reals_communicated: instance.agents() as u64,
                    instance_h: Some(1.0 / (delta * delta)),
                    error: None,
                }
            }
        },
        InstanceSource::Hard {
            params,
            conditioned,
            agents,
            max_attempts,
            fixed_instance_seed,
        } => {
            let sample = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<HardInstance, String> {
                if *conditioned {
                    sample_conditioned(params, rng, *max_attempts).map_err(|e| e.to_string())
                } else {
                    Ok(sample_hard_instance(params, rng))
                }
            };
            let drawn = match fixed_instance_seed {
                Some(fseed) => {
                    let mut irng = trial_stream(*fseed, FIXED_INSTANCE_STREAM);
                    sample(&mut irng)
                }
                None => sample(&mut rng),
            };
            let hi = match drawn {
                Ok(hi) => hi,
                Err(message) => return failed_outcome(trial_index, stream, message),
            };
            let expanded = match hi.expand_to_agents(*agents) {
                Ok(e) => e,
                Err(e) => return failed_outcome(trial_index, stream, e.to_string()),
            };
            let instance_h = gap_profile(&expanded.instance).ok().map(|gp| gp.h);
            let res = match config.algorithm {
                Algorithm::ColLearn { rounds } => {
                    run_col_learn(&expanded.instance, rounds, config.horizon, &mut rng)
                }
                Algorithm::Centralized => run_centralized_baseline(
                    &expanded.instance.global_means(),
                    RewardFamily::Bernoulli,
                    config.horizon,
                    &mut rng,
                ),
                Algorithm::TwoArmWeighted { .. } => unreachable!("rejected by validate"),
            };
            // Ground truth is the bit matrix, never float comparison.
            let success = expanded.best_arms.contains(&res.chosen_arm);
            TrialOutcome {
                trial_index,
                stream,
                success,
                pulls_per_agent: res.pulls_per_agent,
                rounds_used: res.rounds_used,
                reals_communicated: res.reals_communicated,
                instance_h,
                error: None,
            }
        }
    }
}

/// Runs every trial of an experiment and summarizes.
///
/// Outcomes are ordered by trial index regardless of worker scheduling, and
/// per-trial failures are recorded in the outcome rather than aborting the
/// experiment.
pub fn run_trials(
    config: &ExperimentConfig,
) -> Result<(Vec<TrialOutcome>, SummaryStats), HarnessError> {
    config.validate()?;
    let explicit_h = match (&config.instance_source, config.algorithm) {
        (InstanceSource::Explicit { .. }, Algorithm::TwoArmWeighted { .. }) => None,
        (InstanceSource::Explicit { instance }, _) => gap_profile(instance).ok().map(|gp| gp.h),
        _ => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::WorkerPool(e.to_string()))?;
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|i| run_one_trial(config, i, explicit_h))
            .collect()
    });
    let summary = summarize(config, &outcomes);
    Ok((outcomes, summary))
}

/// Smallest horizon in `[t_lo, t_hi]` whose Wilson lower bound reaches the
/// target success rate, by bisection under the documented monotonicity
/// assumption (success rate non-decreasing in `T` for these algorithms).
///
/// Each probe at horizon `t` reruns the config with seed `derive_seed(seed, t)`
/// and the configured trial count, so results do not depend on the search path.
pub fn time_to_target(
    config: &ExperimentConfig,
    target: f64,
    t_lo: u64,
    t_hi: u64,
) -> Result<u64, HarnessError> {
    if t_lo > t_hi {
        return Err(invalid(format!("empty horizon range [{t_lo}, {t_hi}]")));
    }
    let probe = |t: u64| -> Result<bool, HarnessError> {
        let mut cfg = config.clone();
        cfg.horizon = t;
        cfg.seed = derive_seed(config.seed, t);
        let (_, summary) = run_trials(&cfg)?;
        Ok(summary.wilson_lo >= target)
    };
    {
        let mut cfg = config.clone();
        cfg.horizon = t_hi;
        cfg.seed = derive_seed(config.seed, t_hi);
        let (_, summary) = run_trials(&cfg)?;
        if summary.wilson_lo < target {
            return Err(HarnessError::TargetUnreachable {
                horizon_hi: t_hi,
                wilson_lo: summary.wilson_lo,
                target,
            });
        }
    }
    let (mut lo, mut hi) = (t_lo, t_hi);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if probe(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// One point of a hardness-probe curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbePoint {
    pub budget: u64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Binomial standard error of the rate.
    pub standard_error: f64,
}

/// Success-rate curve of the elimination algorithm on conditioned hard
/// instances across increasing per-agent budgets.
///
/// All budgets share the same per-trial streams, so trial `i` sees the same
/// instance at every budget (matched comparison). Up to sampling noise the
/// curve is non-decreasing in budget.
pub fn hardness_probe(
    params: &HardParams,
    agents: usize,
    rounds: u32,
    budgets: &[u64],
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<ProbePoint>, HarnessError> {
    if budgets.is_empty() || budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("budgets must be non-empty and strictly increasing"));
    }
    let mut curve = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let config = ExperimentConfig {
            schema: 1,
            experiment_id: "hardness_probe".to_string(),
            instance_source: InstanceSource::Hard {
                params: params.clone(),
                conditioned: true,
                agents,
                max_attempts: default_max_attempts(),
                fixed_instance_seed: None,
            },
            algorithm: Algorithm::ColLearn { rounds },
            horizon: budget,
            trials,
            seed,
            workers,
        };
        let (outcomes, summary) = run_trials(&config)?;
        if let Some(bad) = outcomes.iter().find(|o| o.error.is_some()) {
            return Err(HarnessError::TrialFailed {
                trial_index: bad.trial_index,
                message: bad.error.clone().unwrap(),
            });
        }
        let rate = summary.success_rate;
        curve.push(ProbePoint {
            budget,
            trials,
            successes: summary.successes,
            success_rate: rate,
            standard_error: (rate * (1.0 - rate) / trials as f64).sqrt(),
        });
    }
    Ok(curve)
}

pub mod csv {
    //! CSV rendering with a fixed column contract.
    //!
    //! Per-trial columns: `experiment_id, trial_index, seed, n, K, R, T,
    //! algorithm, instance_source, success, pulls_per_agent, rounds_used,
    //! reals_communicated, instance_H`. Summary columns: `experiment_id, T,
    //! trials, successes, success_rate, wilson_lo, wilson_hi, mean_pulls,
    //! speedup`. Floats use shortest round-trip formatting; absent values are
    //! empty fields. Every rendered document starts with a header line naming
    //! the master seed.

    use super::{ExperimentConfig, SummaryStats, TrialOutcome};
    use std::fmt::Write;

    pub const TRIAL_HEADER: &str = "experiment_id,trial_index,seed,n,K,R,T,algorithm,\
instance_source,success,pulls_per_agent,rounds_used,reals_communicated,instance_H";

    pub const SUMMARY_HEADER: &str =
        "experiment_id,T,trials,successes,success_rate,wilson_lo,wilson_hi,mean_pulls,speedup";

    fn opt_f64(v: Option<f64>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }

    pub fn trial_row(config: &ExperimentConfig, outcome: &TrialOutcome) -> String {
        let dims = config.resolved_dims();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            config.experiment_id,
            outcome.trial_index,
            config.seed,
            dims.arms,
            dims.agents,
            dims.rounds,
            config.horizon,
            config.algorithm_label(),
            config.source_label(),
            outcome.success,
            outcome.pulls_per_agent,
            outcome.rounds_used,
            outcome.reals_communicated,
            opt_f64(outcome.instance_h),
        )
    }

    pub fn summary_row(config: &ExperimentConfig, summary: &SummaryStats) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            config.experiment_id,
            config.horizon,
            summary.trials,
            summary.successes,
            summary.success_rate,
            summary.wilson_lo,
            summary.wilson_hi,
            summary.mean_pulls,
            opt_f64(summary.speedup),
        )
    }

    /// Full per-trial + summary document for one run.
    pub fn render_run(
        config: &ExperimentConfig,
        outcomes: &[TrialOutcome],
        summary: &SummaryStats,
    ) -> String {
        let mut out = String::new();
        writeln!(out, "# master_seed={}", config.seed).unwrap();
        writeln!(out, "{TRIAL_HEADER}").unwrap();
        for o in outcomes {
            writeln!(out, "{}", trial_row(config, o)).unwrap();
        }
        writeln!(out, "{SUMMARY_HEADER}").unwrap();
        writeln!(out, "{}", summary_row(config, summary)).unwrap();
        out
    }

    /// Summary-only document for a sweep: one row per grid point.
    pub fn render_summaries(master_seed: u64, rows: &[(ExperimentConfig, SummaryStats)]) -> String {
        let mut out = String::new();
        writeln!(out, "# master_seed={master_seed}").unwrap();
        writeln!(out, "{SUMMARY_HEADER}").unwrap();
        for (config, summary) in rows {
            writeln!(out, "{}", summary_row(config, summary)).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::WeightVector;
    use std::collections::HashSet;

    fn point_mass_config(trials: usize) -> ExperimentConfig {
        // Best arm is index 1, so a degenerate lowest-index pick fails.
        let instance = Instance::new(
            vec![vec![0.2, 0.3], vec![0.9, 0.8]],
            WeightVector::uniform(2),
            RewardFamily::PointMass,
        )
        .unwrap();
        ExperimentConfig {
            schema: 1,
            experiment_id: "unit".to_string(),
            instance_source: InstanceSource::Explicit { instance },
            algorithm: Algorithm::ColLearn { rounds: 1 },
            horizon: 16,
            trials,
            seed: 99,
            workers: 1,
        }
    }

    #[test]
    fn single_trial_wilson_interval() {
        let config = point_mass_config(1);
        let (outcomes, summary) = run_trials(&config).unwrap();
        assert_eq!(outcomes.len(), 1);
        assert!(outcomes[0].success);
        assert_eq!(summary.success_rate, 1.0);
        assert_eq!(summary.wilson_hi, 1.0);
        assert!(
            (summary.wilson_lo - 0.2065).abs() < 0.02,
            "lo={}",
            summary.wilson_lo
        );
    }

    #[test]
    fn zero_trials_rejected() {
        let config = point_mass_config(0);
        assert!(matches!(
            run_trials(&config),
            Err(HarnessError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn worker_count_does_not_change_bytes() {
        let mut config = point_mass_config(16);
        config.instance_source = InstanceSource::Explicit {
            instance: Instance::new(
                vec![vec![0.6, 0.4], vec![0.5, 0.55], vec![0.2, 0.1]],
                WeightVector::uniform(2),
                RewardFamily::Bernoulli,
            )
            .unwrap(),
        };
        let (o1, s1) = run_trials(&config).unwrap();
        config.workers = 8;
        let (o8, s8) = run_trials(&config).unwrap();
        assert_eq!(o1, o8);
        assert_eq!(s1, s8);
        config.workers = 1;
        assert_eq!(csv::render_run(&config, &o1, &s1), {
            config.workers = 8;
            csv::render_run(&config, &o8, &s8)
        });
    }

    #[test]
    fn trial_streams_are_unique() {
        let config = point_mass_config(32);
        let (outcomes, _) = run_trials(&config).unwrap();
        let ids: HashSet<_> = outcomes.iter().map(|o| o.stream).collect();
        assert_eq!(ids.len(), outcomes.len());
        for (i, o) in outcomes.iter().enumerate() {
            assert_eq!(o.trial_index, i);
        }
    }

    #[test]
    fn wilson_interval_boundaries_and_midpoint() {
        assert_eq!(wilson_interval(0, 10, 1.96).0, 0.0);
        assert_eq!(wilson_interval(10, 10, 1.96).1, 1.0);
        let (lo, hi) = wilson_interval(5, 10, 1.96);
        assert!((lo - 0.2366).abs() < 5e-4, "lo={lo}");
        assert!((hi - 0.7634).abs() < 5e-4, "hi={hi}");
        let (lo, hi) = wilson_interval(3, 7, 1.96);
        assert!(lo <= 3.0 / 7.0 && 3.0 / 7.0 <= hi);
    }

    #[test]
    fn speedup_ratio_and_guards() {
        assert_eq!(compute_speedup(100.0, 100), Some(1.0));
        assert_eq!(compute_speedup(100.0, 25), Some(4.0));
        assert_eq!(compute_speedup(100.0, 0), None);
        assert_eq!(compute_speedup(0.0, 10), None);
        // Reciprocal identity at power-of-two horizons, where fp division is exact.
        for t in [1u64, 2, 8, 1024] {
            let h = 311.7;
            assert_eq!(compute_speedup(h, t).unwrap() * t as f64, h);
        }
    }

    #[test]
    fn hard_source_resamples_and_reports_h() {
        let params = HardParams::with_overrides(16, None, Some(5.0), Some(2)).unwrap();
        let config = ExperimentConfig {
            schema: 1,
            experiment_id: "hard".to_string(),
            instance_source: InstanceSource::Hard {
                params,
                conditioned: true,
                agents: 2,
                max_attempts: 10_000,
                fixed_instance_seed: None,
            },
            algorithm: Algorithm::ColLearn { rounds: 2 },
            horizon: 2_000,
            trials: 8,
            seed: 5,
            workers: 2,
        };
        let (outcomes, summary) = run_trials(&config).unwrap();
        assert!(outcomes.iter().all(|o| o.instance_h.is_some()));
        assert!(summary.mean_h.unwrap() > 0.0);
        assert!(summary.speedup.is_some());
        // Different trials see different instances.
        let hs: HashSet<u64> = outcomes
            .iter()
            .map(|o| o.instance_h.unwrap().to_bits())
            .collect();
        assert!(hs.len() > 1);
    }

    #[test]
    fn fixed_instance_seed_pins_the_instance() {
        let params = HardParams::with_overrides(16, None, Some(5.0), Some(2)).unwrap();
        let config = ExperimentConfig {
            schema: 1,
            experiment_id: "hard_fixed".to_string(),
            instance_source: InstanceSource::Hard {
                params,
                conditioned: true,
                agents: 2,
                max_attempts: 10_000,
                fixed_instance_seed: Some(77),
            },
            algorithm: Algorithm::ColLearn { rounds: 1 },
            horizon: 500,
            trials: 6,
            seed: 5,
            workers: 1,
        };
        let (outcomes, _) = run_trials(&config).unwrap();
        let hs: HashSet<u64> = outcomes
            .iter()
            .map(|o| o.instance_h.unwrap().to_bits())
            .collect();
        assert_eq!(hs.len(), 1);
    }

    #[test]
    fn two_arm_config_validation() {
        let instance =
            Instance::two_arm(0.1, WeightVector::uniform(2), RewardFamily::Bernoulli).unwrap();
        let mut config = ExperimentConfig {
            schema: 1,
            experiment_id: "two_arm".to_string(),
            instance_source: InstanceSource::Explicit { instance },
            algorithm: Algorithm::TwoArmWeighted { delta: 0.1 },
            horizon: 64,
            trials: 4,
            seed: 3,
            workers: 1,
        };
        let (outcomes, _) = run_trials(&config).unwrap();
        assert!(outcomes
            .iter()
            .all(|o| (o.instance_h.unwrap() - 100.0).abs() < 1e-9));

        config.algorithm = Algorithm::TwoArmWeighted { delta: 0.3 };
        assert!(run_trials(&config).is_err());
        config.algorithm = Algorithm::TwoArmWeighted { delta: 0.0 };
        assert!(run_trials(&config).is_err());
    }

    #[test]
    fn schema_version_checked() {
        let mut config = point_mass_config(2);
        config.schema = 2;
        assert!(matches!(
            run_trials(&config),
            Err(HarnessError::UnsupportedSchema { got: 2 })
        ));
    }

    #[test]
    fn config_json_rejects_unknown_fields() {
        let mut v = serde_json::to_value(point_mass_config(2)).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ExperimentConfig>(v).is_err());
    }

    #[test]
    fn time_to_target_point_mass() {
        // Deterministic rewards: the smallest horizon whose first round makes
        // at least one pull already succeeds.
        let mut config = point_mass_config(5);
        config.trials = 60; // Wilson lower bound of 60/60 is ~0.94
        let t = time_to_target(&config, 0.9, 0, 64).unwrap();
        // n = 2, R = 1: T_1 = floor(T / 2) > 0 from T = 2 on.
        assert_eq!(t, 2);
    }

    #[test]
    fn time_to_target_unreachable() {
        let mut config = point_mass_config(5);
        // Success is certain but 5 trials cap the Wilson lower bound below 0.9.
        let err = time_to_target(&config, 0.9, 0, 64).unwrap_err();
        assert!(matches!(err, HarnessError::TargetUnreachable { .. }));
        config.trials = 60;
        assert!(time_to_target(&config, 0.9, 0, 64).is_ok());
    }

    #[test]
    fn sweep_reproduces_individual_runs() {
        // A grid point rerun as its own experiment with the derived seed
        // gives identical outcomes.
        let horizons = [8u64, 16, 32];
        for (index, &t) in horizons.iter().enumerate() {
            let mut grid_cfg = point_mass_config(12);
            grid_cfg.horizon = t;
            grid_cfg.seed = derive_seed(99, index as u64);
            let (a_out, a_sum) = run_trials(&grid_cfg).unwrap();
            let (b_out, b_sum) = run_trials(&grid_cfg.clone()).unwrap();
            assert_eq!(a_out, b_out);
            assert_eq!(a_sum, b_sum);
        }
    }

    #[test]
    fn hardness_probe_curve_shape() {
        let params = HardParams::with_overrides(16, None, Some(5.0), Some(2)).unwrap();
        let curve = hardness_probe(&params, 2, 2, &[0, 200, 5_000], 60, 11, 2).unwrap();
        assert_eq!(curve.len(), 3);
        // Budget 0 degenerates to the lowest-index pick.
        assert!(curve[0].success_rate <= 0.3);
        // Generous budget on a 16-arm desk instance is near certain.
        assert!(curve[2].success_rate >= 0.9);
        for w in curve.windows(2) {
            let pooled = (w[0].standard_error.powi(2) + w[1].standard_error.powi(2)).sqrt();
            assert!(w[1].success_rate >= w[0].success_rate - 2.0 * pooled);
        }
        assert!(hardness_probe(&params, 2, 2, &[5, 5], 10, 1, 1).is_err());
        assert!(hardness_probe(&params, 2, 2, &[], 10, 1, 1).is_err());
    }

    #[test]
    fn centralized_time_to_target_stays_in_sanity_band() {
        // 8 arms, all gaps 0.1: H = 700. The centralized reference should hit
        // 0.9 success somewhere inside [H/10, 100 H ln n], and its speedup
        // H / T stays at or below ~1.
        let mut means = vec![0.5; 8];
        means[0] = 0.6;
        let instance = Instance::single_agent(means, RewardFamily::Bernoulli).unwrap();
        let h = gap_profile(&instance).unwrap().h;
        assert!((h - 700.0).abs() < 1e-6);
        let config = ExperimentConfig {
            schema: 1,
            experiment_id: "centralized_band".to_string(),
            instance_source: InstanceSource::Explicit { instance },
            algorithm: Algorithm::Centralized,
            horizon: 0,
            trials: 150,
            seed: 17,
            workers: 4,
        };
        let t = time_to_target(&config, 0.9, 1, 200_000).unwrap();
        let lo = (h / 10.0) as u64;
        let hi = (100.0 * h * 8.0f64.ln()) as u64;
        assert!(t >= lo && t <= hi, "t = {t} outside [{lo}, {hi}]");
        let speedup = compute_speedup(h, t).unwrap();
        assert!(
            speedup <= 1.5,
            "centralized speedup {speedup} should be <= ~1"
        );
    }

    #[test]
    fn two_arm_single_agent_time_to_target_band() {
        // K = 1, delta = 0.1: H = 100; the measured time lands in [50, 10^4].
        let instance =
            Instance::two_arm(0.1, WeightVector::uniform(1), RewardFamily::Bernoulli).unwrap();
        let config = ExperimentConfig {
            schema: 1,
            experiment_id: "two_arm_band".to_string(),
            instance_source: InstanceSource::Explicit { instance },
            algorithm: Algorithm::TwoArmWeighted { delta: 0.1 },
            horizon: 0,
            trials: 300,
            seed: 23,
            workers: 4,
        };
        let t = time_to_target(&config, 0.9, 1, 10_000).unwrap();
        assert!((50..=10_000).contains(&t), "t = {t}");
    }

    #[test]
    fn doubling_agents_cuts_time_to_target() {
        let run = |agents: usize| {
            let instance =
                Instance::two_arm(0.05, WeightVector::uniform(agents), RewardFamily::Bernoulli)
                    .unwrap();
            let config = ExperimentConfig {
                schema: 1,
                experiment_id: format!("two_arm_k{agents}"),
                instance_source: InstanceSource::Explicit { instance },
                algorithm: Algorithm::TwoArmWeighted { delta: 0.05 },
                horizon: 0,
                trials: 400,
                seed: 29,
                workers: 4,
            };
            time_to_target(&config, 0.9, 1, 4_000).unwrap()
        };
        let t2 = run(2);
        let t4 = run(4);
        assert!(
            t2 as f64 >= 1.5 * t4 as f64,
            "doubling K should cut the time by >= 1.5x: K=2 -> {t2}, K=4 -> {t4}"
        );
    }

    #[test]
    fn success_curve_monotone_in_horizon() {
        let instance = Instance::new(
            vec![vec![0.6, 0.6], vec![0.5, 0.5], vec![0.4, 0.4]],
            WeightVector::uniform(2),
            RewardFamily::Bernoulli,
        )
        .unwrap();
        let mut rates = Vec::new();
        for (index, t) in [30u64, 120, 480, 1920].into_iter().enumerate() {
            let config = ExperimentConfig {
                schema: 1,
                experiment_id: "curve".to_string(),
                instance_source: InstanceSource::Explicit {
                    instance: instance.clone(),
                },
                algorithm: Algorithm::ColLearn { rounds: 2 },
                horizon: t,
                trials: 300,
                seed: derive_seed(31, index as u64),
                workers: 4,
            };
            let (_, summary) = run_trials(&config).unwrap();
            let se = (summary.success_rate * (1.0 - summary.success_rate) / 300.0).sqrt();
            rates.push((summary.success_rate, se));
        }
        for w in rates.windows(2) {
            let pooled = (w[0].1 * w[0].1 + w[1].1 * w[1].1).sqrt();
            assert!(
                w[1].0 >= w[0].0 - 2.0 * pooled,
                "curve not monotone within noise: {rates:?}"
            );
        }
    }

    #[test]
    fn csv_contract_columns() {
        let config = point_mass_config(2);
        let (outcomes, summary) = run_trials(&config).unwrap();
        let doc = csv::render_run(&config, &outcomes, &summary);
        let lines: Vec<&str> = doc.lines().collect();
        assert_eq!(lines[0], "# master_seed=99");
        assert_eq!(lines[1], csv::TRIAL_HEADER);
        assert_eq!(lines.len(), 2 + 2 + 1 + 1); // header comment + trial hdr + 2 rows + summary hdr + row
        assert!(lines[2].starts_with("unit,0,99,2,2,1,16,col_learn,explicit,true,"));
        assert_eq!(lines[4], csv::SUMMARY_HEADER);
        assert!(lines[5].starts_with("unit,16,2,2,1,"));
        let fields: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(fields.len(), 14);
    }
}
