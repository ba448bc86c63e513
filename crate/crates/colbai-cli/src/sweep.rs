//! Parameter-grid sweeps: the Cartesian product of grid dimensions over a
//! base experiment, one summary row per point.
//!
//! Dimensions nest in the fixed order `T`, `R`, `K`, `delta`,
//! `weights_preset` (`T` outermost), and point `g` of the product runs with
//! seed `derive_seed(master_seed, g)`, so any point can be reproduced as a
//! standalone run with that derived seed.

use crate::{map_harness_error, read_config, write_output, CliError, CommonArgs, Format};
use colbai_core::bandit::{Instance, WeightVector};
use colbai_core::harness::{
    csv, run_trials, Algorithm, ExperimentConfig, InstanceSource, SummaryStats,
};
use colbai_core::rng::derive_seed;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    schema: u32,
    base: ExperimentConfig,
    grid: GridSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    #[serde(rename = "T", default)]
    horizons: Option<Vec<u64>>,
    #[serde(rename = "R", default)]
    rounds: Option<Vec<u32>>,
    #[serde(rename = "K", default)]
    agents: Option<Vec<usize>>,
    #[serde(default)]
    delta: Option<Vec<f64>>,
    #[serde(default)]
    weights_preset: Option<Vec<WeightsPreset>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum WeightsPreset {
    Uniform,
    /// All weight on agent 0.
    SingleAgent,
}

impl WeightsPreset {
    fn label(self) -> &'static str {
        match self {
            WeightsPreset::Uniform => "uniform",
            WeightsPreset::SingleAgent => "single_agent",
        }
    }

    fn build(self, agents: usize) -> WeightVector {
        match self {
            WeightsPreset::Uniform => WeightVector::uniform(agents),
            WeightsPreset::SingleAgent => WeightVector::single_agent(agents, 0),
        }
    }
}

/// One grid point before application: `None` means "not swept".
#[derive(Debug, Clone, Copy)]
struct GridPoint {
    horizon: Option<u64>,
    rounds: Option<u32>,
    agents: Option<usize>,
    delta: Option<f64>,
    preset: Option<WeightsPreset>,
}

fn validate_grid(grid: &GridSpec, base: &ExperimentConfig) -> Result<(), CliError> {
    let mut any = false;
    let mut check = |name: &str, len: Option<usize>| -> Result<(), CliError> {
        if let Some(len) = len {
            any = true;
            if len == 0 {
                return Err(CliError::Config(format!("grid dimension {name} is empty")));
            }
        }
        Ok(())
    };
    check("T", grid.horizons.as_ref().map(Vec::len))?;
    check("R", grid.rounds.as_ref().map(Vec::len))?;
    check("K", grid.agents.as_ref().map(Vec::len))?;
    check("delta", grid.delta.as_ref().map(Vec::len))?;
    check("weights_preset", grid.weights_preset.as_ref().map(Vec::len))?;
    if !any {
        return Err(CliError::Config(
            "sweep grid must contain at least one of T, R, K, delta, weights_preset".to_string(),
        ));
    }

    let is_two_arm = matches!(base.algorithm, Algorithm::TwoArmWeighted { .. });
    let is_hard = matches!(base.instance_source, InstanceSource::Hard { .. });
    if grid.rounds.is_some() && !matches!(base.algorithm, Algorithm::ColLearn { .. }) {
        return Err(CliError::Config(
            "an R grid requires the col_learn algorithm".to_string(),
        ));
    }
    if grid.delta.is_some() && !is_two_arm {
        return Err(CliError::Config(
            "a delta grid requires the two_arm_weighted algorithm".to_string(),
        ));
    }
    if grid.weights_preset.is_some() && !is_two_arm {
        return Err(CliError::Config(
            "a weights_preset grid requires the two_arm_weighted algorithm".to_string(),
        ));
    }
    if grid.agents.is_some() && !(is_hard || is_two_arm) {
        return Err(CliError::Config(
            "a K grid requires a hard source or the two_arm_weighted algorithm".to_string(),
        ));
    }
    Ok(())
}

/// Cartesian product in the documented nesting order, `T` outermost.
fn expand(grid: &GridSpec) -> Vec<GridPoint> {
    let opt = |v: &Option<Vec<u64>>| -> Vec<Option<u64>> {
        v.as_ref()
            .map(|v| v.iter().copied().map(Some).collect())
            .unwrap_or_else(|| vec![None])
    };
    let horizons = opt(&grid.horizons);
    let rounds: Vec<Option<u32>> = grid
        .rounds
        .as_ref()
        .map(|v| v.iter().copied().map(Some).collect())
        .unwrap_or_else(|| vec![None]);
    let agents: Vec<Option<usize>> = grid
        .agents
        .as_ref()
        .map(|v| v.iter().copied().map(Some).collect())
        .unwrap_or_else(|| vec![None]);
    let deltas: Vec<Option<f64>> = grid
        .delta
        .as_ref()
        .map(|v| v.iter().copied().map(Some).collect())
        .unwrap_or_else(|| vec![None]);
    let presets: Vec<Option<WeightsPreset>> = grid
        .weights_preset
        .as_ref()
        .map(|v| v.iter().copied().map(Some).collect())
        .unwrap_or_else(|| vec![None]);

    let mut points = Vec::new();
    for &horizon in &horizons {
        for &rounds in &rounds {
            for &agents in &agents {
                for &delta in &deltas {
                    for &preset in &presets {
                        points.push(GridPoint {
                            horizon,
                            rounds,
                            agents,
                            delta,
                            preset,
                        });
                    }
                }
            }
        }
    }
    points
}

fn point_label(point: &GridPoint) -> String {
    let mut parts = Vec::new();
    if let Some(t) = point.horizon {
        parts.push(format!("T={t}"));
    }
    if let Some(r) = point.rounds {
        parts.push(format!("R={r}"));
    }
    if let Some(k) = point.agents {
        parts.push(format!("K={k}"));
    }
    if let Some(d) = point.delta {
        parts.push(format!("delta={d}"));
    }
    if let Some(p) = point.preset {
        parts.push(format!("weights={}", p.label()));
    }
    parts.join("/")
}

fn apply_point(
    base: &ExperimentConfig,
    point: &GridPoint,
    master_seed: u64,
    index: u64,
) -> Result<ExperimentConfig, CliError> {
    let mut config = base.clone();
    config.seed = derive_seed(master_seed, index);
    let label = point_label(point);
    if !label.is_empty() {
        config.experiment_id = format!("{}/{}", base.experiment_id, label);
    }
    if let Some(t) = point.horizon {
        config.horizon = t;
    }
    if let Some(r) = point.rounds {
        config.algorithm = Algorithm::ColLearn { rounds: r };
    }
    match (&mut config.instance_source, config.algorithm) {
        (InstanceSource::Hard { agents, .. }, _) => {
            if let Some(k) = point.agents {
                *agents = k;
            }
        }
        (InstanceSource::Explicit { instance }, Algorithm::TwoArmWeighted { delta }) => {
            // Rebuild the two-arm world from the swept K / delta / preset,
            // keeping the base's values where not swept.
            let agents = point.agents.unwrap_or(instance.agents());
            let delta = point.delta.unwrap_or(delta);
            let weights = match point.preset {
                Some(preset) => preset.build(agents),
                None if agents == instance.agents() => instance.weights().clone(),
                None => WeightVector::uniform(agents),
            };
            let rebuilt = Instance::two_arm(delta, weights, instance.reward_family())
                .map_err(|e| CliError::Config(format!("grid point {label}: {e}")))?;
            *instance = rebuilt;
            config.algorithm = Algorithm::TwoArmWeighted { delta };
        }
        _ => {}
    }
    Ok(config)
}

pub(crate) fn cmd_sweep(args: &CommonArgs) -> Result<(), CliError> {
    let mut sweep: SweepConfig = read_config(&args.config)?;
    if sweep.schema != 1 {
        return Err(CliError::Config(format!(
            "unsupported config schema {}, expected 1",
            sweep.schema
        )));
    }
    if let Some(seed) = args.seed {
        sweep.base.seed = seed;
    }
    if let Some(workers) = args.workers {
        sweep.base.workers = workers;
    }
    validate_grid(&sweep.grid, &sweep.base)?;

    let master_seed = sweep.base.seed;
    let points = expand(&sweep.grid);
    let mut rows: Vec<(ExperimentConfig, SummaryStats)> = Vec::with_capacity(points.len());
    for (index, point) in points.iter().enumerate() {
        let config = apply_point(&sweep.base, point, master_seed, index as u64)?;
        let (_, summary) = run_trials(&config).map_err(map_harness_error)?;
        rows.push((config, summary));
    }

    let content = match args.format {
        Format::Csv => csv::render_summaries(master_seed, &rows),
        Format::Json => {
            let docs: Vec<serde_json::Value> = rows
                .iter()
                .map(|(config, summary)| {
                    serde_json::json!({
                        "experiment_id": config.experiment_id,
                        "seed": config.seed,
                        "T": config.horizon,
                        "summary": summary,
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "master_seed": master_seed,
                "points": docs,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            s
        }
    };
    write_output(&args.out, &content)
}
