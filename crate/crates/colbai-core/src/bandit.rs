//! Core domain types for collaborative bandit instances: weighted aggregation
//! of local means, gap profiles with instance complexity, reward sampling, and
//! a Chernoff-Hoeffding tail bound.
//!
//! An [`Instance`] is the ground-truth world: `n` arms, `K` agents, an `n x K`
//! matrix of local means `mu[i][k]` in `[0, 1]`, and a [`WeightVector`] of
//! importance weights. The quantity the algorithms chase is the *global* mean
//! of arm `i`, `sum_k alpha_k * mu[i][k]`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance on `sum(alpha) == 1` for user-supplied decimal weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum BanditError {
    #[error("weights must be non-empty")]
    EmptyWeights,
    #[error("weight {index} is {value}, must be finite and >= 0")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, must be 1 within {WEIGHT_SUM_TOL:e}")]
    WeightSum { sum: f64 },
    #[error("instance must have at least one arm and one agent")]
    EmptyInstance,
    #[error("local means row {row} has {got} entries, expected {expected}")]
    RaggedMatrix {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("local mean mu[{arm}][{agent}] = {value} is outside [0, 1]")]
    MeanOutOfRange {
        arm: usize,
        agent: usize,
        value: f64,
    },
    #[error("weight vector has {weights} entries for {agents} agents")]
    WeightLength { weights: usize, agents: usize },
    #[error("arm index {arm} out of range for {n} arms")]
    ArmOutOfRange { arm: usize, n: usize },
    #[error("agent index {agent} out of range for {k} agents")]
    AgentOutOfRange { agent: usize, k: usize },
    #[error("global means are tied at the maximum (arms {first} and {second}); gaps undefined")]
    TiedBestArm { first: usize, second: usize },
    #[error("range {index} has b = {hi} < a = {lo}")]
    InvalidRange { index: usize, lo: f64, hi: f64 },
    #[error("deviation t = {t} must be >= 0")]
    NegativeDeviation { t: f64 },
}

/// Importance weights `alpha_1..alpha_K`: non-negative, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector {
    alphas: Vec<f64>,
}

impl WeightVector {
    pub fn new(alphas: Vec<f64>) -> Result<Self, BanditError> {
        if alphas.is_empty() {
            return Err(BanditError::EmptyWeights);
        }
        for (index, &value) in alphas.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(BanditError::NegativeWeight { index, value });
            }
        }
        let sum: f64 = alphas.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(BanditError::WeightSum { sum });
        }
        Ok(Self { alphas })
    }

    /// `alpha_k = 1/K` for all agents.
    pub fn uniform(agents: usize) -> Self {
        assert!(agents >= 1, "need at least one agent");
        Self {
            alphas: vec![1.0 / agents as f64; agents],
        }
    }

    /// All weight on one agent; the degenerate skew case.
    pub fn single_agent(agents: usize, agent: usize) -> Self {
        assert!(agent < agents, "agent index out of range");
        let mut alphas = vec![0.0; agents];
        alphas[agent] = 1.0;
        Self { alphas }
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.alphas
    }

    /// `sum_k alpha_k^2`, the quantity governing weighted speedup.
    pub fn sum_squares(&self) -> f64 {
        self.alphas.iter().map(|a| a * a).sum()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = BanditError;
    fn try_from(alphas: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(alphas)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.alphas
    }
}

/// Reward distribution family shared by every arm-agent pair of an instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardFamily {
    /// `Ber(mu)` rewards in `{0, 1}`; the model used throughout.
    #[default]
    Bernoulli,
    /// Deterministic rewards equal to the mean; exists for exact tests.
    PointMass,
}

/// A collaborative bandit instance: the world agents sample from.
///
/// Immutable after construction; safe to share across trial workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    n: usize,
    k: usize,
    /// Row-major `n x K`: `local_means[arm * k + agent]`.
    local_means: Vec<f64>,
    weights: WeightVector,
    reward_family: RewardFamily,
}

/// JSON schema for [`Instance`]: `{n, K, weights, local_means, reward_family}`
/// with `local_means` as `n` rows of `K` entries. Doubles round-trip exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRepr {
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    weights: Vec<f64>,
    local_means: Vec<Vec<f64>>,
    #[serde(default)]
    reward_family: RewardFamily,
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = BanditError;
    fn try_from(repr: InstanceRepr) -> Result<Self, Self::Error> {
        let rows = repr.local_means;
        if rows.len() != repr.n || repr.weights.len() != repr.k {
            return Err(BanditError::RaggedMatrix {
                row: 0,
                got: rows.len(),
                expected: repr.n,
            });
        }
        Instance::new(rows, WeightVector::new(repr.weights)?, repr.reward_family)
    }
}

impl From<Instance> for InstanceRepr {
    fn from(inst: Instance) -> Self {
        let rows = (0..inst.n)
            .map(|i| inst.local_means[i * inst.k..(i + 1) * inst.k].to_vec())
            .collect();
        InstanceRepr {
            n: inst.n,
            k: inst.k,
            weights: inst.weights.as_slice().to_vec(),
            local_means: rows,
            reward_family: inst.reward_family,
        }
    }
}

impl Instance {
    /// Builds an instance from `n` rows of `K` local means.
    pub fn new(
        rows: Vec<Vec<f64>>,
        weights: WeightVector,
        reward_family: RewardFamily,
    ) -> Result<Self, BanditError> {
        let n = rows.len();
        if n == 0 {
            return Err(BanditError::EmptyInstance);
        }
        let k = rows[0].len();
        if k == 0 {
            return Err(BanditError::EmptyInstance);
        }
        if weights.len() != k {
            return Err(BanditError::WeightLength {
                weights: weights.len(),
                agents: k,
            });
        }
        let mut local_means = Vec::with_capacity(n * k);
        for (arm, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(BanditError::RaggedMatrix {
                    row: arm,
                    got: row.len(),
                    expected: k,
                });
            }
            for (agent, &value) in row.iter().enumerate() {
                if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                    return Err(BanditError::MeanOutOfRange { arm, agent, value });
                }
                local_means.push(value);
            }
        }
        Ok(Self {
            n,
            k,
            local_means,
            weights,
            reward_family,
        })
    }

    /// Single-agent instance over the given means (weight 1 on the only agent).
    pub fn single_agent(means: Vec<f64>, reward_family: RewardFamily) -> Result<Self, BanditError> {
        let rows = means.into_iter().map(|m| vec![m]).collect();
        Instance::new(rows, WeightVector::uniform(1), reward_family)
    }

    /// The two-arm sign-test world: arm 0 has mean 1/2 at every agent, arm 1
    /// has mean `1/2 + delta` at every agent (IID locals).
    pub fn two_arm(
        delta: f64,
        weights: WeightVector,
        reward_family: RewardFamily,
    ) -> Result<Self, BanditError> {
        let k = weights.len();
        Instance::new(
            vec![vec![0.5; k], vec![0.5 + delta; k]],
            weights,
            reward_family,
        )
    }

    pub fn arms(&self) -> usize {
        self.n
    }

    pub fn agents(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn reward_family(&self) -> RewardFamily {
        self.reward_family
    }

    pub fn local_mean(&self, arm: usize, agent: usize) -> f64 {
        assert!(arm < self.n && agent < self.k, "index out of range");
        self.local_means[arm * self.k + agent]
    }

    /// Local means of one arm across all agents.
    pub fn arm_row(&self, arm: usize) -> &[f64] {
        assert!(arm < self.n, "arm index out of range");
        &self.local_means[arm * self.k..(arm + 1) * self.k]
    }

    /// Weighted global mean of an arm, clamped into the local-mean envelope
    /// so the weighted-mean sandwich holds exactly despite rounding.
    pub fn global_mean(&self, arm: usize) -> Result<f64, BanditError> {
        if arm >= self.n {
            return Err(BanditError::ArmOutOfRange { arm, n: self.n });
        }
        let row = self.arm_row(arm);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut acc = 0.0;
        for (&alpha, &mu) in self.weights.as_slice().iter().zip(row) {
            acc += alpha * mu;
            lo = lo.min(mu);
            hi = hi.max(mu);
        }
        Ok(acc.clamp(lo, hi))
    }

    /// Global means of all arms.
    pub fn global_means(&self) -> Vec<f64> {
        (0..self.n)
            .map(|arm| self.global_mean(arm).expect("arm in range"))
            .collect()
    }

    /// Draws one reward for `(arm, agent)`, consuming the stream
    /// deterministically: one draw for Bernoulli, none for point mass.
    pub fn sample_pull<R: Rng>(
        &self,
        arm: usize,
        agent: usize,
        rng: &mut R,
    ) -> Result<f64, BanditError> {
        if arm >= self.n {
            return Err(BanditError::ArmOutOfRange { arm, n: self.n });
        }
        if agent >= self.k {
            return Err(BanditError::AgentOutOfRange { agent, k: self.k });
        }
        let mu = self.local_means[arm * self.k + agent];
        Ok(match self.reward_family {
            RewardFamily::Bernoulli => {
                if rng.random_bool(mu) {
                    1.0
                } else {
                    0.0
                }
            }
            RewardFamily::PointMass => mu,
        })
    }
}

/// Global means, gaps to the best arm, and instance complexity `H`.
#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub struct GapProfile {
    /// Global mean per arm.
    pub global_means: Vec<f64>,
    /// Index of the unique best arm.
    pub best_index: usize,
    /// `gaps[i] = mu_best - mu_i` for `i != best`; at the best index, the gap
    /// to the second best (infinite for a one-arm instance).
    pub gaps: Vec<f64>,
    /// `H = sum_{i != best} 1 / gaps[i]^2`; zero for a one-arm instance.
    pub h: f64,
}

/// Computes the gap profile of an instance.
///
/// Fails with [`BanditError::TiedBestArm`] when the maximum global mean is not
/// unique: `H` is undefined with a zero gap, and the hard-instance machinery
/// conditions on uniqueness anyway.
pub fn gap_profile(instance: &Instance) -> Result<GapProfile, BanditError> {
    gap_profile_of_means(&instance.global_means())
}

/// [`gap_profile`] on a raw vector of global means.
pub fn gap_profile_of_means(global_means: &[f64]) -> Result<GapProfile, BanditError> {
    assert!(!global_means.is_empty(), "need at least one arm");
    let mut best_index = 0;
    for (i, &mu) in global_means.iter().enumerate().skip(1) {
        if mu > global_means[best_index] {
            best_index = i;
        }
    }
    let best = global_means[best_index];
    for (i, &mu) in global_means.iter().enumerate() {
        if i != best_index && mu == best {
            return Err(BanditError::TiedBestArm {
                first: best_index.min(i),
                second: best_index.max(i),
            });
        }
    }

    let mut second = f64::NEG_INFINITY;
    for (i, &mu) in global_means.iter().enumerate() {
        if i != best_index && mu > second {
            second = mu;
        }
    }

    let mut gaps = Vec::with_capacity(global_means.len());
    let mut h = 0.0;
    for (i, &mu) in global_means.iter().enumerate() {
        if i == best_index {
            // One-arm instances have no runner-up.
            gaps.push(if second.is_finite() {
                best - second
            } else {
                f64::INFINITY
            });
        } else {
            let gap = best - mu;
            gaps.push(gap);
            h += 1.0 / (gap * gap);
        }
    }
    Ok(GapProfile {
        global_means: global_means.to_vec(),
        best_index,
        gaps,
        h,
    })
}

/// Chernoff-Hoeffding tail bound for a sum of independent variables with
/// ranges `[a_i, b_i]`: `exp(-2 t^2 / sum (b_i - a_i)^2)`, clamped to `[0, 1]`.
///
/// A degenerate all-point-mass range set cannot deviate, so `t > 0` yields 0.
pub fn chernoff_tail(ranges: &[(f64, f64)], t: f64) -> Result<f64, BanditError> {
    if t < 0.0 || t.is_nan() {
        return Err(BanditError::NegativeDeviation { t });
    }
    let mut sum_sq = 0.0;
    for (index, &(lo, hi)) in ranges.iter().enumerate() {
        if hi < lo {
            return Err(BanditError::InvalidRange { index, lo, hi });
        }
        sum_sq += (hi - lo) * (hi - lo);
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    if sum_sq == 0.0 {
        return Ok(0.0);
    }
    Ok((-2.0 * t * t / sum_sq).exp().clamp(0.0, 1.0))
}
