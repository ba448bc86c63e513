//! The interleaved hard-instance family for non-IID collaborative BAI.
//!
//! Every arm is a length-`L` bit vector `X_1..X_L` drawn i.i.d. `Ber(eta^-2)`.
//! Its global mean is `1/2 + sum_l X_l * eta^-l`; the odd-level terms live at
//! agent A and the even-level terms at agent B (each doubled so the two local
//! means average back to the global one). "Best arm" is always decided on the
//! bit matrix (an all-ones row), never by float comparison of means.
//!
//! Beyond construction this module houses the machinery used to validate the
//! family's quantitative properties at desk scale: support sets of local means
//! once a prefix of levels is pinned to one, log-likelihoods of pull-outcome
//! sequences, likelihood-ratio "good sequence" membership, the closed form for
//! the unique-best-arm event, rejection sampling conditioned on a complexity
//! cap, and the K-agent group expansion.

use crate::bandit::{gap_profile_of_means, Instance, RewardFamily, WeightVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest usable contribution ratio: `2 + sqrt(5)`. Below this the doubled
/// odd-level sum can push a local mean past 1.
pub fn eta_min() -> f64 {
    2.0 + 5.0f64.sqrt()
}

#[derive(Debug, Error, PartialEq)]
pub enum HardError {
    #[error(
        "eta = {eta:.6} is too small (must exceed 2+sqrt(5) ~ 4.2361): local means would \
         exceed 1; canonical eta = n^(1/(2L)) needs n >= {needed_arms:.3e} at L = {levels}"
    )]
    EtaTooSmall {
        eta: f64,
        levels: usize,
        needed_arms: f64,
    },
    #[error("need a level count: pass levels directly or a round parameter (levels = 6R)")]
    MissingLevels,
    #[error("level count must be >= 1")]
    ZeroLevels,
    #[error("arm count must be >= 1")]
    ZeroArms,
    #[error("round parameter must be >= 1")]
    ZeroRounds,
    #[error("bit vectors are identical; gap level undefined")]
    IdenticalBitVectors,
    #[error("mean {x} is at the boundary and the sequence contains the impossible outcome")]
    MeanAtBoundary { x: f64 },
    #[error("mean {x} is outside [0, 1]")]
    InvalidMean { x: f64 },
    #[error("rejection sampling exhausted {attempts} attempts without an accepted instance")]
    RejectionBudgetExhausted { attempts: usize },
    #[error("no sample satisfied the unique-best-arm event")]
    NoAcceptedSamples,
    #[error("agent count {agents} must be even and >= 2 for the two-group expansion")]
    OddAgentCount { agents: usize },
    #[error("bit matrix row {row} is '{value}', expected {levels} characters of 0/1")]
    BadBitRow {
        row: usize,
        value: String,
        levels: usize,
    },
    #[error("bit matrix has {rows} rows, expected {arms}")]
    BadBitRowCount { rows: usize, arms: usize },
}

/// Which agent's local means a support set or pull sequence refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Holds the odd-level terms.
    A,
    /// Holds the even-level terms.
    B,
}

impl Side {
    /// Parity of the 1-based levels this side owns.
    fn parity(self) -> usize {
        match self {
            Side::A => 1,
            Side::B => 0,
        }
    }
}

/// Parameters of the hard input distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HardParamsRepr", into = "HardParamsRepr")]
pub struct HardParams {
    /// Number of arms.
    pub n: usize,
    /// Number of levels `L` in each arm's bit vector (canonically `6R`).
    pub levels: usize,
    /// Contribution ratio between consecutive levels.
    pub eta: f64,
    /// Per-level bit probability `eta^-2`.
    pub bit_prob: f64,
    /// Round parameter the levels were derived from, when one was given.
    pub rounds: Option<u32>,
    /// `sqrt(eta) / 2^7`; scales the lower-bound time budget.
    pub zeta: f64,
    /// `eta / 2^7`.
    pub gamma: f64,
    /// Best global mean `1/2 + sum_l eta^-l`.
    pub mu_star: f64,
    /// Best local mean at side A.
    pub mu_star_a: f64,
    /// Best local mean at side B.
    pub mu_star_b: f64,
    /// True iff `eta^(2L) = n` to relative error 1e-9, i.e. the all-ones row
    /// has probability exactly `1/n` and the closed forms reduce to the
    /// `(1 - 1/n)^(n-1)` regime.
    pub canonical: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HardParamsRepr {
    n: usize,
    #[serde(rename = "L")]
    levels: usize,
    eta: f64,
    #[serde(rename = "R", default)]
    rounds: Option<u32>,
    #[serde(default)]
    canonical: Option<bool>,
}

impl TryFrom<HardParamsRepr> for HardParams {
    type Error = HardError;
    fn try_from(repr: HardParamsRepr) -> Result<Self, Self::Error> {
        HardParams::with_overrides(repr.n, repr.rounds, Some(repr.eta), Some(repr.levels))
    }
}

impl From<HardParams> for HardParamsRepr {
    fn from(p: HardParams) -> Self {
        HardParamsRepr {
            n: p.n,
            levels: p.levels,
            eta: p.eta,
            rounds: p.rounds,
            canonical: Some(p.canonical),
        }
    }
}

impl HardParams {
    /// Canonical derivation: `L = 6R` and `eta = n^(1/(2L))`.
    pub fn derive(n: usize, rounds: u32) -> Result<Self, HardError> {
        Self::with_overrides(n, Some(rounds), None, None)
    }

    /// Derivation with optional `(eta, levels)` overrides so the support and
    /// likelihood machinery can be exercised at desk scale independently of
    /// `n`. Without overrides this is the canonical derivation.
    pub fn with_overrides(
        n: usize,
        rounds: Option<u32>,
        eta: Option<f64>,
        levels: Option<usize>,
    ) -> Result<Self, HardError> {
        if n == 0 {
            return Err(HardError::ZeroArms);
        }
        if rounds == Some(0) {
            return Err(HardError::ZeroRounds);
        }
        let levels = match (levels, rounds) {
            (Some(l), _) => l,
            (None, Some(r)) => 6 * r as usize,
            (None, None) => return Err(HardError::MissingLevels),
        };
        if levels == 0 {
            return Err(HardError::ZeroLevels);
        }
        let eta = eta.unwrap_or_else(|| (n as f64).powf(1.0 / (2.0 * levels as f64)));
        if !eta.is_finite() || eta <= eta_min() {
            return Err(HardError::EtaTooSmall {
                eta,
                levels,
                needed_arms: eta_min().powi(2 * levels as i32),
            });
        }
        let bit_prob = eta.powi(-2);

        let mut mu_star = 0.5;
        let mut mu_star_a = 0.5;
        let mut mu_star_b = 0.5;
        let mut term = 1.0;
        for level in 1..=levels {
            term /= eta;
            mu_star += term;
            if level % 2 == 1 {
                mu_star_a += 2.0 * term;
            } else {
                mu_star_b += 2.0 * term;
            }
        }
        debug_assert!(mu_star_a <= 1.0 && mu_star_b <= 1.0);

        let canonical = (eta.powi(2 * levels as i32) - n as f64).abs() <= 1e-9 * n as f64;
        Ok(HardParams {
            n,
            levels,
            eta,
            bit_prob,
            rounds,
            zeta: eta.sqrt() / 128.0,
            gamma: eta / 128.0,
            mu_star,
            mu_star_a,
            mu_star_b,
            canonical,
        })
    }

    /// `eta^(2 + 2L) * L`, the bound on the conditional mean complexity.
    pub fn expected_h_bound(&self) -> f64 {
        self.eta.powi(2 + 2 * self.levels as i32) * self.levels as f64
    }

    /// `2 * eta^(2 + 2L) * L`, the complexity cap in the conditioning event.
    pub fn conditioning_h_cap(&self) -> f64 {
        2.0 * self.expected_h_bound()
    }
}

/// Per-agent pull budget below which the round-limited lower bound applies:
/// `ceil(2 * zeta * eta^(2+2L) * L)`. Rounded up, which is the pessimistic
/// direction for an algorithm being probed.
pub fn lower_bound_time_budget(params: &HardParams) -> u64 {
    (2.0 * params.zeta * params.expected_h_bound()).ceil() as u64
}

/// The `n x L` matrix of level bits, row `i` defining arm `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    arms: usize,
    levels: usize,
    bits: Vec<u8>,
}

impl BitMatrix {
    pub fn from_rows(rows: Vec<Vec<u8>>) -> Self {
        let arms = rows.len();
        assert!(arms > 0, "bit matrix needs at least one row");
        let levels = rows[0].len();
        let mut bits = Vec::with_capacity(arms * levels);
        for row in &rows {
            assert_eq!(row.len(), levels, "ragged bit matrix");
            for &b in row {
                assert!(b <= 1, "bit entries must be 0/1");
                bits.push(b);
            }
        }
        BitMatrix { arms, levels, bits }
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Bits of one arm, level 1 first.
    pub fn row(&self, arm: usize) -> &[u8] {
        &self.bits[arm * self.levels..(arm + 1) * self.levels]
    }

    pub fn is_all_ones(&self, arm: usize) -> bool {
        self.row(arm).iter().all(|&b| b == 1)
    }

    fn to_strings(&self) -> Vec<String> {
        (0..self.arms)
            .map(|i| {
                self.row(i)
                    .iter()
                    .map(|&b| if b == 1 { '1' } else { '0' })
                    .collect()
            })
            .collect()
    }

    fn from_strings(rows: &[String], arms: usize, levels: usize) -> Result<Self, HardError> {
        if rows.len() != arms {
            return Err(HardError::BadBitRowCount {
                rows: rows.len(),
                arms,
            });
        }
        let mut bits = Vec::with_capacity(arms * levels);
        for (row, s) in rows.iter().enumerate() {
            if s.len() != levels || !s.bytes().all(|c| c == b'0' || c == b'1') {
                return Err(HardError::BadBitRow {
                    row,
                    value: s.clone(),
                    levels,
                });
            }
            bits.extend(s.bytes().map(|c| c - b'0'));
        }
        Ok(BitMatrix { arms, levels, bits })
    }
}

/// Draws one arm row of `L` i.i.d. `Ber(eta^-2)` bits.
fn sample_row_into<R: Rng>(params: &HardParams, rng: &mut R, row: &mut [u8]) {
    for bit in row.iter_mut() {
        *bit = u8::from(rng.random_bool(params.bit_prob));
    }
}

/// Local means `(side A, side B)` of a bit row.
fn local_means_of_row(params: &HardParams, row: &[u8]) -> (f64, f64) {
    let mut a = 0.5;
    let mut b = 0.5;
    let mut term = 1.0;
    for (idx, &bit) in row.iter().enumerate() {
        term /= params.eta;
        if bit == 1 {
            if (idx + 1) % 2 == 1 {
                a += 2.0 * term;
            } else {
                b += 2.0 * term;
            }
        }
    }
    (a, b)
}

/// Global mean `1/2 + sum_l X_l eta^-l` of a bit row.
pub fn global_mean_of_row(params: &HardParams, row: &[u8]) -> f64 {
    let mut mu = 0.5;
    let mut term = 1.0;
    for &bit in row {
        term /= params.eta;
        if bit == 1 {
            mu += term;
        }
    }
    mu
}

/// A sampled hard instance: parameters, defining bits, the derived two-agent
/// (or expanded K-agent) instance, and the arms whose bit rows are all ones.
#[derive(Debug, Clone, PartialEq)]
pub struct HardInstance {
    pub params: HardParams,
    pub bits: BitMatrix,
    pub instance: Instance,
    /// Sorted indices of all-ones rows; ground truth for "best arm".
    pub best_arms: Vec<usize>,
}

impl HardInstance {
    /// Builds the two-agent instance determined by a bit matrix.
    pub fn from_bits(params: HardParams, bits: BitMatrix) -> Self {
        assert_eq!(bits.arms(), params.n, "bit matrix arm count mismatch");
        assert_eq!(
            bits.levels(),
            params.levels,
            "bit matrix level count mismatch"
        );
        let mut rows = Vec::with_capacity(params.n);
        let mut best_arms = Vec::new();
        for arm in 0..params.n {
            let row = bits.row(arm);
            let (a, b) = local_means_of_row(&params, row);
            rows.push(vec![a, b]);
            if bits.is_all_ones(arm) {
                best_arms.push(arm);
            }
        }
        let instance = Instance::new(rows, WeightVector::uniform(2), RewardFamily::Bernoulli)
            .expect("hard-instance means are valid by construction");
        HardInstance {
            params,
            bits,
            instance,
            best_arms,
        }
    }

    /// The unique-best-arm event: exactly one all-ones row.
    pub fn has_unique_best(&self) -> bool {
        self.best_arms.len() == 1
    }

    /// Replicates the two local sides across `K` agents: the first `K/2`
    /// agents receive side A's means, the rest side B's, weights uniform.
    /// Global means are unchanged.
    pub fn expand_to_agents(&self, agents: usize) -> Result<HardInstance, HardError> {
        if agents < 2 || !agents.is_multiple_of(2) {
            return Err(HardError::OddAgentCount { agents });
        }
        let half = agents / 2;
        let rows = (0..self.params.n)
            .map(|arm| {
                let a = self.instance.local_mean(arm, 0);
                let b = self.instance.local_mean(arm, 1);
                let mut row = vec![a; half];
                row.extend(std::iter::repeat_n(b, half));
                row
            })
            .collect();
        let instance = Instance::new(rows, WeightVector::uniform(agents), RewardFamily::Bernoulli)
            .expect("expanded means are valid by construction");
        Ok(HardInstance {
            params: self.params.clone(),
            bits: self.bits.clone(),
            instance,
            best_arms: self.best_arms.clone(),
        })
    }
}

/// JSON schema for [`HardInstance`]: parameters plus one bit string per arm.
/// Means are always rederived on load, never stored.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HardInstanceRepr {
    params: HardParams,
    bits: Vec<String>,
}

impl Serialize for HardInstance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        HardInstanceRepr {
            params: self.params.clone(),
            bits: self.bits.to_strings(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HardInstance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = HardInstanceRepr::deserialize(deserializer)?;
        let bits = BitMatrix::from_strings(&repr.bits, repr.params.n, repr.params.levels)
            .map_err(serde::de::Error::custom)?;
        Ok(HardInstance::from_bits(repr.params, bits))
    }
}

/// Samples a hard instance: each bit i.i.d. `Ber(eta^-2)`, arms row by row.
pub fn sample_hard_instance<R: Rng>(params: &HardParams, rng: &mut R) -> HardInstance {
    let mut bits = vec![0u8; params.n * params.levels];
    for arm in 0..params.n {
        sample_row_into(
            params,
            rng,
            &mut bits[arm * params.levels..(arm + 1) * params.levels],
        );
    }
    let matrix = BitMatrix {
        arms: params.n,
        levels: params.levels,
        bits,
    };
    HardInstance::from_bits(params.clone(), matrix)
}

/// Exact probability of the unique-best-arm event: `n q (1-q)^(n-1)` with
/// `q = eta^(-2L)`. In canonical mode `q = 1/n` and this is `(1-1/n)^(n-1)`.
pub fn exact_pr_e0(params: &HardParams) -> f64 {
    let q = params.bit_prob.powi(params.levels as i32);
    params.n as f64 * q * (1.0 - q).powi(params.n as i32 - 1)
}

/// Monte Carlo estimate of the unique-best-arm probability with its binomial
/// standard error. Distributionally identical to sampling full instances and
/// testing uniqueness; only the mean derivation is skipped.
pub fn estimate_pr_e0<R: Rng>(params: &HardParams, samples: usize, rng: &mut R) -> (f64, f64) {
    assert!(samples >= 1);
    let mut row = vec![0u8; params.levels];
    let mut hits = 0usize;
    for _ in 0..samples {
        let mut all_ones_rows = 0u32;
        for _ in 0..params.n {
            sample_row_into(params, rng, &mut row);
            if row.iter().all(|&b| b == 1) {
                all_ones_rows += 1;
            }
        }
        if all_ones_rows == 1 {
            hits += 1;
        }
    }
    let rate = hits as f64 / samples as f64;
    (rate, (rate * (1.0 - rate) / samples as f64).sqrt())
}

/// Rejection sampling from the conditioned hard distribution: unique best arm
/// *and* instance complexity below `2 eta^(2+2L) L`.
pub fn sample_conditioned<R: Rng>(
    params: &HardParams,
    rng: &mut R,
    max_attempts: usize,
) -> Result<HardInstance, HardError> {
    assert!(max_attempts >= 1);
    let cap = params.conditioning_h_cap();
    for _ in 0..max_attempts {
        let hi = sample_hard_instance(params, rng);
        if !hi.has_unique_best() {
            continue;
        }
        let gp = gap_profile_of_means(&hi.instance.global_means())
            .expect("unique all-ones row implies a unique maximum mean");
        if gp.h < cap {
            return Ok(hi);
        }
    }
    Err(HardError::RejectionBudgetExhausted {
        attempts: max_attempts,
    })
}

/// Fraction of independent draws the conditioned sampler would accept, with
/// binomial standard error.
pub fn conditioned_acceptance_rate<R: Rng>(
    params: &HardParams,
    attempts: usize,
    rng: &mut R,
) -> (f64, f64) {
    assert!(attempts >= 1);
    let cap = params.conditioning_h_cap();
    let mut row = vec![0u8; params.levels];
    let mut means = vec![0.0f64; params.n];
    let mut accepted = 0usize;
    for _ in 0..attempts {
        let mut all_ones_rows = 0u32;
        for mean in means.iter_mut() {
            sample_row_into(params, rng, &mut row);
            if row.iter().all(|&b| b == 1) {
                all_ones_rows += 1;
            }
            *mean = global_mean_of_row(params, &row);
        }
        if all_ones_rows != 1 {
            continue;
        }
        let gp = gap_profile_of_means(&means).expect("unique best under the event");
        if gp.h < cap {
            accepted += 1;
        }
    }
    let rate = accepted as f64 / attempts as f64;
    (rate, (rate * (1.0 - rate) / attempts as f64).sqrt())
}

/// Monte Carlo estimate of the mean instance complexity conditioned on the
/// unique-best-arm event: repeated sampling filtered on the event, `H` from
/// the gap profile of the derived global means. Returns `(mean, standard error)`.
pub fn estimate_conditional_h<R: Rng>(
    params: &HardParams,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64), HardError> {
    assert!(samples >= 1);
    let mut row = vec![0u8; params.levels];
    let mut means = vec![0.0f64; params.n];
    let mut count = 0usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let mut all_ones_rows = 0u32;
        for mean in means.iter_mut() {
            sample_row_into(params, rng, &mut row);
            if row.iter().all(|&b| b == 1) {
                all_ones_rows += 1;
            }
            *mean = global_mean_of_row(params, &row);
        }
        if all_ones_rows != 1 {
            continue;
        }
        let h = gap_profile_of_means(&means)
            .expect("unique best under the event")
            .h;
        count += 1;
        sum += h;
        sum_sq += h * h;
    }
    if count == 0 {
        return Err(HardError::NoAcceptedSamples);
    }
    let mean = sum / count as f64;
    let se = if count > 1 {
        let var = (sum_sq - sum * sum / count as f64) / (count as f64 - 1.0);
        (var.max(0.0) / count as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, se))
}

/// Absolute mean difference of two bit vectors and the smallest (1-based)
/// differing level `t`. The gap always lies in `eta^-t * (1 +/- 2/eta)`.
pub fn mean_gap(x_bits: &[u8], y_bits: &[u8], eta: f64) -> Result<(f64, usize), HardError> {
    assert_eq!(
        x_bits.len(),
        y_bits.len(),
        "bit vectors must have equal length"
    );
    let mut diff = 0.0;
    let mut term = 1.0;
    let mut first = None;
    for (idx, (&x, &y)) in x_bits.iter().zip(y_bits).enumerate() {
        term /= eta;
        if x != y {
            diff += (x as f64 - y as f64) * term;
            if first.is_none() {
                first = Some(idx + 1);
            }
        }
    }
    match first {
        Some(t) => Ok((diff.abs(), t)),
        None => Err(HardError::IdenticalBitVectors),
    }
}

/// The gap interval `[eta^-t (1 - 2/eta), eta^-t (1 + 2/eta)]`.
pub fn mean_gap_interval(eta: f64, t: usize) -> (f64, f64) {
    let scale = eta.powi(-(t as i32));
    (scale * (1.0 - 2.0 / eta), scale * (1.0 + 2.0 / eta))
}

/// Exhaustively checks the gap interval over all ordered bit-vector pairs at
/// the given level count; returns the number of violating pairs.
pub fn gap_interval_violations_exhaustive(eta: f64, levels: usize) -> u64 {
    use rayon::prelude::*;
    assert!(
        (1..=24).contains(&levels),
        "exhaustive check is for small level counts"
    );
    let size = 1usize << levels;
    // value[m] = sum over set bits of eta^-level, bit (l-1) holding level l.
    let mut pow = vec![0.0f64; levels + 1];
    let mut term = 1.0;
    for p in pow.iter_mut().skip(1) {
        term /= eta;
        *p = term;
    }
    let mut value = vec![0.0f64; size];
    for m in 1..size {
        let low = m.trailing_zeros() as usize;
        value[m] = value[m & (m - 1)] + pow[low + 1];
    }
    let bounds: Vec<(f64, f64)> = (0..=levels).map(|t| mean_gap_interval(eta, t)).collect();

    (0..size)
        .into_par_iter()
        .map(|x| {
            let vx = value[x];
            let mut violations = 0u64;
            for (y, &vy) in value.iter().enumerate().skip(x + 1) {
                let t = (x ^ y).trailing_zeros() as usize + 1;
                let gap = (vx - vy).abs();
                let (lo, hi) = bounds[t];
                if gap < lo || gap > hi {
                    violations += 1;
                }
            }
            // Unordered pairs suffice: the gap and first differing level are
            // symmetric in (x, y).
            2 * violations
        })
        .sum()
}

/// Same check on uniformly sampled distinct pairs; for level counts too large
/// to enumerate.
pub fn gap_interval_violations_sampled<R: Rng>(
    eta: f64,
    levels: usize,
    pairs: u64,
    rng: &mut R,
) -> u64 {
    let mut x = vec![0u8; levels];
    let mut y = vec![0u8; levels];
    let mut violations = 0;
    for _ in 0..pairs {
        for b in x.iter_mut() {
            *b = u8::from(rng.random_bool(0.5));
        }
        loop {
            for b in y.iter_mut() {
                *b = u8::from(rng.random_bool(0.5));
            }
            if y != x {
                break;
            }
        }
        let (gap, t) = mean_gap(&x, &y, eta).expect("pairs are distinct");
        let (lo, hi) = mean_gap_interval(eta, t);
        if gap < lo || gap > hi {
            violations += 1;
        }
    }
    violations
}

/// The set of possible side-local means once every relevant level up to
/// `level` is pinned to one: relevant levels `<= level` contribute their full
/// term, relevant levels `> level` stay free. Sorted ascending.
pub fn enumerate_support(params: &HardParams, level: usize, side: Side) -> Vec<f64> {
    assert!(level <= params.levels, "level out of range");
    let parity = side.parity();
    let mut base = 0.5;
    let mut free_terms = Vec::new();
    let mut term = 1.0;
    for l in 1..=params.levels {
        term /= params.eta;
        if l % 2 != parity {
            continue;
        }
        if l <= level {
            base += 2.0 * term;
        } else {
            free_terms.push(2.0 * term);
        }
    }
    assert!(free_terms.len() <= 20, "support too large to enumerate");
    let mut values = Vec::with_capacity(1 << free_terms.len());
    for mask in 0u64..(1u64 << free_terms.len()) {
        let mut v = base;
        for (j, &t) in free_terms.iter().enumerate() {
            if (mask >> j) & 1 == 1 {
                v += t;
            }
        }
        values.push(v);
    }
    values.sort_by(f64::total_cmp);
    values
}

/// Log-probability of a pull-outcome sequence under a Bernoulli mean:
/// `sum_j theta_j ln x + (1 - theta_j) ln(1 - x)`. Empty sequences give 0.
pub fn log_likelihood(theta: &[u8], x: f64) -> Result<f64, HardError> {
    assert!(theta.iter().all(|&b| b <= 1), "outcomes must be 0/1");
    let ones = theta.iter().filter(|&&b| b == 1).count() as u64;
    log_likelihood_counts(ones, theta.len() as u64, x)
}

/// [`log_likelihood`] for a sequence with `ones` successes out of `total`.
pub fn log_likelihood_counts(ones: u64, total: u64, x: f64) -> Result<f64, HardError> {
    debug_assert!(ones <= total);
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(HardError::InvalidMean { x });
    }
    if x == 0.0 {
        return if ones > 0 {
            Err(HardError::MeanAtBoundary { x })
        } else {
            Ok(0.0)
        };
    }
    if x == 1.0 {
        return if ones < total {
            Err(HardError::MeanAtBoundary { x })
        } else {
            Ok(0.0)
        };
    }
    Ok(ones as f64 * x.ln() + (total - ones) as f64 * (1.0 - x).ln())
}

/// Tests whether every likelihood ratio between support means stays within
/// `e^(+/- 4/eta)`, by exact max/min of the log-likelihood over the support.
pub struct GoodSequenceCheck {
    support: Vec<f64>,
    log_ratio_cap: f64,
}

impl GoodSequenceCheck {
    pub fn new(params: &HardParams, level: usize, side: Side) -> Self {
        GoodSequenceCheck {
            support: enumerate_support(params, level, side),
            log_ratio_cap: 4.0 / params.eta,
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    /// Membership for a sequence with `ones` successes out of `total` pulls.
    pub fn is_good_counts(&self, ones: u64, total: u64) -> bool {
        if total == 0 || self.support.len() <= 1 {
            return true;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &self.support {
            let ll = log_likelihood_counts(ones, total, x)
                .expect("support means are interior to (0, 1)");
            lo = lo.min(ll);
            hi = hi.max(ll);
        }
        hi - lo <= self.log_ratio_cap
    }
}

/// Whether a pull-outcome sequence is good w.r.t. the side's support at the
/// given level.
pub fn is_good_sequence(theta: &[u8], params: &HardParams, level: usize, side: Side) -> bool {
    assert!(theta.iter().all(|&b| b <= 1), "outcomes must be 0/1");
    let ones = theta.iter().filter(|&&b| b == 1).count() as u64;
    GoodSequenceCheck::new(params, level, side).is_good_counts(ones, theta.len() as u64)
}

/// Monte Carlo estimate of the bad-sequence probability: the true mean is
/// drawn uniformly from the support, then `q` pulls are taken from it.
/// Returns `(rate, binomial standard error)`.
pub fn estimate_bad_sequence_rate<R: Rng>(
    params: &HardParams,
    level: usize,
    side: Side,
    pulls: u64,
    trials: usize,
    rng: &mut R,
) -> (f64, f64) {
    assert!(trials >= 1);
    let check = GoodSequenceCheck::new(params, level, side);
    let support = check.support().to_vec();
    let mut bad = 0usize;
    for _ in 0..trials {
        let mean = support[rng.random_range(0..support.len())];
        let mut ones = 0u64;
        for _ in 0..pulls {
            if rng.random_bool(mean) {
                ones += 1;
            }
        }
        if !check.is_good_counts(ones, pulls) {
            bad += 1;
        }
    }
    let rate = bad as f64 / trials as f64;
    (rate, (rate * (1.0 - rate) / trials as f64).sqrt())
}
