//! Round-limited collaborative best arm identification.
//!
//! [`run_col_learn`] is a non-adaptive successive-elimination algorithm: the
//! horizon is split into `R` rounds with precomputed cumulative pull marks
//! `T_r` and survivor counts `n_r`; in round `r` every agent pulls every
//! surviving arm `(T_{r+1} - T_r)` times, the agents combine cumulative
//! per-agent empirical means into weighted global estimates, and the top
//! `n_{r+1}` arms survive. After `R` rounds a single arm remains.
//!
//! Schedules are bit-exact across platforms: the floor of every fractional
//! power is computed with exact big-integer comparisons seeded by a
//! floating-point candidate, so `T_r = floor(n^(r/R) T / (n^(1+1/R) R))` and
//! `n_r = floor(n / n^(r/R))` never suffer from `exp(ln ...)` boundary error.

use crate::bandit::{Instance, RewardFamily, WeightVector};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;

/// Pull marks and survivor counts of one elimination run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundSchedule {
    /// Round count `R`.
    pub rounds: u32,
    /// Per-agent time horizon `T`.
    pub horizon: u64,
    /// Cumulative pull marks `T_0 = 0, T_1, ..., T_R`, non-decreasing.
    pub pull_marks: Vec<u64>,
    /// Survivor counts `n_0 = n, ..., n_R = 1`, non-increasing.
    pub survivors: Vec<u64>,
}

impl RoundSchedule {
    /// Total per-agent pulls the schedule commits to:
    /// `sum_r n_r (T_{r+1} - T_r)`, always at most the horizon.
    pub fn budget(&self) -> u64 {
        (0..self.rounds as usize)
            .map(|r| self.survivors[r] * (self.pull_marks[r + 1] - self.pull_marks[r]))
            .sum()
    }
}

/// Largest `m >= 0` with `m^r * den <= num`, i.e. `floor((num/den)^(1/r))`
/// computed exactly. A floating-point candidate brackets the answer; binary
/// search on the exact integer predicate settles the boundary.
fn floor_root_ratio(num: &BigUint, den: &BigUint, r: u32) -> u64 {
    debug_assert!(r >= 1);
    let fits = |m: u64| BigUint::from(m).pow(r) * den <= *num;
    let seed = {
        let n = num.to_f64().unwrap_or(f64::MAX);
        let d = den.to_f64().unwrap_or(f64::MAX);
        if n <= 0.0 {
            0.0
        } else {
            (n / d).powf(1.0 / r as f64)
        }
    };
    let mut lo = 0u64; // fits(0) trivially
    let mut hi = (seed.floor().max(1.0).min(u64::MAX as f64 / 2.0)) as u64;
    while fits(hi) {
        if hi == u64::MAX {
            return u64::MAX;
        }
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Computes the elimination schedule for `n` arms, `R` rounds, horizon `T`.
pub fn compute_schedule(n: usize, rounds: u32, horizon: u64) -> RoundSchedule {
    assert!(n >= 1, "need at least one arm");
    assert!(rounds >= 1, "need at least one round");
    let big_n = BigUint::from(n);
    let big_r = BigUint::from(rounds);

    // T_r = floor(T n^((r-R-1)/R) / R): largest m with (mR)^R n^(R+1-r) <= T^R.
    let t_pow = BigUint::from(horizon).pow(rounds);
    let mut pull_marks = Vec::with_capacity(rounds as usize + 1);
    pull_marks.push(0u64);
    for r in 1..=rounds {
        let den = big_r.pow(rounds) * big_n.pow(rounds + 1 - r);
        pull_marks.push(floor_root_ratio(&t_pow, &den, rounds));
    }

    // n_r = floor(n^((R-r)/R)): largest m with m^R <= n^(R-r).
    let one = BigUint::from(1u32);
    let mut survivors = Vec::with_capacity(rounds as usize + 1);
    for r in 0..rounds {
        survivors.push(floor_root_ratio(&big_n.pow(rounds - r), &one, rounds));
    }
    survivors.push(1);

    let schedule = RoundSchedule {
        rounds,
        horizon,
        pull_marks,
        survivors,
    };
    debug_assert!(schedule.budget() <= horizon);
    debug_assert!(schedule.pull_marks.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(schedule.survivors.windows(2).all(|w| w[0] >= w[1]));
    schedule
}

/// Outcome of one algorithm run on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoResult {
    pub chosen_arm: usize,
    /// Pulls actually made per agent; at most the horizon.
    pub pulls_per_agent: u64,
    pub rounds_used: u32,
    /// Empirical means exchanged: each round every agent broadcasts one real
    /// per surviving arm, `sum_r K n_r` in total.
    pub reals_communicated: u64,
    /// Whether the chosen arm attains the maximum true global mean.
    pub success: bool,
    /// Set when a selection had to happen with zero cumulative pulls
    /// (a horizon too small for the first round); selection then degenerates
    /// to lowest-index survivors.
    pub degenerate_schedule: bool,
}

/// Runs the weighted non-IID elimination algorithm.
///
/// Empirical means are cumulative over all `T_{r+1}` pulls of an arm, ties in
/// the top-`n_{r+1}` selection break toward the lowest arm index, and a round
/// with `T_{r+1} = T_r` makes no new pulls but still selects on the means
/// accumulated so far.
pub fn run_col_learn<R: Rng>(
    instance: &Instance,
    rounds: u32,
    horizon: u64,
    rng: &mut R,
) -> AlgoResult {
    let n = instance.arms();
    let k = instance.agents();
    let weights = instance.weights().as_slice().to_vec();
    let schedule = compute_schedule(n, rounds, horizon);

    let mut survivors: Vec<usize> = (0..n).collect();
    let mut reward_sums = vec![0.0f64; n * k];
    let mut pulls_per_agent = 0u64;
    let mut reals_communicated = 0u64;
    let mut degenerate_schedule = false;

    for r in 0..rounds as usize {
        let new_pulls = schedule.pull_marks[r + 1] - schedule.pull_marks[r];
        for &arm in &survivors {
            for agent in 0..k {
                let mut acc = 0.0;
                for _ in 0..new_pulls {
                    acc += instance
                        .sample_pull(arm, agent, rng)
                        .expect("survivor indices are valid");
                }
                reward_sums[arm * k + agent] += acc;
            }
        }
        pulls_per_agent += new_pulls * survivors.len() as u64;
        reals_communicated += k as u64 * survivors.len() as u64;

        let total_pulls = schedule.pull_marks[r + 1];
        if total_pulls == 0 {
            degenerate_schedule = true;
        }
        let mut ranked: Vec<(f64, usize)> = survivors
            .iter()
            .map(|&arm| {
                let mean = if total_pulls == 0 {
                    0.0
                } else {
                    weights
                        .iter()
                        .enumerate()
                        .map(|(agent, &alpha)| {
                            alpha * (reward_sums[arm * k + agent] / total_pulls as f64)
                        })
                        .sum()
                };
                (mean, arm)
            })
            .collect();
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        ranked.truncate(schedule.survivors[r + 1] as usize);
        survivors = ranked.into_iter().map(|(_, arm)| arm).collect();
        survivors.sort_unstable();
    }

    debug_assert_eq!(survivors.len(), 1);
    debug_assert!(pulls_per_agent <= horizon);
    let chosen_arm = survivors[0];
    let global_means = instance.global_means();
    let best = global_means
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    AlgoResult {
        chosen_arm,
        pulls_per_agent,
        rounds_used: rounds,
        reals_communicated,
        success: global_means[chosen_arm] == best,
        degenerate_schedule,
    }
}

/// Single-agent reference: the same elimination with `K = 1`, weight 1, and
/// `R = ceil(log2 n)` rounds. Supplies the centralized time-to-target against
/// which collaborative speedup is measured.
pub fn run_centralized_baseline<R: Rng>(
    global_means: &[f64],
    reward_family: RewardFamily,
    horizon: u64,
    rng: &mut R,
) -> AlgoResult {
    let n = global_means.len();
    let rounds = (n.next_power_of_two().trailing_zeros()).max(1);
    let instance = Instance::single_agent(global_means.to_vec(), reward_family)
        .expect("means validated by caller");
    run_col_learn(&instance, rounds, horizon, rng)
}

/// The two-arm weighted sign test: arm 1's mean 1/2 is known, arm 2 is
/// `Ber(1/2 + delta)` at every agent, and every agent pulls arm 2 at each of
/// the `T` time steps. Succeeds iff the weighted empirical mean lands on the
/// same side of 1/2 as `delta`; an exact tie counts as failure.
pub fn run_two_arm_weighted<R: Rng>(
    delta: f64,
    weights: &WeightVector,
    horizon: u64,
    reward_family: RewardFamily,
    rng: &mut R,
) -> bool {
    assert!(
        delta != 0.0 && delta.abs() < 0.25,
        "delta must have magnitude in (0, 0.25)"
    );
    let instance = Instance::two_arm(delta, weights.clone(), reward_family)
        .expect("two-arm means are valid for |delta| < 0.25");
    let alphas = weights.as_slice();
    let mut weighted_sum = 0.0;
    for _ in 0..horizon {
        for (agent, &alpha) in alphas.iter().enumerate() {
            let x = instance
                .sample_pull(1, agent, rng)
                .expect("two-arm indices are valid");
            weighted_sum += alpha * x;
        }
    }
    let centered = weighted_sum - 0.5 * horizon as f64;
    if centered == 0.0 {
        return false;
    }
    (centered > 0.0) == (delta > 0.0)
}
