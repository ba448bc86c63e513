//! Simulation library for best arm identification (BAI) in the collaborative
//! learning model with non-IID, weighted local reward distributions.
//!
//! The library has four layers:
//!
//! * [`bandit`]: instance types (local/global means, weights), gap profiles and
//!   instance complexity, reward sampling, and a Chernoff-Hoeffding tail bound.
//! * [`hard`]: the interleaved hard-instance generator (bit-matrix arms whose
//!   means decompose across two agents), its support sets, likelihood-ratio
//!   "good sequence" checks, conditioning events, and Monte Carlo validators.
//! * [`algo`]: the round-limited successive-elimination algorithm, its pull
//!   schedule, a centralized baseline, and the two-arm weighted sign test.
//! * [`harness`]: seeded, parallel Monte Carlo experiment runner with Wilson
//!   intervals, time-to-target search, speedup accounting, and CSV output.
//!
//! All randomness flows from explicit 64-bit seeds through counter-derived
//! [`rng`] streams, so every experiment is reproducible bit-for-bit regardless
//! of worker count.

pub mod algo;
pub mod bandit;
pub mod hard;
pub mod harness;
pub mod rng;
pub mod validate;

pub use algo::{compute_schedule, run_centralized_baseline, run_col_learn, run_two_arm_weighted};
pub use algo::{AlgoResult, RoundSchedule};
pub use bandit::{
    chernoff_tail, gap_profile, BanditError, GapProfile, Instance, RewardFamily, WeightVector,
};
pub use hard::{BitMatrix, HardError, HardInstance, HardParams, Side};
pub use harness::{
    wilson_interval, Algorithm, ExperimentConfig, HarnessError, InstanceSource, SummaryStats,
    TrialOutcome,
};
pub use rng::{derive_seed, trial_stream};
