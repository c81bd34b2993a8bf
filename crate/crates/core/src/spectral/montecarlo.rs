use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fewest trials accepted by [`verify_subtable_gap_montecarlo`].
pub const MIN_TRIALS: usize = 10_000;

/// Trials drawn from one RNG stream; streams are merged in order, so the
/// result does not depend on the number of worker threads.
const CHUNK: usize = 4096;

/// `|(1/(N_h²+1) − 1/(N_l²+1))·σ|`, a lower bound on the expected gap
/// between the best scores of a shortlist of `N_h` and a remainder of `N_l`
/// candidates whose scores have standard deviation `σ`.
pub fn subtable_gap_lower_bound(n_high: usize, n_low: usize, sigma: f64) -> Result<f64> {
    if n_high < 1 || n_low < 1 {
        return Err(Error::Contract("both subtables need at least one entry".into()));
    }
    if !(sigma >= 0.0) {
        return Err(Error::Contract(format!("σ = {sigma} must be non-negative")));
    }
    let term = |n: usize| 1.0 / ((n as f64).powi(2) + 1.0);
    Ok(((term(n_high) - term(n_low)) * sigma).abs())
}

/// Score model used for the Monte-Carlo check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreDistribution {
    Normal { mean: f64, std: f64 },
    /// Uniform over the listed values.
    DiscreteUniform { values: Vec<f64> },
    Constant { value: f64 },
}

impl Default for ScoreDistribution {
    fn default() -> Self {
        ScoreDistribution::Normal { mean: 0.0, std: 1.0 }
    }
}

impl ScoreDistribution {
    pub fn std(&self) -> f64 {
        match self {
            ScoreDistribution::Normal { std, .. } => *std,
            ScoreDistribution::DiscreteUniform { values } => {
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
            }
            ScoreDistribution::Constant { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ScoreDistribution::Normal { mean, std } if !(mean.is_finite() && *std >= 0.0 && std.is_finite()) => {
                Err(Error::Contract("normal scores need a finite mean and non-negative std".into()))
            }
            ScoreDistribution::DiscreteUniform { values } if values.is_empty() || values.iter().any(|v| !v.is_finite()) => {
                Err(Error::Contract("discrete scores need at least one finite value".into()))
            }
            _ => Ok(()),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            ScoreDistribution::Normal { mean, std } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + std * z
            }
            ScoreDistribution::DiscreteUniform { values } => values[rng.gen_range(0..values.len())],
            ScoreDistribution::Constant { value } => *value,
        }
    }

    fn max_of<R: Rng>(&self, n: usize, rng: &mut R) -> f64 {
        (0..n).map(|_| self.sample(rng)).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub n_high: usize,
    pub n_low: usize,
    pub trials: usize,
    pub distribution: ScoreDistribution,
    /// Mean of `|max(high) − max(low)|` over trials.
    pub mean_gap: f64,
    pub std_error: f64,
    pub bound: f64,
    pub exceeds_bound: bool,
}

/// Draws `n_high + n_low` iid scores per trial and compares the mean gap
/// between the two subtables' maxima with [`subtable_gap_lower_bound`].
pub fn verify_subtable_gap_montecarlo(
    n_high: usize,
    n_low: usize,
    trials: usize,
    distribution: &ScoreDistribution,
    seed: u64,
) -> Result<MonteCarloReport> {
    if trials < MIN_TRIALS {
        return Err(Error::Contract(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    distribution.validate()?;
    let bound = subtable_gap_lower_bound(n_high, n_low, distribution.std())?;
    let chunks = trials.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ (c as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let count = CHUNK.min(trials - c * CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let gap = (distribution.max_of(n_high, &mut rng) - distribution.max_of(n_low, &mut rng)).abs();
                s += gap;
                s2 += gap * gap;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let t = trials as f64;
    let mean_gap = s / t;
    let var = (s2 / t - mean_gap * mean_gap).max(0.0) * t / (t - 1.0);
    Ok(MonteCarloReport {
        n_high,
        n_low,
        trials,
        distribution: distribution.clone(),
        mean_gap,
        std_error: (var / t).sqrt(),
        bound,
        exceeds_bound: mean_gap > bound,
    })
}
