use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::LoadError;

/// Knobs for the split-key sampler.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    /// Chance that an examined key is taken into the sample.
    pub select_probability: f64,
    /// Fraction of the key population to collect before sampling stops.
    pub sample_quota: f64,
    /// Fraction of the key population eligible for examination at all.
    pub max_candidate_fraction: f64,
    /// The same seed over the same keys always yields the same split keys.
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            select_probability: 0.10,
            sample_quota: 0.10,
            max_candidate_fraction: 0.50,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    fn validate(&self) -> Result<(), LoadError> {
        let ok = |f: f64| f > 0.0 && f <= 1.0;
        if ok(self.select_probability) && ok(self.sample_quota) && ok(self.max_candidate_fraction) {
            Ok(())
        } else {
            Err(LoadError::BadSamplerConfig)
        }
    }
}

fn frac_count(n: usize, frac: f64) -> usize {
    ((n as f64 * frac).ceil() as usize).clamp(1, n)
}

/// Pick `regions - 1` region boundary keys from a sorted list of unique row
/// keys.
///
/// A capped random subset of the keys is examined, each examined key joins
/// the sample with `select_probability` until the quota is met, and the
/// boundaries are read off at the sample's even quantile positions, so every
/// region receives a near-equal share of the sampled keys. Both the cap and
/// the quota are floored at the region count so there are always enough
/// sampled keys to cut distinct boundaries.
pub fn sample_split_keys(
    keys: &[String],
    regions: usize,
    config: &SamplerConfig,
) -> Result<Vec<String>, LoadError> {
    config.validate()?;
    if regions == 0 || regions > 16 || !regions.is_power_of_two() {
        return Err(LoadError::BadRegionCount(regions));
    }
    if keys.len() < regions {
        return Err(LoadError::TooFewKeys {
            have: keys.len(),
            need: regions,
        });
    }
    debug_assert!(keys.windows(2).all(|w| w[0] < w[1]), "keys must be sorted and unique");
    if regions == 1 {
        return Ok(Vec::new());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pool_size = frac_count(keys.len(), config.max_candidate_fraction).max(regions);
    let mut pool = rand::seq::index::sample(&mut rng, keys.len(), pool_size).into_vec();
    pool.sort_unstable();

    let quota = frac_count(keys.len(), config.sample_quota).clamp(regions, pool.len());
    let mut chosen = vec![false; pool.len()];
    let mut count = 0;
    let mut passes = 0;
    while count < quota && passes < 10_000 {
        for flag in chosen.iter_mut() {
            if count == quota {
                break;
            }
            if !*flag && rng.gen::<f64>() < config.select_probability {
                *flag = true;
                count += 1;
            }
        }
        passes += 1;
    }
    // A vanishingly small probability can stall the draw; fill in order.
    for flag in chosen.iter_mut() {
        if count == quota {
            break;
        }
        if !*flag {
            *flag = true;
            count += 1;
        }
    }

    let sample: Vec<&String> = pool
        .iter()
        .zip(&chosen)
        .filter(|(_, picked)| **picked)
        .map(|(i, _)| &keys[*i])
        .collect();

    let splits: Vec<String> = (1..regions)
        .map(|i| sample[i * sample.len() / regions].clone())
        .collect();
    debug_assert!(splits.windows(2).all(|w| w[0] < w[1]));
    Ok(splits)
}
