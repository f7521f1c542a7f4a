//! Seeded generator of non-stationary request traces.
//!
//! Files arrive as a Poisson process. Each file draws a Pareto total volume and
//! a lifetime, and spreads its volume over its lifetime with a decaying weight
//! profile, in the spirit of shot-noise popularity models. Per-slot counts are
//! Poisson around the profile, optionally perturbed by mean-one log-normal
//! noise. Requests inside a slot are shuffled into an arrival order.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, Pareto, Poisson};
use serde::{Deserialize, Serialize};

use super::{FileId, SlottedTrace};
use crate::error::{Error, Result};
use crate::rng;

/// Shape of the popularity weight `w(age)` over a file's lifetime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayShape {
    /// `w(a) = 2^(-a / half_life)`.
    Exponential { half_life: f64 },
    /// `w(a) = (1 + a)^(-exponent)`.
    PowerLaw { exponent: f64 },
}

impl DecayShape {
    fn weight(self, age: usize) -> f64 {
        match self {
            DecayShape::Exponential { half_life } => (-(age as f64) / half_life).exp2(),
            DecayShape::PowerLaw { exponent } => (1.0 + age as f64).powf(-exponent),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_slots: usize,
    pub slot_duration: u64,
    /// Files released at slot 0.
    pub initial_files: usize,
    /// Mean number of new files per slot from slot 1 on.
    pub arrival_rate: f64,
    /// Pareto shape of per-file total demand.
    pub volume_shape: f64,
    /// Pareto scale (minimum) of per-file total demand.
    pub volume_scale: f64,
    pub lifetime_min: usize,
    pub lifetime_max: usize,
    pub decay: DecayShape,
    /// Standard deviation of the log-normal multiplier on per-slot means.
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_slots: 1000,
            slot_duration: 86_400,
            initial_files: 10,
            arrival_rate: 2.0,
            volume_shape: 1.3,
            volume_scale: 20.0,
            lifetime_min: 60,
            lifetime_max: 400,
            decay: DecayShape::Exponential { half_life: 40.0 },
            noise_level: 0.3,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if self.num_slots == 0 {
            return Err(Error::Config("num_slots must be positive".into()));
        }
        if self.slot_duration == 0 {
            return Err(Error::Config("slot_duration must be positive".into()));
        }
        if !(self.arrival_rate.is_finite() && self.arrival_rate >= 0.0) {
            return Err(Error::Config(format!("arrival_rate must be non-negative, got {}", self.arrival_rate)));
        }
        positive("volume_shape", self.volume_shape)?;
        positive("volume_scale", self.volume_scale)?;
        if self.lifetime_min == 0 || self.lifetime_max < self.lifetime_min {
            return Err(Error::Config(format!(
                "lifetime range [{}, {}] must satisfy 1 <= min <= max",
                self.lifetime_min, self.lifetime_max
            )));
        }
        match self.decay {
            DecayShape::Exponential { half_life } => positive("half_life", half_life)?,
            DecayShape::PowerLaw { exponent } => positive("exponent", exponent)?,
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return Err(Error::Config(format!("noise_level must be non-negative, got {}", self.noise_level)));
        }
        Ok(())
    }
}

const ARRIVALS: u64 = 1;
const FILE_SHAPE: u64 = 2;
const FILE_DEMAND: u64 = 3;
const SLOT_ORDER: u64 = 4;

fn poisson<R: Rng>(mean: f64, rng: &mut R) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map_or(0, |p| p.sample(rng).min(u32::MAX as f64) as u32)
}

/// Generate a trace; a pure function of `config`.
pub fn generate_synthetic(config: &SynthConfig) -> Result<SlottedTrace> {
    config.validate()?;
    let t_max = config.num_slots;

    let mut arrivals_rng = rng::stream(config.seed, ARRIVALS, &[]);
    let mut release = vec![0usize; config.initial_files];
    for t in 1..t_max {
        let n = poisson(config.arrival_rate, &mut arrivals_rng);
        release.extend(std::iter::repeat_n(t, n as usize));
    }

    let volume = Pareto::new(config.volume_scale, config.volume_shape)
        .map_err(|e| Error::Config(format!("volume distribution: {e}")))?;
    let noise = Normal::new(0.0, config.noise_level).map_err(|e| Error::Config(format!("noise: {e}")))?;
    let half_var = 0.5 * config.noise_level * config.noise_level;

    let mut per_slot: Vec<Vec<FileId>> = vec![Vec::new(); t_max];
    for (f, &r) in release.iter().enumerate() {
        let mut shape_rng = rng::stream(config.seed, FILE_SHAPE, &[f as u64]);
        let total: f64 = volume.sample(&mut shape_rng);
        let lifetime = shape_rng.random_range(config.lifetime_min..=config.lifetime_max);
        let weights: Vec<f64> = (0..lifetime).map(|a| config.decay.weight(a)).collect();
        let norm: f64 = weights.iter().sum();

        let mut demand_rng = rng::stream(config.seed, FILE_DEMAND, &[f as u64]);
        for (age, w) in weights.iter().enumerate() {
            let t = r + age;
            if t >= t_max {
                break;
            }
            let mut mean = total * w / norm;
            if config.noise_level > 0.0 {
                mean *= (noise.sample(&mut demand_rng) - half_var).exp();
            }
            let n = poisson(mean, &mut demand_rng);
            per_slot[t].extend(std::iter::repeat_n(FileId(f as u32), n as usize));
        }
    }

    let runs = per_slot
        .into_iter()
        .enumerate()
        .map(|(t, mut requests)| {
            requests.shuffle(&mut rng::stream(config.seed, SLOT_ORDER, &[t as u64]));
            let mut runs: Vec<(FileId, u32)> = Vec::new();
            for f in requests {
                match runs.last_mut() {
                    Some((g, n)) if *g == f => *n += 1,
                    _ => runs.push((f, 1)),
                }
            }
            runs
        })
        .collect();
    let ids = (0..release.len() as u64).collect();
    SlottedTrace::from_parts(config.slot_duration, t_max, ids, release, runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::DemandHistory;

    #[test]
    fn single_seeded_file() {
        let cfg = SynthConfig {
            num_slots: 50,
            initial_files: 1,
            arrival_rate: 0.0,
            volume_scale: 200.0,
            ..SynthConfig::default()
        };
        let tr = generate_synthetic(&cfg).unwrap();
        assert_eq!(tr.num_files(), 1);
        assert!(tr.total_requests() > 0);
        assert!((0..50).all(|t| tr.library_size_at(t) == 1));
    }

    #[test]
    fn same_seed_same_trace() {
        let cfg = SynthConfig { num_slots: 120, ..SynthConfig::default() };
        assert_eq!(generate_synthetic(&cfg).unwrap(), generate_synthetic(&cfg).unwrap());
        let other = SynthConfig { seed: 2, ..cfg.clone() };
        assert_ne!(generate_synthetic(&cfg).unwrap(), generate_synthetic(&other).unwrap());
    }

    #[test]
    fn arrival_rate_law_of_large_numbers() {
        let cfg = SynthConfig {
            num_slots: 1000,
            arrival_rate: 10.0,
            initial_files: 0,
            lifetime_min: 1,
            lifetime_max: 3,
            volume_scale: 1.0,
            ..SynthConfig::default()
        };
        let tr = generate_synthetic(&cfg).unwrap();
        let late = tr.release_slots().iter().filter(|&&r| r >= 1).count();
        let mean = late as f64 / 999.0;
        assert!((mean - 10.0).abs() <= 1.0, "mean arrivals {mean}");
    }

    #[test]
    fn invalid_parameters() {
        for bad in [
            SynthConfig { volume_shape: 0.0, ..SynthConfig::default() },
            SynthConfig { arrival_rate: -1.0, ..SynthConfig::default() },
            SynthConfig { lifetime_min: 5, lifetime_max: 4, ..SynthConfig::default() },
            SynthConfig { decay: DecayShape::PowerLaw { exponent: f64::NAN }, ..SynthConfig::default() },
            SynthConfig { noise_level: -0.1, ..SynthConfig::default() },
            SynthConfig { num_slots: 0, ..SynthConfig::default() },
        ] {
            assert!(matches!(generate_synthetic(&bad), Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn library_grows_and_no_request_precedes_release() {
        let cfg = SynthConfig { num_slots: 200, decay: DecayShape::PowerLaw { exponent: 1.2 }, ..SynthConfig::default() };
        let tr = generate_synthetic(&cfg).unwrap();
        for t in 1..200 {
            assert!(tr.library_size_at(t) >= tr.library_size_at(t - 1));
        }
        for t in 0..200 {
            for (f, _) in tr.runs_at(t) {
                assert!(tr.release_slot(*f) <= t);
            }
            let by_vec: u64 = tr.demands_at(t).unwrap().iter().map(|&d| u64::from(d)).sum();
            assert_eq!(by_vec, tr.total_requests_at(t).unwrap());
        }
    }
}
