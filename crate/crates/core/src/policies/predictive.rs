use super::{ranking::top_m, switch_to, CachePolicy, PolicyKind, SlotLog, SlotOutcome};
use crate::cache::{self, CacheState, RewardWeights, SlotAccounting};
use crate::error::{Error, Result};
use crate::glm::{GlmConfig, GlmModel};
use crate::trace::SlottedTrace;

/// Cache the top-`M` files by `predictions`, then account against `demands`.
pub fn most_popular_step(
    predictions: &[f64],
    demands: &[u32],
    release: &[usize],
    cache: &mut CacheState,
    slot: usize,
    weights: &RewardWeights,
) -> Result<(SlotAccounting, SlotLog)> {
    if predictions.len() != demands.len() {
        return Err(Error::Internal(format!(
            "{} predictions for {} files",
            predictions.len(),
            demands.len()
        )));
    }
    let target = top_m(predictions, release, cache.capacity());
    let before = cache.to_vec();
    let changes = switch_to(cache, &target);
    let hits = cache::hits(cache, demands);
    let requests = demands.iter().map(|&d| u64::from(d)).sum();
    let log = SlotLog {
        before,
        after: cache.to_vec(),
        changes,
    };
    Ok((weights.account(slot, hits, log.changes.iter().filter(|c| c.inserted.is_some()).count() as u64, requests), log))
}

/// Cache the actual top-`M` files of the slot.
pub fn hindsight_optimal_step(
    demands: &[u32],
    release: &[usize],
    cache: &mut CacheState,
    slot: usize,
    weights: &RewardWeights,
) -> Result<(SlotAccounting, SlotLog)> {
    let values: Vec<f64> = demands.iter().map(|&d| f64::from(d)).collect();
    most_popular_step(&values, demands, release, cache, slot, weights)
}

/// Most-popular caching driven by the grouped linear predictor.
pub struct MostPopularPolicy {
    model: GlmModel,
    cache: CacheState,
    weights: RewardWeights,
}

impl MostPopularPolicy {
    pub fn new(capacity: usize, glm: GlmConfig, weights: RewardWeights) -> Result<Self> {
        Ok(MostPopularPolicy {
            model: GlmModel::new(glm)?,
            cache: CacheState::new(capacity)?,
            weights,
        })
    }

    pub fn model(&self) -> &GlmModel {
        &self.model
    }
}

impl CachePolicy for MostPopularPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::MostPopular
    }

    fn process_slot(&mut self, trace: &SlottedTrace, t: usize) -> Result<SlotOutcome> {
        let predictions = self.model.predict_all(trace, t)?;
        let demands = trace.demands_at(t)?;
        let (accounting, log) =
            most_popular_step(&predictions, &demands, trace.release_slots(), &mut self.cache, t, &self.weights)?;
        self.model.observe(trace, t, &demands)?;
        Ok(SlotOutcome {
            accounting,
            log,
            decision: None,
        })
    }

    fn cache(&self) -> &CacheState {
        &self.cache
    }
}

/// Hindsight top-`M` oracle; an upper bound on slot-level hits.
pub struct OptimalPolicy {
    cache: CacheState,
    weights: RewardWeights,
}

impl OptimalPolicy {
    pub fn new(capacity: usize, weights: RewardWeights) -> Result<Self> {
        Ok(OptimalPolicy {
            cache: CacheState::new(capacity)?,
            weights,
        })
    }
}

impl CachePolicy for OptimalPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Optimal
    }

    fn process_slot(&mut self, trace: &SlottedTrace, t: usize) -> Result<SlotOutcome> {
        let demands = trace.demands_at(t)?;
        let (accounting, log) = hindsight_optimal_step(&demands, trace.release_slots(), &mut self.cache, t, &self.weights)?;
        Ok(SlotOutcome {
            accounting,
            log,
            decision: None,
        })
    }

    fn cache(&self) -> &CacheState {
        &self.cache
    }
}
