use rand::Rng;
use serde::{Deserialize, Serialize};

use super::qtable::TransitionSample;
use super::replacement::{action_to_replacement, anticipated, apply, compute_state, min_action};
use crate::cache::{CacheState, RewardWeights};
use crate::error::Result;
use crate::rng;
use crate::trace::{DemandHistory, FileId, SlottedTrace};

pub(crate) const ROLLOUT_DOMAIN: u64 = 0x524f_4c4c;

/// What the agent remembers about a past slot: the ranking it acted on and
/// the cache it ended the slot with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotMemory {
    pub slot: usize,
    pub ranking: Vec<FileId>,
    pub cache_after: CacheState,
}

/// Inputs of one round of imagination at slot `now`.
pub struct RolloutWindow<'a> {
    /// Cache the rollouts start from.
    pub start: &'a CacheState,
    /// Slots to replay, oldest first.
    pub steps: &'a [SlotMemory],
    /// Ranking for the slot after the last step.
    pub next_ranking: &'a [FileId],
    pub now: usize,
}

pub fn cache_hits(trace: &SlottedTrace, cache: &CacheState, slot: usize) -> u64 {
    cache.files().iter().map(|&f| u64::from(trace.demand(f, slot))).sum()
}

/// Replay the window `rollouts` times with uniformly random admissible
/// actions against the revealed demand.
///
/// Rollout `k` draws from its own stream, so the result does not depend on
/// how many rollouts run or in which order.
pub fn imagine_rollouts(
    window: &RolloutWindow<'_>,
    trace: &SlottedTrace,
    weights: &RewardWeights,
    rollouts: usize,
    seed: u64,
) -> Result<Vec<TransitionSample>> {
    let capacity = window.start.capacity();
    let mut out = Vec::with_capacity(rollouts * window.steps.len());
    for k in 0..rollouts {
        let mut rng = rng::stream(seed, ROLLOUT_DOMAIN, &[window.now as u64, k as u64]);
        let mut cache = window.start.clone();
        for (i, mem) in window.steps.iter().enumerate() {
            let state = compute_state(anticipated(&mem.ranking, capacity), &cache);
            let action = rng.random_range(min_action(state, &cache)..=state);
            let rep = action_to_replacement(&cache, &mem.ranking, action)?;
            apply(&mut cache, &rep);
            let cost = rep.insert.len() as u64;
            let reward = weights.reward(cache_hits(trace, &cache, mem.slot), cost);
            let next = window.steps.get(i + 1).map_or(window.next_ranking, |m| &m.ranking);
            out.push(TransitionSample {
                state,
                action: rep.insert.len(),
                reward,
                next_state: compute_state(anticipated(next, capacity), &cache),
                slot: mem.slot,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::rank_files;

    fn fixture() -> (SlottedTrace, Vec<SlotMemory>) {
        let series = vec![vec![5, 4, 3, 2], vec![1, 6, 1, 7], vec![0, 0, 9, 0], vec![2, 2, 2, 2]];
        let trace = SlottedTrace::from_series(1, vec![0; 4], series, 4).unwrap();
        let mems = (0..4)
            .map(|t| {
                let d: Vec<f64> = trace.demands_at(t).unwrap().into_iter().map(f64::from).collect();
                SlotMemory {
                    slot: t,
                    ranking: rank_files(&d, &[0; 4]),
                    cache_after: CacheState::new(2).unwrap(),
                }
            })
            .collect();
        (trace, mems)
    }

    #[test]
    fn samples_are_valid_and_stamped() {
        let (trace, mems) = fixture();
        let start = CacheState::new(2).unwrap();
        let w = RolloutWindow { start: &start, steps: &mems[..3], next_ranking: &mems[3].ranking, now: 2 };
        let samples = imagine_rollouts(&w, &trace, &RewardWeights::default(), 4, 9).unwrap();
        assert_eq!(samples.len(), 12);
        for (i, s) in samples.iter().enumerate() {
            assert_eq!(s.slot, i % 3);
            assert!(s.action <= s.state && s.state <= 2 && s.next_state <= 2);
        }
        // empty start: the first step must fill the cache
        assert!(samples.iter().step_by(3).all(|s| s.state == 2 && s.action == 2));
    }

    #[test]
    fn rollouts_are_independent_streams() {
        let (trace, mems) = fixture();
        let start = CacheState::with_files(2, [FileId(2), FileId(3)]).unwrap();
        let w = RolloutWindow { start: &start, steps: &mems, next_ranking: &mems[0].ranking, now: 3 };
        let w5 = imagine_rollouts(&w, &trace, &RewardWeights::default(), 5, 1).unwrap();
        let w2 = imagine_rollouts(&w, &trace, &RewardWeights::default(), 2, 1).unwrap();
        assert_eq!(&w5[..8], &w2[..]);
        assert_eq!(w5, imagine_rollouts(&w, &trace, &RewardWeights::default(), 5, 1).unwrap());
    }

    #[test]
    fn reward_matches_accounting() {
        let (trace, mems) = fixture();
        let start = CacheState::with_files(2, [FileId(0), FileId(1)]).unwrap();
        let w = RolloutWindow { start: &start, steps: &mems[1..2], next_ranking: &mems[2].ranking, now: 1 };
        for s in imagine_rollouts(&w, &trace, &RewardWeights::default(), 20, 3).unwrap() {
            // slot 1 ranking: 1, 0, 3, 2; cache {0, 1} already matches
            assert_eq!((s.state, s.action), (0, 0));
            assert_eq!(s.reward, 10.0);
            assert_eq!(s.next_state, 1);
        }
    }
}
