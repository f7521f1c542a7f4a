use std::collections::{BTreeMap, HashMap};

use super::{CacheChange, CachePolicy, PolicyKind, SlotLog, SlotOutcome};
use crate::cache::{CacheState, RewardWeights, SlotAccounting};
use crate::error::Result;
use crate::trace::{FileId, SlottedTrace};

/// Recency order of the cached files.
#[derive(Clone, Debug, Default)]
pub struct LruState {
    clock: u64,
    stamp_of: HashMap<FileId, u64>,
    by_stamp: BTreeMap<u64, FileId>,
}

impl LruState {
    /// Cached files, most recently used first.
    pub fn recency(&self) -> Vec<FileId> {
        self.by_stamp.values().rev().copied().collect()
    }

    fn touch(&mut self, f: FileId) {
        if let Some(old) = self.stamp_of.insert(f, self.clock) {
            self.by_stamp.remove(&old);
        }
        self.by_stamp.insert(self.clock, f);
        self.clock += 1;
    }

    fn pop_least_recent(&mut self) -> Option<FileId> {
        let (_, f) = self.by_stamp.pop_first()?;
        self.stamp_of.remove(&f);
        Some(f)
    }
}

/// Serve an ordered slot of requests with LRU replacement.
///
/// Every miss inserts the requested file, evicting the least recently used
/// one when full; each insertion costs one.
pub fn lru_process_slot(
    state: &mut LruState,
    cache: &mut CacheState,
    requests: impl IntoIterator<Item = FileId>,
    slot: usize,
    weights: &RewardWeights,
) -> (SlotAccounting, SlotLog) {
    let before = cache.to_vec();
    let mut changes = Vec::new();
    let (mut hits, mut cost, mut n) = (0u64, 0u64, 0u64);
    for (i, f) in requests.into_iter().enumerate() {
        n += 1;
        if cache.contains(f) {
            hits += 1;
            state.touch(f);
            continue;
        }
        let evicted = if cache.is_full() {
            let victim = state.pop_least_recent().expect("full cache has a recency entry");
            cache.remove_unchecked(victim);
            Some(victim)
        } else {
            None
        };
        cache.insert_unchecked(f);
        state.touch(f);
        cost += 1;
        changes.push(CacheChange {
            before_request: i + 1,
            inserted: Some(f),
            evicted,
        });
    }
    let log = SlotLog {
        before,
        after: cache.to_vec(),
        changes,
    };
    (weights.account(slot, hits, cost, n), log)
}

pub struct LruPolicy {
    state: LruState,
    cache: CacheState,
    weights: RewardWeights,
}

impl LruPolicy {
    pub fn new(capacity: usize, weights: RewardWeights) -> Result<Self> {
        Ok(LruPolicy {
            state: LruState::default(),
            cache: CacheState::new(capacity)?,
            weights,
        })
    }

    pub fn state(&self) -> &LruState {
        &self.state
    }
}

impl CachePolicy for LruPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Lru
    }

    fn process_slot(&mut self, trace: &SlottedTrace, t: usize) -> Result<SlotOutcome> {
        let (accounting, log) = lru_process_slot(&mut self.state, &mut self.cache, trace.requests_at(t), t, &self.weights);
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

#[cfg(test)]
mod tests {
    use super::*;

    const A: FileId = FileId(0);
    const B: FileId = FileId(1);
    const C: FileId = FileId(2);

    fn run(m: usize, reqs: &[FileId]) -> (SlotAccounting, CacheState, LruState) {
        let mut s = LruState::default();
        let mut c = CacheState::new(m).unwrap();
        let (acc, _) = lru_process_slot(&mut s, &mut c, reqs.iter().copied(), 0, &RewardWeights::default());
        (acc, c, s)
    }

    #[test]
    fn capacity_one_thrashes() {
        let (acc, c, _) = run(1, &[A, B, A]);
        assert_eq!((acc.hits, acc.cost), (0, 3));
        assert_eq!(c.to_vec(), vec![A]);
    }

    #[test]
    fn capacity_two_hits_second_a() {
        let (acc, _, s) = run(2, &[A, B, A]);
        assert_eq!((acc.hits, acc.cost), (1, 2));
        assert_eq!(s.recency(), vec![A, B]);
    }

    #[test]
    fn repeated_sole_file() {
        let mut s = LruState::default();
        let mut c = CacheState::new(3).unwrap();
        lru_process_slot(&mut s, &mut c, [A], 0, &RewardWeights::default());
        let (acc, _) = lru_process_slot(&mut s, &mut c, [A; 7], 1, &RewardWeights::default());
        assert_eq!((acc.hits, acc.cost), (7, 0));
    }

    #[test]
    fn evicts_least_recent() {
        let (_, c, s) = run(2, &[A, B, A, C]);
        assert_eq!(c.to_vec(), vec![A, C]);
        assert_eq!(s.recency(), vec![C, A]);
    }
}
