use std::collections::{BTreeSet, HashMap};

use super::{CacheChange, CachePolicy, PolicyKind, SlotLog, SlotOutcome};
use crate::cache::{CacheState, RewardWeights, SlotAccounting};
use crate::error::Result;
use crate::trace::{FileId, SlottedTrace};

/// LFU with dynamic aging.
///
/// A cached file's key is the cache age `L` at its insertion plus one per
/// request since. Misses on a full cache evict the minimum key (least
/// recently requested on ties) and raise `L` to the evicted key.
#[derive(Clone, Debug, Default)]
pub struct LfudaState {
    clock: u64,
    age: u64,
    entry: HashMap<FileId, (u64, u64)>,
    order: BTreeSet<(u64, u64, FileId)>,
}

impl LfudaState {
    pub fn cache_age(&self) -> u64 {
        self.age
    }

    pub fn key(&self, f: FileId) -> Option<u64> {
        self.entry.get(&f).map(|e| e.0)
    }

    fn set(&mut self, f: FileId, key: u64) {
        if let Some((k, last)) = self.entry.insert(f, (key, self.clock)) {
            self.order.remove(&(k, last, f));
        }
        self.order.insert((key, self.clock, f));
        self.clock += 1;
    }

    fn evict(&mut self) -> Option<FileId> {
        let (key, _, f) = self.order.pop_first()?;
        self.entry.remove(&f);
        self.age = key;
        Some(f)
    }
}

pub fn lfuda_process_slot(
    state: &mut LfudaState,
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
        if let Some(k) = state.key(f) {
            hits += 1;
            state.set(f, k + 1);
            continue;
        }
        let evicted = if cache.is_full() {
            let victim = state.evict().expect("full cache has a keyed entry");
            cache.remove_unchecked(victim);
            Some(victim)
        } else {
            None
        };
        cache.insert_unchecked(f);
        state.set(f, state.age + 1);
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

pub struct LfudaPolicy {
    state: LfudaState,
    cache: CacheState,
    weights: RewardWeights,
}

impl LfudaPolicy {
    pub fn new(capacity: usize, weights: RewardWeights) -> Result<Self> {
        Ok(LfudaPolicy {
            state: LfudaState::default(),
            cache: CacheState::new(capacity)?,
            weights,
        })
    }

    pub fn state(&self) -> &LfudaState {
        &self.state
    }
}

impl CachePolicy for LfudaPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Lfuda
    }

    fn process_slot(&mut self, trace: &SlottedTrace, t: usize) -> Result<SlotOutcome> {
        let (accounting, log) = lfuda_process_slot(&mut self.state, &mut self.cache, trace.requests_at(t), t, &self.weights);
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
