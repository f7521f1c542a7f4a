//! Cache state and per-slot accounting of hits, replacement cost and utility.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::FileId;

/// Set of cached files under a capacity of `M` equally sized files.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheState {
    cached: BTreeSet<FileId>,
    capacity: usize,
}

impl CacheState {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("cache capacity must be at least 1".into()));
        }
        Ok(CacheState {
            cached: BTreeSet::new(),
            capacity,
        })
    }

    pub fn with_files(capacity: usize, files: impl IntoIterator<Item = FileId>) -> Result<Self> {
        let mut c = Self::new(capacity)?;
        c.cached.extend(files);
        if c.cached.len() > capacity {
            return Err(Error::Replacement(format!(
                "{} files exceed capacity {capacity}",
                c.cached.len()
            )));
        }
        Ok(c)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.cached.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cached.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.cached.len() >= self.capacity
    }

    pub fn free(&self) -> usize {
        self.capacity - self.cached.len()
    }

    #[inline]
    pub fn contains(&self, f: FileId) -> bool {
        self.cached.contains(&f)
    }

    pub fn files(&self) -> &BTreeSet<FileId> {
        &self.cached
    }

    pub fn to_vec(&self) -> Vec<FileId> {
        self.cached.iter().copied().collect()
    }

    pub(crate) fn insert_unchecked(&mut self, f: FileId) -> bool {
        self.cached.insert(f)
    }

    pub(crate) fn remove_unchecked(&mut self, f: FileId) -> bool {
        self.cached.remove(&f)
    }
}

/// Hits, replacement cost and utility of one slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotAccounting {
    pub slot: usize,
    pub hits: u64,
    pub cost: u64,
    pub reward: f64,
    /// Total requests of the slot, the hit-ratio denominator.
    pub requests: u64,
}

/// Weights of hits and replacement cost in the slot utility.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub hit: f64,
    pub cost: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { hit: 1.0, cost: 1.0 }
    }
}

impl RewardWeights {
    /// `r = H − λC`.
    pub fn with_lambda(lambda: f64) -> Self {
        RewardWeights { hit: 1.0, cost: lambda }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hit weight", self.hit), ("cost weight", self.cost)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn reward(&self, hits: u64, cost: u64) -> f64 {
        self.hit * hits as f64 - self.cost * cost as f64
    }

    pub fn account(&self, slot: usize, hits: u64, cost: u64, requests: u64) -> SlotAccounting {
        SlotAccounting {
            slot,
            hits,
            cost,
            reward: self.reward(hits, cost),
            requests,
        }
    }
}

/// `H_t = Σ_{f cached} d_{t,f}` over a demand vector indexed by file id.
pub fn hits(cache: &CacheState, demands: &[u32]) -> u64 {
    cache
        .files()
        .iter()
        .filter_map(|f| demands.get(f.index()))
        .map(|&d| u64::from(d))
        .sum()
}

/// Number of files cached in `next` but not in `prev`.
pub fn replacement_cost(prev: &CacheState, next: &CacheState) -> u64 {
    next.files().difference(prev.files()).count() as u64
}

/// `H − λC`.
pub fn utility(hits: u64, cost: u64, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be non-negative, got {lambda}")));
    }
    Ok(hits as f64 - lambda * cost as f64)
}

/// `(cached \ evict) ∪ insert`, validating every precondition.
pub fn apply_replacement(cache: &CacheState, evict: &BTreeSet<FileId>, insert: &BTreeSet<FileId>) -> Result<CacheState> {
    if let Some(f) = evict.iter().find(|f| !cache.contains(**f)) {
        return Err(Error::Replacement(format!("evicting file {f} which is not cached")));
    }
    if let Some(f) = insert.iter().find(|f| cache.contains(**f)) {
        return Err(Error::Replacement(format!("inserting file {f} which is already cached")));
    }
    let size = cache.len() - evict.len() + insert.len();
    if size > cache.capacity() {
        let culprit = insert.iter().next_back().copied().unwrap_or(FileId(0));
        return Err(Error::Replacement(format!(
            "inserting file {culprit} would hold {size} files over capacity {}",
            cache.capacity()
        )));
    }
    let mut next = cache.clone();
    for f in evict {
        next.cached.remove(f);
    }
    next.cached.extend(insert.iter().copied());
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(ids: &[u32]) -> BTreeSet<FileId> {
        ids.iter().map(|&i| FileId(i)).collect()
    }

    fn cache(m: usize, ids: &[u32]) -> CacheState {
        CacheState::with_files(m, set(ids)).unwrap()
    }

    #[test]
    fn hit_count() {
        // d over files 0..=3: file1 = 4, file3 = 9
        let d = [0, 4, 0, 9];
        assert_eq!(hits(&cache(2, &[1, 2]), &d), 4);
        assert_eq!(hits(&cache(2, &[]), &d), 0);
        assert_eq!(hits(&cache(4, &[0, 1, 2, 3]), &d), 13);
    }

    #[test]
    fn cost_by_set_difference() {
        assert_eq!(replacement_cost(&cache(2, &[1, 2]), &cache(2, &[2, 3])), 1);
        assert_eq!(replacement_cost(&cache(2, &[1, 2]), &cache(2, &[1, 2])), 0);
        assert_eq!(replacement_cost(&cache(3, &[]), &cache(3, &[4, 5, 6])), 3);
    }

    #[test]
    fn utility_values() {
        assert_eq!(utility(10, 2, 1.0).unwrap(), 8.0);
        assert_eq!(utility(10, 7, 0.0).unwrap(), 10.0);
        assert_eq!(utility(3, 4, 2.0).unwrap(), -5.0);
        assert!(matches!(utility(1, 1, -0.5), Err(Error::Config(_))));
    }

    #[test]
    fn replacement_application() {
        let c = cache(3, &[1, 2, 3]);
        let same = apply_replacement(&c, &set(&[]), &set(&[])).unwrap();
        assert_eq!(same, c);
        assert_eq!(replacement_cost(&c, &same), 0);
        let next = apply_replacement(&c, &set(&[3]), &set(&[9])).unwrap();
        assert_eq!(next.to_vec(), vec![FileId(1), FileId(2), FileId(9)]);
    }

    #[test]
    fn replacement_errors_name_the_file() {
        let c = cache(3, &[1, 2, 3]);
        let e = apply_replacement(&c, &set(&[7]), &set(&[])).unwrap_err().to_string();
        assert!(e.contains("file 7"), "{e}");
        let e = apply_replacement(&c, &set(&[]), &set(&[2])).unwrap_err().to_string();
        assert!(e.contains("file 2"), "{e}");
        let e = apply_replacement(&c, &set(&[]), &set(&[8])).unwrap_err().to_string();
        assert!(e.contains("file 8"), "{e}");
    }

    #[test]
    fn zero_capacity_rejected() {
        assert!(CacheState::new(0).is_err());
    }

    proptest! {
        #[test]
        fn random_replacement_respects_capacity(
            m in 1usize..8,
            cached in prop::collection::btree_set(0u32..20, 0..8),
            evict_mask in prop::collection::vec(any::<bool>(), 8),
            candidates in prop::collection::btree_set(0u32..20, 0..8),
        ) {
            let cached: BTreeSet<FileId> = cached.into_iter().take(m).map(FileId).collect();
            let c = CacheState::with_files(m, cached.iter().copied()).unwrap();
            let evict: BTreeSet<FileId> = cached.iter().zip(&evict_mask).filter(|(_, e)| **e).map(|(f, _)| *f).collect();
            let room = m - c.len() + evict.len();
            let insert: BTreeSet<FileId> = candidates.into_iter().map(FileId).filter(|f| !c.contains(*f)).take(room).collect();
            let next = apply_replacement(&c, &evict, &insert).unwrap();
            prop_assert!(next.len() <= m);
            prop_assert_eq!(replacement_cost(&c, &next), insert.len() as u64);
            // set-difference identity
            let fwd = replacement_cost(&c, &next) as i64;
            let back = replacement_cost(&next, &c) as i64;
            prop_assert_eq!(fwd - back, next.len() as i64 - c.len() as i64);
        }
    }
}
