use std::collections::BTreeSet;

use crate::cache::CacheState;
use crate::error::{Error, Result};
use crate::policies::CacheChange;
use crate::trace::FileId;

/// Number of anticipated files missing from `cache`.
pub fn compute_state(anticipated: &[FileId], cache: &CacheState) -> usize {
    anticipated.iter().filter(|f| !cache.contains(**f)).count()
}

/// The first `min(M, |ranking|)` entries of a best-first ranking.
pub fn anticipated(ranking: &[FileId], capacity: usize) -> &[FileId] {
    &ranking[..capacity.min(ranking.len())]
}

/// Smallest admissible action: with free slots the agent must at least fill
/// them from the missing anticipated files.
pub fn min_action(state: usize, cache: &CacheState) -> usize {
    state.min(cache.free())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Replacement {
    pub evict: BTreeSet<FileId>,
    pub insert: BTreeSet<FileId>,
    /// Fewer than the requested number of candidates were available.
    pub clamped: bool,
}

/// Insert the `action` best-ranked uncached files and evict as many of the
/// worst-ranked cached files as the capacity requires.
pub fn action_to_replacement(cache: &CacheState, ranking: &[FileId], action: usize) -> Result<Replacement> {
    let insert: BTreeSet<FileId> = ranking
        .iter()
        .copied()
        .filter(|f| !cache.contains(*f))
        .take(action)
        .collect();
    let clamped = insert.len() < action;
    if clamped {
        log::debug!("action {action} clamped to {} available candidates", insert.len());
    }
    let need = (cache.len() + insert.len()).saturating_sub(cache.capacity());
    let evict: BTreeSet<FileId> = ranking
        .iter()
        .rev()
        .copied()
        .filter(|f| cache.contains(*f))
        .take(need)
        .collect();
    if evict.len() < need {
        return Err(Error::Replacement(format!(
            "ranking covers {} of the {} cached files, {need} evictions needed",
            evict.len(),
            cache.len()
        )));
    }
    Ok(Replacement { evict, insert, clamped })
}

/// Apply a replacement in place and log it as slot-boundary changes.
pub(crate) fn apply(cache: &mut CacheState, rep: &Replacement) -> Vec<CacheChange> {
    for &f in &rep.evict {
        cache.remove_unchecked(f);
    }
    let mut evicted = rep.evict.iter().copied();
    let mut changes: Vec<CacheChange> = rep
        .insert
        .iter()
        .map(|&f| {
            cache.insert_unchecked(f);
            CacheChange {
                before_request: 0,
                inserted: Some(f),
                evicted: evicted.next(),
            }
        })
        .collect();
    changes.extend(evicted.map(|f| CacheChange {
        before_request: 0,
        inserted: None,
        evicted: Some(f),
    }));
    changes
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(v: &[u32]) -> Vec<FileId> {
        v.iter().map(|&i| FileId(i)).collect()
    }

    #[test]
    fn state_counts_missing() {
        let cache = CacheState::with_files(3, ids(&[0, 1, 2])).unwrap();
        assert_eq!(compute_state(&ids(&[0, 1, 2]), &cache), 0);
        assert_eq!(compute_state(&ids(&[0, 3, 4]), &cache), 2);
        assert_eq!(compute_state(&ids(&[5, 6, 7]), &cache), 3);
    }

    #[test]
    fn swap_worst_for_best() {
        // ranking best first: 4, 0, 3, 1, 2
        let cache = CacheState::with_files(3, ids(&[0, 1, 2])).unwrap();
        let ranking = ids(&[4, 0, 3, 1, 2]);
        let rep = action_to_replacement(&cache, &ranking, 1).unwrap();
        assert_eq!(rep.insert, ids(&[4]).into_iter().collect());
        assert_eq!(rep.evict, ids(&[2]).into_iter().collect());
        let rep = action_to_replacement(&cache, &ranking, 2).unwrap();
        assert_eq!(rep.insert, ids(&[3, 4]).into_iter().collect());
        assert_eq!(rep.evict, ids(&[1, 2]).into_iter().collect());
        let rep = action_to_replacement(&cache, &ranking, 0).unwrap();
        assert!(rep.insert.is_empty() && rep.evict.is_empty());
    }

    #[test]
    fn free_slots_need_no_eviction() {
        let cache = CacheState::with_files(4, ids(&[1])).unwrap();
        let rep = action_to_replacement(&cache, &ids(&[0, 2, 1, 3]), 2).unwrap();
        assert_eq!(rep.insert, ids(&[0, 2]).into_iter().collect());
        assert!(rep.evict.is_empty());
        let cache = CacheState::with_files(3, ids(&[1])).unwrap();
        let rep = action_to_replacement(&cache, &ids(&[0, 2, 1, 3]), 3).unwrap();
        assert_eq!(rep.evict, ids(&[1]).into_iter().collect());
    }

    #[test]
    fn clamps_when_short() {
        let cache = CacheState::with_files(2, ids(&[0])).unwrap();
        let rep = action_to_replacement(&cache, &ids(&[0, 1]), 2).unwrap();
        assert!(rep.clamped);
        assert_eq!(rep.insert.len(), 1);
        assert!(rep.evict.is_empty());
    }

    fn brute_best(cache: &[u32], values: &[f64], a: usize) -> f64 {
        // best predicted hits over all a-for-a swaps
        let outside: Vec<u32> = (0..values.len() as u32).filter(|f| !cache.contains(f)).collect();
        let mut best = f64::NEG_INFINITY;
        let n = cache.len();
        for out_mask in 0u32..(1 << n) {
            if out_mask.count_ones() as usize != a {
                continue;
            }
            for in_mask in 0u32..(1 << outside.len()) {
                if in_mask.count_ones() as usize != a {
                    continue;
                }
                let kept: f64 = (0..n).filter(|i| out_mask & (1 << i) == 0).map(|i| values[cache[i] as usize]).sum();
                let added: f64 = (0..outside.len()).filter(|i| in_mask & (1 << i) != 0).map(|i| values[outside[i] as usize]).sum();
                best = best.max(kept + added);
            }
        }
        best
    }

    proptest! {
        #[test]
        fn replacement_is_best_swap(
            values in prop::collection::vec(0u32..20, 4..9),
            pick in prop::collection::vec(any::<bool>(), 9),
            m in 1usize..4,
            a in 0usize..4,
        ) {
            let values: Vec<f64> = values.into_iter().map(f64::from).collect();
            let n = values.len();
            let cached: Vec<u32> = (0..n as u32).filter(|&i| pick[i as usize]).take(m).collect();
            prop_assume!(cached.len() == m && n - m >= 1);
            let a = a.min(m).min(n - m);
            let release = vec![0; n];
            let ranking = crate::policies::rank_files(&values, &release);
            let mut cache = CacheState::with_files(m, ids(&cached)).unwrap();
            let before = cache.clone();
            let rep = action_to_replacement(&cache, &ranking, a).unwrap();
            prop_assert!(!rep.clamped);
            let changes = apply(&mut cache, &rep);
            prop_assert_eq!(cache.len(), m);
            prop_assert_eq!(crate::cache::replacement_cost(&before, &cache) as usize, a);
            prop_assert_eq!(changes.iter().filter(|c| c.inserted.is_some()).count(), a);
            let got: f64 = cache.files().iter().map(|f| values[f.index()]).sum();
            prop_assert_eq!(got, brute_best(&cached, &values, a));
        }
    }
}
