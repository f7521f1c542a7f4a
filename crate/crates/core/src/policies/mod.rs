//! Cache replacement policies.
//!
//! Request-level policies (LRU, LFUDA) react to every request inside a slot.
//! Slot-level policies (most popular, hindsight optimal and the Q-learning
//! agents in [`crate::rlma`]) decide once at the slot boundary, before the
//! slot's requests are revealed, and serve the whole slot from that cache.
//!
//! Every policy reports a [`SlotOutcome`]: the accounting plus a log of the
//! cache before and after the slot and of each change with the request
//! position where it happened, which lets the harness re-derive the
//! accounting independently.

mod lfuda;
mod lru;
mod predictive;
mod ranking;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cache::{CacheState, SlotAccounting};
use crate::error::{Error, Result};
use crate::trace::{FileId, SlottedTrace};

pub use lfuda::{lfuda_process_slot, LfudaPolicy, LfudaState};
pub use lru::{lru_process_slot, LruPolicy, LruState};
pub use predictive::{hindsight_optimal_step, most_popular_step, MostPopularPolicy, OptimalPolicy};
pub use ranking::{rank_files, top_m};

/// One insertion and/or eviction, applied just before the request at
/// position `before_request` of the slot is served.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheChange {
    pub before_request: usize,
    pub inserted: Option<FileId>,
    pub evicted: Option<FileId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotLog {
    pub before: Vec<FileId>,
    pub after: Vec<FileId>,
    pub changes: Vec<CacheChange>,
}

/// State and action of a slot-level learning policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub state: usize,
    pub action: usize,
    /// The action was reduced because too few candidates existed.
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotOutcome {
    pub accounting: SlotAccounting,
    pub log: SlotLog,
    pub decision: Option<Decision>,
}

pub trait CachePolicy: Send {
    fn kind(&self) -> PolicyKind;

    /// Serve slot `t`; slots must be fed in increasing order from 0.
    fn process_slot(&mut self, trace: &SlottedTrace, t: usize) -> Result<SlotOutcome>;

    fn cache(&self) -> &CacheState;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Lru,
    Lfuda,
    MostPopular,
    Optimal,
    OriginQl,
    Rlma,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Lru,
        PolicyKind::Lfuda,
        PolicyKind::MostPopular,
        PolicyKind::Optimal,
        PolicyKind::OriginQl,
        PolicyKind::Rlma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Lru => "lru",
            PolicyKind::Lfuda => "lfuda",
            PolicyKind::MostPopular => "most_popular",
            PolicyKind::Optimal => "optimal",
            PolicyKind::OriginQl => "origin_ql",
            PolicyKind::Rlma => "rlma",
        }
    }

    /// Whether the policy changes its cache only at slot boundaries.
    pub fn is_slot_level(self) -> bool {
        !matches!(self, PolicyKind::Lru | PolicyKind::Lfuda)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PolicyKind::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!("unknown policy {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Move `cache` to `target` at the slot boundary and log the swaps.
pub(crate) fn switch_to(cache: &mut CacheState, target: &BTreeSet<FileId>) -> Vec<CacheChange> {
    let evict: Vec<FileId> = cache.files().difference(target).copied().collect();
    let insert: Vec<FileId> = target.difference(cache.files()).copied().collect();
    for &f in &evict {
        cache.remove_unchecked(f);
    }
    let mut changes = Vec::with_capacity(insert.len().max(evict.len()));
    for (i, &f) in insert.iter().enumerate() {
        cache.insert_unchecked(f);
        changes.push(CacheChange {
            before_request: 0,
            inserted: Some(f),
            evicted: evict.get(i).copied(),
        });
    }
    changes.extend(evict.iter().skip(insert.len()).map(|&f| CacheChange {
        before_request: 0,
        inserted: None,
        evicted: Some(f),
    }));
    changes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        assert!(matches!("fifo".parse::<PolicyKind>(), Err(Error::Config(_))));
    }
}
