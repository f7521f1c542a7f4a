use std::collections::BTreeSet;

use super::RunResult;
use crate::cache::{RewardWeights, SlotAccounting};
use crate::error::{Error, Result};
use crate::policies::SlotLog;
use crate::trace::{FileId, SlottedTrace};

fn mismatch(slot: usize, what: String) -> Error {
    Error::Internal(format!("audit slot {slot}: {what}"))
}

/// Re-derive one slot's accounting from its cache log and the ordered
/// requests, and compare with what the policy reported.
pub fn audit_slot(
    trace: &SlottedTrace,
    slot: usize,
    log: &SlotLog,
    reported: &SlotAccounting,
    weights: &RewardWeights,
    capacity: usize,
    slot_level: bool,
) -> Result<()> {
    let mut cache: BTreeSet<FileId> = log.before.iter().copied().collect();
    if cache.len() > capacity {
        return Err(mismatch(slot, format!("starts with {} files over capacity {capacity}", cache.len())));
    }
    let mut pending = log.changes.iter().peekable();
    let (mut hits, mut inserts, mut requests) = (0u64, 0u64, 0u64);
    let mut apply = |pos: usize, cache: &mut BTreeSet<FileId>| -> Result<()> {
        while let Some(c) = pending.next_if(|c| c.before_request <= pos) {
            if c.before_request < pos {
                return Err(mismatch(slot, format!("change logged out of order at position {}", c.before_request)));
            }
            if let Some(f) = c.evicted {
                if !cache.remove(&f) {
                    return Err(mismatch(slot, format!("evicts uncached file {f}")));
                }
            }
            if let Some(f) = c.inserted {
                if !cache.insert(f) {
                    return Err(mismatch(slot, format!("inserts cached file {f}")));
                }
                inserts += 1;
            }
            if cache.len() > capacity {
                return Err(mismatch(slot, format!("{} files exceed capacity {capacity}", cache.len())));
            }
        }
        Ok(())
    };
    for (pos, f) in trace.requests_at(slot).enumerate() {
        apply(pos, &mut cache)?;
        requests += 1;
        if cache.contains(&f) {
            hits += 1;
        }
    }
    apply(requests as usize, &mut cache)?;
    if let Some(c) = pending.next() {
        return Err(mismatch(slot, format!("change at position {} beyond the slot's requests", c.before_request)));
    }

    let after: BTreeSet<FileId> = log.after.iter().copied().collect();
    if cache != after {
        return Err(mismatch(slot, "replayed cache differs from the logged final cache".into()));
    }
    if slot_level {
        // decide-then-serve: H and C follow from the sets alone
        let demands = trace.demands_at(slot)?;
        let demand_hits: u64 = after.iter().map(|&f| u64::from(demands[f.index()])).sum();
        let before: BTreeSet<FileId> = log.before.iter().copied().collect();
        let set_cost = after.difference(&before).count() as u64;
        if demand_hits != hits || set_cost != inserts {
            return Err(mismatch(slot, format!("set-based H={demand_hits}, C={set_cost} vs replay H={hits}, C={inserts}")));
        }
    }
    let reward = weights.hit * hits as f64 - weights.cost * inserts as f64;
    let derived = SlotAccounting { slot, hits, cost: inserts, reward, requests };
    if &derived != reported {
        return Err(mismatch(slot, format!("derived {derived:?}, reported {reported:?}")));
    }
    Ok(())
}

/// Check every slot of a run, and that consecutive slots chain.
pub fn audit(trace: &SlottedTrace, result: &RunResult) -> Result<()> {
    let cfg = &result.manifest.config;
    if result.logs.len() != result.per_slot.len() || result.per_slot.len() != trace.num_slots() {
        return Err(Error::Internal("run result does not cover the trace".into()));
    }
    let mut prev: Vec<FileId> = Vec::new();
    for (t, (log, acc)) in result.logs.iter().zip(&result.per_slot).enumerate() {
        if log.before != prev {
            return Err(mismatch(t, "cache at slot start differs from the previous slot's end".into()));
        }
        audit_slot(trace, t, log, acc, &cfg.weights, cfg.capacity, cfg.policy.is_slot_level())?;
        if let Some(Some(d)) = result.decisions.get(t) {
            if d.action > d.state || d.action as u64 != acc.cost {
                return Err(mismatch(t, format!("decision {d:?} inconsistent with cost {}", acc.cost)));
            }
        }
        prev.clone_from(&log.after);
    }
    let total: f64 = result.per_slot.iter().map(|a| a.reward).sum();
    if total != result.cumulative_reward {
        return Err(Error::Internal("cumulative reward is not the sum of slot rewards".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_policy, RunConfig};
    use crate::policies::{CacheChange, PolicyKind};
    use crate::trace::{generate_synthetic, SynthConfig};

    #[test]
    fn every_policy_passes() {
        let trace = generate_synthetic(&SynthConfig { num_slots: 80, seed: 9, ..Default::default() }).unwrap();
        for kind in PolicyKind::ALL {
            let cfg = RunConfig { policy: kind, capacity: 5, weights: RewardWeights { hit: 1.5, cost: 0.7 }, ..Default::default() };
            let r = run_policy(&trace, &cfg).unwrap();
            audit(&trace, &r).unwrap_or_else(|e| panic!("{kind}: {e}"));
        }
    }

    #[test]
    fn tampering_is_caught() {
        let trace = generate_synthetic(&SynthConfig { num_slots: 30, ..Default::default() }).unwrap();
        let cfg = RunConfig { policy: PolicyKind::Lru, capacity: 3, ..Default::default() };
        let r = run_policy(&trace, &cfg).unwrap();

        let mut bad = r.clone();
        bad.per_slot[5].hits += 1;
        assert!(audit(&trace, &bad).is_err());

        let mut bad = r.clone();
        let slot = bad.logs.iter().position(|l| !l.changes.is_empty()).unwrap();
        bad.logs[slot].changes.pop();
        assert!(audit(&trace, &bad).is_err());

        let mut bad = r;
        bad.logs[3].changes.push(CacheChange { before_request: 0, inserted: Some(FileId(0)), evicted: None });
        assert!(audit(&trace, &bad).is_err());
    }
}
