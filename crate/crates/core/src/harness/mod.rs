//! Running policies over traces, checking their books, and comparing them.

mod audit;
mod compare;
mod metrics;
mod report;

use serde::{Deserialize, Serialize};

use crate::cache::{RewardWeights, SlotAccounting};
use crate::error::{Error, Result};
use crate::glm::GlmConfig;
use crate::policies::{CachePolicy, Decision, LfudaPolicy, LruPolicy, MostPopularPolicy, OptimalPolicy, PolicyKind, SlotLog};
use crate::rlma::{QAgent, RlConfig};
use crate::trace::SlottedTrace;

pub use audit::{audit, audit_slot};
pub use compare::{compare, ComparisonReport, Margin};
pub use metrics::{windowed_hit_ratio, WindowPoint};
pub use report::{export_report, read_report, read_report_csv, report_to_csv, report_to_json, CsvRow, ReportFormat, REPORT_FORMAT};

/// Everything that determines a run besides the trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub policy: PolicyKind,
    /// Cache capacity `M` in files.
    pub capacity: usize,
    pub weights: RewardWeights,
    pub glm: GlmConfig,
    pub rl: RlConfig,
    pub seed: u64,
    /// Slots per point of the windowed hit ratio.
    pub window: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            policy: PolicyKind::Rlma,
            capacity: 10,
            weights: RewardWeights::default(),
            glm: GlmConfig::default(),
            rl: RlConfig::default(),
            seed: 1,
            window: 50,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::Config("cache capacity must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("metrics window must be at least 1 slot".into()));
        }
        self.weights.validate()?;
        self.glm.validate()?;
        self.rl.validate()
    }
}

pub fn build_policy(cfg: &RunConfig) -> Result<Box<dyn CachePolicy>> {
    cfg.validate()?;
    let (m, w) = (cfg.capacity, cfg.weights);
    Ok(match cfg.policy {
        PolicyKind::Lru => Box::new(LruPolicy::new(m, w)?),
        PolicyKind::Lfuda => Box::new(LfudaPolicy::new(m, w)?),
        PolicyKind::MostPopular => Box::new(MostPopularPolicy::new(m, cfg.glm.clone(), w)?),
        PolicyKind::Optimal => Box::new(OptimalPolicy::new(m, w)?),
        kind @ (PolicyKind::OriginQl | PolicyKind::Rlma) => {
            Box::new(QAgent::new(kind, m, cfg.glm.clone(), cfg.rl.clone(), w, cfg.seed)?)
        }
    })
}

/// Provenance stored with every result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub config: RunConfig,
    /// FNV-1a fingerprint of the trace, hex.
    pub trace_fingerprint: String,
    pub num_slots: usize,
    pub num_files: usize,
}

impl Manifest {
    pub fn new(cfg: &RunConfig, trace: &SlottedTrace) -> Self {
        Manifest {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            trace_fingerprint: format!("{:016x}", trace.fingerprint()),
            num_slots: trace.num_slots(),
            num_files: trace.num_files(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub policy: PolicyKind,
    pub per_slot: Vec<SlotAccounting>,
    pub cumulative_reward: f64,
    pub overall_hit_ratio: f64,
    pub manifest: Manifest,
    /// Cache logs for auditing; not part of exported reports.
    #[serde(skip)]
    pub logs: Vec<SlotLog>,
    #[serde(skip)]
    pub decisions: Vec<Option<Decision>>,
}

impl RunResult {
    pub fn total_hits(&self) -> u64 {
        self.per_slot.iter().map(|a| a.hits).sum()
    }

    pub fn total_cost(&self) -> u64 {
        self.per_slot.iter().map(|a| a.cost).sum()
    }

    pub fn total_requests(&self) -> u64 {
        self.per_slot.iter().map(|a| a.requests).sum()
    }
}

/// Drive one policy over every slot of `trace`.
pub fn run_policy(trace: &SlottedTrace, cfg: &RunConfig) -> Result<RunResult> {
    let mut policy = build_policy(cfg)?;
    run_boxed(trace, cfg, policy.as_mut())
}

pub(crate) fn run_boxed(trace: &SlottedTrace, cfg: &RunConfig, policy: &mut dyn CachePolicy) -> Result<RunResult> {
    if trace.num_slots() == 0 {
        return Err(Error::Input("trace has no slots".into()));
    }
    let total = trace.total_requests();
    if total == 0 {
        return Err(Error::Input("trace has no requests; hit ratio undefined".into()));
    }
    let mut per_slot = Vec::with_capacity(trace.num_slots());
    let mut logs = Vec::with_capacity(trace.num_slots());
    let mut decisions = Vec::with_capacity(trace.num_slots());
    for t in 0..trace.num_slots() {
        let out = policy.process_slot(trace, t)?;
        per_slot.push(out.accounting);
        logs.push(out.log);
        decisions.push(out.decision);
    }
    let hits: u64 = per_slot.iter().map(|a| a.hits).sum();
    let cumulative_reward = per_slot.iter().map(|a| a.reward).sum();
    log::debug!("{}: {hits}/{total} hits over {} slots", cfg.policy, trace.num_slots());
    Ok(RunResult {
        policy: cfg.policy,
        per_slot,
        cumulative_reward,
        overall_hit_ratio: hits as f64 / total as f64,
        manifest: Manifest::new(cfg, trace),
        logs,
        decisions,
    })
}
