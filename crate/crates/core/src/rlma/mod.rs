//! Tabular Q-learning for cache replacement.
//!
//! The state is the number of files in the anticipated top-`M` (by predicted
//! demand) that are missing from the cache; the action is how many of them to
//! swap in. Besides the experienced transition of every slot, the full agent
//! replays the last `Δt` slots in `K` imaginary rollouts with random actions
//! and learns from those samples at a rate that decays with their age. With
//! `K = 0` it reduces to the plain online learner.

mod mdp;
mod qtable;
mod replacement;
mod rollout;

use serde::{Deserialize, Serialize};

use crate::cache::{self, CacheState, RewardWeights};
use crate::error::{Error, Result};
use crate::glm::{GlmConfig, GlmModel};
use crate::policies::{rank_files, CachePolicy, Decision, PolicyKind, SlotLog, SlotOutcome};
use crate::trace::{DemandHistory, FileId, SlottedTrace};

pub use mdp::TabularMdp;
pub use qtable::{learning_rate, q_update, select_action, ActionRule, QTable, TransitionSample};
pub use replacement::{action_to_replacement, anticipated, compute_state, min_action, Replacement};
pub use rollout::{cache_hits, imagine_rollouts, RolloutWindow, SlotMemory};

/// Which stored samples feed the Q update of a slot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplayMode {
    /// Only the newest experienced sample.
    #[default]
    Fresh,
    /// Every experienced sample, at its age-decayed rate.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlConfig {
    pub gamma: f64,
    pub alpha0: f64,
    pub beta0: f64,
    /// Imagination window `Δt` in slots.
    pub window: usize,
    /// Imaginary rollouts `K` per slot.
    pub rollouts: usize,
    pub q_init: f64,
    pub action_rule: ActionRule,
    pub replay: ReplayMode,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig {
            gamma: 0.9,
            alpha0: 0.1,
            beta0: 0.99,
            window: 30,
            rollouts: 5,
            q_init: 0.0,
            action_rule: ActionRule::Argmax,
            replay: ReplayMode::Fresh,
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(Error::Config(format!("alpha0 must lie in (0, 1], got {}", self.alpha0)));
        }
        if !(self.beta0 > 0.0 && self.beta0 <= 1.0) {
            return Err(Error::Config(format!("beta0 must lie in (0, 1], got {}", self.beta0)));
        }
        if self.window == 0 {
            return Err(Error::Config("imagination window must be at least one slot".into()));
        }
        if !self.q_init.is_finite() {
            return Err(Error::Config("q_init must be finite".into()));
        }
        Ok(())
    }
}

/// Experienced transitions of every slot so far, and the imaginary ones of
/// the latest slot.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffers {
    pub experienced: Vec<TransitionSample>,
    pub imaginary: Vec<TransitionSample>,
}

const CHECKPOINT_FORMAT: &str = "edgecache-agent";
const CHECKPOINT_VERSION: u32 = 1;

/// Q-learning cache agent; [`PolicyKind::Rlma`] with imagination or
/// [`PolicyKind::OriginQl`] without.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QAgent {
    format: String,
    version: u32,
    kind: PolicyKind,
    config: RlConfig,
    weights: RewardWeights,
    seed: u64,
    q: QTable,
    glm: GlmModel,
    cache: CacheState,
    buffers: ReplayBuffers,
    /// Cache before the first slot.
    origin: CacheState,
    /// Up to `Δt + 1` most recent slots.
    history: Vec<SlotMemory>,
    /// Ranking for the next slot, computed at the end of the previous one.
    pending: Option<Vec<FileId>>,
    next_slot: usize,
}

impl QAgent {
    pub fn new(kind: PolicyKind, capacity: usize, glm: GlmConfig, mut config: RlConfig, weights: RewardWeights, seed: u64) -> Result<Self> {
        match kind {
            PolicyKind::Rlma => {}
            PolicyKind::OriginQl => config.rollouts = 0,
            other => return Err(Error::Config(format!("{other} is not a Q-learning policy"))),
        }
        config.validate()?;
        weights.validate()?;
        let cache = CacheState::new(capacity)?;
        Ok(QAgent {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            kind,
            q: QTable::new(capacity, config.q_init),
            config,
            weights,
            seed,
            glm: GlmModel::new(glm)?,
            origin: cache.clone(),
            cache,
            buffers: ReplayBuffers::default(),
            history: Vec::new(),
            pending: None,
            next_slot: 0,
        })
    }

    pub fn config(&self) -> &RlConfig {
        &self.config
    }

    pub fn q_table(&self) -> &QTable {
        &self.q
    }

    pub fn buffers(&self) -> &ReplayBuffers {
        &self.buffers
    }

    pub fn model(&self) -> &GlmModel {
        &self.glm
    }

    pub fn next_slot(&self) -> usize {
        self.next_slot
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let agent: QAgent = serde_json::from_str(text)?;
        if agent.format != CHECKPOINT_FORMAT || agent.version != CHECKPOINT_VERSION {
            return Err(Error::Input(format!(
                "unsupported agent checkpoint {} v{}",
                agent.format, agent.version
            )));
        }
        agent.config.validate()?;
        if agent.q.max_state() != agent.cache.capacity() {
            return Err(Error::Input("Q table does not match the cache capacity".into()));
        }
        Ok(agent)
    }

    fn ranking<H: DemandHistory>(&self, history: &H, t: usize, library: usize, release: &[usize]) -> Result<Vec<FileId>> {
        let predicted = self.glm.predict_library(history, t, library)?;
        Ok(rank_files(&predicted, &release[..library]))
    }

    /// Imaginary samples over the stored window ending at slot `now`, the
    /// slot just served. Reads agent state only.
    pub fn imagine(&self, trace: &SlottedTrace, now: usize) -> Result<Vec<TransitionSample>> {
        let Some(next_ranking) = self.pending.as_deref() else {
            return Ok(Vec::new());
        };
        if self.config.rollouts == 0 || self.history.is_empty() {
            return Ok(Vec::new());
        }
        let (start, steps) = if self.history.len() == self.config.window + 1 {
            (&self.history[0].cache_after, &self.history[1..])
        } else {
            log::trace!("slot {now}: imagination window shortened to {} slots", self.history.len());
            (&self.origin, &self.history[..])
        };
        let window = RolloutWindow { start, steps, next_ranking, now };
        imagine_rollouts(&window, trace, &self.weights, self.config.rollouts, self.seed)
    }

    /// Experienced samples first (only the newest unless replaying all),
    /// then the slot's imaginary samples.
    fn learn(&mut self, now: usize) -> Result<()> {
        let (cfg, q) = (&self.config, &mut self.q);
        let from = match cfg.replay {
            ReplayMode::Fresh => self.buffers.experienced.len() - 1,
            ReplayMode::Full => 0,
        };
        for s in self.buffers.experienced[from..].iter().chain(&self.buffers.imaginary) {
            q_update(q, s, learning_rate(cfg.alpha0, cfg.beta0, now, s.slot)?, cfg.gamma)?;
        }
        Ok(())
    }
}

impl CachePolicy for QAgent {
    fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn process_slot(&mut self, trace: &SlottedTrace, t: usize) -> Result<SlotOutcome> {
        if t != self.next_slot {
            return Err(Error::Range(format!("agent expects slot {}, got {t}", self.next_slot)));
        }
        let release = trace.release_slots();
        let capacity = self.cache.capacity();
        let ranking = match self.pending.take() {
            Some(r) => r,
            None => self.ranking(trace, t, trace.library_size_at(t), release)?,
        };

        let state = compute_state(anticipated(&ranking, capacity), &self.cache);
        let action = select_action(&self.q, state, min_action(state, &self.cache), self.config.action_rule)?;
        let rep = action_to_replacement(&self.cache, &ranking, action)?;
        let before = self.cache.to_vec();
        let changes = replacement::apply(&mut self.cache, &rep);

        let demands = trace.demands_at(t)?;
        let hits = cache::hits(&self.cache, &demands);
        let cost = rep.insert.len() as u64;
        let accounting = self.weights.account(t, hits, cost, trace.total_requests_at(t)?);

        self.glm.observe(trace, t, &demands)?;
        let next_ranking = if t + 1 < trace.num_slots() {
            self.ranking(trace, t + 1, trace.library_size_at(t + 1), release)?
        } else {
            self.ranking(trace, t + 1, trace.library_size_at(t), release)?
        };
        let next_state = compute_state(anticipated(&next_ranking, capacity), &self.cache);
        self.buffers.experienced.push(TransitionSample {
            state,
            action: rep.insert.len(),
            reward: accounting.reward,
            next_state,
            slot: t,
        });

        self.history.push(SlotMemory {
            slot: t,
            ranking,
            cache_after: self.cache.clone(),
        });
        if self.history.len() > self.config.window + 1 {
            let excess = self.history.len() - self.config.window - 1;
            self.history.drain(..excess);
        }

        self.pending = Some(next_ranking);
        self.buffers.imaginary = self.imagine(trace, t)?;
        self.learn(t)?;

        self.next_slot = t + 1;
        Ok(SlotOutcome {
            accounting,
            log: SlotLog {
                before,
                after: self.cache.to_vec(),
                changes,
            },
            decision: Some(Decision {
                state,
                action: rep.insert.len(),
                clamped: rep.clamped,
            }),
        })
    }

    fn cache(&self) -> &CacheState {
        &self.cache
    }
}
