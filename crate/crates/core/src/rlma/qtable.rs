use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Triangular action-value table `Q(s, a)` with `0 <= a <= s <= max_state`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    max_state: usize,
    values: Vec<f64>,
}

#[inline]
fn offset(s: usize) -> usize {
    s * (s + 1) / 2
}

impl QTable {
    pub fn new(max_state: usize, init: f64) -> Self {
        QTable {
            max_state,
            values: vec![init; offset(max_state + 1)],
        }
    }

    pub fn max_state(&self) -> usize {
        self.max_state
    }

    fn check(&self, s: usize, a: usize) -> Result<()> {
        if s > self.max_state || a > s {
            return Err(Error::Range(format!(
                "Q({s}, {a}) outside the table for states 0..={}",
                self.max_state
            )));
        }
        Ok(())
    }

    pub fn get(&self, s: usize, a: usize) -> Result<f64> {
        self.check(s, a)?;
        Ok(self.values[offset(s) + a])
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) -> Result<()> {
        self.check(s, a)?;
        self.values[offset(s) + a] = v;
        Ok(())
    }

    /// Action values of state `s`, indexed by action.
    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[offset(s)..offset(s + 1)]
    }

    /// `max_a Q(s, a)`.
    pub fn max_value(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest absolute entry difference to `other`.
    pub fn sup_distance(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `(s, a, r, s', t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionSample {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub slot: usize,
}

/// Which extreme of the Q row an agent acts on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionRule {
    #[default]
    Argmax,
    /// Literal reading of the pseudo-code; minimizes the action value.
    Argmin,
}

/// Best action of row `s` among `min_action..=s`; ties go to the smallest.
pub fn select_action(q: &QTable, s: usize, min_action: usize, rule: ActionRule) -> Result<usize> {
    q.check(s, 0)?;
    let row = q.row(s);
    let lo = min_action.min(s);
    let mut best = lo;
    for a in lo + 1..=s {
        let better = match rule {
            ActionRule::Argmax => row[a] > row[best],
            ActionRule::Argmin => row[a] < row[best],
        };
        if better {
            best = a;
        }
    }
    Ok(best)
}

/// `α₀ β₀^(now − produced)`.
pub fn learning_rate(alpha0: f64, beta0: f64, now: usize, produced: usize) -> Result<f64> {
    if now < produced {
        return Err(Error::Range(format!("sample from slot {produced} used at earlier slot {now}")));
    }
    Ok(alpha0 * beta0.powi((now - produced).min(i32::MAX as usize) as i32))
}

/// `Q(s,a) ← (1−α) Q(s,a) + α (r + γ max_a' Q(s',a'))`.
pub fn q_update(q: &mut QTable, sample: &TransitionSample, alpha: f64, gamma: f64) -> Result<()> {
    q.check(sample.state, sample.action)?;
    q.check(sample.next_state, 0)?;
    let target = sample.reward + gamma * q.max_value(sample.next_state);
    let i = offset(sample.state) + sample.action;
    q.values[i] = (1.0 - alpha) * q.values[i] + alpha * target;
    Ok(())
}
