use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_policy, RunConfig, RunResult};
use crate::error::{Error, Result};
use crate::trace::SlottedTrace;

/// Relative differences `(A − B) / |B|` between two runs; `None` when `B` is 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub a: String,
    pub b: String,
    pub hit_ratio: Option<f64>,
    pub cumulative_reward: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// One label per run: the policy name, suffixed `#k` on repeats.
    pub labels: Vec<String>,
    pub runs: Vec<RunResult>,
    pub margins: Vec<Margin>,
}

fn relative(a: f64, b: f64) -> Option<f64> {
    (b != 0.0).then(|| (a - b) / b.abs())
}

impl ComparisonReport {
    pub fn from_runs(runs: Vec<RunResult>) -> Self {
        let mut labels = Vec::with_capacity(runs.len());
        for r in &runs {
            let name = r.policy.name();
            let seen = labels.iter().filter(|l: &&String| l.split('#').next() == Some(name)).count();
            labels.push(if seen == 0 { name.to_string() } else { format!("{name}#{}", seen + 1) });
        }
        let mut margins = Vec::new();
        for (i, a) in runs.iter().enumerate() {
            for (j, b) in runs.iter().enumerate() {
                if i != j {
                    margins.push(Margin {
                        a: labels[i].clone(),
                        b: labels[j].clone(),
                        hit_ratio: relative(a.overall_hit_ratio, b.overall_hit_ratio),
                        cumulative_reward: relative(a.cumulative_reward, b.cumulative_reward),
                    });
                }
            }
        }
        ComparisonReport { labels, runs, margins }
    }

    pub fn run(&self, label: &str) -> Option<&RunResult> {
        self.labels.iter().position(|l| l == label).map(|i| &self.runs[i])
    }

    pub fn margin(&self, a: &str, b: &str) -> Option<&Margin> {
        self.margins.iter().find(|m| m.a == a && m.b == b)
    }
}

/// Run every config on the same trace, at most `jobs` at a time.
///
/// All configs must share `M` and the reward weights. Results come back in
/// config order regardless of scheduling.
pub fn compare(trace: &SlottedTrace, configs: &[RunConfig], jobs: usize) -> Result<ComparisonReport> {
    if configs.len() < 2 {
        return Err(Error::Config("comparison needs at least two runs".into()));
    }
    let first = &configs[0];
    for c in &configs[1..] {
        if c.capacity != first.capacity || c.weights != first.weights {
            return Err(Error::Config(format!(
                "runs must share capacity and reward weights; {} uses M={} {:?}, {} uses M={} {:?}",
                first.policy, first.capacity, first.weights, c.policy, c.capacity, c.weights
            )));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("worker pool: {e}")))?;
    let runs: Vec<RunResult> = pool.install(|| configs.par_iter().map(|c| run_policy(trace, c)).collect::<Result<_>>())?;
    Ok(ComparisonReport::from_runs(runs))
}
