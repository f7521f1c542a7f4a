//! Small finite MDPs over the triangular `(s, a)` space, used to check the
//! tabular learner against value iteration.

use rand::Rng;

use super::qtable::{q_update, QTable, TransitionSample};
use crate::error::{Error, Result};
use crate::rng;

const MDP_DOMAIN: u64 = 0x4d44_5021;

/// Expected rewards and transition laws for every `(s, a)` with `a <= s`.
#[derive(Clone, Debug)]
pub struct TabularMdp {
    max_state: usize,
    reward: Vec<f64>,
    transition: Vec<Vec<f64>>,
}

fn index(s: usize, a: usize) -> usize {
    s * (s + 1) / 2 + a
}

impl TabularMdp {
    /// `reward[i]` and `transition[i]` for pairs in triangular order.
    pub fn new(max_state: usize, reward: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let pairs = index(max_state + 1, 0);
        if reward.len() != pairs || transition.len() != pairs {
            return Err(Error::Config(format!("expected {pairs} state-action pairs")));
        }
        for p in &transition {
            let total: f64 = p.iter().sum();
            if p.len() != max_state + 1 || p.iter().any(|&x| x < 0.0) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::Config("transition rows must be distributions over all states".into()));
            }
        }
        Ok(TabularMdp { max_state, reward, transition })
    }

    /// Three states, stationary, every state reachable from every pair.
    pub fn example() -> Self {
        let reward = vec![
            1.0, // (0,0)
            0.0, 2.0, // (1,·)
            -1.0, 0.5, 3.0, // (2,·)
        ];
        let transition = vec![
            vec![0.5, 0.3, 0.2],
            vec![0.2, 0.5, 0.3],
            vec![0.6, 0.2, 0.2],
            vec![0.1, 0.1, 0.8],
            vec![0.3, 0.4, 0.3],
            vec![0.4, 0.4, 0.2],
        ];
        TabularMdp::new(2, reward, transition).expect("valid example")
    }

    pub fn max_state(&self) -> usize {
        self.max_state
    }

    /// `Q*` by value iteration to sup-norm change below `tol`.
    pub fn value_iteration(&self, gamma: f64, tol: f64) -> QTable {
        let mut q = QTable::new(self.max_state, 0.0);
        loop {
            let v: Vec<f64> = (0..=self.max_state).map(|s| q.max_value(s)).collect();
            let mut next = q.clone();
            for s in 0..=self.max_state {
                for a in 0..=s {
                    let i = index(s, a);
                    let ev: f64 = self.transition[i].iter().zip(&v).map(|(p, v)| p * v).sum();
                    next.set(s, a, self.reward[i] + gamma * ev).expect("in range");
                }
            }
            let delta = next.sup_distance(&q);
            q = next;
            if delta < tol * (1.0 - gamma) {
                return q;
            }
        }
    }

    fn step(&self, s: usize, a: usize, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (s2, p) in self.transition[index(s, a)].iter().enumerate() {
            acc += p;
            if u < acc {
                return s2;
            }
        }
        self.max_state
    }

    /// Plain Q-learning along one trajectory with uniformly random actions
    /// and step size `1 / k` on the `k`-th visit of each pair.
    pub fn q_learning(&self, gamma: f64, updates: usize, seed: u64) -> Result<QTable> {
        let mut rng = rng::stream(seed, MDP_DOMAIN, &[]);
        let mut q = QTable::new(self.max_state, 0.0);
        let mut visits = vec![0u64; self.reward.len()];
        let mut s = 0;
        for _ in 0..updates {
            let a = rng.random_range(0..=s);
            let s2 = self.step(s, a, &mut rng);
            let i = index(s, a);
            visits[i] += 1;
            let sample = TransitionSample { state: s, action: a, reward: self.reward[i], next_state: s2, slot: 0 };
            q_update(&mut q, &sample, 1.0 / visits[i] as f64, gamma)?;
            s = s2;
        }
        Ok(q)
    }
}
