//! Grouped linear demand predictor.
//!
//! A file of age `b` (slots since release) is predicted from its own request
//! history, most recent slot first, with a coefficient vector shared by every
//! file of the same age. Coefficients are constrained to be non-increasing
//! and non-negative. Files older than `age_cap` share the last group and see
//! only their `age_cap` most recent slots.
//!
//! Each group keeps the sufficient statistics of its cumulative squared error
//! (`G = Σ X Xᵀ`, `c = Σ d X`, `Σ d²`), so the exact full-history gradient
//! `2(Gθ − c)` is available at any time without revisiting old slots.

mod projection;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{DemandHistory, FileId};

pub use projection::{is_feasible, project_monotone_nonneg};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlmConfig {
    pub age_cap: usize,
    /// Projected-gradient iterations per group after each observed slot.
    pub steps_per_slot: usize,
    /// Constant prediction for files without a fitted group. `None` uses the
    /// running mean of first-slot demand over all files seen so far.
    pub newcomer_prior: Option<f64>,
    /// Multiplier applied to the statistics before each slot is folded in;
    /// 1 keeps the full-history objective.
    pub forgetting: f64,
}

impl Default for GlmConfig {
    fn default() -> Self {
        GlmConfig {
            age_cap: 60,
            steps_per_slot: 5,
            newcomer_prior: None,
            forgetting: 1.0,
        }
    }
}

impl GlmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.age_cap == 0 {
            return Err(Error::Config("age_cap must be positive".into()));
        }
        if let Some(p) = self.newcomer_prior {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::Config(format!("newcomer_prior must be non-negative, got {p}")));
            }
        }
        if !(self.forgetting > 0.0 && self.forgetting <= 1.0) {
            return Err(Error::Config(format!("forgetting factor must lie in (0, 1], got {}", self.forgetting)));
        }
        Ok(())
    }
}

/// History of one file at one slot: `(d_{t-1}, d_{t-2}, ...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// Full age `t − τ_f`, not capped.
    pub age: usize,
}

/// Extract the feature vector of `file` at slot `t`, truncated to `age_cap`.
pub fn feature_vector<H: DemandHistory + ?Sized>(history: &H, file: FileId, t: usize, age_cap: usize) -> Result<FeatureVector> {
    let release = history.release_slot(file);
    if release >= t {
        return Err(Error::AgeZero { file: file.0, slot: t });
    }
    let age = t - release;
    let values = (1..=age.min(age_cap))
        .map(|j| f64::from(history.demand(file, t - j)))
        .collect();
    Ok(FeatureVector { values, age })
}

/// Coefficients and sufficient statistics of one age group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgeGroup {
    pub theta: Vec<f64>,
    /// Row-major `dim × dim` Gram matrix.
    pub gram: Vec<f64>,
    pub cross: Vec<f64>,
    pub sum_sq: f64,
    pub samples: u64,
}

impl AgeGroup {
    fn new(dim: usize) -> Self {
        AgeGroup {
            theta: vec![0.0; dim],
            gram: vec![0.0; dim * dim],
            cross: vec![0.0; dim],
            sum_sq: 0.0,
            samples: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    fn gram_times(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.gram[i * n..(i + 1) * n];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// `θᵀGθ − 2cᵀθ`, the squared error up to the constant `Σ d²`.
    fn reduced_objective(&self, theta: &[f64], scratch: &mut [f64]) -> f64 {
        self.gram_times(theta, scratch);
        theta
            .iter()
            .zip(scratch.iter())
            .zip(&self.cross)
            .map(|((t, g), c)| t * g - 2.0 * c * t)
            .sum()
    }

    /// Cumulative squared prediction error of `theta` over all folded samples.
    pub fn objective(&self, theta: &[f64]) -> f64 {
        let mut scratch = vec![0.0; self.dim()];
        self.reduced_objective(theta, &mut scratch) + self.sum_sq
    }

    /// `2(Gθ − c)`.
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gram_times(theta, &mut g);
        for (gi, ci) in g.iter_mut().zip(&self.cross) {
            *gi = 2.0 * (*gi - ci);
        }
        g
    }

    fn fold(&mut self, x: &[f64], d: f64) {
        let n = self.dim();
        let nz: Vec<(usize, f64)> = x.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
        for &(i, xi) in &nz {
            for &(j, xj) in nz.iter().filter(|(j, _)| *j >= i) {
                let p = xi * xj;
                self.gram[i * n + j] += p;
                if i != j {
                    self.gram[j * n + i] += p;
                }
            }
            self.cross[i] += d * xi;
        }
        self.sum_sq += d * d;
        self.samples += 1;
    }

    fn scale(&mut self, rho: f64) {
        self.gram.iter_mut().for_each(|g| *g *= rho);
        self.cross.iter_mut().for_each(|c| *c *= rho);
        self.sum_sq *= rho;
    }

    /// Projected gradient with backtracking; returns (before, after) objective.
    fn descend(&mut self, steps: usize) -> (f64, f64) {
        let n = self.dim();
        let mut scratch = vec![0.0; n];
        let before = self.reduced_objective(&self.theta, &mut scratch);
        let mut current = before;
        let trace: f64 = (0..n).map(|i| self.gram[i * n + i]).sum();
        // the objective's Hessian is 2G
        let eta0 = 1.0 / (2.0 * trace / n as f64 + 1e-12);
        let mut candidate = vec![0.0; n];
        for _ in 0..steps {
            let grad = self.gradient(&self.theta);
            let mut eta = eta0;
            let mut accepted = false;
            for _ in 0..64 {
                for ((c, t), g) in candidate.iter_mut().zip(&self.theta).zip(&grad) {
                    *c = t - eta * g;
                }
                projection::project_in_place(&mut candidate);
                let value = self.reduced_objective(&candidate, &mut scratch);
                if value < current {
                    accepted = true;
                    self.theta.copy_from_slice(&candidate);
                    current = value;
                    break;
                }
                eta *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (before + self.sum_sq, current + self.sum_sq)
    }
}

/// Objective of one group before and after a [`GlmModel::fit_step`].
#[derive(Clone, Debug, PartialEq)]
pub struct GroupFit {
    pub group: usize,
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlmModel {
    config: GlmConfig,
    /// `groups[i - 1]` serves age `i`, up to `age_cap`.
    groups: Vec<AgeGroup>,
    first_slot_sum: f64,
    first_slot_count: u64,
}

const CHECKPOINT_FORMAT: &str = "edgecache-glm";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    model: GlmModel,
}

impl GlmModel {
    pub fn new(config: GlmConfig) -> Result<Self> {
        config.validate()?;
        let groups = (1..=config.age_cap).map(AgeGroup::new).collect();
        Ok(GlmModel {
            config,
            groups,
            first_slot_sum: 0.0,
            first_slot_count: 0,
        })
    }

    pub fn config(&self) -> &GlmConfig {
        &self.config
    }

    pub fn age_cap(&self) -> usize {
        self.config.age_cap
    }

    /// Group serving files of the given age (`age >= 1`).
    pub fn group(&self, age: usize) -> &AgeGroup {
        &self.groups[age.clamp(1, self.config.age_cap) - 1]
    }

    pub fn group_mut(&mut self, age: usize) -> &mut AgeGroup {
        let cap = self.config.age_cap;
        &mut self.groups[age.clamp(1, cap) - 1]
    }

    pub fn groups(&self) -> &[AgeGroup] {
        &self.groups
    }

    pub fn newcomer_prior(&self) -> f64 {
        match self.config.newcomer_prior {
            Some(p) => p,
            None if self.first_slot_count == 0 => 0.0,
            None => self.first_slot_sum / self.first_slot_count as f64,
        }
    }

    /// `θ_b · X` for the group of the feature's age.
    pub fn predict(&self, feat: &FeatureVector) -> Result<f64> {
        if feat.age == 0 {
            return Err(Error::Internal("prediction requested for an age-zero feature".into()));
        }
        let group = self.group(feat.age);
        if group.dim() != feat.values.len() {
            return Err(Error::Internal(format!(
                "feature of length {} for group of dimension {}",
                feat.values.len(),
                group.dim()
            )));
        }
        Ok(group.theta.iter().zip(&feat.values).map(|(a, b)| a * b).sum())
    }

    /// Predicted demand at slot `t` for every file of `F_t`.
    ///
    /// Files released at `t`, and files whose group has no samples yet, get
    /// the newcomer prior.
    pub fn predict_all<H: DemandHistory + ?Sized>(&self, history: &H, t: usize) -> Result<Vec<f64>> {
        self.predict_library(history, t, history.library_size_at(t))
    }

    /// Like [`GlmModel::predict_all`] for files `0..library`; `t` may be
    /// one past the last slot of the history.
    pub fn predict_library<H: DemandHistory + ?Sized>(&self, history: &H, t: usize, library: usize) -> Result<Vec<f64>> {
        let prior = self.newcomer_prior();
        (0..library)
            .map(|f| {
                let file = FileId(f as u32);
                let release = history.release_slot(file);
                if release >= t || self.group(t - release).samples == 0 {
                    return Ok(prior);
                }
                self.predict(&feature_vector(history, file, t, self.config.age_cap)?)
            })
            .collect()
    }

    /// Fold the observed demand `d_t` of every file in `F_t` into the
    /// statistics of its age group.
    pub fn accumulate<H: DemandHistory + ?Sized>(&mut self, history: &H, t: usize, observed: &[u32]) -> Result<()> {
        let library = history.library_size_at(t);
        if observed.len() != library {
            return Err(Error::Internal(format!(
                "observed demand covers {} files, library has {library}",
                observed.len()
            )));
        }
        if self.config.forgetting < 1.0 {
            let rho = self.config.forgetting;
            self.groups.iter_mut().for_each(|g| g.scale(rho));
        }
        for (f, &d) in observed.iter().enumerate() {
            let file = FileId(f as u32);
            let release = history.release_slot(file);
            let d = f64::from(d);
            if release == t {
                self.first_slot_sum += d;
                self.first_slot_count += 1;
                continue;
            }
            let feat = feature_vector(history, file, t, self.config.age_cap)?;
            self.group_mut(feat.age).fold(&feat.values, d);
        }
        Ok(())
    }

    /// Run `steps` projected-gradient iterations on every group with samples.
    pub fn fit_step(&mut self, steps: usize) -> Vec<GroupFit> {
        if steps == 0 {
            return Vec::new();
        }
        self.groups
            .iter_mut()
            .enumerate()
            .filter(|(_, g)| g.samples > 0)
            .map(|(i, g)| {
                let (before, after) = g.descend(steps);
                GroupFit { group: i + 1, before, after }
            })
            .collect()
    }

    /// Accumulate slot `t` and fit with the configured iteration budget.
    pub fn observe<H: DemandHistory + ?Sized>(&mut self, history: &H, t: usize, observed: &[u32]) -> Result<()> {
        self.accumulate(history, t, observed)?;
        self.fit_step(self.config.steps_per_slot);
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cp: Checkpoint = serde_json::from_str(text)?;
        if cp.format != CHECKPOINT_FORMAT || cp.version != CHECKPOINT_VERSION {
            return Err(Error::Input(format!(
                "unsupported checkpoint {} v{}",
                cp.format, cp.version
            )));
        }
        cp.model.config.validate()?;
        for (i, g) in cp.model.groups.iter().enumerate() {
            let d = i + 1;
            if g.theta.len() != d || g.cross.len() != d || g.gram.len() != d * d {
                return Err(Error::Input(format!("checkpoint group {d} has wrong dimensions")));
            }
        }
        if cp.model.groups.len() != cp.model.config.age_cap {
            return Err(Error::Input("checkpoint group count differs from age_cap".into()));
        }
        Ok(cp.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::SlottedTrace;

    fn one_file(series: Vec<u32>) -> SlottedTrace {
        let n = series.len();
        SlottedTrace::from_series(1, vec![0], vec![series], n).unwrap()
    }

    #[test]
    fn feature_one_slot_history() {
        let tr = one_file(vec![9, 0]);
        let x = feature_vector(&tr, FileId(0), 1, 60).unwrap();
        assert_eq!(x, FeatureVector { values: vec![9.0], age: 1 });
    }

    #[test]
    fn feature_most_recent_first() {
        let tr = one_file(vec![2, 7, 5, 0]);
        let x = feature_vector(&tr, FileId(0), 3, 60).unwrap();
        assert_eq!(x.values, vec![5.0, 7.0, 2.0]);
        assert_eq!(x.age, 3);
    }

    #[test]
    fn feature_truncated_to_cap() {
        let series: Vec<u32> = (0..101).map(|k| (k * 31 % 17) as u32).collect();
        let tr = one_file(series.clone());
        let x = feature_vector(&tr, FileId(0), 100, 60).unwrap();
        assert_eq!(x.age, 100);
        let expected: Vec<f64> = series[40..100].iter().rev().map(|&d| f64::from(d)).collect();
        assert_eq!(x.values, expected);
    }

    #[test]
    fn feature_age_zero_is_error() {
        let tr = SlottedTrace::from_series(1, vec![0, 2], vec![vec![1, 1, 1], vec![4]], 3).unwrap();
        assert!(matches!(feature_vector(&tr, FileId(1), 2, 60), Err(Error::AgeZero { file: 1, slot: 2 })));
    }

    #[test]
    fn predict_dot_product() {
        let mut m = GlmModel::new(GlmConfig::default()).unwrap();
        m.group_mut(2).theta = vec![0.6, 0.3];
        let p = m.predict(&FeatureVector { values: vec![10.0, 4.0], age: 2 }).unwrap();
        assert!((p - 7.2).abs() < 1e-12);
        assert_eq!(m.predict(&FeatureVector { values: vec![3.0], age: 1 }).unwrap(), 0.0);
        assert!(matches!(
            m.predict(&FeatureVector { values: vec![1.0], age: 2 }),
            Err(Error::Internal(_))
        ));
    }

    #[test]
    fn predict_all_cases() {
        let cfg = GlmConfig { newcomer_prior: Some(2.5), ..GlmConfig::default() };
        let mut m = GlmModel::new(cfg).unwrap();
        let empty = SlottedTrace::from_series(1, vec![], vec![], 2).unwrap();
        assert!(m.predict_all(&empty, 1).unwrap().is_empty());

        let tr = SlottedTrace::from_series(1, vec![0, 1], vec![vec![8, 0], vec![3]], 2).unwrap();
        m.group_mut(1).theta = vec![0.5];
        m.group_mut(1).samples = 1;
        assert_eq!(m.predict_all(&tr, 1).unwrap(), vec![4.0, 2.5]);
    }

    #[test]
    fn accumulate_outer_product() {
        let tr = one_file(vec![3, 6]);
        let mut m = GlmModel::new(GlmConfig::default()).unwrap();
        m.accumulate(&tr, 1, &[6]).unwrap();
        let g = m.group(1);
        assert_eq!((g.gram.as_slice(), g.cross.as_slice(), g.samples), (&[9.0][..], &[18.0][..], 1));
        m.accumulate(&tr, 1, &[6]).unwrap();
        let g = m.group(1);
        assert_eq!((g.gram[0], g.cross[0], g.samples), (18.0, 36.0, 2));
    }

    #[test]
    fn first_slot_demand_feeds_prior() {
        let tr = SlottedTrace::from_series(1, vec![0, 0], vec![vec![4, 1], vec![2, 0]], 2).unwrap();
        let mut m = GlmModel::new(GlmConfig::default()).unwrap();
        assert_eq!(m.newcomer_prior(), 0.0);
        m.accumulate(&tr, 0, &[4, 2]).unwrap();
        assert_eq!(m.newcomer_prior(), 3.0);
        assert!(m.accumulate(&tr, 1, &[1]).is_err());
    }

    #[test]
    fn scalar_least_squares() {
        let mut m = GlmModel::new(GlmConfig::default()).unwrap();
        let g = m.group_mut(1);
        g.gram = vec![4.0];
        g.cross = vec![8.0];
        g.samples = 1;
        m.fit_step(50);
        assert!((m.group(1).theta[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn constrained_minimiser_is_projection_for_identity_gram() {
        let mut m = GlmModel::new(GlmConfig::default()).unwrap();
        let g = m.group_mut(2);
        g.gram = vec![1.0, 0.0, 0.0, 1.0];
        g.cross = vec![0.2, 0.5];
        g.samples = 1;
        m.fit_step(200);
        let th = &m.group(2).theta;
        assert!((th[0] - 0.35).abs() < 1e-6 && (th[1] - 0.35).abs() < 1e-6, "{th:?}");
    }

    #[test]
    fn zero_steps_is_identity() {
        let mut m = GlmModel::new(GlmConfig::default()).unwrap();
        let g = m.group_mut(1);
        g.gram = vec![4.0];
        g.cross = vec![8.0];
        g.samples = 1;
        let before = m.clone();
        assert!(m.fit_step(0).is_empty());
        assert_eq!(m, before);
    }

    #[test]
    fn checkpoint_round_trip() {
        let tr = one_file(vec![3, 6, 2, 9, 4]);
        let mut m = GlmModel::new(GlmConfig { age_cap: 3, ..GlmConfig::default() }).unwrap();
        for t in 0..5 {
            m.observe(&tr, t, &tr.demands_at(t).unwrap()).unwrap();
        }
        let text = m.to_json().unwrap();
        assert_eq!(GlmModel::from_json(&text).unwrap(), m);
        let bad = text.replace("\"version\":1", "\"version\":9");
        assert!(GlmModel::from_json(&bad).is_err());
    }

    #[test]
    fn invalid_config() {
        assert!(GlmModel::new(GlmConfig { age_cap: 0, ..GlmConfig::default() }).is_err());
        assert!(GlmModel::new(GlmConfig { forgetting: 0.0, ..GlmConfig::default() }).is_err());
        assert!(GlmModel::new(GlmConfig { newcomer_prior: Some(-1.0), ..GlmConfig::default() }).is_err());
    }
}
