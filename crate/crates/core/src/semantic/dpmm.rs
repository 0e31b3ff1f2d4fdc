use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::vectorize::FeatureVector;
use crate::error::{Error, Result};

#[derive(Debug, Error)]
pub enum DpmmError {
    #[error("no data points to cluster")]
    Empty,
    #[error("data point {index} has dimension {got}, expected {expected}")]
    Dimension { index: usize, got: usize, expected: usize },
    #[error("sampling distribution sums to {0}")]
    Normalization(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DpmmConfig {
    pub alpha: f64,
    pub sigma_m: f64,
    pub sweeps: usize,
    pub seed: u64,
    /// Standard deviation of the isotropic Gaussian likelihood.
    pub obs_sd: f64,
    /// Stop after this many consecutive sweeps without a change.
    pub stable_sweeps: usize,
}

impl Default for DpmmConfig {
    fn default() -> Self {
        DpmmConfig {
            alpha: 1.0,
            sigma_m: 0.1,
            sweeps: 500,
            seed: 0,
            obs_sd: 0.1,
            stable_sweeps: 10,
        }
    }
}

impl DpmmConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("sigma_m", self.sigma_m), ("obs_sd", self.obs_sd)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("dpmm.{name} must be positive")));
            }
        }
        if self.sweeps == 0 {
            return Err(Error::Config("dpmm.sweeps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub mean: Vec<f64>,
    pub count: usize,
    sum: Vec<f64>,
}

impl Cluster {
    fn empty(dim: usize) -> Self {
        Cluster {
            mean: vec![0.0; dim],
            count: 0,
            sum: vec![0.0; dim],
        }
    }

    fn add(&mut self, x: &[f64], sigma_m: f64) {
        self.count += 1;
        for (s, v) in self.sum.iter_mut().zip(x) {
            *s += v;
        }
        self.remap(sigma_m);
    }

    fn remove(&mut self, x: &[f64], sigma_m: f64) {
        self.count -= 1;
        for (s, v) in self.sum.iter_mut().zip(x) {
            *s -= v;
        }
        self.remap(sigma_m);
    }

    /// Regularized MAP mean: `sum / (n + sigma_m)`.
    fn remap(&mut self, sigma_m: f64) {
        let d = self.count as f64 + sigma_m;
        for (m, s) in self.mean.iter_mut().zip(&self.sum) {
            *m = s / d;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpmmState {
    pub assignments: Vec<usize>,
    pub clusters: Vec<Cluster>,
    pub alpha: f64,
    pub sigma_m: f64,
    pub obs_sd: f64,
    pub rng_seed: u64,
}

impl DpmmState {
    /// Every point in cluster 0, whose mean starts at the origin.
    pub fn init(xs: &[FeatureVector], cfg: &DpmmConfig) -> Self {
        let dim = xs.first().map_or(0, Vec::len);
        let cluster = Cluster {
            mean: vec![0.0; dim],
            count: xs.len(),
            sum: sum_of(xs, dim),
        };
        DpmmState {
            assignments: vec![0; xs.len()],
            clusters: vec![cluster],
            alpha: cfg.alpha,
            sigma_m: cfg.sigma_m,
            obs_sd: cfg.obs_sd,
            rng_seed: cfg.seed,
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.count).collect()
    }
}

fn sum_of(xs: &[FeatureVector], dim: usize) -> Vec<f64> {
    let mut s = vec![0.0; dim];
    for x in xs {
        for (a, b) in s.iter_mut().zip(x) {
            *a += b;
        }
    }
    s
}

/// Chinese-restaurant prior over existing clusters followed by a new one:
/// `n_l / (N - 1 + alpha)` and `alpha / (N - 1 + alpha)`, where `N - 1` is
/// the total of `counts`.
pub fn crp_prior(counts: &[usize], alpha: f64) -> Vec<f64> {
    let total = counts.iter().sum::<usize>() as f64 + alpha;
    counts
        .iter()
        .map(|&n| n as f64 / total)
        .chain(std::iter::once(alpha / total))
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub struct DpmmSampler {
    pub state: DpmmState,
    rng: ChaCha8Rng,
}

impl DpmmSampler {
    pub fn new(xs: &[FeatureVector], cfg: &DpmmConfig) -> Self {
        DpmmSampler {
            state: DpmmState::init(xs, cfg),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        }
    }

    /// Unnormalized log posterior of each existing cluster and of a new one.
    fn log_weights(&self, x: &[f64]) -> Vec<f64> {
        let st = &self.state;
        let var = st.obs_sd * st.obs_sd;
        let d = x.len() as f64;
        let mut w: Vec<f64> = st
            .clusters
            .iter()
            .map(|c| (c.count as f64).ln() - sq_dist(x, &c.mean) / (2.0 * var) - d * st.obs_sd.ln())
            .collect();
        // Prior predictive of a fresh cluster whose mean is drawn from N(0, I).
        let pred_var = var + 1.0;
        let norm: f64 = x.iter().map(|v| v * v).sum();
        w.push(st.alpha.ln() - norm / (2.0 * pred_var) - 0.5 * d * pred_var.ln());
        w
    }

    /// Resamples the assignment of point `i` and returns the distribution it
    /// was drawn from (existing clusters, then a new cluster).
    pub fn gibbs_step(&mut self, xs: &[FeatureVector], i: usize) -> Vec<f64> {
        let x = &xs[i];
        let sigma_m = self.state.sigma_m;
        let old = self.state.assignments[i];
        self.state.clusters[old].remove(x, sigma_m);
        if self.state.clusters[old].count == 0 {
            self.state.clusters.remove(old);
            for a in &mut self.state.assignments {
                if *a > old {
                    *a -= 1;
                }
            }
        }
        let logw = self.log_weights(x);
        let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        let probs: Vec<f64> = exps.iter().map(|e| e / z).collect();

        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut pick = probs.len() - 1;
        for (l, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = l;
                break;
            }
        }
        if pick == self.state.clusters.len() {
            self.state.clusters.push(Cluster::empty(x.len()));
        }
        self.state.clusters[pick].add(x, sigma_m);
        self.state.assignments[i] = pick;
        probs
    }

    /// One pass over all points in index order. Returns how many points
    /// changed cluster, comparing partitions rather than labels.
    pub fn sweep(&mut self, xs: &[FeatureVector]) -> Result<usize> {
        let before = self.state.assignments.clone();
        for i in 0..xs.len() {
            let p = self.gibbs_step(xs, i);
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(DpmmError::Normalization(s).into());
            }
        }
        Ok(partition_changes(&before, &self.state.assignments))
    }
}

/// Points whose cluster differs under the best label matching, approximated
/// by comparing each point's co-members before and after.
fn partition_changes(before: &[usize], after: &[usize]) -> usize {
    let mut map: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (&b, &a) in before.iter().zip(after) {
        *map.entry(b).or_default().entry(a).or_default() += 1;
    }
    let mut used = std::collections::BTreeSet::new();
    let mut kept = 0;
    for (_, targets) in map {
        if let Some((&a, &n)) = targets.iter().filter(|(a, _)| !used.contains(*a)).max_by_key(|(a, n)| (**n, std::cmp::Reverse(**a))) {
            used.insert(a);
            kept += n;
        }
    }
    before.len() - kept
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub sweep: usize,
    pub clusters: usize,
    pub changed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DpmmTrace {
    pub sweeps: Vec<SweepStats>,
}

impl DpmmTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sweep,clusters,changed\n");
        for s in &self.sweeps {
            out.push_str(&format!("{},{},{}\n", s.sweep, s.clusters, s.changed));
        }
        out
    }
}

pub fn run_dpmm(xs: &[FeatureVector], cfg: &DpmmConfig) -> Result<(DpmmState, DpmmTrace)> {
    cfg.validate()?;
    let dim = xs.first().ok_or(DpmmError::Empty)?.len();
    if let Some((index, x)) = xs.iter().enumerate().find(|(_, x)| x.len() != dim) {
        return Err(DpmmError::Dimension {
            index,
            got: x.len(),
            expected: dim,
        }
        .into());
    }
    let mut sampler = DpmmSampler::new(xs, cfg);
    let mut trace = DpmmTrace::default();
    let mut stable = 0;
    for sweep in 1..=cfg.sweeps {
        let changed = sampler.sweep(xs)?;
        trace.sweeps.push(SweepStats {
            sweep,
            clusters: sampler.state.num_clusters(),
            changed,
        });
        stable = if changed == 0 { stable + 1 } else { 0 };
        if cfg.stable_sweeps > 0 && stable >= cfg.stable_sweeps {
            break;
        }
    }
    Ok((sampler.state, trace))
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    let choose2 = |k: usize| (k * k.saturating_sub(1)) as f64 / 2.0;
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut ra: BTreeMap<usize, usize> = BTreeMap::new();
    let mut rb: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *rb.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&k| choose2(k)).sum();
    let sa: f64 = ra.values().map(|&k| choose2(k)).sum();
    let sb: f64 = rb.values().map(|&k| choose2(k)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sa * sb / total;
    let max = 0.5 * (sa + sb);
    if (max - expected).abs() < f64::EPSILON {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crp_prior_values() {
        assert_eq!(crp_prior(&[2, 1], 1.0), vec![0.5, 0.25, 0.25]);
        let tiny = crp_prior(&[3], 1e-12);
        assert!(tiny[1] < 1e-12);
    }

    #[test]
    fn counts_sum_to_n_and_probs_to_one() {
        let xs: Vec<FeatureVector> = (0..12)
            .map(|i| (0..6).map(|j| if j == i % 3 || j == 3 + i % 3 { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut s = DpmmSampler::new(&xs, &DpmmConfig::default());
        for _ in 0..20 {
            for i in 0..xs.len() {
                let p = s.gibbs_step(&xs, i);
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert_eq!(s.state.counts().iter().sum::<usize>(), xs.len());
                assert!(s.state.clusters.iter().all(|c| c.count > 0));
            }
        }
    }

    #[test]
    fn single_point() {
        let (state, _) = run_dpmm(&[vec![1.0, 0.0]], &DpmmConfig::default()).unwrap();
        assert_eq!(state.num_clusters(), 1);
    }

    #[test]
    fn two_groups() {
        let mut xs = vec![vec![1.0, 1.0, 0.0, 0.0]; 20];
        xs.extend(vec![vec![0.0, 0.0, 1.0, 1.0]; 20]);
        let truth: Vec<usize> = (0..40).map(|i| i / 20).collect();
        let mut hits = 0;
        for seed in 0..20 {
            let cfg = DpmmConfig { seed, sweeps: 200, ..DpmmConfig::default() };
            let (state, _) = run_dpmm(&xs, &cfg).unwrap();
            if state.num_clusters() == 2 && adjusted_rand_index(&state.assignments, &truth) == 1.0 {
                hits += 1;
            }
        }
        assert!(hits >= 19, "{hits}/20");
    }

    #[test]
    fn deterministic_for_seed() {
        let xs: Vec<FeatureVector> = (0..30).map(|i| vec![(i % 2) as f64, ((i + 1) % 2) as f64, (i % 3 == 0) as u8 as f64]).collect();
        let cfg = DpmmConfig { seed: 7, ..DpmmConfig::default() };
        assert_eq!(run_dpmm(&xs, &cfg).unwrap().0, run_dpmm(&xs, &cfg).unwrap().0);
    }

    #[test]
    fn ari_basics() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]), 1.0);
        assert!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]) < 0.0);
    }
}
