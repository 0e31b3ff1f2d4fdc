//! EM over construct presence, with grammar pruning in the M-step.
//!
//! Each (protocol, construct) pair has a latent presence indicator. The
//! filter score is binarized at the construct's threshold `x = 1[s >= tau]`.
//! A present construct always fires (`x = 1`); an absent one fires with a
//! fixed false-positive rate `f`. The presence prior is `pi_k` when the
//! current grammar accepts `k` and 0 otherwise.
//!
//! The M-step sets `pi_k` to the mean responsibility. Constructs whose total
//! responsibility falls below `support_floor * N` become pruning candidates;
//! a candidate (together with everything its removal drags along) is pruned
//! when that does not lower the observed-data log-likelihood, which keeps
//! the likelihood trace non-decreasing.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::filters::ConstraintId;
use crate::grammar::Grammar;

pub type ScoreMap = BTreeMap<ConstraintId, f64>;

#[derive(Debug, Error)]
pub enum EmError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("log-likelihood decreased at iteration {iteration}: {before} -> {after}")]
    NotMonotone { iteration: usize, before: f64, after: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub support_floor: f64,
    /// Probability that an absent construct's filter fires anyway.
    pub false_positive_rate: f64,
    /// Binarization threshold applied to every filter score.
    pub threshold: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iters: 100,
            rel_tol: 1e-6,
            support_floor: 0.01,
            false_positive_rate: 0.05,
            threshold: 0.5,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("em.max_iters must be positive".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config("em.rel_tol must be positive".into()));
        }
        if !(self.support_floor > 0.0 && self.support_floor < 1.0) {
            return Err(Error::Config("em.support_floor must lie in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.false_positive_rate) {
            return Err(Error::Config("em.false_positive_rate must lie in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config("em.threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaParams {
    pub rate: BTreeMap<ConstraintId, f64>,
    pub threshold: BTreeMap<ConstraintId, f64>,
}

impl ThetaParams {
    /// `pi_k` starts at the mean filter score over the corpus.
    pub fn init(scores: &[ScoreMap], threshold: f64) -> Self {
        let n = scores.len().max(1) as f64;
        let rate = ConstraintId::ALL
            .iter()
            .map(|&k| {
                let mean = scores.iter().map(|s| s.get(&k).copied().unwrap_or(0.0)).sum::<f64>() / n;
                (k, mean.clamp(0.0, 1.0 - 1e-9))
            })
            .collect();
        let threshold = ConstraintId::ALL.iter().map(|&k| (k, threshold)).collect();
        ThetaParams { rate, threshold }
    }

    fn pi(&self, k: ConstraintId) -> f64 {
        self.rate.get(&k).copied().unwrap_or(0.0)
    }

    fn observe(&self, k: ConstraintId, score: f64) -> bool {
        score >= self.threshold.get(&k).copied().unwrap_or(0.5)
    }
}

/// Per-protocol responsibilities `r_i[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentAssignment {
    pub r: Vec<BTreeMap<ConstraintId, f64>>,
}

impl LatentAssignment {
    pub fn support(&self, k: ConstraintId) -> f64 {
        self.r.iter().map(|ri| ri.get(&k).copied().unwrap_or(0.0)).sum()
    }
}

fn responsibility(x: bool, pi: f64, f: f64) -> f64 {
    let present = if x { pi } else { 0.0 };
    let absent = (1.0 - pi) * if x { f } else { 1.0 - f };
    let z = present + absent;
    if z > 0.0 {
        present / z
    } else {
        0.0
    }
}

pub fn e_step(scores: &[ScoreMap], theta: &ThetaParams, grammar: &Grammar, f: f64) -> LatentAssignment {
    let accepted = grammar.accepted_constructs();
    let r = scores
        .iter()
        .map(|si| {
            ConstraintId::ALL
                .iter()
                .map(|&k| {
                    let v = if accepted.contains(&k) {
                        let s = si.get(&k).copied().unwrap_or(0.0);
                        responsibility(theta.observe(k, s), theta.pi(k), f)
                    } else {
                        0.0
                    };
                    (k, v)
                })
                .collect()
        })
        .collect();
    LatentAssignment { r }
}

/// Observed-data log-likelihood; constructs outside `accepted` are absent.
pub fn log_likelihood(
    scores: &[ScoreMap],
    theta: &ThetaParams,
    accepted: &BTreeSet<ConstraintId>,
    f: f64,
) -> f64 {
    let mut ll = 0.0;
    for si in scores {
        for &k in ConstraintId::ALL {
            let x = theta.observe(k, si.get(&k).copied().unwrap_or(0.0));
            let absent = if x { f } else { 1.0 - f };
            let p = if accepted.contains(&k) {
                let pi = theta.pi(k);
                (if x { pi } else { 0.0 }) + (1.0 - pi) * absent
            } else {
                absent
            };
            ll += p.ln();
        }
    }
    ll
}

#[derive(Debug, Clone, PartialEq)]
pub struct MStep {
    pub theta: ThetaParams,
    pub grammar: Grammar,
    pub pruned: Vec<ConstraintId>,
    /// Below the support floor but kept because pruning would lower the
    /// likelihood.
    pub retained: Vec<ConstraintId>,
}

pub fn m_step(
    assignment: &LatentAssignment,
    theta: &ThetaParams,
    grammar: &Grammar,
    scores: &[ScoreMap],
    cfg: &EmConfig,
) -> Result<MStep> {
    let n = assignment.r.len().max(1) as f64;
    let mut next = theta.clone();
    for &k in ConstraintId::ALL {
        next.rate.insert(k, assignment.support(k) / n);
    }
    let f = cfg.false_positive_rate;
    let mut grammar = grammar.clone();
    let mut accepted = grammar.accepted_constructs();
    let mut inactive: BTreeSet<ConstraintId> =
        ConstraintId::ALL.iter().copied().filter(|k| !accepted.contains(k)).collect();
    let mut ll = log_likelihood(scores, &next, &accepted, f);
    let mut pruned = Vec::new();
    let mut retained = Vec::new();
    for &k in ConstraintId::ALL {
        let exempt = matches!(k, ConstraintId::DeviceType | ConstraintId::ScientificType);
        if exempt || !accepted.contains(&k) || assignment.support(k) >= cfg.support_floor * n {
            continue;
        }
        let mut trial = inactive.clone();
        trial.insert(k);
        let candidate = grammar.prune(&trial)?;
        let cand_accepted = candidate.accepted_constructs();
        if cand_accepted.contains(&ConstraintId::DeviceType) != accepted.contains(&ConstraintId::DeviceType)
            || cand_accepted.contains(&ConstraintId::ScientificType) != accepted.contains(&ConstraintId::ScientificType)
        {
            retained.push(k);
            continue;
        }
        let cand_ll = log_likelihood(scores, &next, &cand_accepted, f);
        if cand_ll >= ll {
            pruned.extend(accepted.difference(&cand_accepted).copied());
            inactive = ConstraintId::ALL.iter().copied().filter(|c| !cand_accepted.contains(c)).collect();
            grammar = candidate;
            accepted = cand_accepted;
            ll = cand_ll;
        } else {
            retained.push(k);
        }
    }
    for k in &inactive {
        next.rate.insert(*k, 0.0);
    }
    Ok(MStep {
        theta: next,
        grammar,
        pruned,
        retained,
    })
}

/// The syntax half of a designed DSL.
#[derive(Debug, Clone, PartialEq)]
pub struct DslSyntax {
    pub active: BTreeSet<ConstraintId>,
    pub grammar: Grammar,
}

impl DslSyntax {
    /// Prunes `prior` down to `wanted`. The resulting active set is what the
    /// pruned grammar still accepts, which may be smaller when a wanted
    /// construct depends on an unwanted one.
    pub fn from_active(prior: &Grammar, wanted: &BTreeSet<ConstraintId>) -> Result<Self> {
        let inactive: BTreeSet<_> = ConstraintId::ALL.iter().copied().filter(|k| !wanted.contains(k)).collect();
        let grammar = prior.prune(&inactive)?;
        Ok(DslSyntax {
            active: grammar.accepted_constructs(),
            grammar,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmReport {
    pub iterations: usize,
    /// Log-likelihood at initialization followed by one value per iteration.
    pub loglik_trace: Vec<f64>,
    pub active_constraints: BTreeSet<ConstraintId>,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "K_prime")]
    pub k_prime: usize,
    pub final_rates: BTreeMap<ConstraintId, f64>,
    /// (iteration, construct) in pruning order.
    pub pruned: Vec<(usize, ConstraintId)>,
    pub retained_below_floor: BTreeSet<ConstraintId>,
    pub converged: bool,
}

impl EmReport {
    /// The trace as `iteration,loglik` CSV.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,loglik\n");
        for (i, ll) in self.loglik_trace.iter().enumerate() {
            out.push_str(&format!("{i},{ll}\n"));
        }
        out
    }
}

pub const MONOTONE_TOL: f64 = 1e-9;

pub fn run_em(scores: &[ScoreMap], prior: &Grammar, cfg: &EmConfig) -> Result<(DslSyntax, EmReport)> {
    cfg.validate()?;
    if scores.is_empty() {
        return Err(EmError::EmptyCorpus.into());
    }
    let f = cfg.false_positive_rate;
    let mut theta = ThetaParams::init(scores, cfg.threshold);
    let mut grammar = prior.clone();
    let mut accepted = grammar.accepted_constructs();
    let mut trace = vec![log_likelihood(scores, &theta, &accepted, f)];
    let mut pruned = Vec::new();
    let mut retained = BTreeSet::new();
    let mut prev_r: Option<LatentAssignment> = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let assignment = e_step(scores, &theta, &grammar, f);
        let step = m_step(&assignment, &theta, &grammar, scores, cfg)?;
        let new_accepted = step.grammar.accepted_constructs();
        let ll = log_likelihood(scores, &step.theta, &new_accepted, f);
        let before = *trace.last().expect("trace starts non-empty");
        if ll < before - MONOTONE_TOL * before.abs().max(1.0) {
            return Err(EmError::NotMonotone {
                iteration: iterations,
                before,
                after: ll,
            }
            .into());
        }
        trace.push(ll);
        pruned.extend(step.pruned.iter().map(|&k| (iterations, k)));
        retained.extend(step.retained.iter().copied());
        let stable_set = new_accepted == accepted;
        let rel = (ll - before).abs() / before.abs().max(1e-12);
        let same_r = prev_r.as_ref().is_some_and(|p| same_assignment(p, &assignment));
        theta = step.theta;
        grammar = step.grammar;
        accepted = new_accepted;
        prev_r = Some(assignment);
        if (rel < cfg.rel_tol && stable_set) || (same_r && stable_set) {
            converged = true;
            break;
        }
    }
    retained.retain(|k| accepted.contains(k));
    let report = EmReport {
        iterations,
        loglik_trace: trace,
        k: accepted.len(),
        k_prime: ConstraintId::ALL.len(),
        active_constraints: accepted.clone(),
        final_rates: theta.rate,
        pruned,
        retained_below_floor: retained,
        converged,
    };
    Ok((DslSyntax { active: accepted, grammar }, report))
}

fn same_assignment(a: &LatentAssignment, b: &LatentAssignment) -> bool {
    a.r.len() == b.r.len()
        && a.r.iter().zip(&b.r).all(|(x, y)| x.iter().zip(y).all(|((_, u), (_, v))| (u - v).abs() < 1e-12))
}
