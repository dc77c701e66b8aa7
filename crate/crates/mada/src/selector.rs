//! Active-learning sample acquisition.
//!
//! Each round the pipeline over-selects `candidate_count` samples by
//! integrated uncertainty (first-round selection), then prunes the densest
//! ones in backbone feature space back down to the round budget
//! (second-round selection). Over-selection grows with round progress, so
//! early rounds lean on uncertainty while later rounds buy more diversity.
//!
//! Ties anywhere break by ascending sample id; the whole pipeline is
//! deterministic given its inputs. Baseline selectors (random, entropy,
//! margin) skip both the over-selection and the density pruning.

use crate::error::{Error, Result};
use crate::rng::Rng64;
use std::collections::{BTreeMap, BTreeSet};

/// Per-round labeling budget bookkeeping.
#[derive(Debug, Clone)]
pub struct BudgetState {
    pub total_budget: usize,
    pub rounds: usize,
    pub labeled: BTreeSet<usize>,
    pub unlabeled: BTreeSet<usize>,
}

impl BudgetState {
    pub fn new(total_budget: usize, rounds: usize, pool: impl IntoIterator<Item = usize>) -> Result<Self> {
        let unlabeled: BTreeSet<usize> = pool.into_iter().collect();
        if rounds == 0 {
            return Err(Error::Config("rounds must be >= 1".into()));
        }
        if total_budget > unlabeled.len() {
            return Err(Error::Config(format!(
                "budget {} exceeds unlabeled pool of {}",
                total_budget,
                unlabeled.len()
            )));
        }
        Ok(BudgetState { total_budget, rounds, labeled: BTreeSet::new(), unlabeled })
    }

    /// Quota of round r (1-based): floor(B/R), with the final round
    /// absorbing the remainder so the budget is spent exactly.
    pub fn round_quota(&self, r: usize) -> usize {
        let b = self.total_budget / self.rounds;
        if r == self.rounds {
            self.total_budget - (self.rounds - 1) * b
        } else {
            b
        }
    }

    /// Moves freshly selected ids from unlabeled to labeled.
    pub fn mark_labeled(&mut self, ids: &[usize]) -> Result<()> {
        for &id in ids {
            if !self.unlabeled.remove(&id) {
                return Err(Error::Usage(format!(
                    "id {id} selected twice or never in the pool"
                )));
            }
            self.labeled.insert(id);
        }
        Ok(())
    }
}

/// Over-selection schedule: candidates grow linearly in pool size and
/// polynomially in round progress.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConfig {
    pub lambda_u: f64,
    pub tau: f64,
    /// Current unlabeled pool size.
    pub pool_size: usize,
}

/// Number of first-round candidates for round r of big_r:
/// floor(base + lambda_u * pool * (r/R)^tau), clamped to [base, pool].
pub fn candidate_count(cfg: &ScheduleConfig, base: usize, r: usize, big_r: usize) -> usize {
    assert!(r >= 1 && r <= big_r, "round index out of range");
    let t = r as f64 / big_r as f64;
    let grown = base as f64 + cfg.lambda_u * cfg.pool_size as f64 * t.powf(cfg.tau);
    (grown.floor() as usize).max(base).min(cfg.pool_size)
}

/// Ids of the n largest scores, descending score, ties ascending id. If n
/// exceeds the pool the result is clamped and a warning is returned.
pub fn rank_by_uncertainty(
    scores: &BTreeMap<usize, f64>,
    n: usize,
) -> (Vec<usize>, Option<String>) {
    let mut order: Vec<(usize, f64)> = scores.iter().map(|(&id, &s)| (id, s)).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let warning = if n > order.len() {
        Some(format!("requested {n} candidates from a pool of {}", order.len()))
    } else {
        None
    };
    (order.into_iter().take(n).map(|(id, _)| id).collect(), warning)
}

/// Inverse mean distance to the k nearest neighbors within the set. A single
/// candidate has no neighbors and gets density 0.
pub fn knn_density(features: &[Vec<f64>], k: usize) -> Vec<f64> {
    let n = features.len();
    if n <= 1 {
        return vec![0.0; n];
    }
    let k = k.max(1).min(n - 1);
    let mut densities = Vec::with_capacity(n);
    for i in 0..n {
        let mut dists: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                features[i]
                    .iter()
                    .zip(&features[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        dists.sort_by(f64::total_cmp);
        let mean: f64 = dists[..k].iter().sum::<f64>() / k as f64;
        densities.push(1.0 / (mean + 1e-8));
    }
    densities
}

/// First-round candidates with everything the density filter needs.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub ids: Vec<usize>,
    /// Integrated uncertainty per candidate, aligned with `ids`.
    pub scores: Vec<f64>,
    /// Backbone feature row per candidate, aligned with `ids`.
    pub features: Vec<Vec<f64>>,
    pub densities: Vec<f64>,
}

impl CandidateSet {
    pub fn new(ids: Vec<usize>, scores: Vec<f64>, features: Vec<Vec<f64>>, k: usize) -> Self {
        assert_eq!(ids.len(), scores.len());
        assert_eq!(ids.len(), features.len());
        let densities = knn_density(&features, k);
        CandidateSet { ids, scores, features, densities }
    }
}

/// Second-round selection: drops the |candidates| - b densest candidates
/// (ties drop the higher id first) and returns the kept ids in ascending
/// order.
pub fn cdc_filter(candidates: &CandidateSet, b: usize) -> Result<Vec<usize>> {
    let n = candidates.ids.len();
    if b > n {
        return Err(Error::Usage(format!("cannot keep {b} of {n} candidates")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    // Densest first; among equal densities the higher id is removed first.
    order.sort_by(|&a, &b| {
        candidates.densities[b]
            .total_cmp(&candidates.densities[a])
            .then(candidates.ids[b].cmp(&candidates.ids[a]))
    });
    let mut kept: Vec<usize> = order[n - b..].iter().map(|&i| candidates.ids[i]).collect();
    kept.sort_unstable();
    Ok(kept)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineStrategy {
    Random,
    Entropy,
    Margin,
}

impl BaselineStrategy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(BaselineStrategy::Random),
            "entropy" => Ok(BaselineStrategy::Entropy),
            "margin" => Ok(BaselineStrategy::Margin),
            other => Err(Error::Config(format!(
                "unknown baseline strategy {other:?}, expected random, entropy or margin"
            ))),
        }
    }
}

/// Shannon entropy of a probability vector.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Gap between the two largest probabilities; smaller means less certain.
pub fn top_two_margin(p: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &x in p {
        if x > best {
            second = best;
            best = x;
        } else if x > second {
            second = x;
        }
    }
    best - second
}

/// Comparison selectors that pick b ids directly from the pool, without
/// over-selection or density pruning.
pub fn baseline_select(
    strategy: BaselineStrategy,
    probs: &BTreeMap<usize, Vec<f64>>,
    b: usize,
    rng: &mut Rng64,
) -> Result<Vec<usize>> {
    if b > probs.len() {
        return Err(Error::Usage(format!(
            "budget {b} exceeds pool of {}",
            probs.len()
        )));
    }
    let mut ids: Vec<usize> = probs.keys().copied().collect();
    match strategy {
        BaselineStrategy::Random => {
            let mut picked = rng.sample_without_replacement(&ids, b);
            picked.sort_unstable();
            Ok(picked)
        }
        BaselineStrategy::Entropy => {
            ids.sort_by(|&a, &b| {
                entropy(&probs[&b]).total_cmp(&entropy(&probs[&a])).then(a.cmp(&b))
            });
            let mut picked: Vec<usize> = ids.into_iter().take(b).collect();
            picked.sort_unstable();
            Ok(picked)
        }
        BaselineStrategy::Margin => {
            ids.sort_by(|&a, &b| {
                top_two_margin(&probs[&a])
                    .total_cmp(&top_two_margin(&probs[&b]))
                    .then(a.cmp(&b))
            });
            let mut picked: Vec<usize> = ids.into_iter().take(b).collect();
            picked.sort_unstable();
            Ok(picked)
        }
    }
}
