//! Dirichlet-based uncertainty measures and the evidential training losses.
//!
//! A classifier output is a concentration vector alpha over K classes. Its
//! expected class distribution is p_k = alpha_k / S with S the concentration
//! sum. Two uncertainties split the Shannon entropy of p:
//!
//! * domain uncertainty, the mutual information between the class label and
//!   the sampled categorical distribution: spread of the Dirichlet, high for
//!   out-of-distribution inputs even when the mean looks confident;
//! * predictive uncertainty, the expected entropy of sampled categoricals.
//!
//! Their sum equals the entropy of p exactly; the decomposition identity is
//! the primary anti-regression guard here.
//!
//! Training combines a marginal-likelihood loss (ln S - ln alpha_y) with a
//! KL regularizer against the uniform Dirichlet after removing the
//! ground-truth evidence slot. The KL weight ramps linearly over the first
//! `kl_anneal_epochs` epochs. Scoring is plain float math; losses build on
//! the differentiation graph.

use crate::diffcore::special::{digamma_raw, lgamma_raw};
use crate::diffcore::{Matrix, Tape, Value};
use crate::error::{Error, Result};

fn check_alpha(alpha: &[f64]) -> Result<()> {
    if alpha.is_empty() {
        return Err(Error::Domain("empty concentration vector".into()));
    }
    for &a in alpha {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("concentration must be positive finite, got {a}")));
        }
    }
    Ok(())
}

/// Expected class probabilities alpha_k / S.
pub fn expected_prob(alpha: &[f64]) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let s: f64 = alpha.iter().sum();
    Ok(alpha.iter().map(|a| a / s).collect())
}

/// Mutual information between the label and the sampled distribution:
/// sum_k p_k (digamma(alpha_k + 1) - digamma(S + 1)) - sum_k p_k ln p_k.
pub fn domain_uncertainty(alpha: &[f64]) -> Result<f64> {
    check_alpha(alpha)?;
    let s: f64 = alpha.iter().sum();
    let psi_s1 = digamma_raw(s + 1.0);
    let mut u = 0.0;
    for &a in alpha {
        let p = a / s;
        u += p * (digamma_raw(a + 1.0) - psi_s1) - p * p.ln();
    }
    Ok(u)
}

/// Expected entropy of sampled class distributions:
/// sum_k p_k (digamma(S + 1) - digamma(alpha_k + 1)).
pub fn predictive_uncertainty(alpha: &[f64]) -> Result<f64> {
    check_alpha(alpha)?;
    let s: f64 = alpha.iter().sum();
    let psi_s1 = digamma_raw(s + 1.0);
    let mut u = 0.0;
    for &a in alpha {
        u += (a / s) * (psi_s1 - digamma_raw(a + 1.0));
    }
    Ok(u)
}

/// Weighted mix of the two uncertainties.
pub fn integrated_uncertainty(
    u_dom: f64,
    u_pre: f64,
    lambda_dom: f64,
    lambda_pre: f64,
) -> Result<f64> {
    if lambda_dom < 0.0 || lambda_pre < 0.0 {
        return Err(Error::Config(format!(
            "uncertainty weights must be nonnegative, got lambda_dom={lambda_dom}, lambda_pre={lambda_pre}"
        )));
    }
    Ok(lambda_dom * u_dom + lambda_pre * u_pre)
}

/// Per-sample uncertainty triple.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyScore {
    pub id: usize,
    pub u_dom: f64,
    pub u_pre: f64,
    pub u_int: f64,
}

/// Scores every row of a concentration batch. Sub-1e-9 negative noise in the
/// nonnegative measures is clamped to zero.
pub fn score_batch(
    alpha: &Matrix,
    ids: &[usize],
    lambda_dom: f64,
    lambda_pre: f64,
) -> Result<Vec<UncertaintyScore>> {
    if alpha.rows() != ids.len() {
        return Err(Error::Shape(format!(
            "{} concentration rows but {} ids",
            alpha.rows(),
            ids.len()
        )));
    }
    let clamp = |u: f64| -> Result<f64> {
        if u < -1e-9 {
            return Err(Error::Numeric(format!("uncertainty {u} below tolerance")));
        }
        Ok(u.max(0.0))
    };
    let mut out = Vec::with_capacity(ids.len());
    for (r, &id) in ids.iter().enumerate() {
        let row = alpha.row(r);
        let u_dom = clamp(domain_uncertainty(row)?)?;
        let u_pre = clamp(predictive_uncertainty(row)?)?;
        let u_int = integrated_uncertainty(u_dom, u_pre, lambda_dom, lambda_pre)?;
        out.push(UncertaintyScore { id, u_dom, u_pre, u_int });
    }
    Ok(out)
}

/// Loss weighting, including the linear KL ramp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_mar: f64,
    pub lambda_kl: f64,
    pub kl_anneal_epochs: usize,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { lambda_mar: 1.0, lambda_kl: 1.0, kl_anneal_epochs: 10 }
    }
}

impl LossWeights {
    /// KL weight at a cumulative epoch count: lambda_kl * min(1, e / ramp).
    pub fn effective_kl(&self, epoch: usize) -> f64 {
        if self.kl_anneal_epochs == 0 {
            return self.lambda_kl;
        }
        self.lambda_kl * (epoch as f64 / self.kl_anneal_epochs as f64).min(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_mar < 0.0 || self.lambda_kl < 0.0 {
            return Err(Error::Config(format!(
                "loss weights must be nonnegative, got lambda_mar={}, lambda_kl={}",
                self.lambda_mar, self.lambda_kl
            )));
        }
        Ok(())
    }
}

fn one_hot(labels: &[usize], k: usize) -> Result<Matrix> {
    let mut m = Matrix::zeros(labels.len(), k);
    for (r, &y) in labels.iter().enumerate() {
        if y >= k {
            return Err(Error::Usage(format!("label {y} out of range 0..{k}")));
        }
        m[(r, y)] = 1.0;
    }
    Ok(m)
}

fn check_batch(alpha: &Value, labels: &[usize]) -> Result<(usize, usize)> {
    let (rows, k) = alpha.shape();
    if rows == 0 || labels.is_empty() {
        return Err(Error::Usage("loss over an empty batch".into()));
    }
    if rows != labels.len() {
        return Err(Error::Shape(format!("{rows} concentration rows but {} labels", labels.len())));
    }
    Ok((rows, k))
}

/// Column of ones used to sum each row via matmul.
fn ones_col(tape: &Tape, n: usize) -> Value {
    tape.leaf(Matrix::filled(n, 1, 1.0))
}

/// Negative log marginal likelihood per sample: ln S - ln alpha_y. Returns a
/// batch x 1 value.
pub fn loss_marginal(tape: &Tape, alpha: &Value, labels: &[usize]) -> Result<Value> {
    let (_, k) = check_batch(alpha, labels)?;
    let ones_k = ones_col(tape, k);
    let ln_s = alpha.matmul(&ones_k).ln();
    let beta = tape.leaf(one_hot(labels, k)?);
    let ln_alpha_y = alpha.ln().mul(&beta).matmul(&ones_k);
    Ok(ln_s.sub(&ln_alpha_y))
}

/// KL from the uniform Dirichlet after replacing the ground-truth slot of
/// alpha with constant 1 (so no gradient reaches it). Returns a batch x 1
/// value.
pub fn loss_kl(tape: &Tape, alpha: &Value, labels: &[usize]) -> Result<Value> {
    let (rows, k) = check_batch(alpha, labels)?;
    let beta_m = one_hot(labels, k)?;
    let beta = tape.leaf(beta_m.clone());
    let complement = tape.leaf(beta_m.map(|b| 1.0 - b));
    // alpha with the true-class slot pinned to 1.
    let alpha_hat = beta.add(&complement.mul(alpha));

    let ones_k = ones_col(tape, k);
    let s_hat = alpha_hat.matmul(&ones_k);
    let lg_s = s_hat.lgamma();
    let sum_lg = alpha_hat.lgamma().matmul(&ones_k);
    let lg_k = tape.leaf(Matrix::filled(rows, 1, lgamma_raw(k as f64)));

    let ones_row = tape.leaf(Matrix::filled(1, k, 1.0));
    let psi_s = s_hat.digamma().matmul(&ones_row);
    let centered = alpha_hat.digamma().sub(&psi_s);
    let ones_mat = tape.leaf(Matrix::filled(rows, k, 1.0));
    let excess = alpha_hat.sub(&ones_mat);
    let cross = excess.mul(&centered).matmul(&ones_k);

    Ok(lg_s.sub(&sum_lg).sub(&lg_k).add(&cross))
}

/// Mean over the batch of lambda_mar * marginal + annealed-lambda_kl * KL.
/// `epoch` is the cumulative epoch counter driving the KL ramp.
pub fn loss_total(
    tape: &Tape,
    alpha: &Value,
    labels: &[usize],
    weights: &LossWeights,
    epoch: usize,
) -> Result<Value> {
    weights.validate()?;
    let (rows, _) = check_batch(alpha, labels)?;
    let mar = loss_marginal(tape, alpha, labels)?;
    let kl = loss_kl(tape, alpha, labels)?;
    let w_mar = tape.leaf(Matrix::filled(rows, 1, weights.lambda_mar));
    let w_kl = tape.leaf(Matrix::filled(rows, 1, weights.effective_kl(epoch)));
    Ok(mar.mul(&w_mar).add(&kl.mul(&w_kl)).mean())
}
