//! Finite-difference verification of the backward pass.

use super::{Matrix, Tape, Value};
use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Outcome of a [`grad_check`] run.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// max over checked coordinates of |analytic - central difference|
    /// / max(1, |central difference|).
    pub max_rel_error: f64,
    /// Coordinates compared against finite differences.
    pub checked: usize,
    /// Coordinates excluded because the +h and -h evaluations took different
    /// relu/clamp branches (the perturbation straddles a kink).
    pub skipped_kinks: usize,
}

/// Compares analytic gradients of `f` against central finite differences for
/// every coordinate of every parameter.
///
/// `f` receives a fresh tape plus the parameters bound to it as leaves, and
/// must return a scalar loss built from tape primitives. A non-finite loss at
/// any evaluation point is an error naming the offending coordinate.
pub fn grad_check<F>(
    params: &BTreeMap<String, Matrix>,
    step: f64,
    mut f: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&Tape, &BTreeMap<String, Value>) -> Value,
{
    if !(1e-7..=1e-3).contains(&step) {
        return Err(Error::Usage(format!(
            "grad_check step must lie in [1e-7, 1e-3], got {step:e}"
        )));
    }

    let eval = |f: &mut F, params: &BTreeMap<String, Matrix>| -> Result<(f64, Vec<bool>)> {
        let tape = Tape::new();
        let bound: BTreeMap<String, Value> =
            params.iter().map(|(k, v)| (k.clone(), tape.leaf(v.clone()))).collect();
        let loss = f(&tape, &bound);
        let v = loss.item();
        Ok((v, tape.branch_signature()))
    };

    // Analytic pass.
    let tape = Tape::new();
    let bound: BTreeMap<String, Value> =
        params.iter().map(|(k, v)| (k.clone(), tape.leaf(v.clone()))).collect();
    let loss = f(&tape, &bound);
    let base = loss.item();
    if !base.is_finite() {
        return Err(Error::Numeric(format!("grad_check: non-finite loss {base} at base point")));
    }
    loss.backward()?;
    let grads: BTreeMap<String, Matrix> =
        bound.iter().map(|(k, v)| (k.clone(), v.grad())).collect();

    let mut report = GradCheckReport { max_rel_error: 0.0, checked: 0, skipped_kinks: 0 };
    for (name, mat) in params {
        for i in 0..mat.len() {
            let mut plus = params.clone();
            plus.get_mut(name).unwrap().data_mut()[i] += step;
            let (lp, sig_p) = eval(&mut f, &plus)?;
            let mut minus = params.clone();
            minus.get_mut(name).unwrap().data_mut()[i] -= step;
            let (lm, sig_m) = eval(&mut f, &minus)?;

            if !lp.is_finite() || !lm.is_finite() {
                return Err(Error::Numeric(format!(
                    "grad_check: non-finite loss near {name}[{i}] (f+ = {lp}, f- = {lm})"
                )));
            }
            if sig_p != sig_m {
                report.skipped_kinks += 1;
                continue;
            }

            let fd = (lp - lm) / (2.0 * step);
            let analytic = grads[name].data()[i];
            let rel = (analytic - fd).abs() / fd.abs().max(1.0);
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
            }
            report.checked += 1;
        }
    }
    Ok(report)
}
