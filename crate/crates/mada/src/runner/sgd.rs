//! SGD with momentum and decoupled weight decay.
//!
//! Update order per step, for each trainable parameter p with gradient g:
//! p <- p * (1 - lr * wd); v <- mu * v + g; p <- p - lr * v. The decay is a
//! multiplicative shrink applied before the momentum update, so it never
//! flows through the velocity.

use crate::diffcore::Matrix;
use crate::error::{Error, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: BTreeMap<String, Matrix>,
}

impl Sgd {
    /// Fresh optimizer with zero velocities.
    pub fn new(learning_rate: f64, momentum: f64, weight_decay: f64) -> Self {
        Sgd { learning_rate, momentum, weight_decay, velocity: BTreeMap::new() }
    }

    /// Applies one update to every named parameter. Missing gradients and
    /// shape mismatches are usage errors.
    pub fn step(
        &mut self,
        params: &mut BTreeMap<String, Matrix>,
        grads: &BTreeMap<String, Matrix>,
        keys: &[String],
    ) -> Result<()> {
        let shrink = 1.0 - self.learning_rate * self.weight_decay;
        for key in keys {
            let p = params
                .get_mut(key)
                .ok_or_else(|| Error::Usage(format!("unknown parameter {key:?}")))?;
            let g = grads
                .get(key)
                .ok_or_else(|| Error::Usage(format!("no gradient for {key:?}")))?;
            if g.shape() != p.shape() {
                return Err(Error::Usage(format!(
                    "gradient shape {:?} does not match parameter {key:?} {:?}",
                    g.shape(),
                    p.shape()
                )));
            }
            let v = self
                .velocity
                .entry(key.clone())
                .or_insert_with(|| Matrix::zeros(p.rows(), p.cols()));
            let (pd, vd, gd) = (p.data_mut(), v.data_mut(), g.data());
            for i in 0..pd.len() {
                pd[i] *= shrink;
                vd[i] = self.momentum * vd[i] + gd[i];
                pd[i] -= self.learning_rate * vd[i];
            }
        }
        Ok(())
    }
}
