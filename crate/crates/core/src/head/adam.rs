use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(len: usize) -> Self {
        Self {
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(
    state: &mut OptimizerState,
    params: &mut DenseMatrix,
    grad: &DenseMatrix,
    cfg: &AdamParams,
) -> Result<()> {
    let len = params.as_slice().len();
    if grad.shape() != params.shape() || state.first_moment.len() != len {
        return Err(Error::Shape {
            op: "adam_step",
            left: params.shape(),
            right: grad.shape(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);

    let m = &mut state.first_moment;
    let v = &mut state.second_moment;
    for (((p, &g), m), v) in params
        .as_mut_slice()
        .iter_mut()
        .zip(grad.as_slice())
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}
