use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// First and second moment estimates for a fixed list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<DenseMatrix>,
    v: Vec<DenseMatrix>,
}

impl AdamState {
    pub fn new(shapes: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let m: Vec<_> = shapes
            .into_iter()
            .map(|(r, c)| DenseMatrix::zeros(r, c))
            .collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            v: m.clone(),
            m,
        }
    }

    pub fn for_params(params: &[&DenseMatrix]) -> Self {
        Self::new(params.iter().map(|p| p.shape()))
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update. Weight decay is added to the gradient as `wd * θ`.
pub fn adam_step(
    params: &mut [&mut DenseMatrix],
    grads: &[DenseMatrix],
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::dim(
            "adam_step",
            format!(
                "{} params, {} grads, {} moment slots",
                params.len(),
                grads.len(),
                state.m.len()
            ),
        ));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || p.shape() != state.m[i].shape() {
            return Err(Error::dim(
                "adam_step",
                format!("tensor {i}: param {:?}, grad {:?}", p.shape(), g.shape()),
            ));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        let theta = p.as_mut_slice();
        for (((th, &gi), mi), vi) in theta
            .iter_mut()
            .zip(g.as_slice())
            .zip(m.as_mut_slice())
            .zip(v.as_mut_slice())
        {
            let grad = gi + weight_decay * *th;
            *mi = b1 * *mi + (1.0 - b1) * grad;
            *vi = b2 * *vi + (1.0 - b2) * grad * grad;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *th -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
