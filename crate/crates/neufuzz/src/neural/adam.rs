//! Adam with bias correction, operating on the flattened tensors of every
//! cell in declaration order.

use super::cell::{CellGrads, LstmCellParams};
use super::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { lr: 5e-5, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState<F> {
    m: Vec<CellGrads<F>>,
    v: Vec<CellGrads<F>>,
    t: u64,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(params: &[&LstmCellParams<F>]) -> Self {
        AdamState {
            m: params.iter().map(|p| CellGrads::zeros_like(p)).collect(),
            v: params.iter().map(|p| CellGrads::zeros_like(p)).collect(),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update. `params` and `grads` must align with the state's cell
/// order.
pub fn adam_step<F: Scalar>(
    params: &mut [&mut LstmCellParams<F>],
    grads: &[CellGrads<F>],
    state: &mut AdamState<F>,
    hp: &AdamParams,
) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.t += 1;
    let t = state.t as i32;
    let b1 = F::from_f64(hp.beta1);
    let b2 = F::from_f64(hp.beta2);
    let one = F::one();
    // Fold the bias corrections into a single step size.
    let corr1 = one - b1.powi(t);
    let corr2 = one - b2.powi(t);
    let lr = F::from_f64(hp.lr);
    let eps = F::from_f64(hp.eps);

    for ((p, g), (m, v)) in
        params.iter_mut().zip(grads).zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        let mut p_slices = p.tensor_slices_mut();
        let g_slices = g.tensor_slices();
        let mut m_slices = m.tensor_slices_mut();
        let mut v_slices = v.tensor_slices_mut();
        for tensor in 0..8 {
            let ps = &mut p_slices[tensor];
            let gs = g_slices[tensor];
            let ms = &mut m_slices[tensor];
            let vs = &mut v_slices[tensor];
            for k in 0..ps.len() {
                let grad = gs[k];
                ms[k] = b1 * ms[k] + (one - b1) * grad;
                vs[k] = b2 * vs[k] + (one - b2) * grad * grad;
                let m_hat = ms[k] / corr1;
                let v_hat = vs[k] / corr2;
                ps[k] = ps[k] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

impl<F: Scalar> CellGrads<F> {
    pub(crate) fn tensor_slices_mut(&mut self) -> [&mut [F]; 8] {
        [
            self.w_f.as_slice_mut().unwrap(),
            self.w_i.as_slice_mut().unwrap(),
            self.w_c.as_slice_mut().unwrap(),
            self.w_o.as_slice_mut().unwrap(),
            self.b_f.as_slice_mut().unwrap(),
            self.b_i.as_slice_mut().unwrap(),
            self.b_c.as_slice_mut().unwrap(),
            self.b_o.as_slice_mut().unwrap(),
        ]
    }
}
