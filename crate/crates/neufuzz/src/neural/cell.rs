//! One LSTM cell: the five gate equations forward, and their exact reverse
//! for backpropagation through time.
//!
//! Gates operate on the concatenation `[x_t, h_{t-1}]`:
//!
//! ```text
//! f_t = sigmoid(W_f . [x_t, h_{t-1}] + b_f)
//! i_t = sigmoid(W_i . [x_t, h_{t-1}] + b_i)
//! C_t = f_t * C_{t-1} + i_t * tanh(W_C . [x_t, h_{t-1}] + b_C)
//! o_t = sigmoid(W_o . [x_t, h_{t-1}] + b_o)
//! h_t = o_t * tanh(C_t)
//! ```

use super::Scalar;
use ndarray::{concatenate, Array1, Array2, Axis};
use rand::Rng;

/// Weights and biases of one cell. Weight matrices are
/// `(input_dim + hidden_dim) x hidden_dim`; biases are `hidden_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams<F> {
    pub w_f: Array2<F>,
    pub w_i: Array2<F>,
    pub w_c: Array2<F>,
    pub w_o: Array2<F>,
    pub b_f: Array1<F>,
    pub b_i: Array1<F>,
    pub b_c: Array1<F>,
    pub b_o: Array1<F>,
}

impl<F: Scalar> LstmCellParams<F> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let w = || Array2::zeros((input_dim + hidden_dim, hidden_dim));
        let b = || Array1::zeros(hidden_dim);
        LstmCellParams {
            w_f: w(),
            w_i: w(),
            w_c: w(),
            w_o: w(),
            b_f: b(),
            b_i: b(),
            b_c: b(),
            b_o: b(),
        }
    }

    /// Uniform initialization in `[-scale, scale]`.
    pub fn init<R: Rng>(input_dim: usize, hidden_dim: usize, scale: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        for slice in p.tensor_slices_mut() {
            for v in slice {
                *v = F::from_f64(rng.gen_range(-scale..=scale));
            }
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w_f.nrows() - self.hidden_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_f.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.tensor_slices().iter().map(|s| s.len()).sum()
    }

    /// All tensors flattened, in declaration order:
    /// `W_f, W_i, W_C, W_o, b_f, b_i, b_C, b_o`.
    pub fn tensor_slices(&self) -> [&[F]; 8] {
        [
            self.w_f.as_slice().unwrap(),
            self.w_i.as_slice().unwrap(),
            self.w_c.as_slice().unwrap(),
            self.w_o.as_slice().unwrap(),
            self.b_f.as_slice().unwrap(),
            self.b_i.as_slice().unwrap(),
            self.b_c.as_slice().unwrap(),
            self.b_o.as_slice().unwrap(),
        ]
    }

    pub fn tensor_slices_mut(&mut self) -> [&mut [F]; 8] {
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

    /// One timestep over a batch. `x` is `(batch, input_dim)`; `h_prev` and
    /// `c_prev` are `(batch, hidden_dim)`.
    pub fn forward_step(
        &self,
        x: &Array2<F>,
        h_prev: &Array2<F>,
        c_prev: &Array2<F>,
    ) -> (CellStep<F>, Array2<F>, Array2<F>) {
        let z = concatenate![Axis(1), x.view(), h_prev.view()];
        let f = gate(&z, &self.w_f, &self.b_f, sigmoid);
        let i = gate(&z, &self.w_i, &self.b_i, sigmoid);
        let g = gate(&z, &self.w_c, &self.b_c, F::tanh);
        let o = gate(&z, &self.w_o, &self.b_o, sigmoid);
        let c = &f * c_prev + &i * &g;
        let tanh_c = c.mapv(F::tanh);
        let h = &o * &tanh_c;
        let step = CellStep { z, f, i, g, o, c_prev: c_prev.clone(), tanh_c };
        (step, h, c)
    }

    /// Reverse one timestep. `dh` and `dc` are the gradients flowing into
    /// `h_t` and `C_t`. Accumulates parameter gradients into `grads` and
    /// returns `(dx, dh_prev, dc_prev)`.
    pub fn backward_step(
        &self,
        step: &CellStep<F>,
        dh: &Array2<F>,
        dc_in: &Array2<F>,
        grads: &mut CellGrads<F>,
    ) -> (Array2<F>, Array2<F>, Array2<F>) {
        let one = F::one();
        let d_o = dh * &step.tanh_c;
        let dzo = &d_o * &step.o.mapv(|v| v * (one - v));
        let dc = dc_in + &(dh * &step.o * &step.tanh_c.mapv(|v| one - v * v));
        let df = &dc * &step.c_prev;
        let dzf = &df * &step.f.mapv(|v| v * (one - v));
        let di = &dc * &step.g;
        let dzi = &di * &step.i.mapv(|v| v * (one - v));
        let dg = &dc * &step.i;
        let dzg = &dg * &step.g.mapv(|v| one - v * v);

        let zt = step.z.t();
        grads.w_f = &grads.w_f + &zt.dot(&dzf);
        grads.w_i = &grads.w_i + &zt.dot(&dzi);
        grads.w_c = &grads.w_c + &zt.dot(&dzg);
        grads.w_o = &grads.w_o + &zt.dot(&dzo);
        grads.b_f = &grads.b_f + &dzf.sum_axis(Axis(0));
        grads.b_i = &grads.b_i + &dzi.sum_axis(Axis(0));
        grads.b_c = &grads.b_c + &dzg.sum_axis(Axis(0));
        grads.b_o = &grads.b_o + &dzo.sum_axis(Axis(0));

        let dz = dzf.dot(&self.w_f.t())
            + dzi.dot(&self.w_i.t())
            + dzg.dot(&self.w_c.t())
            + dzo.dot(&self.w_o.t());
        let input_dim = self.input_dim();
        let dx = dz.slice(ndarray::s![.., ..input_dim]).to_owned();
        let dh_prev = dz.slice(ndarray::s![.., input_dim..]).to_owned();
        let dc_prev = &dc * &step.f;
        (dx, dh_prev, dc_prev)
    }
}

impl<F: Scalar> LstmCellParams<F> {
    /// Batch-of-one timestep on plain slices, without building the training
    /// cache. This is the inference path: heat-map queries and the
    /// finite-difference oracle run it millions of times, where per-call
    /// matrix-multiply setup would dominate.
    pub(crate) fn step_row(&self, x: &[F], h_prev: &[F], c_prev: &[F]) -> (Vec<F>, Vec<F>) {
        let hidden = self.hidden_dim();
        debug_assert_eq!(x.len() + h_prev.len(), self.w_f.nrows());
        let mut f = self.b_f.to_vec();
        let mut i = self.b_i.to_vec();
        let mut g = self.b_c.to_vec();
        let mut o = self.b_o.to_vec();
        let wf = self.w_f.as_slice().unwrap();
        let wi = self.w_i.as_slice().unwrap();
        let wc = self.w_c.as_slice().unwrap();
        let wo = self.w_o.as_slice().unwrap();
        for (row, &zv) in x.iter().chain(h_prev.iter()).enumerate() {
            if zv == F::zero() {
                continue;
            }
            let base = row * hidden;
            for j in 0..hidden {
                f[j] = f[j] + zv * wf[base + j];
                i[j] = i[j] + zv * wi[base + j];
                g[j] = g[j] + zv * wc[base + j];
                o[j] = o[j] + zv * wo[base + j];
            }
        }
        let mut c = Vec::with_capacity(hidden);
        let mut h = Vec::with_capacity(hidden);
        for j in 0..hidden {
            let fj = sigmoid(f[j]);
            let ij = sigmoid(i[j]);
            let gj = g[j].tanh();
            let oj = sigmoid(o[j]);
            let cj = fj * c_prev[j] + ij * gj;
            c.push(cj);
            h.push(oj * cj.tanh());
        }
        (h, c)
    }
}

fn gate<F: Scalar>(
    z: &Array2<F>,
    w: &Array2<F>,
    b: &Array1<F>,
    activation: fn(F) -> F,
) -> Array2<F> {
    (z.dot(w) + b).mapv(activation)
}

fn sigmoid<F: Scalar>(v: F) -> F {
    F::one() / (F::one() + (-v).exp())
}

/// Intermediate values of one timestep, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct CellStep<F> {
    pub z: Array2<F>,
    pub f: Array2<F>,
    pub i: Array2<F>,
    pub g: Array2<F>,
    pub o: Array2<F>,
    pub c_prev: Array2<F>,
    pub tanh_c: Array2<F>,
}

/// Gradient accumulator with the same shape as [`LstmCellParams`].
#[derive(Debug, Clone)]
pub struct CellGrads<F> {
    pub w_f: Array2<F>,
    pub w_i: Array2<F>,
    pub w_c: Array2<F>,
    pub w_o: Array2<F>,
    pub b_f: Array1<F>,
    pub b_i: Array1<F>,
    pub b_c: Array1<F>,
    pub b_o: Array1<F>,
}

impl<F: Scalar> CellGrads<F> {
    pub fn zeros_like(p: &LstmCellParams<F>) -> Self {
        CellGrads {
            w_f: Array2::zeros(p.w_f.raw_dim()),
            w_i: Array2::zeros(p.w_i.raw_dim()),
            w_c: Array2::zeros(p.w_c.raw_dim()),
            w_o: Array2::zeros(p.w_o.raw_dim()),
            b_f: Array1::zeros(p.b_f.raw_dim()),
            b_i: Array1::zeros(p.b_i.raw_dim()),
            b_c: Array1::zeros(p.b_c.raw_dim()),
            b_o: Array1::zeros(p.b_o.raw_dim()),
        }
    }

    pub fn tensor_slices(&self) -> [&[F]; 8] {
        [
            self.w_f.as_slice().unwrap(),
            self.w_i.as_slice().unwrap(),
            self.w_c.as_slice().unwrap(),
            self.w_o.as_slice().unwrap(),
            self.b_f.as_slice().unwrap(),
            self.b_i.as_slice().unwrap(),
            self.b_c.as_slice().unwrap(),
            self.b_o.as_slice().unwrap(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn batch1(vals: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((1, vals.len()), vals.to_vec()).unwrap()
    }

    #[test]
    fn zero_parameters_force_zero_hidden() {
        // o_t = 0.5 but tanh(C_t) = 0, so h_t = 0.
        let cell = LstmCellParams::<f64>::zeros(3, 2);
        let x = batch1(&[0.3, -1.0, 2.0]);
        let h0 = Array2::zeros((1, 2));
        let c0 = Array2::zeros((1, 2));
        let (_, h, c) = cell.forward_step(&x, &h0, &c0);
        assert!(h.iter().all(|&v| v == 0.0));
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_gates_preserve_cell_state() {
        // Large +bias on the forget gate and large -bias on the input gate
        // drive f to 1 and i to 0, so C_t must equal C_{t-1}.
        let mut cell = LstmCellParams::<f64>::zeros(2, 2);
        cell.b_f.fill(40.0);
        cell.b_i.fill(-40.0);
        let x = batch1(&[0.5, -0.5]);
        let h0 = Array2::zeros((1, 2));
        let c0 = batch1(&[0.7, -0.2]);
        let (_, _, c) = cell.forward_step(&x, &h0, &c0);
        for (a, b) in c.iter().zip(c0.iter()) {
            assert!((a - b).abs() < 1e-12, "C_t drifted: {a} vs {b}");
        }
    }

    #[test]
    fn scalar_case_matches_direct_evaluation() {
        // 1-dim input, 1-dim hidden: evaluate the five equations by hand.
        let mut cell = LstmCellParams::<f64>::zeros(1, 1);
        cell.w_f[[0, 0]] = 0.25;
        cell.w_f[[1, 0]] = -0.5;
        cell.w_i[[0, 0]] = 0.9;
        cell.w_i[[1, 0]] = 0.1;
        cell.w_c[[0, 0]] = -1.2;
        cell.w_c[[1, 0]] = 0.3;
        cell.w_o[[0, 0]] = 0.7;
        cell.w_o[[1, 0]] = -0.8;
        cell.b_f[0] = 0.1;
        cell.b_i[0] = -0.2;
        cell.b_c[0] = 0.05;
        cell.b_o[0] = 0.4;

        let (x, h_prev, c_prev) = (0.6, -0.3, 0.8);
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let f = sig(0.25 * x + -0.5 * h_prev + 0.1);
        let i = sig(0.9 * x + 0.1 * h_prev + -0.2);
        let g = (-1.2 * x + 0.3 * h_prev + 0.05).tanh();
        let o = sig(0.7 * x + -0.8 * h_prev + 0.4);
        let c = f * c_prev + i * g;
        let h = o * c.tanh();

        let (_, got_h, got_c) =
            cell.forward_step(&batch1(&[x]), &batch1(&[h_prev]), &batch1(&[c_prev]));
        assert!((got_c[[0, 0]] - c).abs() < 1e-15);
        assert!((got_h[[0, 0]] - h).abs() < 1e-15);
    }

    #[test]
    fn single_step_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cell = LstmCellParams::<f64>::init(3, 2, 0.5, &mut rng);
        let x = batch1(&[0.3, -0.6, 0.9]);
        let h0 = batch1(&[0.1, -0.4]);
        let c0 = batch1(&[0.2, 0.5]);

        // Loss: sum of h_t elements.
        let loss = |cell: &LstmCellParams<f64>| -> f64 {
            let (_, h, _) = cell.forward_step(&x, &h0, &c0);
            h.sum()
        };

        let (step, h, _) = cell.forward_step(&x, &h0, &c0);
        let mut grads = CellGrads::zeros_like(&cell);
        let dh = Array2::from_elem(h.raw_dim(), 1.0);
        let dc = Array2::zeros(h.raw_dim());
        cell.backward_step(&step, &dh, &dc, &mut grads);

        let eps = 1e-6;
        for t in 0..8 {
            let n = cell.tensor_slices()[t].len();
            for idx in 0..n {
                let orig = cell.tensor_slices()[t][idx];
                cell.tensor_slices_mut()[t][idx] = orig + eps;
                let up = loss(&cell);
                cell.tensor_slices_mut()[t][idx] = orig - eps;
                let down = loss(&cell);
                cell.tensor_slices_mut()[t][idx] = orig;
                let fd = (up - down) / (2.0 * eps);
                let bp = grads.tensor_slices()[t][idx];
                assert!(
                    (fd - bp).abs() <= 1e-7 + 1e-5 * fd.abs().max(bp.abs()),
                    "tensor {t} index {idx}: fd={fd} bp={bp}"
                );
            }
        }
    }
}
