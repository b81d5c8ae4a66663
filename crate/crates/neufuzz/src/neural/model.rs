//! Architecture wiring: unidirectional stacks, bidirectional layers with sum
//! or concat merges, and the per-timestep encoder/decoder pairing. The final
//! layer's hidden width always equals `chunk_bits`; there is no output
//! projection, so per-bit outputs are an affine map of the last hidden state
//! onto `[0, 1]`.

use super::bits::{bytes_to_bits, chunk_and_pad};
use super::cell::{CellGrads, CellStep, LstmCellParams};
use super::dataset::SEGMENT_BYTES;
use super::{LayerSpec, ModelConfig, Scalar};
use ndarray::{concatenate, s, Array2, Axis};
use rand::Rng;

/// How the two directions of a bidirectional layer combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Merge {
    Sum,
    Concat,
}

#[derive(Debug, Clone)]
pub enum Layer<F> {
    Uni(LstmCellParams<F>),
    Bi { fwd: LstmCellParams<F>, bwd: LstmCellParams<F>, merge: Merge },
}

/// A complete model: configuration plus all learned tensors.
#[derive(Debug, Clone)]
pub struct Model<F> {
    pub config: ModelConfig,
    pub layers: Vec<Layer<F>>,
}

impl<F: Scalar> Model<F> {
    /// Fresh model with parameters drawn uniformly from `[-0.08, 0.08]`.
    pub fn new<R: Rng>(config: ModelConfig, rng: &mut R) -> Result<Self, super::NeuralError> {
        config.validate()?;
        Ok(Self::build(config, |input, hidden| LstmCellParams::init(input, hidden, 0.08, rng)))
    }

    /// All-zero parameters: every bit output is exactly 0.5.
    pub fn zeros(config: ModelConfig) -> Result<Self, super::NeuralError> {
        config.validate()?;
        Ok(Self::build(config, LstmCellParams::zeros))
    }

    fn build(config: ModelConfig, mut make: impl FnMut(usize, usize) -> LstmCellParams<F>) -> Self {
        let layers = config
            .layer_specs()
            .into_iter()
            .map(|spec| match spec {
                LayerSpec::Uni { input, hidden } => Layer::Uni(make(input, hidden)),
                LayerSpec::Bi { input, hidden_per_dir, merge } => Layer::Bi {
                    fwd: make(input, hidden_per_dir),
                    bwd: make(input, hidden_per_dir),
                    merge,
                },
            })
            .collect();
        Model { config, layers }
    }

    /// Assemble from existing layers (deserialization, tests). Dimensions are
    /// trusted, not revalidated against the config grid.
    pub(crate) fn from_layers(config: ModelConfig, layers: Vec<Layer<F>>) -> Self {
        Model { config, layers }
    }

    /// Cells in declaration order (forward before backward in bidirectional
    /// layers).
    pub fn cells(&self) -> Vec<&LstmCellParams<F>> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Uni(c) => out.push(c),
                Layer::Bi { fwd, bwd, .. } => {
                    out.push(fwd);
                    out.push(bwd);
                }
            }
        }
        out
    }

    pub fn cells_mut(&mut self) -> Vec<&mut LstmCellParams<F>> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Uni(c) => out.push(c),
                Layer::Bi { fwd, bwd, .. } => {
                    out.push(fwd);
                    out.push(bwd);
                }
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.cells().iter().map(|c| c.param_count()).sum()
    }

    /// Half-range of the last layer's raw output. The affine output map is
    /// `(h + r) / (2r)`: a unidirectional or concat-merged last layer emits
    /// values in `(-1, 1)`, a sum-merged pair in `(-2, 2)`.
    fn output_half_range(&self) -> F {
        match self.layers.last() {
            Some(Layer::Bi { merge: Merge::Sum, .. }) => F::from_f64(2.0),
            _ => F::one(),
        }
    }

    /// Run the network over a chunk sequence. Each element of `chunks` is a
    /// `(batch, chunk_bits)` array for one timestep.
    pub fn forward(&self, chunks: &[Array2<F>]) -> ForwardPass<F> {
        let mut inputs: Vec<Array2<F>> = chunks.to_vec();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (outs, cache) = layer_forward(layer, &inputs);
            caches.push(cache);
            inputs = outs;
        }
        let r = self.output_half_range();
        let scale = F::one() / (r + r);
        let outputs: Vec<Array2<F>> = inputs.iter().map(|h| h.mapv(|v| (v + r) * scale)).collect();
        ForwardPass { last_hidden: inputs, outputs, caches }
    }

    /// Backpropagate `d_outputs` (gradients with respect to the mapped
    /// outputs) through the whole network. Returns per-cell gradients in
    /// declaration order.
    pub fn backward(&self, pass: &ForwardPass<F>, d_outputs: &[Array2<F>]) -> Vec<CellGrads<F>> {
        let r = self.output_half_range();
        let scale = F::one() / (r + r);
        let mut dh_seq: Vec<Array2<F>> = d_outputs.iter().map(|d| d.mapv(|v| v * scale)).collect();

        let mut grads: Vec<Option<CellGrads<F>>> = vec![None; self.cells().len()];
        let mut cell_idx = self.cells().len();
        for (layer, cache) in self.layers.iter().zip(&pass.caches).rev() {
            match layer {
                Layer::Uni(cell) => {
                    cell_idx -= 1;
                    let mut g = CellGrads::zeros_like(cell);
                    let dx_seq = uni_backward(cell, cache.direction(0), &dh_seq, &mut g);
                    grads[cell_idx] = Some(g);
                    dh_seq = dx_seq;
                }
                Layer::Bi { fwd, bwd, merge } => {
                    cell_idx -= 2;
                    let hidden = fwd.hidden_dim();
                    let (dh_f, dh_b): (Vec<Array2<F>>, Vec<Array2<F>>) = match merge {
                        Merge::Sum => (dh_seq.clone(), dh_seq.clone()),
                        Merge::Concat => dh_seq
                            .iter()
                            .map(|d| {
                                (
                                    d.slice(s![.., ..hidden]).to_owned(),
                                    d.slice(s![.., hidden..]).to_owned(),
                                )
                            })
                            .unzip(),
                    };
                    let mut gf = CellGrads::zeros_like(fwd);
                    let dx_f = uni_backward(fwd, cache.direction(0), &dh_f, &mut gf);
                    let mut gb = CellGrads::zeros_like(bwd);
                    let dx_b = reversed_backward(bwd, cache.direction(1), &dh_b, &mut gb);
                    grads[cell_idx] = Some(gf);
                    grads[cell_idx + 1] = Some(gb);
                    dh_seq = dx_f.into_iter().zip(dx_b).map(|(a, b)| a + b).collect();
                }
            }
        }
        grads.into_iter().map(|g| g.expect("every cell visited")).collect()
    }

    /// Batch-of-one outputs on plain rows, skipping the training caches.
    /// Numerically this matches [`Model::forward`] up to float summation
    /// order (the cached path uses blocked matrix multiplies).
    pub fn outputs_single(&self, chunks: &[Vec<F>]) -> Vec<Vec<F>> {
        let mut rows: Vec<Vec<F>> = chunks.to_vec();
        for layer in &self.layers {
            rows = layer_outputs_single(layer, &rows);
        }
        let r = self.output_half_range();
        let scale = F::one() / (r + r);
        for row in &mut rows {
            for v in row {
                *v = (*v + r) * scale;
            }
        }
        rows
    }

    /// Per-byte heat for a whole file: segment, run each segment through the
    /// network, drop padding bits and average each byte's eight bit outputs.
    pub fn predict_heatmap(&self, x: &[u8]) -> Vec<F> {
        assert!(!x.is_empty(), "heat map of an empty input");
        let eighth = F::from_f64(1.0 / 8.0);
        let mut heat = Vec::with_capacity(x.len());
        for segment in x.chunks(SEGMENT_BYTES) {
            let bit_outputs = self.forward_bits(segment);
            for byte_bits in bit_outputs.chunks(8) {
                let sum = byte_bits.iter().fold(F::zero(), |acc, &v| acc + v);
                heat.push(sum * eighth);
            }
        }
        heat
    }

    /// Per-bit outputs for one segment-sized input (batch of one), truncated
    /// to the valid (pre-padding) bits.
    pub fn forward_bits(&self, segment: &[u8]) -> Vec<F> {
        let k = self.config.chunk_bits;
        let (chunks, valid) = chunk_and_pad(&bytes_to_bits(segment), k);
        let rows: Vec<Vec<F>> = chunks
            .iter()
            .map(|c| c.iter().map(|&b| if b == 1 { F::one() } else { F::zero() }).collect())
            .collect();
        let mut out: Vec<F> = self.outputs_single(&rows).into_iter().flatten().collect();
        out.truncate(valid);
        out
    }
}

fn layer_outputs_single<F: Scalar>(layer: &Layer<F>, inputs: &[Vec<F>]) -> Vec<Vec<F>> {
    match layer {
        Layer::Uni(cell) => {
            let mut h = vec![F::zero(); cell.hidden_dim()];
            let mut c = h.clone();
            inputs
                .iter()
                .map(|x| {
                    let (h2, c2) = cell.step_row(x, &h, &c);
                    h = h2;
                    c = c2;
                    h.clone()
                })
                .collect()
        }
        Layer::Bi { fwd, bwd, merge } => {
            let run = |cell: &LstmCellParams<F>, rev: bool| -> Vec<Vec<F>> {
                let mut h = vec![F::zero(); cell.hidden_dim()];
                let mut c = h.clone();
                let mut outs = Vec::with_capacity(inputs.len());
                let iter: Box<dyn Iterator<Item = &Vec<F>>> =
                    if rev { Box::new(inputs.iter().rev()) } else { Box::new(inputs.iter()) };
                for x in iter {
                    let (h2, c2) = cell.step_row(x, &h, &c);
                    h = h2;
                    c = c2;
                    outs.push(h.clone());
                }
                outs
            };
            let f_outs = run(fwd, false);
            let b_outs_rev = run(bwd, true);
            let t_len = inputs.len();
            (0..t_len)
                .map(|t| {
                    let b_out = &b_outs_rev[t_len - 1 - t];
                    match merge {
                        Merge::Sum => {
                            f_outs[t].iter().zip(b_out).map(|(&a, &b)| a + b).collect()
                        }
                        Merge::Concat => {
                            f_outs[t].iter().chain(b_out.iter()).copied().collect()
                        }
                    }
                })
                .collect()
        }
    }
}

/// Outputs and cached intermediates of one forward run.
pub struct ForwardPass<F> {
    /// Raw last-layer hidden states per timestep.
    pub last_hidden: Vec<Array2<F>>,
    /// Mapped per-bit outputs in `[0, 1]` per timestep.
    pub outputs: Vec<Array2<F>>,
    caches: Vec<LayerCache<F>>,
}

enum LayerCache<F> {
    Uni(Vec<CellStep<F>>),
    /// `bwd[j]` is the step that consumed chunk `T - 1 - j`.
    Bi(Vec<CellStep<F>>, Vec<CellStep<F>>),
}

impl<F> LayerCache<F> {
    fn direction(&self, dir: usize) -> &[CellStep<F>] {
        match (self, dir) {
            (LayerCache::Uni(steps), 0) => steps,
            (LayerCache::Bi(fwd, _), 0) => fwd,
            (LayerCache::Bi(_, bwd), 1) => bwd,
            _ => unreachable!(),
        }
    }
}

fn run_direction<'a, F: Scalar>(
    cell: &LstmCellParams<F>,
    inputs: impl Iterator<Item = &'a Array2<F>>,
    batch: usize,
) -> (Vec<Array2<F>>, Vec<CellStep<F>>) {
    let hidden = cell.hidden_dim();
    let mut h = Array2::zeros((batch, hidden));
    let mut c = h.clone();
    let mut outs = Vec::new();
    let mut steps = Vec::new();
    for x in inputs {
        let (step, h2, c2) = cell.forward_step(x, &h, &c);
        h = h2;
        c = c2;
        outs.push(h.clone());
        steps.push(step);
    }
    (outs, steps)
}

fn layer_forward<F: Scalar>(
    layer: &Layer<F>,
    inputs: &[Array2<F>],
) -> (Vec<Array2<F>>, LayerCache<F>) {
    let batch = inputs.first().map_or(0, |x| x.nrows());
    match layer {
        Layer::Uni(cell) => {
            let (outs, steps) = run_direction(cell, inputs.iter(), batch);
            (outs, LayerCache::Uni(steps))
        }
        Layer::Bi { fwd, bwd, merge } => {
            let (f_outs, f_steps) = run_direction(fwd, inputs.iter(), batch);
            let (b_outs_rev, b_steps) = run_direction(bwd, inputs.iter().rev(), batch);
            let t_len = inputs.len();
            let outs = (0..t_len)
                .map(|t| {
                    let b_out = &b_outs_rev[t_len - 1 - t];
                    match merge {
                        Merge::Sum => &f_outs[t] + b_out,
                        Merge::Concat => {
                            concatenate![Axis(1), f_outs[t].view(), b_out.view()]
                        }
                    }
                })
                .collect();
            (outs, LayerCache::Bi(f_steps, b_steps))
        }
    }
}

/// BPTT over a forward-direction cell: `dh_seq[t]` is the external gradient
/// into the hidden state at timestep `t`. Returns `dx` per timestep.
fn uni_backward<F: Scalar>(
    cell: &LstmCellParams<F>,
    steps: &[CellStep<F>],
    dh_seq: &[Array2<F>],
    grads: &mut CellGrads<F>,
) -> Vec<Array2<F>> {
    let t_len = steps.len();
    let mut dx_seq: Vec<Option<Array2<F>>> = vec![None; t_len];
    let mut dh_carry: Option<Array2<F>> = None;
    let mut dc_carry: Option<Array2<F>> = None;
    for t in (0..t_len).rev() {
        let dh_total = match &dh_carry {
            Some(carry) => &dh_seq[t] + carry,
            None => dh_seq[t].clone(),
        };
        let dc_in = match &dc_carry {
            Some(carry) => carry.clone(),
            None => Array2::zeros(dh_total.raw_dim()),
        };
        let (dx, dh_prev, dc_prev) = cell.backward_step(&steps[t], &dh_total, &dc_in, grads);
        dx_seq[t] = Some(dx);
        dh_carry = Some(dh_prev);
        dc_carry = Some(dc_prev);
    }
    dx_seq.into_iter().map(|d| d.unwrap()).collect()
}

/// BPTT over a backward-direction cell whose step `j` consumed chunk
/// `T - 1 - j`. The returned `dx` is re-indexed into chunk order.
fn reversed_backward<F: Scalar>(
    cell: &LstmCellParams<F>,
    steps: &[CellStep<F>],
    dh_seq: &[Array2<F>],
    grads: &mut CellGrads<F>,
) -> Vec<Array2<F>> {
    let t_len = steps.len();
    let reversed_dh: Vec<Array2<F>> = (0..t_len).map(|j| dh_seq[t_len - 1 - j].clone()).collect();
    let dx_by_step = uni_backward(cell, steps, &reversed_dh, grads);
    (0..t_len).map(|t| dx_by_step[t_len - 1 - t].clone()).collect()
}
