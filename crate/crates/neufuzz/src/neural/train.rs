//! Training loop: bin-proportional sampling, minibatch MAE gradients, Adam.

use super::adam::{adam_step, AdamParams, AdamState};
use super::dataset::{Dataset, TrainingExample};
use super::model::Model;
use super::{ModelConfig, NeuralError, Scalar};
use ndarray::Array2;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch: usize,
    pub adam: AdamParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { steps: 20_000, batch: 32, adam: AdamParams::default() }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub loss_history: Vec<f64>,
    pub final_loss: f64,
}

/// Mean absolute error over the first `valid` positions.
pub fn mae_loss<F: Scalar>(pred: &[F], y: &[u8], valid: usize) -> F {
    assert!(valid > 0, "mae_loss over zero valid bits");
    assert!(pred.len() >= valid && y.len() >= valid);
    let mut acc = F::zero();
    for j in 0..valid {
        let target = if y[j] == 1 { F::one() } else { F::zero() };
        acc = acc + (pred[j] - target).abs();
    }
    acc / F::from_f64(valid as f64)
}

/// Train a fresh model on the dataset. Each step samples a bin with
/// probability proportional to its example count, draws a minibatch (with
/// replacement when the bin is smaller than the batch), averages per-example
/// MAE gradients and applies one Adam update.
pub fn train<F: Scalar, R: Rng>(
    ds: &Dataset,
    config: ModelConfig,
    tc: &TrainConfig,
    rng: &mut R,
) -> Result<(Model<F>, TrainReport), NeuralError> {
    if ds.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    assert_eq!(ds.chunk_bits, config.chunk_bits, "dataset binned for a different chunk width");
    let mut model = Model::new(config, rng)?;
    let mut state = AdamState::new(&model.cells());

    let bins: Vec<(usize, &Vec<TrainingExample>)> =
        ds.bins.iter().map(|(&t, v)| (t, v)).collect();
    let counts: Vec<usize> = bins.iter().map(|(_, v)| v.len()).collect();

    let mut history = Vec::with_capacity(tc.steps);
    for _ in 0..tc.steps {
        let (t_len, examples) = bins[sample_bin_index(&counts, rng)];
        let picked = sample_examples(examples.len(), tc.batch, rng);
        let batch = assemble_batch::<F>(examples, &picked, t_len, config.chunk_bits);

        let (loss, grads) = loss_and_grads(&model, &batch.chunks, &batch.targets, &batch.weights);
        adam_step(&mut model.cells_mut(), &grads, &mut state, &tc.adam);
        history.push(loss.to_f64());
    }

    let final_loss = history.last().copied().unwrap_or(f64::NAN);
    Ok((model, TrainReport { loss_history: history, final_loss }))
}

/// Forward pass plus weighted-MAE loss. `weights` carries the per-bit loss
/// coefficients (zero on padding), exactly as in training.
pub fn weighted_loss<F: Scalar>(
    model: &Model<F>,
    chunks: &[Array2<F>],
    targets: &[Array2<F>],
    weights: &[Array2<F>],
) -> F {
    let pass = model.forward(chunks);
    let (loss, _) = mae_batch_grad(&pass.outputs, targets, weights);
    loss
}

/// Loss and exact parameter gradients via backpropagation through time.
pub fn loss_and_grads<F: Scalar>(
    model: &Model<F>,
    chunks: &[Array2<F>],
    targets: &[Array2<F>],
    weights: &[Array2<F>],
) -> (F, Vec<crate::neural::CellGrads<F>>) {
    let pass = model.forward(chunks);
    let (loss, d_out) = mae_batch_grad(&pass.outputs, targets, weights);
    (loss, model.backward(&pass, &d_out))
}

/// Pick a bin index with probability proportional to its count.
pub(crate) fn sample_bin_index<R: Rng>(counts: &[usize], rng: &mut R) -> usize {
    let total: usize = counts.iter().sum();
    let mut r = rng.gen_range(0..total);
    for (i, &c) in counts.iter().enumerate() {
        if r < c {
            return i;
        }
        r -= c;
    }
    counts.len() - 1
}

/// Indices of the minibatch: distinct when the bin is large enough, with
/// replacement otherwise.
fn sample_examples<R: Rng>(bin_len: usize, batch: usize, rng: &mut R) -> Vec<usize> {
    if bin_len < batch {
        return (0..batch).map(|_| rng.gen_range(0..bin_len)).collect();
    }
    let mut indices: Vec<usize> = (0..bin_len).collect();
    for i in 0..batch {
        let j = rng.gen_range(i..bin_len);
        indices.swap(i, j);
    }
    indices.truncate(batch);
    indices
}

struct BatchArrays<F> {
    chunks: Vec<Array2<F>>,
    targets: Vec<Array2<F>>,
    weights: Vec<Array2<F>>,
}

/// Lay a minibatch out as per-timestep `(batch, chunk_bits)` arrays. The
/// weight of a valid bit folds in both the per-example mean (1/valid) and the
/// batch mean (1/batch); padding weighs zero so it contributes neither loss
/// nor gradient.
fn assemble_batch<F: Scalar>(
    examples: &[TrainingExample],
    picked: &[usize],
    t_len: usize,
    chunk_bits: usize,
) -> BatchArrays<F> {
    let b = picked.len();
    let mut chunks = vec![Array2::zeros((b, chunk_bits)); t_len];
    let mut targets = vec![Array2::zeros((b, chunk_bits)); t_len];
    let mut weights = vec![Array2::zeros((b, chunk_bits)); t_len];
    for (row, &idx) in picked.iter().enumerate() {
        let example = &examples[idx];
        let bits = super::bits::bytes_to_bits(&example.x);
        let valid = bits.len();
        debug_assert_eq!(example.y.len(), valid);
        let w = F::from_f64(1.0 / (b as f64 * valid as f64));
        for j in 0..valid {
            let (t, col) = (j / chunk_bits, j % chunk_bits);
            if bits[j] == 1 {
                chunks[t][(row, col)] = F::one();
            }
            if example.y[j] == 1 {
                targets[t][(row, col)] = F::one();
            }
            weights[t][(row, col)] = w;
        }
    }
    BatchArrays { chunks, targets, weights }
}

/// Weighted MAE and its gradient with respect to the mapped outputs.
fn mae_batch_grad<F: Scalar>(
    outputs: &[Array2<F>],
    targets: &[Array2<F>],
    weights: &[Array2<F>],
) -> (F, Vec<Array2<F>>) {
    let mut loss = F::zero();
    let mut d_out = Vec::with_capacity(outputs.len());
    for ((out, tgt), w) in outputs.iter().zip(targets).zip(weights) {
        let mut d = Array2::zeros(out.raw_dim());
        ndarray::Zip::from(&mut d).and(out).and(tgt).and(w).for_each(|d, &o, &t, &w| {
            let diff = o - t;
            loss = loss + w * diff.abs();
            *d = if diff > F::zero() {
                w
            } else if diff < F::zero() {
                -w
            } else {
                F::zero()
            };
        });
        d_out.push(d);
    }
    (loss, d_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::dataset::{build_dataset, SampleRecord};
    use crate::neural::Arch;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mae_loss_examples() {
        assert_eq!(mae_loss(&[0.0f64, 1.0, 0.0], &[0, 1, 0], 3), 0.0);
        assert_eq!(mae_loss(&[0.5f64; 4], &[0, 1, 1, 0], 4), 0.5);
        let loss = mae_loss(&[0.2f64, 0.8], &[0, 1], 2);
        assert!((loss - 0.2).abs() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn mae_loss_rejects_zero_valid() {
        mae_loss(&[0.5f64], &[1], 0);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let ds = Dataset { chunk_bits: 64, bins: Default::default() };
        let config = ModelConfig::new(Arch::Lstm, 1, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            train::<f32, _>(&ds, config, &TrainConfig::default(), &mut rng),
            Err(NeuralError::EmptyDataset)
        ));
    }

    #[test]
    fn zero_steps_returns_initialization() {
        let records = vec![SampleRecord { x: vec![1, 2, 3], x_prime: vec![1, 0, 3], score: 1 }];
        let ds = build_dataset(&records, 0, 64);
        let config = ModelConfig::new(Arch::Lstm, 1, 64).unwrap();
        let tc = TrainConfig { steps: 0, ..Default::default() };
        let mut rng_a = ChaCha8Rng::seed_from_u64(4);
        let (trained, report) = train::<f32, _>(&ds, config, &tc, &mut rng_a).unwrap();
        let mut rng_b = ChaCha8Rng::seed_from_u64(4);
        let fresh = Model::<f32>::new(config, &mut rng_b).unwrap();
        assert!(report.loss_history.is_empty());
        for (a, b) in trained.cells().iter().zip(fresh.cells().iter()) {
            assert_eq!(a.tensor_slices(), b.tensor_slices());
        }
    }

    #[test]
    fn overfits_a_single_example() {
        let x = vec![0x11u8; 24];
        let mut xp = x.clone();
        xp[3] ^= 0xFF;
        xp[17] ^= 0x0F;
        let ds = build_dataset(&[SampleRecord { x, x_prime: xp, score: 5 }], 0, 64);
        let config = ModelConfig::new(Arch::Lstm, 1, 64).unwrap();
        let tc = TrainConfig {
            steps: 500,
            batch: 4,
            adam: AdamParams { lr: 1e-3, ..Default::default() },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (_, report) = train::<f32, _>(&ds, config, &tc, &mut rng).unwrap();
        assert!(
            report.final_loss < 0.5,
            "failed to beat the constant-0.5 predictor: {}",
            report.final_loss
        );
        assert!(report.final_loss < report.loss_history[0]);
    }

    #[test]
    fn training_is_deterministic() {
        let records: Vec<SampleRecord> = (0..8)
            .map(|i| {
                let x = vec![i as u8; 16];
                let mut xp = x.clone();
                xp[i % 16] ^= 0x81;
                SampleRecord { x, x_prime: xp, score: 1 }
            })
            .collect();
        let ds = build_dataset(&records, 0, 64);
        let config = ModelConfig::new(Arch::Lstm, 1, 64).unwrap();
        let tc = TrainConfig { steps: 25, ..Default::default() };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            train::<f32, _>(&ds, config, &tc, &mut rng).unwrap()
        };
        let (m1, r1) = run();
        let (m2, r2) = run();
        assert_eq!(r1.loss_history, r2.loss_history);
        for (a, b) in m1.cells().iter().zip(m2.cells().iter()) {
            assert_eq!(a.tensor_slices(), b.tensor_slices());
        }
    }

    #[test]
    fn bin_sampling_tracks_proportions() {
        let counts = [3_000usize, 7_000];
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let mut hits = [0u32; 2];
        let draws = 10_000;
        for _ in 0..draws {
            hits[sample_bin_index(&counts, &mut rng)] += 1;
        }
        for (h, &c) in hits.iter().zip(&counts) {
            let expected = c as f64 / 10_000.0;
            let got = *h as f64 / draws as f64;
            assert!((got - expected).abs() < 0.05, "freq {got} vs proportion {expected}");
        }
    }
}
