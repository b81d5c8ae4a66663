//! The byte sieve's model stack, built from scratch: bit-level input
//! encoding, an LSTM cell with exact backpropagation through time, the
//! unidirectional / bidirectional / encoder-decoder wirings, MAE loss, Adam,
//! the dataset pipeline and the training loop.
//!
//! Models consume and emit `chunk_bits` bits per timestep. A heat map for a
//! file is reconstituted by averaging each byte's eight bit outputs.

mod adam;
mod bits;
mod cell;
mod dataset;
mod io;
mod model;
mod train;

pub use adam::{adam_step, AdamParams, AdamState};
pub use bits::{bytes_to_bits, chunk_and_pad};
pub use cell::{CellGrads, CellStep, LstmCellParams};
pub use dataset::{
    build_dataset, read_samples, Dataset, SampleRecord, SampleWriter, TrainingExample,
    SEGMENT_BYTES,
};
pub use io::{load_model, save_model};
pub use model::{ForwardPass, Layer, Merge, Model};
pub use train::{loss_and_grads, mae_loss, train, weighted_loss, TrainConfig, TrainReport};

use ndarray::LinalgScalar;
use num_traits::Float;

/// Floating-point element type for model math. Training uses `f32`;
/// gradient-check mode uses `f64`.
pub trait Scalar:
    LinalgScalar + Float + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NeuralError {
    #[error("unsupported model configuration: {0}")]
    UnsupportedConfig(String),
    #[error("empty dataset after filtering")]
    EmptyDataset,
    #[error("bad model file: {0}")]
    BadModelFile(String),
    #[error("bad sample file: {0}")]
    BadSampleFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Supported recurrent architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    /// Unidirectional LSTM stack.
    Lstm,
    /// Bidirectional first stage: sum-merged at one layer, concat-merged at
    /// two (where the second layer is unidirectional).
    BiLstm,
    /// One bidirectional encoding layer (concat merge) feeding one
    /// unidirectional decoding layer, aligned per timestep.
    Seq2Seq,
}

impl Arch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Arch::Lstm => "lstm",
            Arch::BiLstm => "bilstm",
            Arch::Seq2Seq => "seq2seq",
        }
    }

    pub fn parse(s: &str) -> Option<Arch> {
        match s {
            "lstm" => Some(Arch::Lstm),
            "bilstm" => Some(Arch::BiLstm),
            "seq2seq" => Some(Arch::Seq2Seq),
            _ => None,
        }
    }

    pub(crate) fn id(&self) -> u8 {
        match self {
            Arch::Lstm => 0,
            Arch::BiLstm => 1,
            Arch::Seq2Seq => 2,
        }
    }

    pub(crate) fn from_id(id: u8) -> Option<Arch> {
        match id {
            0 => Some(Arch::Lstm),
            1 => Some(Arch::BiLstm),
            2 => Some(Arch::Seq2Seq),
            _ => None,
        }
    }
}

impl std::fmt::Display for Arch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Architecture, depth and chunk width of one model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub arch: Arch,
    pub layers: usize,
    pub chunk_bits: usize,
}

/// How a layer's cells are shaped and how a bidirectional pair is merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LayerSpec {
    Uni { input: usize, hidden: usize },
    Bi { input: usize, hidden_per_dir: usize, merge: Merge },
}

impl ModelConfig {
    pub fn new(arch: Arch, layers: usize, chunk_bits: usize) -> Result<Self, NeuralError> {
        let config = ModelConfig { arch, layers, chunk_bits };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if !matches!(self.chunk_bits, 64 | 128) {
            return Err(NeuralError::UnsupportedConfig(format!(
                "chunk_bits must be 64 or 128, got {}",
                self.chunk_bits
            )));
        }
        if !matches!(self.layers, 1 | 2) {
            return Err(NeuralError::UnsupportedConfig(format!(
                "layers must be 1 or 2, got {}",
                self.layers
            )));
        }
        if self.arch == Arch::Seq2Seq && self.layers != 2 {
            return Err(NeuralError::UnsupportedConfig(
                "seq2seq needs exactly one encoding and one decoding layer".into(),
            ));
        }
        Ok(())
    }

    /// Layer shapes in stacking order. The hidden sizes follow the published
    /// parameter grid: one-layer nets use `chunk_bits` per direction; the
    /// two-layer bidirectional nets halve the per-direction width in the
    /// first layer and concatenate, so the unidirectional second layer again
    /// sees `chunk_bits` inputs.
    pub(crate) fn layer_specs(&self) -> Vec<LayerSpec> {
        let k = self.chunk_bits;
        match (self.arch, self.layers) {
            (Arch::Lstm, n) => (0..n).map(|_| LayerSpec::Uni { input: k, hidden: k }).collect(),
            (Arch::BiLstm, 1) => {
                vec![LayerSpec::Bi { input: k, hidden_per_dir: k, merge: Merge::Sum }]
            }
            (Arch::BiLstm | Arch::Seq2Seq, 2) => vec![
                LayerSpec::Bi { input: k, hidden_per_dir: k / 2, merge: Merge::Concat },
                LayerSpec::Uni { input: k, hidden: k },
            ],
            _ => unreachable!("validated configs only"),
        }
    }

    /// `(input_dim, hidden_dim)` of every cell in declaration order
    /// (forward before backward within a bidirectional layer).
    pub fn cell_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::new();
        for spec in self.layer_specs() {
            match spec {
                LayerSpec::Uni { input, hidden } => dims.push((input, hidden)),
                LayerSpec::Bi { input, hidden_per_dir, .. } => {
                    dims.push((input, hidden_per_dir));
                    dims.push((input, hidden_per_dir));
                }
            }
        }
        dims
    }

    /// Total trainable parameters: `4 * (input + hidden + 1) * hidden`
    /// summed over all cells.
    pub fn param_count(&self) -> usize {
        self.cell_dims().iter().map(|&(i, h)| 4 * (i + h + 1) * h).sum()
    }
}

impl std::fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} layers={} chunk={}", self.arch, self.layers, self.chunk_bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(arch: Arch, layers: usize, chunk: usize) -> usize {
        ModelConfig::new(arch, layers, chunk).unwrap().param_count()
    }

    #[test]
    fn param_counts_match_published_grid() {
        assert_eq!(count(Arch::Lstm, 1, 64), 33_024);
        assert_eq!(count(Arch::Lstm, 1, 128), 131_584);
        assert_eq!(count(Arch::Lstm, 2, 64), 66_048);
        assert_eq!(count(Arch::Lstm, 2, 128), 263_168);
        assert_eq!(count(Arch::BiLstm, 1, 64), 66_048);
        assert_eq!(count(Arch::BiLstm, 1, 128), 263_168);
        assert_eq!(count(Arch::BiLstm, 2, 64), 57_856);
        assert_eq!(count(Arch::BiLstm, 2, 128), 230_400);
        assert_eq!(count(Arch::Seq2Seq, 2, 64), 57_856);
        assert_eq!(count(Arch::Seq2Seq, 2, 128), 230_400);
    }

    #[test]
    fn two_layer_bilstm_breakdown() {
        // 2 * 4*(64+32+1)*32 + 4*(64+64+1)*64
        assert_eq!(2 * 4 * 97 * 32 + 4 * 129 * 64, 57_856);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ModelConfig::new(Arch::Seq2Seq, 1, 64).is_err());
        assert!(ModelConfig::new(Arch::Lstm, 3, 64).is_err());
        assert!(ModelConfig::new(Arch::Lstm, 1, 96).is_err());
    }

    #[test]
    fn arch_names_round_trip() {
        for arch in [Arch::Lstm, Arch::BiLstm, Arch::Seq2Seq] {
            assert_eq!(Arch::parse(arch.as_str()), Some(arch));
            assert_eq!(Arch::from_id(arch.id()), Some(arch));
        }
    }
}
