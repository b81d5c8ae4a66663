//! Training-set construction from collected fuzzing samples, plus the sample
//! file format.
//!
//! A sample is `(x, x', score)`: a seed, a length-preserving mutant and the
//! strictly-less coverage score of the pair. Samples with `score > gamma`
//! become training examples whose target is the bit diff `x XOR x'`. Inputs
//! longer than 10 kB are split into consecutive 10 kB segments (the final
//! short segment kept, targets split identically), then examples are binned
//! by padded chunk count.

use super::bits::{bytes_to_bits, chunk_count};
use super::NeuralError;
use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Segment size for long inputs, in bytes.
pub const SEGMENT_BYTES: usize = 10_000;

const SAMPLE_MAGIC: &[u8; 4] = b"NFZD";
const SAMPLE_VERSION: u16 = 1;

/// One collected `(seed, mutant, score)` record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub x: Vec<u8>,
    pub x_prime: Vec<u8>,
    pub score: u32,
}

/// One supervised example: input bytes and the 0/1 flip target per bit.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub x: Vec<u8>,
    /// `8 * x.len()` targets; bit `8i + j` marks whether the j-th most
    /// significant bit of byte `i` was flipped.
    pub y: Vec<u8>,
    pub score: u32,
}

/// Examples grouped by padded length in chunks.
#[derive(Debug, Default)]
pub struct Dataset {
    pub chunk_bits: usize,
    pub bins: BTreeMap<usize, Vec<TrainingExample>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.bins.values().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

/// Filter samples by `score > gamma`, diff them, segment and bin.
pub fn build_dataset(records: &[SampleRecord], gamma: i64, chunk_bits: usize) -> Dataset {
    let mut dataset = Dataset { chunk_bits, bins: BTreeMap::new() };
    for rec in records {
        if (rec.score as i64) <= gamma {
            continue;
        }
        debug_assert_eq!(rec.x.len(), rec.x_prime.len(), "samples are length-preserving");
        for (seg_x, seg_xp) in rec.x.chunks(SEGMENT_BYTES).zip(rec.x_prime.chunks(SEGMENT_BYTES)) {
            let diff: Vec<u8> = seg_x.iter().zip(seg_xp).map(|(a, b)| a ^ b).collect();
            let y = bytes_to_bits(&diff);
            let example = TrainingExample { x: seg_x.to_vec(), y, score: rec.score };
            let bin = chunk_count(example.x.len() * 8, chunk_bits);
            dataset.bins.entry(bin).or_default().push(example);
        }
    }
    dataset
}

/// Streaming writer for the sample file format: magic `NFZD`, a u16 version,
/// then `(u32 len, x, x', u32 score)` records.
pub struct SampleWriter<W: Write> {
    w: W,
    count: u64,
}

impl SampleWriter<BufWriter<std::fs::File>> {
    pub fn create(path: &Path) -> Result<Self, NeuralError> {
        let file = std::fs::File::create(path)?;
        Self::new(BufWriter::new(file))
    }
}

impl<W: Write> SampleWriter<W> {
    pub fn new(mut w: W) -> Result<Self, NeuralError> {
        w.write_all(SAMPLE_MAGIC)?;
        w.write_all(&SAMPLE_VERSION.to_le_bytes())?;
        Ok(SampleWriter { w, count: 0 })
    }

    pub fn write(&mut self, x: &[u8], x_prime: &[u8], score: u32) -> Result<(), NeuralError> {
        debug_assert_eq!(x.len(), x_prime.len());
        self.w.write_all(&(x.len() as u32).to_le_bytes())?;
        self.w.write_all(x)?;
        self.w.write_all(x_prime)?;
        self.w.write_all(&score.to_le_bytes())?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(mut self) -> Result<u64, NeuralError> {
        self.w.flush()?;
        Ok(self.count)
    }
}

pub fn read_samples(path: &Path) -> Result<Vec<SampleRecord>, NeuralError> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| NeuralError::BadSampleFile("file too short for magic".into()))?;
    if &magic != SAMPLE_MAGIC {
        return Err(NeuralError::BadSampleFile(format!("bad magic {magic:02x?}")));
    }
    let mut ver = [0u8; 2];
    r.read_exact(&mut ver)
        .map_err(|_| NeuralError::BadSampleFile("file too short for version".into()))?;
    let version = u16::from_le_bytes(ver);
    if version != SAMPLE_VERSION {
        return Err(NeuralError::BadSampleFile(format!("unsupported version {version}")));
    }

    let mut records = Vec::new();
    loop {
        let mut len_buf = [0u8; 4];
        match r.read_exact(&mut len_buf) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let len = u32::from_le_bytes(len_buf) as usize;
        let mut x = vec![0u8; len];
        let mut x_prime = vec![0u8; len];
        let mut score = [0u8; 4];
        r.read_exact(&mut x).map_err(|_| truncated())?;
        r.read_exact(&mut x_prime).map_err(|_| truncated())?;
        r.read_exact(&mut score).map_err(|_| truncated())?;
        records.push(SampleRecord { x, x_prime, score: u32::from_le_bytes(score) });
    }
    Ok(records)
}

fn truncated() -> NeuralError {
    NeuralError::BadSampleFile("truncated record".into())
}
