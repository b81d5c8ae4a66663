//! Model file format: magic `NFZM`, u16 version, a config block (arch id,
//! layer count, chunk width, per-cell dims), then every cell's tensors in
//! declaration order as little-endian f32 with u32 length prefixes.

use super::cell::LstmCellParams;
use super::model::{Layer, Model};
use super::{Arch, LayerSpec, ModelConfig, NeuralError};
use ndarray::{Array1, Array2};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MODEL_MAGIC: &[u8; 4] = b"NFZM";
const MODEL_VERSION: u16 = 1;

pub fn save_model(model: &Model<f32>, path: &Path) -> Result<(), NeuralError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    w.write_all(&[model.config.arch.id(), model.config.layers as u8])?;
    w.write_all(&(model.config.chunk_bits as u16).to_le_bytes())?;

    let cells = model.cells();
    w.write_all(&(cells.len() as u16).to_le_bytes())?;
    for cell in &cells {
        w.write_all(&(cell.input_dim() as u16).to_le_bytes())?;
        w.write_all(&(cell.hidden_dim() as u16).to_le_bytes())?;
    }
    for cell in &cells {
        for tensor in cell.tensor_slices() {
            w.write_all(&(tensor.len() as u32).to_le_bytes())?;
            for &v in tensor {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model<f32>, NeuralError> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);

    let magic = read_array::<4>(&mut r)?;
    if &magic != MODEL_MAGIC {
        return Err(bad(format!("bad magic {magic:02x?}")));
    }
    let version = u16::from_le_bytes(read_array::<2>(&mut r)?);
    if version != MODEL_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let head = read_array::<2>(&mut r)?;
    let arch = Arch::from_id(head[0]).ok_or_else(|| bad(format!("unknown arch id {}", head[0])))?;
    let layers = head[1] as usize;
    let chunk_bits = u16::from_le_bytes(read_array::<2>(&mut r)?) as usize;
    let config = ModelConfig::new(arch, layers, chunk_bits)
        .map_err(|e| bad(format!("config rejected: {e}")))?;

    let n_cells = u16::from_le_bytes(read_array::<2>(&mut r)?) as usize;
    let expected_dims = config.cell_dims();
    if n_cells != expected_dims.len() {
        return Err(bad(format!(
            "cell count {n_cells} does not match config ({} expected)",
            expected_dims.len()
        )));
    }
    for &(input, hidden) in &expected_dims {
        let stored_input = u16::from_le_bytes(read_array::<2>(&mut r)?) as usize;
        let stored_hidden = u16::from_le_bytes(read_array::<2>(&mut r)?) as usize;
        if (stored_input, stored_hidden) != (input, hidden) {
            return Err(bad(format!(
                "cell dims ({stored_input}, {stored_hidden}) do not match config ({input}, {hidden})"
            )));
        }
    }

    let mut cells = Vec::with_capacity(n_cells);
    for &(input, hidden) in &expected_dims {
        cells.push(read_cell(&mut r, input, hidden)?);
    }
    if r.bytes().next().is_some() {
        return Err(bad("trailing bytes after parameters".into()));
    }

    let mut cell_iter = cells.into_iter();
    let layers = config
        .layer_specs()
        .into_iter()
        .map(|spec| match spec {
            LayerSpec::Uni { .. } => Layer::Uni(cell_iter.next().unwrap()),
            LayerSpec::Bi { merge, .. } => Layer::Bi {
                fwd: cell_iter.next().unwrap(),
                bwd: cell_iter.next().unwrap(),
                merge,
            },
        })
        .collect();
    Ok(Model::from_layers(config, layers))
}

fn read_cell<R: Read>(
    r: &mut R,
    input: usize,
    hidden: usize,
) -> Result<LstmCellParams<f32>, NeuralError> {
    let w_len = (input + hidden) * hidden;
    let mut tensors: Vec<Vec<f32>> = Vec::with_capacity(8);
    for t in 0..8 {
        let expected = if t < 4 { w_len } else { hidden };
        let len = u32::from_le_bytes(read_array::<4>(r)?) as usize;
        if len != expected {
            return Err(bad(format!("tensor {t} has {len} floats, expected {expected}")));
        }
        let mut vals = Vec::with_capacity(len);
        for _ in 0..len {
            vals.push(f32::from_le_bytes(read_array::<4>(r)?));
        }
        tensors.push(vals);
    }
    let mut it = tensors.into_iter();
    let weight = |vals: Vec<f32>| {
        Array2::from_shape_vec((input + hidden, hidden), vals).expect("length checked")
    };
    Ok(LstmCellParams {
        w_f: weight(it.next().unwrap()),
        w_i: weight(it.next().unwrap()),
        w_c: weight(it.next().unwrap()),
        w_o: weight(it.next().unwrap()),
        b_f: Array1::from_vec(it.next().unwrap()),
        b_i: Array1::from_vec(it.next().unwrap()),
        b_c: Array1::from_vec(it.next().unwrap()),
        b_o: Array1::from_vec(it.next().unwrap()),
    })
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N], NeuralError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|_| bad("truncated file".into()))?;
    Ok(buf)
}

fn bad(reason: String) -> NeuralError {
    NeuralError::BadModelFile(reason)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_model(arch: Arch, layers: usize) -> Model<f32> {
        let config = ModelConfig::new(arch, layers, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        Model::new(config, &mut rng).unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        for (arch, layers) in [(Arch::Lstm, 1), (Arch::BiLstm, 1), (Arch::BiLstm, 2), (Arch::Seq2Seq, 2)]
        {
            let model = sample_model(arch, layers);
            let path = dir.path().join(format!("{arch}.nfzm"));
            save_model(&model, &path).unwrap();
            let loaded = load_model(&path).unwrap();
            assert_eq!(loaded.config, model.config);
            let input = [0xDEu8, 0xAD, 0xBE, 0xEF, 0x42];
            let a = model.forward_bits(&input);
            let b = loaded.forward_bits(&input);
            assert_eq!(a, b, "{arch} outputs differ after reload");
        }
    }

    #[test]
    fn stored_float_count_matches_param_count() {
        let dir = tempfile::tempdir().unwrap();
        let model = sample_model(Arch::BiLstm, 2);
        let path = dir.path().join("m.nfzm");
        save_model(&model, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let n_cells = model.cells().len();
        let header = 4 + 2 + 2 + 2 + 2 + 4 * n_cells;
        let prefixes = 4 * 8 * n_cells;
        let floats = (bytes.len() - header - prefixes) / 4;
        assert_eq!(floats, model.config.param_count());
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.nfzm");
        save_model(&sample_model(Arch::Lstm, 1), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] ^= 0xFF;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_model(&path), Err(NeuralError::BadModelFile(_))));
    }

    #[test]
    fn truncation_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.nfzm");
        save_model(&sample_model(Arch::Lstm, 1), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_model(&path), Err(NeuralError::BadModelFile(_))));
    }
}
