//! Sequence-of-bits input encoding. Byte values can be states (bitmasks,
//! tags) rather than magnitudes, so each byte is fed to the model as eight
//! separate bits, most significant first.

/// Expand bytes to one 0/1 value per bit. Bit `8*i + j` is the j-th most
/// significant bit of byte `i`.
pub fn bytes_to_bits(x: &[u8]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(x.len() * 8);
    for &b in x {
        for j in 0..8 {
            bits.push((b >> (7 - j)) & 1);
        }
    }
    bits
}

/// Zero-pad `bits` to a multiple of `chunk_bits` and split into row-major
/// chunks. Returns the chunks and the count of pre-padding bits, which
/// callers use to mask loss and outputs.
pub fn chunk_and_pad(bits: &[u8], chunk_bits: usize) -> (Vec<Vec<u8>>, usize) {
    assert!(chunk_bits > 0);
    let valid = bits.len();
    let chunks = bits
        .chunks(chunk_bits)
        .map(|c| {
            let mut chunk = c.to_vec();
            chunk.resize(chunk_bits, 0);
            chunk
        })
        .collect();
    (chunks, valid)
}

/// Number of chunks `chunk_and_pad` produces for a bit count.
pub fn chunk_count(bit_len: usize, chunk_bits: usize) -> usize {
    bit_len.div_ceil(chunk_bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_byte_is_eight_zeros() {
        assert_eq!(bytes_to_bits(&[0x00]), vec![0; 8]);
    }

    #[test]
    fn ff_byte_is_eight_ones() {
        assert_eq!(bytes_to_bits(&[0xFF]), vec![1; 8]);
    }

    #[test]
    fn msb_comes_first() {
        assert_eq!(bytes_to_bits(&[0x80]), vec![1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(bytes_to_bits(&[0x01]), vec![0, 0, 0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn chunking_296_bits_into_64s() {
        let bits = vec![1u8; 296];
        let (chunks, valid) = chunk_and_pad(&bits, 64);
        assert_eq!(chunks.len(), 5);
        assert_eq!(valid, 296);
        assert!(chunks.iter().all(|c| c.len() == 64));
        // padding is zeros
        assert_eq!(chunks[4][296 - 4 * 64..].iter().map(|&b| b as usize).sum::<usize>(), 0);
    }

    #[test]
    fn exact_multiple_needs_no_padding() {
        let bits = vec![1u8; 640];
        let (chunks, valid) = chunk_and_pad(&bits, 64);
        assert_eq!(chunks.len(), 10);
        assert_eq!(valid, 640);
        assert!(chunks.iter().flatten().all(|&b| b == 1));
    }

    #[test]
    fn empty_input_has_no_chunks() {
        let (chunks, valid) = chunk_and_pad(&[], 64);
        assert!(chunks.is_empty());
        assert_eq!(valid, 0);
    }
}
