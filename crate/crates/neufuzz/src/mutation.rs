//! AFL-style mutation catalog: the deterministic stage (walking bit/byte
//! flips, arithmetic, interesting-value splices, dictionary substitutions)
//! and the stacking havoc stage.
//!
//! Every proposal reports the byte positions it touched in ORIGINAL-seed
//! coordinates, so the sieve can evaluate its veto rule with a set
//! intersection instead of a byte diff. For havoc operators that change the
//! length (delete/clone), the touched set records the affected span of the
//! pre-mutation seed.
//!
//! Bit index convention: bit 0 of a byte is its most significant bit.

use rand::Rng;
use std::collections::BTreeSet;
use std::path::Path;

/// Hard cap on mutant size.
pub const MAX_INPUT_LEN: usize = 1 << 20;
/// Largest value added or subtracted by arithmetic mutations.
pub const ARITH_MAX: u64 = 35;
/// Inclusive bounds for the number of stacked havoc operators.
pub const HAVOC_STACK_MIN: u32 = 2;
pub const HAVOC_STACK_MAX: u32 = 128;
/// Largest block moved by delete/clone/overwrite havoc operators.
const HAVOC_BLOCK_MAX: usize = 64;

/// AFL-conventional interesting values per splice width.
pub const INTERESTING_8: [i64; 9] = [-128, -1, 0, 1, 16, 32, 64, 100, 127];
pub const INTERESTING_16: [i64; 19] = [
    -128, -1, 0, 1, 16, 32, 64, 100, 127, -32768, -129, 128, 255, 256, 512, 1000, 1024, 4096,
    32767,
];
pub const INTERESTING_32: [i64; 27] = [
    -128,
    -1,
    0,
    1,
    16,
    32,
    64,
    100,
    127,
    -32768,
    -129,
    128,
    255,
    256,
    512,
    1000,
    1024,
    4096,
    32767,
    -2147483648,
    -100663046,
    -32769,
    32768,
    65535,
    65536,
    100663045,
    2147483647,
];

/// The interesting-value set for a splice width of 1, 2 or 4 bytes.
pub fn interesting_values(width: usize) -> &'static [i64] {
    match width {
        1 => &INTERESTING_8,
        2 => &INTERESTING_16,
        4 => &INTERESTING_32,
        _ => panic!("unsupported interesting-value width {width}"),
    }
}

/// Tag describing one applied operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutOp {
    BitFlip { width: u8 },
    ByteFlip { width: u8 },
    Arith { width: u8, sub: bool },
    Interesting { width: u8, big_endian: bool },
    DictReplace,
    RandByte,
    DeleteBytes,
    CloneBytes,
    OverwriteBytes,
}

/// One proposed mutant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationProposal {
    pub data: Vec<u8>,
    /// Sorted byte indices in original-seed coordinates.
    pub touched: Vec<usize>,
    pub length_changed: bool,
    pub op_trace: Vec<MutOp>,
}

/// User-supplied substitution tokens (1 to 4 bytes each).
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    tokens: Vec<Vec<u8>>,
}

impl Dictionary {
    pub fn empty() -> Self {
        Dictionary { tokens: Vec::new() }
    }

    pub fn tokens(&self) -> &[Vec<u8>] {
        &self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Parse one token per line. Literal bytes plus `\xNN` and `\\` escapes;
    /// blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut tokens = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let token = unescape(line).map_err(|e| format!("line {}: {e}", lineno + 1))?;
            if token.is_empty() || token.len() > 4 {
                return Err(format!(
                    "line {}: tokens must be 1 to 4 bytes, got {}",
                    lineno + 1,
                    token.len()
                ));
            }
            tokens.push(token);
        }
        Ok(Dictionary { tokens })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }
}

fn unescape(line: &str) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    let mut chars = line.bytes().peekable();
    while let Some(b) = chars.next() {
        if b != b'\\' {
            out.push(b);
            continue;
        }
        match chars.next() {
            Some(b'\\') => out.push(b'\\'),
            Some(b'x') => {
                let hi = chars.next().ok_or("truncated \\x escape")?;
                let lo = chars.next().ok_or("truncated \\x escape")?;
                let hex = [hi, lo];
                let s = std::str::from_utf8(&hex).map_err(|_| "bad \\x escape")?;
                out.push(u8::from_str_radix(s, 16).map_err(|_| "bad \\x escape")?);
            }
            _ => return Err("unknown escape".into()),
        }
    }
    Ok(out)
}

fn single_op(data: Vec<u8>, touched: Vec<usize>, op: MutOp) -> MutationProposal {
    MutationProposal { data, touched, length_changed: false, op_trace: vec![op] }
}

/// Flip `width` consecutive bits starting at `bit_off` (MSB-first indexing).
pub fn bit_flip(seed: &[u8], bit_off: usize, width: usize) -> MutationProposal {
    debug_assert!(bit_off + width <= seed.len() * 8);
    let mut data = seed.to_vec();
    for b in bit_off..bit_off + width {
        data[b / 8] ^= 0x80 >> (b % 8);
    }
    let touched = (bit_off / 8..=(bit_off + width - 1) / 8).collect();
    single_op(data, touched, MutOp::BitFlip { width: width as u8 })
}

/// XOR `width` consecutive bytes with 0xFF.
pub fn byte_flip(seed: &[u8], pos: usize, width: usize) -> MutationProposal {
    debug_assert!(pos + width <= seed.len());
    let mut data = seed.to_vec();
    for b in &mut data[pos..pos + width] {
        *b ^= 0xFF;
    }
    single_op(data, (pos..pos + width).collect(), MutOp::ByteFlip { width: width as u8 })
}

fn apply_arith(data: &mut [u8], pos: usize, width: usize, v: u64, sub: bool) {
    let mut val: u64 = 0;
    for i in 0..width {
        val |= (data[pos + i] as u64) << (8 * i);
    }
    let val = if sub { val.wrapping_sub(v) } else { val.wrapping_add(v) };
    for i in 0..width {
        data[pos + i] = (val >> (8 * i)) as u8;
    }
}

/// Add or subtract `v` from the little-endian integer of `width` bytes at `pos`.
pub fn arith(seed: &[u8], pos: usize, width: usize, v: u64, sub: bool) -> MutationProposal {
    debug_assert!(pos + width <= seed.len());
    let mut data = seed.to_vec();
    apply_arith(&mut data, pos, width, v, sub);
    single_op(data, (pos..pos + width).collect(), MutOp::Arith { width: width as u8, sub })
}

fn write_value(data: &mut [u8], pos: usize, width: usize, value: i64, big_endian: bool) {
    let bytes = (value as u64).to_le_bytes();
    for i in 0..width {
        data[pos + i] = if big_endian { bytes[width - 1 - i] } else { bytes[i] };
    }
}

/// Splice an interesting value at `pos`.
pub fn interesting(
    seed: &[u8],
    pos: usize,
    width: usize,
    value: i64,
    big_endian: bool,
) -> MutationProposal {
    debug_assert!(pos + width <= seed.len());
    let mut data = seed.to_vec();
    write_value(&mut data, pos, width, value, big_endian);
    single_op(
        data,
        (pos..pos + width).collect(),
        MutOp::Interesting { width: width as u8, big_endian },
    )
}

/// Overwrite the bytes at `pos` with a dictionary token.
pub fn dict_replace(seed: &[u8], pos: usize, token: &[u8]) -> MutationProposal {
    debug_assert!(pos + token.len() <= seed.len());
    let mut data = seed.to_vec();
    data[pos..pos + token.len()].copy_from_slice(token);
    single_op(data, (pos..pos + token.len()).collect(), MutOp::DictReplace)
}

/// The full deterministic stage for one seed, in fixed order: walking bit
/// flips (widths 1/2/4), walking byte flips (1/2/4), arithmetic (each value
/// in `1..=ARITH_MAX`, add then subtract, at 1/2/4-byte little-endian
/// granularity), interesting-value splices (1/2/4 bytes, both endiannesses
/// for the multi-byte widths), then dictionary substitutions.
///
/// Every proposal is length-preserving.
pub fn deterministic_stage<'a>(
    seed: &'a [u8],
    dict: &'a Dictionary,
) -> impl Iterator<Item = MutationProposal> + 'a {
    assert!(!seed.is_empty(), "deterministic stage needs a non-empty seed");
    let len = seed.len();
    let nbits = len * 8;

    let bit_flips = [1usize, 2, 4]
        .into_iter()
        .flat_map(move |w| (0..=nbits - w).map(move |off| bit_flip(seed, off, w)));

    let byte_flips = [1usize, 2, 4]
        .into_iter()
        .flat_map(move |w| (0..(len + 1).saturating_sub(w)).map(move |pos| byte_flip(seed, pos, w)));

    let ariths = [1usize, 2, 4].into_iter().flat_map(move |w| {
        (0..(len + 1).saturating_sub(w)).flat_map(move |pos| {
            (1..=ARITH_MAX).flat_map(move |v| {
                [arith(seed, pos, w, v, false), arith(seed, pos, w, v, true)]
            })
        })
    });

    let interestings = [1usize, 2, 4].into_iter().flat_map(move |w| {
        (0..(len + 1).saturating_sub(w)).flat_map(move |pos| {
            interesting_values(w).iter().flat_map(move |&val| {
                let le = interesting(seed, pos, w, val, false);
                let be = (w > 1).then(|| interesting(seed, pos, w, val, true));
                std::iter::once(le).chain(be)
            })
        })
    });

    let dicts = dict.tokens.iter().flat_map(move |token| {
        (0..(len + 1).saturating_sub(token.len())).map(move |pos| dict_replace(seed, pos, token))
    });

    bit_flips.chain(byte_flips).chain(ariths).chain(interestings).chain(dicts)
}

/// Number of proposals [`deterministic_stage`] will emit, without generating
/// them. Used for campaign accounting.
pub fn deterministic_stage_len(seed_len: usize, dict: &Dictionary) -> u64 {
    let len = seed_len as u64;
    let nbits = len * 8;
    let mut total = 0u64;
    for w in [1u64, 2, 4] {
        total += nbits - w + 1; // bit flips
        total += (len + 1).saturating_sub(w); // byte flips
        total += (len + 1).saturating_sub(w) * ARITH_MAX * 2;
        let per_pos = interesting_values(w as usize).len() as u64 * if w > 1 { 2 } else { 1 };
        total += (len + 1).saturating_sub(w) * per_pos;
    }
    for token in &dict.tokens {
        total += (len + 1).saturating_sub(token.len() as u64);
    }
    total
}

/// Evolving havoc buffer. Tracks, for every current byte, which original
/// seed byte it came from (if any), so touched positions can be reported in
/// original coordinates even after deletes and clones.
struct HavocBuf<'a> {
    seed: &'a [u8],
    data: Vec<u8>,
    orig: Vec<Option<u32>>,
    touched: BTreeSet<usize>,
    trace: Vec<MutOp>,
    length_changed: bool,
}

impl<'a> HavocBuf<'a> {
    fn new(seed: &'a [u8]) -> Self {
        HavocBuf {
            seed,
            data: seed.to_vec(),
            orig: (0..seed.len() as u32).map(Some).collect(),
            touched: BTreeSet::new(),
            trace: Vec::new(),
            length_changed: false,
        }
    }

    fn len(&self) -> usize {
        self.data.len()
    }

    /// Record the original coordinates of current window `[a, b)`. If the
    /// whole window consists of inserted bytes, anchor on the nearest byte
    /// that still maps back to the seed.
    fn touch_window(&mut self, a: usize, b: usize) {
        let mut any = false;
        for o in self.orig[a..b].iter().flatten() {
            self.touched.insert(*o as usize);
            any = true;
        }
        if any {
            return;
        }
        let left = self.orig[..a].iter().rev().flatten().next();
        let anchor = left.or_else(|| self.orig[b..].iter().flatten().next());
        self.touched.insert(anchor.map(|&o| o as usize).unwrap_or(0));
    }

    fn bit_flip(&mut self, bit_off: usize, width: usize) {
        for b in bit_off..bit_off + width {
            self.data[b / 8] ^= 0x80 >> (b % 8);
        }
        self.touch_window(bit_off / 8, (bit_off + width - 1) / 8 + 1);
        self.trace.push(MutOp::BitFlip { width: width as u8 });
    }

    fn byte_flip(&mut self, pos: usize, width: usize) {
        for b in &mut self.data[pos..pos + width] {
            *b ^= 0xFF;
        }
        self.touch_window(pos, pos + width);
        self.trace.push(MutOp::ByteFlip { width: width as u8 });
    }

    fn arith(&mut self, pos: usize, width: usize, v: u64, sub: bool) {
        apply_arith(&mut self.data, pos, width, v, sub);
        self.touch_window(pos, pos + width);
        self.trace.push(MutOp::Arith { width: width as u8, sub });
    }

    fn interesting(&mut self, pos: usize, width: usize, value: i64, big_endian: bool) {
        write_value(&mut self.data, pos, width, value, big_endian);
        self.touch_window(pos, pos + width);
        self.trace.push(MutOp::Interesting { width: width as u8, big_endian });
    }

    fn dict(&mut self, pos: usize, token: &[u8]) {
        self.data[pos..pos + token.len()].copy_from_slice(token);
        self.touch_window(pos, pos + token.len());
        self.trace.push(MutOp::DictReplace);
    }

    fn rand_byte(&mut self, pos: usize, xor: u8) {
        debug_assert!(xor != 0);
        self.data[pos] ^= xor;
        self.touch_window(pos, pos + 1);
        self.trace.push(MutOp::RandByte);
    }

    fn delete(&mut self, pos: usize, n: usize) {
        self.touch_window(pos, pos + n);
        self.data.drain(pos..pos + n);
        self.orig.drain(pos..pos + n);
        self.length_changed = true;
        self.trace.push(MutOp::DeleteBytes);
    }

    fn clone_insert(&mut self, src: usize, n: usize, at: usize) {
        self.touch_window(src, src + n);
        let block: Vec<u8> = self.data[src..src + n].to_vec();
        self.data.splice(at..at, block);
        self.orig.splice(at..at, std::iter::repeat(None).take(n));
        self.length_changed = true;
        self.trace.push(MutOp::CloneBytes);
    }

    fn overwrite(&mut self, src: usize, n: usize, dest: usize) {
        self.touch_window(src, src + n);
        self.touch_window(dest, dest + n);
        self.data.copy_within(src..src + n, dest);
        self.trace.push(MutOp::OverwriteBytes);
    }

    fn finish(self) -> MutationProposal {
        debug_assert!(!self.touched.is_empty());
        let _ = self.seed;
        MutationProposal {
            data: self.data,
            touched: self.touched.into_iter().collect(),
            length_changed: self.length_changed,
            op_trace: self.trace,
        }
    }
}

/// One stacked havoc mutant: between 2 and 128 operators drawn uniformly
/// from the deterministic catalog plus random byte assignment, delete,
/// clone and overwrite. Operators that cannot apply to the current buffer
/// (for example a delete on a 1-byte input) are resampled.
pub fn havoc_mutation<R: Rng>(seed: &[u8], rng: &mut R, dict: &Dictionary) -> MutationProposal {
    havoc_mutation_bounded(seed, rng, dict, MAX_INPUT_LEN)
}

pub fn havoc_mutation_bounded<R: Rng>(
    seed: &[u8],
    rng: &mut R,
    dict: &Dictionary,
    max_len: usize,
) -> MutationProposal {
    assert!(!seed.is_empty(), "havoc needs a non-empty seed");
    let mut buf = HavocBuf::new(seed);
    let k = rng.gen_range(HAVOC_STACK_MIN..=HAVOC_STACK_MAX);
    for _ in 0..k {
        while !apply_random_op(&mut buf, rng, dict, max_len) {}
    }
    buf.finish()
}

fn apply_random_op<R: Rng>(
    buf: &mut HavocBuf,
    rng: &mut R,
    dict: &Dictionary,
    max_len: usize,
) -> bool {
    let len = buf.len();
    match rng.gen_range(0..17u32) {
        kind @ 0..=2 => {
            let w = 1usize << kind;
            let nbits = len * 8;
            buf.bit_flip(rng.gen_range(0..=nbits - w), w);
        }
        kind @ 3..=5 => {
            let w = 1usize << (kind - 3);
            if len < w {
                return false;
            }
            buf.byte_flip(rng.gen_range(0..=len - w), w);
        }
        kind @ 6..=8 => {
            let w = 1usize << (kind - 6);
            if len < w {
                return false;
            }
            let pos = rng.gen_range(0..=len - w);
            let v = rng.gen_range(1..=ARITH_MAX);
            let sub = rng.gen::<bool>();
            buf.arith(pos, w, v, sub);
        }
        kind @ 9..=11 => {
            let w = 1usize << (kind - 9);
            if len < w {
                return false;
            }
            let pos = rng.gen_range(0..=len - w);
            let vals = interesting_values(w);
            let val = vals[rng.gen_range(0..vals.len())];
            let be = w > 1 && rng.gen::<bool>();
            buf.interesting(pos, w, val, be);
        }
        12 => {
            if dict.is_empty() {
                return false;
            }
            let token = &dict.tokens[rng.gen_range(0..dict.tokens.len())];
            if len < token.len() {
                return false;
            }
            buf.dict(rng.gen_range(0..=len - token.len()), token);
        }
        13 => {
            let pos = rng.gen_range(0..len);
            let xor = rng.gen_range(1..=255u8);
            buf.rand_byte(pos, xor);
        }
        14 => {
            if len < 2 {
                return false;
            }
            let n = rng.gen_range(1..=(len - 1).min(HAVOC_BLOCK_MAX));
            let pos = rng.gen_range(0..=len - n);
            buf.delete(pos, n);
        }
        15 => {
            let n = rng.gen_range(1..=len.min(HAVOC_BLOCK_MAX));
            if len + n > max_len {
                return false;
            }
            let src = rng.gen_range(0..=len - n);
            let at = rng.gen_range(0..=len);
            buf.clone_insert(src, n, at);
        }
        16 => {
            if len < 2 {
                return false;
            }
            let n = rng.gen_range(1..=len.min(HAVOC_BLOCK_MAX));
            let src = rng.gen_range(0..=len - n);
            let dest = rng.gen_range(0..=len - n);
            buf.overwrite(src, n, dest);
        }
        _ => unreachable!(),
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_deterministic_proposal_flips_msb() {
        let seed = [0x00u8];
        let first = deterministic_stage(&seed, &Dictionary::empty()).next().unwrap();
        assert_eq!(first.data, vec![0x80]);
        assert_eq!(first.touched, vec![0]);
        assert!(!first.length_changed);
    }

    #[test]
    fn byte_flip_is_involutive() {
        let seed = [0xFFu8];
        let p = byte_flip(&seed, 0, 1);
        assert_eq!(p.data, vec![0x00]);
        let back = byte_flip(&p.data, 0, 1);
        assert_eq!(back.data, seed.to_vec());
    }

    #[test]
    fn one_bit_flip_count_is_eight_per_byte() {
        for len in [1usize, 3, 9] {
            let seed = vec![0xA5u8; len];
            let n = deterministic_stage(&seed, &Dictionary::empty())
                .filter(|p| p.op_trace == vec![MutOp::BitFlip { width: 1 }])
                .count();
            assert_eq!(n, 8 * len);
        }
    }

    #[test]
    fn family_counts_match_closed_form() {
        let dict = Dictionary::parse("ab\n\\x00\\x01\\x02").unwrap();
        for len in [1usize, 2, 5, 17] {
            let seed = vec![0x11u8; len];
            let counted = deterministic_stage(&seed, &dict).count() as u64;
            assert_eq!(counted, deterministic_stage_len(len, &dict));
        }
    }

    #[test]
    fn arith_example_hand_checked() {
        // 2-byte LE add of 1 at offset 0 of [0xFF, 0x00] carries into byte 1.
        let p = arith(&[0xFF, 0x00], 0, 2, 1, false);
        assert_eq!(p.data, vec![0x00, 0x01]);
        assert_eq!(p.touched, vec![0, 1]);
    }

    #[test]
    fn arith_add_then_sub_restores() {
        let seed = [7u8, 9, 200, 41];
        for w in [1usize, 2, 4] {
            for v in [1u64, 17, 35] {
                let fwd = arith(&seed, 0, w, v, false);
                let back = arith(&fwd.data, 0, w, v, true);
                assert_eq!(back.data, seed.to_vec());
            }
        }
    }

    #[test]
    fn interesting_sets_have_expected_shape() {
        assert_eq!(interesting_values(1).len(), 9);
        assert_eq!(interesting_values(2).len(), 19);
        assert_eq!(interesting_values(4).len(), 27);
        for w in [1, 2, 4] {
            assert!(interesting_values(w).contains(&0));
        }
        assert!(interesting_values(4).contains(&65536));
    }

    #[test]
    fn interesting_endianness_pairs() {
        let seed = [0u8; 2];
        let le = interesting(&seed, 0, 2, -129, false);
        let be = interesting(&seed, 0, 2, -129, true);
        assert_eq!(le.data, vec![0x7F, 0xFF]);
        assert_eq!(be.data, vec![0xFF, 0x7F]);
    }

    #[test]
    fn dictionary_parsing() {
        let dict = Dictionary::parse("# comment\nPNG\n\\x7fELF\n\nab").unwrap();
        assert_eq!(dict.tokens().len(), 3);
        assert_eq!(dict.tokens()[1], vec![0x7F, b'E', b'L', b'F']);
        assert!(Dictionary::parse("toolong").is_err());
        assert!(Dictionary::parse("\\xZZ").is_err());
    }

    #[test]
    fn forced_two_bit_flips() {
        let seed = [0u8; 8];
        let mut buf = HavocBuf::new(&seed);
        buf.bit_flip(0, 1);
        buf.bit_flip(3 * 8 + 7, 1);
        let p = buf.finish();
        assert_eq!(p.touched, vec![0, 3]);
        assert!(!p.length_changed);
        assert_eq!(p.data[0], 0x80);
        assert_eq!(p.data[3], 0x01);
    }

    #[test]
    fn forced_delete_reports_source_span() {
        let seed: Vec<u8> = (0..10).collect();
        let mut buf = HavocBuf::new(&seed);
        buf.delete(2, 3);
        let p = buf.finish();
        assert_eq!(p.data.len(), 7);
        assert_eq!(p.touched, vec![2, 3, 4]);
        assert!(p.length_changed);
    }

    #[test]
    fn clone_then_touch_of_inserted_bytes_anchors_to_seed() {
        let seed: Vec<u8> = (0..4).collect();
        let mut buf = HavocBuf::new(&seed);
        buf.clone_insert(0, 2, 4); // data now 0 1 2 3 0 1
        buf.rand_byte(5, 0xFF); // inserted byte: anchors to nearest original
        let p = buf.finish();
        assert!(p.touched.contains(&3), "anchor should fall back to an original byte");
    }

    #[test]
    fn havoc_stack_depth_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let seed = vec![0u8; 32];
        let dict = Dictionary::empty();
        for _ in 0..10_000 {
            let p = havoc_mutation(&seed, &mut rng, &dict);
            let k = p.op_trace.len() as u32;
            assert!((HAVOC_STACK_MIN..=HAVOC_STACK_MAX).contains(&k), "k={k}");
            assert!(!p.touched.is_empty());
            assert!(!p.data.is_empty());
            assert!(p.data.len() <= MAX_INPUT_LEN);
        }
    }

    #[test]
    fn havoc_is_reproducible() {
        let seed: Vec<u8> = (0..50).collect();
        let dict = Dictionary::parse("ab").unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(77);
        let mut b = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            assert_eq!(
                havoc_mutation(&seed, &mut a, &dict),
                havoc_mutation(&seed, &mut b, &dict)
            );
        }
    }

    #[test]
    fn havoc_applies_to_one_byte_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let p = havoc_mutation(&[0x42], &mut rng, &Dictionary::empty());
            assert!(!p.data.is_empty());
        }
    }

    proptest! {
        #[test]
        fn deterministic_proposals_are_coordinate_sound(
            seed in proptest::collection::vec(any::<u8>(), 1..24),
        ) {
            let dict = Dictionary::empty();
            for p in deterministic_stage(&seed, &dict) {
                prop_assert_eq!(p.data.len(), seed.len());
                prop_assert!(!p.touched.is_empty());
                for (i, (&a, &b)) in seed.iter().zip(&p.data).enumerate() {
                    if a != b {
                        prop_assert!(p.touched.contains(&i), "byte {} changed but untouched", i);
                    }
                }
            }
        }

        #[test]
        fn havoc_proposals_are_coordinate_sound(
            seed in proptest::collection::vec(any::<u8>(), 1..64),
            rng_seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let dict = Dictionary::empty();
            for _ in 0..8 {
                let p = havoc_mutation(&seed, &mut rng, &dict);
                prop_assert!(!p.touched.is_empty());
                prop_assert!(*p.touched.last().unwrap() < seed.len());
                if !p.length_changed {
                    prop_assert_eq!(p.data.len(), seed.len());
                    for (i, (&a, &b)) in seed.iter().zip(&p.data).enumerate() {
                        if a != b {
                            prop_assert!(p.touched.contains(&i));
                        }
                    }
                }
            }
        }

        #[test]
        fn involutive_ops_round_trip(
            seed in proptest::collection::vec(any::<u8>(), 1..32),
            off in any::<usize>(),
        ) {
            let nbits = seed.len() * 8;
            let off = off % nbits;
            let p = bit_flip(&seed, off, 1);
            let back = bit_flip(&p.data, off, 1);
            prop_assert_eq!(back.data, seed);
        }
    }
}
