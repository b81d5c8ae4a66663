//! Toy PNG-like parser. An 8-byte signature, then chunks of (4-byte
//! big-endian length, 4-byte type, payload, 4-byte checksum). The checksum is
//! the plain sum of the payload bytes mod 2^32, so a fuzzer can forge it by
//! mutation. Known chunk types are IHDR, IDAT, tEXt and IEND; IEND terminates
//! the parse.
//!
//! Planted bug: a tEXt chunk whose declared length exceeds the bytes left in
//! the file (simulated over-read).

use super::{Ctx, Target};
use crate::coverage::{ExecOutcome, RawCoverage};

pub const PNG_SIG: [u8; 8] = [137, 80, 78, 71, 13, 10, 26, 10];

const B_ENTRY: u16 = 0x3001;
const B_SIG: u16 = 0x3100; // + byte position, spread
const B_SIG_OK: u16 = 0x3002;
const B_SIG_FAIL: u16 = 0x3003;
const B_COLOR_OK: u16 = 0x301B;
const B_COLOR_BAD: u16 = 0x301C;
const B_CHUNK_HDR: u16 = 0x3004;
const B_HDR_TRUNC: u16 = 0x3005;
const B_IHDR: u16 = 0x3006;
const B_IDAT: u16 = 0x3007;
const B_TEXT: u16 = 0x3008;
const B_IEND: u16 = 0x3009;
const B_UNKNOWN: u16 = 0x300A;
const B_OVERREAD: u16 = 0x300B;
const B_LENBAD: u16 = 0x300C;
const B_W_OK: u16 = 0x300D;
const B_W_ZERO: u16 = 0x300E;
const B_H_OK: u16 = 0x300F;
const B_H_ZERO: u16 = 0x3010;
const B_DEPTH_OK: u16 = 0x3011;
const B_DEPTH_BAD: u16 = 0x3012;
const B_IHDR_SHORT: u16 = 0x3013;
const B_TEXT_KW: u16 = 0x3014;
const B_PAYSCAN: u16 = 0x3015;
const B_CK_PASS: u16 = 0x3016;
const B_CK_FAIL: u16 = 0x3017;
const B_DONE: u16 = 0x3018;
const B_TRAIL: u16 = 0x3019;
const B_EOF: u16 = 0x301A;

pub struct MiniPng;

impl Target for MiniPng {
    fn name(&self) -> &'static str {
        "mini_png"
    }

    fn run(&self, input: &[u8], raw: &mut RawCoverage) -> ExecOutcome {
        let mut ctx = Ctx::new(raw, self.max_steps());
        ctx.block(B_ENTRY);
        for (i, &s) in PNG_SIG.iter().enumerate() {
            if input.get(i) != Some(&s) {
                ctx.block(B_SIG_FAIL);
                return ExecOutcome::Normal;
            }
            ctx.block(super::spread(B_SIG, i as u16));
        }
        ctx.block(B_SIG_OK);

        let mut pos = 8usize;
        while pos < input.len() {
            ctx.block(B_CHUNK_HDR);
            if !ctx.step(8) {
                return ExecOutcome::Hang;
            }
            if pos + 8 > input.len() {
                ctx.block(B_HDR_TRUNC);
                return ExecOutcome::Normal;
            }
            let len = u32::from_be_bytes(input[pos..pos + 4].try_into().unwrap()) as u64;
            let ty = &input[pos + 4..pos + 8];
            pos += 8;
            let remaining = (input.len() - pos) as u64;
            let is_text = ty == b"tEXt";
            match ty {
                b"IHDR" => ctx.block(B_IHDR),
                b"IDAT" => ctx.block(B_IDAT),
                b"tEXt" => ctx.block(B_TEXT),
                b"IEND" => ctx.block(B_IEND),
                _ => ctx.block(B_UNKNOWN),
            }
            if is_text && len > remaining {
                ctx.block(B_OVERREAD);
                return ExecOutcome::Crash(1);
            }
            if len + 4 > remaining {
                ctx.block(B_LENBAD);
                return ExecOutcome::Normal;
            }
            let payload = &input[pos..pos + len as usize];
            if ty == b"IHDR" {
                self.check_ihdr(&mut ctx, payload);
            }
            if is_text {
                if payload.contains(&0) {
                    ctx.block(B_TEXT_KW);
                }
            }
            let mut sum: u32 = 0;
            for chunk in payload.chunks(16) {
                if !ctx.step(chunk.len() as u64) {
                    return ExecOutcome::Hang;
                }
                ctx.block(B_PAYSCAN);
                for &b in chunk {
                    sum = sum.wrapping_add(b as u32);
                }
            }
            pos += len as usize;
            let stored = u32::from_be_bytes(input[pos..pos + 4].try_into().unwrap());
            pos += 4;
            if stored == sum {
                ctx.block(B_CK_PASS);
            } else {
                ctx.block(B_CK_FAIL);
            }
            if ty == b"IEND" {
                ctx.block(B_DONE);
                if pos < input.len() {
                    ctx.block(B_TRAIL);
                }
                return ExecOutcome::Normal;
            }
        }
        ctx.block(B_EOF);
        ExecOutcome::Normal
    }

    fn seed_corpus(&self) -> Vec<Vec<u8>> {
        let mut seeds = Vec::new();
        for i in 0..10u8 {
            let mut img = PngBuilder::new();
            img.chunk(b"IHDR", &ihdr_payload(1 + i as u32, 1 + (i as u32 % 4), 8));
            let idat: Vec<u8> =
                (0..(8 + 3 * i as usize)).map(|k| (k as u8) ^ i.wrapping_mul(29)).collect();
            img.chunk(b"IDAT", &idat);
            if i % 4 == 1 {
                img.chunk(b"tEXt", b"note\0generated");
            }
            if i % 5 == 2 {
                img.chunk(b"gAMA", &[0, 1, 134, 160]);
            }
            img.chunk(b"IEND", &[]);
            seeds.push(img.finish());
        }
        seeds
    }
}

impl MiniPng {
    fn check_ihdr(&self, ctx: &mut Ctx, payload: &[u8]) {
        if payload.len() < 13 {
            ctx.block(B_IHDR_SHORT);
            return;
        }
        let width = u32::from_be_bytes(payload[0..4].try_into().unwrap());
        let height = u32::from_be_bytes(payload[4..8].try_into().unwrap());
        let depth = payload[8];
        let color = payload[9];
        ctx.block(if width != 0 { B_W_OK } else { B_W_ZERO });
        ctx.block(if height != 0 { B_H_OK } else { B_H_ZERO });
        ctx.block(if matches!(depth, 1 | 2 | 4 | 8 | 16) { B_DEPTH_OK } else { B_DEPTH_BAD });
        ctx.block(if matches!(color, 0 | 2 | 3 | 4 | 6) { B_COLOR_OK } else { B_COLOR_BAD });
    }
}

fn ihdr_payload(width: u32, height: u32, depth: u8) -> Vec<u8> {
    let mut p = Vec::with_capacity(13);
    p.extend_from_slice(&width.to_be_bytes());
    p.extend_from_slice(&height.to_be_bytes());
    p.push(depth);
    p.extend_from_slice(&[6, 0, 0, 0]); // color type, compression, filter, interlace
    p
}

/// Builds well-formed files with correct additive checksums.
pub struct PngBuilder {
    out: Vec<u8>,
}

impl PngBuilder {
    pub fn new() -> Self {
        PngBuilder { out: PNG_SIG.to_vec() }
    }

    pub fn chunk(&mut self, ty: &[u8; 4], payload: &[u8]) -> &mut Self {
        self.out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        self.out.extend_from_slice(ty);
        self.out.extend_from_slice(payload);
        let sum: u32 = payload.iter().fold(0u32, |acc, &b| acc.wrapping_add(b as u32));
        self.out.extend_from_slice(&sum.to_be_bytes());
        self
    }

    pub fn finish(&self) -> Vec<u8> {
        self.out.clone()
    }
}

impl Default for PngBuilder {
    fn default() -> Self {
        Self::new()
    }
}

/// Crash witness: a tEXt chunk declaring far more payload than remains.
pub fn witness_over_read() -> Vec<u8> {
    let mut out = PNG_SIG.to_vec();
    out.extend_from_slice(&0xFFFFu32.to_be_bytes());
    out.extend_from_slice(b"tEXt");
    out.extend_from_slice(b"abc");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_only_is_normal() {
        let (outcome, map) = MiniPng.execute(&PNG_SIG);
        assert_eq!(outcome, ExecOutcome::Normal);
        // entry, sig-ok, eof
        assert_eq!(map.edge_count(), 11); // entry + 8 sig bytes + sig-ok + eof
    }

    #[test]
    fn bad_signature_rejects() {
        let (outcome, map) = MiniPng.execute(b"not a png");
        assert_eq!(outcome, ExecOutcome::Normal);
        assert_eq!(map.edge_count(), 2);
    }

    #[test]
    fn iend_with_good_checksum_parses_clean() {
        let mut b = PngBuilder::new();
        b.chunk(b"IEND", &[]);
        let (outcome, map) = MiniPng.execute(&b.finish());
        assert_eq!(outcome, ExecOutcome::Normal);
        let dense = map.to_dense();
        let hit = |block: u16, prev: u16| dense[(block ^ (prev >> 1)) as usize] != 0;
        assert!(hit(B_IEND, B_CHUNK_HDR));
        assert!(hit(B_CK_PASS, B_IEND));
        assert!(hit(B_DONE, B_CK_PASS));
    }

    #[test]
    fn corrupted_checksum_takes_fail_edge() {
        let mut b = PngBuilder::new();
        b.chunk(b"IDAT", b"abcd");
        b.chunk(b"IEND", &[]);
        let mut file = b.finish();
        let ck = 8 + 8 + 4; // first chunk's checksum offset
        file[ck] ^= 0xFF;
        let (outcome, map) = MiniPng.execute(&file);
        assert_eq!(outcome, ExecOutcome::Normal);
        let dense = map.to_dense();
        assert_ne!(dense[(B_CK_FAIL ^ (B_PAYSCAN >> 1)) as usize], 0);
    }

    #[test]
    fn text_overlength_crashes() {
        assert_eq!(MiniPng.execute(&witness_over_read()).0, ExecOutcome::Crash(1));
    }

    #[test]
    fn non_text_overlength_rejects() {
        let mut out = PNG_SIG.to_vec();
        out.extend_from_slice(&0xFFFFu32.to_be_bytes());
        out.extend_from_slice(b"IDAT");
        out.extend_from_slice(b"abc");
        assert_eq!(MiniPng.execute(&out).0, ExecOutcome::Normal);
    }

    #[test]
    fn seeds_end_after_iend() {
        for seed in MiniPng.seed_corpus() {
            let (_, map) = MiniPng.execute(&seed);
            let dense = map.to_dense();
            assert_ne!(dense[(B_DONE ^ (B_CK_PASS >> 1)) as usize], 0);
        }
    }
}
