//! Toy ELF-like parser. Layout: 4-byte magic `7F 45 4C 46`, 1-byte class,
//! 2-byte little-endian section count, then per section an 8-byte record
//! (4-byte type, 4-byte declared payload length). Payloads follow the record
//! table and are consumed in record order.
//!
//! Planted bugs:
//! - crash site 1: a section of type 4 whose declared length spans past
//!   end-of-input (simulated out-of-bounds read);
//! - crash site 2: section count above 1024 while the class byte is 2
//!   (simulated allocation overflow).

use super::{Ctx, Target};
use crate::coverage::{ExecOutcome, RawCoverage};

pub const ELF_MAGIC: [u8; 4] = [0x7F, b'E', b'L', b'F'];
const HEADER_LEN: usize = 7;
const MAX_SECTIONS: u32 = 1024;

const B_ENTRY: u16 = 0x2001;
const B_MAGIC: u16 = 0x2100; // + byte position
const B_MAGIC_FAIL: u16 = 0x2002;
const B_HDR_TRUNC: u16 = 0x2003;
const B_CLASS1: u16 = 0x2004;
const B_CLASS2: u16 = 0x2005;
const B_CLASS_BAD: u16 = 0x2006;
const B_NREAD: u16 = 0x2007;
const B_NZERO: u16 = 0x2008;
const B_ALLOC: u16 = 0x2009;
const B_NCLAMP: u16 = 0x200A;
const B_SECHDR: u16 = 0x200B;
const B_SECTRUNC: u16 = 0x200C;
const B_TYPE: u16 = 0x2200; // + type 0..=4
const B_TYPE_OTHER: u16 = 0x200D;
const B_LENOK: u16 = 0x200E;
const B_OOB: u16 = 0x200F;
const B_LENBAD: u16 = 0x2010;
const B_SCAN: u16 = 0x2011;
const B_DONE: u16 = 0x2012;
const B_TRAIL: u16 = 0x2013;

pub struct MiniElf;

impl Target for MiniElf {
    fn name(&self) -> &'static str {
        "mini_elf"
    }

    fn run(&self, input: &[u8], raw: &mut RawCoverage) -> ExecOutcome {
        let mut ctx = Ctx::new(raw, self.max_steps());
        ctx.block(B_ENTRY);

        for (i, &m) in ELF_MAGIC.iter().enumerate() {
            if input.get(i) != Some(&m) {
                ctx.block(B_MAGIC_FAIL);
                return ExecOutcome::Normal;
            }
            ctx.block(super::spread(B_MAGIC, i as u16));
        }
        if input.len() < HEADER_LEN {
            ctx.block(B_HDR_TRUNC);
            return ExecOutcome::Normal;
        }
        let class = input[4];
        match class {
            1 => ctx.block(B_CLASS1),
            2 => ctx.block(B_CLASS2),
            _ => {
                ctx.block(B_CLASS_BAD);
                return ExecOutcome::Normal;
            }
        }
        let n = u16::from_le_bytes([input[5], input[6]]) as u32;
        ctx.block(B_NREAD);
        if n > MAX_SECTIONS {
            if class == 2 {
                ctx.block(B_ALLOC);
                return ExecOutcome::Crash(2);
            }
            ctx.block(B_NCLAMP);
            return ExecOutcome::Normal;
        }
        if n == 0 {
            ctx.block(B_NZERO);
        }

        let mut data_off = HEADER_LEN as u64 + 8 * n as u64;
        for i in 0..n {
            ctx.block(B_SECHDR);
            if !ctx.step(4) {
                return ExecOutcome::Hang;
            }
            let rec = HEADER_LEN + 8 * i as usize;
            if rec + 8 > input.len() {
                ctx.block(B_SECTRUNC);
                return ExecOutcome::Normal;
            }
            let ty = u32::from_le_bytes(input[rec..rec + 4].try_into().unwrap());
            let len = u32::from_le_bytes(input[rec + 4..rec + 8].try_into().unwrap());
            match ty {
                0..=4 => ctx.block(B_TYPE + ty as u16),
                _ => ctx.block(B_TYPE_OTHER),
            }
            if data_off + len as u64 > input.len() as u64 {
                if ty == 4 {
                    ctx.block(B_OOB);
                    return ExecOutcome::Crash(1);
                }
                ctx.block(B_LENBAD);
                return ExecOutcome::Normal;
            }
            ctx.block(B_LENOK);
            let payload = &input[data_off as usize..(data_off + len as u64) as usize];
            for chunk in payload.chunks(16) {
                if !ctx.step(chunk.len() as u64) {
                    return ExecOutcome::Hang;
                }
                ctx.block(B_SCAN);
            }
            data_off += len as u64;
        }
        ctx.block(B_DONE);
        if (data_off as usize) < input.len() {
            ctx.block(B_TRAIL);
        }
        ExecOutcome::Normal
    }

    fn seed_corpus(&self) -> Vec<Vec<u8>> {
        let specs: [&[(u32, &[u8])]; 10] = [
            &[(0, b"zero section padding ok."), (1, b"text-ish payload bytes here")],
            &[(1, b"hello world payload data"), (2, b"BBBBBBBBBBBBBBBBBBBB")],
            &[(2, b"symbols: a b c d e f g h"), (3, b"relocation-style junk..")],
            &[(3, b"rrrrrrrrrrrrrrrrrrrrrrrrrr"), (0, b"tail padding section")],
            &[(0, b"0123456789abcdef0123456789abcdef"), (1, b"strings live here\x00more")],
            &[(1, b"one two three four five six"), (2, b"cccccccccccccccc"), (3, b"dddddddd")],
            &[(2, b"alpha beta gamma delta"), (2, b"epsilon zeta eta theta")],
            &[(3, b"struct-like 1234 5678 9abc"), (1, b"notes notes notes notes notes")],
            &[(1, b"data segment with filler"), (0, b"................"), (2, b"short")],
            &[(2, b"the quick brown fox jumps"), (3, b"over the lazy dog twice!")],
        ];
        specs.iter().map(|sections| build_elf(1, sections)).collect()
    }
}

/// Assemble a well-formed file: header, record table, then payloads.
pub fn build_elf(class: u8, sections: &[(u32, &[u8])]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&ELF_MAGIC);
    out.push(class);
    out.extend_from_slice(&(sections.len() as u16).to_le_bytes());
    for &(ty, payload) in sections {
        out.extend_from_slice(&ty.to_le_bytes());
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    }
    for &(_, payload) in sections {
        out.extend_from_slice(payload);
    }
    out
}

/// Crash site 1 witness: one type-4 section declaring more payload than the
/// file holds.
pub fn witness_oob_read() -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&ELF_MAGIC);
    out.push(1);
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&4u32.to_le_bytes());
    out.extend_from_slice(&0xFFFFu32.to_le_bytes());
    out.extend_from_slice(b"tiny");
    out
}

/// Crash site 2 witness: class 2 with an oversized section count.
pub fn witness_alloc_overflow() -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&ELF_MAGIC);
    out.push(2);
    out.extend_from_slice(&2000u16.to_le_bytes());
    out
}
