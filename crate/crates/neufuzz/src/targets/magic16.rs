//! Synthetic target with a 16-byte key prefix. Bytes 0-15 are compared
//! byte-by-byte against a fixed key; each correct prefix byte unlocks one new
//! edge (and a mismatch records a position-specific reject edge). Everything
//! from byte 16 onward is consumed by a single loop whose coverage does not
//! depend on content. There is no crash site.

use super::{Ctx, Target};
use crate::coverage::{ExecOutcome, RawCoverage};

/// The fixed key. Several bytes sit in the 1-byte interesting-value set so
/// deterministic splices can land them.
pub const KEY: [u8; 16] = [
    0x4E, 0x46, 0x5A, 0x4D, 0x01, 0x20, 0x7F, 0x00, 0x89, 0x10, 0x40, 0xFF, 0x64, 0x05, 0x1F,
    0x80,
];

const B_ENTRY: u16 = 0x1001;
const B_MATCH: u16 = 0x1100; // + position
const B_MISS: u16 = 0x1200; // + position
const B_SHORT: u16 = 0x1002;
const B_KEY_DONE: u16 = 0x1003;
const B_TAIL_LOOP: u16 = 0x1004;
const B_TAIL_DONE: u16 = 0x1005;

pub struct Magic16;

impl Target for Magic16 {
    fn name(&self) -> &'static str {
        "magic16"
    }

    fn run(&self, input: &[u8], raw: &mut RawCoverage) -> ExecOutcome {
        let mut ctx = Ctx::new(raw, self.max_steps());
        ctx.block(B_ENTRY);
        for (i, &key_byte) in KEY.iter().enumerate() {
            if !ctx.step(1) {
                return ExecOutcome::Hang;
            }
            match input.get(i) {
                None => {
                    ctx.block(B_SHORT);
                    return ExecOutcome::Normal;
                }
                Some(&b) if b == key_byte => ctx.block(super::spread(B_MATCH, i as u16)),
                Some(_) => {
                    ctx.block(super::spread(B_MISS, i as u16));
                    return ExecOutcome::Normal;
                }
            }
        }
        ctx.block(B_KEY_DONE);
        for _ in &input[KEY.len()..] {
            if !ctx.step(1) {
                return ExecOutcome::Hang;
            }
            ctx.block(B_TAIL_LOOP);
        }
        ctx.block(B_TAIL_DONE);
        ExecOutcome::Normal
    }

    fn seed_corpus(&self) -> Vec<Vec<u8>> {
        // Seed j carries j correct key bytes; every remaining key byte is the
        // complement of the key, so a byte flip repairs it. Tails differ per
        // seed but never influence coverage.
        (0..16u8)
            .map(|j| {
                let mut seed = Vec::with_capacity(64);
                for (i, &k) in KEY.iter().enumerate() {
                    seed.push(if (i as u8) < j { k } else { k ^ 0xFF });
                }
                for i in 0..48u8 {
                    seed.push(0x30 + ((i.wrapping_mul(7)).wrapping_add(j * 13) % 64));
                }
                seed
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_hits_entry_only() {
        let (outcome, map) = Magic16.execute(&[]);
        assert_eq!(outcome, ExecOutcome::Normal);
        // entry edge plus the too-short edge
        assert_eq!(map.edge_count(), 2);
    }

    #[test]
    fn first_byte_right_second_wrong() {
        let mut input = vec![KEY[0], KEY[1] ^ 0x10];
        input.push(0);
        let (_, map) = Magic16.execute(&input);
        let (_, base) = Magic16.execute(&[KEY[0] ^ 0xFF]);
        // exactly one prefix-match edge beyond what an immediate miss sees
        let match_edges = map.edge_count();
        let base_edges = base.edge_count();
        assert_eq!(match_edges, base_edges + 1);
    }

    #[test]
    fn full_key_reaches_tail_loop() {
        let mut input = KEY.to_vec();
        input.extend_from_slice(&[1, 2, 3, 4]);
        let (outcome, map) = Magic16.execute(&input);
        assert_eq!(outcome, ExecOutcome::Normal);
        // entry + 16 matches + key-done + tail-entry + tail-self + tail-done
        assert_eq!(map.edge_count(), 21);
    }

    #[test]
    fn tail_content_does_not_affect_coverage() {
        let mut a = KEY.to_vec();
        a.extend_from_slice(&[0u8; 32]);
        let mut b = KEY.to_vec();
        b.extend_from_slice(&[0xABu8; 32]);
        assert_eq!(Magic16.execute(&a).1, Magic16.execute(&b).1);
    }

    #[test]
    fn tail_length_shifts_hit_buckets() {
        let mut a = KEY.to_vec();
        a.extend_from_slice(&[0u8; 2]);
        let mut b = KEY.to_vec();
        b.extend_from_slice(&[0u8; 9]);
        assert_ne!(Magic16.execute(&a).1, Magic16.execute(&b).1);
    }
}
