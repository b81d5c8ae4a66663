//! Built-in fuzzing targets: deterministic, internally instrumented toy
//! format parsers with multi-stage structure and planted crashes.
//!
//! Each target is an in-process interpreter rather than a subprocess. That
//! gives exact determinism (identical input always yields an identical
//! outcome and coverage map), zero exec overhead, and portable coverage.
//! Malformed input degrades coverage; it never faults the harness.

mod magic16;
mod mini_elf;
mod mini_png;
mod mini_xml;

pub use magic16::{Magic16, KEY as MAGIC16_KEY};
pub use mini_elf::{build_elf, witness_alloc_overflow, witness_oob_read, MiniElf, ELF_MAGIC};
pub use mini_png::{witness_over_read, MiniPng, PngBuilder, PNG_SIG};
pub use mini_xml::{witness_deep_nesting, MiniXml};

use crate::coverage::{record_edge, CoverageMap, ExecOutcome, RawCoverage};

/// Default interpreter step budget per execution.
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

/// A deterministic fuzzing target.
pub trait Target {
    fn name(&self) -> &'static str;

    fn max_steps(&self) -> u64 {
        DEFAULT_MAX_STEPS
    }

    /// Interpret `input`, recording edges into `raw`. The caller owns the
    /// scratch buffer so the hot loop does not reallocate per execution.
    fn run(&self, input: &[u8], raw: &mut RawCoverage) -> ExecOutcome;

    /// Small valid files produced by a built-in writer, so campaigns are
    /// self-contained.
    fn seed_corpus(&self) -> Vec<Vec<u8>>;

    /// Convenience wrapper allocating fresh scratch: one execution in, one
    /// classified map out.
    fn execute(&self, input: &[u8]) -> (ExecOutcome, CoverageMap) {
        let mut raw = RawCoverage::new();
        let outcome = self.run(input, &mut raw);
        (outcome, CoverageMap::classify(&raw))
    }
}

/// Look up a built-in target by its CLI name.
pub fn by_name(name: &str) -> Option<Box<dyn Target>> {
    match name {
        "magic16" => Some(Box::new(Magic16)),
        "mini_elf" => Some(Box::new(MiniElf)),
        "mini_png" => Some(Box::new(MiniPng)),
        "mini_xml" => Some(Box::new(MiniXml)),
        _ => None,
    }
}

pub fn target_names() -> &'static [&'static str] {
    &["magic16", "mini_elf", "mini_png", "mini_xml"]
}

/// Well-spread block id for position-indexed blocks. Sequential ids collide
/// under the `cur ^ (prev >> 1)` edge hash, so positions are scattered with a
/// multiplicative mix the way real instrumentation assigns random ids.
pub(crate) fn spread(base: u16, i: u16) -> u16 {
    base ^ i.wrapping_mul(0x9E37)
}

/// Interpreter context shared by all toy targets: tracks the previous block
/// for edge hashing and enforces the step budget.
pub(crate) struct Ctx<'a> {
    raw: &'a mut RawCoverage,
    prev: u16,
    steps: u64,
    max_steps: u64,
}

impl<'a> Ctx<'a> {
    pub(crate) fn new(raw: &'a mut RawCoverage, max_steps: u64) -> Self {
        Ctx { raw, prev: 0, steps: 0, max_steps }
    }

    /// Enter a basic block: records the (prev, cur) edge.
    pub(crate) fn block(&mut self, id: u16) {
        record_edge(self.raw, self.prev, id);
        self.prev = id;
    }

    /// Account `n` interpreter steps. Returns false once the budget is
    /// exhausted; the caller must then bail out with a hang.
    #[must_use]
    pub(crate) fn step(&mut self, n: u64) -> bool {
        self.steps += n;
        self.steps <= self.max_steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn all_targets() -> Vec<Box<dyn Target>> {
        target_names().iter().map(|n| by_name(n).unwrap()).collect()
    }

    #[test]
    fn registry_knows_all_targets() {
        for name in target_names() {
            assert!(by_name(name).is_some(), "missing target {name}");
        }
        assert!(by_name("nope").is_none());
    }

    #[test]
    fn corpus_sizes_are_reasonable() {
        for t in all_targets() {
            let corpus = t.seed_corpus();
            assert!(
                (8..=16).contains(&corpus.len()),
                "{} ships {} seeds",
                t.name(),
                corpus.len()
            );
            for seed in &corpus {
                assert!(!seed.is_empty());
                assert!(seed.len() <= 512, "{} seed unexpectedly large", t.name());
            }
        }
    }

    #[test]
    fn execution_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for t in all_targets() {
            for _ in 0..250 {
                let len = rng.gen_range(0..200);
                let input: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
                let (o1, m1) = t.execute(&input);
                let (o2, m2) = t.execute(&input);
                assert_eq!(o1, o2, "{} outcome must be deterministic", t.name());
                assert_eq!(m1, m2, "{} map must be deterministic", t.name());
            }
        }
    }

    #[test]
    fn seeds_execute_normally() {
        for t in all_targets() {
            for seed in t.seed_corpus() {
                let (outcome, map) = t.execute(&seed);
                assert_eq!(outcome, ExecOutcome::Normal, "{} seed crashed or hung", t.name());
                assert!(map.edge_count() > 1, "{} seed exercises almost nothing", t.name());
            }
        }
    }

    #[test]
    fn targets_expose_at_least_thirty_edges() {
        // Union of edges over the shipped corpus plus crash witnesses.
        for t in all_targets() {
            let mut edges: HashSet<u16> = HashSet::new();
            let mut inputs = t.seed_corpus();
            inputs.extend(crash_witnesses(t.name()));
            // A few malformed variants to hit reject branches.
            let mut mutated: Vec<Vec<u8>> = Vec::new();
            for seed in &inputs {
                for pos in 0..seed.len().min(24) {
                    let mut v = seed.clone();
                    v[pos] ^= 0xFF;
                    mutated.push(v);
                }
            }
            inputs.extend(mutated);
            for input in &inputs {
                let (_, map) = t.execute(input);
                edges.extend(map.iter_nonzero().map(|(i, _)| i));
            }
            assert!(edges.len() >= 30, "{} exposes only {} distinct edges", t.name(), edges.len());
        }
    }

    fn crash_witnesses(name: &str) -> Vec<Vec<u8>> {
        match name {
            "mini_elf" => vec![mini_elf::witness_oob_read(), mini_elf::witness_alloc_overflow()],
            "mini_png" => vec![mini_png::witness_over_read()],
            "mini_xml" => vec![mini_xml::witness_deep_nesting()],
            _ => vec![],
        }
    }

    #[test]
    fn planted_crashes_are_reachable() {
        let elf = MiniElf;
        assert!(matches!(elf.execute(&mini_elf::witness_oob_read()).0, ExecOutcome::Crash(1)));
        assert!(matches!(
            elf.execute(&mini_elf::witness_alloc_overflow()).0,
            ExecOutcome::Crash(2)
        ));
        let png = MiniPng;
        assert!(matches!(png.execute(&mini_png::witness_over_read()).0, ExecOutcome::Crash(1)));
        let xml = MiniXml;
        assert!(matches!(xml.execute(&mini_xml::witness_deep_nesting()).0, ExecOutcome::Crash(1)));
    }

    #[test]
    fn appending_to_valid_seeds_preserves_edges() {
        // Monotone structure for the sequential binary formats.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for name in ["mini_elf", "mini_png"] {
            let t = by_name(name).unwrap();
            for seed in t.seed_corpus() {
                let (_, base) = t.execute(&seed);
                let suffix_len = rng.gen_range(1..64);
                let mut extended = seed.clone();
                extended.extend((0..suffix_len).map(|_| rng.gen::<u8>()));
                let (_, ext) = t.execute(&extended);
                for (idx, _) in base.iter_nonzero() {
                    assert_ne!(
                        ext.bucket_at(idx as usize),
                        0,
                        "{name}: edge {idx} vanished after append"
                    );
                }
            }
        }
    }

    #[test]
    fn tiny_step_budget_hangs() {
        struct Strict;
        impl Target for Strict {
            fn name(&self) -> &'static str {
                "strict"
            }
            fn max_steps(&self) -> u64 {
                1
            }
            fn run(&self, input: &[u8], raw: &mut RawCoverage) -> ExecOutcome {
                let mut ctx = Ctx::new(raw, self.max_steps());
                ctx.block(1);
                for _ in input {
                    if !ctx.step(1) {
                        return ExecOutcome::Hang;
                    }
                }
                ExecOutcome::Normal
            }
            fn seed_corpus(&self) -> Vec<Vec<u8>> {
                vec![vec![0]]
            }
        }
        assert_eq!(Strict.execute(&[1, 2, 3]).0, ExecOutcome::Hang);
        assert_eq!(Strict.execute(&[1]).0, ExecOutcome::Normal);
    }
}
