//! The mutation catalog up close: deterministic stage ordering and volume,
//! then a few stacked havoc mutants with their touched-byte reports.
//!
//! Run with: cargo run --release -p neufuzz --example mutation_catalog

use neufuzz::mutation::{
    deterministic_stage, deterministic_stage_len, havoc_mutation, interesting_values, Dictionary,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let seed = b"\x7fELF\x01\x02\x00payload".to_vec();
    let dict = Dictionary::parse("\\x7fELF\nPNG").unwrap();

    println!("seed: {} bytes; deterministic stage emits {} proposals", seed.len(),
        deterministic_stage_len(seed.len(), &dict));

    println!("\nfirst six deterministic proposals (walking 1-bit flips):");
    for (i, p) in deterministic_stage(&seed, &dict).take(6).enumerate() {
        println!(
            "  #{i}: {:?} touched {:?} first bytes {:02x} {:02x}",
            p.op_trace[0], p.touched, p.data[0], p.data[1]
        );
    }

    for width in [1usize, 2, 4] {
        println!("interesting values ({width} byte): {:?}", interesting_values(width));
    }

    println!("\nthree havoc mutants (same rng seed reproduces them exactly):");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..3 {
        let p = havoc_mutation(&seed, &mut rng, &dict);
        println!(
            "  havoc {i}: {} stacked ops, {} -> {} bytes, length_changed={}, touched {:?}",
            p.op_trace.len(),
            seed.len(),
            p.data.len(),
            p.length_changed,
            p.touched
        );
    }
}
