//! Tour of the built-in targets: run each shipped corpus, show coverage
//! footprints, and trigger every planted crash with a hand-built witness.
//!
//! Run with: cargo run --release -p neufuzz --example toy_targets

use neufuzz::coverage::ExecOutcome;
use neufuzz::targets::{self, Target};

fn main() {
    for name in targets::target_names() {
        let target = targets::by_name(name).unwrap();
        let corpus = target.seed_corpus();
        println!("== {name}: {} seeds", corpus.len());
        for (i, seed) in corpus.iter().enumerate().take(3) {
            let (outcome, map) = target.execute(seed);
            println!(
                "   seed {i}: {} bytes -> {:?}, {} edges, path {:016x}",
                seed.len(),
                outcome,
                map.edge_count(),
                map.path_hash()
            );
        }
    }

    println!("\nplanted crash witnesses:");
    let cases: Vec<(&str, Vec<u8>)> = vec![
        ("mini_elf", targets::witness_oob_read()),
        ("mini_elf", targets::witness_alloc_overflow()),
        ("mini_png", targets::witness_over_read()),
        ("mini_xml", targets::witness_deep_nesting()),
    ];
    for (name, witness) in cases {
        let target = targets::by_name(name).unwrap();
        let (outcome, map) = target.execute(&witness);
        match outcome {
            ExecOutcome::Crash(site) => println!(
                "   {name}: {} bytes -> crash site {site} (path {:016x})",
                witness.len(),
                map.path_hash()
            ),
            other => println!("   {name}: unexpected {:?}", other),
        }
    }
}
