//! Coverage basics: execute a target twice, compare the classified maps with
//! the strictly-less score, and watch the virgin map admit only new behavior.
//!
//! Run with: cargo run --release -p neufuzz --example coverage_scoring

use neufuzz::coverage::{strictly_less_score, xor_popcount, VirginMap};
use neufuzz::targets::{self, Target};

fn main() {
    let target = targets::by_name("mini_elf").unwrap();

    let valid = targets::build_elf(1, &[(1, b"hello payload"), (2, b"world payload")]);
    let truncated = &valid[..20];

    let (_, full_map) = target.execute(&valid);
    let (_, part_map) = target.execute(truncated);

    println!("edges: full parse {}, truncated parse {}", full_map.edge_count(), part_map.edge_count());
    println!(
        "s(truncated, full) = {}   (coverage bits the full parse adds)",
        strictly_less_score(&part_map, &full_map)
    );
    println!(
        "s(full, truncated) = {}   (bits the truncated parse adds: none)",
        strictly_less_score(&full_map, &part_map)
    );
    println!(
        "partition check: s(a,b) + s(b,a) = {} = popcount(a xor b) = {}",
        strictly_less_score(&part_map, &full_map) + strictly_less_score(&full_map, &part_map),
        xor_popcount(&part_map, &full_map)
    );

    let mut virgin = VirginMap::new();
    println!("\nvirgin map: {} bits set initially", virgin.popcount());
    assert!(virgin.commit_gain(&part_map), "first execution always gains");
    println!("after truncated input: {} bits cleared", virgin.bits_cleared());
    assert!(virgin.commit_gain(&full_map), "full parse reaches new edges");
    println!("after full input:      {} bits cleared", virgin.bits_cleared());
    assert!(!virgin.commit_gain(&full_map), "replaying the same input gains nothing");
    println!("replay gains nothing; path hash stays {:016x}", full_map.path_hash());
}
