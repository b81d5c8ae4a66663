//! Paired baseline vs. augmented campaigns on the mini_elf target, sharing
//! RNG seeds: collect, train, then compare executions-to-first-crash and
//! input gain at a fixed execution mark.
//!
//! Run with: cargo run --release -p neufuzz --example campaign_compare

use neufuzz::fuzzer::{Budget, Campaign, CampaignConfig, VecSink};
use neufuzz::neural::{build_dataset, train, Arch, Model, ModelConfig, TrainConfig};
use neufuzz::sieve::SieveConfig;
use neufuzz::targets;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let target = targets::by_name("mini_elf").unwrap();
    let seeds = target.seed_corpus();

    println!("collecting samples on mini_elf ...");
    let collect = Campaign::new(&*target, CampaignConfig::baseline(1, Budget::execs(120_000)));
    let mut sink = VecSink::default();
    let result = collect.run_collecting(&seeds, 0.5, &mut sink).unwrap();
    let positives = sink.0.iter().filter(|r| r.score > 0).count();
    println!(
        "  {} execs, {} records, {} positives",
        result.stats.total_execs,
        sink.0.len(),
        positives
    );

    let dataset = build_dataset(&sink.0, 0, 64);
    println!("  dataset: {} examples, bins {:?}", dataset.len(), dataset.bins.keys().collect::<Vec<_>>());

    println!("training lstm/1/64 ...");
    let config = ModelConfig::new(Arch::Lstm, 1, 64).unwrap();
    let tc = TrainConfig { steps: 3_000, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (model, report) = train::<f32, _>(&dataset, config, &tc, &mut rng).unwrap();
    println!("  loss {:.4} -> {:.4}", report.loss_history[0], report.final_loss);

    heat_report(&model, &seeds);

    let sieve = SieveConfig::default();
    println!("\npaired trials (budget 400k execs each):");
    println!("  trial  base_crash  aug_crash  base_gain@200k  aug_gain@200k  veto_rate");
    let mut base_crashes = Vec::new();
    let mut aug_crashes = Vec::new();
    for trial in 0..5u64 {
        let rng_seed = 1000 + trial;
        let budget = Budget::execs(400_000);
        let base = Campaign::new(&*target, CampaignConfig::baseline(rng_seed, budget))
            .run(&seeds)
            .unwrap();
        let aug = Campaign::new(&*target, CampaignConfig::augmented(rng_seed, budget, sieve))
            .with_model(&model)
            .run(&seeds)
            .unwrap();
        let gains_at = |r: &neufuzz::fuzzer::CampaignResult, mark: u64| {
            r.stats
                .rows
                .iter()
                .filter(|row| row.total_execs <= mark)
                .map(|row| row.input_gains)
                .max()
                .unwrap_or(0)
        };
        let veto_rate = aug.stats.vetoed_execs as f64
            / (aug.stats.vetoed_execs + aug.stats.total_execs).max(1) as f64;
        println!(
            "  {:>5}  {:>10}  {:>9}  {:>14}  {:>13}  {:>8.3}",
            trial,
            base.first_crash_exec().map(|e| e.to_string()).unwrap_or("-".into()),
            aug.first_crash_exec().map(|e| e.to_string()).unwrap_or("-".into()),
            gains_at(&base, 200_000),
            gains_at(&aug, 200_000),
            veto_rate
        );
        base_crashes.push(base.first_crash_exec().unwrap_or(u64::MAX));
        aug_crashes.push(aug.first_crash_exec().unwrap_or(u64::MAX));
    }
    base_crashes.sort_unstable();
    aug_crashes.sort_unstable();
    println!(
        "median execs to first crash: baseline {:?}, augmented {:?}",
        base_crashes[base_crashes.len() / 2],
        aug_crashes[aug_crashes.len() / 2]
    );
}

fn heat_report(model: &Model<f32>, seeds: &[Vec<u8>]) {
    println!("trained heat by region (header: bytes 0..7, records: 7..7+8n, payload: rest):");
    for (i, seed) in seeds.iter().take(4).enumerate() {
        let heat = model.predict_heatmap(seed);
        let n = u16::from_le_bytes([seed[5], seed[6]]) as usize;
        let rec_end = 7 + 8 * n;
        let mean = |range: std::ops::Range<usize>| -> f64 {
            if range.is_empty() {
                return 0.0;
            }
            let len = range.len() as f64;
            heat[range].iter().map(|&h| h as f64).sum::<f64>() / len
        };
        println!(
            "  seed {i}: header {:.4}  records {:.4}  payload {:.4}   (len {}, {} sections)",
            mean(0..7),
            mean(7..rec_end),
            mean(rec_end..seed.len()),
            seed.len(),
            n
        );
    }
}
