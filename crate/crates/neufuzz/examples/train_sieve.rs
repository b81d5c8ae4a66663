//! End-to-end sieve training on the magic16 target: collect samples, build
//! the filtered dataset, train a small LSTM and inspect the learned heat map.
//!
//! Run with: cargo run --release -p neufuzz --example train_sieve

use neufuzz::fuzzer::{Budget, Campaign, CampaignConfig, VecSink};
use neufuzz::neural::{build_dataset, train, Arch, ModelConfig, TrainConfig};
use neufuzz::targets::{self, MAGIC16_KEY};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let target = targets::by_name("magic16").unwrap();
    let seeds = target.seed_corpus();

    println!("collecting samples (rate 1.0) ...");
    let campaign = Campaign::new(&*target, CampaignConfig::baseline(1, Budget::execs(150_000)));
    let mut sink = VecSink::default();
    let result = campaign.run_collecting(&seeds, 1.0, &mut sink).unwrap();
    println!(
        "  {} execs, {} gains, {} records sampled",
        result.stats.total_execs,
        result.stats.input_gains,
        sink.0.len()
    );

    let positives = sink.0.iter().filter(|r| r.score > 0).count();
    println!("  {positives} records carry score > 0");

    let dataset = build_dataset(&sink.0, 0, 64);
    println!(
        "  dataset: {} examples in {} bins {:?}",
        dataset.len(),
        dataset.bins.len(),
        dataset.bins.keys().collect::<Vec<_>>()
    );

    println!("training lstm/1/64 ...");
    let config = ModelConfig::new(Arch::Lstm, 1, 64).unwrap();
    let tc = TrainConfig { steps: 2_000, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (model, report) = train::<f32, _>(&dataset, config, &tc, &mut rng).unwrap();
    println!(
        "  loss: {:.4} (step 1) -> {:.4} (step {})",
        report.loss_history[0],
        report.final_loss,
        report.loss_history.len()
    );

    // Held-out inputs the campaign never saw: random key progress, random tails.
    let mut eval_rng = ChaCha8Rng::seed_from_u64(999);
    let mut wins = 0;
    let mut mean_head_total = 0.0;
    let mut mean_tail_total = 0.0;
    let trials = 20;
    for t in 0..trials {
        let progress = t % 17;
        let mut input = Vec::with_capacity(64);
        for (i, &k) in MAGIC16_KEY.iter().enumerate() {
            input.push(if i < progress { k } else { eval_rng.gen() });
        }
        for _ in 16..64 {
            input.push(eval_rng.gen());
        }
        let heat = model.predict_heatmap(&input);
        let head: f32 = heat[..16].iter().sum::<f32>() / 16.0;
        let tail: f32 = heat[16..].iter().sum::<f32>() / 48.0;
        mean_head_total += head as f64;
        mean_tail_total += tail as f64;
        if head > tail {
            wins += 1;
        }
    }
    println!(
        "held-out heat: key region {:.4} vs tail {:.4}; key hotter in {wins}/{trials} inputs",
        mean_head_total / trials as f64,
        mean_tail_total / trials as f64
    );

    // Visualize one heat map.
    let sample = &seeds[4];
    let heat = model.predict_heatmap(sample);
    println!("\nper-byte heat of seed 4 (16 bytes per row, quartile glyphs . : + #):");
    for (row, chunk) in heat.chunks(16).enumerate() {
        let glyphs: String = chunk
            .iter()
            .map(|&h| match h {
                h if h >= 0.75 => '#',
                h if h >= 0.5 => '+',
                h if h >= 0.25 => ':',
                _ => '.',
            })
            .collect();
        println!("  {:04x}  {}", row * 16, glyphs);
    }
}
