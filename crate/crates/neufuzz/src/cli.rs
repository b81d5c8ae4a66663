//! Command-line surface: `fuzz`, `collect`, `train`, `predict`, `report`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error. Every
//! command is deterministic given its flags; campaigns require an explicit
//! RNG seed.

use crate::fuzzer::{
    Budget, Campaign, CampaignConfig, CampaignError, CampaignMode, CampaignResult, STATS_HEADER,
};
use crate::mutation::Dictionary;
use crate::neural::{
    build_dataset, load_model, read_samples, save_model, train, Arch, Model, ModelConfig,
    SampleWriter, TrainConfig,
};
use crate::sieve::SieveConfig;
use crate::targets::{self, Target};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

fn config_err(m: impl Into<String>) -> CliError {
    CliError::Config(m.into())
}

fn runtime_err(m: impl Into<String>) -> CliError {
    CliError::Runtime(m.into())
}

#[derive(Parser)]
#[command(name = "neufuzz", version, about = "Greybox fuzzer with a learned byte sieve")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a fuzzing campaign and write stats plus artifacts.
    Fuzz(FuzzArgs),
    /// Run a baseline campaign that samples (seed, mutant, score) records.
    Collect(CollectArgs),
    /// Build the filtered dataset from samples and train a sieve model.
    Train(TrainArgs),
    /// Print the per-byte heat map of a file under a trained model.
    Predict(PredictArgs),
    /// Merge stats.csv series from several campaign directories.
    Report(ReportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Baseline,
    Augmented,
}

#[derive(Args)]
struct CampaignArgs {
    /// Built-in target name (magic16, mini_elf, mini_png, mini_xml).
    #[arg(long)]
    target: String,
    /// Directory of seed files; the target's built-in corpus when omitted.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// RNG seed (campaigns are reproducible by construction).
    #[arg(long)]
    rng: u64,
    /// Stop after this many executions.
    #[arg(long)]
    execs: Option<u64>,
    /// Stop after this many (virtual) seconds.
    #[arg(long)]
    secs: Option<f64>,
    /// Havoc proposals per seed round.
    #[arg(long = "havoc-limit", default_value_t = crate::fuzzer::DEFAULT_HAVOC_LIMIT)]
    havoc_limit: u32,
    /// Dictionary tokens, one per line, \xNN-escaped, at most 4 bytes each.
    #[arg(long)]
    dict: Option<PathBuf>,
}

#[derive(Args)]
struct FuzzArgs {
    #[command(flatten)]
    campaign: CampaignArgs,
    /// Output directory (stats.csv, queue/, crashes/).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Baseline)]
    mode: ModeArg,
    /// Trained model file (required in augmented mode).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Veto cutoff: execute iff more than this many touched bytes are useful.
    #[arg(long, default_value_t = SieveConfig::default().alpha, allow_negative_numbers = true)]
    alpha: i64,
    /// Heat binarization threshold.
    #[arg(long, default_value_t = SieveConfig::default().theta)]
    theta: f32,
    /// Per-seed probability of skipping the veto for one round.
    #[arg(long = "p-explore", default_value_t = SieveConfig::default().p_explore)]
    p_explore: f64,
}

#[derive(Args)]
struct CollectArgs {
    #[command(flatten)]
    campaign: CampaignArgs,
    /// Output directory (samples.nfzd, stats.csv).
    #[arg(long)]
    out: PathBuf,
    /// Per-execution sampling probability.
    #[arg(long, default_value_t = 0.01)]
    rate: f64,
}

#[derive(Args)]
struct TrainArgs {
    /// Samples file produced by `collect`.
    #[arg(long)]
    samples: PathBuf,
    /// Where to write the trained model.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "lstm")]
    arch: String,
    #[arg(long, default_value_t = 1)]
    layers: usize,
    #[arg(long, default_value_t = 64)]
    chunk: usize,
    #[arg(long, default_value_t = 20_000)]
    steps: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 5e-5)]
    lr: f64,
    #[arg(long, default_value_t = 1)]
    rng: u64,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// File to annotate.
    #[arg(long)]
    file: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Campaign output directories, each holding a stats.csv.
    #[arg(required = true)]
    dirs: Vec<PathBuf>,
}

/// Parse and dispatch. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here with non-error kinds
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Fuzz(args) => cmd_fuzz(args),
        Command::Collect(args) => cmd_collect(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve_target(name: &str) -> Result<Box<dyn Target>, CliError> {
    targets::by_name(name).ok_or_else(|| {
        config_err(format!(
            "unknown target {name:?}; available: {}",
            targets::target_names().join(", ")
        ))
    })
}

fn load_seeds(target: &dyn Target, dir: &Option<PathBuf>) -> Result<Vec<Vec<u8>>, CliError> {
    let Some(dir) = dir else {
        return Ok(target.seed_corpus());
    };
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| config_err(format!("seed dir {}: {e}", dir.display())))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    entries.sort();
    let mut seeds = Vec::with_capacity(entries.len());
    for path in &entries {
        let data =
            std::fs::read(path).map_err(|e| runtime_err(format!("{}: {e}", path.display())))?;
        if data.is_empty() {
            return Err(config_err(format!("seed file {} is empty", path.display())));
        }
        seeds.push(data);
    }
    if seeds.is_empty() {
        return Err(config_err(format!("seed dir {} holds no files", dir.display())));
    }
    Ok(seeds)
}

fn load_dictionary(path: &Option<PathBuf>) -> Result<Dictionary, CliError> {
    match path {
        None => Ok(Dictionary::empty()),
        Some(p) => Dictionary::load(p).map_err(config_err),
    }
}

fn budget_from(execs: Option<u64>, secs: Option<f64>) -> Result<Budget, CliError> {
    if execs.is_none() && secs.is_none() {
        return Err(config_err("a budget is required: pass --execs and/or --secs"));
    }
    Ok(Budget { max_execs: execs, max_secs: secs })
}

fn campaign_error(e: CampaignError) -> CliError {
    match e {
        CampaignError::Io(e) => runtime_err(e.to_string()),
        other => config_err(other.to_string()),
    }
}

fn cmd_fuzz(args: FuzzArgs) -> Result<(), CliError> {
    let target = resolve_target(&args.campaign.target)?;
    let seeds = load_seeds(&*target, &args.campaign.seeds)?;
    let dict = load_dictionary(&args.campaign.dict)?;
    let budget = budget_from(args.campaign.execs, args.campaign.secs)?;

    let sieve = SieveConfig { alpha: args.alpha, theta: args.theta, p_explore: args.p_explore };
    let mode = match args.mode {
        ModeArg::Baseline => CampaignMode::Baseline,
        ModeArg::Augmented => CampaignMode::Augmented,
    };
    let model: Option<Model<f32>> = match (mode, &args.model) {
        (CampaignMode::Augmented, Some(path)) => {
            Some(load_model(path).map_err(|e| config_err(e.to_string()))?)
        }
        (CampaignMode::Augmented, None) => {
            return Err(config_err("--mode augmented requires --model"));
        }
        (CampaignMode::Baseline, _) => None,
    };

    let config = CampaignConfig {
        mode,
        sieve,
        havoc_limit: args.campaign.havoc_limit,
        budget,
        rng_seed: args.campaign.rng,
    };
    let mut campaign = Campaign::new(&*target, config).with_dictionary(dict);
    if let Some(model) = &model {
        campaign = campaign.with_model(model);
    }
    let result = campaign.run(&seeds).map_err(campaign_error)?;
    write_artifacts(&args.out, &result)?;
    println!(
        "done: {} execs ({} vetoed), {} input gains, {} unique crashes, queue {}",
        result.stats.total_execs,
        result.stats.vetoed_execs,
        result.stats.input_gains,
        result.stats.unique_crashes,
        result.queue.len()
    );
    Ok(())
}

fn cmd_collect(args: CollectArgs) -> Result<(), CliError> {
    if !(args.rate > 0.0 && args.rate <= 1.0) {
        return Err(config_err("--rate must lie in (0, 1]"));
    }
    let target = resolve_target(&args.campaign.target)?;
    let seeds = load_seeds(&*target, &args.campaign.seeds)?;
    let dict = load_dictionary(&args.campaign.dict)?;
    let budget = budget_from(args.campaign.execs, args.campaign.secs)?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| runtime_err(format!("{}: {e}", args.out.display())))?;
    let samples_path = args.out.join("samples.nfzd");
    let mut writer = SampleWriter::create(&samples_path).map_err(|e| runtime_err(e.to_string()))?;

    let config = CampaignConfig {
        havoc_limit: args.campaign.havoc_limit,
        ..CampaignConfig::baseline(args.campaign.rng, budget)
    };
    let campaign = Campaign::new(&*target, config).with_dictionary(dict);
    let result =
        campaign.run_collecting(&seeds, args.rate, &mut writer).map_err(campaign_error)?;
    let written = writer.finish().map_err(|e| runtime_err(e.to_string()))?;
    std::fs::write(args.out.join("stats.csv"), result.stats.to_csv())
        .map_err(|e| runtime_err(e.to_string()))?;
    println!(
        "collected {written} samples over {} execs into {}",
        result.stats.total_execs,
        samples_path.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let arch = Arch::parse(&args.arch).ok_or_else(|| {
        config_err(format!("unknown arch {:?} (lstm, bilstm, seq2seq)", args.arch))
    })?;
    let config =
        ModelConfig::new(arch, args.layers, args.chunk).map_err(|e| config_err(e.to_string()))?;
    let records = read_samples(&args.samples).map_err(|e| runtime_err(e.to_string()))?;
    let dataset = build_dataset(&records, 0, config.chunk_bits);
    if dataset.is_empty() {
        return Err(config_err(
            "no training examples survive the score > 0 filter; collect more samples",
        ));
    }

    println!(
        "training {} params={} on {} examples ({} bins), lr={:e}, steps={}, batch={}",
        config,
        config.param_count(),
        dataset.len(),
        dataset.bins.len(),
        args.lr,
        args.steps,
        args.batch
    );
    let tc = TrainConfig {
        steps: args.steps,
        batch: args.batch,
        adam: crate::neural::AdamParams { lr: args.lr, ..Default::default() },
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.rng);
    let (model, report) = train::<f32, _>(&dataset, config, &tc, &mut rng)
        .map_err(|e| runtime_err(e.to_string()))?;
    save_model(&model, &args.out).map_err(|e| runtime_err(e.to_string()))?;
    println!("final loss: {:.6}", report.final_loss);
    println!("saved {} ({} parameters) to {}", config, config.param_count(), args.out.display());
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let model = load_model(&args.model).map_err(|e| config_err(e.to_string()))?;
    let data = std::fs::read(&args.file)
        .map_err(|e| runtime_err(format!("{}: {e}", args.file.display())))?;
    if data.is_empty() {
        return Err(config_err(format!("{} is empty", args.file.display())));
    }
    let heat = model.predict_heatmap(&data);
    print!("{}", render_heat_csv(&data, &heat));
    println!();
    print!("{}", render_hex_view(&data, &heat));
    Ok(())
}

/// CSV rows: offset, hex byte, heat to three decimals.
pub fn render_heat_csv(data: &[u8], heat: &[f32]) -> String {
    let mut out = String::from("offset,byte,heat\n");
    for (i, (&b, &h)) in data.iter().zip(heat).enumerate() {
        out.push_str(&format!("{i},{b:02x},{h:.3}\n"));
    }
    out
}

fn quartile_glyph(h: f32) -> char {
    match h {
        h if h >= 0.75 => '#',
        h if h >= 0.5 => '+',
        h if h >= 0.25 => ':',
        _ => '.',
    }
}

/// Classic 16-bytes-per-line hex dump with one heat-quartile glyph per byte.
pub fn render_hex_view(data: &[u8], heat: &[f32]) -> String {
    let mut out = String::new();
    for (row, (bytes, heats)) in data.chunks(16).zip(heat.chunks(16)).enumerate() {
        let mut hex = String::with_capacity(48);
        for (i, b) in bytes.iter().enumerate() {
            if i > 0 {
                hex.push(' ');
            }
            hex.push_str(&format!("{b:02x}"));
        }
        let glyphs: String = heats.iter().map(|&h| quartile_glyph(h)).collect();
        out.push_str(&format!("{:08x}  {hex:<47}  |{glyphs}|\n", row * 16));
    }
    out
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let mut series = Vec::with_capacity(args.dirs.len());
    for dir in &args.dirs {
        let path = dir.join("stats.csv");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| runtime_err(format!("{}: {e}", path.display())))?;
        series.push(
            parse_stats_csv(&text).map_err(|e| runtime_err(format!("{}: {e}", path.display())))?,
        );
    }
    let merged = merge_mean_series(&series);
    print!("{merged}");
    eprint!("{}", final_summary(&series));
    Ok(())
}

pub(crate) fn parse_stats_csv(text: &str) -> Result<Vec<[f64; 7]>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == STATS_HEADER => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(format!("row {}: expected 7 fields, got {}", n + 1, fields.len()));
        }
        let mut row = [0f64; 7];
        for (i, f) in fields.iter().enumerate() {
            row[i] = f.parse::<f64>().map_err(|e| format!("row {}: {e}", n + 1))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Align snapshot series by row index, truncate to the shortest, and emit
/// the per-row mean of every metric.
pub(crate) fn merge_mean_series(series: &[Vec<[f64; 7]>]) -> String {
    let rows = series.iter().map(|s| s.len()).min().unwrap_or(0);
    let mut out = String::from(STATS_HEADER);
    out.push('\n');
    let n = series.len() as f64;
    for r in 0..rows {
        let mut mean = [0f64; 7];
        for s in series {
            for (m, v) in mean.iter_mut().zip(&s[r]) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        out.push_str(&format!("{:.6}", mean[0]));
        for v in &mean[1..] {
            if v.fract() == 0.0 {
                out.push_str(&format!(",{}", *v as u64));
            } else {
                out.push_str(&format!(",{v:.3}"));
            }
        }
        out.push('\n');
    }
    out
}

pub(crate) fn final_summary(series: &[Vec<[f64; 7]>]) -> String {
    let names = [
        "elapsed_s",
        "total_execs",
        "vetoed_execs",
        "queue_size",
        "input_gains",
        "virgin_bits",
        "unique_crashes",
    ];
    let mut out = format!("# final means over {} instance(s)\n", series.len());
    let finals: Vec<&[f64; 7]> = series.iter().filter_map(|s| s.last()).collect();
    if finals.is_empty() {
        return out;
    }
    for (i, name) in names.iter().enumerate() {
        let mean = finals.iter().map(|r| r[i]).sum::<f64>() / finals.len() as f64;
        out.push_str(&format!("# {name}: {mean:.3}\n"));
    }
    out
}

fn write_artifacts(outdir: &Path, result: &CampaignResult) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| runtime_err(format!("{}: {e}", outdir.display()));
    let queue_dir = outdir.join("queue");
    let crash_dir = outdir.join("crashes");
    std::fs::create_dir_all(&queue_dir).map_err(io_err)?;
    std::fs::create_dir_all(&crash_dir).map_err(io_err)?;
    std::fs::write(outdir.join("stats.csv"), result.stats.to_csv()).map_err(io_err)?;
    for entry in &result.queue {
        std::fs::write(queue_dir.join(format!("{:06}", entry.id)), &entry.data).map_err(io_err)?;
    }
    for crash in &result.crashes {
        let name = format!("site{:02}_{:016x}", crash.site, crash.path_hash);
        std::fs::write(crash_dir.join(name), &crash.input).map_err(io_err)?;
    }
    Ok(())
}
