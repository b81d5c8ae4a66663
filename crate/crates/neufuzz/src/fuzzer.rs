//! Campaign engine: drives seeds round-robin through the deterministic and
//! havoc mutation stages, executes survivors of the veto, admits inputs that
//! gain coverage, dedups crashes and emits periodic stats snapshots.
//!
//! Campaigns are deterministic given their RNG seed: mutation, strategy and
//! sampling draws come from separate ChaCha streams (so the augmented mode's
//! extra draws cannot shift the mutation sequence), and the stats clock is
//! virtual (a fixed nominal cost per execution) rather than wall time.

use crate::coverage::{strictly_less_score, CoverageMap, ExecOutcome, RawCoverage, VirginMap};
use crate::mutation::{
    deterministic_stage, havoc_mutation_bounded, Dictionary, MutationProposal, MAX_INPUT_LEN,
};
use crate::neural::{Model, SampleRecord, SampleWriter};
use crate::sieve::{choose_strategy, should_execute, ByteMask, Sieve, SieveConfig, Strategy};
use crate::targets::Target;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{HashMap, HashSet};
use std::io::Write;

/// A stats snapshot is taken every this many executions.
pub const STATS_INTERVAL: u64 = 1_000;
/// Havoc proposals per seed round.
pub const DEFAULT_HAVOC_LIMIT: u32 = 512;
/// Nominal virtual cost of one execution, for the deterministic clock.
const VIRT_NS_PER_EXEC: u64 = 2_000;

/// One queue entry.
#[derive(Debug, Clone)]
pub struct SeedEntry {
    pub id: u32,
    pub data: Vec<u8>,
    pub parent_id: Option<u32>,
    /// Virtual seconds since campaign start at admission.
    pub discovery_time: f64,
    /// Executions performed while fuzzing this entry.
    pub exec_count: u64,
    pub favored: bool,
    /// The entry's own classified coverage.
    pub map: CoverageMap,
    det_done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsRow {
    pub elapsed_s: f64,
    pub total_execs: u64,
    pub vetoed_execs: u64,
    pub queue_size: u64,
    pub input_gains: u64,
    pub virgin_bits: u64,
    pub unique_crashes: u64,
}

pub const STATS_HEADER: &str =
    "elapsed_s,total_execs,vetoed_execs,queue_size,input_gains,virgin_bits,unique_crashes";

/// Cumulative campaign counters plus the snapshot series.
#[derive(Debug, Clone, Default)]
pub struct CampaignStats {
    pub rows: Vec<StatsRow>,
    pub total_execs: u64,
    pub vetoed_execs: u64,
    pub input_gains: u64,
    pub unique_crashes: u64,
    pub proposals_generated: u64,
    pub virgin_bits_cleared: u64,
}

impl CampaignStats {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(STATS_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:.6},{},{},{},{},{},{}\n",
                r.elapsed_s,
                r.total_execs,
                r.vetoed_execs,
                r.queue_size,
                r.input_gains,
                r.virgin_bits,
                r.unique_crashes
            ));
        }
        out
    }
}

/// A deduplicated crash: planted site plus coverage path.
#[derive(Debug, Clone)]
pub struct CrashRecord {
    pub site: u32,
    pub path_hash: u64,
    pub input: Vec<u8>,
    pub found_at_exec: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CampaignMode {
    Baseline,
    Augmented,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Budget {
    pub max_execs: Option<u64>,
    /// Virtual seconds (the deterministic clock of the stats rows).
    pub max_secs: Option<f64>,
}

impl Budget {
    pub fn execs(n: u64) -> Budget {
        Budget { max_execs: Some(n), max_secs: None }
    }
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub mode: CampaignMode,
    pub sieve: SieveConfig,
    pub havoc_limit: u32,
    pub budget: Budget,
    pub rng_seed: u64,
}

impl CampaignConfig {
    pub fn baseline(rng_seed: u64, budget: Budget) -> Self {
        CampaignConfig {
            mode: CampaignMode::Baseline,
            sieve: SieveConfig::default(),
            havoc_limit: DEFAULT_HAVOC_LIMIT,
            budget,
            rng_seed,
        }
    }

    pub fn augmented(rng_seed: u64, budget: Budget, sieve: SieveConfig) -> Self {
        CampaignConfig { mode: CampaignMode::Augmented, sieve, ..Self::baseline(rng_seed, budget) }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("campaign needs at least one seed")]
    EmptySeeds,
    #[error("seed {0} is empty")]
    EmptySeed(usize),
    #[error("augmented mode needs a model")]
    MissingModel,
    #[error("campaign needs an execution or time budget")]
    NoBudget,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Destination for collected `(x, x', score)` samples.
pub trait SampleSink {
    fn record(&mut self, x: &[u8], x_prime: &[u8], score: u32) -> std::io::Result<()>;
}

impl<W: Write> SampleSink for SampleWriter<W> {
    fn record(&mut self, x: &[u8], x_prime: &[u8], score: u32) -> std::io::Result<()> {
        self.write(x, x_prime, score)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::Other, e.to_string()))
    }
}

/// In-memory sink for tests and examples.
#[derive(Default)]
pub struct VecSink(pub Vec<SampleRecord>);

impl SampleSink for VecSink {
    fn record(&mut self, x: &[u8], x_prime: &[u8], score: u32) -> std::io::Result<()> {
        self.0.push(SampleRecord { x: x.to_vec(), x_prime: x_prime.to_vec(), score });
        Ok(())
    }
}

pub struct CampaignResult {
    pub stats: CampaignStats,
    pub queue: Vec<SeedEntry>,
    pub crashes: Vec<CrashRecord>,
    pub samples_written: u64,
}

impl CampaignResult {
    /// Execution index of the first crash, if any crashed.
    pub fn first_crash_exec(&self) -> Option<u64> {
        self.crashes.iter().map(|c| c.found_at_exec).min()
    }
}

/// One fuzzing campaign over one target.
pub struct Campaign<'a> {
    pub target: &'a dyn Target,
    pub config: CampaignConfig,
    pub dict: Dictionary,
    pub model: Option<&'a Model<f32>>,
}

impl<'a> Campaign<'a> {
    pub fn new(target: &'a dyn Target, config: CampaignConfig) -> Self {
        Campaign { target, config, dict: Dictionary::empty(), model: None }
    }

    pub fn with_model(mut self, model: &'a Model<f32>) -> Self {
        self.model = Some(model);
        self
    }

    pub fn with_dictionary(mut self, dict: Dictionary) -> Self {
        self.dict = dict;
        self
    }

    pub fn run(&self, seeds: &[Vec<u8>]) -> Result<CampaignResult, CampaignError> {
        self.run_inner(seeds, None)
    }

    /// Baseline-style run that additionally samples executed, length-
    /// preserving proposals at `rate` and records `(seed, mutant, score)`.
    pub fn run_collecting(
        &self,
        seeds: &[Vec<u8>],
        rate: f64,
        sink: &mut dyn SampleSink,
    ) -> Result<CampaignResult, CampaignError> {
        self.run_inner(seeds, Some((rate, sink)))
    }

    fn run_inner(
        &self,
        seeds: &[Vec<u8>],
        sampler: Option<(f64, &mut dyn SampleSink)>,
    ) -> Result<CampaignResult, CampaignError> {
        if seeds.is_empty() {
            return Err(CampaignError::EmptySeeds);
        }
        if let Some(i) = seeds.iter().position(|s| s.is_empty()) {
            return Err(CampaignError::EmptySeed(i));
        }
        if self.config.budget.max_execs.is_none() && self.config.budget.max_secs.is_none() {
            return Err(CampaignError::NoBudget);
        }
        let mut sieve = match self.config.mode {
            CampaignMode::Augmented => {
                let model = self.model.ok_or(CampaignError::MissingModel)?;
                Some(Sieve::new(model, self.config.sieve))
            }
            CampaignMode::Baseline => None,
        };

        let mut state = Running::new(&self.config, sampler);

        // Dry-run the initial corpus: uncounted executions that seed the
        // virgin map, the queue and the favored set.
        for data in seeds {
            let outcome = self.target.run(data, &mut state.raw);
            let map = CoverageMap::classify(&state.raw);
            state.raw.reset();
            debug_assert!(!matches!(outcome, ExecOutcome::Hang));
            state.virgin.commit_gain_counted(&map);
            state.admit(data.clone(), None, map);
        }
        state.snapshot();

        let mut pass: u64 = 0;
        'campaign: loop {
            let mut i = 0;
            while i < state.queue.len() {
                if state.budget_reached() {
                    break 'campaign;
                }
                // Favored entries run every pass, the rest every third pass.
                if state.queue[i].favored || pass % 3 == 0 {
                    if !self.fuzz_entry(&mut state, &mut sieve, i)? {
                        break 'campaign;
                    }
                }
                i += 1;
            }
            pass += 1;
        }

        state.finish();
        Ok(CampaignResult {
            stats: state.stats,
            queue: state.queue,
            crashes: state.crashes,
            samples_written: state.samples_written,
        })
    }

    /// One round over one queue entry. Returns false when the budget ended
    /// the campaign mid-round.
    fn fuzz_entry(
        &self,
        state: &mut Running,
        sieve: &mut Option<Sieve>,
        index: usize,
    ) -> Result<bool, CampaignError> {
        let seed_data = state.queue[index].data.clone();
        let seed_map = state.queue[index].map.clone();
        let parent_id = state.queue[index].id;

        let mask: Option<ByteMask> = match (self.config.mode, sieve.as_mut()) {
            (CampaignMode::Augmented, Some(sieve)) => {
                match choose_strategy(&mut state.rng_strategy, self.config.sieve.p_explore) {
                    Strategy::Baseline => None,
                    Strategy::Augmented => Some(sieve.query(&seed_data).clone()),
                }
            }
            _ => None,
        };

        let mut executed_here = 0u64;
        let mut keep_going = true;

        if !state.queue[index].det_done {
            state.queue[index].det_done = true;
            for prop in deterministic_stage(&seed_data, &self.dict) {
                if state.budget_reached() {
                    keep_going = false;
                    break;
                }
                self.process(state, prop, &mask, &seed_data, &seed_map, parent_id, &mut executed_here)?;
            }
        }
        if keep_going {
            for _ in 0..self.config.havoc_limit {
                if state.budget_reached() {
                    keep_going = false;
                    break;
                }
                let prop = havoc_mutation_bounded(
                    &seed_data,
                    &mut state.rng_mutation,
                    &self.dict,
                    MAX_INPUT_LEN,
                );
                self.process(state, prop, &mask, &seed_data, &seed_map, parent_id, &mut executed_here)?;
            }
        }

        state.queue[index].exec_count += executed_here;
        Ok(keep_going)
    }

    fn process(
        &self,
        state: &mut Running,
        prop: MutationProposal,
        mask: &Option<ByteMask>,
        seed_data: &[u8],
        seed_map: &CoverageMap,
        parent_id: u32,
        executed_here: &mut u64,
    ) -> Result<(), CampaignError> {
        state.stats.proposals_generated += 1;
        if let Some(mask) = mask {
            if !should_execute(&prop, mask, self.config.sieve.alpha) {
                state.stats.vetoed_execs += 1;
                return Ok(());
            }
        }

        let outcome = self.target.run(&prop.data, &mut state.raw);
        let map = CoverageMap::classify(&state.raw);
        state.raw.reset();
        state.stats.total_execs += 1;
        *executed_here += 1;

        if let Some((rate, sink)) = state.sampler.as_mut() {
            if !prop.length_changed && state.rng_sample.gen::<f64>() < *rate {
                let score = strictly_less_score(seed_map, &map);
                sink.record(seed_data, &prop.data, score)?;
                state.samples_written += 1;
            }
        }

        match outcome {
            ExecOutcome::Hang => {
                // Hangs are discarded: no crash record, no queue admission.
            }
            ExecOutcome::Crash(site) => {
                let hash = map.path_hash();
                if state.seen_crashes.insert((site, hash)) {
                    state.stats.unique_crashes += 1;
                    state.crashes.push(CrashRecord {
                        site,
                        path_hash: hash,
                        input: prop.data.clone(),
                        found_at_exec: state.stats.total_execs,
                    });
                }
                self.consider_gain(state, prop.data, parent_id, map);
            }
            ExecOutcome::Normal => {
                self.consider_gain(state, prop.data, parent_id, map);
            }
        }

        if state.stats.total_execs % STATS_INTERVAL == 0 {
            state.snapshot();
        }
        Ok(())
    }

    fn consider_gain(&self, state: &mut Running, data: Vec<u8>, parent_id: u32, map: CoverageMap) {
        let cleared = state.virgin.commit_gain_counted(&map);
        if cleared > 0 {
            state.stats.input_gains += 1;
            state.admit(data, Some(parent_id), map);
        }
    }
}

/// Mutable campaign state.
struct Running<'s> {
    raw: RawCoverage,
    virgin: VirginMap,
    queue: Vec<SeedEntry>,
    crashes: Vec<CrashRecord>,
    seen_crashes: HashSet<(u32, u64)>,
    /// Best (len, id) seed covering each coverage bit ever cleared; bit key
    /// is `edge * 8 + bucket_bit`.
    bit_claims: HashMap<u32, (usize, u32)>,
    stats: CampaignStats,
    samples_written: u64,
    rng_mutation: ChaCha8Rng,
    rng_strategy: ChaCha8Rng,
    rng_sample: ChaCha8Rng,
    sampler: Option<(f64, &'s mut dyn SampleSink)>,
    budget: Budget,
}

impl<'s> Running<'s> {
    fn new(config: &CampaignConfig, sampler: Option<(f64, &'s mut dyn SampleSink)>) -> Self {
        let stream = |n: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            rng.set_stream(n);
            rng
        };
        Running {
            raw: RawCoverage::new(),
            virgin: VirginMap::new(),
            queue: Vec::new(),
            crashes: Vec::new(),
            seen_crashes: HashSet::new(),
            bit_claims: HashMap::new(),
            stats: CampaignStats::default(),
            samples_written: 0,
            rng_mutation: stream(1),
            rng_strategy: stream(2),
            rng_sample: stream(3),
            sampler,
            budget: config.budget,
        }
    }

    fn elapsed_virtual_s(&self) -> f64 {
        (self.stats.total_execs * VIRT_NS_PER_EXEC) as f64 * 1e-9
    }

    fn budget_reached(&self) -> bool {
        if let Some(max) = self.budget.max_execs {
            if self.stats.total_execs >= max {
                return true;
            }
        }
        if let Some(max) = self.budget.max_secs {
            if self.elapsed_virtual_s() >= max {
                return true;
            }
        }
        false
    }

    /// Append a queue entry and refresh the favored set: for every coverage
    /// bit seen so far, the smallest (then earliest) entry covering it keeps
    /// its claim, and entries holding at least one claim are favored.
    fn admit(&mut self, data: Vec<u8>, parent_id: Option<u32>, map: CoverageMap) {
        let id = self.queue.len() as u32;
        let len = data.len();
        for (edge, bucket) in map.iter_nonzero() {
            for bit in 0..8u32 {
                if bucket & (1 << bit) != 0 {
                    let key = (edge as u32) * 8 + bit;
                    let claim = self.bit_claims.entry(key).or_insert((len, id));
                    if (len, id) < *claim {
                        *claim = (len, id);
                    }
                }
            }
        }
        self.queue.push(SeedEntry {
            id,
            data,
            parent_id,
            discovery_time: self.elapsed_virtual_s(),
            exec_count: 0,
            favored: false,
            map,
            det_done: false,
        });
        self.recompute_favored();
        self.stats.virgin_bits_cleared = self.virgin.bits_cleared();
    }

    fn recompute_favored(&mut self) {
        let favored: HashSet<u32> = self.bit_claims.values().map(|&(_, id)| id).collect();
        for entry in &mut self.queue {
            entry.favored = favored.contains(&entry.id);
        }
    }

    fn snapshot(&mut self) {
        self.stats.virgin_bits_cleared = self.virgin.bits_cleared();
        self.stats.rows.push(StatsRow {
            elapsed_s: self.elapsed_virtual_s(),
            total_execs: self.stats.total_execs,
            vetoed_execs: self.stats.vetoed_execs,
            queue_size: self.queue.len() as u64,
            input_gains: self.stats.input_gains,
            virgin_bits: self.virgin.bits_cleared(),
            unique_crashes: self.stats.unique_crashes,
        });
    }

    fn finish(&mut self) {
        if self.stats.rows.last().map(|r| r.total_execs) != Some(self.stats.total_execs) {
            self.snapshot();
        }
    }
}

/// Standalone crash dedup, for callers replaying outcomes outside a campaign.
pub fn dedup_crash(
    outcome: &ExecOutcome,
    map: &CoverageMap,
    seen: &mut HashSet<(u32, u64)>,
) -> bool {
    match outcome {
        ExecOutcome::Crash(site) => seen.insert((*site, map.path_hash())),
        _ => false,
    }
}
