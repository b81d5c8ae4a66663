//! The byte sieve: turns a model's heat map into a per-seed byte mask and
//! vetoes proposals whose touched positions overlap too few useful bytes.
//! A proposal executes only when `|touched AND mask| > alpha`.

use crate::mutation::MutationProposal;
use crate::neural::Model;
use crate::util::fnv1a_64;
use rand::Rng;
use std::collections::HashMap;

/// Binarized heat map bound to one specific seed's content.
#[derive(Debug, Clone)]
pub struct ByteMask {
    bits: Vec<bool>,
    seed_hash: u64,
}

impl ByteMask {
    /// Threshold a heat map: `mask[i] = heat[i] >= theta`.
    pub fn from_heatmap(heat: &[f32], theta: f32, seed: &[u8]) -> ByteMask {
        debug_assert_eq!(heat.len(), seed.len());
        ByteMask {
            bits: heat.iter().map(|&h| h >= theta).collect(),
            seed_hash: fnv1a_64(seed),
        }
    }

    /// Every byte useful: the veto never fires.
    pub fn all_true(seed: &[u8]) -> ByteMask {
        ByteMask { bits: vec![true; seed.len()], seed_hash: fnv1a_64(seed) }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn useful(&self, index: usize) -> bool {
        self.bits.get(index).copied().unwrap_or(false)
    }

    pub fn count_useful(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn seed_hash(&self) -> u64 {
        self.seed_hash
    }
}

/// Veto configuration.
#[derive(Debug, Clone, Copy)]
pub struct SieveConfig {
    /// Overlap cutoff: execute iff strictly more than `alpha` touched bytes
    /// are useful. `-1` disables the veto entirely.
    pub alpha: i64,
    /// Binarization threshold for heat values. MAE training on rare flips
    /// pushes probabilities well below 0.5, so the threshold sits just above
    /// the trained models' noise floor (useless regions land near 1e-3,
    /// useful ones near 0.04 and up); an untrained model outputs a flat 0.5
    /// and keeps every byte useful.
    pub theta: f32,
    /// Per-seed probability of falling back to the unaugmented strategy.
    pub p_explore: f64,
}

impl Default for SieveConfig {
    fn default() -> Self {
        SieveConfig { alpha: 0, theta: 0.02, p_explore: 0.5 }
    }
}

/// Per-seed strategy choice for one fuzzing round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Unaugmented: no veto this round.
    Baseline,
    /// Mask-vetoed fuzzing.
    Augmented,
}

/// Draw the per-seed explore/exploit strategy.
pub fn choose_strategy<R: Rng>(rng: &mut R, p_explore: f64) -> Strategy {
    if rng.gen_bool(p_explore.clamp(0.0, 1.0)) {
        Strategy::Baseline
    } else {
        Strategy::Augmented
    }
}

/// The veto rule: count touched positions the mask marks useful; execute
/// only when the overlap exceeds `alpha`. Touched positions are in
/// original-seed coordinates, so length-changing proposals are handled by
/// their pre-mutation span.
pub fn should_execute(proposal: &MutationProposal, mask: &ByteMask, alpha: i64) -> bool {
    let mut overlap: i64 = 0;
    for &pos in &proposal.touched {
        if mask.useful(pos) {
            overlap += 1;
            if overlap > alpha {
                return true;
            }
        }
    }
    overlap > alpha
}

/// Heat-map front end with a bounded least-recently-used cache keyed by seed
/// content hash. One campaign instance owns one sieve.
pub struct Sieve<'m> {
    model: &'m Model<f32>,
    config: SieveConfig,
    cache: HashMap<u64, CacheEntry>,
    capacity: usize,
    clock: u64,
    queries: u64,
    forwards: u64,
}

struct CacheEntry {
    mask: ByteMask,
    last_used: u64,
}

pub const DEFAULT_MASK_CACHE: usize = 4096;

impl<'m> Sieve<'m> {
    pub fn new(model: &'m Model<f32>, config: SieveConfig) -> Self {
        Sieve {
            model,
            config,
            cache: HashMap::new(),
            capacity: DEFAULT_MASK_CACHE,
            clock: 0,
            queries: 0,
            forwards: 0,
        }
    }

    pub fn with_capacity(model: &'m Model<f32>, config: SieveConfig, capacity: usize) -> Self {
        Sieve { capacity: capacity.max(1), ..Sieve::new(model, config) }
    }

    pub fn config(&self) -> SieveConfig {
        self.config
    }

    /// Mask for a seed, from cache when its content hash was seen before.
    pub fn query(&mut self, seed: &[u8]) -> &ByteMask {
        self.queries += 1;
        self.clock += 1;
        let key = fnv1a_64(seed);
        let clock = self.clock;
        if !self.cache.contains_key(&key) {
            if self.cache.len() >= self.capacity {
                self.evict_oldest();
            }
            self.forwards += 1;
            let heat = self.model.predict_heatmap(seed);
            let mask = ByteMask::from_heatmap(&heat, self.config.theta, seed);
            self.cache.insert(key, CacheEntry { mask, last_used: clock });
        }
        let entry = self.cache.get_mut(&key).expect("just inserted");
        entry.last_used = clock;
        &entry.mask
    }

    fn evict_oldest(&mut self) {
        if let Some((&key, _)) = self.cache.iter().min_by_key(|(_, e)| e.last_used) {
            self.cache.remove(&key);
        }
    }

    /// Model forward passes performed so far (cache misses).
    pub fn forward_count(&self) -> u64 {
        self.forwards
    }

    pub fn query_count(&self) -> u64 {
        self.queries
    }

    pub fn cached_masks(&self) -> usize {
        self.cache.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mutation::MutOp;
    use crate::neural::{Arch, Model, ModelConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn proposal(touched: Vec<usize>) -> MutationProposal {
        MutationProposal {
            data: vec![0],
            touched,
            length_changed: false,
            op_trace: vec![MutOp::RandByte],
        }
    }

    fn mask_of(bits: Vec<bool>) -> ByteMask {
        ByteMask { bits, seed_hash: 0 }
    }

    #[test]
    fn threshold_rule() {
        let seed = [0u8; 3];
        let mask = ByteMask::from_heatmap(&[0.4, 0.5, 0.9], 0.5, &seed);
        assert!(!mask.useful(0));
        assert!(mask.useful(1));
        assert!(mask.useful(2));
    }

    #[test]
    fn extreme_heats() {
        let seed = [0u8; 4];
        assert_eq!(ByteMask::from_heatmap(&[1.0; 4], 0.5, &seed).count_useful(), 4);
        assert_eq!(ByteMask::from_heatmap(&[0.0; 4], 0.5, &seed).count_useful(), 0);
    }

    #[test]
    fn all_true_mask_never_vetoes() {
        let mask = mask_of(vec![true; 16]);
        for touched in [vec![0], vec![15], vec![3, 7, 9]] {
            assert!(should_execute(&proposal(touched), &mask, 0));
        }
    }

    #[test]
    fn overlap_of_one_passes_alpha_zero() {
        let mut bits = vec![false; 10];
        bits[7] = true;
        bits[9] = true;
        let mask = mask_of(bits);
        assert!(should_execute(&proposal(vec![3, 7]), &mask, 0));
    }

    #[test]
    fn no_useful_touch_is_vetoed() {
        let mask = mask_of(vec![false; 10]);
        assert!(!should_execute(&proposal(vec![3]), &mask, 0));
        // alpha = -1 disables the veto even with an all-false mask
        assert!(should_execute(&proposal(vec![3]), &mask, -1));
    }

    #[test]
    fn alpha_is_monotone() {
        let mut bits = vec![false; 10];
        for i in [1usize, 4, 6] {
            bits[i] = true;
        }
        let mask = mask_of(bits);
        let props: Vec<MutationProposal> =
            vec![proposal(vec![0]), proposal(vec![1]), proposal(vec![1, 4]), proposal(vec![1, 4, 6])];
        for a1 in -1..4i64 {
            for a2 in a1..4i64 {
                for p in &props {
                    if should_execute(p, &mask, a2) {
                        assert!(should_execute(p, &mask, a1), "alpha monotonicity broken");
                    }
                }
            }
        }
    }

    #[test]
    fn strategy_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(choose_strategy(&mut rng, 0.0), Strategy::Augmented);
            assert_eq!(choose_strategy(&mut rng, 1.0), Strategy::Baseline);
        }
    }

    #[test]
    fn strategy_mix_is_roughly_even() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 10_000;
        let baseline = (0..draws)
            .filter(|_| choose_strategy(&mut rng, 0.5) == Strategy::Baseline)
            .count() as f64
            / draws as f64;
        assert!((0.47..=0.53).contains(&baseline), "baseline fraction {baseline}");
    }

    #[test]
    fn cache_avoids_repeat_forwards() {
        let config = ModelConfig::new(Arch::Lstm, 1, 64).unwrap();
        let model = Model::<f32>::zeros(config).unwrap();
        let mut sieve = Sieve::new(&model, SieveConfig::default());
        let seed_a = vec![1u8; 20];
        let seed_b = vec![2u8; 24];
        assert_eq!(sieve.query(&seed_a).len(), 20);
        assert_eq!(sieve.forward_count(), 1);
        assert_eq!(sieve.query(&seed_a).len(), 20);
        assert_eq!(sieve.forward_count(), 1, "second query must hit the cache");
        assert_eq!(sieve.query(&seed_b).len(), 24);
        assert_eq!(sieve.forward_count(), 2);
        assert_eq!(sieve.query_count(), 3);
    }

    #[test]
    fn cache_evicts_least_recently_used() {
        let config = ModelConfig::new(Arch::Lstm, 1, 64).unwrap();
        let model = Model::<f32>::zeros(config).unwrap();
        let mut sieve = Sieve::with_capacity(&model, SieveConfig::default(), 2);
        let (a, b, c) = (vec![1u8; 4], vec![2u8; 4], vec![3u8; 4]);
        sieve.query(&a);
        sieve.query(&b);
        sieve.query(&a); // refresh a; b is now oldest
        sieve.query(&c); // evicts b
        assert_eq!(sieve.cached_masks(), 2);
        let before = sieve.forward_count();
        sieve.query(&a);
        assert_eq!(sieve.forward_count(), before, "a must still be cached");
        sieve.query(&b);
        assert_eq!(sieve.forward_count(), before + 1, "b must have been evicted");
    }

    #[test]
    fn masks_are_bound_to_seed_content() {
        let config = ModelConfig::new(Arch::Lstm, 1, 64).unwrap();
        let model = Model::<f32>::zeros(config).unwrap();
        let mut sieve = Sieve::new(&model, SieveConfig::default());
        let seed = vec![9u8; 12];
        let mask = sieve.query(&seed).clone();
        assert_eq!(mask.len(), seed.len());
        assert_eq!(mask.seed_hash(), fnv1a_64(&seed));
    }
}
