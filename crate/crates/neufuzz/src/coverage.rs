//! Execution coverage: edge hit counting, bucket classification, input-gain
//! detection against a virgin map, and the strictly-less score used to label
//! training samples.
//!
//! A coverage map is logically an array of `MAP_SIZE` 8-bit bucket bitmaps,
//! one per instrumented edge. After classifying a single execution, each
//! entry has at most one bit set: the bucket its raw hit count fell into.
//! Toy targets touch a few dozen edges per run, so maps are stored sparsely
//! as sorted `(edge, bucket)` pairs; the logical length is always `MAP_SIZE`.

use crate::util::fnv1a_64;

/// Number of edge slots in every coverage map (AFL convention).
pub const MAP_SIZE: usize = 65536;

/// Result of executing a target on one input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecOutcome {
    Normal,
    /// A planted bug fired. The id identifies the crash site and is stable
    /// across runs.
    Crash(u32),
    /// The step budget was exhausted.
    Hang,
}

/// Raw per-edge hit counters for one execution, with a list of touched
/// indices so classification and reset cost is proportional to the edges
/// actually hit rather than to `MAP_SIZE`.
pub struct RawCoverage {
    counts: Vec<u32>,
    touched: Vec<u16>,
}

impl RawCoverage {
    pub fn new() -> Self {
        RawCoverage { counts: vec![0; MAP_SIZE], touched: Vec::with_capacity(64) }
    }

    /// Clear all counters touched since the last reset.
    pub fn reset(&mut self) {
        for &i in &self.touched {
            self.counts[i as usize] = 0;
        }
        self.touched.clear();
    }

    pub fn count_at(&self, index: usize) -> u32 {
        self.counts[index]
    }
}

impl Default for RawCoverage {
    fn default() -> Self {
        Self::new()
    }
}

/// Record one edge transition. The edge index is the AFL-style hash
/// `(cur ^ (prev >> 1)) mod MAP_SIZE`.
pub fn record_edge(raw: &mut RawCoverage, prev_block: u16, cur_block: u16) {
    let idx = (cur_block ^ (prev_block >> 1)) as usize % MAP_SIZE;
    if raw.counts[idx] == 0 {
        raw.touched.push(idx as u16);
    }
    raw.counts[idx] = raw.counts[idx].saturating_add(1);
}

/// Map a raw hit count to its bucket bitmap:
/// `{0, 1, 2, 3, 4-7, 8-15, 16-31, 32-127, >=128}` -> `{0x00, bit 0..bit 7}`.
pub fn bucket_for_count(count: u32) -> u8 {
    match count {
        0 => 0x00,
        1 => 0x01,
        2 => 0x02,
        3 => 0x04,
        4..=7 => 0x08,
        8..=15 => 0x10,
        16..=31 => 0x20,
        32..=127 => 0x40,
        _ => 0x80,
    }
}

/// One execution's classified coverage. Logically `MAP_SIZE` bucket bitmaps;
/// stored as sorted `(edge index, bucket)` pairs for the entries that are
/// nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMap {
    entries: Vec<(u16, u8)>,
}

impl CoverageMap {
    /// Classify the raw counters accumulated for one execution.
    pub fn classify(raw: &RawCoverage) -> Self {
        let mut entries: Vec<(u16, u8)> = raw
            .touched
            .iter()
            .map(|&i| (i, bucket_for_count(raw.counts[i as usize])))
            .collect();
        entries.sort_unstable_by_key(|&(i, _)| i);
        CoverageMap { entries }
    }

    /// Classify a full `MAP_SIZE` vector of raw counters.
    pub fn classify_counts(raw: &[u32]) -> Self {
        assert_eq!(raw.len(), MAP_SIZE, "raw counter vector must have MAP_SIZE entries");
        let entries = raw
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(i, &c)| (i as u16, bucket_for_count(c)))
            .collect();
        CoverageMap { entries }
    }

    /// Build directly from sorted-or-not `(edge, bucket)` pairs. Zero buckets
    /// are dropped; duplicate indices are OR-merged.
    pub fn from_entries(mut pairs: Vec<(u16, u8)>) -> Self {
        pairs.retain(|&(_, b)| b != 0);
        pairs.sort_unstable_by_key(|&(i, _)| i);
        let mut entries: Vec<(u16, u8)> = Vec::with_capacity(pairs.len());
        for (i, b) in pairs {
            match entries.last_mut() {
                Some(last) if last.0 == i => last.1 |= b,
                _ => entries.push((i, b)),
            }
        }
        CoverageMap { entries }
    }

    /// Logical length: every map covers all `MAP_SIZE` edge slots.
    pub fn len(&self) -> usize {
        MAP_SIZE
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Bucket bitmap at an edge index (0 for edges never hit).
    pub fn bucket_at(&self, index: usize) -> u8 {
        debug_assert!(index < MAP_SIZE);
        match self.entries.binary_search_by_key(&(index as u16), |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0,
        }
    }

    /// Nonzero entries in index order.
    pub fn iter_nonzero(&self) -> impl Iterator<Item = (u16, u8)> + '_ {
        self.entries.iter().copied()
    }

    /// Number of edges with at least one bucket bit set.
    pub fn edge_count(&self) -> usize {
        self.entries.len()
    }

    /// Total set bits across all entries.
    pub fn popcount(&self) -> u32 {
        self.entries.iter().map(|&(_, b)| b.count_ones()).sum()
    }

    /// Expand to a dense `MAP_SIZE` byte array (test and tooling helper).
    pub fn to_dense(&self) -> Vec<u8> {
        let mut dense = vec![0u8; MAP_SIZE];
        for &(i, b) in &self.entries {
            dense[i as usize] = b;
        }
        dense
    }

    /// Stable content hash of the classified map. Equal maps hash equal, and
    /// the value does not depend on process or platform.
    pub fn path_hash(&self) -> u64 {
        let mut bytes = Vec::with_capacity(self.entries.len() * 3);
        for &(i, b) in &self.entries {
            bytes.extend_from_slice(&i.to_le_bytes());
            bytes.push(b);
        }
        fnv1a_64(&bytes)
    }
}

/// Count of bit positions set in `after` but not in `before`:
/// `s(b, b') = sum_i [b_i < b'_i]`, i.e. `popcount(!b & b')`.
pub fn strictly_less_score(before: &CoverageMap, after: &CoverageMap) -> u32 {
    let mut score = 0u32;
    for &(i, b_after) in &after.entries {
        let b_before = before.bucket_at(i as usize);
        score += (!b_before & b_after).count_ones();
    }
    score
}

/// Total number of bit positions where two maps differ.
pub fn xor_popcount(a: &CoverageMap, b: &CoverageMap) -> u32 {
    let mut total = 0u32;
    let mut ia = 0;
    let mut ib = 0;
    while ia < a.entries.len() || ib < b.entries.len() {
        let ea = a.entries.get(ia).copied();
        let eb = b.entries.get(ib).copied();
        match (ea, eb) {
            (Some((xi, xb)), Some((yi, yb))) if xi == yi => {
                total += (xb ^ yb).count_ones();
                ia += 1;
                ib += 1;
            }
            (Some((xi, xb)), Some((yi, _))) if xi < yi => {
                total += xb.count_ones();
                ia += 1;
            }
            (Some(_), Some((_, yb))) => {
                total += yb.count_ones();
                ib += 1;
            }
            (Some((_, xb)), None) => {
                total += xb.count_ones();
                ia += 1;
            }
            (None, Some((_, yb))) => {
                total += yb.count_ones();
                ib += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    total
}

/// Bits of coverage behavior never observed so far. Starts all-ones; bits are
/// only ever cleared, never set again.
pub struct VirginMap {
    bits: Vec<u8>,
    cleared: u64,
}

impl VirginMap {
    pub fn new() -> Self {
        VirginMap { bits: vec![0xFF; MAP_SIZE], cleared: 0 }
    }

    /// True iff `map` sets at least one still-virgin bit. All such bits are
    /// cleared, so call this only when committing the execution.
    pub fn commit_gain(&mut self, map: &CoverageMap) -> bool {
        self.commit_gain_counted(map) > 0
    }

    /// Like [`VirginMap::commit_gain`] but returns how many virgin bits the
    /// map cleared.
    pub fn commit_gain_counted(&mut self, map: &CoverageMap) -> u32 {
        let mut cleared = 0u32;
        for &(i, b) in &map.entries {
            let v = &mut self.bits[i as usize];
            let hit = *v & b;
            if hit != 0 {
                cleared += hit.count_ones();
                *v &= !b;
            }
        }
        self.cleared += cleared as u64;
        cleared
    }

    /// Number of still-set bits.
    pub fn popcount(&self) -> u64 {
        8 * MAP_SIZE as u64 - self.cleared
    }

    /// Total bits cleared since creation.
    pub fn bits_cleared(&self) -> u64 {
        self.cleared
    }
}

impl Default for VirginMap {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map_of(pairs: &[(u16, u8)]) -> CoverageMap {
        CoverageMap::from_entries(pairs.to_vec())
    }

    #[test]
    fn record_edge_identity_ids() {
        let mut raw = RawCoverage::new();
        record_edge(&mut raw, 0, 0);
        assert_eq!(raw.count_at(0), 1);
    }

    #[test]
    fn record_edge_hashes_prev_and_cur() {
        // index = cur ^ (prev >> 1) = 3 ^ 1 = 2
        let mut raw = RawCoverage::new();
        record_edge(&mut raw, 2, 3);
        assert_eq!(raw.count_at(2), 1);
    }

    #[test]
    fn record_edge_accumulates() {
        let mut raw = RawCoverage::new();
        record_edge(&mut raw, 7, 9);
        record_edge(&mut raw, 7, 9);
        let idx = (9 ^ (7 >> 1)) as usize;
        assert_eq!(raw.count_at(idx), 2);
    }

    #[test]
    fn buckets_follow_the_range_table() {
        assert_eq!(bucket_for_count(0), 0x00);
        assert_eq!(bucket_for_count(1), 0x01);
        assert_eq!(bucket_for_count(2), 0x02);
        assert_eq!(bucket_for_count(3), 0x04);
        assert_eq!(bucket_for_count(5), 0x08);
        assert_eq!(bucket_for_count(12), 0x10);
        assert_eq!(bucket_for_count(31), 0x20);
        assert_eq!(bucket_for_count(127), 0x40);
        assert_eq!(bucket_for_count(200), 0x80);
        assert_eq!(bucket_for_count(u32::MAX), 0x80);
    }

    #[test]
    fn classify_counts_zero_vector_is_empty_map() {
        let raw = vec![0u32; MAP_SIZE];
        let map = CoverageMap::classify_counts(&raw);
        assert_eq!(map.len(), MAP_SIZE);
        assert_eq!(map.edge_count(), 0);
    }

    #[test]
    fn classify_is_idempotent_in_effect() {
        let mut raw = vec![0u32; MAP_SIZE];
        raw[3] = 1;
        raw[100] = 5;
        raw[65535] = 200;
        let a = CoverageMap::classify_counts(&raw);
        let b = CoverageMap::classify_counts(&raw);
        assert_eq!(a, b);
        assert_eq!(a.bucket_at(3), 0x01);
        assert_eq!(a.bucket_at(100), 0x08);
        assert_eq!(a.bucket_at(65535), 0x80);
    }

    #[test]
    fn classify_sparse_matches_dense() {
        let mut raw = RawCoverage::new();
        record_edge(&mut raw, 0, 10);
        record_edge(&mut raw, 10, 20);
        record_edge(&mut raw, 10, 20);
        let sparse = CoverageMap::classify(&raw);
        let dense_input: Vec<u32> = (0..MAP_SIZE).map(|i| raw.count_at(i)).collect();
        let dense = CoverageMap::classify_counts(&dense_input);
        assert_eq!(sparse, dense);
    }

    #[test]
    fn strictly_less_truth_table_per_bit() {
        // (before, after) -> score over one bit position
        let zero = map_of(&[]);
        let one = map_of(&[(0, 0x01)]);
        assert_eq!(strictly_less_score(&zero, &zero), 0); // 0 < 0 : no
        assert_eq!(strictly_less_score(&zero, &one), 1); // 0 < 1 : yes
        assert_eq!(strictly_less_score(&one, &zero), 0); // 1 < 0 : no
        assert_eq!(strictly_less_score(&one, &one), 0); // 1 < 1 : no
    }

    #[test]
    fn strictly_less_is_zero_on_self() {
        let m = map_of(&[(1, 0x08), (9, 0x01), (700, 0x80)]);
        assert_eq!(strictly_less_score(&m, &m), 0);
    }

    #[test]
    fn strictly_less_counts_new_bits_only() {
        let b = map_of(&[(0, 0b0000_0001)]);
        let b2 = map_of(&[(0, 0b0000_0011)]);
        assert_eq!(strictly_less_score(&b, &b2), 1);
        assert_eq!(strictly_less_score(&b2, &b), 0);
    }

    #[test]
    fn score_partition_of_differing_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let a = random_map(&mut rng);
            let b = random_map(&mut rng);
            assert_eq!(
                strictly_less_score(&a, &b) + strictly_less_score(&b, &a),
                xor_popcount(&a, &b)
            );
        }
    }

    fn random_map(rng: &mut ChaCha8Rng) -> CoverageMap {
        let n = rng.gen_range(0..40);
        let pairs: Vec<(u16, u8)> =
            (0..n).map(|_| (rng.gen_range(0..64u16), 1u8 << rng.gen_range(0..8))).collect();
        CoverageMap::from_entries(pairs)
    }

    #[test]
    fn virgin_map_commit_semantics() {
        let mut virgin = VirginMap::new();
        let empty = map_of(&[]);
        assert!(!virgin.commit_gain(&empty));
        assert_eq!(virgin.popcount(), 8 * MAP_SIZE as u64);

        let m = map_of(&[(5, 0x01), (10, 0x02)]);
        assert!(virgin.commit_gain(&m), "first execution with coverage must gain");
        assert!(!virgin.commit_gain(&m), "identical second execution must not gain");
        assert_eq!(virgin.bits_cleared(), 2);
    }

    #[test]
    fn virgin_popcount_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut virgin = VirginMap::new();
        let mut last = virgin.popcount();
        for _ in 0..200 {
            let m = random_map(&mut rng);
            virgin.commit_gain(&m);
            let now = virgin.popcount();
            assert!(now <= last);
            last = now;
        }
    }

    #[test]
    fn path_hash_stable_and_content_sensitive() {
        let a = map_of(&[(1, 0x01), (2, 0x02)]);
        let b = map_of(&[(1, 0x01), (2, 0x02)]);
        assert_eq!(a.path_hash(), b.path_hash());

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let m = random_map(&mut rng);
            let mut entries: Vec<(u16, u8)> = m.iter_nonzero().collect();
            entries.push((rng.gen_range(100..200), 0x01));
            let perturbed = CoverageMap::from_entries(entries);
            if perturbed != m {
                assert_ne!(m.path_hash(), perturbed.path_hash());
            }
        }
    }

    #[test]
    fn path_hash_pinned_value() {
        // Guards hash stability across releases: a changed constant here
        // would silently re-split crash dedup sets.
        let m = map_of(&[(1, 0x01)]);
        assert_eq!(m.path_hash(), fnv1a_64(&[1u8, 0, 0x01]));
    }
}
