//! Subsumption between output sets up to channel permutation and
//! complement.
//!
//! A set `A` subsumes `B` when some permutation `σ` of the chosen group maps
//! every vector of `A` (or every complemented vector of `A`) into `B`. Checks
//! run as a pipeline: a cheap profile filter that only rejects, a seeded
//! column-sorting heuristic that only accepts, and a complete backtracking
//! matcher.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::eval::{full_mask, reflect_word, OutputSet};
use crate::netcore::ChannelPermutation;

/// Which permutations a witness may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    /// All of `S_n`.
    FullSymmetric,
    /// Permutations commuting with the reflection `i -> n-1-i`: permute the
    /// `n/2` mirrored pairs and flip each pair independently.
    ReflectionCentralizer,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymmetryError {
    #[error("group enumeration limited to n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("the reflection centralizer needs an even channel count, got {0}")]
    OddChannels(usize),
}

/// Evidence that `sigma(A) ⊆ B`, or `sigma(¬A) ⊆ B` when `negated`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsumptionWitness {
    pub sigma: ChannelPermutation,
    pub negated: bool,
}

impl SubsumptionWitness {
    /// Direct containment check, independent of how the witness was found.
    pub fn validate(&self, a: &OutputSet, b: &OutputSet) -> bool {
        if a.n() != b.n() || self.sigma.n() != a.n() {
            return false;
        }
        let flip = if self.negated { full_mask(a.n()) } else { 0 };
        a.words()
            .iter()
            .all(|&w| b.contains(self.sigma.apply_word(w ^ flip)))
    }
}

impl fmt::Display for SubsumptionWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sigma={} negated={}",
            self.sigma.cycle_notation(),
            self.negated
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVerdict {
    Possible,
    Rejected,
}

/// Permutation-invariant summary of an output set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    len: u32,
    /// `weights[w]` = number of vectors with `w` ones.
    weights: [u32; 33],
    /// Ones per channel, by channel.
    cols: Vec<u32>,
    /// `cols`, ascending.
    sorted_cols: Vec<u32>,
}

impl Profile {
    pub fn of(s: &OutputSet) -> Self {
        Self::of_words(s.n(), s.words())
    }

    fn of_words(n: usize, words: &[u32]) -> Self {
        let mut weights = [0u32; 33];
        let mut cols = vec![0u32; n];
        for &w in words {
            weights[w.count_ones() as usize] += 1;
            let mut x = w;
            while x != 0 {
                cols[x.trailing_zeros() as usize] += 1;
                x &= x - 1;
            }
        }
        let mut sorted_cols = cols.clone();
        sorted_cols.sort_unstable();
        Profile {
            len: words.len() as u32,
            weights,
            cols,
            sorted_cols,
        }
    }

    /// Profile of the complemented set, without recounting.
    fn complemented(&self) -> Self {
        let n = self.cols.len();
        let mut weights = [0u32; 33];
        for w in 0..=n {
            weights[n - w] = self.weights[w];
        }
        let cols: Vec<u32> = self.cols.iter().map(|&c| self.len - c).collect();
        let mut sorted_cols = cols.clone();
        sorted_cols.sort_unstable();
        Profile {
            len: self.len,
            weights,
            cols,
            sorted_cols,
        }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `weights()[w]` is the number of vectors with `w` ones.
    pub fn weights(&self) -> &[u32; 33] {
        &self.weights
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn sorted_cols(&self) -> &[u32] {
        &self.sorted_cols
    }

    fn admits(&self, b: &Profile) -> bool {
        self.len <= b.len
            && self.weights.iter().zip(&b.weights).all(|(x, y)| x <= y)
            && self
                .sorted_cols
                .iter()
                .zip(&b.sorted_cols)
                .all(|(x, y)| x <= y)
    }
}

/// Necessary conditions for `σ(a) ⊆ b`: size, sorted column sums pointwise,
/// and row-sum sub-multiset. `Rejected` is always correct.
pub fn profile_filter(a: &OutputSet, b: &OutputSet) -> FilterVerdict {
    if a.n() != b.n() {
        return FilterVerdict::Rejected;
    }
    if Profile::of(a).admits(&Profile::of(b)) {
        FilterVerdict::Possible
    } else {
        FilterVerdict::Rejected
    }
}

/// Membership structure for the target set of a containment test.
#[derive(Debug, Clone)]
enum Lookup {
    Bits(Vec<u64>),
    Sorted,
}

/// Bitset lookups are used up to this many channels.
const BITSET_MAX_N: usize = 16;

/// Per-unit counts used to rule out unit assignments.
///
/// A unit is a channel (full group) or a mirrored pair (centralizer). For
/// every unit, weight `w` and bit pattern on the unit's channels, the number
/// of vectors of weight `w` showing that pattern. A permutation maps vectors
/// to vectors of the same weight, so `σ(A) ⊆ B` forces every count of a unit
/// of `A` to be at most the count of its image unit in `B`.
#[derive(Debug, Clone)]
struct UnitSigs {
    stride: usize,
    /// `[unit][weight][pattern]`, flattened
    plain: Vec<u16>,
    /// same with the two channels of each pair swapped
    flipped: Vec<u16>,
}

impl UnitSigs {
    fn new(n: usize, group: Group, words: &[u32]) -> Self {
        let units = units(n, group);
        let patterns = match group {
            Group::FullSymmetric => 2,
            Group::ReflectionCentralizer => 4,
        };
        let stride = (n + 1) * patterns;
        let mut plain = vec![0u16; units.len() * stride];
        let mut flipped = vec![0u16; units.len() * stride];
        for &w in words {
            let weight = w.count_ones() as usize;
            for (k, u) in units.iter().enumerate() {
                let b0 = ((w >> u.ch[0]) & 1) as usize;
                let b1 = ((w >> u.ch[1]) & 1) as usize;
                let (pat, fpat) = if patterns == 2 {
                    (b0, b0)
                } else {
                    (b0 | (b1 << 1), b1 | (b0 << 1))
                };
                let base = k * stride + weight * patterns;
                plain[base + pat] = plain[base + pat].saturating_add(1);
                flipped[base + fpat] = flipped[base + fpat].saturating_add(1);
            }
        }
        UnitSigs {
            stride,
            plain,
            flipped,
        }
    }

    #[inline]
    fn unit(&self, k: usize, flip: bool) -> &[u16] {
        let src = if flip { &self.flipped } else { &self.plain };
        &src[k * self.stride..(k + 1) * self.stride]
    }
}

#[inline]
fn dominated(a: &[u16], b: &[u16]) -> bool {
    !a.iter().zip(b).fold(false, |acc, (x, y)| acc | (x > y))
}

/// Branch-specific data of one set acting as the source of a containment.
#[derive(Debug, Clone)]
struct Branch {
    words: Vec<u32>,
    profile: Profile,
    sigs: UnitSigs,
}

/// An output set with everything the matchers need precomputed, for both the
/// plain and the complemented branch, under one group.
#[derive(Debug, Clone)]
pub struct MatchData {
    n: usize,
    group: Group,
    plain: Branch,
    negated: Branch,
    /// Complement equals reflection on this set, so the complemented branch
    /// adds nothing (the reflection lies in both groups).
    self_dual: bool,
    lookup: Lookup,
}

impl MatchData {
    pub fn new(s: &OutputSet, group: Group) -> Self {
        let n = s.n();
        let m = full_mask(n);
        let words = s.words().to_vec();
        let mut neg_words: Vec<u32> = words.iter().map(|w| !w & m).collect();
        neg_words.reverse();
        let profile = Profile::of(s);
        let neg_profile = profile.complemented();
        let lookup = if n <= BITSET_MAX_N {
            let mut bits = vec![0u64; ((1usize << n) / 64).max(1)];
            for &w in &words {
                bits[(w >> 6) as usize] |= 1u64 << (w & 63);
            }
            Lookup::Bits(bits)
        } else {
            Lookup::Sorted
        };
        let self_dual = {
            let mut refl: Vec<u32> = words.iter().map(|&w| reflect_word(w, n)).collect();
            refl.sort_unstable();
            refl == neg_words
        };
        let sigs = UnitSigs::new(n, group, &words);
        let neg_sigs = UnitSigs::new(n, group, &neg_words);
        MatchData {
            n,
            group,
            plain: Branch {
                words,
                profile,
                sigs,
            },
            negated: Branch {
                words: neg_words,
                profile: neg_profile,
                sigs: neg_sigs,
            },
            self_dual,
            lookup,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn len(&self) -> usize {
        self.plain.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plain.words.is_empty()
    }

    pub fn words(&self) -> &[u32] {
        &self.plain.words
    }

    pub fn profile(&self) -> &Profile {
        &self.plain.profile
    }

    pub fn complemented_profile(&self) -> Profile {
        self.negated.profile.clone()
    }

    /// Whether complementing the set equals reflecting it.
    pub fn is_self_dual(&self) -> bool {
        self.self_dual
    }

    #[inline]
    fn contains(&self, w: u32) -> bool {
        match &self.lookup {
            Lookup::Bits(bits) => (bits[(w >> 6) as usize] >> (w & 63)) & 1 == 1,
            Lookup::Sorted => self.plain.words.binary_search(&w).is_ok(),
        }
    }

    fn branch(&self, negated: bool) -> &Branch {
        if negated {
            &self.negated
        } else {
            &self.plain
        }
    }

    fn branches(&self) -> &'static [bool] {
        if self.self_dual {
            &[false]
        } else {
            &[false, true]
        }
    }

    /// Lane-wise necessary condition for subsumption: if this set's branch
    /// subsumes `b`, every lane of its key is at most the matching lane of
    /// `b`'s plain key. Lanes: size, weight histogram, then per weight the
    /// ascending per-channel one counts and, for the centralizer, the
    /// ascending per-pair counts of `11` and of `00`. The group maps
    /// channels (pairs) to channels (pairs) and keeps weights, so each
    /// sorted list of `A` is dominated by that of `B`.
    pub fn dominance_key(&self, negated: bool) -> Vec<u32> {
        let n = self.n;
        let br = self.branch(negated);
        let pairs = match self.group {
            Group::FullSymmetric => 0,
            Group::ReflectionCentralizer => n / 2,
        };
        let per_w = n + 2 * pairs;
        let mut stats = vec![0u32; (n + 1) * per_w];
        for &w in &br.words {
            let row = &mut stats[w.count_ones() as usize * per_w..][..per_w];
            let mut bits = w;
            while bits != 0 {
                row[bits.trailing_zeros() as usize] += 1;
                bits &= bits - 1;
            }
            for k in 0..pairs {
                let pat = ((w >> k) & 1) | (((w >> (n - 1 - k)) & 1) << 1);
                match pat {
                    3 => row[n + k] += 1,
                    0 => row[n + pairs + k] += 1,
                    _ => {}
                }
            }
        }
        let mut key = Vec::with_capacity(2 + 2 * n + stats.len());
        key.push(br.words.len() as u32);
        key.extend_from_slice(&br.profile.weights()[..=n]);
        key.extend_from_slice(br.profile.sorted_cols());
        for row in stats.chunks_mut(per_w) {
            row[..n].sort_unstable();
            row[n..n + pairs].sort_unstable();
            row[n + pairs..].sort_unstable();
            key.extend_from_slice(row);
        }
        key
    }

    fn image_contained(&self, a_words: &[u32], map: &[usize]) -> bool {
        let table = ByteTables::new(map);
        a_words.iter().all(|&w| self.contains(table.apply(w)))
    }
}

/// Admissible `(target unit, orientation)` pairs for each source unit.
type UnitOptions = Vec<Vec<(usize, usize)>>;

/// Allowed `(target unit, orientation)` per source unit, or `None` when some
/// unit has no admissible target or no perfect matching exists.
fn unit_options(a: &Branch, b: &MatchData) -> Option<UnitOptions> {
    let us = units(b.n, b.group);
    let mut options = Vec::with_capacity(us.len());
    let mut adj = Vec::with_capacity(us.len());
    for (ui, u) in us.iter().enumerate() {
        let mut list = Vec::new();
        let mut bits = 0u64;
        for (vi, v) in us.iter().enumerate() {
            if v.len != u.len {
                continue;
            }
            let orients = if u.len == 2 { 2 } else { 1 };
            for o in 0..orients {
                if dominated(a.sigs.unit(ui, o == 1), b.plain.sigs.unit(vi, false)) {
                    list.push((vi, o));
                    bits |= 1 << vi;
                }
            }
        }
        if list.is_empty() {
            return None;
        }
        options.push(list);
        adj.push(bits);
    }
    if has_perfect_matching(&adj) {
        Some(options)
    } else {
        None
    }
}

/// Kuhn's augmenting paths on a bitmask adjacency.
fn has_perfect_matching(adj: &[u64]) -> bool {
    fn augment(u: usize, adj: &[u64], seen: &mut u64, owner: &mut [usize]) -> bool {
        let mut cand = adj[u] & !*seen;
        while cand != 0 {
            let v = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            *seen |= 1 << v;
            if owner[v] == usize::MAX || augment(owner[v], adj, seen, owner) {
                owner[v] = u;
                return true;
            }
        }
        false
    }
    let mut owner = vec![usize::MAX; adj.len()];
    for u in 0..adj.len() {
        let mut seen = 0u64;
        if !augment(u, adj, &mut seen, &mut owner) {
            return false;
        }
    }
    true
}

/// Bit permutation through four byte-indexed lookup tables.
struct ByteTables {
    t: [[u32; 256]; 4],
}

impl ByteTables {
    fn new(map: &[usize]) -> Self {
        let mut t = [[0u32; 256]; 4];
        for (k, table) in t.iter_mut().enumerate().take(map.len().div_ceil(8)) {
            for byte in 1..256usize {
                let low = byte.trailing_zeros() as usize;
                let ch = k * 8 + low;
                let bit = if ch < map.len() { 1 << map[ch] } else { 0 };
                table[byte] = table[byte & (byte - 1)] | bit;
            }
        }
        ByteTables { t }
    }

    #[inline]
    fn apply(&self, w: u32) -> u32 {
        self.t[0][(w & 0xff) as usize]
            | self.t[1][((w >> 8) & 0xff) as usize]
            | self.t[2][((w >> 16) & 0xff) as usize]
            | self.t[3][(w >> 24) as usize]
    }
}

/// Seeded column-sorting heuristic for one branch. Returns a validated
/// channel map or `None`.
fn heuristic_branch(a: &Branch, b: &MatchData, restarts: u32, seed: u64) -> Option<Vec<usize>> {
    let n = b.n;
    let a_cols = &a.profile.cols;
    let b_cols = &b.plain.profile.cols;
    for restart in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let map = match b.group {
            Group::FullSymmetric => {
                let order = |cols: &[u32], rng: &mut ChaCha8Rng| {
                    let mut idx: Vec<usize> = (0..n).collect();
                    idx.shuffle(rng);
                    idx.sort_by_key(|&c| cols[c]);
                    idx
                };
                let oa = order(a_cols, &mut rng);
                let ob = order(b_cols, &mut rng);
                let mut map = vec![0usize; n];
                for (x, y) in oa.iter().zip(&ob) {
                    map[*x] = *y;
                }
                map
            }
            Group::ReflectionCentralizer => {
                let half = n / 2;
                // each pair listed with its smaller-sum channel first
                let order = |cols: &[u32], rng: &mut ChaCha8Rng| {
                    let mut pairs: Vec<(u32, u32, usize, usize)> = (0..half)
                        .map(|p| {
                            let q = n - 1 - p;
                            let (lo, hi) = if cols[p] < cols[q]
                                || (cols[p] == cols[q] && rand::Rng::gen_bool(rng, 0.5))
                            {
                                (p, q)
                            } else {
                                (q, p)
                            };
                            (cols[lo], cols[hi], lo, hi)
                        })
                        .collect();
                    pairs.shuffle(rng);
                    pairs.sort_by_key(|&(x, y, _, _)| (x, y));
                    pairs
                };
                let pa = order(a_cols, &mut rng);
                let pb = order(b_cols, &mut rng);
                let mut map: Vec<usize> = (0..n).collect();
                for (x, y) in pa.iter().zip(&pb) {
                    map[x.2] = y.2;
                    map[x.3] = y.3;
                }
                map
            }
        };
        if b.image_contained(&a.words, &map) {
            return Some(map);
        }
    }
    None
}

/// Heuristic search for `σ(a) ⊆ b` (plain branch only; pass a complemented
/// set for the other branch). Never returns an invalid witness.
pub fn heuristic_match(
    a: &OutputSet,
    b: &OutputSet,
    group: Group,
    restarts: u32,
    seed: u64,
) -> Option<SubsumptionWitness> {
    if a.n() != b.n() || (group == Group::ReflectionCentralizer && a.n() % 2 == 1) {
        return None;
    }
    let ad = MatchData::new(a, group);
    let bd = MatchData::new(b, group);
    heuristic_branch(&ad.plain, &bd, restarts, seed).map(|map| witness(map, false))
}

/// Unit of assignment in the backtracking matcher: a single channel, or a
/// mirrored pair that must land on a mirrored pair.
#[derive(Debug, Clone, Copy)]
struct Unit {
    ch: [usize; 2],
    len: usize,
}

fn units(n: usize, group: Group) -> Vec<Unit> {
    match group {
        Group::FullSymmetric => (0..n).map(|c| Unit { ch: [c, c], len: 1 }).collect(),
        Group::ReflectionCentralizer => {
            let mut u: Vec<Unit> = (0..n / 2)
                .map(|p| Unit {
                    ch: [p, n - 1 - p],
                    len: 2,
                })
                .collect();
            if n % 2 == 1 {
                u.push(Unit {
                    ch: [n / 2, n / 2],
                    len: 1,
                });
            }
            u
        }
    }
}

struct Backtrack<'a> {
    n: usize,
    a_words: &'a [u32],
    b: &'a MatchData,
    order: Vec<usize>,
    units: Vec<Unit>,
    /// admissible (target unit, orientation) per source unit
    options: UnitOptions,
    b_used: Vec<bool>,
    map: Vec<usize>,
    /// partial images of the source vectors, one buffer per level
    images: Vec<Vec<u32>>,
    stamp: Vec<u32>,
    epoch: u32,
    scratch: Vec<u32>,
}

impl Backtrack<'_> {
    /// Every partial image must be the projection of some vector of `b`.
    fn projection_ok(&mut self, level: usize, mask: u32) -> bool {
        let images = &self.images[level];
        if self.n <= 20 {
            if self.stamp.is_empty() {
                self.stamp = vec![0; 1 << self.n];
            }
            self.epoch = self.epoch.wrapping_add(1);
            if self.epoch == 0 {
                self.stamp.iter_mut().for_each(|s| *s = 0);
                self.epoch = 1;
            }
            let e = self.epoch;
            for &w in &self.b.plain.words {
                self.stamp[(w & mask) as usize] = e;
            }
            images.iter().all(|&img| self.stamp[img as usize] == e)
        } else {
            self.scratch.clear();
            self.scratch.extend(self.b.plain.words.iter().map(|&w| w & mask));
            self.scratch.sort_unstable();
            self.scratch.dedup();
            let proj = &self.scratch;
            images.iter().all(|img| proj.binary_search(img).is_ok())
        }
    }

    fn search(&mut self, level: usize, mask: u32) -> bool {
        if level == self.order.len() {
            return true;
        }
        let ui = self.order[level];
        let unit = self.units[ui];
        for k in 0..self.options[ui].len() {
            let (v, orient) = self.options[ui][k];
            if self.b_used[v] {
                continue;
            }
            let target = self.units[v];
            let mut new_mask = mask;
            for i in 0..unit.len {
                let d = target.ch[i ^ orient];
                self.map[unit.ch[i]] = d;
                new_mask |= 1 << d;
            }
            let (done, rest) = self.images.split_at_mut(level + 1);
            let prev = &done[level];
            let next = &mut rest[0];
            next.clear();
            next.extend(prev.iter().zip(self.a_words).map(|(&img, &w)| {
                let mut img = img;
                for i in 0..unit.len {
                    let c = unit.ch[i];
                    img |= ((w >> c) & 1) << self.map[c];
                }
                img
            }));
            let ok = if level + 1 == self.order.len() {
                let b = self.b;
                self.images[level + 1].iter().all(|&img| b.contains(img))
            } else {
                self.projection_ok(level + 1, new_mask)
            };
            if ok {
                self.b_used[v] = true;
                if self.search(level + 1, new_mask) {
                    return true;
                }
                self.b_used[v] = false;
            }
        }
        false
    }
}

/// Complete search for one branch, restricted to the admissible unit options.
fn exact_branch(a: &Branch, b: &MatchData, options: UnitOptions) -> Option<Vec<usize>> {
    let n = b.n;
    if n == 0 {
        return Some(vec![]);
    }
    let units = units(n, b.group);
    let mut order: Vec<usize> = (0..units.len()).collect();
    // most constrained first
    order.sort_by_key(|&u| (options[u].len(), u));
    let mut bt = Backtrack {
        n,
        a_words: &a.words,
        b,
        order,
        b_used: vec![false; units.len()],
        units,
        options,
        map: vec![usize::MAX; n],
        images: vec![Vec::with_capacity(a.words.len()); n + 2],
        stamp: Vec::new(),
        epoch: 0,
        scratch: Vec::new(),
    };
    bt.images[0] = vec![0; a.words.len()];
    if bt.search(0, 0) {
        Some(bt.map)
    } else {
        None
    }
}

/// Complete decision procedure for `σ(a) ⊆ b` or `σ(¬a) ⊆ b` over `group`.
pub fn exact_match(a: &OutputSet, b: &OutputSet, group: Group) -> Option<SubsumptionWitness> {
    if a.n() != b.n() || (group == Group::ReflectionCentralizer && a.n() % 2 == 1) {
        return None;
    }
    let ad = MatchData::new(a, group);
    let bd = MatchData::new(b, group);
    for negated in [false, true] {
        let br = ad.branch(negated);
        if br.words.len() > bd.len() {
            continue;
        }
        let Some(options) = unit_options(br, &bd) else {
            continue;
        };
        if let Some(map) = exact_branch(br, &bd, options) {
            return Some(witness(map, negated));
        }
    }
    None
}

/// Which stage of the pipeline settled a subsumption query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decider {
    Filter,
    Heuristic,
    Exact,
}

/// Counters for how pipeline queries were decided.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SubsumeStats {
    pub queries: u64,
    pub filtered: u64,
    pub heuristic_hits: u64,
    pub exact_hits: u64,
    pub exact_misses: u64,
}

impl SubsumeStats {
    pub fn record(&mut self, outcome: Option<Decider>, found: bool) {
        self.queries += 1;
        match (outcome, found) {
            (Some(Decider::Heuristic), true) => self.heuristic_hits += 1,
            (Some(Decider::Exact), true) => self.exact_hits += 1,
            (Some(Decider::Exact), false) => self.exact_misses += 1,
            _ => self.filtered += 1,
        }
    }

    pub fn merge(&mut self, o: &SubsumeStats) {
        self.queries += o.queries;
        self.filtered += o.filtered;
        self.heuristic_hits += o.heuristic_hits;
        self.exact_hits += o.exact_hits;
        self.exact_misses += o.exact_misses;
    }

    /// Share of found witnesses that the heuristic caught on its own.
    pub fn heuristic_rate(&self) -> f64 {
        let found = self.heuristic_hits + self.exact_hits;
        if found == 0 {
            1.0
        } else {
            self.heuristic_hits as f64 / found as f64
        }
    }
}

/// Settings for the filter → heuristic → exact pipeline.
#[derive(Debug, Clone, Copy)]
pub struct Subsumer {
    pub group: Group,
    pub restarts: u32,
    pub seed: u64,
}

impl Subsumer {
    pub fn new(group: Group, restarts: u32, seed: u64) -> Self {
        Subsumer {
            group,
            restarts,
            seed,
        }
    }

    /// Does `a` subsume `b`? Runs each stage on the plain branch, then the
    /// complemented one.
    pub fn check(&self, a: &MatchData, b: &MatchData) -> (Option<SubsumptionWitness>, Option<Decider>) {
        debug_assert_eq!(a.group, self.group);
        if a.n != b.n || a.len() > b.len() {
            return (None, None);
        }
        let mut open: [Option<UnitOptions>; 2] = [None, None];
        for &negated in a.branches() {
            let br = a.branch(negated);
            if br.profile.admits(&b.plain.profile) {
                open[negated as usize] = unit_options(br, b);
            }
        }
        if open.iter().all(Option::is_none) {
            return (None, Some(Decider::Filter));
        }
        for negated in [false, true] {
            if open[negated as usize].is_some() {
                if let Some(map) = heuristic_branch(a.branch(negated), b, self.restarts, self.seed) {
                    return (Some(witness(map, negated)), Some(Decider::Heuristic));
                }
            }
        }
        for negated in [false, true] {
            if let Some(options) = open[negated as usize].take() {
                if let Some(map) = exact_branch(a.branch(negated), b, options) {
                    return (Some(witness(map, negated)), Some(Decider::Exact));
                }
            }
        }
        (None, Some(Decider::Exact))
    }
}

fn witness(map: Vec<usize>, negated: bool) -> SubsumptionWitness {
    SubsumptionWitness {
        sigma: ChannelPermutation::new(map).expect("matchers build bijections"),
        negated,
    }
}

/// Largest `n` accepted by [`enumerate_group`].
pub const MAX_ENUMERATE_N: usize = 12;

/// Every element of the group, each once.
pub fn enumerate_group(n: usize, group: Group) -> Result<Vec<ChannelPermutation>, SymmetryError> {
    if n > MAX_ENUMERATE_N {
        return Err(SymmetryError::TooLarge {
            n,
            max: MAX_ENUMERATE_N,
        });
    }
    let mut out = Vec::new();
    match group {
        Group::FullSymmetric => {
            let mut perm: Vec<usize> = (0..n).collect();
            heap_permutations(&mut perm, n, &mut |p| {
                out.push(ChannelPermutation::new(p.to_vec()).unwrap())
            });
        }
        Group::ReflectionCentralizer => {
            if n % 2 == 1 {
                return Err(SymmetryError::OddChannels(n));
            }
            let half = n / 2;
            let mut pairs: Vec<usize> = (0..half).collect();
            let mut perms = Vec::new();
            heap_permutations(&mut pairs, half, &mut |p| perms.push(p.to_vec()));
            for p in perms {
                for flips in 0u32..(1 << half) {
                    let mut map = vec![0; n];
                    for (k, &q) in p.iter().enumerate() {
                        let (x, y) = if (flips >> k) & 1 == 1 {
                            (n - 1 - q, q)
                        } else {
                            (q, n - 1 - q)
                        };
                        map[k] = x;
                        map[n - 1 - k] = y;
                    }
                    out.push(ChannelPermutation::new(map).unwrap());
                }
            }
        }
    }
    Ok(out)
}

fn heap_permutations(a: &mut [usize], k: usize, f: &mut impl FnMut(&[usize])) {
    if k <= 1 {
        f(a);
        return;
    }
    heap_permutations(a, k - 1, f);
    for i in 0..k - 1 {
        if k.is_multiple_of(2) {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
        heap_permutations(a, k - 1, f);
    }
}
