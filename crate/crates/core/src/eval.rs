//! Boolean evaluation of comparator networks.
//!
//! Channel 0 is the top channel. A comparator `(i, j)` with `i < j` writes
//! `x_i AND x_j` to channel `i` and `x_i OR x_j` to channel `j`, so a sorted
//! vector has all of its ones on the highest channels.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::netcore::{Layer, Network};

/// Largest channel count supported by the exhaustive bit-sliced routines.
pub const MAX_EXHAUSTIVE_N: usize = 32;
/// Largest channel count for which `output_set` enumerates all inputs.
pub const MAX_OUTPUT_SET_N: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("n={n} exceeds the exhaustive limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("malformed output-set file at line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// Mask with the low `n` bits set.
#[inline]
pub fn full_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// A Boolean vector on `n ≤ 32` channels; bit `i` is the value on channel `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitVec {
    word: u32,
    n: u8,
}

impl BitVec {
    pub fn new(word: u32, n: usize) -> Self {
        assert!(n <= 32, "BitVec holds at most 32 channels");
        BitVec {
            word: word & full_mask(n),
            n: n as u8,
        }
    }

    /// Builds a vector from channel values, channel 0 first.
    pub fn from_bits(bits: &[u8]) -> Self {
        let word = bits
            .iter()
            .enumerate()
            .fold(0u32, |w, (i, &b)| w | (((b & 1) as u32) << i));
        BitVec::new(word, bits.len())
    }

    pub fn word(&self) -> u32 {
        self.word
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn bit(&self, i: usize) -> bool {
        (self.word >> i) & 1 == 1
    }

    pub fn complement(&self) -> BitVec {
        BitVec::new(!self.word, self.n())
    }

    /// Index reversal `i -> n-1-i`.
    pub fn reflect(&self) -> BitVec {
        BitVec::new(reflect_word(self.word, self.n()), self.n())
    }
}

impl fmt::Display for BitVec {
    /// Channel 0 first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[inline]
pub fn reflect_word(x: u32, n: usize) -> u32 {
    if n == 0 {
        0
    } else {
        x.reverse_bits() >> (32 - n)
    }
}

#[inline]
pub fn is_sorted_word(x: u32, n: usize) -> bool {
    let m = full_mask(n);
    (x << 1) & m & !x == 0
}

pub fn is_sorted(x: BitVec) -> bool {
    is_sorted_word(x.word, x.n())
}

#[inline]
fn apply_comparator_word(x: u32, lo: usize, hi: usize) -> u32 {
    let t = (x >> lo) & !(x >> hi) & 1;
    x ^ ((t << lo) | (t << hi))
}

/// Channel pairs of a layer as a flat list, for tight loops.
#[derive(Debug, Clone, Default)]
pub(crate) struct CompiledLayer {
    pairs: Vec<(u8, u8)>,
}

impl CompiledLayer {
    pub(crate) fn new(layer: &Layer) -> Self {
        CompiledLayer {
            pairs: layer
                .comparators()
                .iter()
                .map(|c| (c.lo() as u8, c.hi() as u8))
                .collect(),
        }
    }

    #[inline]
    pub(crate) fn apply(&self, mut x: u32) -> u32 {
        for &(lo, hi) in &self.pairs {
            x = apply_comparator_word(x, lo as usize, hi as usize);
        }
        x
    }
}

pub(crate) fn apply_layer_word(layer: &Layer, mut x: u32) -> u32 {
    for c in layer.comparators() {
        x = apply_comparator_word(x, c.lo(), c.hi());
    }
    x
}

pub fn apply_network_word(net: &Network, mut x: u32) -> u32 {
    for layer in net.layers() {
        x = apply_layer_word(layer, x);
    }
    x
}

pub fn apply_network(net: &Network, x: BitVec) -> BitVec {
    debug_assert_eq!(x.n(), net.n());
    BitVec::new(apply_network_word(net, x.word), x.n())
}

/// The set of Boolean vectors reachable at the output of a prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutputSet {
    n: usize,
    words: Vec<u32>,
}

impl OutputSet {
    /// Builds a set from arbitrary words (masked to `n` bits, sorted, deduplicated).
    pub fn from_words(n: usize, mut words: Vec<u32>) -> Self {
        let m = full_mask(n);
        for w in &mut words {
            *w &= m;
        }
        words.sort_unstable();
        words.dedup();
        OutputSet { n, words }
    }

    /// All `2^n` vectors.
    pub fn all(n: usize) -> Self {
        assert!(n < 32, "the full cube on {n} channels is not representable");
        OutputSet {
            n,
            words: (0..(1u32 << n)).collect(),
        }
    }

    /// The `n+1` sorted vectors.
    pub fn sorted_only(n: usize) -> Self {
        let m = full_mask(n);
        let mut words: Vec<u32> = (0..=n).map(|k| m & !full_mask(k)).collect();
        words.sort_unstable();
        OutputSet { n, words }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    pub fn contains(&self, x: u32) -> bool {
        self.words.binary_search(&x).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = BitVec> + '_ {
        self.words.iter().map(move |&w| BitVec::new(w, self.n))
    }

    /// Every vector complemented.
    pub fn complement(&self) -> OutputSet {
        let m = full_mask(self.n);
        OutputSet::from_words(self.n, self.words.iter().map(|w| !w & m).collect())
    }

    /// Vectors that are not sorted.
    pub fn unsorted_words(&self) -> impl Iterator<Item = u32> + '_ {
        self.words
            .iter()
            .copied()
            .filter(move |&w| !is_sorted_word(w, self.n))
    }

    pub fn is_subset_of(&self, other: &OutputSet) -> bool {
        if self.n != other.n || self.len() > other.len() {
            return false;
        }
        let mut it = other.words.iter();
        'outer: for w in &self.words {
            for o in it.by_ref() {
                if o == w {
                    continue 'outer;
                }
                if o > w {
                    return false;
                }
            }
            return false;
        }
        true
    }

    /// Text form: `n=<n> count=<k>` then one zero-padded hex word per line.
    pub fn to_text(&self) -> String {
        let width = self.n.div_ceil(4).max(1);
        let mut out = format!("n={} count={}\n", self.n, self.words.len());
        for w in &self.words {
            out.push_str(&format!("{w:0width$x}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, EvalError> {
        let err = |line: usize, msg: &str| EvalError::Format {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let mut n = None;
        let mut count = None;
        for field in header.split_whitespace() {
            if let Some(v) = field.strip_prefix("n=") {
                n = v.parse::<usize>().ok();
            } else if let Some(v) = field.strip_prefix("count=") {
                count = v.parse::<usize>().ok();
            }
        }
        let n = n.ok_or_else(|| err(1, "header lacks n="))?;
        let count = count.ok_or_else(|| err(1, "header lacks count="))?;
        if n > 32 {
            return Err(err(1, "n above 32"));
        }
        let mut words = Vec::with_capacity(count);
        for (idx, line) in lines {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let w = u32::from_str_radix(t, 16).map_err(|_| err(idx + 1, "bad hex word"))?;
            if w & !full_mask(n) != 0 {
                return Err(err(idx + 1, "word exceeds n bits"));
            }
            if words.last().is_some_and(|&p| p >= w) {
                return Err(err(idx + 1, "words not strictly ascending"));
            }
            words.push(w);
        }
        if words.len() != count {
            return Err(err(1, "count does not match body"));
        }
        Ok(OutputSet { n, words })
    }
}

/// Image of `s` under one layer.
pub fn advance_output_set(s: &OutputSet, layer: &Layer) -> OutputSet {
    if layer.is_empty() {
        return s.clone();
    }
    let compiled = CompiledLayer::new(layer);
    let words: Vec<u32> = if s.len() > 1 << 16 {
        s.words.par_iter().map(|&w| compiled.apply(w)).collect()
    } else {
        s.words.iter().map(|&w| compiled.apply(w)).collect()
    };
    let mut out = OutputSet { n: s.n, words };
    if out.words.len() > 1 << 16 {
        out.words.par_sort_unstable();
    } else {
        out.words.sort_unstable();
    }
    out.words.dedup();
    out
}

/// Exhaustive output set, for `n ≤ 24`.
pub fn output_set(net: &Network) -> Result<OutputSet, EvalError> {
    let n = net.n();
    if n > MAX_OUTPUT_SET_N {
        return Err(EvalError::TooLarge {
            n,
            max: MAX_OUTPUT_SET_N,
        });
    }
    let mut s = OutputSet::all(n);
    for layer in net.layers() {
        s = advance_output_set(&s, layer);
    }
    Ok(s)
}

/// Largest set materialized by [`output_set_from_first_layer`].
pub const MAX_MATERIALIZED: usize = 1 << 26;

/// Exact output set for up to 32 channels, without enumerating `2^n`
/// inputs: the image of the first layer is written down directly (every
/// comparator shows `00`, `01` or `11`, free channels anything) and the
/// remaining layers are applied with [`advance_output_set`].
pub fn output_set_from_first_layer(net: &Network) -> Result<OutputSet, EvalError> {
    let n = net.n();
    if n > MAX_EXHAUSTIVE_N {
        return Err(EvalError::TooLarge {
            n,
            max: MAX_EXHAUSTIVE_N,
        });
    }
    let mut layers = net.layers().iter().skip_while(|l| l.is_empty());
    let Some(first) = layers.next() else {
        if n > MAX_OUTPUT_SET_N {
            return Err(EvalError::TooLarge {
                n,
                max: MAX_OUTPUT_SET_N,
            });
        }
        return Ok(OutputSet::all(n));
    };
    let used = first.used_mask() as u32;
    let free: Vec<usize> = (0..n).filter(|&c| used & (1 << c) == 0).collect();
    let size = 3f64.powi(first.len() as i32) * 2f64.powi(free.len() as i32);
    if size > MAX_MATERIALIZED as f64 {
        return Err(EvalError::TooLarge {
            n,
            max: MAX_OUTPUT_SET_N,
        });
    }
    let mut words = vec![0u32];
    for c in first.comparators() {
        let (lo, hi) = (1u32 << c.lo(), 1u32 << c.hi());
        words = words
            .iter()
            .flat_map(|&w| [w, w | hi, w | lo | hi])
            .collect();
    }
    for &f in &free {
        words = words.iter().flat_map(|&w| [w, w | (1 << f)]).collect();
    }
    let mut s = OutputSet::from_words(n, words);
    for layer in layers {
        s = advance_output_set(&s, layer);
    }
    Ok(s)
}

/// Output set of two stacked prefixes: every `top` vector on the low
/// channels next to every `bottom` vector on the high channels.
pub fn product_stack_outputs(top: &OutputSet, bottom: &OutputSet) -> OutputSet {
    let n = top.n + bottom.n;
    assert!(n <= 32, "stacked output set exceeds 32 channels");
    let shift = top.n as u32;
    let mut words = Vec::with_capacity(top.len() * bottom.len());
    for &b in &bottom.words {
        let hi = if shift >= 32 { 0 } else { b << shift };
        for &t in &top.words {
            words.push(hi | t);
        }
    }
    OutputSet { n, words }
}

/// Result of exhaustive verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Sorts,
    /// The numerically least input that the network fails to sort.
    Counterexample(BitVec),
}

impl Verdict {
    pub fn sorts(&self) -> bool {
        matches!(self, Verdict::Sorts)
    }
}

/// Lane patterns for the low six input bits of a 64-input batch.
const LANE_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Bit-sliced evaluator: one `u64` per channel carries 64 inputs at once.
struct Sliced {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl Sliced {
    fn new(net: &Network) -> Self {
        Sliced {
            n: net.n(),
            pairs: net.comparators().map(|c| (c.lo(), c.hi())).collect(),
        }
    }

    fn batches(&self) -> u64 {
        if self.n <= 6 {
            1
        } else {
            1u64 << (self.n - 6)
        }
    }

    /// Valid lanes of a batch (only the first batch is partial, for n < 6).
    fn lane_mask(&self) -> u64 {
        if self.n >= 6 {
            u64::MAX
        } else {
            (1u64 << (1u64 << self.n)) - 1
        }
    }

    #[inline]
    fn load(&self, batch: u64, w: &mut [u64]) {
        for (c, slot) in w.iter_mut().enumerate().take(self.n) {
            *slot = if c < 6 {
                LANE_PATTERNS[c]
            } else if (batch >> (c - 6)) & 1 == 1 {
                u64::MAX
            } else {
                0
            };
        }
    }

    #[inline]
    fn unsorted_lanes(&self, w: &[u64]) -> u64 {
        let mut bad = 0u64;
        for c in 0..self.n.saturating_sub(1) {
            bad |= w[c] & !w[c + 1];
        }
        bad & self.lane_mask()
    }

    /// First unsorted input in batches `[start, end)`, if any.
    fn scan(&self, start: u64, end: u64) -> Option<u64> {
        let mut w = [0u64; MAX_EXHAUSTIVE_N];
        for batch in start..end {
            self.load(batch, &mut w);
            for &(lo, hi) in &self.pairs {
                let a = w[lo];
                let b = w[hi];
                w[lo] = a & b;
                w[hi] = a | b;
            }
            let bad = self.unsorted_lanes(&w);
            if bad != 0 {
                return Some(batch * 64 + bad.trailing_zeros() as u64);
            }
        }
        None
    }

    /// Marks comparators that ever see `(1, 0)` on `(lo, hi)` in `[start, end)`.
    fn usage(&self, start: u64, end: u64) -> Vec<bool> {
        let mut used = vec![false; self.pairs.len()];
        let mask = self.lane_mask();
        let mut w = [0u64; MAX_EXHAUSTIVE_N];
        for batch in start..end {
            self.load(batch, &mut w);
            for (k, &(lo, hi)) in self.pairs.iter().enumerate() {
                let a = w[lo];
                let b = w[hi];
                used[k] |= a & !b & mask != 0;
                w[lo] = a & b;
                w[hi] = a | b;
            }
        }
        used
    }
}

const CHUNK_BATCHES: u64 = 1 << 12;

/// Exhaustive zero-one check of all `2^n` inputs, 64 inputs per pass.
pub fn verify_sorting(net: &Network) -> Result<Verdict, EvalError> {
    let n = net.n();
    if n > MAX_EXHAUSTIVE_N {
        return Err(EvalError::TooLarge {
            n,
            max: MAX_EXHAUSTIVE_N,
        });
    }
    let sliced = Sliced::new(net);
    let total = sliced.batches();
    let chunks = total.div_ceil(CHUNK_BATCHES);
    // find_map_first keeps the numerically least counterexample.
    let found = (0..chunks).into_par_iter().find_map_first(|k| {
        let start = k * CHUNK_BATCHES;
        let end = (start + CHUNK_BATCHES).min(total);
        sliced.scan(start, end)
    });
    Ok(match found {
        None => Verdict::Sorts,
        Some(input) => Verdict::Counterexample(BitVec::new(input as u32, n)),
    })
}

/// Scalar reference check, one input at a time. Kept for cross-checking the
/// bit-sliced path.
pub fn verify_sorting_scalar(net: &Network) -> Result<Verdict, EvalError> {
    let n = net.n();
    if n > MAX_OUTPUT_SET_N {
        return Err(EvalError::TooLarge {
            n,
            max: MAX_OUTPUT_SET_N,
        });
    }
    for x in 0..(1u64 << n) {
        let y = apply_network_word(net, x as u32);
        if !is_sorted_word(y, n) {
            return Ok(Verdict::Counterexample(BitVec::new(x as u32, n)));
        }
    }
    Ok(Verdict::Sorts)
}

/// Deletes every comparator `(i, j)` that never sees `x_i = 1, x_j = 0` on
/// any input. Such comparators act as the identity on everything that
/// reaches them, so one exhaustive pass decides all of them at once.
pub fn remove_unused_comparators(net: &Network) -> Result<Network, EvalError> {
    let n = net.n();
    if n > MAX_EXHAUSTIVE_N {
        return Err(EvalError::TooLarge {
            n,
            max: MAX_EXHAUSTIVE_N,
        });
    }
    let sliced = Sliced::new(net);
    let total = sliced.batches();
    let chunks = total.div_ceil(CHUNK_BATCHES);
    let used = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let start = k * CHUNK_BATCHES;
            let end = (start + CHUNK_BATCHES).min(total);
            sliced.usage(start, end)
        })
        .reduce(
            || vec![false; sliced.pairs.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x |= y;
                }
                a
            },
        );
    let mut k = 0;
    let mut layers = Vec::with_capacity(net.layers().len());
    for layer in net.layers() {
        let keep: Vec<_> = layer
            .comparators()
            .iter()
            .filter(|_| {
                let u = used[k];
                k += 1;
                u
            })
            .copied()
            .collect();
        layers.push(Layer::new(keep).expect("subset of a valid layer"));
    }
    Ok(Network::new(n, layers).expect("channels unchanged"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorter4() -> Network {
        Network::from_pairs(4, &[&[(0, 1), (2, 3)], &[(0, 2), (1, 3)], &[(1, 2)]])
    }

    #[test]
    fn single_comparator() {
        let net = Network::from_pairs(2, &[&[(0, 1)]]);
        // bit0=1, bit1=0 -> bit0=0, bit1=1
        assert_eq!(apply_network(&net, BitVec::from_bits(&[1, 0])), BitVec::from_bits(&[0, 1]));
        assert_eq!(apply_network(&net, BitVec::from_bits(&[0, 1])), BitVec::from_bits(&[0, 1]));
        let id = Network::empty(5);
        for x in 0..32 {
            assert_eq!(apply_network_word(&id, x), x);
        }
    }

    #[test]
    fn sortedness() {
        assert!(is_sorted(BitVec::new(0, 5)));
        assert!(is_sorted(BitVec::new(0b11111, 5)));
        assert!(!is_sorted(BitVec::from_bits(&[1, 0, 0])));
        for n in 0..=10 {
            let count = (0..(1u32 << n)).filter(|&x| is_sorted_word(x, n)).count();
            assert_eq!(count, n + 1);
        }
        assert_eq!(OutputSet::sorted_only(3).words(), &[0b000, 0b100, 0b110, 0b111]);
    }

    #[test]
    fn verify_small() {
        assert_eq!(verify_sorting(&Network::empty(1)).unwrap(), Verdict::Sorts);
        assert_eq!(verify_sorting(&Network::empty(0)).unwrap(), Verdict::Sorts);
        assert_eq!(verify_sorting(&sorter4()).unwrap(), Verdict::Sorts);
        // input 1 = bits (1,0,...) is the least unsorted input of an empty net
        assert_eq!(
            verify_sorting(&Network::empty(3)).unwrap(),
            Verdict::Counterexample(BitVec::new(1, 3))
        );
        assert!(verify_sorting(&Network::empty(33)).is_err());
    }

    #[test]
    fn advance_two_channels() {
        let s = advance_output_set(&OutputSet::all(2), &Layer::from_pairs(&[(0, 1)]));
        assert_eq!(s.words(), &[0b00, 0b10, 0b11]);
        assert_eq!(advance_output_set(&s, &Layer::empty()), s);
    }

    #[test]
    fn output_set_of_sorter() {
        assert_eq!(output_set(&sorter4()).unwrap(), OutputSet::sorted_only(4));
        assert_eq!(output_set(&Network::empty(5)).unwrap().len(), 32);
        assert!(output_set(&Network::empty(25)).is_err());
    }

    #[test]
    fn first_layer_route_matches_enumeration() {
        let net = Network::from_pairs(7, &[&[], &[(0, 6), (2, 3)], &[(1, 2), (4, 5)], &[(0, 3)]]);
        assert_eq!(output_set_from_first_layer(&net).unwrap(), output_set(&net).unwrap());
        assert_eq!(
            output_set_from_first_layer(&Network::empty(4)).unwrap(),
            OutputSet::all(4)
        );
    }

    #[test]
    fn product_sizes() {
        let one = output_set(&Network::from_pairs(2, &[&[(0, 1)]])).unwrap();
        let p = product_stack_outputs(&one, &one);
        assert_eq!(p.len(), 9);
        assert!(p.words().windows(2).all(|w| w[0] < w[1]));
        let stacked = crate::netcore::stack(
            &Network::from_pairs(2, &[&[(0, 1)]]),
            &Network::from_pairs(2, &[&[(0, 1)]]),
        );
        assert_eq!(output_set(&stacked).unwrap(), p);
    }

    #[test]
    fn removal_examples() {
        let mut net = sorter4();
        net.push_layer(Layer::from_pairs(&[(0, 1)])).unwrap();
        let cleaned = remove_unused_comparators(&net).unwrap();
        assert_eq!(cleaned.size(), 5);
        assert_eq!(cleaned.without_empty_layers(), sorter4());

        let dup = Network::from_pairs(3, &[&[(0, 2)], &[(0, 2)]]);
        let cleaned = remove_unused_comparators(&dup).unwrap();
        assert_eq!(cleaned.layers()[0].len(), 1);
        assert_eq!(cleaned.layers()[1].len(), 0);
    }

    #[test]
    fn output_set_text_round_trip() {
        let s = output_set(&Network::from_pairs(5, &[&[(0, 4), (1, 3)]])).unwrap();
        let text = s.to_text();
        assert!(text.starts_with(&format!("n=5 count={}\n", s.len())));
        assert_eq!(OutputSet::from_text(&text).unwrap(), s);
        assert!(OutputSet::from_text("n=2 count=2\n3\n1\n").is_err());
        assert!(OutputSet::from_text("n=2 count=1\n4\n").is_err());
        assert!(OutputSet::from_text("n=2 count=3\n1\n").is_err());
    }

    #[test]
    fn subset() {
        let a = OutputSet::from_words(3, vec![1, 5]);
        let b = OutputSet::from_words(3, vec![0, 1, 4, 5]);
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert!(!OutputSet::from_words(3, vec![2]).is_subset_of(&b));
    }
}
