//! Generate-and-prune search over prefixes, the Van Voorhis 16-channel
//! prefix, nested stacking, and greedy one-comparator extension.
//!
//! Pools are kept in canonical order: ascending output size, ties broken by
//! the derived structural order on [`Network`]. Pruning keeps a candidate iff
//! no earlier kept entry subsumes it, so pool contents do not depend on how
//! the work is scheduled.

mod layers;
mod prune;

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use layers::{enumerate_layers, enumerate_maximal_symmetric_layers, enumerate_symmetric_layers};

use crate::eval::{
    advance_output_set, output_set, output_set_from_first_layer, product_stack_outputs, EvalError,
    OutputSet, MAX_OUTPUT_SET_N,
};
use crate::netcore::{
    is_reflection_symmetric, permute_channels, stack, ChannelPermutation, Comparator, Layer, NetError,
    Network,
};
use crate::symmetry::{Group, MatchData, SubsumeStats, Subsumer};
use prune::PruneEngine;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("symmetric search needs an even channel count, got {0}")]
    OddChannels(usize),
    #[error("asked for {k} entries from a pool of {len}")]
    NotEnough { k: usize, len: usize },
    #[error("pool mismatch: {0}")]
    Incompatible(String),
    #[error("pool file line {line}: {msg}")]
    PoolFormat { line: usize, msg: String },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which layers and which permutation group the search works with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Reflection-symmetric layers, pruned under the reflection centralizer.
    Symmetric,
    /// All layers, pruned under the full symmetric group. Small `n` only.
    General,
}

impl SearchMode {
    pub fn group(self) -> Group {
        match self {
            SearchMode::Symmetric => Group::ReflectionCentralizer,
            SearchMode::General => Group::FullSymmetric,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SearchMode::Symmetric => "symmetric",
            SearchMode::General => "general",
        }
    }
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SearchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "symmetric" => Ok(SearchMode::Symmetric),
            "general" => Ok(SearchMode::General),
            other => Err(format!("unknown search mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub mode: SearchMode,
    /// Random restarts of the heuristic matcher per subsumption query.
    pub restarts: u32,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            mode: SearchMode::Symmetric,
            restarts: 10,
            seed: 0,
        }
    }
}

impl SearchOptions {
    fn subsumer(&self) -> Subsumer {
        Subsumer::new(self.mode.group(), self.restarts, self.seed)
    }
}

/// Exact output set of any network on up to 32 channels. Small networks are
/// enumerated; larger ones go through the image of their first layer.
pub fn exact_output_set(net: &Network) -> Result<OutputSet, EvalError> {
    if net.n() <= MAX_OUTPUT_SET_N {
        output_set(net)
    } else {
        output_set_from_first_layer(net)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixEntry {
    pub net: Network,
    pub out: OutputSet,
}

impl PrefixEntry {
    pub fn new(net: Network) -> Result<Self, SearchError> {
        let out = exact_output_set(&net)?;
        Ok(PrefixEntry { net, out })
    }

    /// Pairs a network with an output set computed elsewhere.
    pub fn from_parts(net: Network, out: OutputSet) -> Self {
        debug_assert_eq!(net.n(), out.n());
        PrefixEntry { net, out }
    }

    pub fn out_size(&self) -> usize {
        self.out.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixPool {
    n: usize,
    depth: usize,
    mode: SearchMode,
    seed: u64,
    entries: Vec<PrefixEntry>,
}

impl PrefixPool {
    /// Builds a pool and puts the entries in canonical order.
    pub fn new(n: usize, depth: usize, mode: SearchMode, seed: u64, mut entries: Vec<PrefixEntry>) -> Self {
        entries.sort_by(|a, b| a.out_size().cmp(&b.out_size()).then_with(|| a.net.cmp(&b.net)));
        PrefixPool {
            n,
            depth,
            mode,
            seed,
            entries,
        }
    }

    /// The pool holding only the empty network.
    pub fn empty_prefix(n: usize, opts: &SearchOptions) -> Result<Self, SearchError> {
        let entry = PrefixEntry::new(Network::empty(n))?;
        Ok(PrefixPool::new(n, 0, opts.mode, opts.seed, vec![entry]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of layers of every entry, counting a trailing empty one.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn mode(&self) -> SearchMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PrefixEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<PrefixEntry> {
        self.entries
    }

    pub fn out_sizes(&self) -> Vec<usize> {
        self.entries.iter().map(PrefixEntry::out_size).collect()
    }

    pub fn min_out_size(&self) -> Option<usize> {
        self.entries.first().map(PrefixEntry::out_size)
    }

    pub fn max_out_size(&self) -> Option<usize> {
        self.entries.last().map(PrefixEntry::out_size)
    }

    /// Pool file text: a header line, then one record per entry.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# pool n={} depth={} mode={} seed={} count={}\n",
            self.n,
            self.depth,
            self.mode,
            self.seed,
            self.entries.len()
        );
        for e in &self.entries {
            out.push_str(&format!(
                "out_size={} depth={} net={}\n",
                e.out_size(),
                e.net.layers().len(),
                e.net.to_single_line()
            ));
        }
        out
    }

    /// Parses a pool file and recomputes every output set, checking it
    /// against the recorded size.
    pub fn from_text(text: &str) -> Result<Self, SearchError> {
        let bad = |line: usize, msg: String| SearchError::PoolFormat { line, msg };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
        let header = header
            .strip_prefix("# pool")
            .ok_or_else(|| bad(1, "expected `# pool` header".into()))?;
        let mut n = None;
        let mut depth = None;
        let mut mode = None;
        let mut seed = None;
        let mut count = None;
        for field in header.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| bad(1, format!("malformed field `{field}`")))?;
            let num = || v.parse::<u64>().map_err(|_| bad(1, format!("bad value in `{field}`")));
            match k {
                "n" => n = Some(num()? as usize),
                "depth" => depth = Some(num()? as usize),
                "seed" => seed = Some(num()?),
                "count" => count = Some(num()? as usize),
                "mode" => mode = Some(v.parse::<SearchMode>().map_err(|e| bad(1, e))?),
                _ => return Err(bad(1, format!("unknown field `{k}`"))),
            }
        }
        let (Some(n), Some(depth), Some(mode), Some(seed)) = (n, depth, mode, seed) else {
            return Err(bad(1, "header needs n, depth, mode and seed".into()));
        };
        let mut records = Vec::new();
        for (i, line) in lines {
            let ln = i + 1;
            let mut size = None;
            let mut rec_depth = None;
            let mut net = None;
            let mut rest = line.trim();
            while !rest.is_empty() {
                if let Some(v) = rest.strip_prefix("net=") {
                    net = Some(v);
                    break;
                }
                let (field, tail) = rest.split_once(' ').unwrap_or((rest, ""));
                match field.split_once('=') {
                    Some(("out_size", v)) => {
                        size = Some(v.parse::<usize>().map_err(|_| bad(ln, format!("bad out_size `{v}`")))?)
                    }
                    Some(("depth", v)) => {
                        rec_depth = Some(v.parse::<usize>().map_err(|_| bad(ln, format!("bad depth `{v}`")))?)
                    }
                    _ => return Err(bad(ln, format!("unexpected field `{field}`"))),
                }
                rest = tail.trim_start();
            }
            let (Some(size), Some(rec_depth), Some(net)) = (size, rec_depth, net) else {
                return Err(bad(ln, "record needs out_size, depth and net".into()));
            };
            let net = Network::from_single_line(net, n).map_err(|e| bad(ln, e.to_string()))?;
            if net.layers().len() != rec_depth || rec_depth != depth {
                return Err(bad(ln, format!("record has {} layers, header says {depth}", net.layers().len())));
            }
            records.push((ln, size, net));
        }
        if let Some(c) = count {
            if c != records.len() {
                return Err(bad(1, format!("header count {c} but {} records", records.len())));
            }
        }
        let entries = records
            .into_par_iter()
            .map(|(ln, size, net)| {
                let e = PrefixEntry::new(net)?;
                if e.out_size() != size {
                    return Err(bad(ln, format!("out_size={size} recorded, {} recomputed", e.out_size())));
                }
                Ok(e)
            })
            .collect::<Result<Vec<_>, SearchError>>()?;
        Ok(PrefixPool::new(n, depth, mode, seed, entries))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SearchError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SearchError> {
        PrefixPool::from_text(&std::fs::read_to_string(path)?)
    }
}

/// The first `k` entries in canonical order.
pub fn select_best(pool: &PrefixPool, k: usize) -> Result<PrefixPool, SearchError> {
    if k > pool.len() {
        return Err(SearchError::NotEnough { k, len: pool.len() });
    }
    Ok(PrefixPool {
        entries: pool.entries[..k].to_vec(),
        ..pool.clone()
    })
}

/// What one generate or greedy step did.
#[derive(Debug, Clone)]
pub struct LayerStats {
    /// Layer count of the resulting pool.
    pub depth: usize,
    /// Greedy step number, or 0 for a full layer.
    pub step: usize,
    pub candidates: usize,
    /// Candidates left after dropping exact duplicate output sets.
    pub distinct: usize,
    pub pool_size: usize,
    pub min_out_size: Option<usize>,
    pub max_out_size: Option<usize>,
    pub subsume: SubsumeStats,
    pub elapsed: Duration,
}

impl fmt::Display for LayerStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Option<usize>| v.map_or("-".to_string(), |x| x.to_string());
        write!(f, "depth={}", self.depth)?;
        if self.step > 0 {
            write!(f, " step={}", self.step)?;
        }
        write!(
            f,
            " candidates={} distinct={} pool={} min_out={} max_out={} queries={} exact={} heuristic_rate={:.3} time={:.1}s",
            self.candidates,
            self.distinct,
            self.pool_size,
            show(self.min_out_size),
            show(self.max_out_size),
            self.subsume.queries,
            self.subsume.exact_hits + self.subsume.exact_misses,
            self.subsume.heuristic_rate(),
            self.elapsed.as_secs_f64()
        )
    }
}

fn hash_words(words: &[u32]) -> u64 {
    let mut h = DefaultHasher::new();
    words.hash(&mut h);
    h.finish()
}

struct Pruned {
    kept: Vec<usize>,
    distinct: usize,
    stats: SubsumeStats,
}

/// Prunes candidates `0..count`, where index order is structural order.
/// Output sets are recomputed on demand instead of held in memory.
fn prune_indexed<F>(opts: &SearchOptions, count: usize, limit: Option<usize>, make: F) -> Pruned
where
    F: Fn(usize) -> OutputSet + Sync,
{
    let mut descs: Vec<(u32, u64, u32)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let s = make(i);
            (s.len() as u32, hash_words(s.words()), i as u32)
        })
        .collect();
    descs.par_sort_unstable();

    // Equal sets subsume each other; keep the structurally first of each.
    let mut order: Vec<(u32, u32)> = Vec::with_capacity(descs.len());
    let mut start = 0;
    while start < descs.len() {
        let key = (descs[start].0, descs[start].1);
        let end = start + descs[start..].iter().take_while(|d| (d.0, d.1) == key).count();
        if end - start == 1 {
            order.push((key.0, descs[start].2));
        } else {
            let mut seen: Vec<OutputSet> = Vec::new();
            for d in &descs[start..end] {
                let s = make(d.2 as usize);
                if !seen.contains(&s) {
                    seen.push(s);
                    order.push((key.0, d.2));
                }
            }
        }
        start = end;
    }
    drop(descs);
    order.par_sort_unstable();
    let distinct = order.len();

    let group = opts.mode.group();
    let mut engine = PruneEngine::new(opts.subsumer());
    let picked = engine.run(order.len(), limit, |k| MatchData::new(&make(order[k].1 as usize), group));
    Pruned {
        kept: picked.into_iter().map(|k| order[k].1 as usize).collect(),
        distinct,
        stats: engine.stats,
    }
}

fn check_mode(n: usize, opts: &SearchOptions) -> Result<(), SearchError> {
    if opts.mode == SearchMode::Symmetric && !n.is_multiple_of(2) {
        return Err(SearchError::OddChannels(n));
    }
    Ok(())
}

fn candidate_layers(n: usize, mode: SearchMode) -> Vec<Layer> {
    let mut layers = match mode {
        SearchMode::Symmetric => enumerate_symmetric_layers(n, 0),
        SearchMode::General => enumerate_layers(n, 0),
    };
    layers.sort();
    layers
}

/// Extends every entry by every candidate layer and prunes the result.
pub fn extend_and_prune(pool: &PrefixPool, opts: &SearchOptions) -> Result<(PrefixPool, LayerStats), SearchError> {
    let t = Instant::now();
    let n = pool.n;
    check_mode(n, opts)?;
    let layers = candidate_layers(n, opts.mode);
    let mut parents: Vec<&PrefixEntry> = pool.entries.iter().collect();
    parents.sort_by(|a, b| a.net.cmp(&b.net));
    let nl = layers.len();
    let count = parents.len() * nl;
    let make = |i: usize| advance_output_set(&parents[i / nl].out, &layers[i % nl]);
    let pruned = prune_indexed(opts, count, None, make);
    let entries: Vec<PrefixEntry> = pruned
        .kept
        .par_iter()
        .map(|&i| {
            let p = parents[i / nl];
            let mut net = p.net.clone();
            net.push_layer(layers[i % nl].clone()).expect("layers fit the pool");
            PrefixEntry::from_parts(net, make(i))
        })
        .collect();
    let next = PrefixPool::new(n, pool.depth + 1, opts.mode, opts.seed, entries);
    let stats = LayerStats {
        depth: next.depth,
        step: 0,
        candidates: count,
        distinct: pruned.distinct,
        pool_size: next.len(),
        min_out_size: next.min_out_size(),
        max_out_size: next.max_out_size(),
        subsume: pruned.stats,
        elapsed: t.elapsed(),
    };
    Ok((next, stats))
}

/// Pools for depths `0..=depth`, starting from the empty network.
pub fn generate_and_prune(n: usize, depth: usize, opts: &SearchOptions) -> Result<Vec<PrefixPool>, SearchError> {
    generate_and_prune_with(n, depth, opts, |_, _| {})
}

/// Like [`generate_and_prune`], reporting each finished layer.
pub fn generate_and_prune_with<F>(
    n: usize,
    depth: usize,
    opts: &SearchOptions,
    mut on_layer: F,
) -> Result<Vec<PrefixPool>, SearchError>
where
    F: FnMut(&PrefixPool, &LayerStats),
{
    check_mode(n, opts)?;
    let mut pools = vec![PrefixPool::empty_prefix(n, opts)?];
    for _ in 0..depth {
        let (next, stats) = extend_and_prune(pools.last().unwrap(), opts)?;
        on_layer(&next, &stats);
        pools.push(next);
    }
    Ok(pools)
}

/// The first five layers of Van Voorhis's 16-channel network: four
/// hypercube layers, then a layer pairing channel addresses by weight.
pub fn van_voorhis_16_prefix() -> Network {
    let mut layers: Vec<Vec<(usize, usize)>> = (0..4)
        .map(|k| {
            let bit = 1 << k;
            (0..16).filter(|i| i & bit == 0).map(|i| (i, i | bit)).collect()
        })
        .collect();
    layers.push(vec![(1, 2), (4, 8), (3, 12), (5, 10), (6, 9), (7, 11), (13, 14)]);
    let refs: Vec<&[(usize, usize)]> = layers.iter().map(Vec::as_slice).collect();
    Network::from_pairs(16, &refs)
}

/// Channel map for [`nest`]: the outer network's top half stays on top, the
/// inner network goes in the middle, the outer bottom half goes below it.
pub fn nest_permutation(outer_n: usize, inner_n: usize) -> ChannelPermutation {
    let half = outer_n / 2;
    let map = (0..outer_n + inner_n)
        .map(|p| {
            if p < half {
                p
            } else if p < outer_n {
                p + inner_n
            } else {
                p - half
            }
        })
        .collect();
    ChannelPermutation::new(map).expect("block map is a bijection")
}

/// Places `inner` in the middle of `outer`. Unlike plain stacking this keeps
/// two reflection-symmetric networks symmetric.
pub fn nest(outer: &Network, inner: &Network) -> Network {
    let pi = nest_permutation(outer.n(), inner.n());
    permute_channels(&stack(outer, inner), &pi).expect("sizes agree")
}

/// Output set of [`nest`] from the two parts' output sets. Each block map is
/// monotone, so the relabelled product is exact.
pub fn nest_outputs(outer: &OutputSet, inner: &OutputSet) -> OutputSet {
    let pi = nest_permutation(outer.n(), inner.n());
    let prod = product_stack_outputs(outer, inner);
    OutputSet::from_words(prod.n(), prod.words().iter().map(|&w| pi.apply_word(w)).collect())
}

/// Every outer variant nested around every inner entry.
pub fn build_initial_pool(
    outer: &[PrefixEntry],
    inner: &PrefixPool,
    opts: &SearchOptions,
) -> Result<PrefixPool, SearchError> {
    let Some(first) = outer.first() else {
        return Err(SearchError::Incompatible("no outer prefixes".into()));
    };
    let depth = first.net.layers().len();
    for o in outer {
        if o.net.n() != first.net.n() || o.net.layers().len() != depth {
            return Err(SearchError::Incompatible("outer prefixes differ in shape".into()));
        }
    }
    if inner.depth != depth {
        return Err(SearchError::Incompatible(format!(
            "outer depth {depth} but inner depth {}",
            inner.depth
        )));
    }
    let n = first.net.n() + inner.n;
    if n > 32 {
        return Err(SearchError::Incompatible(format!("{n} channels exceed 32")));
    }
    let entries = outer
        .iter()
        .flat_map(|o| inner.entries.iter().map(move |i| (o, i)))
        .map(|(o, i)| PrefixEntry::from_parts(nest(&o.net, &i.net), nest_outputs(&o.out, &i.out)))
        .collect();
    Ok(PrefixPool::new(n, depth, opts.mode, opts.seed, entries))
}

/// The 28-channel starting pool: 16-channel variants around the 12-channel
/// pool (normally its best 4 entries). With no variants given, the Van
/// Voorhis prefix is used.
pub fn build_initial_pool_28(
    twelve: &PrefixPool,
    sixteen: &[Network],
    opts: &SearchOptions,
) -> Result<PrefixPool, SearchError> {
    if twelve.n != 12 {
        return Err(SearchError::Incompatible(format!("expected a 12-channel pool, got n={}", twelve.n)));
    }
    let nets = if sixteen.is_empty() {
        vec![van_voorhis_16_prefix()]
    } else {
        sixteen.to_vec()
    };
    let outer = nets
        .into_iter()
        .map(|net| {
            if net.n() != 16 {
                return Err(SearchError::Incompatible(format!("16-channel variant has n={}", net.n())));
            }
            if opts.mode == SearchMode::Symmetric && !is_reflection_symmetric(&net) {
                return Err(SearchError::Incompatible("16-channel variant is not symmetric".into()));
            }
            PrefixEntry::new(net)
        })
        .collect::<Result<Vec<_>, _>>()?;
    build_initial_pool(&outer, twelve, opts)
}

/// Comparator groups that may join the last layer of `net`: `c` with its
/// reflection in symmetric mode, single comparators otherwise.
fn extensions(net: &Network, mode: SearchMode) -> Vec<Vec<Comparator>> {
    let n = net.n();
    let used = net.layers().last().map_or(0, Layer::used_mask);
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if used & ((1 << a) | (1 << b)) != 0 {
                continue;
            }
            let c = Comparator::new(a, b).unwrap();
            match mode {
                SearchMode::General => out.push(vec![c]),
                SearchMode::Symmetric => {
                    let r = c.reflect(n);
                    if r == c {
                        out.push(vec![c]);
                    } else if c < r && used & ((1 << r.lo()) | (1 << r.hi())) == 0 {
                        out.push(vec![c, r]);
                    }
                }
            }
        }
    }
    out
}

/// Greedy extension of a fixed-depth pool into one more layer, a
/// comparator (and its mirror image) at a time, keeping the `pool_cap`
/// smallest non-subsumed prefixes after each step.
pub fn greedy_extend(
    pool: &PrefixPool,
    pool_cap: usize,
    max_steps: usize,
    opts: &SearchOptions,
) -> Result<PrefixPool, SearchError> {
    greedy_extend_with(pool, pool_cap, max_steps, opts, |_, _| {})
}

pub fn greedy_extend_with<F>(
    pool: &PrefixPool,
    pool_cap: usize,
    max_steps: usize,
    opts: &SearchOptions,
    mut on_step: F,
) -> Result<PrefixPool, SearchError>
where
    F: FnMut(&PrefixPool, &LayerStats),
{
    let n = pool.n;
    check_mode(n, opts)?;
    let entries: Vec<PrefixEntry> = pool
        .entries
        .iter()
        .map(|e| {
            let mut net = e.net.clone();
            net.push_layer(Layer::empty()).expect("empty layer fits");
            PrefixEntry::from_parts(net, e.out.clone())
        })
        .collect();
    let mut current = PrefixPool::new(n, pool.depth + 1, opts.mode, opts.seed, entries);
    for step in 1..=max_steps {
        let t = Instant::now();
        // (parent, added comparators); parent-only candidates carry none
        let mut cands: Vec<(usize, Vec<Comparator>, Network)> = Vec::new();
        for (pi, e) in current.entries.iter().enumerate() {
            cands.push((pi, Vec::new(), e.net.clone()));
            let last = e.net.layers().last().expect("extension layer present");
            for ext in extensions(&e.net, opts.mode) {
                let mut net = e.net.clone();
                net.replace_last_layer(last.with(&ext)?);
                cands.push((pi, ext, net));
            }
        }
        if cands.len() == current.len() {
            break;
        }
        cands.sort_by(|a, b| a.2.cmp(&b.2));
        let make = |i: usize| {
            let (pi, ext, _) = &cands[i];
            let out = &current.entries[*pi].out;
            if ext.is_empty() {
                out.clone()
            } else {
                advance_output_set(out, &Layer::new(ext.iter().copied()).expect("disjoint"))
            }
        };
        let pruned = prune_indexed(opts, cands.len(), Some(pool_cap), make);
        let entries: Vec<PrefixEntry> = pruned
            .kept
            .iter()
            .map(|&i| PrefixEntry::from_parts(cands[i].2.clone(), make(i)))
            .collect();
        let next = PrefixPool::new(n, current.depth, opts.mode, opts.seed, entries);
        let stats = LayerStats {
            depth: next.depth,
            step,
            candidates: cands.len(),
            distinct: pruned.distinct,
            pool_size: next.len(),
            min_out_size: next.min_out_size(),
            max_out_size: next.max_out_size(),
            subsume: pruned.stats,
            elapsed: t.elapsed(),
        };
        on_step(&next, &stats);
        let fixed = next == current;
        current = next;
        if fixed {
            break;
        }
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{output_set, verify_sorting};
    use crate::symmetry::exact_match;

    #[test]
    fn van_voorhis_prefix_shape() {
        let vv = van_voorhis_16_prefix();
        assert_eq!(vv.depth(), 5);
        assert!(vv.layers()[..4].iter().all(|l| l.len() == 8));
        assert_eq!(vv.layers()[4].len(), 7);
        assert!(is_reflection_symmetric(&vv));
    }

    #[test]
    fn nesting_keeps_symmetry_and_outputs() {
        let outer = Network::from_pairs(6, &[&[(0, 5), (1, 4)], &[(0, 1), (4, 5)]]);
        let inner = Network::from_pairs(4, &[&[(0, 3)], &[(0, 1), (2, 3)]]);
        assert!(is_reflection_symmetric(&outer) && is_reflection_symmetric(&inner));
        let nested = nest(&outer, &inner);
        assert!(is_reflection_symmetric(&nested));
        let direct = output_set(&nested).unwrap();
        let via = nest_outputs(&output_set(&outer).unwrap(), &output_set(&inner).unwrap());
        assert_eq!(direct, via);
    }

    #[test]
    fn tiny_pools() {
        let opts = SearchOptions::default();
        let pools = generate_and_prune(2, 1, &opts).unwrap();
        assert_eq!(pools[1].len(), 1);
        let pools = generate_and_prune(4, 3, &opts).unwrap();
        assert_eq!(pools[0].len(), 1);
        // some depth-3 symmetric prefix sorts 4 channels
        assert!(pools[3].entries().iter().any(|e| verify_sorting(&e.net).unwrap().sorts()));
    }

    #[test]
    fn pools_are_canonical_and_pruned() {
        let opts = SearchOptions::default();
        let pools = generate_and_prune(8, 2, &opts).unwrap();
        for pool in &pools {
            let e = pool.entries();
            for w in e.windows(2) {
                assert!((w[0].out_size(), &w[0].net) < (w[1].out_size(), &w[1].net));
            }
            for a in e {
                assert!(is_reflection_symmetric(&a.net));
                assert_eq!(output_set(&a.net).unwrap(), a.out);
                for b in e {
                    if a != b {
                        assert!(exact_match(&a.out, &b.out, Group::ReflectionCentralizer).is_none());
                    }
                }
            }
        }
    }

    #[test]
    fn pool_text_round_trip() {
        let opts = SearchOptions::default();
        let pools = generate_and_prune(6, 2, &opts).unwrap();
        let text = pools[2].to_text();
        assert_eq!(PrefixPool::from_text(&text).unwrap(), pools[2]);
        let tampered = text.replacen("out_size=", "out_size=9", 1);
        assert!(PrefixPool::from_text(&tampered).is_err());
    }

    #[test]
    fn select_best_bounds() {
        let opts = SearchOptions::default();
        let pool = generate_and_prune(6, 2, &opts).unwrap().pop().unwrap();
        assert_eq!(select_best(&pool, pool.len()).unwrap(), pool);
        assert!(select_best(&pool, 0).unwrap().is_empty());
        assert!(matches!(select_best(&pool, pool.len() + 1), Err(SearchError::NotEnough { .. })));
    }

    #[test]
    fn greedy_min_size_never_grows() {
        let opts = SearchOptions::default();
        let pool = generate_and_prune(8, 1, &opts).unwrap().pop().unwrap();
        let mut mins = vec![pool.min_out_size().unwrap()];
        let out = greedy_extend_with(&pool, 4, 10, &opts, |p, _| mins.push(p.min_out_size().unwrap())).unwrap();
        assert!(out.len() <= 4);
        assert!(mins.windows(2).all(|w| w[1] <= w[0]));
        for e in out.entries() {
            assert!(is_reflection_symmetric(&e.net));
            assert_eq!(e.net.layers().len(), 2);
            assert_eq!(output_set(&e.net).unwrap(), e.out);
        }
    }
}
