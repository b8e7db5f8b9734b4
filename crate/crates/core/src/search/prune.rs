//! Incremental subsumption pruning.
//!
//! Candidates are offered in canonical order (ascending output size, then
//! network order). A candidate is kept iff no previously kept entry subsumes
//! it. Subsumption is transitive and a subsumer is never larger than the set
//! it subsumes, so checking against kept entries alone yields the same pool
//! as checking against every other candidate, with ties resolved in favour
//! of the earlier entry.

use rayon::prelude::*;

use crate::symmetry::{MatchData, SubsumeStats, Subsumer};

/// Candidates processed per parallel block.
const BLOCK: usize = 256;

/// `a` can only subsume `b` if `key(a) <= key(b)` lane by lane, for the
/// plain or the complemented branch of `a`.
fn key_of(md: &MatchData, negated: bool) -> Vec<u32> {
    md.dominance_key(negated)
}

#[inline]
fn key_le(a: &[u32], b: &[u32]) -> bool {
    a.chunks(16)
        .zip(b.chunks(16))
        .all(|(x, y)| !x.iter().zip(y).fold(false, |acc, (p, q)| acc | (p > q)))
}

pub(crate) struct PruneEngine {
    subsumer: Subsumer,
    stride: usize,
    keys: Vec<u32>,
    neg_keys: Vec<u32>,
    has_neg: Vec<bool>,
    kept: Vec<MatchData>,
    pub(crate) stats: SubsumeStats,
}

impl PruneEngine {
    pub(crate) fn new(subsumer: Subsumer) -> Self {
        PruneEngine {
            subsumer,
            stride: 0,
            keys: Vec::new(),
            neg_keys: Vec::new(),
            has_neg: Vec::new(),
            kept: Vec::new(),
            stats: SubsumeStats::default(),
        }
    }

    fn push(&mut self, md: MatchData) {
        let key = key_of(&md, false);
        self.stride = key.len();
        self.keys.extend(key);
        let neg = !md.is_self_dual();
        self.has_neg.push(neg);
        if neg {
            self.neg_keys.extend(key_of(&md, true));
        } else {
            self.neg_keys.extend(std::iter::repeat_n(u32::MAX, self.stride));
        }
        self.kept.push(md);
    }

    /// Is `cand` subsumed by one of the kept entries `[from, upto)`? Newest
    /// entries are tried first: they are closest in size to the candidate.
    fn subsumed(
        &self,
        cand: &MatchData,
        cand_key: &[u32],
        from: usize,
        upto: usize,
        stats: &mut SubsumeStats,
    ) -> bool {
        let s = self.stride;
        for k in (from..upto).rev() {
            let plain = key_le(&self.keys[k * s..(k + 1) * s], cand_key);
            let neg = self.has_neg[k] && key_le(&self.neg_keys[k * s..(k + 1) * s], cand_key);
            if !plain && !neg {
                continue;
            }
            let (w, how) = self.subsumer.check(&self.kept[k], cand);
            stats.record(how, w.is_some());
            if w.is_some() {
                return true;
            }
        }
        false
    }

    /// Offers a block of candidates in canonical order; returns which were
    /// kept. Checks against entries kept before the block run in parallel.
    pub(crate) fn offer_block(&mut self, cands: Vec<MatchData>) -> Vec<bool> {
        let before = self.kept.len();
        let keys: Vec<Vec<u32>> = cands.iter().map(|c| key_of(c, false)).collect();
        let first: Vec<(bool, SubsumeStats)> = cands
            .par_iter()
            .zip(keys.par_iter())
            .map(|(c, key)| {
                let mut st = SubsumeStats::default();
                let hit = self.subsumed(c, key, 0, before, &mut st);
                (hit, st)
            })
            .collect();
        let mut result = Vec::with_capacity(cands.len());
        for ((cand, key), (hit, st)) in cands.into_iter().zip(keys).zip(first) {
            self.stats.merge(&st);
            if hit {
                result.push(false);
                continue;
            }
            // entries kept earlier in this block
            let mut st = SubsumeStats::default();
            let found = self.subsumed(&cand, &key, before, self.kept.len(), &mut st);
            self.stats.merge(&st);
            if !found {
                self.push(cand);
            }
            result.push(!found);
        }
        result
    }

    /// Offers candidates produced lazily in canonical order, stopping once
    /// `limit` entries are kept. Returns the indices of the kept candidates.
    pub(crate) fn run<F>(&mut self, count: usize, limit: Option<usize>, make: F) -> Vec<usize>
    where
        F: Fn(usize) -> MatchData + Sync,
    {
        let mut kept_idx = Vec::new();
        let mut start = 0;
        while start < count {
            if limit.is_some_and(|l| kept_idx.len() >= l) {
                break;
            }
            let end = (start + BLOCK).min(count);
            let block: Vec<MatchData> = (start..end).into_par_iter().map(&make).collect();
            let kept = self.offer_block(block);
            kept_idx.extend(
                kept.into_iter()
                    .enumerate()
                    .filter(|(_, k)| *k)
                    .map(|(i, _)| start + i),
            );
            if let Some(l) = limit {
                // the block may overshoot the cap; the last ones go again
                while kept_idx.len() > l {
                    kept_idx.pop();
                    self.pop();
                }
            }
            start = end;
        }
        kept_idx
    }

    fn pop(&mut self) {
        if self.kept.pop().is_some() {
            let s = self.stride;
            let len = self.keys.len() - s;
            self.keys.truncate(len);
            self.neg_keys.truncate(len);
            self.has_neg.pop();
        }
    }
}
