//! Comparator networks: the data model, the line-per-layer text format and
//! the structural transforms (reflection, composition, stacking, channel
//! relabeling and projection).

use std::fmt;

use thiserror::Error;

/// Errors raised while building or parsing networks.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: degenerate comparator ({a},{b})")]
    Degenerate { line: usize, a: usize, b: usize },
    #[error("line {line}: channel {channel} used twice in one layer")]
    DuplicateChannel { line: usize, channel: usize },
    #[error("line {line}: channel {channel} out of range for n={n}")]
    OutOfRange { line: usize, channel: usize, n: usize },
    #[error("channel count mismatch: {0} vs {1}")]
    ChannelMismatch(usize, usize),
    #[error("not a permutation of [{0}]")]
    NotBijective(usize),
    #[error("network needs at least {0} channels")]
    TooFewChannels(usize),
}

/// A standard min-max comparator: the minimum leaves on `lo`, the maximum on `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Comparator {
    lo: usize,
    hi: usize,
}

impl Comparator {
    /// Builds a comparator on two distinct channels in either order.
    pub fn new(a: usize, b: usize) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Comparator { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Some(Comparator { lo: b, hi: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    /// Image under the reflection `i -> n-1-i`.
    pub fn reflect(&self, n: usize) -> Comparator {
        Comparator {
            lo: n - 1 - self.hi,
            hi: n - 1 - self.lo,
        }
    }

    pub fn is_self_symmetric(&self, n: usize) -> bool {
        self.reflect(n) == *self
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.lo, self.hi)
    }
}

/// A set of comparators on pairwise disjoint channels, kept sorted by `lo`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Layer {
    comparators: Vec<Comparator>,
}

impl Layer {
    pub fn empty() -> Self {
        Layer::default()
    }

    /// Builds a layer, rejecting any channel that is used twice.
    pub fn new(comparators: impl IntoIterator<Item = Comparator>) -> Result<Self, NetError> {
        let mut comparators: Vec<Comparator> = comparators.into_iter().collect();
        comparators.sort();
        let mut seen = 0u128;
        let mut seen_big = std::collections::BTreeSet::new();
        for c in &comparators {
            for ch in [c.lo, c.hi] {
                let dup = if ch < 128 {
                    let bit = 1u128 << ch;
                    let dup = seen & bit != 0;
                    seen |= bit;
                    dup
                } else {
                    !seen_big.insert(ch)
                };
                if dup {
                    return Err(NetError::DuplicateChannel { line: 0, channel: ch });
                }
            }
        }
        Ok(Layer { comparators })
    }

    /// Builds a layer from `(a, b)` pairs; panics on invalid input. Meant for
    /// literals in tests and examples.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Self {
        Layer::new(
            pairs
                .iter()
                .map(|&(a, b)| Comparator::new(a, b).expect("degenerate comparator")),
        )
        .expect("invalid layer")
    }

    pub fn comparators(&self) -> &[Comparator] {
        &self.comparators
    }

    pub fn len(&self) -> usize {
        self.comparators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comparators.is_empty()
    }

    /// Bit mask of the channels touched by this layer (channels < 64 only).
    pub fn used_mask(&self) -> u64 {
        self.comparators
            .iter()
            .fold(0u64, |m, c| m | (1u64 << c.lo) | (1u64 << c.hi))
    }

    pub fn uses(&self, channel: usize) -> bool {
        self.comparators
            .iter()
            .any(|c| c.lo == channel || c.hi == channel)
    }

    pub fn reflect(&self, n: usize) -> Layer {
        let mut comparators: Vec<Comparator> =
            self.comparators.iter().map(|c| c.reflect(n)).collect();
        comparators.sort();
        Layer { comparators }
    }

    /// Returns a copy with `extra` added; fails if a channel collides.
    pub fn with(&self, extra: &[Comparator]) -> Result<Layer, NetError> {
        Layer::new(self.comparators.iter().chain(extra).copied())
    }

    fn max_channel(&self) -> Option<usize> {
        self.comparators.iter().map(|c| c.hi).max()
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (k, c) in self.comparators.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("]")
    }
}

/// A comparator network on `n` channels: an ordered sequence of layers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Network {
    n: usize,
    layers: Vec<Layer>,
}

impl Network {
    pub fn empty(n: usize) -> Self {
        Network { n, layers: Vec::new() }
    }

    pub fn new(n: usize, layers: Vec<Layer>) -> Result<Self, NetError> {
        for (k, layer) in layers.iter().enumerate() {
            if let Some(max) = layer.max_channel() {
                if max >= n {
                    return Err(NetError::OutOfRange {
                        line: k + 1,
                        channel: max,
                        n,
                    });
                }
            }
        }
        Ok(Network { n, layers })
    }

    /// Literal constructor for tests and examples; panics on invalid input.
    pub fn from_pairs(n: usize, layers: &[&[(usize, usize)]]) -> Self {
        Network::new(n, layers.iter().map(|l| Layer::from_pairs(l)).collect())
            .expect("invalid network")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Number of non-empty layers.
    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| !l.is_empty()).count()
    }

    /// Total comparator count.
    pub fn size(&self) -> usize {
        self.layers.iter().map(Layer::len).sum()
    }

    pub fn comparators(&self) -> impl Iterator<Item = &Comparator> {
        self.layers.iter().flat_map(|l| l.comparators.iter())
    }

    pub fn push_layer(&mut self, layer: Layer) -> Result<(), NetError> {
        if let Some(max) = layer.max_channel() {
            if max >= self.n {
                return Err(NetError::OutOfRange {
                    line: self.layers.len() + 1,
                    channel: max,
                    n: self.n,
                });
            }
        }
        self.layers.push(layer);
        Ok(())
    }

    /// Copy with empty layers removed.
    pub fn without_empty_layers(&self) -> Network {
        Network {
            n: self.n,
            layers: self.layers.iter().filter(|l| !l.is_empty()).cloned().collect(),
        }
    }

    /// Copy truncated to its first `depth` layers.
    pub fn truncated(&self, depth: usize) -> Network {
        Network {
            n: self.n,
            layers: self.layers.iter().take(depth).cloned().collect(),
        }
    }

    /// Replaces the last layer; used when extending a prefix comparator by
    /// comparator.
    pub(crate) fn replace_last_layer(&mut self, layer: Layer) {
        if let Some(last) = self.layers.last_mut() {
            *last = layer;
        } else {
            self.layers.push(layer);
        }
    }

    /// Single-line form used in pool files: layers joined with `;`.
    pub fn to_single_line(&self) -> String {
        self.layers
            .iter()
            .map(Layer::to_string)
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn from_single_line(line: &str, n: usize) -> Result<Network, NetError> {
        let text = line.split(';').collect::<Vec<_>>().join("\n");
        parse_network(&text, Some(n))
    }
}

impl fmt::Display for Network {
    /// The bare listing, one bracketed layer per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for layer in &self.layers {
            writeln!(f, "{layer}")?;
        }
        Ok(())
    }
}

/// A bijection on `[n]`. `map[i]` is the image of channel `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChannelPermutation {
    map: Vec<usize>,
}

impl ChannelPermutation {
    pub fn new(map: Vec<usize>) -> Result<Self, NetError> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &m in &map {
            if m >= n || seen[m] {
                return Err(NetError::NotBijective(n));
            }
            seen[m] = true;
        }
        Ok(ChannelPermutation { map })
    }

    pub fn identity(n: usize) -> Self {
        ChannelPermutation { map: (0..n).collect() }
    }

    pub fn reflection(n: usize) -> Self {
        ChannelPermutation {
            map: (0..n).rev().collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.map.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &m) in self.map.iter().enumerate() {
            inv[m] = i;
        }
        ChannelPermutation { map: inv }
    }

    /// `self.then(other)` maps `i` to `other(self(i))`.
    pub fn then(&self, other: &ChannelPermutation) -> Self {
        ChannelPermutation {
            map: self.map.iter().map(|&m| other.map[m]).collect(),
        }
    }

    /// Relabels the bits of a Boolean vector: bit `i` moves to bit `map[i]`.
    pub fn apply_word(&self, x: u32) -> u32 {
        let mut y = 0u32;
        for (i, &m) in self.map.iter().enumerate() {
            y |= ((x >> i) & 1) << m;
        }
        y
    }

    /// Cycle notation, e.g. `(0 3)(1 2)`; the identity prints as `()`.
    pub fn cycle_notation(&self) -> String {
        let mut out = String::new();
        let mut done = vec![false; self.map.len()];
        for start in 0..self.map.len() {
            if done[start] || self.map[start] == start {
                done[start] = true;
                continue;
            }
            let mut cycle = vec![start];
            done[start] = true;
            let mut cur = self.map[start];
            while cur != start {
                done[cur] = true;
                cycle.push(cur);
                cur = self.map[cur];
            }
            out.push('(');
            out.push_str(
                &cycle
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            out.push(')');
        }
        if out.is_empty() {
            out.push_str("()");
        }
        out
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> NetError {
    NetError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_layer_line(text: &str, line: usize) -> Result<Vec<(usize, usize)>, NetError> {
    let body = text
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| parse_err(line, "layer must be enclosed in [ ]"))?;
    let body: String = body.chars().filter(|c| !c.is_whitespace()).collect();
    let mut pairs = Vec::new();
    let mut rest = body.as_str();
    while !rest.is_empty() {
        let inner_end = rest
            .find(')')
            .ok_or_else(|| parse_err(line, "unterminated pair"))?;
        let pair = rest[..inner_end]
            .strip_prefix('(')
            .ok_or_else(|| parse_err(line, format!("malformed pair near {rest:?}")))?;
        let (a, b) = pair
            .split_once(',')
            .ok_or_else(|| parse_err(line, format!("malformed pair ({pair})")))?;
        let a: usize = a
            .parse()
            .map_err(|_| parse_err(line, format!("bad channel index {a:?}")))?;
        let b: usize = b
            .parse()
            .map_err(|_| parse_err(line, format!("bad channel index {b:?}")))?;
        pairs.push((a, b));
        rest = &rest[inner_end + 1..];
        if let Some(r) = rest.strip_prefix(',') {
            if r.is_empty() {
                return Err(parse_err(line, "trailing comma"));
            }
            rest = r;
        } else if !rest.is_empty() {
            return Err(parse_err(line, format!("expected ',' near {rest:?}")));
        }
    }
    Ok(pairs)
}

/// Parses the line-per-layer listing. An optional `n=<int>` header fixes the
/// channel count; otherwise `n` is taken from the argument or inferred as
/// `max index + 1`. Blank lines and `#` lines are skipped.
pub fn parse_network(text: &str, n: Option<usize>) -> Result<Network, NetError> {
    let mut header_n = None;
    let mut raw_layers: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if let Some(v) = t.strip_prefix("n=") {
            if !raw_layers.is_empty() || header_n.is_some() {
                return Err(parse_err(line, "n= header must come first"));
            }
            header_n = Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| parse_err(line, format!("bad channel count {v:?}")))?,
            );
            continue;
        }
        raw_layers.push((line, parse_layer_line(t, line)?));
    }
    if let (Some(h), Some(a)) = (header_n, n) {
        if h != a {
            return Err(NetError::ChannelMismatch(h, a));
        }
    }
    let n = header_n.or(n).unwrap_or_else(|| {
        raw_layers
            .iter()
            .flat_map(|(_, ps)| ps.iter().map(|&(a, b)| a.max(b) + 1))
            .max()
            .unwrap_or(0)
    });
    let mut layers = Vec::with_capacity(raw_layers.len());
    for (line, pairs) in raw_layers {
        let mut comps = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            for ch in [a, b] {
                if ch >= n {
                    return Err(NetError::OutOfRange { line, channel: ch, n });
                }
            }
            comps.push(Comparator::new(a, b).ok_or(NetError::Degenerate { line, a, b })?);
        }
        let layer = Layer::new(comps).map_err(|e| match e {
            NetError::DuplicateChannel { channel, .. } => {
                NetError::DuplicateChannel { line, channel }
            }
            other => other,
        })?;
        layers.push(layer);
    }
    Ok(Network { n, layers })
}

/// File form: `n=<n>` header followed by the listing.
pub fn format_network(net: &Network) -> String {
    format!("n={}\n{}", net.n, net)
}

pub fn reflect(net: &Network) -> Network {
    Network {
        n: net.n,
        layers: net.layers.iter().map(|l| l.reflect(net.n)).collect(),
    }
}

pub fn is_reflection_symmetric(net: &Network) -> bool {
    net.layers.iter().all(|l| l.reflect(net.n) == *l)
}

/// `a` followed by `b`.
pub fn compose(a: &Network, b: &Network) -> Result<Network, NetError> {
    if a.n != b.n {
        return Err(NetError::ChannelMismatch(a.n, b.n));
    }
    let mut layers = a.layers.clone();
    layers.extend(b.layers.iter().cloned());
    Ok(Network { n: a.n, layers })
}

/// Places `bottom` below `top` (its channels offset by `top.n`) and merges
/// layer by layer. The shorter network is padded with empty layers.
pub fn stack(top: &Network, bottom: &Network) -> Network {
    let len = top.layers.len().max(bottom.layers.len());
    let mut layers = Vec::with_capacity(len);
    for t in 0..len {
        let mut comps: Vec<Comparator> = top
            .layers
            .get(t)
            .map(|l| l.comparators.clone())
            .unwrap_or_default();
        if let Some(l) = bottom.layers.get(t) {
            comps.extend(l.comparators.iter().map(|c| Comparator {
                lo: c.lo + top.n,
                hi: c.hi + top.n,
            }));
        }
        comps.sort();
        layers.push(Layer { comparators: comps });
    }
    Network {
        n: top.n + bottom.n,
        layers,
    }
}

/// Relabels channels by `sigma` and re-standardizes every comparator.
pub fn permute_channels(net: &Network, sigma: &ChannelPermutation) -> Result<Network, NetError> {
    if sigma.n() != net.n {
        return Err(NetError::ChannelMismatch(net.n, sigma.n()));
    }
    let layers = net
        .layers
        .iter()
        .map(|l| {
            let mut comps: Vec<Comparator> = l
                .comparators
                .iter()
                .map(|c| {
                    Comparator::new(sigma.apply(c.lo), sigma.apply(c.hi))
                        .expect("bijection keeps channels distinct")
                })
                .collect();
            comps.sort();
            Layer { comparators: comps }
        })
        .collect();
    Ok(Network { n: net.n, layers })
}

/// Drops channel `n-1` and every comparator touching it. Pinning that input to
/// the maximum value makes those comparators no-ops, so sorting is preserved.
pub fn project_drop_last_channel(net: &Network) -> Result<Network, NetError> {
    if net.n < 2 {
        return Err(NetError::TooFewChannels(2));
    }
    let last = net.n - 1;
    let layers = net
        .layers
        .iter()
        .map(|l| Layer {
            comparators: l
                .comparators
                .iter()
                .filter(|c| c.hi != last)
                .copied()
                .collect(),
        })
        .collect();
    Ok(Network { n: last, layers })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_single() {
        let net = parse_network("[(0,1)]", Some(2)).unwrap();
        assert_eq!(net.n(), 2);
        assert_eq!(net.depth(), 1);
        assert_eq!(net.size(), 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert_eq!(
            parse_network("[(0,0)]", None).unwrap_err(),
            NetError::Degenerate { line: 1, a: 0, b: 0 }
        );
        assert_eq!(
            parse_network("[(0,1)]\n[(0,1),(1,2)]", None).unwrap_err(),
            NetError::DuplicateChannel { line: 2, channel: 1 }
        );
        assert!(matches!(
            parse_network("[(0,1)]\n\n[(0,5)]", Some(4)).unwrap_err(),
            NetError::OutOfRange { line: 3, channel: 5, n: 4 }
        ));
        assert!(matches!(
            parse_network("[(0,1)(2,3)]", None).unwrap_err(),
            NetError::Parse { line: 1, .. }
        ));
        assert!(matches!(
            parse_network("(0,1)", None).unwrap_err(),
            NetError::Parse { line: 1, .. }
        ));
        assert!(matches!(
            parse_network("[(0,x)]", None).unwrap_err(),
            NetError::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn format_canonicalizes_order() {
        let net = parse_network("[ (2,3), (1,0) ]", None).unwrap();
        assert_eq!(format_network(&net), "n=4\n[(0,1),(2,3)]\n");
        let again = parse_network(&format_network(&net), None).unwrap();
        assert_eq!(again, net);
    }

    #[test]
    fn header_keeps_trailing_channels() {
        let net = parse_network("n=6\n[(0,1)]\n", None).unwrap();
        assert_eq!(net.n(), 6);
        assert_eq!(format_network(&net), "n=6\n[(0,1)]\n");
    }

    #[test]
    fn empty_layers_do_not_count_towards_depth() {
        let net = parse_network("n=4\n[]\n[(0,1)]\n[]\n", None).unwrap();
        assert_eq!(net.layers().len(), 3);
        assert_eq!(net.depth(), 1);
        assert_eq!(format_network(&net), "n=4\n[]\n[(0,1)]\n[]\n");
    }

    #[test]
    fn reflect_small() {
        let net = Network::from_pairs(4, &[&[(0, 1)]]);
        assert_eq!(reflect(&net), Network::from_pairs(4, &[&[(2, 3)]]));
        assert!(!is_reflection_symmetric(&net));
        let sym = Network::from_pairs(4, &[&[(0, 1), (2, 3)], &[(0, 2), (1, 3)], &[(1, 2)]]);
        assert!(is_reflection_symmetric(&sym));
    }

    #[test]
    fn compose_and_mismatch() {
        let a = Network::from_pairs(4, &[&[(0, 1)]]);
        assert_eq!(compose(&Network::empty(4), &a).unwrap(), a);
        assert_eq!(compose(&a, &a).unwrap().depth(), 2);
        assert_eq!(
            compose(&a, &Network::empty(3)).unwrap_err(),
            NetError::ChannelMismatch(4, 3)
        );
    }

    #[test]
    fn stack_offsets_bottom() {
        assert_eq!(stack(&Network::empty(2), &Network::empty(2)), Network::empty(4));
        let top = Network::from_pairs(2, &[&[(0, 1)]]);
        let bottom = Network::new(2, vec![Layer::empty()]).unwrap();
        let s = stack(&top, &bottom);
        assert_eq!(s, Network::from_pairs(4, &[&[(0, 1)]]));
        let s2 = stack(&bottom, &top);
        assert_eq!(s2, Network::from_pairs(4, &[&[(2, 3)]]));
    }

    #[test]
    fn permutation_basics() {
        let net = Network::from_pairs(4, &[&[(0, 1)], &[(1, 3)]]);
        assert_eq!(
            permute_channels(&net, &ChannelPermutation::identity(4)).unwrap(),
            net
        );
        assert_eq!(
            permute_channels(&net, &ChannelPermutation::reflection(4)).unwrap(),
            reflect(&net)
        );
        assert!(ChannelPermutation::new(vec![0, 0, 1]).is_err());
        let p = ChannelPermutation::new(vec![1, 2, 0]).unwrap();
        assert_eq!(p.then(&p.inverse()), ChannelPermutation::identity(3));
        assert_eq!(p.cycle_notation(), "(0 1 2)");
        assert_eq!(ChannelPermutation::identity(3).cycle_notation(), "()");
        assert_eq!(p.apply_word(0b001), 0b010);
    }

    #[test]
    fn projection() {
        let net = Network::from_pairs(2, &[&[(0, 1)]]);
        let p = project_drop_last_channel(&net).unwrap();
        assert_eq!(p.n(), 1);
        assert_eq!(p.size(), 0);
        assert!(project_drop_last_channel(&Network::empty(1)).is_err());
    }

    #[test]
    fn single_line_round_trip() {
        let net = Network::from_pairs(4, &[&[(0, 3), (1, 2)], &[(0, 1)]]);
        let line = net.to_single_line();
        assert_eq!(line, "[(0,3),(1,2)];[(0,1)]");
        assert_eq!(Network::from_single_line(&line, 4).unwrap(), net);
    }
}
