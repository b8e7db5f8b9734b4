use crate::netcore::{Comparator, Layer};

/// Every non-empty layer on the allowed channels that equals its own
/// reflection, maximal or not, each exactly once. `forbidden` is a channel
/// mask; it must itself be reflection-closed for the result to be complete.
pub fn enumerate_symmetric_layers(n: usize, forbidden: u64) -> Vec<Layer> {
    assert!(n.is_multiple_of(2), "symmetric layers need an even channel count");
    assert!(n <= 64);
    let mut out = Vec::new();
    let mut comps = Vec::new();
    recurse(n, forbidden, 0, &mut comps, &mut out);
    out
}

/// Only the layers that leave no two allowed channels idle.
pub fn enumerate_maximal_symmetric_layers(n: usize, forbidden: u64) -> Vec<Layer> {
    enumerate_symmetric_layers(n, forbidden)
        .into_iter()
        .filter(|l| {
            let free = (!(l.used_mask() | forbidden)) & mask(n);
            free.count_ones() < 2
        })
        .collect()
}

/// Every non-empty layer on the allowed channels, symmetric or not.
pub fn enumerate_layers(n: usize, forbidden: u64) -> Vec<Layer> {
    assert!(n <= 64);
    fn go(n: usize, used: u64, comps: &mut Vec<Comparator>, out: &mut Vec<Layer>) {
        let Some(a) = (0..n).find(|&a| used & (1 << a) == 0) else {
            if !comps.is_empty() {
                out.push(Layer::new(comps.iter().copied()).expect("disjoint by construction"));
            }
            return;
        };
        go(n, used | (1 << a), comps, out);
        for b in a + 1..n {
            if used & (1 << b) == 0 {
                comps.push(Comparator::new(a, b).unwrap());
                go(n, used | (1 << a) | (1 << b), comps, out);
                comps.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(n, forbidden & mask(n), &mut Vec::new(), &mut out);
    out
}

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn recurse(n: usize, used: u64, from: usize, comps: &mut Vec<Comparator>, out: &mut Vec<Layer>) {
    let half = n / 2;
    let Some(a) = (from..half).find(|&a| used & (1 << a) == 0) else {
        if !comps.is_empty() {
            out.push(Layer::new(comps.iter().copied()).expect("disjoint by construction"));
        }
        return;
    };
    let ra = n - 1 - a;
    // a (and its mirror) idle
    recurse(n, used | (1 << a) | (1 << ra), a + 1, comps, out);
    // self-symmetric comparator across the axis
    if used & (1 << ra) == 0 {
        comps.push(Comparator::new(a, ra).unwrap());
        recurse(n, used | (1 << a) | (1 << ra), a + 1, comps, out);
        comps.pop();
    }
    // a paired with some b, plus the mirror comparator
    for b in 0..n {
        if b == a || b == ra {
            continue;
        }
        let rb = n - 1 - b;
        let need = (1 << a) | (1 << ra) | (1 << b) | (1 << rb);
        if used & need != 0 {
            continue;
        }
        // b in the top half after a, or b in the bottom half
        if b < half && b < a {
            continue;
        }
        let c = Comparator::new(a, b).unwrap();
        comps.push(c);
        comps.push(c.reflect(n));
        recurse(n, used | need, a + 1, comps, out);
        comps.pop();
        comps.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force: every matching on `n` channels, filtered by invariance.
    fn brute(n: usize) -> Vec<Layer> {
        fn all_matchings(free: Vec<usize>, acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
            let Some((&a, rest)) = free.split_first() else {
                out.push(acc.clone());
                return;
            };
            all_matchings(rest.to_vec(), acc, out);
            for (k, &b) in rest.iter().enumerate() {
                let mut r = rest.to_vec();
                r.remove(k);
                acc.push((a, b));
                all_matchings(r, acc, out);
                acc.pop();
            }
        }
        let mut ms = Vec::new();
        all_matchings((0..n).collect(), &mut Vec::new(), &mut ms);
        let mut layers: Vec<Layer> = ms
            .into_iter()
            .filter(|m| !m.is_empty())
            .map(|m| Layer::from_pairs(&m))
            .filter(|l| l.reflect(n) == *l)
            .collect();
        layers.sort();
        layers
    }

    #[test]
    fn matches_brute_force() {
        for n in [2, 4, 6, 8, 10] {
            let mut got = enumerate_symmetric_layers(n, 0);
            got.sort();
            let len = got.len();
            got.dedup();
            assert_eq!(got.len(), len, "duplicates for n={n}");
            assert_eq!(got, brute(n), "n={n}");
        }
    }

    #[test]
    fn all_layers_are_the_matchings() {
        // non-empty matchings of K_n: telephone numbers minus one
        let counts: Vec<usize> = (1..=8).map(|n| enumerate_layers(n, 0).len()).collect();
        assert_eq!(counts, vec![0, 1, 3, 9, 25, 75, 231, 763]);
        let mut sym: Vec<Layer> = enumerate_layers(8, 0)
            .into_iter()
            .filter(|l| l.reflect(8) == *l)
            .collect();
        sym.sort();
        assert_eq!(sym, brute(8));
    }

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_symmetric_layers(2, 0), vec![Layer::from_pairs(&[(0, 1)])]);
        let four = enumerate_symmetric_layers(4, 0);
        assert_eq!(four.len(), 5);
        for l in &four {
            assert_eq!(l.reflect(4), *l);
        }
    }

    #[test]
    fn forbidden_channels_are_skipped() {
        let mut layers = enumerate_symmetric_layers(6, 0b100001);
        assert!(layers.iter().all(|l| !l.uses(0) && !l.uses(5)));
        let mut shifted = enumerate_symmetric_layers_shifted(4);
        layers.sort();
        shifted.sort();
        assert_eq!(layers, shifted);
    }

    fn enumerate_symmetric_layers_shifted(n: usize) -> Vec<Layer> {
        enumerate_symmetric_layers(n, 0)
            .into_iter()
            .map(|l| {
                Layer::new(
                    l.comparators()
                        .iter()
                        .map(|c| Comparator::new(c.lo() + 1, c.hi() + 1).unwrap()),
                )
                .unwrap()
            })
            .collect()
    }
}
