use proptest::prelude::*;

use sortnet::eval::{
    advance_output_set, apply_network_word, is_sorted_word, output_set, remove_unused_comparators, verify_sorting,
    verify_sorting_scalar, OutputSet,
};
use sortnet::netcore::{format_network, is_reflection_symmetric, parse_network, reflect, Comparator, Layer, Network};

/// A layer from a shuffled channel list: consecutive pairs, each kept or
/// dropped by its flag.
fn layer_from(n: usize, order: &[usize], keep: &[bool]) -> Layer {
    let comps = order
        .chunks_exact(2)
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(p, _)| Comparator::new(p[0].min(p[1]), p[0].max(p[1])).unwrap())
        .filter(|c| c.hi() < n);
    Layer::new(comps.collect::<Vec<_>>()).unwrap()
}

fn network(max_n: usize, max_depth: usize) -> impl Strategy<Value = Network> {
    (2..=max_n).prop_flat_map(move |n| {
        let layer = (Just((0..n).collect::<Vec<usize>>()).prop_shuffle(), prop::collection::vec(any::<bool>(), n / 2));
        prop::collection::vec(layer, 0..=max_depth).prop_map(move |layers| {
            let layers = layers.iter().map(|(o, k)| layer_from(n, o, k)).collect();
            Network::new(n, layers).unwrap()
        })
    })
}

fn complement_reflect(x: u32, n: usize) -> u32 {
    (0..n).fold(0, |y, i| y | ((((!x) >> i) & 1) << (n - 1 - i)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sliced_and_scalar_verification_agree(net in network(10, 8)) {
        prop_assert_eq!(verify_sorting(&net).unwrap(), verify_sorting_scalar(&net).unwrap());
    }

    #[test]
    fn sorting_x_sorts_its_reflected_complement(net in network(10, 8), seed in any::<u32>()) {
        let n = net.n();
        let x = seed & ((1 << n) - 1);
        if is_sorted_word(apply_network_word(&net, x), n) {
            let y = apply_network_word(&reflect(&net), complement_reflect(x, n));
            prop_assert!(is_sorted_word(y, n));
        }
    }

    #[test]
    fn layers_never_grow_the_output_set(net in network(12, 6)) {
        let mut s = OutputSet::all(net.n());
        for layer in net.layers() {
            let next = advance_output_set(&s, layer);
            prop_assert!(next.len() <= s.len());
            s = next;
        }
        prop_assert_eq!(s, output_set(&net).unwrap());
    }

    #[test]
    fn sorted_inputs_are_fixed(net in network(16, 6)) {
        let n = net.n();
        for ones in 0..=n {
            let x = if ones == 0 { 0 } else { (((1u64 << ones) - 1) << (n - ones)) as u32 };
            prop_assert_eq!(apply_network_word(&net, x), x);
        }
    }

    #[test]
    fn unused_comparator_removal_keeps_behavior(net in network(12, 8)) {
        let cleaned = remove_unused_comparators(&net).unwrap();
        prop_assert!(cleaned.size() <= net.size());
        for x in 0..1u32 << net.n() {
            prop_assert_eq!(apply_network_word(&net, x), apply_network_word(&cleaned, x));
        }
    }

    #[test]
    fn text_round_trip(net in network(20, 6)) {
        let back = parse_network(&format_network(&net), None).unwrap();
        prop_assert_eq!(back, net);
    }

    #[test]
    fn reflection_is_an_involution(net in network(20, 6)) {
        let r = reflect(&net);
        prop_assert_eq!(reflect(&r), net.clone());
        prop_assert_eq!(is_reflection_symmetric(&net), r == net);
    }
}
