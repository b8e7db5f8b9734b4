//! Redundancy between two-layer prefixes on 8 channels.
//!
//! Every reflection-symmetric first layer is followed by every symmetric
//! second layer; the smallest output set is then compared against the rest
//! under the reflection centralizer, with both the heuristic and the
//! complete matcher.
//!
//! `cargo run --release --example subsumption`

use sortnet::eval::output_set;
use sortnet::netcore::{Layer, Network};
use sortnet::search::enumerate_symmetric_layers;
use sortnet::symmetry::{exact_match, heuristic_match, Group};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 8;
    let layers: Vec<Layer> = enumerate_symmetric_layers(n, 0);
    let mut prefixes = Vec::new();
    for a in &layers {
        for b in &layers {
            let net = Network::new(n, vec![a.clone(), b.clone()])?;
            let out = output_set(&net)?;
            prefixes.push((net, out));
        }
    }
    prefixes.sort_by_key(|(_, out)| out.len());
    let (best, best_out) = &prefixes[0];
    println!("{} two-layer prefixes; smallest output set has {} vectors:", prefixes.len(), best_out.len());
    println!("  {}", best.to_single_line());

    let group = Group::ReflectionCentralizer;
    let (mut exact, mut heuristic) = (0, 0);
    for (net, out) in &prefixes[1..] {
        let Some(w) = exact_match(best_out, out, group) else {
            continue;
        };
        assert!(w.validate(best_out, out));
        exact += 1;
        let h = heuristic_match(best_out, out, group, 10, 0)
            .or_else(|| heuristic_match(&best_out.complement(), out, group, 10, 0));
        heuristic += h.is_some() as usize;
        if exact <= 3 {
            println!("subsumes {} via {w}", net.to_single_line());
        }
    }
    println!("subsumed by the smallest: {exact} (heuristic found {heuristic})");
    Ok(())
}
