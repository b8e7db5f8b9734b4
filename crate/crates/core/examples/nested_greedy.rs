//! Nesting and greedy layer growth on a small scale.
//!
//! Two-layer prefixes on 8 channels are nested around the two-layer pool
//! on 4 channels, and the resulting 12-channel pool grows a third layer one
//! mirrored comparator pair at a time. The same steps with the Van Voorhis
//! 16-channel prefix and 12-channel pool give the 28-channel start.
//!
//! `cargo run --release --example nested_greedy`

use sortnet::netcore::is_reflection_symmetric;
use sortnet::search::{
    build_initial_pool, exact_output_set, generate_and_prune, greedy_extend_with, select_best, van_voorhis_16_prefix,
    SearchOptions,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = SearchOptions::default();

    let vv = van_voorhis_16_prefix();
    println!("Van Voorhis prefix: {} vectors after 5 layers", exact_output_set(&vv)?.len());

    let outer = generate_and_prune(8, 2, &opts)?.pop().unwrap();
    let inner = generate_and_prune(4, 2, &opts)?.pop().unwrap();
    let best_outer = select_best(&outer, 2)?;
    let nested = build_initial_pool(best_outer.entries(), &inner, &opts)?;
    println!(
        "nested {} x {} prefixes on {} channels, output sizes {:?}",
        best_outer.len(),
        inner.len(),
        nested.n(),
        nested.out_sizes()
    );

    let grown = greedy_extend_with(&nested, 16, 6, &opts, |_, stats| println!("  {stats}"))?;
    let best = &grown.entries()[0];
    println!("best after greedy growth ({} vectors):", best.out_size());
    println!("  {}", best.net.to_single_line());
    assert!(is_reflection_symmetric(&best.net));
    Ok(())
}
