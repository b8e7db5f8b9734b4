//! Generate-and-prune over reflection-symmetric prefixes.
//!
//! `cargo run --release --example enumerate_prefixes -- [n] [depth] [pool-file]`
//!
//! Defaults to 12 channels, 3 layers. The full 12-channel, 5-layer run takes
//! a while on one core; the final pool can be saved for later stages.

use sortnet::search::{generate_and_prune_with, SearchOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(12), |s| s.parse())?;
    let depth: usize = args.get(1).map_or(Ok(3), |s| s.parse())?;

    let opts = SearchOptions::default();
    let pools = generate_and_prune_with(n, depth, &opts, |pool, stats| {
        let best: Vec<usize> = pool.out_sizes().into_iter().take(6).collect();
        println!("{stats}");
        println!("  smallest output sets: {best:?}");
    })?;

    let counts: Vec<usize> = pools.iter().map(|p| p.len()).collect();
    println!("pool sizes by depth: {counts:?}");
    if let Some(path) = args.get(2) {
        pools.last().unwrap().save(path)?;
        println!("saved {path}");
    }
    Ok(())
}
