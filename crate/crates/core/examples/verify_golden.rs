//! Exhaustive zero-one check of the bundled 28-channel, 13-layer network,
//! then of its 27-channel projection.
//!
//! `cargo run --release --example verify_golden`

use std::time::Instant;

use sortnet::eval::verify_sorting;
use sortnet::netcore::{is_reflection_symmetric, parse_network, project_drop_last_channel};

const GOLDEN: &str = include_str!("../fixtures/n28d13.txt");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_network(GOLDEN, Some(28))?;
    println!(
        "n={} depth={} size={} symmetric={}",
        net.n(),
        net.depth(),
        net.size(),
        is_reflection_symmetric(&net)
    );

    let t = Instant::now();
    let verdict = verify_sorting(&net)?;
    println!("2^28 inputs: {verdict:?} in {:.1}s", t.elapsed().as_secs_f64());

    let cut = net.truncated(net.depth() - 1);
    println!("without the last layer: {:?}", verify_sorting(&cut)?);

    let p = project_drop_last_channel(&net)?;
    let t = Instant::now();
    let verdict = verify_sorting(&p)?;
    println!(
        "27-channel projection (depth {}, size {}): {verdict:?} in {:.1}s",
        p.depth(),
        p.size(),
        t.elapsed().as_secs_f64()
    );
    Ok(())
}
