//! Diagrams of the bundled 28-channel network, as text and SVG.
//!
//! `cargo run --release --example render_network -- [out.svg]`

use sortnet::cli::render::{parse_regions, render_ascii, render_svg};
use sortnet::netcore::parse_network;

const GOLDEN: &str = include_str!("../fixtures/n28d13.txt");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_network(GOLDEN, Some(28))?;
    let mut text = String::from("# region nested-prefix 1-5\n# region greedy 6-6\n# region SAT 7-13\n");
    text.push_str(GOLDEN);
    let regions = parse_regions(&text);
    print!("{}", render_ascii(&net, &regions));
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, render_svg(&net, &regions))?;
        println!("wrote {path}");
    }
    Ok(())
}
