//! The pipeline's TOML configuration: defaults, overrides, and the encoder
//! options they select. Pass a file to check it.
//!
//! `cargo run --example pipeline_config -- [config.toml]`

use sortnet::cli::config::PipelineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => PipelineConfig::load(path.as_ref())?,
        None => PipelineConfig::from_toml("seed = 3\nsolver_timeout_secs = 3600\n")?,
    };
    print!("{}", cfg.to_toml());
    println!("# encoder: {:?}", cfg.encoder());
    println!("# solver processes: {}", cfg.threads());
    Ok(())
}
