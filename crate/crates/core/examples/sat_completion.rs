//! Optimal depth of small sorting networks with the completion encoder.
//!
//! For n = 4..=8 the empty prefix is completed to increasing depths until
//! the solver finds a network; the result is verified and printed. Needs a
//! DIMACS solver on `PATH` or in `SORTNET_SOLVER`.
//!
//! `cargo run --release --example sat_completion`

use sortnet::netcore::Network;
use sortnet::satcomp::{complete_prefix, CompleteOptions, EncoderOptions, SolverCommand, SolverStatus};
use sortnet::search::PrefixEntry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut opts = CompleteOptions::new(SolverCommand::detect()?);
    opts.encoder = EncoderOptions::all();
    opts.symmetric = true;
    println!("solver: {}", opts.solver.template());
    for n in (4..=8).step_by(2) {
        let empty = PrefixEntry::new(Network::empty(n))?;
        for depth in 1.. {
            let done = complete_prefix(&empty, depth, &opts)?;
            println!(
                "n={n} depth={depth}: {} ({} vars, {} clauses, {:.2}s)",
                done.status, done.vars, done.clauses, done.seconds
            );
            if done.status == SolverStatus::Sat {
                println!("  {}", done.network.unwrap().to_single_line());
                break;
            }
        }
    }
    Ok(())
}
