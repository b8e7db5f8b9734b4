use std::time::Duration;

use sortnet::eval::{output_set, verify_sorting, OutputSet};
use sortnet::netcore::{is_reflection_symmetric, Network};
use sortnet::satcomp::*;
use sortnet::search::{generate_and_prune, PrefixEntry, SearchOptions};

fn solver() -> SolverCommand {
    SolverCommand::detect().expect("a SAT solver is needed for these tests")
}

fn solve_cnf(cnf: &CnfInstance) -> SolverResult {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.cnf");
    cnf.write_dimacs(&path).unwrap();
    run_solver(&path, &solver(), Some(Duration::from_secs(120)), None).unwrap()
}

fn option_grid() -> Vec<EncoderOptions> {
    let mut grid = Vec::new();
    for bits in 0..16u32 {
        grid.push(EncoderOptions {
            last_layer_adjacent: bits & 1 != 0,
            second_last_distance: 2,
            window: bits & 2 != 0,
            one_up_down: bits & 4 != 0,
            monotone: bits & 8 != 0,
        });
    }
    grid
}

#[test]
fn trivial_instances() {
    let sat = solve_cnf(&CnfInstance::from_clauses(1, &[vec![1]]));
    assert_eq!(sat.status, SolverStatus::Sat);
    assert!(sat.model.unwrap().value(1));
    let unsat = solve_cnf(&CnfInstance::from_clauses(1, &[vec![1], vec![-1]]));
    assert_eq!(unsat.status, SolverStatus::Unsat);
}

/// Optimal depths 3 (n=4) and 5 (n=6), with every option combination and
/// both symmetry modes.
#[test]
fn small_optimal_depths() {
    for (n, depth) in [(4, 3), (6, 5)] {
        for options in option_grid() {
            for symmetric in [false, true] {
                let problem = |d_r| CompletionProblem {
                    prefix_out: OutputSet::all(n),
                    d_r,
                    symmetric,
                    options,
                };
                let below = encode_completion(&problem(depth - 1));
                assert_eq!(solve_cnf(&below).status, SolverStatus::Unsat, "n={n} {options:?}");
                let at = encode_completion(&problem(depth));
                let res = solve_cnf(&at);
                assert_eq!(res.status, SolverStatus::Sat, "n={n} {options:?} sym={symmetric}");
                let net = at.decode(res.model.as_ref().unwrap()).unwrap();
                assert!(verify_sorting(&net).unwrap().sorts());
                if symmetric {
                    assert!(is_reflection_symmetric(&net));
                }
            }
        }
    }
}

#[test]
fn sorted_prefix_needs_nothing() {
    let cnf = encode_completion(&CompletionProblem::new(OutputSet::sorted_only(6), 1));
    assert_eq!(cnf.vector_count(), 0);
    let res = solve_cnf(&cnf);
    assert_eq!(res.status, SolverStatus::Sat);
    let sorter = Network::from_pairs(3, &[&[(0, 2)], &[(0, 1)], &[(1, 2)]]);
    let entry = PrefixEntry::new(sorter.clone()).unwrap();
    let done = complete_prefix(&entry, 4, &CompleteOptions::new(solver())).unwrap();
    assert_eq!(done.network.unwrap().without_empty_layers(), sorter);
}

#[test]
fn exhausted_depth_gives_nothing() {
    let entry = PrefixEntry::new(Network::from_pairs(4, &[&[(0, 1), (2, 3)]])).unwrap();
    let done = complete_prefix(&entry, 1, &CompleteOptions::new(solver())).unwrap();
    assert!(done.network.is_none());
}

#[test]
fn symmetric_six_channel_completion() {
    let pools = generate_and_prune(6, 2, &SearchOptions::default()).unwrap();
    let mut opts = CompleteOptions::new(solver());
    opts.symmetric = true;
    opts.encoder = EncoderOptions::all();
    let results = solve_batch(pools[2].entries(), 5, &opts, 2, false);
    assert_eq!(results.len(), pools[2].len());
    assert!(results.iter().any(|r| r.network.is_some()));
    for r in &results {
        if let Some(net) = &r.network {
            assert_eq!(net.n(), 6);
            assert!(net.depth() <= 5);
            assert!(verify_sorting(net).unwrap().sorts());
            assert!(is_reflection_symmetric(net));
            let line = r.to_json_line();
            assert!(line.contains("\"status\":\"sat\""), "{line}");
        }
    }
}

#[test]
fn batch_edge_cases() {
    let opts = CompleteOptions::new(solver());
    assert!(solve_batch(&[], 5, &opts, 4, true).is_empty());
    let entries: Vec<PrefixEntry> = (0..3)
        .map(|_| PrefixEntry::new(Network::empty(4)).unwrap())
        .collect();
    let results = solve_batch(&entries, 3, &opts, 1, true);
    assert_eq!(results.len(), 3);
    assert!(results[0].network.is_some());
    assert_eq!(output_set(results[0].network.as_ref().unwrap()).unwrap(), OutputSet::sorted_only(4));
}
