//! The staged 28-channel run: 12-channel enumeration, nesting inside the
//! 16-channel prefix, greedy sixth layer, SAT completion, verification.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::config::PipelineConfig;
use crate::eval::verify_sorting;
use crate::netcore::{format_network, is_reflection_symmetric, parse_network, project_drop_last_channel, Network};
use crate::satcomp::{solve_batch_with, BatchResult, CompleteOptions, SolverCommand, SolverStatus};
use crate::search::{
    build_initial_pool_28, exact_output_set, generate_and_prune_with, greedy_extend_with, select_best, PrefixPool,
    SearchMode, SearchOptions,
};

#[derive(Debug, Error)]
#[error("stage `{stage}` failed: {msg}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub msg: String,
    /// A broken internal invariant rather than bad input.
    pub internal: bool,
}

fn fail(stage: &'static str) -> impl Fn(String) -> PipelineError {
    move |msg| PipelineError {
        stage,
        msg,
        internal: false,
    }
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    /// 12-channel pool sizes for depths 0..=5.
    pub twelve_counts: Vec<usize>,
    pub results: Vec<BatchResult>,
    /// Verified 28-channel networks written, with their 27-channel projections.
    pub networks: Vec<(PathBuf, PathBuf)>,
    pub elapsed: Duration,
}

struct StageLog {
    file: fs::File,
    start: Instant,
    echo: bool,
}

impl StageLog {
    fn line(&mut self, stage: &str, msg: impl AsRef<str>) {
        let text = format!("[{:>8.1}s] {stage}: {}", self.start.elapsed().as_secs_f64(), msg.as_ref());
        let _ = writeln!(self.file, "{text}");
        let _ = self.file.flush();
        if self.echo {
            println!("{text}");
        }
    }
}

/// Cache file for the 12-channel pool; the name holds everything that can
/// change it.
pub fn cache_path(cfg: &PipelineConfig) -> PathBuf {
    cfg.output_dir.join("cache").join(format!(
        "pool-n12-d5-symmetric-r{}-s{}-v{}.txt",
        cfg.heuristic_restarts,
        cfg.seed,
        env!("CARGO_PKG_VERSION")
    ))
}

fn read_counts(path: &Path) -> Option<Vec<usize>> {
    let text = fs::read_to_string(path).ok()?;
    text.trim().split(',').map(|s| s.trim().parse().ok()).collect()
}

fn twelve_channel_pool(cfg: &PipelineConfig, log: &mut StageLog) -> Result<(PrefixPool, Vec<usize>), PipelineError> {
    let err = fail("enumerate");
    let opts = SearchOptions {
        mode: SearchMode::Symmetric,
        restarts: cfg.heuristic_restarts,
        seed: cfg.seed,
    };
    if let Some(path) = &cfg.twelve_pool {
        let pool = PrefixPool::load(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
        log.line("enumerate", format!("loaded {} ({} entries)", path.display(), pool.len()));
        return Ok((pool, Vec::new()));
    }
    let cache = cache_path(cfg);
    let counts_path = cache.with_extension("counts");
    if cache.is_file() {
        if let Ok(pool) = PrefixPool::load(&cache) {
            let counts = read_counts(&counts_path).unwrap_or_default();
            log.line("enumerate", format!("cache hit {} counts={counts:?}", cache.display()));
            return Ok((pool, counts));
        }
        log.line("enumerate", "cache unreadable, recomputing");
    }
    let pools = generate_and_prune_with(12, 5, &opts, |_, stats| log.line("enumerate", stats.to_string()))
        .map_err(|e| err(e.to_string()))?;
    store_twelve_cache(cfg, &pools).map_err(err)?;
    let counts: Vec<usize> = pools.iter().map(PrefixPool::len).collect();
    Ok((pools.into_iter().last().expect("depth 5 pool"), counts))
}

/// Saves a finished 12-channel enumeration (pools for depths 0..=5) where
/// [`run_pipeline`] looks for it.
pub fn store_twelve_cache(cfg: &PipelineConfig, pools: &[PrefixPool]) -> Result<(), String> {
    let pool = match pools.last() {
        Some(p) if p.n() == 12 && p.depth() == 5 && p.mode() == SearchMode::Symmetric && p.seed() == cfg.seed => p,
        _ => return Err("expected the symmetric 12-channel pools up to depth 5".into()),
    };
    let cache = cache_path(cfg);
    if let Some(dir) = cache.parent() {
        fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    }
    pool.save(&cache).map_err(|e| e.to_string())?;
    let counts: Vec<String> = pools.iter().map(|p| p.len().to_string()).collect();
    fs::write(cache.with_extension("counts"), counts.join(",")).map_err(|e| e.to_string())
}

fn network_file(net: &Network, cfg: &PipelineConfig, entry: usize) -> String {
    let mut text = format!(
        "# sortnet n={} depth={} size={} seed={} entry={entry}\n",
        net.n(),
        net.depth(),
        net.size(),
        cfg.seed
    );
    if net.n() == 28 {
        text.push_str("# region 16+12 prefix 1-5\n# region greedy 6-6\n");
        text.push_str(&format!("# region SAT 7-{}\n", net.layers().len()));
    }
    text.push_str(&format_network(net));
    text
}

/// Runs every stage, writing artifacts under `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig, echo: bool) -> Result<PipelineReport, PipelineError> {
    let start = Instant::now();
    cfg.validate().map_err(fail("config"))?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| fail("config")(e.to_string()))?;
    let mut log = StageLog {
        file: fs::File::create(cfg.output_dir.join("stages.log")).map_err(|e| fail("config")(e.to_string()))?,
        start,
        echo,
    };
    log.line("config", format!("seed={} total_depth={} threads={}", cfg.seed, cfg.total_depth, cfg.threads()));
    let solver = match &cfg.solver_command {
        Some(t) => SolverCommand::from_template(t),
        None => SolverCommand::detect(),
    }
    .map_err(|e| fail("config")(e.to_string()))?;
    log.line("config", format!("solver `{}`", solver.template()));

    let (twelve, counts) = twelve_channel_pool(cfg, &mut log)?;
    log.line("enumerate", format!("12-channel pool sizes by depth: {counts:?}"));
    let best12 = select_best(&twelve, cfg.best_k_12ch).map_err(|e| fail("select")(e.to_string()))?;
    log.line("select", format!("best 12-channel output sizes {:?}", best12.out_sizes()));

    let opts = SearchOptions {
        mode: SearchMode::Symmetric,
        restarts: cfg.heuristic_restarts,
        seed: cfg.seed,
    };
    let mut sixteen = Vec::new();
    for path in &cfg.sixteen_variants {
        let text = fs::read_to_string(path).map_err(|e| fail("stack")(format!("{}: {e}", path.display())))?;
        sixteen.push(parse_network(&text, Some(16)).map_err(|e| fail("stack")(format!("{}: {e}", path.display())))?);
    }
    let initial = build_initial_pool_28(&best12, &sixteen, &opts).map_err(|e| fail("stack")(e.to_string()))?;
    log.line(
        "stack",
        format!("{} nested 28-channel prefixes, output sizes {:?}", initial.len(), initial.out_sizes()),
    );

    let extended = greedy_extend_with(&initial, cfg.pool_cap, cfg.max_steps, &opts, |_, stats| {
        log.line("greedy", stats.to_string())
    })
    .map_err(|e| fail("greedy")(e.to_string()))?;
    extended
        .save(cfg.output_dir.join("pool28-d6.txt"))
        .map_err(|e| fail("greedy")(e.to_string()))?;
    let n = extended.len();
    for k in [0, n / 2, n.saturating_sub(1)] {
        let Some(e) = extended.entries().get(k) else { continue };
        let fresh = exact_output_set(&e.net).map_err(|e| fail("greedy")(e.to_string()))?;
        if fresh != e.out || !is_reflection_symmetric(&e.net) {
            return Err(PipelineError {
                stage: "greedy",
                msg: format!("entry {k} failed its recomputation check"),
                internal: true,
            });
        }
    }
    log.line("greedy", format!("{} prefixes, output sizes {:?}", n, extended.out_sizes()));

    let chosen = select_best(&extended, cfg.best_k_sat.min(extended.len())).map_err(|e| fail("sat")(e.to_string()))?;
    let mut copts = CompleteOptions::new(solver);
    copts.symmetric = cfg.symmetric;
    copts.encoder = cfg.encoder();
    copts.timeout = cfg.solver_timeout_secs.map(Duration::from_secs);
    copts.work_dir = Some(cfg.output_dir.join("cnf"));
    let mut attempts = vec![copts.clone()];
    if copts.encoder.last_layer_adjacent {
        let mut relaxed = copts.clone();
        relaxed.encoder.last_layer_adjacent = false;
        attempts.push(relaxed);
    }
    if copts.symmetric {
        let mut relaxed = attempts.last().unwrap().clone();
        relaxed.symmetric = false;
        attempts.push(relaxed);
    }
    let results_path = cfg.output_dir.join("results.jsonl");
    let results_file = std::sync::Mutex::new(fs::File::create(&results_path).map_err(|e| fail("sat")(e.to_string()))?);
    let mut results = Vec::new();
    for (round, attempt) in attempts.iter().enumerate() {
        log.line(
            "sat",
            format!(
                "round {} on {} prefixes: symmetric={} {:?}",
                round + 1,
                chosen.len(),
                attempt.symmetric,
                attempt.encoder
            ),
        );
        let echo_log = std::sync::Mutex::new(&mut log);
        results = solve_batch_with(
            chosen.entries(),
            cfg.total_depth,
            attempt,
            cfg.threads(),
            cfg.stop_on_first,
            |r| {
                let _ = writeln!(results_file.lock().unwrap(), "{}", r.to_json_line());
                let msg = format!(
                    "entry {} {} in {:.1}s{}",
                    r.entry,
                    r.status,
                    r.seconds,
                    r.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
                );
                echo_log.lock().unwrap().line("sat", msg);
            },
        );
        if let Some(e) = results.iter().find_map(|r| r.error.as_ref().filter(|e| e.contains("encoder bug"))) {
            return Err(PipelineError {
                stage: "sat",
                msg: e.clone(),
                internal: true,
            });
        }
        let found = results.iter().any(|r| r.network.is_some());
        let all_unsat = results.iter().all(|r| r.status == SolverStatus::Unsat);
        if found || !all_unsat {
            break;
        }
    }

    let mut networks = Vec::new();
    for r in &results {
        let Some(net) = &r.network else { continue };
        let verdict = verify_sorting(net).map_err(|e| fail("verify")(e.to_string()))?;
        if !verdict.sorts() {
            return Err(PipelineError {
                stage: "verify",
                msg: format!("entry {} does not sort", r.entry),
                internal: true,
            });
        }
        let path = cfg.output_dir.join(format!("n28-d{}-entry{}.txt", net.layers().len(), r.entry));
        fs::write(&path, network_file(net, cfg, r.entry)).map_err(|e| fail("verify")(e.to_string()))?;
        let projected = project_drop_last_channel(net).map_err(|e| fail("project")(e.to_string()))?;
        if !verify_sorting(&projected).map_err(|e| fail("project")(e.to_string()))?.sorts() {
            return Err(PipelineError {
                stage: "project",
                msg: format!("projection of entry {} does not sort", r.entry),
                internal: true,
            });
        }
        let ppath = cfg.output_dir.join(format!("n27-d{}-entry{}.txt", projected.layers().len(), r.entry));
        fs::write(&ppath, network_file(&projected, cfg, r.entry)).map_err(|e| fail("project")(e.to_string()))?;
        log.line(
            "verify",
            format!(
                "{} sorts: depth {} size {} symmetric={}",
                path.display(),
                net.depth(),
                net.size(),
                is_reflection_symmetric(net)
            ),
        );
        networks.push((path, ppath));
    }
    log.line("done", format!("{} verified networks", networks.len()));
    Ok(PipelineReport {
        twelve_counts: counts,
        results,
        networks,
        elapsed: start.elapsed(),
    })
}
