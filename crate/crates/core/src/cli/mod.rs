//! Command-line front end. Each subcommand wraps one stage so that a run can
//! be resumed or inspected from its files.
//!
//! Exit codes: 0 success, 1 negative result (counterexample, unsat),
//! 2 usage or format error, 3 internal invariant violation.

pub mod config;
pub mod pipeline;
pub mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::eval::{verify_sorting, Verdict};
use crate::netcore::{compose, format_network, parse_network, project_drop_last_channel, Network};
use crate::satcomp::{
    encode_completion, run_solver, solve_batch_with, CompleteOptions, CompletionProblem, EncoderOptions, GateMap,
    SolverCommand, SolverStatus,
};
use crate::search::{
    build_initial_pool_28, generate_and_prune_with, greedy_extend_with, select_best, PrefixEntry, PrefixPool,
    SearchMode, SearchOptions,
};
use config::PipelineConfig;

pub const EXIT_OK: u8 = 0;
pub const EXIT_NEGATIVE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            msg: msg.into(),
        }
    }

    fn internal(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INTERNAL,
            msg: msg.into(),
        }
    }
}

type CliResult = Result<u8, CliError>;

#[derive(Debug, Parser)]
#[command(name = "sortnet", version, about = "Depth-optimized sorting networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a network on all 2^n zero-one inputs.
    Verify { file: PathBuf },
    /// Generate-and-prune symmetric prefixes layer by layer.
    Enumerate {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Symmetric)]
        mode: ModeArg,
        #[command(flatten)]
        search: SearchArgs,
        /// Write the deepest pool here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedily fill one more layer. A 12-channel pool is first nested
    /// inside the 16-channel prefix(es).
    Extend {
        #[arg(long)]
        pool: PathBuf,
        /// Extra 16-channel prefix files.
        #[arg(long = "sixteen")]
        sixteen: Vec<PathBuf>,
        #[arg(long, default_value_t = 4)]
        best_k: usize,
        #[arg(long, default_value_t = 64)]
        cap: usize,
        #[arg(long, default_value_t = 14)]
        max_steps: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the completion problem of one prefix as DIMACS, with a
    /// `.map.json` sidecar for decoding.
    Encode {
        #[command(flatten)]
        prefix: PrefixArgs,
        #[arg(long, default_value_t = 13)]
        total_depth: usize,
        #[command(flatten)]
        enc: EncoderArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the solver on a DIMACS file; decode and verify if a sidecar exists.
    Solve {
        cnf: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the verified network here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Complete the best prefixes of a pool with the solver.
    Complete {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long, default_value_t = 8)]
        best_k: usize,
        #[arg(long, default_value_t = 13)]
        total_depth: usize,
        #[command(flatten)]
        enc: EncoderArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 0)]
        parallelism: usize,
        #[arg(long)]
        stop_on_first: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// The full 28-channel run.
    Pipeline {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        total_depth: Option<usize>,
        #[arg(long)]
        solver: Option<String>,
        #[arg(long)]
        parallelism: Option<usize>,
        /// Solve every selected prefix instead of stopping at the first network.
        #[arg(long)]
        solve_all: bool,
    },
    /// Drop the last channel of a sorting network.
    Project {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a network.
    Render {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Ascii)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Symmetric,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Ascii,
    Svg,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 10)]
    restarts: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct PrefixArgs {
    /// Pool file to take the prefix from.
    #[arg(long, conflicts_with = "prefix")]
    pool: Option<PathBuf>,
    /// Index into the pool.
    #[arg(long, default_value_t = 0)]
    entry: usize,
    /// Network file holding the prefix.
    #[arg(long)]
    prefix: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EncoderArgs {
    /// Require a reflection-symmetric suffix.
    #[arg(long)]
    symmetric: bool,
    #[arg(long)]
    last_layer_adjacent: bool,
    #[arg(long, default_value_t = 2)]
    second_last_distance: usize,
    #[arg(long)]
    window: bool,
    #[arg(long)]
    one_up_down: bool,
    #[arg(long)]
    monotone: bool,
    /// Switch on every encoder option.
    #[arg(long)]
    all_options: bool,
}

impl EncoderArgs {
    fn options(&self) -> EncoderOptions {
        if self.all_options {
            return EncoderOptions {
                second_last_distance: self.second_last_distance,
                ..EncoderOptions::all()
            };
        }
        EncoderOptions {
            last_layer_adjacent: self.last_layer_adjacent,
            second_last_distance: self.second_last_distance,
            window: self.window,
            one_up_down: self.one_up_down,
            monotone: self.monotone,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Solver command template, e.g. `cadical -q {input}`.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    timeout_secs: Option<u64>,
}

impl SolverArgs {
    fn command(&self) -> Result<SolverCommand, CliError> {
        match &self.solver {
            Some(t) => SolverCommand::from_template(t),
            None => SolverCommand::detect(),
        }
        .map_err(|e| CliError::usage(e.to_string()))
    }
}

/// Parses arguments and runs; the process exit code comes back.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

pub fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Verify { file } => cmd_verify(&file),
        Command::Enumerate {
            n,
            depth,
            mode,
            search,
            out,
        } => cmd_enumerate(n, depth, mode, &search, out.as_deref()),
        Command::Extend {
            pool,
            sixteen,
            best_k,
            cap,
            max_steps,
            search,
            out,
        } => cmd_extend(&pool, &sixteen, best_k, cap, max_steps, &search, &out),
        Command::Encode {
            prefix,
            total_depth,
            enc,
            out,
        } => cmd_encode(&prefix, total_depth, &enc, &out),
        Command::Solve { cnf, solver, out } => cmd_solve(&cnf, &solver, out.as_deref()),
        Command::Complete {
            pool,
            best_k,
            total_depth,
            enc,
            solver,
            parallelism,
            stop_on_first,
            out_dir,
        } => cmd_complete(&pool, best_k, total_depth, &enc, &solver, parallelism, stop_on_first, &out_dir),
        Command::Pipeline {
            config,
            output_dir,
            seed,
            total_depth,
            solver,
            parallelism,
            solve_all,
        } => {
            let mut cfg = match config {
                Some(p) => PipelineConfig::load(&p).map_err(CliError::usage)?,
                None => PipelineConfig::default(),
            };
            if let Some(d) = output_dir {
                cfg.output_dir = d;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = total_depth {
                cfg.total_depth = t;
            }
            if solver.is_some() {
                cfg.solver_command = solver;
            }
            if let Some(p) = parallelism {
                cfg.parallelism = p;
            }
            if solve_all {
                cfg.stop_on_first = false;
            }
            cmd_pipeline(&cfg)
        }
        Command::Project { file, out } => cmd_project(&file, out.as_deref()),
        Command::Render { file, format, out } => cmd_render(&file, format, out.as_deref()),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn read_network(path: &Path) -> Result<(Network, String), CliError> {
    let text = read_text(path)?;
    let net = parse_network(&text, None).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok((net, text))
}

fn read_pool(path: &Path) -> Result<PrefixPool, CliError> {
    PrefixPool::load(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn verdict(net: &Network) -> Result<Verdict, CliError> {
    verify_sorting(net).map_err(|e| CliError::usage(e.to_string()))
}

pub fn cmd_verify(file: &Path) -> CliResult {
    let (net, _) = read_network(file)?;
    match verdict(&net)? {
        Verdict::Sorts => {
            println!("SORTS n={} depth={} size={}", net.n(), net.depth(), net.size());
            Ok(EXIT_OK)
        }
        Verdict::Counterexample(x) => {
            println!("COUNTEREXAMPLE {x}");
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn search_options(mode: SearchMode, s: &SearchArgs) -> SearchOptions {
    SearchOptions {
        mode,
        restarts: s.restarts,
        seed: s.seed,
    }
}

pub fn cmd_enumerate(n: usize, depth: usize, mode: ModeArg, s: &SearchArgs, out: Option<&Path>) -> CliResult {
    let mode = match mode {
        ModeArg::Symmetric => SearchMode::Symmetric,
        ModeArg::General => SearchMode::General,
    };
    if n == 0 || n > 24 {
        return Err(CliError::usage(format!("n must be in 1..=24, got {n}")));
    }
    let opts = search_options(mode, s);
    let pools = generate_and_prune_with(n, depth, &opts, |_, stats| println!("{stats}"))
        .map_err(|e| CliError::usage(e.to_string()))?;
    let counts: Vec<String> = pools.iter().map(|p| p.len().to_string()).collect();
    println!("pool sizes: {}", counts.join(" "));
    let last = pools.last().expect("depth 0 pool");
    let best: Vec<usize> = last.out_sizes().into_iter().take(8).collect();
    println!("smallest output sizes: {best:?}");
    if let Some(path) = out {
        last.save(path).map_err(|e| CliError::usage(e.to_string()))?;
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_extend(
    pool: &Path,
    sixteen: &[PathBuf],
    best_k: usize,
    cap: usize,
    max_steps: usize,
    s: &SearchArgs,
    out: &Path,
) -> CliResult {
    let pool = read_pool(pool)?;
    let opts = search_options(pool.mode(), s);
    let start = if pool.n() == 12 {
        let best = select_best(&pool, best_k.min(pool.len())).map_err(|e| CliError::usage(e.to_string()))?;
        let mut nets = Vec::new();
        for p in sixteen {
            nets.push(read_network(p)?.0);
        }
        let init = build_initial_pool_28(&best, &nets, &opts).map_err(|e| CliError::usage(e.to_string()))?;
        println!("nested pool: {} entries, output sizes {:?}", init.len(), init.out_sizes());
        init
    } else {
        pool
    };
    let done = greedy_extend_with(&start, cap, max_steps, &opts, |_, stats| println!("{stats}"))
        .map_err(|e| CliError::usage(e.to_string()))?;
    println!("final pool: {} entries, output sizes {:?}", done.len(), done.out_sizes());
    done.save(out).map_err(|e| CliError::usage(e.to_string()))?;
    Ok(EXIT_OK)
}

/// Sidecar written next to an encoded DIMACS file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodeSidecar {
    pub prefix: String,
    pub map: GateMap,
}

fn sidecar_path(cnf: &Path) -> PathBuf {
    let mut s = cnf.as_os_str().to_owned();
    s.push(".map.json");
    PathBuf::from(s)
}

fn load_prefix(p: &PrefixArgs) -> Result<PrefixEntry, CliError> {
    match (&p.pool, &p.prefix) {
        (Some(pool), None) => {
            let pool = read_pool(pool)?;
            pool.entries()
                .get(p.entry)
                .cloned()
                .ok_or_else(|| CliError::usage(format!("entry {} out of range ({} entries)", p.entry, pool.len())))
        }
        (None, Some(file)) => {
            let (net, _) = read_network(file)?;
            PrefixEntry::new(net).map_err(|e| CliError::usage(e.to_string()))
        }
        _ => Err(CliError::usage("give either --pool or --prefix")),
    }
}

pub fn cmd_encode(p: &PrefixArgs, total_depth: usize, enc: &EncoderArgs, out: &Path) -> CliResult {
    let entry = load_prefix(p)?;
    let depth = entry.net.layers().len();
    if total_depth <= depth {
        return Err(CliError::usage(format!("total depth {total_depth} leaves no layers after a depth-{depth} prefix")));
    }
    let problem = CompletionProblem {
        prefix_out: entry.out.clone(),
        d_r: total_depth - depth,
        symmetric: enc.symmetric,
        options: enc.options(),
    };
    let cnf = encode_completion(&problem);
    cnf.write_dimacs(out)
        .map_err(|e| CliError::usage(format!("{}: {e}", out.display())))?;
    let side = EncodeSidecar {
        prefix: entry.net.to_single_line(),
        map: cnf.gate_map(),
    };
    write_text(&sidecar_path(out), &serde_json::to_string(&side).expect("plain data"))?;
    println!(
        "vars={} clauses={} vectors={} remaining_layers={}",
        cnf.var_count(),
        cnf.clause_count(),
        cnf.vector_count(),
        problem.d_r
    );
    Ok(EXIT_OK)
}

pub fn cmd_solve(cnf: &Path, s: &SolverArgs, out: Option<&Path>) -> CliResult {
    let solver = s.command()?;
    if !cnf.is_file() {
        return Err(CliError::usage(format!("{}: no such file", cnf.display())));
    }
    let res = run_solver(cnf, &solver, s.timeout_secs.map(Duration::from_secs), None)
        .map_err(|e| CliError::usage(e.to_string()))?;
    println!("{} ({:.2}s)", res.status, res.seconds);
    if res.status != SolverStatus::Sat {
        return Ok(EXIT_NEGATIVE);
    }
    let side = sidecar_path(cnf);
    if side.is_file() {
        let side: EncodeSidecar =
            serde_json::from_str(&read_text(&side)?).map_err(|e| CliError::usage(format!("{}: {e}", side.display())))?;
        let prefix = Network::from_single_line(&side.prefix, side.map.n).map_err(|e| CliError::usage(e.to_string()))?;
        let model = res.model.as_ref().ok_or_else(|| CliError::usage("solver gave no model"))?;
        let suffix = side.map.decode(model).map_err(|e| CliError::internal(e.to_string()))?;
        let full = compose(&prefix, &suffix).map_err(|e| CliError::internal(e.to_string()))?;
        let full = crate::eval::remove_unused_comparators(&full).map_err(|e| CliError::usage(e.to_string()))?;
        if !verdict(&full)?.sorts() {
            return Err(CliError::internal("decoded network does not sort"));
        }
        println!("SORTS n={} depth={} size={}", full.n(), full.depth(), full.size());
        match out {
            Some(p) => write_text(p, &format_network(&full))?,
            None => print!("{full}"),
        }
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_complete(
    pool: &Path,
    best_k: usize,
    total_depth: usize,
    enc: &EncoderArgs,
    s: &SolverArgs,
    parallelism: usize,
    stop_on_first: bool,
    out_dir: &Path,
) -> CliResult {
    let pool = read_pool(pool)?;
    let chosen = select_best(&pool, best_k.min(pool.len())).map_err(|e| CliError::usage(e.to_string()))?;
    let mut opts = CompleteOptions::new(s.command()?);
    opts.symmetric = enc.symmetric;
    opts.encoder = enc.options();
    opts.timeout = s.timeout_secs.map(Duration::from_secs);
    opts.work_dir = Some(out_dir.join("cnf"));
    fs::create_dir_all(out_dir).map_err(|e| CliError::usage(e.to_string()))?;
    let threads = if parallelism > 0 {
        parallelism
    } else {
        std::thread::available_parallelism().map_or(1, |p| p.get())
    };
    let results = solve_batch_with(chosen.entries(), total_depth, &opts, threads, stop_on_first, |r| {
        println!("entry {} {} {:.1}s", r.entry, r.status, r.seconds)
    });
    let mut log = String::new();
    let mut found = 0;
    for r in &results {
        log.push_str(&r.to_json_line());
        log.push('\n');
        if let Some(e) = &r.error {
            if e.contains("encoder bug") {
                return Err(CliError::internal(e.clone()));
            }
        }
        if let Some(net) = &r.network {
            found += 1;
            write_text(&out_dir.join(format!("entry{}.txt", r.entry)), &format_network(net))?;
        }
    }
    write_text(&out_dir.join("results.jsonl"), &log)?;
    println!("{found} of {} prefixes completed", results.len());
    Ok(if found > 0 { EXIT_OK } else { EXIT_NEGATIVE })
}

pub fn cmd_pipeline(cfg: &PipelineConfig) -> CliResult {
    match pipeline::run_pipeline(cfg, true) {
        Ok(report) => {
            println!(
                "{} verified networks in {:.1}s",
                report.networks.len(),
                report.elapsed.as_secs_f64()
            );
            Ok(if report.networks.is_empty() { EXIT_NEGATIVE } else { EXIT_OK })
        }
        Err(e) if e.internal => Err(CliError::internal(e.to_string())),
        Err(e) => Err(CliError::usage(e.to_string())),
    }
}

pub fn cmd_project(file: &Path, out: Option<&Path>) -> CliResult {
    let (net, _) = read_network(file)?;
    if let Verdict::Counterexample(x) = verdict(&net)? {
        eprintln!("input does not sort: counterexample {x}");
        return Ok(EXIT_NEGATIVE);
    }
    let projected = project_drop_last_channel(&net).map_err(|e| CliError::usage(e.to_string()))?;
    if !verdict(&projected)?.sorts() {
        return Err(CliError::internal("projection does not sort"));
    }
    println!(
        "SORTS n={} depth={} size={}",
        projected.n(),
        projected.depth(),
        projected.size()
    );
    match out {
        Some(p) => write_text(p, &format_network(&projected))?,
        None => print!("{}", format_network(&projected)),
    }
    Ok(EXIT_OK)
}

pub fn cmd_render(file: &Path, format: Format, out: Option<&Path>) -> CliResult {
    let (net, text) = read_network(file)?;
    let regions = render::parse_regions(&text);
    let drawing = match format {
        Format::Ascii => render::render_ascii(&net, &regions),
        Format::Svg => render::render_svg(&net, &regions),
    };
    match out {
        Some(p) => write_text(p, &drawing)?,
        None => print!("{drawing}"),
    }
    Ok(EXIT_OK)
}
