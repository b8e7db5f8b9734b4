//! SAT completion of a prefix: CNF encoding, DIMACS output, an external
//! solver driver, and model decoding.
//!
//! A completion problem asks for `d_r` further layers that sort every vector
//! of the prefix's output set. Gate variables `g[t][i][j]` say comparator
//! `(i, j)` sits in suffix layer `t`; value variables track each unsorted
//! vector through the suffix. A model is never trusted: the decoded network
//! is composed with the prefix and verified exhaustively.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{is_sorted_word, remove_unused_comparators, verify_sorting, EvalError, OutputSet};
use crate::netcore::{compose, Comparator, Layer, NetError, Network};
use crate::search::PrefixEntry;

#[derive(Debug, Error)]
pub enum SatError {
    #[error("could not start solver `{cmd}`: {source}")]
    Spawn { cmd: String, source: io::Error },
    #[error("unparseable solver output: {0}")]
    Parse(String),
    #[error("no SAT solver found; set {SOLVER_ENV} or put cadical, kissat or minisat on PATH")]
    NoSolver,
    #[error("bad solver command template: {0}")]
    Template(String),
    #[error("decoded network does not sort (encoder bug): {0}")]
    EncoderBug(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Encoder restrictions and refinements. Every option only removes
/// solutions or variables; soundness rests on verifying the decoded result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderOptions {
    /// Final layer uses adjacent channels only; the layer before it spans at
    /// most `second_last_distance`.
    pub last_layer_adjacent: bool,
    pub second_last_distance: usize,
    /// Channels holding a vector's leading zeros or trailing ones get no
    /// value variables; they never change.
    pub window: bool,
    /// Vectors of weight 1 (resp. `n-1`) only track where their single one
    /// (resp. zero) may go.
    pub one_up_down: bool,
    /// Every vector uses the one-directional encoding: ones are tracked for
    /// weight up to `n/2`, zeros otherwise.
    pub monotone: bool,
}

impl Default for EncoderOptions {
    fn default() -> Self {
        EncoderOptions {
            last_layer_adjacent: false,
            second_last_distance: 2,
            window: false,
            one_up_down: false,
            monotone: false,
        }
    }
}

impl EncoderOptions {
    /// Everything switched on.
    pub fn all() -> Self {
        EncoderOptions {
            last_layer_adjacent: true,
            second_last_distance: 2,
            window: true,
            one_up_down: true,
            monotone: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionProblem {
    pub prefix_out: OutputSet,
    pub d_r: usize,
    /// Force the suffix to equal its own reflection.
    pub symmetric: bool,
    pub options: EncoderOptions,
}

impl CompletionProblem {
    pub fn new(prefix_out: OutputSet, d_r: usize) -> Self {
        CompletionProblem {
            prefix_out,
            d_r,
            symmetric: false,
            options: EncoderOptions::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.prefix_out.n()
    }
}

/// Value variables of one vector: layers `1..d_r`, channels in `lo..hi`.
#[derive(Debug, Clone, Copy)]
struct ValueBlock {
    word: u32,
    lo: u8,
    hi: u8,
    base: i32,
}

/// A CNF formula with the variable layout of a completion problem.
#[derive(Debug, Clone, Default)]
pub struct CnfInstance {
    n: usize,
    d_r: usize,
    var_count: u32,
    /// Clauses back to back, each terminated by 0.
    lits: Vec<i32>,
    clause_count: usize,
    /// `(t, i, j, var)`, ascending.
    gates: Vec<(u8, u8, u8, i32)>,
    blocks: Vec<ValueBlock>,
}

impl CnfInstance {
    /// A bare formula, e.g. for solver tests.
    pub fn from_clauses(var_count: u32, clauses: &[Vec<i32>]) -> Self {
        let mut cnf = CnfInstance {
            var_count,
            ..Default::default()
        };
        for c in clauses {
            cnf.add(c);
        }
        cnf
    }

    pub fn var_count(&self) -> u32 {
        self.var_count
    }

    pub fn clause_count(&self) -> usize {
        self.clause_count
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_r(&self) -> usize {
        self.d_r
    }

    pub fn clauses(&self) -> impl Iterator<Item = &[i32]> {
        self.lits.split_inclusive(|&l| l == 0).map(|c| &c[..c.len() - 1])
    }

    /// Gate variables as `(layer, lo, hi, var)`.
    pub fn gate_vars(&self) -> impl Iterator<Item = (usize, usize, usize, i32)> + '_ {
        self.gates
            .iter()
            .map(|&(t, i, j, v)| (t as usize, i as usize, j as usize, v))
    }

    pub fn gate_var(&self, t: usize, i: usize, j: usize) -> Option<i32> {
        self.gates
            .binary_search_by(|&(gt, gi, gj, _)| (gt as usize, gi as usize, gj as usize).cmp(&(t, i, j)))
            .ok()
            .map(|k| self.gates[k].3)
    }

    /// Number of vectors that received value variables (the unsorted ones).
    pub fn vector_count(&self) -> usize {
        self.blocks.len()
    }

    /// Variable for the value of encoded vector `v` on `channel` after
    /// suffix layer `layer` (1-based, below `d_r`), if it has one.
    pub fn value_var(&self, v: usize, layer: usize, channel: usize) -> Option<i32> {
        let b = self.blocks.get(v)?;
        let (lo, hi) = (b.lo as usize, b.hi as usize);
        if layer == 0 || layer >= self.d_r || channel < lo || channel >= hi {
            return None;
        }
        Some(b.base + ((layer - 1) * (hi - lo) + channel - lo) as i32)
    }

    fn new_vars(&mut self, k: usize) -> i32 {
        let first = self.var_count as i32 + 1;
        self.var_count += k as u32;
        first
    }

    fn add(&mut self, clause: &[i32]) {
        debug_assert!(clause.iter().all(|&l| l != 0 && l.unsigned_abs() <= self.var_count));
        self.lits.extend_from_slice(clause);
        self.lits.push(0);
        self.clause_count += 1;
    }

    /// Adds a clause over gate/used literals and value terms, dropping false
    /// constants and skipping the clause if a term is a true constant.
    fn add_mixed(&mut self, fixed: &[i32], terms: &[(Val, bool)]) {
        let start = self.lits.len();
        self.lits.extend_from_slice(fixed);
        for &(v, pos) in terms {
            match v {
                Val::C(b) if b == pos => {
                    self.lits.truncate(start);
                    return;
                }
                Val::C(_) => {}
                Val::V(x) => self.lits.push(if pos { x } else { -x }),
            }
        }
        debug_assert!(self.lits.len() > start, "every clause keeps a gate literal");
        self.lits.push(0);
        self.clause_count += 1;
    }

    /// Standard DIMACS: header, then one 0-terminated clause per line.
    pub fn emit_dimacs<W: Write>(&self, w: W) -> io::Result<()> {
        let mut w = BufWriter::with_capacity(1 << 20, w);
        writeln!(w, "p cnf {} {}", self.var_count, self.clause_count)?;
        let mut line = String::new();
        for c in self.clauses() {
            line.clear();
            for l in c {
                line.push_str(&l.to_string());
                line.push(' ');
            }
            line.push_str("0\n");
            w.write_all(line.as_bytes())?;
        }
        w.flush()
    }

    pub fn write_dimacs(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.emit_dimacs(File::create(path)?)
    }

    pub fn to_dimacs(&self) -> String {
        let mut buf = Vec::new();
        self.emit_dimacs(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    /// Reads the suffix layers off a model.
    pub fn decode(&self, model: &Model) -> Result<Network, SatError> {
        let mut layers = vec![Vec::new(); self.d_r];
        for &(t, i, j, v) in &self.gates {
            if model.value(v) {
                layers[t as usize].push(Comparator::new(i as usize, j as usize).expect("i < j"));
            }
        }
        let layers = layers
            .into_iter()
            .map(Layer::new)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| SatError::EncoderBug(format!("model breaks a layer: {e}")))?;
        Ok(Network::new(self.n, layers)?)
    }

    /// Serializable variable layout, enough to decode a model later.
    pub fn gate_map(&self) -> GateMap {
        GateMap {
            n: self.n,
            d_r: self.d_r,
            gates: self.gate_vars().collect(),
        }
    }
}

/// Gate-variable layout saved next to a DIMACS file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateMap {
    pub n: usize,
    pub d_r: usize,
    pub gates: Vec<(usize, usize, usize, i32)>,
}

impl GateMap {
    pub fn decode(&self, model: &Model) -> Result<Network, SatError> {
        let cnf = CnfInstance {
            n: self.n,
            d_r: self.d_r,
            gates: self
                .gates
                .iter()
                .map(|&(t, i, j, v)| (t as u8, i as u8, j as u8, v))
                .collect(),
            ..Default::default()
        };
        cnf.decode(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Val {
    C(bool),
    V(i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Track {
    Ones,
    Zeros,
    Both,
}

fn trailing_ones_high(w: u32, n: usize) -> usize {
    if n == 0 {
        0
    } else {
        (w << (32 - n)).leading_ones() as usize
    }
}

/// Builds the CNF for a completion problem. Variable numbering depends only
/// on the problem, so equal problems give byte-identical DIMACS.
pub fn encode_completion(p: &CompletionProblem) -> CnfInstance {
    let n = p.n();
    let d = p.d_r;
    let o = p.options;
    assert!(d >= 1, "at least one suffix layer");
    let mut cnf = CnfInstance {
        n,
        d_r: d,
        ..Default::default()
    };

    let allowed = |t: usize, i: usize, j: usize| {
        if o.last_layer_adjacent {
            if t + 1 == d {
                return j - i == 1;
            }
            if t + 2 == d {
                return j - i <= o.second_last_distance;
            }
        }
        true
    };
    let mut gate_at = vec![0i32; d * n * n];
    for t in 0..d {
        for i in 0..n {
            for j in i + 1..n {
                if allowed(t, i, j) {
                    let v = cnf.new_vars(1);
                    gate_at[(t * n + i) * n + j] = v;
                    cnf.gates.push((t as u8, i as u8, j as u8, v));
                }
            }
        }
    }
    let used_base = cnf.new_vars(d * n);
    let used = |t: usize, k: usize| used_base + (t * n + k) as i32;

    for t in 0..d {
        for k in 0..n {
            let touching: Vec<i32> = (0..n)
                .filter(|&x| x != k)
                .map(|x| gate_at[(t * n + x.min(k)) * n + x.max(k)])
                .filter(|&v| v != 0)
                .collect();
            for (a, &ga) in touching.iter().enumerate() {
                for &gb in &touching[a + 1..] {
                    cnf.add(&[-ga, -gb]);
                }
                cnf.add(&[-ga, used(t, k)]);
            }
            let mut c = vec![-used(t, k)];
            c.extend_from_slice(&touching);
            cnf.add(&c);
        }
    }

    if p.symmetric {
        for &(t, i, j, v) in &cnf.gates.clone() {
            let (t, i, j) = (t as usize, i as usize, j as usize);
            let (ri, rj) = (n - 1 - j, n - 1 - i);
            if (ri, rj) == (i, j) {
                continue;
            }
            match gate_at[(t * n + ri) * n + rj] {
                0 => cnf.add(&[-v]),
                m => cnf.add(&[-v, m]),
            }
        }
    }

    let full = crate::eval::full_mask(n);
    let unsorted: Vec<u32> = p.prefix_out.unsorted_words().collect();
    let mut gates_by_layer: Vec<Vec<(usize, usize, i32)>> = vec![Vec::new(); d];
    for &(t, i, j, v) in &cnf.gates {
        gates_by_layer[t as usize].push((i as usize, j as usize, v));
    }
    for w in unsorted {
        let weight = w.count_ones() as usize;
        let (lo, hi) = if o.window {
            (w.trailing_zeros() as usize, n - trailing_ones_high(w, n))
        } else {
            (0, n)
        };
        let track = if o.monotone {
            if 2 * weight <= n {
                Track::Ones
            } else {
                Track::Zeros
            }
        } else if o.one_up_down && weight == 1 {
            Track::Ones
        } else if o.one_up_down && weight + 1 == n {
            Track::Zeros
        } else {
            Track::Both
        };
        let width = hi - lo;
        let base = cnf.new_vars((d - 1) * width);
        cnf.blocks.push(ValueBlock {
            word: w,
            lo: lo as u8,
            hi: hi as u8,
            base,
        });
        let sorted = full & !crate::eval::full_mask(n - weight);
        let val = |t: usize, k: usize| -> Val {
            if t == 0 {
                Val::C(w >> k & 1 == 1)
            } else if t == d {
                Val::C(sorted >> k & 1 == 1)
            } else if k < lo || k >= hi {
                Val::C(w >> k & 1 == 1)
            } else {
                Val::V(base + ((t - 1) * width + k - lo) as i32)
            }
        };
        for (t, layer_gates) in gates_by_layer.iter().enumerate().take(d) {
            let ones = track != Track::Zeros;
            let zeros = track != Track::Ones;
            for &(i, j, g) in layer_gates {
                let (ci, cj, ni, nj) = (val(t, i), val(t, j), val(t + 1, i), val(t + 1, j));
                if ones {
                    cnf.add_mixed(&[-g], &[(ci, false), (cj, false), (ni, true)]);
                    cnf.add_mixed(&[-g], &[(ci, false), (nj, true)]);
                    cnf.add_mixed(&[-g], &[(cj, false), (nj, true)]);
                }
                if zeros {
                    cnf.add_mixed(&[-g], &[(ci, true), (ni, false)]);
                    cnf.add_mixed(&[-g], &[(cj, true), (ni, false)]);
                    cnf.add_mixed(&[-g], &[(ci, true), (cj, true), (nj, false)]);
                }
            }
            for k in 0..n {
                let (c, x) = (val(t, k), val(t + 1, k));
                if ones {
                    cnf.add_mixed(&[used(t, k)], &[(c, false), (x, true)]);
                }
                if zeros {
                    cnf.add_mixed(&[used(t, k)], &[(c, true), (x, false)]);
                }
            }
        }
    }
    debug_assert!(cnf.blocks.iter().all(|b| !is_sorted_word(b.word, n)));
    cnf
}

/// A satisfying assignment, indexed by variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    /// Builds a model from signed literals; unmentioned variables are false.
    pub fn from_literals(lits: impl IntoIterator<Item = i32>) -> Self {
        let mut values = Vec::new();
        for l in lits {
            let v = l.unsigned_abs() as usize;
            if v == 0 {
                continue;
            }
            if values.len() <= v {
                values.resize(v + 1, false);
            }
            values[v] = l > 0;
        }
        Model { values }
    }

    pub fn value(&self, var: i32) -> bool {
        self.values.get(var as usize).copied().unwrap_or(false)
    }

    /// Does the assignment satisfy every clause?
    pub fn satisfies(&self, cnf: &CnfInstance) -> bool {
        cnf.clauses()
            .all(|c| c.iter().any(|&l| self.value(l.abs()) == (l > 0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Sat,
    Unsat,
    Unknown,
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverStatus::Sat => "sat",
            SolverStatus::Unsat => "unsat",
            SolverStatus::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub status: SolverStatus,
    pub model: Option<Model>,
    pub seconds: f64,
}

/// How a solver reports its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputStyle {
    /// `s SATISFIABLE` / `v ...` lines on standard output.
    Competition,
    /// MiniSat's result file: `SAT` then the model, or `UNSAT`.
    ResultFile,
}

/// Environment variable holding a solver command template.
pub const SOLVER_ENV: &str = "SORTNET_SOLVER";

/// A solver invocation. Templates are whitespace-separated words with
/// `{input}` and optionally `{output}` placeholders; a template mentioning
/// `{output}` is read MiniSat-style, anything else competition-style.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverCommand {
    words: Vec<String>,
    style: OutputStyle,
}

impl SolverCommand {
    pub fn from_template(template: &str) -> Result<Self, SatError> {
        let words: Vec<String> = template.split_whitespace().map(str::to_string).collect();
        if words.is_empty() {
            return Err(SatError::Template("empty command".into()));
        }
        let mut words = words;
        if !words.iter().any(|w| w.contains("{input}")) {
            words.push("{input}".into());
        }
        let style = if words.iter().any(|w| w.contains("{output}")) {
            OutputStyle::ResultFile
        } else {
            OutputStyle::Competition
        };
        Ok(SolverCommand { words, style })
    }

    pub fn style(&self) -> OutputStyle {
        self.style
    }

    pub fn template(&self) -> String {
        self.words.join(" ")
    }

    /// `SORTNET_SOLVER` if set, else the first of cadical, kissat, minisat
    /// found on `PATH`.
    pub fn detect() -> Result<Self, SatError> {
        if let Ok(t) = std::env::var(SOLVER_ENV) {
            if !t.trim().is_empty() {
                return SolverCommand::from_template(&t);
            }
        }
        let path = std::env::var_os("PATH").unwrap_or_default();
        for (name, template) in [
            ("cadical", "cadical -q {input}"),
            ("kissat", "kissat -q {input}"),
            ("minisat", "minisat -verb=0 {input} {output}"),
        ] {
            if std::env::split_paths(&path).any(|d| d.join(name).is_file()) {
                return SolverCommand::from_template(template);
            }
        }
        Err(SatError::NoSolver)
    }
}

/// Runs the solver on a DIMACS file. A timeout or a raised `cancel` flag
/// kills the process and reports `Unknown`.
pub fn run_solver(
    instance: &Path,
    cmd: &SolverCommand,
    timeout: Option<Duration>,
    cancel: Option<&AtomicBool>,
) -> Result<SolverResult, SatError> {
    let start = Instant::now();
    let out_path = with_suffix(instance, ".out");
    let log_path = with_suffix(instance, ".log");
    let fill = |w: &str| {
        w.replace("{input}", &instance.to_string_lossy())
            .replace("{output}", &out_path.to_string_lossy())
    };
    let mut words = cmd.words.iter().map(|w| fill(w));
    let program = words.next().expect("non-empty template");
    let log = File::create(&log_path)?;
    let _ = std::fs::remove_file(&out_path);
    let mut child = Command::new(&program)
        .args(words)
        .stdin(Stdio::null())
        .stdout(log)
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| SatError::Spawn {
            cmd: cmd.template(),
            source,
        })?;
    let mut poll = Duration::from_millis(5);
    loop {
        if child.try_wait()?.is_some() {
            break;
        }
        let expired = timeout.is_some_and(|t| start.elapsed() >= t);
        if expired || cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(SolverResult {
                status: SolverStatus::Unknown,
                model: None,
                seconds: start.elapsed().as_secs_f64(),
            });
        }
        std::thread::sleep(poll);
        poll = (poll * 2).min(Duration::from_millis(100));
    }
    let seconds = start.elapsed().as_secs_f64();
    let (status, model) = match cmd.style {
        OutputStyle::Competition => parse_competition(&std::fs::read_to_string(&log_path)?)?,
        OutputStyle::ResultFile => parse_result_file(&std::fs::read_to_string(&out_path).unwrap_or_default())?,
    };
    let _ = std::fs::remove_file(&log_path);
    let _ = std::fs::remove_file(&out_path);
    Ok(SolverResult { status, model, seconds })
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn parse_lits<'a>(words: impl Iterator<Item = &'a str>) -> Result<Vec<i32>, SatError> {
    words
        .map(|w| w.parse::<i32>().map_err(|_| SatError::Parse(format!("bad literal `{w}`"))))
        .collect()
}

/// Parses `s ...` and `v ...` lines.
pub fn parse_competition(text: &str) -> Result<(SolverStatus, Option<Model>), SatError> {
    let mut status = None;
    let mut lits = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if let Some(s) = line.strip_prefix("s ") {
            status = Some(match s.trim() {
                "SATISFIABLE" => SolverStatus::Sat,
                "UNSATISFIABLE" => SolverStatus::Unsat,
                _ => SolverStatus::Unknown,
            });
        } else if let Some(v) = line.strip_prefix("v ") {
            lits.extend(parse_lits(v.split_whitespace())?);
        }
    }
    match status {
        Some(SolverStatus::Sat) => Ok((SolverStatus::Sat, Some(Model::from_literals(lits)))),
        Some(s) => Ok((s, None)),
        None => Err(SatError::Parse(text.chars().take(500).collect())),
    }
}

/// Parses a MiniSat result file.
pub fn parse_result_file(text: &str) -> Result<(SolverStatus, Option<Model>), SatError> {
    let mut words = text.split_whitespace();
    match words.next() {
        Some("SAT") => Ok((SolverStatus::Sat, Some(Model::from_literals(parse_lits(words)?)))),
        Some("UNSAT") => Ok((SolverStatus::Unsat, None)),
        Some("INDET") | None => Ok((SolverStatus::Unknown, None)),
        Some(other) => Err(SatError::Parse(format!("unexpected result `{other}`"))),
    }
}

static INSTANCE_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Settings for [`complete_prefix`] and [`solve_batch`].
#[derive(Debug, Clone)]
pub struct CompleteOptions {
    pub solver: SolverCommand,
    pub symmetric: bool,
    pub encoder: EncoderOptions,
    pub timeout: Option<Duration>,
    /// Where DIMACS files go; the system temp directory by default.
    pub work_dir: Option<PathBuf>,
    /// Keep DIMACS files after solving.
    pub keep_files: bool,
}

impl CompleteOptions {
    pub fn new(solver: SolverCommand) -> Self {
        CompleteOptions {
            solver,
            symmetric: false,
            encoder: EncoderOptions::default(),
            timeout: None,
            work_dir: None,
            keep_files: false,
        }
    }
}

/// What [`complete_prefix`] found.
#[derive(Debug, Clone)]
pub struct Completion {
    pub status: SolverStatus,
    /// Verified sorting network, unused comparators removed.
    pub network: Option<Network>,
    pub seconds: f64,
    pub vars: u32,
    pub clauses: usize,
}

fn completion_of(prefix: &Network, suffix: &Network) -> Result<Network, SatError> {
    let full = remove_unused_comparators(&compose(prefix, suffix)?)?;
    if !verify_sorting(&full)?.sorts() {
        return Err(SatError::EncoderBug(full.to_single_line()));
    }
    Ok(full)
}

/// Encodes, solves, decodes, and verifies the completion of `entry` to
/// `total_depth` layers.
pub fn complete_prefix(
    entry: &PrefixEntry,
    total_depth: usize,
    opts: &CompleteOptions,
) -> Result<Completion, SatError> {
    complete_prefix_cancellable(entry, total_depth, opts, None, "")
}

fn complete_prefix_cancellable(
    entry: &PrefixEntry,
    total_depth: usize,
    opts: &CompleteOptions,
    cancel: Option<&AtomicBool>,
    tag: &str,
) -> Result<Completion, SatError> {
    let start = Instant::now();
    let depth = entry.net.layers().len();
    if total_depth <= depth {
        let sorts = entry.out.unsorted_words().next().is_none();
        return Ok(Completion {
            status: if sorts { SolverStatus::Sat } else { SolverStatus::Unsat },
            network: if sorts {
                Some(completion_of(&entry.net, &Network::empty(entry.net.n()))?)
            } else {
                None
            },
            seconds: 0.0,
            vars: 0,
            clauses: 0,
        });
    }
    let problem = CompletionProblem {
        prefix_out: entry.out.clone(),
        d_r: total_depth - depth,
        symmetric: opts.symmetric,
        options: opts.encoder,
    };
    let cnf = encode_completion(&problem);
    let dir = opts.work_dir.clone().unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&dir)?;
    let id = INSTANCE_COUNTER.fetch_add(1, Ordering::Relaxed);
    let path = dir.join(format!("sortnet-{}-{id}{tag}.cnf", std::process::id()));
    cnf.write_dimacs(&path)?;
    let res = run_solver(&path, &opts.solver, opts.timeout, cancel);
    if !opts.keep_files {
        let _ = std::fs::remove_file(&path);
    }
    let res = res?;
    let network = match (&res.status, &res.model) {
        (SolverStatus::Sat, Some(model)) => Some(completion_of(&entry.net, &cnf.decode(model)?)?),
        (SolverStatus::Sat, None) => return Err(SatError::Parse("sat without a model".into())),
        _ => None,
    };
    Ok(Completion {
        status: res.status,
        network,
        seconds: start.elapsed().as_secs_f64(),
        vars: cnf.var_count(),
        clauses: cnf.clause_count(),
    })
}

/// Outcome for one entry of a batch.
#[derive(Debug, Clone, Serialize)]
pub struct BatchResult {
    pub entry: usize,
    pub status: SolverStatus,
    pub seconds: f64,
    #[serde(serialize_with = "net_text")]
    pub network: Option<Network>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn net_text<S: serde::Serializer>(net: &Option<Network>, s: S) -> Result<S::Ok, S::Error> {
    match net {
        Some(n) => s.serialize_some(&n.to_single_line()),
        None => s.serialize_none(),
    }
}

impl BatchResult {
    /// One JSON object, for a JSON-lines log.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }
}

/// Completes every entry with at most `parallelism` solvers at once.
/// With `stop_on_first`, running solvers are killed and queued entries
/// skipped once one network has been verified; those report `Unknown`.
/// Results come back in entry order.
pub fn solve_batch(
    entries: &[PrefixEntry],
    total_depth: usize,
    opts: &CompleteOptions,
    parallelism: usize,
    stop_on_first: bool,
) -> Vec<BatchResult> {
    solve_batch_with(entries, total_depth, opts, parallelism, stop_on_first, |_| {})
}

/// Like [`solve_batch`], reporting each result as it arrives.
pub fn solve_batch_with<F>(
    entries: &[PrefixEntry],
    total_depth: usize,
    opts: &CompleteOptions,
    parallelism: usize,
    stop_on_first: bool,
    on_result: F,
) -> Vec<BatchResult>
where
    F: Fn(&BatchResult) + Sync,
{
    let next = AtomicUsize::new(0);
    let cancel = AtomicBool::new(false);
    let results: Mutex<Vec<Option<BatchResult>>> = Mutex::new(vec![None; entries.len()]);
    let workers = parallelism.max(1).min(entries.len().max(1));
    let results = Arc::new(results);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= entries.len() {
                    break;
                }
                let r = if cancel.load(Ordering::SeqCst) {
                    BatchResult {
                        entry: i,
                        status: SolverStatus::Unknown,
                        seconds: 0.0,
                        network: None,
                        error: Some("cancelled".into()),
                    }
                } else {
                    match complete_prefix_cancellable(&entries[i], total_depth, opts, Some(&cancel), &format!("-e{i}")) {
                        Ok(c) => BatchResult {
                            entry: i,
                            status: c.status,
                            seconds: c.seconds,
                            network: c.network,
                            error: None,
                        },
                        Err(e) => BatchResult {
                            entry: i,
                            status: SolverStatus::Unknown,
                            seconds: 0.0,
                            network: None,
                            error: Some(e.to_string()),
                        },
                    }
                };
                if stop_on_first && r.network.is_some() {
                    cancel.store(true, Ordering::SeqCst);
                }
                on_result(&r);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let results = Arc::try_unwrap(results).expect("workers joined").into_inner().unwrap();
    results.into_iter().map(|r| r.expect("every entry handled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimacs_shapes() {
        assert_eq!(CnfInstance::from_clauses(3, &[]).to_dimacs(), "p cnf 3 0\n");
        assert_eq!(CnfInstance::from_clauses(1, &[vec![1]]).to_dimacs(), "p cnf 1 1\n1 0\n");
    }

    #[test]
    fn parsers() {
        let (s, m) = parse_competition("c hi\ns SATISFIABLE\nv 1 -2\nv 3 0\n").unwrap();
        assert_eq!(s, SolverStatus::Sat);
        let m = m.unwrap();
        assert!(m.value(1) && !m.value(2) && m.value(3));
        assert_eq!(parse_competition("s UNSATISFIABLE\n").unwrap().0, SolverStatus::Unsat);
        assert!(parse_competition("garbage").is_err());
        assert_eq!(parse_result_file("UNSAT\n").unwrap().0, SolverStatus::Unsat);
        let (s, m) = parse_result_file("SAT\n-1 2 0\n").unwrap();
        assert_eq!(s, SolverStatus::Sat);
        assert!(m.unwrap().value(2));
    }

    #[test]
    fn templates() {
        let c = SolverCommand::from_template("minisat {input} {output}").unwrap();
        assert_eq!(c.style(), OutputStyle::ResultFile);
        let c = SolverCommand::from_template("cadical -q").unwrap();
        assert_eq!(c.style(), OutputStyle::Competition);
        assert_eq!(c.template(), "cadical -q {input}");
        assert!(SolverCommand::from_template("  ").is_err());
    }

    #[test]
    fn variable_maps_are_disjoint() {
        let p = CompletionProblem::new(OutputSet::all(4), 3);
        let cnf = encode_completion(&p);
        let mut seen = std::collections::HashSet::new();
        for (_, _, _, v) in cnf.gate_vars() {
            assert!(seen.insert(v));
        }
        for v in 0..cnf.vector_count() {
            for t in 1..3 {
                for k in 0..4 {
                    let x = cnf.value_var(v, t, k).unwrap();
                    assert!(x as u32 <= cnf.var_count() && seen.insert(x));
                }
            }
        }
        assert_eq!(cnf.vector_count(), 16 - 5);
        for c in cnf.clauses() {
            assert!(c.iter().all(|l| l.unsigned_abs() <= cnf.var_count()));
        }
    }

    #[test]
    fn encoding_is_deterministic() {
        let mut p = CompletionProblem::new(OutputSet::all(5), 3);
        p.options = EncoderOptions::all();
        assert_eq!(encode_completion(&p).to_dimacs(), encode_completion(&p).to_dimacs());
    }

    /// A known network's gate assignment, with values filled in by
    /// simulation, satisfies the plain encoding.
    #[test]
    fn true_assignment_satisfies() {
        use crate::eval::apply_network_word;
        let net = Network::from_pairs(4, &[&[(0, 1), (2, 3)], &[(0, 2), (1, 3)], &[(1, 2)]]);
        for options in [EncoderOptions::default(), EncoderOptions::all()] {
            let p = CompletionProblem {
                options,
                ..CompletionProblem::new(OutputSet::all(4), 3)
            };
            let cnf = encode_completion(&p);
            let mut lits = Vec::new();
            for (t, i, j, v) in cnf.gate_vars() {
                let on = net.layers()[t].comparators().contains(&Comparator::new(i, j).unwrap());
                lits.push(if on { v } else { -v });
            }
            let used_base = cnf.gates.len() as i32 + 1;
            for t in 0..3 {
                for k in 0..4 {
                    let v = used_base + (t * 4 + k) as i32;
                    lits.push(if net.layers()[t].uses(k) { v } else { -v });
                }
            }
            for (vi, b) in cnf.blocks.iter().enumerate() {
                for t in 1..3 {
                    let y = apply_network_word(&net.truncated(t), b.word);
                    for k in 0..4 {
                        if let Some(x) = cnf.value_var(vi, t, k) {
                            lits.push(if y >> k & 1 == 1 { x } else { -x });
                        }
                    }
                }
            }
            let model = Model::from_literals(lits);
            assert!(model.satisfies(&cnf), "{options:?}");
            assert_eq!(cnf.decode(&model).unwrap(), net);
        }
    }
}
