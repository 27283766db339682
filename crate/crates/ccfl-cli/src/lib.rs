//! Driver for the `ccfl` command: compile CCFL programs to rewriting
//! worlds, run them under a strategy, and run hand-written engine files.

pub mod reference;

use std::fs;
use std::path::{Path, PathBuf};

use ccfl::flat::Options;
use ccfl::strategy::rules_text;
use ccfl::{check_ccfl, compile, parse_ccfl, parse_query, read_result, read_var, settle_status, CcflProgram, Compiled, Outcome, Strategy, Term};
use hgraph::{parse_world, run, serialize, EngineError, Policy, RunStatus, SyntaxError, TraceEvent, World};
use thiserror::Error;

pub use reference::{reference_eval, Mode, RefError, RefOutcome, RefRun};

pub const DEFAULT_MAX_STEPS: usize = 10_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] ccfl::CcflError),
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Check(Vec<ccfl::Diagnostic>),
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{0}")]
    Engine(#[from] EngineError),
    #[error("bad binding {0:?}: expected NAME=INTEGER")]
    BadBind(String),
    #[error("{0} is not a free variable of the query")]
    UnknownVar(String),
}

/// Exit code for a finished run.
pub fn exit_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::NormalForm => 0,
        RunStatus::Suspended => 2,
        RunStatus::BudgetExhausted => 3,
    }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Parses and checks a program.
pub fn load_program(src: &str) -> Result<CcflProgram, CliError> {
    let p = parse_ccfl(src)?;
    let diags = check_ccfl(&p);
    if !diags.is_empty() {
        return Err(CliError::Check(diags));
    }
    Ok(p)
}

/// Parses `x=4`.
pub fn parse_bind(text: &str) -> Result<(String, i64), CliError> {
    let bad = || CliError::BadBind(text.to_string());
    let (name, value) = text.split_once('=').ok_or_else(bad)?;
    let value = value.trim().parse().map_err(|_| bad())?;
    Ok((name.trim().to_string(), value))
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub strategy: Strategy,
    pub seed: u64,
    pub max_steps: usize,
    pub inline_app: bool,
    pub binds: Vec<(String, i64)>,
}

impl RunOptions {
    pub fn new(strategy: Strategy) -> Self {
        RunOptions { strategy, max_steps: DEFAULT_MAX_STEPS, ..Default::default() }
    }
}

/// Compiles `query` against `p`, with bound variables attached.
pub fn compile_query(p: &CcflProgram, query: &str, opts: &RunOptions) -> Result<Compiled, CliError> {
    let q = parse_query(query, p)?;
    let mut c = compile(p, &q, opts.strategy, Options { inline_app: opts.inline_app });
    for (name, value) in &opts.binds {
        if !c.query_vars.contains(name) {
            return Err(CliError::UnknownVar(name.clone()));
        }
        let l = c.world.link_by_name(name).ok_or_else(|| CliError::UnknownVar(name.clone()))?;
        let root = c.world.root();
        c.world.add_int(root, *value, l).map_err(EngineError::from)?;
    }
    Ok(c)
}

/// Engine text of the compiled program and query. Without a query only the
/// program rules are printed.
pub fn cmd_compile(src: &str, query: Option<&str>, opts: &RunOptions) -> Result<String, CliError> {
    let p = load_program(src)?;
    match query {
        Some(q) => Ok(serialize(&compile_query(&p, q, opts)?.world)),
        None => Ok(rules_text(&compile_query(&p, "0", opts)?)),
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub status: RunStatus,
    pub steps: usize,
    pub trace: Vec<TraceEvent>,
    pub world: World,
    /// The query's value; absent for engine files.
    pub result: Option<Outcome>,
    /// Free query variables and what they were bound to.
    pub vars: Vec<(String, Option<Term>)>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        exit_code(self.status)
    }

    pub fn trace_text(&self) -> String {
        self.trace.iter().map(|e| format!("{e}\n")).collect()
    }
}

/// Runs a compiled query to a normal form, suspension or the step budget.
pub fn run_compiled(c: &Compiled, seed: u64, max_steps: usize) -> Result<RunReport, CliError> {
    let mut w = c.world.clone();
    let out = run(&mut w, &Policy { seed, max_steps })?;
    let status = settle_status(&w, c, out.status);
    let result = read_result(&w, c, status);
    let vars = c
        .query_vars
        .iter()
        .map(|v| (v.clone(), read_var(&w, c, v)))
        .collect();
    Ok(RunReport { status, steps: out.steps, trace: out.trace, world: w, result: Some(result), vars })
}

pub fn cmd_run(src: &str, query: &str, opts: &RunOptions) -> Result<RunReport, CliError> {
    let p = load_program(src)?;
    let c = compile_query(&p, query, opts)?;
    run_compiled(&c, opts.seed, opts.max_steps)
}

/// Runs a hand-written engine file.
pub fn cmd_lmntal(text: &str, seed: u64, max_steps: usize) -> Result<RunReport, CliError> {
    let mut w = parse_world(text)?;
    let out = run(&mut w, &Policy { seed, max_steps })?;
    Ok(RunReport { status: out.status, steps: out.steps, trace: out.trace, world: w, result: None, vars: Vec::new() })
}
