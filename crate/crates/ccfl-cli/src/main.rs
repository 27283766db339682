use std::path::PathBuf;
use std::process::ExitCode;

use ccfl::Strategy;
use ccfl_cli::{
    cmd_compile, cmd_lmntal, cmd_run, parse_bind, read_file, write_file, CliError, RunOptions, RunReport,
    DEFAULT_MAX_STEPS,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ccfl", version, about = "Compile and run CCFL programs as graph rewriting")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the compiled rules (and the query world when given).
    Compile {
        file: PathBuf,
        #[arg(long)]
        query: Option<String>,
        #[arg(long, value_enum, default_value = "lmntal")]
        emit: Emit,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a query.
    Run {
        file: PathBuf,
        #[arg(long)]
        query: String,
        /// Fix a free query variable, as NAME=INTEGER.
        #[arg(long = "bind")]
        binds: Vec<String>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: Outputs,
    },
    /// Run an engine-format file directly.
    Lmntal {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[command(flatten)]
        out: Outputs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Lmntal,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "cbv")]
    strategy: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    /// Compile known saturated calls directly instead of through `app`.
    #[arg(long)]
    inline_app: bool,
}

#[derive(Args)]
struct Outputs {
    /// Write one line per rewrite step.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the final world as Graphviz.
    #[arg(long)]
    dot: Option<PathBuf>,
}

impl Common {
    fn options(&self, binds: &[String]) -> Result<RunOptions, CliError> {
        Ok(RunOptions {
            strategy: self.strategy,
            seed: self.seed,
            max_steps: self.max_steps,
            inline_app: self.inline_app,
            binds: binds.iter().map(|b| parse_bind(b)).collect::<Result<_, _>>()?,
        })
    }
}

fn report(r: &RunReport, out: &Outputs) -> Result<i32, CliError> {
    if let Some(p) = &out.trace {
        write_file(p, &r.trace_text())?;
    }
    if let Some(p) = &out.dot {
        write_file(p, &hgraph::to_dot(&r.world))?;
    }
    match &r.result {
        Some(v) => println!("{v}"),
        None => print!("{}", hgraph::serialize(&r.world)),
    }
    for (name, value) in &r.vars {
        if let Some(t) = value {
            println!("{name} = {t}");
        }
    }
    println!("status: {}, steps: {}", r.status, r.steps);
    Ok(r.exit_code())
}

fn main_inner(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Compile { file, query, emit: Emit::Lmntal, common } => {
            let src = read_file(&file)?;
            print!("{}", cmd_compile(&src, query.as_deref(), &common.options(&[])?)?);
            Ok(0)
        }
        Cmd::Run { file, query, binds, common, out } => {
            let src = read_file(&file)?;
            report(&cmd_run(&src, &query, &common.options(&binds)?)?, &out)
        }
        Cmd::Lmntal { file, seed, max_steps, out } => report(&cmd_lmntal(&read_file(&file)?, seed, max_steps)?, &out),
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
