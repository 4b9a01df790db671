//! `symflow-lab`: file-driven experiments over the symflow library, one
//! subcommand per experiment, CSV out.

mod config;
mod experiments;
mod table;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::Loaded;

#[derive(Parser)]
#[command(name = "symflow-lab", version, about = "Deterministic batch experiments over suspension flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Topological entropy: Perron root and block counts.
    Entropy(Common),
    /// Marker word with its disjointness and coverage certificate.
    Marker(Common),
    /// Return-time recoding with alphabet {p, q, (0, δ)}.
    RecodeDex(Common),
    /// Return-time recoding with alphabet {p, [q, q+δ]} and a marking pattern.
    RecodeDep(Common),
    /// Names of seeded flow points, decoded back to base blocks.
    GeneratorRoundtrip(Common),
    /// Orbit capacity of a union of cylinders.
    Ocap(Common),
    /// Abramov formula against the time-δ tower entropy.
    AbramovCheck(Common),
    /// Entropy identity for the first-return map to a cylinder union.
    InducedCheck(Common),
    /// Mean return time against 1/μ(A).
    KacCheck(Common),
    /// Periodic point counts and their growth.
    Periodic(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `params.seed`; defaults to 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `out`.
    #[arg(long, env = "SYMFLOW_LAB_OUT")]
    out: Option<PathBuf>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Entropy(c) => ("entropy", c),
            Command::Marker(c) => ("marker", c),
            Command::RecodeDex(c) => ("recode-dex", c),
            Command::RecodeDep(c) => ("recode-dep", c),
            Command::GeneratorRoundtrip(c) => ("generator-roundtrip", c),
            Command::Ocap(c) => ("ocap", c),
            Command::AbramovCheck(c) => ("abramov-check", c),
            Command::InducedCheck(c) => ("induced-check", c),
            Command::KacCheck(c) => ("kac-check", c),
            Command::Periodic(c) => ("periodic", c),
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Core(symflow::Error),
    Io(std::io::Error),
}

impl From<symflow::Error> for Failure {
    fn from(e: symflow::Error) -> Self {
        Failure::Core(e)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "invalid config: {m}"),
            Failure::Core(e) => e.fmt(f),
            Failure::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl Failure {
    /// Snake-case error kind, e.g. `precondition_failed`.
    fn kind(&self) -> String {
        match self {
            Failure::Config(_) => "invalid_config".into(),
            Failure::Io(_) => "io".into(),
            Failure::Core(e) => {
                let debug = format!("{e:?}");
                let name = debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("error");
                let mut out = String::new();
                for (i, c) in name.chars().enumerate() {
                    if c.is_uppercase() && i > 0 {
                        out.push('_');
                    }
                    out.push(c.to_ascii_lowercase());
                }
                out
            }
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Core(symflow::Error::PreconditionFailed(_)) => 2,
            _ => 1,
        }
    }
}

fn run(name: &str, args: &Common) -> Result<(), Failure> {
    let mut cx = Loaded::read(&args.config)?;
    if let Some(e) = &cx.config.experiment {
        if e != name {
            return Err(Failure::Config(format!("config is for `{e}`, not `{name}`")));
        }
    }
    let seed = args.seed.or(cx.config.params.seed).unwrap_or(0);
    let out = args
        .out
        .clone()
        .or_else(|| cx.config.out.as_ref().map(|o| cx.dir.join(o)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let (_, runner) = experiments::EXPERIMENTS
        .iter()
        .find(|(n, _)| *n == name)
        .expect("every subcommand has a runner");
    let start = Instant::now();
    let table = runner(&mut cx, seed)?;
    let path = table.write(&out, name, &cx.hash(name, seed), seed)?;
    eprintln!("{name}: wrote {} in {:.2?}", path.display(), start.elapsed());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = cli.command.parts();
    match run(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = json!({ "experiment": name, "error": e.kind(), "message": e.to_string() });
            println!("{report}");
            eprintln!("{name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
