//! `ovq`: solvers, heavy-traffic approximations, flow moments and
//! simulation for queues with resampled rates.

mod args;
mod commands;
mod presets;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Common, Format};
use commands::Merged;
use ovq_core::ModelDescriptor;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
enum Failure {
    Core(ovq_core::Error),
    Output(String),
}

impl From<ovq_core::Error> for Failure {
    fn from(e: ovq_core::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(e) if !e.is_validation() => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Output(m) => f.write_str(m),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(text) = std::env::var("OVQ_THREADS") else { return Ok(()) };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Output(format!("OVQ_THREADS must be a positive integer, got `{text}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Output(format!("cannot configure thread pool: {e}")))
}

fn models(common: &Common) -> Result<Vec<(String, ModelDescriptor)>, Failure> {
    if let Some(p) = common.preset {
        return Ok(presets::load(p)?);
    }
    let path = common.model.as_ref().expect("clap requires --model or --preset");
    let model = ovq_core::load_model_spec(path)?;
    Ok(vec![(path.display().to_string(), model)])
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        if !dir.is_dir() {
            return Err(Failure::Output(format!("output directory {} does not exist", dir.display())));
        }
    }
    fs::write(path, text).map_err(|e| Failure::Output(format!("cannot write {}: {e}", path.display())))
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn emit(common: &Common, out: Merged) -> Result<(), Failure> {
    let text = match common.format {
        Format::Csv => out.table.to_csv(),
        Format::Json => json_text(&out.document),
    };
    match &common.out {
        Some(path) => {
            write_file(path, &text)?;
            if common.format == Format::Csv {
                let meta = path.with_extension("json");
                if meta != *path {
                    write_file(&meta, &json_text(&out.sidecar))?;
                }
            }
            Ok(())
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Output(format!("cannot write to standard output: {e}")))
        }
    }
}

fn run_each<F>(common: &Common, f: F) -> Result<(), Failure>
where
    F: Fn(&ModelDescriptor) -> ovq_core::Result<commands::Report>,
{
    let mut named = Vec::new();
    for (name, model) in models(common)? {
        named.push((name, f(&model)?));
    }
    emit(common, commands::merge(named))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Solve(a) => run_each(&a.common, |m| commands::solve(m, a)),
        Command::Compare(a) => run_each(&a.common, |m| commands::compare(m, a)),
        Command::Simulate(a) => run_each(&a.common, |m| commands::simulate_cmd(m, a)),
        Command::Moments(a) => run_each(&a.common, |m| commands::moments(m, a)),
        Command::Ht(a) => run_each(&a.common, |m| commands::ht(m, a)),
        Command::Ld(a) => run_each(&a.common, |m| commands::ld(m, a)),
        Command::Invert(a) => run_each(&a.common, |m| commands::invert(m, a)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
