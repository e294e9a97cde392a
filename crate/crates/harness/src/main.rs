//! `cdl <experiment>... --scenario <file> [--out <dir>] [--override key=value ...]`
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerics did not converge.

use std::path::PathBuf;
use std::process::ExitCode;

use cdl_harness::{load_scenario, run_batch, Experiment, HarnessError, ResultRecord};
use clap::Parser;

#[derive(Parser)]
#[command(name = "cdl", version, about = "Causality experiments with smeared qubit detectors")]
struct Cli {
    /// Experiments to run on the scenario; several run concurrently.
    #[arg(value_enum, required = true)]
    experiments: Vec<Experiment>,

    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,

    /// Directory for the CSV tables, summaries and plot scripts.
    #[arg(long, default_value = "cdl-out")]
    out: PathBuf,

    /// Replace one scenario entry, e.g. `field.N=64` or `detectors.0.coupling=0.1`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Parameter scanned by `converge`: N, fock_cutoff, dt or quad_order.
    #[arg(long)]
    param: Option<String>,

    /// Comma-separated values for `converge`.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,

    /// Observable of `converge` (commutator, response, exact_response, sorkin_slope, state).
    #[arg(long)]
    observable: Option<String>,

    /// Print the effective scenario with all defaults and exit.
    #[arg(long)]
    echo: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut overrides = cli.overrides.clone();
    if let Some(p) = &cli.param {
        overrides.push(format!("scan.parameter=\"{p}\""));
    }
    if !cli.values.is_empty() {
        let list: Vec<String> = cli.values.iter().map(|v| format!("{v:?}")).collect();
        overrides.push(format!("scan.values=[{}]", list.join(",")));
    }
    if let Some(o) = &cli.observable {
        overrides.push(format!("scan.observable=\"{o}\""));
    }

    let loaded = match load_scenario(&cli.scenario, &overrides) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            for exp in &cli.experiments {
                let doc = ResultRecord::error_summary(exp.name(), "", &e, "");
                let name = format!("{}.summary.toml", exp.name());
                if let Err(w) = write_text(&cli.out, &name, &doc) {
                    eprintln!("error: {w}");
                }
            }
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if cli.echo {
        print!("{}", loaded.echo);
        return ExitCode::SUCCESS;
    }

    let mut code = 0;
    for (exp, result) in cli.experiments.iter().zip(run_batch(&cli.experiments, &loaded)) {
        match result {
            Ok(rec) => match rec.write(&cli.out, &loaded.echo) {
                Ok(files) => report(&rec, &files),
                Err(e) => {
                    eprintln!("{}: {e}", exp.name());
                    code = code.max(e.exit_code());
                }
            },
            Err(e) => {
                eprintln!("{}: error: {e}", exp.name());
                let doc = ResultRecord::error_summary(exp.name(), &loaded.input_hash, &e, &loaded.echo);
                if let Err(w) = write_text(&cli.out, &format!("{}.summary.toml", exp.name()), &doc) {
                    eprintln!("error: {w}");
                }
                code = code.max(e.exit_code());
            }
        }
    }
    ExitCode::from(code as u8)
}

fn write_text(dir: &std::path::Path, name: &str, text: &str) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::write(dir.join(name), text))
        .map_err(|e| HarnessError::Write { path: dir.join(name).display().to_string(), message: e.to_string() })
}

fn report(rec: &ResultRecord, files: &[PathBuf]) {
    println!("{} ({:.1} s)", rec.experiment, rec.wall_clock);
    for (name, v) in &rec.scalars {
        println!("  {name:<28} {v:.6e}");
    }
    for c in &rec.claims {
        let verdict = if c.holds { "holds" } else { "FAILS" };
        println!("  claim {:<22} {:?} value {:.3e} vs {:.3e} (x{}) {verdict}", c.name, c.kind, c.value, c.reference, c.factor);
    }
    for n in &rec.notes {
        println!("  note: {n}");
    }
    for f in files {
        println!("  wrote {}", f.display());
    }
}
