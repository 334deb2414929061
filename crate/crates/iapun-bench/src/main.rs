//! Command-line front end: `run` executes an experiment config, `validate`
//! checks one without running, `slopes` fits scaling exponents from a
//! record file. Exit codes: 0 success, 1 bad config or input, 2 at least
//! one experiment cell failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use iapun_bench::{
    read_csv, read_json, run_experiment, slope_fit, BenchError, ExperimentConfig, OutputFormat,
    RunRecord,
};

#[derive(Parser)]
#[command(
    name = "iapun-bench",
    about = "Minimax solver benchmark harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (solver, eps) cell of a config and write the records.
    Run {
        config: PathBuf,
        /// Write records here instead of the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format override.
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
        /// Cap epochs (outer iterations for baselines) for every solver.
        #[arg(long)]
        cap_epochs: Option<usize>,
        /// Cap inner steps per epoch of the certified solver.
        #[arg(long)]
        cap_inner: Option<usize>,
    },
    /// Parse and validate a config, probing instance gradients, then exit.
    Validate { config: PathBuf },
    /// Fit per-solver scaling slopes from a record file (.csv or .json).
    Slopes { records: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out, format, cap_epochs, cap_inner } => {
            cmd_run(&config, out, format, cap_epochs, cap_inner)
        }
        Command::Validate { config } => cmd_validate(&config),
        Command::Slopes { records } => cmd_slopes(&records),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_run(
    config_path: &Path,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    cap_epochs: Option<usize>,
    cap_inner: Option<usize>,
) -> Result<ExitCode, BenchError> {
    let mut config = ExperimentConfig::from_path(config_path)?;
    if let Some(out) = out {
        config.out = out;
    }
    if let Some(format) = format {
        config.format = format;
    }
    config.apply_caps(cap_epochs, cap_inner);
    let records = run_experiment(&config)?;
    let mut failed = 0usize;
    for record in &records {
        if record.success {
            println!(
                "{} on {} at eps={}: ok, {} epochs, {} gradient calls, |grad|={:.3e}",
                record.solver,
                record.instance,
                record.eps,
                record.epochs,
                record.grad_total(),
                record.final_grad_norm.unwrap_or(f64::NAN)
            );
        } else {
            failed += 1;
            println!(
                "{} on {} at eps={}: FAILED after {} epochs: {}",
                record.solver, record.instance, record.eps, record.epochs, record.failure
            );
        }
    }
    println!(
        "wrote {} records to {}",
        records.len(),
        config.out.display()
    );
    Ok(if failed > 0 {
        eprintln!("{failed} of {} cells failed", records.len());
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_validate(config_path: &Path) -> Result<ExitCode, BenchError> {
    let config = ExperimentConfig::from_path(config_path)?;
    // one instance per grid accuracy, probed at seeded random points
    let mut worst = 0.0f64;
    for &eps in &config.eps_grid {
        let (problem, _) = config.instance.build(eps)?;
        worst = worst.max(iapun_bench::probe_gradients(&problem, config.seed, 3)?);
    }
    if worst > 1e-4 {
        return Err(BenchError::Config(format!(
            "instance gradients disagree with finite differences: relative error {worst:.3e}"
        )));
    }
    println!(
        "config valid: {} solvers x {} accuracies on {}, gradient probes max rel err {:.3e}",
        config.solvers.len(),
        config.eps_grid.len(),
        config.instance.id(),
        worst
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_slopes(records_path: &Path) -> Result<ExitCode, BenchError> {
    let file = std::fs::File::open(records_path)
        .map_err(|e| BenchError::Config(format!("cannot open {}: {e}", records_path.display())))?;
    let records: Vec<RunRecord> =
        if records_path.extension().is_some_and(|ext| ext == "json") {
            read_json(file)?
        } else {
            read_csv(file)?
        };
    let mut solvers: Vec<&str> = Vec::new();
    for record in &records {
        if !solvers.contains(&record.solver.as_str()) {
            solvers.push(&record.solver);
        }
    }
    if solvers.is_empty() {
        return Err(BenchError::InsufficientData("record file is empty".into()));
    }
    let mut fitted = 0usize;
    for solver in &solvers {
        match slope_fit(&records, solver) {
            Ok(slope) => {
                fitted += 1;
                let n = records
                    .iter()
                    .filter(|r| r.solver == *solver && r.success)
                    .count();
                println!("{solver}: slope {slope:.4} over {n} successful records");
            }
            Err(e) => println!("{solver}: no fit ({e})"),
        }
    }
    if fitted == 0 {
        return Err(BenchError::InsufficientData(
            "no solver has enough successful records for a fit".into(),
        ));
    }
    Ok(ExitCode::SUCCESS)
}
