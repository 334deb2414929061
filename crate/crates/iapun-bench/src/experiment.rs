//! Cell execution, result verification, and the scaling-slope fit.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use iapun::{
    finite_diff_grad, run, run_gda, run_inexact_appa, BaselineConfig, IapunParams,
    MinimaxProblem, RunCaps,
};

use crate::config::{ExperimentConfig, OutputFormat, SolverConfig};
use crate::records::{rows_from_epochs, rows_from_segments, write_csv, write_json, RunRecord};
use crate::BenchError;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `|grad Phi|` at `x` measured by the instance's reference surface — the
/// verification channel, independent of anything the solvers computed.
fn verified_grad_norm(problem: &MinimaxProblem, x: &[f64]) -> Result<f64, BenchError> {
    let reference = problem.reference().ok_or_else(|| {
        BenchError::Config(
            "instance carries no reference surface; results cannot be verified".into(),
        )
    })?;
    Ok(norm(&reference.grad_phi(x)))
}

/// Runs every (solver, eps) cell of the config in declared order —
/// solver-major — verifies each final point against the reference surface,
/// and writes the record file before returning.
///
/// A cell that stalls or ends above its target becomes a failed record and
/// the experiment continues; only configuration-level problems abort.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>, BenchError> {
    config.validate()?;
    let instance_id = config.instance.id();
    let mut records = Vec::with_capacity(config.solvers.len() * config.eps_grid.len());
    for solver in &config.solvers {
        for &eps in &config.eps_grid {
            let (problem, start) = config.instance.build(eps)?;
            let started = Instant::now();
            let mut record = run_cell(solver, &problem, &start, eps, &instance_id)?;
            record.wall_ms = started.elapsed().as_secs_f64() * 1e3;
            records.push(record);
        }
    }
    write_records(&config.out, config.format, &records)?;
    Ok(records)
}

/// Writes records to `path` in the requested format, creating parent
/// directories as needed.
pub fn write_records(
    path: &Path,
    format: OutputFormat,
    records: &[RunRecord],
) -> Result<(), BenchError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let file = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(file, records),
        OutputFormat::Json => write_json(file, records),
    }
}

fn run_cell(
    solver: &SolverConfig,
    problem: &MinimaxProblem,
    start: &[f64],
    eps: f64,
    instance_id: &str,
) -> Result<RunRecord, BenchError> {
    let mut record = RunRecord {
        solver: solver.id().to_string(),
        instance: instance_id.to_string(),
        eps,
        epochs: 0,
        f_calls: 0,
        grad_x_calls: 0,
        grad_y_calls: 0,
        final_grad_norm: None,
        success: false,
        failure: String::new(),
        wall_ms: 0.0,
        rows: Vec::new(),
    };
    match solver {
        SolverConfig::Iapun { max_epochs, max_inner } => {
            let mut caps = RunCaps::default();
            if let Some(m) = max_epochs {
                caps.max_epochs = *m;
            }
            if let Some(m) = max_inner {
                caps.max_inner = *m;
            }
            let params = match IapunParams::derive(problem.spec(), eps) {
                Ok(params) => params,
                Err(e) => {
                    record.failure = format!("parameter schedule rejected: {e}");
                    record.final_grad_norm = Some(verified_grad_norm(problem, start)?);
                    return Ok(record);
                }
            };
            match run(problem, start, &params, &caps) {
                Ok(out) => {
                    record.rows = rows_from_epochs(&out.epochs);
                    record.epochs = out.epochs.len();
                    record.f_calls = out.counts.f;
                    record.grad_x_calls = out.counts.grad_x;
                    record.grad_y_calls = out.counts.grad_y;
                    finish(&mut record, problem, &out.p)?;
                }
                Err(err) => {
                    record.rows = rows_from_epochs(&err.epochs);
                    record.epochs = err.epochs.len();
                    record.f_calls = err.counts.f;
                    record.grad_x_calls = err.counts.grad_x;
                    record.grad_y_calls = err.counts.grad_y;
                    record.failure = err.to_string();
                    let last = err.epochs.last().map(|e| e.end.as_slice()).unwrap_or(start);
                    record.final_grad_norm = Some(verified_grad_norm(problem, last)?);
                }
            }
        }
        SolverConfig::InexactAppa { max_outer } => {
            let mut config = BaselineConfig::inexact_appa(eps);
            if let Some(m) = max_outer {
                config.max_outer = *m;
            }
            // thin the trace so records stay bounded when fine targets take
            // millions of outer steps; a pure function of the config, so
            // reruns stay byte-identical
            config.check_every = (config.max_outer / 2000).max(1);
            match run_inexact_appa(problem, start, &config) {
                Ok(out) => {
                    record.rows = rows_from_epochs(&out.epochs);
                    record.epochs = out.epochs.last().map(|e| e.k).unwrap_or(0);
                    record.f_calls = out.counts.f;
                    record.grad_x_calls = out.counts.grad_x;
                    record.grad_y_calls = out.counts.grad_y;
                    finish(&mut record, problem, &out.p)?;
                }
                Err(err) => {
                    record.rows = rows_from_epochs(&err.epochs);
                    record.epochs = err.epochs.last().map(|e| e.k).unwrap_or(0);
                    record.f_calls = err.counts.f;
                    record.grad_x_calls = err.counts.grad_x;
                    record.grad_y_calls = err.counts.grad_y;
                    record.failure = err.to_string();
                    let last = err.epochs.last().map(|e| e.end.as_slice()).unwrap_or(start);
                    record.final_grad_norm = Some(verified_grad_norm(problem, last)?);
                }
            }
        }
        SolverConfig::Gda { max_outer } => {
            let mut config = BaselineConfig::gda(eps);
            if let Some(m) = max_outer {
                config.max_outer = *m;
            }
            let y0 = vec![0.0; problem.dim_y()];
            match run_gda(problem, start, &y0, &config) {
                Ok(out) => {
                    record.rows = rows_from_segments(&out.segments);
                    record.epochs = out.segments.last().map(|s| s.steps).unwrap_or(0);
                    record.f_calls = out.counts.f;
                    record.grad_x_calls = out.counts.grad_x;
                    record.grad_y_calls = out.counts.grad_y;
                    finish(&mut record, problem, &out.x)?;
                }
                Err(err) => {
                    record.rows = rows_from_segments(&err.segments);
                    record.epochs = err.segments.last().map(|s| s.steps).unwrap_or(0);
                    record.f_calls = err.counts.f;
                    record.grad_x_calls = err.counts.grad_x;
                    record.grad_y_calls = err.counts.grad_y;
                    record.failure = err.error.to_string();
                    // a failed descent-ascent run reports no final iterate,
                    // so there is nothing to verify
                }
            }
        }
    }
    Ok(record)
}

/// Verifies a solver's claimed stationary point; a claim the reference
/// does not confirm becomes a failed record.
fn finish(
    record: &mut RunRecord,
    problem: &MinimaxProblem,
    point: &[f64],
) -> Result<(), BenchError> {
    let verified = verified_grad_norm(problem, point)?;
    record.final_grad_norm = Some(verified);
    if verified <= record.eps {
        record.success = true;
    } else {
        record.failure = format!(
            "solver reported a stationary point but the reference gradient norm \
             {verified} exceeds eps = {}",
            record.eps
        );
    }
    Ok(())
}

/// Least-squares slope of `log(total gradient calls)` against `log(1/eps)`
/// over a solver's successful records. Needs at least three points, all
/// from one instance family.
pub fn slope_fit(records: &[RunRecord], solver: &str) -> Result<f64, BenchError> {
    let points: Vec<&RunRecord> = records
        .iter()
        .filter(|r| r.solver == solver && r.success)
        .collect();
    if points.len() < 3 {
        return Err(BenchError::InsufficientData(format!(
            "solver {solver} has {} successful records; the slope fit needs at least 3",
            points.len()
        )));
    }
    if points.iter().any(|r| r.instance != points[0].instance) {
        return Err(BenchError::Config(format!(
            "slope fit for {solver} mixes records from different instances"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|r| -r.eps.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|r| (r.grad_total() as f64).ln()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        cov += (x - x_mean) * (y - y_mean);
        var += (x - x_mean) * (x - x_mean);
    }
    if var == 0.0 {
        return Err(BenchError::InsufficientData(format!(
            "solver {solver} records share a single eps; no slope is identifiable"
        )));
    }
    Ok(cov / var)
}

/// Checks the instance's own gradients against central finite differences
/// of its value oracle at `points` seeded random probe points. Returns the
/// worst relative error over both gradient blocks.
pub fn probe_gradients(
    problem: &MinimaxProblem,
    seed: u64,
    points: usize,
) -> Result<f64, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x: Vec<f64> = (0..problem.dim_x()).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let y: Vec<f64> = (0..problem.dim_y()).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let gx = problem.raw_grad_x(&x, &y)?;
        let gy = problem.raw_grad_y(&x, &y)?;
        let fd_x = finite_diff_grad(|v: &[f64]| problem.raw_value(v, &y).unwrap(), &x, None);
        let fd_y = finite_diff_grad(|v: &[f64]| problem.raw_value(&x, v).unwrap(), &y, None);
        let err_x = norm(&sub(&fd_x, &gx)) / (1.0 + norm(&gx));
        let err_y = norm(&sub(&fd_y, &gy)) / (1.0 + norm(&gy));
        worst = worst.max(err_x).max(err_y);
    }
    Ok(worst)
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
