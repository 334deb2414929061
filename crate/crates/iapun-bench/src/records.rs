//! Run records and their file encodings.
//!
//! CSV layout: one header plus two row kinds, distinguished by the first
//! column. A `run` row carries the record summary, and is followed by its
//! `epoch` rows in order. The column order is fixed:
//!
//! ```text
//! kind,solver,instance,eps,epoch,t_k,flag,descent,
//! cum_f,cum_grad_x,cum_grad_y,
//! epochs,f_calls,grad_x_calls,grad_y_calls,final_grad_norm,success,failure,wall_ms
//! ```
//!
//! Cells not applicable to a row kind stay empty. Floats are written in
//! shortest round-trip form, so `parse(write(records)) == records`, and a
//! rerun of the same config reproduces the file byte for byte except for
//! the `wall_ms` column — which is last, so [`csv_without_wall_time`]
//! can strip it for determinism comparisons. JSON holds the same records
//! nested, via serde.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use iapun::{EpochTrace, GdaSegment};

use crate::BenchError;

/// Fixed CSV column order; the reader rejects files with any other header.
pub const CSV_HEADER: [&str; 19] = [
    "kind",
    "solver",
    "instance",
    "eps",
    "epoch",
    "t_k",
    "flag",
    "descent",
    "cum_f",
    "cum_grad_x",
    "cum_grad_y",
    "epochs",
    "f_calls",
    "grad_x_calls",
    "grad_y_calls",
    "final_grad_norm",
    "success",
    "failure",
    "wall_ms",
];

/// One completed epoch (or baseline checkpoint) of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    /// Progress index: the epoch number (1-based) for proximal solvers, or
    /// cumulative gradient steps (0 at the start measurement) for
    /// descent-ascent checkpoints. Strictly increasing within a record;
    /// proximal baselines record thinned traces at a cadence, so indices
    /// may skip.
    pub epoch: usize,
    /// Inner steps the epoch took; for descent-ascent checkpoints, the
    /// gradient steps since the previous checkpoint.
    pub t_k: usize,
    /// Terminal verdict label, or `segment` for descent-ascent checkpoints.
    pub flag: String,
    /// Envelope descent achieved by the epoch; for the first descent-ascent
    /// checkpoint there is no earlier measurement and the cell holds 0.
    pub descent: f64,
    /// Cumulative value queries at the end of the epoch.
    pub cum_f: u64,
    /// Cumulative primal gradient queries.
    pub cum_grad_x: u64,
    /// Cumulative dual gradient queries.
    pub cum_grad_y: u64,
}

impl EpochRow {
    /// Row for one solver epoch; trace counts are already cumulative.
    pub fn from_trace(trace: &EpochTrace) -> Self {
        Self {
            epoch: trace.k,
            t_k: trace.t_k,
            flag: trace.final_flag().label().to_string(),
            descent: trace.descent_est,
            cum_f: trace.oracle_calls.f,
            cum_grad_x: trace.oracle_calls.grad_x,
            cum_grad_y: trace.oracle_calls.grad_y,
        }
    }
}

/// Rows for a full epoch trace.
pub fn rows_from_epochs(epochs: &[EpochTrace]) -> Vec<EpochRow> {
    epochs.iter().map(EpochRow::from_trace).collect()
}

/// Rows for a descent-ascent run, one per stationarity checkpoint, indexed
/// by cumulative gradient steps. The descent cell is the envelope change
/// between consecutive checkpoints.
pub fn rows_from_segments(segments: &[GdaSegment]) -> Vec<EpochRow> {
    let mut rows = Vec::with_capacity(segments.len());
    let mut prev: Option<(usize, f64)> = None;
    for seg in segments {
        rows.push(EpochRow {
            epoch: seg.steps,
            t_k: prev.map(|(s, _)| seg.steps - s).unwrap_or(0),
            flag: "segment".to_string(),
            descent: prev.map(|(_, p)| seg.phi - p).unwrap_or(0.0),
            cum_f: seg.oracle_calls.f,
            cum_grad_x: seg.oracle_calls.grad_x,
            cum_grad_y: seg.oracle_calls.grad_y,
        });
        prev = Some((seg.steps, seg.phi));
    }
    rows
}

/// One (solver, instance, eps) cell of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub solver: String,
    pub instance: String,
    pub eps: f64,
    /// Outer progress completed, in the solver's own units: certified-run
    /// epochs, proximal-baseline outer steps, or descent-ascent gradient
    /// steps. Equals the last row's `epoch` index (traces may be thinned,
    /// so this can exceed `rows.len()`).
    pub epochs: usize,
    pub f_calls: u64,
    pub grad_x_calls: u64,
    pub grad_y_calls: u64,
    /// `|grad Phi|` at the final point, measured by the instance's
    /// reference surface, not by the solver's own estimate. Absent when a
    /// failed run left no final iterate to verify.
    pub final_grad_norm: Option<f64>,
    pub success: bool,
    /// Diagnostic for failed cells; empty on success.
    pub failure: String,
    /// Wall-clock duration; excluded from determinism comparisons.
    pub wall_ms: f64,
    pub rows: Vec<EpochRow>,
}

impl RunRecord {
    /// Total gradient queries of both kinds — the quantity whose scaling
    /// in `1/eps` the slope fit measures.
    pub fn grad_total(&self) -> u64 {
        self.grad_x_calls + self.grad_y_calls
    }

    /// Enforces the documented record invariants; both readers call this
    /// on every parsed record.
    pub fn validate(&self) -> Result<(), BenchError> {
        match self.rows.last() {
            None => {
                if self.epochs != 0 {
                    return Err(BenchError::Parse(format!(
                        "record {}/{}/{}: claims {} epochs but has no rows",
                        self.solver, self.instance, self.eps, self.epochs
                    )));
                }
            }
            Some(last) => {
                if last.epoch != self.epochs {
                    return Err(BenchError::Parse(format!(
                        "record {}/{}/{}: epochs field {} does not match the \
                         final row index {}",
                        self.solver, self.instance, self.eps, self.epochs, last.epoch
                    )));
                }
            }
        }
        for pair in self.rows.windows(2) {
            if pair[1].epoch <= pair[0].epoch {
                return Err(BenchError::Parse(format!(
                    "record {}/{}/{}: row indices not strictly increasing at {}",
                    self.solver, self.instance, self.eps, pair[1].epoch
                )));
            }
        }
        if self.success != self.failure.is_empty() {
            return Err(BenchError::Parse(format!(
                "record {}/{}/{}: success flag disagrees with failure text {:?}",
                self.solver, self.instance, self.eps, self.failure
            )));
        }
        if self.success && !self.final_grad_norm.is_some_and(|g| g <= self.eps) {
            return Err(BenchError::Parse(format!(
                "record {}/{}/{}: claims success but verified gradient norm {:?} exceeds eps",
                self.solver, self.instance, self.eps, self.final_grad_norm
            )));
        }
        let mut prev = (0u64, 0u64, 0u64);
        for row in &self.rows {
            let cur = (row.cum_f, row.cum_grad_x, row.cum_grad_y);
            if cur.0 < prev.0 || cur.1 < prev.1 || cur.2 < prev.2 {
                return Err(BenchError::Parse(format!(
                    "record {}/{}/{}: cumulative counts decrease at epoch {}",
                    self.solver, self.instance, self.eps, row.epoch
                )));
            }
            prev = cur;
        }
        let totals = (self.f_calls, self.grad_x_calls, self.grad_y_calls);
        if prev.0 > totals.0 || prev.1 > totals.1 || prev.2 > totals.2 {
            return Err(BenchError::Parse(format!(
                "record {}/{}/{}: epoch counts exceed the run totals",
                self.solver, self.instance, self.eps
            )));
        }
        Ok(())
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Writes records as CSV in the documented column order.
pub fn write_csv<W: Write>(writer: W, records: &[RunRecord]) -> Result<(), BenchError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CSV_HEADER)?;
    for record in records {
        out.write_record([
            "run",
            &record.solver,
            &record.instance,
            &fmt_f64(record.eps),
            "",
            "",
            "",
            "",
            "",
            "",
            "",
            &record.epochs.to_string(),
            &record.f_calls.to_string(),
            &record.grad_x_calls.to_string(),
            &record.grad_y_calls.to_string(),
            &record.final_grad_norm.map(fmt_f64).unwrap_or_default(),
            if record.success { "true" } else { "false" },
            &record.failure,
            &fmt_f64(record.wall_ms),
        ])?;
        for row in &record.rows {
            out.write_record([
                "epoch",
                &record.solver,
                &record.instance,
                &fmt_f64(record.eps),
                &row.epoch.to_string(),
                &row.t_k.to_string(),
                &row.flag,
                &fmt_f64(row.descent),
                &row.cum_f.to_string(),
                &row.cum_grad_x.to_string(),
                &row.cum_grad_y.to_string(),
                "",
                "",
                "",
                "",
                "",
                "",
                "",
                "",
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn field<'a>(row: &'a csv::StringRecord, idx: usize, line: u64) -> Result<&'a str, BenchError> {
    row.get(idx)
        .ok_or_else(|| BenchError::Parse(format!("line {line}: missing column {idx}")))
}

fn parse_cell<T: std::str::FromStr>(
    row: &csv::StringRecord,
    idx: usize,
    line: u64,
) -> Result<T, BenchError>
where
    T::Err: std::fmt::Display,
{
    let raw = field(row, idx, line)?;
    raw.parse().map_err(|e| {
        BenchError::Parse(format!(
            "line {line}: bad {} value {raw:?}: {e}",
            CSV_HEADER[idx]
        ))
    })
}

/// Reads records from CSV, validating the header, the row structure, and
/// every record invariant.
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<RunRecord>, BenchError> {
    let mut input = csv::Reader::from_reader(reader);
    let header = input.headers()?;
    if header.iter().ne(CSV_HEADER) {
        return Err(BenchError::Parse(format!(
            "unexpected CSV header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records: Vec<RunRecord> = Vec::new();
    for row in input.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        match field(&row, 0, line)? {
            "run" => records.push(RunRecord {
                solver: field(&row, 1, line)?.to_string(),
                instance: field(&row, 2, line)?.to_string(),
                eps: parse_cell(&row, 3, line)?,
                epochs: parse_cell(&row, 11, line)?,
                f_calls: parse_cell(&row, 12, line)?,
                grad_x_calls: parse_cell(&row, 13, line)?,
                grad_y_calls: parse_cell(&row, 14, line)?,
                final_grad_norm: if field(&row, 15, line)?.is_empty() {
                    None
                } else {
                    Some(parse_cell(&row, 15, line)?)
                },
                success: parse_cell(&row, 16, line)?,
                failure: field(&row, 17, line)?.to_string(),
                wall_ms: parse_cell(&row, 18, line)?,
                rows: Vec::new(),
            }),
            "epoch" => {
                let record = records.last_mut().ok_or_else(|| {
                    BenchError::Parse(format!("line {line}: epoch row before any run row"))
                })?;
                let solver = field(&row, 1, line)?;
                let instance = field(&row, 2, line)?;
                let eps: f64 = parse_cell(&row, 3, line)?;
                if solver != record.solver || instance != record.instance || eps != record.eps {
                    return Err(BenchError::Parse(format!(
                        "line {line}: epoch row keys {solver}/{instance}/{eps} do not match \
                         the preceding run row"
                    )));
                }
                record.rows.push(EpochRow {
                    epoch: parse_cell(&row, 4, line)?,
                    t_k: parse_cell(&row, 5, line)?,
                    flag: field(&row, 6, line)?.to_string(),
                    descent: parse_cell(&row, 7, line)?,
                    cum_f: parse_cell(&row, 8, line)?,
                    cum_grad_x: parse_cell(&row, 9, line)?,
                    cum_grad_y: parse_cell(&row, 10, line)?,
                });
            }
            other => {
                return Err(BenchError::Parse(format!(
                    "line {line}: unknown row kind {other:?}"
                )))
            }
        }
    }
    for record in &records {
        record.validate()?;
    }
    Ok(records)
}

/// Writes the full nested records as pretty JSON.
pub fn write_json<W: Write>(writer: W, records: &[RunRecord]) -> Result<(), BenchError> {
    serde_json::to_writer_pretty(writer, records)?;
    Ok(())
}

/// Reads records from JSON, validating every record invariant.
pub fn read_json<R: Read>(reader: R) -> Result<Vec<RunRecord>, BenchError> {
    let records: Vec<RunRecord> = serde_json::from_reader(reader)?;
    for record in &records {
        record.validate()?;
    }
    Ok(records)
}

/// Drops the trailing wall-time column from every CSV line, for
/// byte-determinism comparisons. The column is numeric or empty and always
/// last, so splitting at the final comma is exact.
pub fn csv_without_wall_time(text: &str) -> String {
    text.lines()
        .map(|line| line.rsplit_once(',').map(|(head, _)| head).unwrap_or(line))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_records() -> Vec<RunRecord> {
        vec![
            RunRecord {
                solver: "iapun".into(),
                instance: "coupled-quadratic".into(),
                eps: 10f64.powf(-2.5),
                epochs: 2,
                f_calls: 400,
                grad_x_calls: 210,
                grad_y_calls: 190,
                final_grad_norm: Some(0.0021),
                success: true,
                failure: String::new(),
                wall_ms: 12.25,
                rows: vec![
                    EpochRow {
                        epoch: 1,
                        t_k: 7,
                        flag: "prior-descent".into(),
                        descent: -0.125,
                        cum_f: 150,
                        cum_grad_x: 80,
                        cum_grad_y: 70,
                    },
                    EpochRow {
                        epoch: 2,
                        t_k: 9,
                        flag: "prox-stationary".into(),
                        descent: -3.2e-5,
                        cum_f: 390,
                        cum_grad_x: 205,
                        cum_grad_y: 185,
                    },
                ],
            },
            RunRecord {
                solver: "gda".into(),
                instance: "coupled-quadratic".into(),
                eps: 0.001,
                epochs: 0,
                f_calls: 3,
                grad_x_calls: 1,
                grad_y_calls: 2,
                final_grad_norm: None,
                success: false,
                failure: "stalled: step cap reached, norm 0.5, \"quoted, with comma\"".into(),
                wall_ms: 0.75,
                rows: vec![],
            },
        ]
    }

    #[test]
    fn csv_round_trips() {
        let records = sample_records();
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let parsed = read_csv(buf.as_slice()).unwrap();
        assert_eq!(parsed, records);
    }

    #[test]
    fn json_round_trips() {
        let records = sample_records();
        let mut buf = Vec::new();
        write_json(&mut buf, &records).unwrap();
        let parsed = read_json(buf.as_slice()).unwrap();
        assert_eq!(parsed, records);
    }

    #[test]
    fn header_line_is_the_documented_order() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    }

    #[test]
    fn wall_time_stripping_equalizes_reruns() {
        let records = sample_records();
        let mut again = records.clone();
        again[0].wall_ms = 99.0;
        again[1].wall_ms = 0.001;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_csv(&mut a, &records).unwrap();
        write_csv(&mut b, &again).unwrap();
        assert_ne!(a, b);
        let a = String::from_utf8(a).unwrap();
        let b = String::from_utf8(b).unwrap();
        assert_eq!(csv_without_wall_time(&a), csv_without_wall_time(&b));
    }

    #[test]
    fn thinned_traces_round_trip() {
        // a proximal-baseline record whose rows skip at a cadence: the
        // epochs field carries the true outer-step count, not the row count
        let record = RunRecord {
            solver: "inexact-appa".into(),
            instance: "valley".into(),
            eps: 0.01,
            epochs: 1100,
            f_calls: 9000,
            grad_x_calls: 5000,
            grad_y_calls: 4000,
            final_grad_norm: Some(0.009),
            success: true,
            failure: String::new(),
            wall_ms: 3.5,
            rows: vec![
                EpochRow {
                    epoch: 500,
                    t_k: 1,
                    flag: "null".into(),
                    descent: -0.1,
                    cum_f: 4000,
                    cum_grad_x: 2000,
                    cum_grad_y: 1500,
                },
                EpochRow {
                    epoch: 1100,
                    t_k: 1,
                    flag: "prox-stationary".into(),
                    descent: -1e-6,
                    cum_f: 8800,
                    cum_grad_x: 4900,
                    cum_grad_y: 3900,
                },
            ],
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, std::slice::from_ref(&record)).unwrap();
        let parsed = read_csv(buf.as_slice()).unwrap();
        assert_eq!(parsed, vec![record]);
    }

    #[test]
    fn epochs_field_must_match_the_final_row_index() {
        let mut records = sample_records();
        records[0].epochs = 7;
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let err = read_csv(buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("final row index"), "{err}");
    }

    #[test]
    fn row_indices_must_strictly_increase() {
        let mut records = sample_records();
        records[0].rows[1].epoch = 1;
        records[0].epochs = 1;
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let err = read_csv(buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("strictly increasing"), "{err}");
    }

    #[test]
    fn decreasing_cumulative_counts_are_rejected() {
        let mut records = sample_records();
        records[0].rows[1].cum_f = 10;
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let err = read_csv(buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("decrease"), "{err}");
    }

    #[test]
    fn claimed_success_above_target_is_rejected() {
        let mut records = sample_records();
        records[0].final_grad_norm = Some(1.0);
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let err = read_csv(buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("exceeds eps"), "{err}");
    }

    #[test]
    fn epoch_row_with_mismatched_keys_is_rejected() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &sample_records()).unwrap();
        let text = String::from_utf8(buf).unwrap().replace(
            "epoch,iapun,coupled-quadratic,0.0031622776601683794,2",
            "epoch,iapun,valley,0.0031622776601683794,2",
        );
        let err = read_csv(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("do not match"), "{err}");
    }
}
