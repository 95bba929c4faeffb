//! CSV output shared by both experiments.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which round-trips every `f64` and keeps output byte-stable per seed.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::record::TrainingRecord;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv write failed: {e}"))
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))
}

/// `row,col,re,im`, row-major.
pub fn write_matrix_csv<W: Write>(m: &ComplexMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "col", "re", "im"]).map_err(csv_err)?;
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let z = m.get(r, c);
            w.write_record([r.to_string(), c.to_string(), fmt_f64(z.re), fmt_f64(z.im)])
                .map_err(csv_err)?;
        }
    }
    finish(w)
}

/// `iteration,eta,nrmse`, one row per training iteration.
pub fn write_nrmse_csv<W: Write>(record: &TrainingRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "eta", "nrmse"]).map_err(csv_err)?;
    for row in record.rows() {
        w.write_record([row.iteration.to_string(), fmt_f64(row.eta), fmt_f64(row.nrmse)])
            .map_err(csv_err)?;
    }
    finish(w)
}

/// Per-iteration solver statistics for the medium experiment.
pub fn write_solver_csv<W: Write>(record: &TrainingRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "iteration",
        "forward_iterations",
        "forward_residual",
        "adjoint_iterations",
        "adjoint_residual",
        "retried",
    ])
    .map_err(csv_err)?;
    for row in record.rows() {
        if let Some(s) = &row.solver {
            w.write_record([
                row.iteration.to_string(),
                s.forward_iterations.to_string(),
                fmt_f64(s.forward_residual),
                s.adjoint_iterations.to_string(),
                fmt_f64(s.adjoint_residual),
                u8::from(s.retried).to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(w)
}

/// Generic table writer: a header plus rows of already formatted fields.
pub fn write_table<W: Write>(header: &[&str], rows: &[Vec<String>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    finish(w)
}
