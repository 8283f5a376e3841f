//! JSON and CSV files.
//!
//! JSON documents are wrapped as `{"schema_version": 1, "kind": ..., "data": ...}`.
//! Floats are written in the shortest form that parses back to the same bits.
//! CSV files have a header row and one row per grid node, with every number in
//! `{:.16e}` (17 significant digits).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use qwell_sp_core::halfline::{LimitSolution, ScalingReport};
use qwell_sp_core::lab::ConvergenceReport;
use qwell_sp_core::scf::{FirstLevelSolution, SPSolution};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// A type stored as a versioned JSON document.
pub trait Artifact: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

impl Artifact for SPSolution {
    const KIND: &'static str = "full-solution";
}

impl Artifact for FirstLevelSolution {
    const KIND: &'static str = "first-level-solution";
}

impl Artifact for LimitSolution {
    const KIND: &'static str = "limit-solution";
}

impl Artifact for ConvergenceReport {
    const KIND: &'static str = "convergence-report";
}

impl Artifact for ScalingReport {
    const KIND: &'static str = "scaling-report";
}

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    schema_version: u32,
    kind: &'a str,
    data: &'a T,
}

#[derive(Deserialize)]
struct EnvelopeIn<T> {
    schema_version: u32,
    kind: String,
    data: T,
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
        }
        _ => Ok(()),
    }
}

pub fn write_artifact<T: Artifact>(value: &T, path: &Path) -> Result<()> {
    let doc = EnvelopeOut {
        schema_version: SCHEMA_VERSION,
        kind: T::KIND,
        data: value,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    create_parent(path)?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_artifact<T: Artifact>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let format_err = |message: String| CliError::Format {
        path: path.to_path_buf(),
        message,
    };
    let doc: EnvelopeIn<T> = serde_json::from_str(&text).map_err(|e| format_err(e.to_string()))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(format_err(format!("unsupported schema_version {}", doc.schema_version)));
    }
    if doc.kind != T::KIND {
        return Err(format_err(format!("expected a {} document, found {}", T::KIND, doc.kind)));
    }
    Ok(doc.data)
}

pub fn write_solution<T: Artifact>(sol: &T, path: &Path) -> Result<()> {
    write_artifact(sol, path)
}

pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `columns` (equal lengths) under `header`.
pub fn write_csv(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) || header.len() != columns.len() {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: "CSV columns have different lengths".into(),
        });
    }
    create_parent(path)?;
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| CliError::io(path, e);
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for i in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| format_number(c[i])).collect();
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn squares(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x * x).collect()
}

/// Columns `xi, U, psi1, rho` for a full solution; `rho` is the full density.
pub fn write_full_csv(sol: &SPSolution, path: &Path) -> Result<()> {
    let xi: Vec<f64> = sol.potential.grid().nodes().collect();
    let rho = sol.density();
    write_csv(
        path,
        &["xi", "U", "psi1", "rho"],
        &[&xi, sol.potential.values(), sol.spectrum.state(1).values(), rho.values()],
    )
}

/// Columns `xi, U, psi1, rho` for a first-level solution.
pub fn write_first_csv(sol: &FirstLevelSolution, path: &Path) -> Result<()> {
    let xi: Vec<f64> = sol.potential.grid().nodes().collect();
    let rho = squares(sol.psi1.values());
    write_csv(
        path,
        &["xi", "U", "psi1", "rho"],
        &[&xi, sol.potential.values(), sol.psi1.values(), &rho],
    )
}

pub fn write_limit_csv(sol: &LimitSolution, path: &Path) -> Result<()> {
    let xi: Vec<f64> = sol.potential.grid().nodes().collect();
    let rho = squares(sol.psi10.values());
    write_csv(
        path,
        &["xi", "U", "psi1", "rho"],
        &[&xi, sol.potential.values(), sol.psi10.values(), &rho],
    )
}

/// Columns `epsilon, xi, U_full, U_first, U_limit, diff` with
/// `diff = U_full − U_first`, stacked over the converged ε in report order.
pub fn write_curves_csv(report: &ConvergenceReport, path: &Path) -> Result<()> {
    let mut cols: [Vec<f64>; 6] = Default::default();
    for m in &report.measurements {
        let c = &m.curves;
        cols[0].extend(std::iter::repeat_n(m.epsilon, c.xi.len()));
        cols[1].extend(&c.xi);
        cols[2].extend(&c.full);
        cols[3].extend(&c.first);
        cols[4].extend(&c.limit);
        cols[5].extend(c.full.iter().zip(&c.first).map(|(a, b)| a - b));
    }
    let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
    write_csv(
        path,
        &["epsilon", "xi", "U_full", "U_first", "U_limit", "diff"],
        &refs,
    )
}

/// Per-ε summary table of a sweep.
pub fn write_summary_csv(report: &ConvergenceReport, path: &Path) -> Result<()> {
    let nan = |v: Option<&Vec<f64>>| v.cloned().unwrap_or_else(|| vec![f64::NAN; report.epsilons.len()]);
    let chain: Vec<f64> = report.chain_ok.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    write_csv(
        path,
        &[
            "epsilon",
            "err_full_vs_first",
            "err_full_vs_first_scaled",
            "err_full_vs_first_direct",
            "err_first_vs_limit",
            "err_first_vs_limit_scaled",
            "gap",
            "chain_ok",
            "fd_tail_ratio",
            "fd_constraint_residual",
        ],
        &[
            &report.epsilons,
            &report.err_full_vs_first,
            &report.err_full_vs_first_scaled,
            &report.err_full_vs_first_direct,
            &report.err_first_vs_limit,
            &report.err_first_vs_limit_scaled,
            &report.gaps,
            &chain,
            &nan(report.fd_tail_ratios.as_ref()),
            &nan(report.fd_constraint_residuals.as_ref()),
        ],
    )
}

/// Numeric cells of a CSV written by this module.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Format {
            path: path.to_path_buf(),
            message: "empty CSV".into(),
        })?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|c| {
                    c.parse::<f64>().map_err(|e| CliError::Format {
                        path: path.to_path_buf(),
                        message: format!("bad number {c:?}: {e}"),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}
