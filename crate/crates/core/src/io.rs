//! CSV ingestion and the CSV/JSON output formats.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces every value bitwise.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{Family, GlmProblem};
use crate::trajectory::{Mode, TrajectoryRecord};
use crate::vista::TraceRow;

/// Which CSV column holds the response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseColumn {
    Name(String),
    Index(usize),
}

impl FromStr for ResponseColumn {
    type Err = Error;

    /// A bare integer is a zero-based column index, anything else a name.
    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::domain("response column must not be empty"));
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(s.to_string()),
        })
    }
}

impl fmt::Display for ResponseColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResponseColumn::Name(n) => f.write_str(n),
            ResponseColumn::Index(i) => write!(f, "{i}"),
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Reads a headed numeric CSV. The response column is removed and the
/// remaining columns, in header order, form the design; every coefficient is
/// penalized.
pub fn load_csv(path: impl AsRef<Path>, response: &ResponseColumn, family: Family) -> Result<GlmProblem> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(open(path)?);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let col = match response {
        ResponseColumn::Name(n) => header
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::Data(format!("response column '{n}' not found in {}", path.display())))?,
        ResponseColumn::Index(i) if *i < header.len() => *i,
        ResponseColumn::Index(i) => {
            return Err(Error::Data(format!(
                "response column index {i} out of range, file has {} columns",
                header.len()
            )))
        }
    };
    if header.len() < 2 {
        return Err(Error::Data(format!("{} needs a response and at least one feature column", path.display())));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // data rows start on line 2
        let line = r + 2;
        if rec.len() != header.len() {
            return Err(Error::Data(format!("line {line} has {} cells, header has {}", rec.len(), header.len())));
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Data(format!("non-numeric cell '{cell}' at line {line}, column {} ({})", c, header[c])))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }
    let n = rows.len();
    let p = header.len() - 1;
    let feat: Vec<usize> = (0..header.len()).filter(|&c| c != col).collect();
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][feat[j]]);
    let y = DVector::from_fn(n, |i, _| rows[i][col]);
    let names = feat.iter().map(|&c| header[c].clone()).collect();
    GlmProblem::with_details(x, y, family, vec![true; p], names)
}

/// Writes the design with the response as the last column.
pub fn save_csv(path: impl AsRef<Path>, problem: &GlmProblem, response_name: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    let mut header: Vec<&str> = problem.names().iter().map(String::as_str).collect();
    header.push(response_name);
    w.write_record(&header)?;
    let (x, y) = (problem.x(), problem.y());
    for i in 0..problem.n_obs() {
        let mut row: Vec<String> = (0..problem.n_coef()).map(|j| x[(i, j)].to_string()).collect();
        row.push(y[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One parameter in a fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamReport {
    pub name: String,
    /// Variational family, or `point` for MAP and lasso estimates.
    pub family: String,
    pub eta: f64,
    pub nu: Option<f64>,
    pub lambda: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

/// JSON written by the `fit` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub family: Family,
    pub mode: Mode,
    pub prior: String,
    pub tau: f64,
    pub seed: u64,
    pub mc_samples: Option<usize>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub sparsity_fraction: f64,
    pub params: Vec<ParamReport>,
}

impl FitReport {
    pub fn from_record(rec: &TrajectoryRecord, family: Family, prior: String, seed: u64, mc_samples: Option<usize>) -> Self {
        let params = rec
            .params
            .iter()
            .map(|p| ParamReport {
                name: p.name.clone(),
                family: match (rec.mode, p.name.starts_with("log_") && p.lambda.is_none()) {
                    (Mode::Sbl, false) => "laplace",
                    (Mode::Sbl, true) => "normal",
                    _ => "point",
                }
                .to_string(),
                eta: p.estimate,
                nu: p.nu,
                lambda: p.lambda,
                ci_lo: p.ci.map(|c| c.0),
                ci_hi: p.ci.map(|c| c.1),
            })
            .collect();
        Self {
            family,
            mode: rec.mode,
            prior,
            tau: rec.tau,
            seed,
            mc_samples,
            cost: rec.cost,
            iterations: rec.iterations,
            converged: rec.converged,
            sparsity_fraction: rec.sparsity_fraction,
            params,
        }
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = create(path.as_ref())?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(open(path.as_ref())?))?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const TRAJECTORY_COLUMNS: [&str; 11] = [
    "tau",
    "mode",
    "param_name",
    "eta_or_estimate",
    "nu",
    "lambda",
    "ci_lo",
    "ci_hi",
    "sparsity_fraction",
    "iterations",
    "converged",
];

/// Long-format trajectory table, one row per (τ, parameter). Missing values
/// are empty cells.
pub fn write_trajectory_csv(path: impl AsRef<Path>, records: &[TrajectoryRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    w.write_record(TRAJECTORY_COLUMNS)?;
    for r in records {
        for p in &r.params {
            w.write_record([
                r.tau.to_string(),
                r.mode.to_string(),
                p.name.clone(),
                p.estimate.to_string(),
                opt(p.nu),
                opt(p.lambda),
                opt(p.ci.map(|c| c.0)),
                opt(p.ci.map(|c| c.1)),
                r.sparsity_fraction.to_string(),
                r.iterations.to_string(),
                r.converged.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Optimizer trace: `iter, cost, step, nnz`.
pub fn write_trace_csv(path: impl AsRef<Path>, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    for row in trace {
        w.serialize(row)?;
    }
    if trace.is_empty() {
        w.write_record(["iter", "cost", "step", "nnz"])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::WorkingExample;

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let x = DMatrix::from_row_slice(3, 2, &[0.1, -1.0 / 3.0, 2.5e-17, 7.0, 1e300, -0.0]);
        let y = DVector::from_vec(vec![1.0, std::f64::consts::PI, -2.0]);
        let prob = GlmProblem::with_details(x, y, Family::Normal, vec![true; 2], vec!["a".into(), "b".into()]).unwrap();
        save_csv(&path, &prob, "resp").unwrap();
        let back = load_csv(&path, &"resp".parse().unwrap(), Family::Normal).unwrap();
        assert_eq!(back.names(), prob.names());
        for (a, b) in back.x().iter().zip(prob.x().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.y(), prob.y());
        let by_index = load_csv(&path, &ResponseColumn::Index(2), Family::Normal).unwrap();
        assert_eq!(by_index.x(), prob.x());
    }

    #[test]
    fn response_column_can_be_first() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "y,u,v\n1,2,3\n4,5,6\n").unwrap();
        let prob = load_csv(&path, &"y".parse().unwrap(), Family::Normal).unwrap();
        assert_eq!(prob.names(), ["u", "v"]);
        assert_eq!(prob.y().as_slice(), [1.0, 4.0]);
        assert_eq!(prob.x()[(1, 1)], 6.0);
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let resp: ResponseColumn = "y".parse().unwrap();

        let err = load_csv(dir.path().join("missing.csv"), &resp, Family::Normal).unwrap_err();
        assert_eq!(err.kind(), "io");

        std::fs::write(&path, "a,y\n1,2\n3,oops\n").unwrap();
        let msg = load_csv(&path, &resp, Family::Normal).unwrap_err().to_string();
        assert!(msg.contains("line 3") && msg.contains("column 1"), "{msg}");

        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        let err = load_csv(&path, &resp, Family::Normal).unwrap_err();
        assert!(err.to_string().contains("'y' not found"));

        std::fs::write(&path, "a,y\n").unwrap();
        assert!(load_csv(&path, &resp, Family::Normal).unwrap_err().to_string().contains("no data rows"));

        std::fs::write(&path, "a,y\n1,0\n2,0.5\n").unwrap();
        let err = load_csv(&path, &resp, Family::Bernoulli).unwrap_err();
        assert_eq!(err.kind(), "domain");
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn trajectory_csv_has_spec_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let (prob, _) = WorkingExample::toy().generate(1).unwrap();
        let recs = crate::trajectory::lasso_path(&prob, &[0.5, 0.0], &Default::default(), true).unwrap();
        write_trajectory_csv(&path, &recs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRAJECTORY_COLUMNS.join(","));
        assert_eq!(lines.count(), 4);
    }

    #[test]
    fn trace_csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trace_csv(&path, &[TraceRow { iter: 1, cost: 2.0, step: 0.5, nnz: 3 }]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "iter,cost,step,nnz\n1,2.0,0.5,3\n");
    }
}
