//! Plain CSV emitters. Reals are written with 17 significant digits so files round-trip.

use std::fmt::Write as _;

use crate::systems::{SampleSet, Trajectory};
use crate::Matrix;

/// Formats a real with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Builds a CSV document from a header and rows of already formatted cells.
pub fn table<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// `t,x0,x1,...` with one row per time; `values` has one column per time.
pub fn time_series(times: &[f64], values: &Matrix, prefix: &str) -> String {
    assert_eq!(times.len(), values.ncols());
    let mut out = String::from("t");
    for i in 0..values.nrows() {
        let _ = write!(out, ",{prefix}{i}");
    }
    out.push('\n');
    for (j, t) in times.iter().enumerate() {
        out.push_str(&real(*t));
        for i in 0..values.nrows() {
            out.push(',');
            out.push_str(&real(values[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn trajectory(traj: &Trajectory) -> String {
    time_series(&traj.times, &traj.states, "x")
}

pub fn sample_set(samples: &SampleSet) -> String {
    time_series(&samples.times, &samples.values, "x")
}

/// Parses a `t,x0,...` document back into times and a value matrix.
pub fn parse_time_series(text: &str) -> Result<(Vec<f64>, Matrix), String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty document")?;
    let cols = header.split(',').count();
    if cols < 1 {
        return Err("missing header".into());
    }
    let mut times = Vec::new();
    let mut data = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols {
            return Err(format!("row {} has {} cells, expected {cols}", n + 1, cells.len()));
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("row {}: {e}", n + 1));
        times.push(parse(cells[0])?);
        for c in &cells[1..] {
            data.push(parse(c)?);
        }
    }
    let q = times.len();
    let d = cols - 1;
    // `data` is row-major in time; transpose into d x q.
    let values = Matrix::from_fn(d, q, |i, j| data[j * d + i]);
    Ok((times, values))
}
