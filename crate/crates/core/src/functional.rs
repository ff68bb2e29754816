//! Grids, functional datasets and their CSV representation.
//!
//! A [`FunctionalDataset`] holds `n` curves evaluated on one shared [`Grid`].
//! Row `i` of `values` is observation `x_i` evaluated at every grid point.
//! Optional labels flag structural (off-manifold) outliers; curves from the
//! common process that merely look unusual are never labeled.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Name of the label column in the CSV format.
pub const LABEL_COLUMN: &str = "label";

/// Strictly increasing, finite argument values `t_1 < ... < t_m` with `m >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(bad) = points.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite point {bad}")));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self { points })
    }

    /// `m` equidistant points spanning `[lo, hi]`, endpoints included.
    pub fn uniform(lo: f64, hi: f64, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {m}")));
        }
        let step = (hi - lo) / (m - 1) as f64;
        let mut points: Vec<f64> = (0..m).map(|i| lo + step * i as f64).collect();
        points[m - 1] = hi;
        Self::new(points)
    }

    /// The index grid `0, 1, ..., m-1`.
    pub fn indices(m: usize) -> Result<Self> {
        Self::new((0..m).map(|i| i as f64).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.points[0]
    }

    pub fn upper(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Trapezoidal integral of `values` sampled on this grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.points.len());
        self.points
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    }

    /// Running trapezoidal integral, starting at 0 on the first grid point.
    pub fn cumulative_integral(&self, values: &[f64]) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.points.len());
        let mut out = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        out.push(acc);
        for (t, v) in self.points.windows(2).zip(values.windows(2)) {
            acc += 0.5 * (t[1] - t[0]) * (v[0] + v[1]);
            out.push(acc);
        }
        out
    }
}

/// Outlier flags, one per observation (`true` = structural outlier).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    flags: Vec<bool>,
}

impl LabelVector {
    pub fn new(flags: Vec<bool>) -> Self {
        Self { flags }
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn n_outliers(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

impl From<Vec<bool>> for LabelVector {
    fn from(flags: Vec<bool>) -> Self {
        Self::new(flags)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    grid: Grid,
    values: Vec<Vec<f64>>,
    labels: Option<LabelVector>,
    /// Free-form provenance (generator name, seed, ratio, ...).
    pub meta: Map<String, Value>,
}

impl FunctionalDataset {
    pub fn new(grid: Grid, values: Vec<Vec<f64>>, labels: Option<LabelVector>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("dataset has no observations".into()));
        }
        let m = grid.len();
        for (i, row) in values.iter().enumerate() {
            if row.len() != m {
                return Err(Error::RaggedRows {
                    line: i,
                    expected: m,
                    found: row.len(),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::param(format!(
                    "non-finite value {} at observation {i}, grid index {j}",
                    row[j]
                )));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != values.len() {
                return Err(Error::LengthMismatch {
                    left: values.len(),
                    right: labels.len(),
                });
            }
        }
        Ok(Self {
            grid,
            values,
            labels,
            meta: Map::new(),
        })
    }

    pub fn with_meta(mut self, meta: Map<String, Value>) -> Self {
        self.meta = meta;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn labels(&self) -> Option<&LabelVector> {
        self.labels.as_ref()
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Number of grid points.
    pub fn m(&self) -> usize {
        self.grid.len()
    }

    /// First derivatives by central differences on interior points and
    /// one-sided differences at the two endpoints. Grid and labels are kept.
    pub fn to_derivative(&self) -> Result<Self> {
        let m = self.m();
        if m < 3 {
            return Err(Error::param(format!(
                "derivative needs at least 3 grid points, got {m}"
            )));
        }
        let t = self.grid.points();
        let values = self
            .values
            .iter()
            .map(|x| {
                let mut d = Vec::with_capacity(m);
                d.push((x[1] - x[0]) / (t[1] - t[0]));
                for i in 1..m - 1 {
                    d.push((x[i + 1] - x[i - 1]) / (t[i + 1] - t[i - 1]));
                }
                d.push((x[m - 1] - x[m - 2]) / (t[m - 1] - t[m - 2]));
                d
            })
            .collect();
        let mut meta = self.meta.clone();
        meta.insert("derivative".into(), Value::Bool(true));
        Ok(Self {
            grid: self.grid.clone(),
            values,
            labels: self.labels.clone(),
            meta,
        })
    }

    /// Writes the CSV format: a header row of grid values (plus `label` when
    /// labels are present), then one row per observation.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        let mut header: Vec<String> = self.grid.points().iter().map(|t| format_f64(*t)).collect();
        if self.labels.is_some() {
            header.push(LABEL_COLUMN.to_string());
        }
        w.write_record(&header)?;
        for (i, row) in self.values.iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
            if let Some(labels) = &self.labels {
                rec.push(if labels.flags()[i] { "1" } else { "0" }.to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }
}

/// Shortest decimal representation that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v}")
}

fn parse_cell(cell: &str, line: usize, column: usize) -> Result<f64> {
    let cell = cell.trim();
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumeric {
            line,
            column,
            cell: cell.to_string(),
        }),
    }
}

fn parse_label(cell: &str, line: usize, column: usize) -> Result<bool> {
    match cell.trim() {
        "1" | "1.0" | "true" => Ok(true),
        "0" | "0.0" | "false" => Ok(false),
        other => Err(Error::NonNumeric {
            line,
            column,
            cell: other.to_string(),
        }),
    }
}

/// Reads a numeric table. Rows become observations. With a header, numeric
/// header values become the grid; otherwise the grid is `0..m-1`. A named
/// label column is parsed as 0/1 and excluded from the values.
pub fn read_csv<R: Read>(
    reader: R,
    has_header: bool,
    label_column: Option<&str>,
) -> Result<FunctionalDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() == 1 && rec.get(0).is_some_and(str::is_empty) {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Empty("csv contains no rows".into()));
    }
    let width = records[0].len();
    for (line, rec) in records.iter().enumerate() {
        if rec.len() != width {
            return Err(Error::RaggedRows {
                line: line + 1,
                expected: width,
                found: rec.len(),
            });
        }
    }

    let (header, body) = if has_header {
        (Some(&records[0]), &records[1..])
    } else {
        (None, &records[..])
    };
    if body.is_empty() {
        return Err(Error::Empty("csv contains a header but no data rows".into()));
    }
    let first_line = if has_header { 2 } else { 1 };

    let label_idx = match label_column {
        None => None,
        Some(name) => {
            let idx = header
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| Error::MissingLabelColumn(name.to_string()))?;
            Some(idx)
        }
    };
    let value_cols: Vec<usize> = (0..width).filter(|c| Some(*c) != label_idx).collect();

    let grid = match header {
        Some(h) => {
            let parsed: Option<Vec<f64>> = value_cols
                .iter()
                .map(|&c| h[c].parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect();
            match parsed {
                Some(points) => Grid::new(points)?,
                None => Grid::indices(value_cols.len())?,
            }
        }
        None => Grid::indices(value_cols.len())?,
    };

    let mut values = Vec::with_capacity(body.len());
    let mut flags = Vec::with_capacity(body.len());
    for (k, rec) in body.iter().enumerate() {
        let line = first_line + k;
        let row = value_cols
            .iter()
            .map(|&c| parse_cell(&rec[c], line, c + 1))
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
        if let Some(li) = label_idx {
            flags.push(parse_label(&rec[li], line, li + 1)?);
        }
    }
    let labels = label_idx.map(|_| LabelVector::new(flags));
    FunctionalDataset::new(grid, values, labels)
}

pub fn load_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    label_column: Option<&str>,
) -> Result<FunctionalDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, has_header, label_column)
}
