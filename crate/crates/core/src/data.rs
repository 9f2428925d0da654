//! Cohort datasets, CSV ingestion, standardization, cross-cohort feature
//! alignment, and the feature graph with its Laplacian.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

pub const DEFAULT_LABEL_COLUMN: &str = "label";

/// A sample-major feature matrix with named columns and optional ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    x: Array2<f64>,
    y: Option<Array1<f64>>,
    raw_std: Array1<f64>,
    standardized: bool,
}

/// Per-column statistics used to standardize a cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

/// Side information gathered while reading a CSV.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Number of "0" labels that were read as −1.
    pub zero_labels_remapped: usize,
}

fn population_stats(col: ArrayView1<f64>) -> (f64, f64) {
    let n = col.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = col.sum() / n as f64;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

impl Dataset {
    /// Builds an unstandardized dataset; `raw_std` is computed from `x`.
    pub fn new(
        feature_names: Vec<String>,
        x: Array2<f64>,
        y: Option<Array1<f64>>,
    ) -> Result<Self> {
        if feature_names.len() != x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                x.ncols()
            )));
        }
        let mut seen = HashSet::with_capacity(feature_names.len());
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        if let Some(y) = &y {
            if y.len() != x.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "{} labels for {} rows",
                    y.len(),
                    x.nrows()
                )));
            }
            if let Some(row) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
                return Err(Error::InvalidLabel {
                    row,
                    value: y[row].to_string(),
                });
            }
        }
        let raw_std = x
            .axis_iter(Axis(1))
            .map(|c| population_stats(c).1)
            .collect::<Array1<f64>>();
        Ok(Self {
            feature_names,
            x,
            y,
            raw_std,
            standardized: false,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> Option<ArrayView1<'_, f64>> {
        self.y.as_ref().map(|y| y.view())
    }

    /// Labels, or [`Error::Unlabeled`].
    pub fn labels(&self) -> Result<ArrayView1<'_, f64>> {
        self.y().ok_or(Error::Unlabeled)
    }

    pub fn raw_std(&self) -> ArrayView1<'_, f64> {
        self.raw_std.view()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_labeled(&self) -> bool {
        self.y.is_some()
    }

    /// Drops labels, producing an unlabeled cohort.
    pub fn into_unlabeled(mut self) -> Self {
        self.y = None;
        self
    }

    /// Rows selected by `indices` (repetition allowed). Column statistics and
    /// `raw_std` are carried over from `self`, not recomputed.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            x: self.x.select(Axis(0), indices),
            y: self.y.as_ref().map(|y| y.select(Axis(0), indices)),
            raw_std: self.raw_std.clone(),
            standardized: self.standardized,
        }
    }

    /// Columns named by `names`, in that order.
    pub fn select_features(&self, names: &[String]) -> Result<Self> {
        let index: HashMap<&str, usize> = self
            .feature_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let cols = names
            .iter()
            .map(|n| {
                index
                    .get(n.as_str())
                    .copied()
                    .ok_or_else(|| Error::UnknownFeature(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            feature_names: names.to_vec(),
            x: self.x.select(Axis(1), &cols),
            y: self.y.clone(),
            raw_std: self.raw_std.select(Axis(0), &cols),
            standardized: self.standardized,
        })
    }

    /// Column means and population standard deviations of the current values.
    pub fn fit_standardizer(&self) -> Standardizer {
        let (mean, std): (Vec<f64>, Vec<f64>) =
            self.x.axis_iter(Axis(1)).map(population_stats).unzip();
        Standardizer {
            mean: Array1::from(mean),
            std: Array1::from(std),
        }
    }

    /// Standardizes each column to mean 0 and unit population standard
    /// deviation using this dataset's own statistics.
    pub fn standardize(self) -> Result<Self> {
        let s = self.fit_standardizer();
        self.standardize_with(&s)
    }

    /// Standardizes with externally fitted statistics (e.g. a validation
    /// cohort transformed with training statistics).
    pub fn standardize_with(mut self, s: &Standardizer) -> Result<Self> {
        if self.standardized {
            return Err(Error::AlreadyStandardized);
        }
        if s.mean.len() != self.n_features() || s.std.len() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "standardizer has {} columns, dataset has {}",
                s.mean.len(),
                self.n_features()
            )));
        }
        s.apply(&mut self.x);
        self.standardized = true;
        Ok(self)
    }

    /// Writes the dataset as CSV, with labels (if any) in `label_column`.
    pub fn write_csv(&self, path: &Path, label_column: &str) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header = self.feature_names.clone();
        if self.y.is_some() {
            header.push(label_column.to_string());
        }
        w.write_record(&header).map_err(csv_err)?;
        for (m, row) in self.x.axis_iter(Axis(0)).enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            if let Some(y) = &self.y {
                rec.push(if y[m] > 0.0 { "1" } else { "-1" }.to_string());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

impl Standardizer {
    pub fn apply(&self, x: &mut Array2<f64>) {
        for (j, mut col) in x.axis_iter_mut(Axis(1)).enumerate() {
            let (mu, sd) = (self.mean[j], self.std[j]);
            if sd > 0.0 {
                col.mapv_inplace(|v| (v - mu) / sd);
            } else {
                col.fill(0.0);
            }
        }
    }
}

fn parse_label(token: &str, row: usize, report: &mut LoadReport) -> Result<f64> {
    let invalid = || Error::InvalidLabel {
        row,
        value: token.to_string(),
    };
    let v: f64 = token.trim().parse().map_err(|_| invalid())?;
    if v == 1.0 {
        Ok(1.0)
    } else if v == -1.0 {
        Ok(-1.0)
    } else if v == 0.0 {
        report.zero_labels_remapped += 1;
        Ok(-1.0)
    } else {
        Err(invalid())
    }
}

/// Reads a CSV with a header row. When `label_column` is given it is parsed
/// as ±1 labels (a "0" is read as −1 and counted in the report); every other
/// column must be numeric.
pub fn load_dataset(path: &Path, label_column: Option<&str>) -> Result<(Dataset, LoadReport)> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    let label_idx = match label_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingLabelColumn(name.to_string()))?,
        ),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&i| Some(i) != label_idx).collect();
    let names: Vec<String> = feature_cols.iter().map(|&i| headers[i].clone()).collect();

    let mut report = LoadReport::default();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n_rows = 0;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        for &c in &feature_cols {
            let cell = rec.get(c).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                path: path.to_path_buf(),
                row,
                column: headers[c].clone(),
                value: cell.to_string(),
            })?;
            values.push(v);
        }
        if let Some(li) = label_idx {
            labels.push(parse_label(rec.get(li).unwrap_or(""), row, &mut report)?);
        }
        n_rows += 1;
    }
    if report.zero_labels_remapped > 0 {
        warn!(
            "{}: {} labels of 0 read as -1",
            path.display(),
            report.zero_labels_remapped
        );
    }
    let x = Array2::from_shape_vec((n_rows, names.len()), values)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    let y = label_idx.map(|_| Array1::from(labels));
    Ok((Dataset::new(names, x, y)?, report))
}

/// Restricts both cohorts to their shared feature names, ordered
/// lexicographically.
pub fn align_common_features(a: &Dataset, b: &Dataset) -> Result<(Dataset, Dataset)> {
    let names_a: BTreeSet<&String> = a.feature_names.iter().collect();
    let common: Vec<String> = b
        .feature_names
        .iter()
        .filter(|n| names_a.contains(n))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok((a.select_features(&common)?, b.select_features(&common)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub weight: f64,
}

/// Weighted undirected edges between named features.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureGraph {
    edges: Vec<Edge>,
}

impl FeatureGraph {
    pub fn new(edges: Vec<Edge>) -> Result<Self> {
        for e in &edges {
            if e.a == e.b {
                return Err(Error::InvalidArgument(format!("self-loop on '{}'", e.a)));
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) has weight {}",
                    e.a, e.b, e.weight
                )));
            }
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Keeps only edges whose endpoints are both in `names`.
    pub fn restrict_to(&self, names: &[String]) -> Self {
        let keep: HashSet<&str> = names.iter().map(String::as_str).collect();
        Self {
            edges: self
                .edges
                .iter()
                .filter(|e| keep.contains(e.a.as_str()) && keep.contains(e.b.as_str()))
                .cloned()
                .collect(),
        }
    }

    /// Reads a tab-separated edge list `name_a, name_b, weight`. A first line
    /// starting with `name_a` is treated as a header; blank lines and lines
    /// starting with `#` are skipped.
    pub fn load_tsv(path: &Path) -> Result<Self> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let reader = BufReader::new(File::open(path).map_err(io_err)?);
        let mut edges = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(io_err)?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            if lineno == 0 && line.starts_with("name_a") {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::InvalidArgument(format!(
                    "{}: line {}: expected 3 tab-separated fields, found {}",
                    path.display(),
                    lineno + 1,
                    fields.len()
                )));
            }
            let weight: f64 = fields[2].parse().map_err(|_| Error::NonNumeric {
                path: path.to_path_buf(),
                row: lineno,
                column: "weight".into(),
                value: fields[2].to_string(),
            })?;
            edges.push(Edge {
                a: fields[0].to_string(),
                b: fields[1].to_string(),
                weight,
            });
        }
        Self::new(edges)
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        writeln!(w, "name_a\tname_b\tweight").map_err(io_err)?;
        for e in &self.edges {
            writeln!(w, "{}\t{}\t{}", e.a, e.b, e.weight).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }
}

/// Unnormalized graph Laplacian `D − A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian(Array2<f64>);

impl Laplacian {
    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `L θ`.
    pub fn apply(&self, theta: ArrayView1<f64>) -> Array1<f64> {
        self.0.dot(&theta)
    }

    /// `θᵀ L θ`.
    pub fn quadratic_form(&self, theta: ArrayView1<f64>) -> f64 {
        theta.dot(&self.apply(theta))
    }
}

pub fn build_laplacian(g: &FeatureGraph, feature_names: &[String]) -> Result<Laplacian> {
    let n = feature_names.len();
    let index: HashMap<&str, usize> = feature_names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let lookup = |name: &String| {
        index
            .get(name.as_str())
            .copied()
            .ok_or_else(|| Error::UnknownFeature(name.clone()))
    };
    let mut l = Array2::<f64>::zeros((n, n));
    for e in &g.edges {
        let (i, j) = (lookup(&e.a)?, lookup(&e.b)?);
        l[[i, j]] -= e.weight;
        l[[j, i]] -= e.weight;
        l[[i, i]] += e.weight;
        l[[j, j]] += e.weight;
    }
    Ok(Laplacian(l))
}
