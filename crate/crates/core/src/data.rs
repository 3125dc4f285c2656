//! Ordered regression samples and CSV ingestion.
//!
//! A [`Dataset`] is immutable once built. Rows keep file order and
//! non-finite cells are rejected, never dropped.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One observation: covariates `x` (length q) and a scalar response `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }
}

/// Ordered samples with a common covariate dimension `q`.
///
/// Covariates are stored row-major (`T × q`) so block views are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    q: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from owned samples. Requires `T >= 2`, `q >= 1`,
    /// equal `q` across samples and finite values.
    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        let q = samples.first().map(|s| s.x.len()).unwrap_or(0);
        let mut x = Vec::with_capacity(samples.len() * q);
        let mut y = Vec::with_capacity(samples.len());
        for (i, s) in samples.into_iter().enumerate() {
            if s.x.len() != q {
                return Err(Error::InvalidData(format!(
                    "sample {} has {} covariates, expected {q}",
                    i + 1,
                    s.x.len()
                )));
            }
            x.extend_from_slice(&s.x);
            y.push(s.y);
        }
        Self::from_parts(q, x, y)
    }

    /// Builds a dataset from a row-major covariate buffer and responses.
    pub fn from_parts(q: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidData(
                "covariate dimension q must be >= 1".into(),
            ));
        }
        if y.len() < 2 {
            return Err(Error::InvalidData(format!(
                "dataset needs T >= 2 samples, got {}",
                y.len()
            )));
        }
        if x.len() != q * y.len() {
            return Err(Error::InvalidData(format!(
                "covariate buffer has {} values, expected {} x {q}",
                x.len(),
                y.len()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "response {} is not finite",
                i + 1
            )));
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "covariate {} of sample {} is not finite",
                k % q + 1,
                k / q + 1
            )));
        }
        Ok(Self {
            q,
            x,
            y,
            labels: None,
        })
    }

    /// Single-covariate convenience constructor.
    pub fn from_xy(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension {
                expected: y.len(),
                got: x.len(),
            });
        }
        Self::from_parts(1, x.to_vec(), y.to_vec())
    }

    /// Attaches one label per row (dates for price series).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.q..(i + 1) * self.q]
    }

    pub fn x_flat(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn sample(&self, i: usize) -> Sample {
        Sample::new(self.x_row(i).to_vec(), self.y[i])
    }

    pub fn samples(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.x.chunks_exact(self.q).zip(self.y.iter().copied())
    }

    /// Contiguous sub-range of rows; labels follow.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.start >= range.end {
            return Err(Error::OutOfRange(format!(
                "row range {}..{} outside 0..{}",
                range.start,
                range.end,
                self.len()
            )));
        }
        let mut out = Self::from_parts(
            self.q,
            self.x[range.start * self.q..range.end * self.q].to_vec(),
            self.y[range.clone()].to_vec(),
        )?;
        out.labels = self.labels.as_ref().map(|l| l[range].to_vec());
        Ok(out)
    }

    /// New dataset with `y` replaced by `f(y)`.
    pub fn map_y(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = Self::from_parts(
            self.q,
            self.x.clone(),
            self.y.iter().map(|&v| f(v)).collect(),
        )?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    /// New dataset with every covariate replaced by `f(x)`.
    pub fn map_x(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = Self::from_parts(
            self.q,
            self.x.iter().map(|&v| f(v)).collect(),
            self.y.clone(),
        )?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    /// SHA-256 over the CSV serialization; used as the input digest in reports.
    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        // Writing into a Vec cannot fail.
        let _ = write_csv_to(self, &mut buf, None);
        hex::encode(Sha256::digest(&buf))
    }
}

/// Column mapping for [`load_csv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    /// Covariate column names, in order.
    pub x: Vec<String>,
    /// Response column name.
    pub y: String,
    /// Optional row-label column (kept as text, e.g. a date).
    #[serde(default)]
    pub label: Option<String>,
}

impl CsvSchema {
    pub fn new<S: Into<String>>(x: impl IntoIterator<Item = S>, y: impl Into<String>) -> Self {
        Self {
            x: x.into_iter().map(Into::into).collect(),
            y: y.into(),
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::Cell {
        row,
        column: column.to_string(),
        message: format!("cannot parse `{raw}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Cell {
            row,
            column: column.to_string(),
            message: format!("non-finite value `{raw}`"),
        });
    }
    Ok(v)
}

/// Reads a comma-separated file with one header line. Rows are numbered from
/// 1 at the first data line in error messages.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    load_csv_from(open(path)?, schema)
}

/// [`load_csv`] over any reader.
pub fn load_csv_from(reader: impl Read, schema: &CsvSchema) -> Result<Dataset> {
    if schema.x.is_empty() {
        return Err(Error::Config(
            "schema must name at least one covariate column".into(),
        ));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::Empty("file has no header line".into()));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let x_idx: Vec<usize> = schema.x.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let y_idx = find(&schema.y)?;
    let label_idx = schema.label.as_deref().map(find).transpose()?;

    let q = x_idx.len();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let cell = |idx: usize, name: &str| {
            record.get(idx).ok_or_else(|| Error::Cell {
                row,
                column: name.to_string(),
                message: "missing cell".into(),
            })
        };
        for (&idx, name) in x_idx.iter().zip(&schema.x) {
            x.push(parse_cell(cell(idx, name)?, row, name)?);
        }
        y.push(parse_cell(cell(y_idx, &schema.y)?, row, &schema.y)?);
        if let (Some(idx), Some(name)) = (label_idx, schema.label.as_deref()) {
            labels.push(cell(idx, name)?.to_string());
        }
    }
    if y.is_empty() {
        return Err(Error::Empty("no data lines after the header".into()));
    }
    let ds = Dataset::from_parts(q, x, y)?;
    if label_idx.is_some() {
        ds.with_labels(labels)
    } else {
        Ok(ds)
    }
}

/// Loads a single value column as a series: `y` holds the values and the
/// sole covariate is the 1-based row index.
pub fn load_series(
    path: impl AsRef<Path>,
    value_col: &str,
    label_col: Option<&str>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let v_idx = find(value_col)?;
    let l_idx = label_col.map(find).transpose()?;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let raw = record.get(v_idx).ok_or_else(|| Error::Cell {
            row: r + 1,
            column: value_col.to_string(),
            message: "missing cell".into(),
        })?;
        values.push(parse_cell(raw, r + 1, value_col)?);
        if let Some(i) = l_idx {
            labels.push(record.get(i).unwrap_or_default().to_string());
        }
    }
    if values.is_empty() {
        return Err(Error::Empty("no data lines after the header".into()));
    }
    let index: Vec<f64> = (1..=values.len()).map(|i| i as f64).collect();
    let ds = Dataset::from_parts(1, index, values)?;
    if l_idx.is_some() {
        ds.with_labels(labels)
    } else {
        Ok(ds)
    }
}

/// Writes `x1..xq,y` (plus a leading `label` column when present). Values use
/// the shortest round-trip decimal form, so re-loading is exact.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv_to(data, &mut file, None).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Column names used by [`write_csv`]: `x1`, `x2`, ... and `y`.
pub fn default_columns(q: usize) -> CsvSchema {
    CsvSchema::new((1..=q).map(|j| format!("x{j}")), "y")
}

pub fn write_csv_to(
    data: &Dataset,
    out: &mut impl Write,
    names: Option<&CsvSchema>,
) -> std::io::Result<()> {
    let default = default_columns(data.q());
    let names = names.unwrap_or(&default);
    let mut header: Vec<&str> = Vec::new();
    if data.labels.is_some() {
        header.push("label");
    }
    header.extend(names.x.iter().map(String::as_str));
    header.push(&names.y);
    writeln!(out, "{}", header.join(","))?;
    for i in 0..data.len() {
        let mut fields: Vec<String> = Vec::with_capacity(data.q() + 2);
        if let Some(l) = &data.labels {
            fields.push(l[i].clone());
        }
        fields.extend(data.x_row(i).iter().map(|v| v.to_string()));
        fields.push(data.y[i].to_string());
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Log returns `r_i = ln(p_{i+1} / p_i)` of the price series held in `y`.
///
/// The output has `T - 1` rows; the covariate is the index of the later
/// price and labels (if any) follow the later price.
pub fn log_returns(prices: &Dataset) -> Result<Dataset> {
    let r = log_return_values(prices.y())?;
    if r.len() < 2 {
        return Err(Error::InvalidData(
            "a return Dataset needs T >= 2, i.e. at least 3 prices (use log_return_values for 2)"
                .into(),
        ));
    }
    let idx: Vec<f64> = (2..=prices.len()).map(|i| i as f64).collect();
    let ds = Dataset::from_parts(1, idx, r)?;
    match prices.labels() {
        Some(l) => ds.with_labels(l[1..].to_vec()),
        None => Ok(ds),
    }
}

/// Log returns of a raw price slice; accepts two prices.
pub fn log_return_values(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::InvalidData(
            "log returns need at least 2 prices".into(),
        ));
    }
    if let Some(i) = prices.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidData(format!(
            "price {} is not strictly positive ({})",
            i + 1,
            prices[i]
        )));
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// First-order autoregression design for the series in `y`: rows
/// `(x = y_t, y = y_{t+1})`, labelled by the later observation.
pub fn lagged(series: &Dataset) -> Result<Dataset> {
    let v = series.y();
    if v.len() < 3 {
        return Err(Error::InvalidData(
            "autoregression needs at least 3 observations".into(),
        ));
    }
    let ds = Dataset::from_parts(1, v[..v.len() - 1].to_vec(), v[1..].to_vec())?;
    match series.labels() {
        Some(l) => ds.with_labels(l[1..].to_vec()),
        None => Ok(ds),
    }
}
