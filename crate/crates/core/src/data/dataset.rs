use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{NaiveDateTime, TimeDelta};

use crate::data::features::time_features;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Sampling granularity of a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frequency {
    TenMinutes,
    FifteenMinutes,
    Hourly,
}

impl Frequency {
    pub fn minutes(self) -> i64 {
        match self {
            Frequency::TenMinutes => 10,
            Frequency::FifteenMinutes => 15,
            Frequency::Hourly => 60,
        }
    }

    pub fn stride(self) -> TimeDelta {
        TimeDelta::minutes(self.minutes())
    }

    pub fn from_stride(delta: TimeDelta) -> Option<Self> {
        match delta.num_seconds() {
            600 => Some(Frequency::TenMinutes),
            900 => Some(Frequency::FifteenMinutes),
            3600 => Some(Frequency::Hourly),
            _ => None,
        }
    }

    pub fn steps_per_hour(self) -> usize {
        (60 / self.minutes()) as usize
    }
}

const TIMESTAMP_FORMATS: [&str; 4] = ["%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M:%S", "%Y/%m/%d %H:%M"];

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn format_timestamp(t: &NaiveDateTime) -> String {
    t.format("%Y-%m-%d %H:%M:%S").to_string()
}

/// `N` series over `T` common time steps.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesDataset {
    pub names: Vec<String>,
    /// `[N, T]`
    pub values: Tensor,
    pub timestamps: Vec<NaiveDateTime>,
    /// Dynamic covariates shared by all series, `[T, r]`.
    pub covariates: Tensor,
    pub covariate_names: Vec<String>,
    /// Static attributes, `[N, s]`.
    pub static_attrs: Tensor,
    pub frequency: Frequency,
}

impl TimeSeriesDataset {
    /// A dataset with no covariates and no static attributes.
    pub fn new(names: Vec<String>, values: Tensor, timestamps: Vec<NaiveDateTime>) -> Result<Self> {
        if values.shape().len() != 2 {
            return Err(Error::Contract(format!("values must be [N, T], got {:?}", values.shape())));
        }
        let (n, t) = (values.rows(), values.cols());
        if n == 0 || t < 2 {
            return Err(Error::Contract(format!("need N >= 1 and T >= 2, got N={n}, T={t}")));
        }
        if names.len() != n || timestamps.len() != t {
            return Err(Error::Contract(format!(
                "{} names / {} timestamps for values of shape [{n}, {t}]",
                names.len(),
                timestamps.len()
            )));
        }
        let frequency = Frequency::from_stride(timestamps[1] - timestamps[0])
            .ok_or_else(|| Error::Contract(format!("unsupported stride {}", timestamps[1] - timestamps[0])))?;
        if let Some(i) = (1..t).find(|&i| timestamps[i] - timestamps[i - 1] != frequency.stride()) {
            return Err(Error::Contract(format!("non-constant stride at step {i}")));
        }
        Ok(TimeSeriesDataset {
            names,
            values,
            timestamps,
            covariates: Tensor::zeros(&[t, 0]),
            covariate_names: Vec::new(),
            static_attrs: Tensor::zeros(&[n, 0]),
            frequency,
        })
    }

    /// Regularly spaced timestamps starting at `start`.
    pub fn regular_timestamps(start: NaiveDateTime, frequency: Frequency, len: usize) -> Vec<NaiveDateTime> {
        (0..len).map(|i| start + frequency.stride() * i as i32).collect()
    }

    pub fn num_series(&self) -> usize {
        self.values.rows()
    }

    pub fn len(&self) -> usize {
        self.values.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariates.cols()
    }

    pub fn static_dim(&self) -> usize {
        self.static_attrs.cols()
    }

    pub fn series(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// Appends covariate columns.
    pub fn with_covariates(mut self, names: Vec<String>, extra: Tensor) -> Result<Self> {
        if extra.shape().len() != 2 || extra.rows() != self.len() || extra.cols() != names.len() {
            return Err(Error::dim("with_covariates", &[self.len(), names.len()], extra.shape()));
        }
        let t = self.len();
        let (r0, r1) = (self.covariate_dim(), extra.cols());
        let mut data = Vec::with_capacity(t * (r0 + r1));
        for i in 0..t {
            data.extend_from_slice(self.covariates.row(i));
            data.extend_from_slice(extra.row(i));
        }
        self.covariates = Tensor::new(vec![t, r0 + r1], data)?;
        self.covariate_names.extend(names);
        Ok(self)
    }

    /// Appends the eight calendar features.
    pub fn with_time_features(self) -> Result<Self> {
        let feats = time_features(&self.timestamps);
        let names = crate::data::features::TIME_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        self.with_covariates(names, feats)
    }

    pub fn with_static(mut self, attrs: Tensor) -> Result<Self> {
        if attrs.shape().len() != 2 || attrs.rows() != self.num_series() {
            return Err(Error::dim("with_static", &[self.num_series()], attrs.shape()));
        }
        self.static_attrs = attrs;
        Ok(self)
    }

    /// Keeps the first `n` series.
    pub fn take_series(&self, n: usize) -> Result<Self> {
        let n = n.min(self.num_series());
        let mut out = self.clone();
        out.names.truncate(n);
        out.values = self.values.slice_rows(0, n)?;
        out.static_attrs = self.static_attrs.slice_rows(0, n)?;
        Ok(out)
    }

    /// Writes the values in series-per-column layout with a leading date column.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<f64>> = (0..self.len())
            .map(|t| (0..self.num_series()).map(|i| self.values.get2(i, t)).collect())
            .collect();
        write_table(path, &self.names, &self.timestamps, &rows)
    }

    /// Writes the dynamic covariates as a sidecar CSV with the same date column.
    pub fn write_covariates_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<f64>> = (0..self.len()).map(|t| self.covariates.row(t).to_vec()).collect();
        write_table(path, &self.covariate_names, &self.timestamps, &rows)
    }

    /// Attaches covariates from a sidecar written by [`write_covariates_csv`].
    ///
    /// [`write_covariates_csv`]: TimeSeriesDataset::write_covariates_csv
    pub fn with_covariates_csv(self, path: &Path) -> Result<Self> {
        let table = read_table(path)?;
        if table.timestamps != self.timestamps {
            return Err(Error::Ingestion {
                path: path.to_path_buf(),
                line: 1,
                message: "covariate timestamps do not match the dataset".into(),
            });
        }
        let t = table.rows.len();
        let r = table.names.len();
        let data = table.rows.into_iter().flatten().collect();
        let cov = Tensor::new(vec![t, r], data)?;
        self.with_covariates(table.names, cov)
    }
}

fn write_table(path: &Path, names: &[String], stamps: &[NaiveDateTime], rows: &[Vec<f64>]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(w, "date").map_err(io)?;
    for n in names {
        write!(w, ",{n}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (ts, row) in stamps.iter().zip(rows) {
        write!(w, "{}", format_timestamp(ts)).map_err(io)?;
        for v in row {
            write!(w, ",{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

struct Table {
    names: Vec<String>,
    timestamps: Vec<NaiveDateTime>,
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let ingest = |line: u64, message: String| Error::Ingestion {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => ingest(0, format!("{other:?}")),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| ingest(1, e.to_string()))?
        .clone();
    if headers.len() < 2 {
        return Err(ingest(1, "need a date column and at least one series column".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut timestamps = Vec::new();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            ingest(line, format!("malformed row: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != headers.len() {
            return Err(ingest(line, format!("expected {} fields, found {}", headers.len(), rec.len())));
        }
        let ts = parse_timestamp(&rec[0]).ok_or_else(|| ingest(line, format!("cannot parse timestamp `{}`", &rec[0])))?;
        let row = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, cell)| {
                cell.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ingest(line, format!("column `{}`: cannot parse `{cell}`", names[j])))
            })
            .collect::<Result<Vec<f64>>>()?;
        timestamps.push(ts);
        rows.push(row);
    }
    if timestamps.len() < 2 {
        return Err(ingest(2, "need at least two rows".into()));
    }
    let frequency = Frequency::from_stride(timestamps[1] - timestamps[0])
        .ok_or_else(|| ingest(3, format!("unsupported sampling stride {}", timestamps[1] - timestamps[0])))?;
    for i in 1..timestamps.len() {
        if timestamps[i] - timestamps[i - 1] != frequency.stride() {
            return Err(ingest(
                i as u64 + 2,
                format!("stride {} differs from {}", timestamps[i] - timestamps[i - 1], frequency.stride()),
            ));
        }
    }
    Ok(Table { names, timestamps, rows })
}

/// Reads a series-per-column CSV with a leading timestamp column.
pub fn load_csv(path: &Path) -> Result<TimeSeriesDataset> {
    let table = read_table(path)?;
    let (t, n) = (table.rows.len(), table.names.len());
    let mut values = vec![0.0; n * t];
    for (ti, row) in table.rows.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            values[i * t + ti] = *v;
        }
    }
    TimeSeriesDataset::new(table.names, Tensor::new(vec![n, t], values)?, table.timestamps)
}
