//! Equally spaced multivariate count series and their CSV form.

use crate::error::{MivtError, Result};
use std::io::{Read, Write};

/// Counts on the grid `origin + k * delta`, `k = 1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSeries {
    delta: f64,
    origin: f64,
    labels: Vec<String>,
    // Component-major: data[i][k].
    data: Vec<Vec<u64>>,
}

impl CountSeries {
    pub fn new(delta: f64, labels: Vec<String>, data: Vec<Vec<u64>>) -> Result<Self> {
        Self::with_origin(delta, 0.0, labels, data)
    }

    pub fn with_origin(delta: f64, origin: f64, labels: Vec<String>, data: Vec<Vec<u64>>) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(MivtError::invalid(format!("bin width must be positive, got {delta}")));
        }
        if !origin.is_finite() {
            return Err(MivtError::invalid("series origin must be finite"));
        }
        if data.is_empty() {
            return Err(MivtError::invalid("series needs at least one component"));
        }
        if labels.len() != data.len() {
            return Err(MivtError::invalid(format!(
                "{} labels for {} components",
                labels.len(),
                data.len()
            )));
        }
        let k = data[0].len();
        if k == 0 {
            return Err(MivtError::Degenerate("series is empty".into()));
        }
        if data.iter().any(|c| c.len() != k) {
            return Err(MivtError::invalid("components have different lengths"));
        }
        Ok(Self {
            delta,
            origin,
            labels,
            data,
        })
    }

    /// Labels `y1, y2, ...`.
    pub fn default_labels(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("y{i}")).collect()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn len(&self) -> usize {
        self.data[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn component(&self, i: usize) -> &[u64] {
        &self.data[i]
    }

    pub fn components(&self) -> &[Vec<u64>] {
        &self.data
    }

    /// Time stamp of observation `k` (0-based).
    pub fn time(&self, k: usize) -> f64 {
        self.origin + (k + 1) as f64 * self.delta
    }

    /// Sub-series with components in the given order.
    pub fn select(&self, order: &[usize]) -> Result<Self> {
        if order.iter().any(|&i| i >= self.dim()) {
            return Err(MivtError::invalid("component index out of range"));
        }
        Self::with_origin(
            self.delta,
            self.origin,
            order.iter().map(|&i| self.labels[i].clone()).collect(),
            order.iter().map(|&i| self.data[i].clone()).collect(),
        )
    }

    /// Writes `t,<label1>,...` followed by one row per grid point.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(self.labels.iter().cloned());
        wr.write_record(&header)?;
        let mut row = Vec::with_capacity(self.dim() + 1);
        for k in 0..self.len() {
            row.clear();
            row.push(self.time(k).to_string());
            row.extend(self.data.iter().map(|c| c[k].to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| MivtError::Format(e.to_string()))
    }

    /// Reads the format produced by [`CountSeries::write_csv`]. The bin width
    /// is the spacing of the `t` column, which must be uniform.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header = rd.headers()?.clone();
        if header.len() < 2 || &header[0] != "t" {
            return Err(MivtError::Format(
                "counts CSV needs a header 't,<label1>,...'".into(),
            ));
        }
        let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut times = Vec::new();
        let mut data = vec![Vec::new(); labels.len()];
        for (row, rec) in rd.records().enumerate() {
            let rec = rec?;
            let line = row + 2;
            let t: f64 = rec[0]
                .parse()
                .map_err(|_| MivtError::Format(format!("line {line}: bad time stamp '{}'", &rec[0])))?;
            times.push(t);
            for (i, col) in data.iter_mut().enumerate() {
                let field = &rec[i + 1];
                let v: u64 = field.parse().map_err(|_| {
                    MivtError::Format(format!("line {line}: '{field}' is not a non-negative integer count"))
                })?;
                col.push(v);
            }
        }
        if times.is_empty() {
            return Err(MivtError::Degenerate("counts CSV has no rows".into()));
        }
        let delta = if times.len() >= 2 { times[1] - times[0] } else { times[0].abs() };
        let delta = if delta > 0.0 { delta } else { 1.0 };
        let origin = times[0] - delta;
        for (k, &t) in times.iter().enumerate() {
            let expected = origin + (k + 1) as f64 * delta;
            if (t - expected).abs() > 1e-9 * expected.abs().max(delta) {
                return Err(MivtError::Format(format!(
                    "time column is not equally spaced at row {} ({t} vs {expected})",
                    k + 1
                )));
            }
        }
        Self::with_origin(delta, origin, labels, data)
    }
}
