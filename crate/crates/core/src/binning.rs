//! Counting event timestamps in half-open bins `[start + kΔ, start + (k+1)Δ)`.

use crate::error::{MivtError, Result};
use crate::series::CountSeries;
use std::io::Read;

/// Reads a single-column events CSV with header `timestamp`.
pub fn read_events<R: Read>(r: R) -> Result<Vec<f64>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rd.headers()?.clone();
    if header.len() != 1 || &header[0] != "timestamp" {
        return Err(MivtError::Format("events CSV needs the single header 'timestamp'".into()));
    }
    let mut out = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let v: f64 = rec[0]
            .parse()
            .map_err(|_| MivtError::Format(format!("line {}: bad timestamp '{}'", row + 2, &rec[0])))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(MivtError::Format(format!(
                "line {}: timestamps must be finite and non-negative, got {v}",
                row + 2
            )));
        }
        out.push(v);
    }
    Ok(out)
}

/// Number of whole bins in `[start, end)`.
pub fn bin_count(delta: f64, start: f64, end: f64) -> Result<usize> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(MivtError::invalid(format!("bin width must be positive, got {delta}")));
    }
    if !(start.is_finite() && end.is_finite() && start < end) {
        return Err(MivtError::invalid(format!("need start < end, got [{start}, {end})")));
    }
    let k = ((end - start) / delta).floor();
    if k < 1.0 {
        return Err(MivtError::Degenerate(format!(
            "window [{start}, {end}) is shorter than one bin of width {delta}"
        )));
    }
    Ok(k as usize)
}

/// Bins each component's events. The result has bin width `delta` and time
/// column at the right bin edges `start + (k+1)Δ`. Events outside the `K`
/// whole bins are dropped.
pub fn bin_events(events: &[Vec<f64>], labels: Vec<String>, delta: f64, start: f64, end: f64) -> Result<CountSeries> {
    let k = bin_count(delta, start, end)?;
    let data = events
        .iter()
        .map(|ev| {
            let mut counts = vec![0u64; k];
            for &t in ev {
                if t < start {
                    continue;
                }
                let b = ((t - start) / delta).floor();
                // Membership is decided against the rounded edges `start + bΔ`.
                let b = if b >= 1.0 && start + b * delta > t {
                    b - 1.0
                } else if start + (b + 1.0) * delta <= t {
                    b + 1.0
                } else {
                    b
                };
                if b < k as f64 {
                    counts[b as usize] += 1;
                }
            }
            counts
        })
        .collect();
    CountSeries::with_origin(delta, start, labels, data)
}

/// Relabels time so that one bin is one time unit: `t = 1..=K`.
pub fn in_bin_units(series: &CountSeries) -> Result<CountSeries> {
    CountSeries::new(1.0, series.labels().to_vec(), series.components().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(ev: Vec<f64>, delta: f64, start: f64, end: f64) -> Vec<u64> {
        bin_events(&[ev], vec!["a".into()], delta, start, end).unwrap().component(0).to_vec()
    }

    #[test]
    fn direct_counts_and_edges() {
        assert_eq!(one(vec![0.1, 4.9, 5.2], 5.0, 0.0, 10.0), vec![2, 1]);
        assert_eq!(one(vec![5.0], 5.0, 0.0, 10.0), vec![0, 1]);
        assert_eq!(one(vec![10.0, -0.0, 12.0], 5.0, 0.0, 10.0), vec![1, 0]);
        // Partial trailing bin is dropped.
        assert_eq!(one(vec![10.5], 5.0, 0.0, 12.0), vec![0, 0]);
    }

    #[test]
    fn trading_day_shape() {
        assert_eq!(bin_count(5.0, 1800.0, 21600.0).unwrap(), 3960);
        let s = bin_events(&[vec![1800.0, 21599.9]], vec!["a".into()], 5.0, 1800.0, 21600.0).unwrap();
        assert_eq!(s.len(), 3960);
        assert_eq!(s.time(0), 1805.0);
        assert_eq!(s.component(0)[3959], 1);
        let u = in_bin_units(&s).unwrap();
        assert_eq!((u.time(0), u.time(3959)), (1.0, 3960.0));
    }

    #[test]
    fn errors() {
        assert!(bin_count(5.0, 10.0, 10.0).is_err());
        assert!(bin_count(5.0, 0.0, 4.0).is_err());
        assert!(bin_count(0.0, 0.0, 4.0).is_err());
        assert!(read_events("time\n1\n".as_bytes()).is_err());
        assert!(read_events("timestamp\n-1\n".as_bytes()).is_err());
        assert_eq!(read_events("timestamp\n2.5\n1\n".as_bytes()).unwrap(), vec![2.5, 1.0]);
    }
}
