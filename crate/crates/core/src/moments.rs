//! Empirical moments of count series. Autocovariances use the `1/K`
//! denominator.

use crate::error::{MivtError, Result};
use crate::series::CountSeries;
use serde::{Deserialize, Serialize};

pub fn mean(x: &[u64]) -> f64 {
    x.iter().map(|&v| v as f64).sum::<f64>() / x.len() as f64
}

fn centred(x: &[u64]) -> Vec<f64> {
    let m = mean(x);
    x.iter().map(|&v| v as f64 - m).collect()
}

fn check_component(series: &CountSeries, i: usize) -> Result<()> {
    if i >= series.dim() {
        return Err(MivtError::invalid(format!(
            "component {i} out of range for a {}-dimensional series",
            series.dim()
        )));
    }
    Ok(())
}

fn check_variance(series: &CountSeries, i: usize) -> Result<()> {
    let x = series.component(i);
    if x.iter().all(|&v| v == x[0]) {
        return Err(MivtError::Degenerate(format!(
            "component '{}' is constant",
            series.labels()[i]
        )));
    }
    Ok(())
}

/// Autocovariances `c(0..=max_lag)` of a slice.
pub fn autocovariances(x: &[u64], max_lag: usize) -> Vec<f64> {
    let y = centred(x);
    let k = y.len();
    (0..=max_lag)
        .map(|h| {
            if h >= k {
                return 0.0;
            }
            y[..k - h].iter().zip(&y[h..]).map(|(a, b)| a * b).sum::<f64>() / k as f64
        })
        .collect()
}

/// `r(h) = c(h) / c(0)` for `h = 1..=max_lag` (lags in bins).
pub fn sample_acf(series: &CountSeries, component: usize, max_lag: usize) -> Result<Vec<f64>> {
    check_component(series, component)?;
    if series.len() <= max_lag + 2 {
        return Err(MivtError::invalid(format!(
            "series of length {} is too short for {max_lag} lags",
            series.len()
        )));
    }
    check_variance(series, component)?;
    let c = autocovariances(series.component(component), max_lag);
    Ok(c[1..].iter().map(|v| v / c[0]).collect())
}

/// `c_ij(h) = (1/K) sum_k (y_i[k] - mean_i)(y_j[k+h] - mean_j)`; `h` may be negative.
pub fn sample_ccov(series: &CountSeries, i: usize, j: usize, h: i64) -> Result<f64> {
    check_component(series, i)?;
    check_component(series, j)?;
    let k = series.len();
    if h.unsigned_abs() as usize + 2 >= k {
        return Err(MivtError::invalid(format!("lag {h} too long for series of length {k}")));
    }
    check_variance(series, i)?;
    check_variance(series, j)?;
    let x = centred(series.component(i));
    let y = centred(series.component(j));
    let s: f64 = if h >= 0 {
        let h = h as usize;
        x[..k - h].iter().zip(&y[h..]).map(|(a, b)| a * b).sum()
    } else {
        let h = (-h) as usize;
        x[h..].iter().zip(&y[..k - h]).map(|(a, b)| a * b).sum()
    };
    Ok(s / k as f64)
}

/// Moment-based cumulant estimates `kappa_1..kappa_order`, `order <= 4`.
pub fn sample_cumulants(series: &CountSeries, component: usize, order: usize) -> Result<Vec<f64>> {
    check_component(series, component)?;
    if !(1..=4).contains(&order) {
        return Err(MivtError::invalid(format!("cumulant order must be 1..=4, got {order}")));
    }
    if series.len() < 10 {
        return Err(MivtError::invalid("cumulant estimates need at least 10 observations"));
    }
    Ok(cumulants(series.component(component))[..order].to_vec())
}

/// `(mean, m2, m3, m4 - 3 m2^2)` with central moments `m_r`.
pub fn cumulants(x: &[u64]) -> [f64; 4] {
    let y = centred(x);
    let k = y.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in &y {
        let v2 = v * v;
        m2 += v2;
        m3 += v2 * v;
        m4 += v2 * v2;
    }
    let (m2, m3, m4) = (m2 / k, m3 / k, m4 / k);
    [mean(x), m2, m3, m4 - 3.0 * m2 * m2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub label: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Variance over mean; absent when the mean is zero.
    pub dispersion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub n_obs: usize,
    pub delta: f64,
    pub components: Vec<ComponentSummary>,
    /// Lag-0 correlation matrix; entries involving a constant component are absent.
    pub correlation: Vec<Vec<Option<f64>>>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(series: &CountSeries) -> MomentSummary {
    let k = series.len();
    let components = (0..series.dim())
        .map(|i| {
            let x = series.component(i);
            let mut s: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            s.sort_by(f64::total_cmp);
            let m = mean(x);
            let variance = if k > 1 {
                s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (k - 1) as f64
            } else {
                0.0
            };
            ComponentSummary {
                label: series.labels()[i].clone(),
                min: s[0],
                q1: quantile(&s, 0.25),
                median: quantile(&s, 0.5),
                mean: m,
                q3: quantile(&s, 0.75),
                max: s[k - 1],
                variance,
                dispersion: (m > 0.0).then(|| variance / m),
            }
        })
        .collect();
    let n = series.dim();
    let c: Vec<Vec<f64>> = (0..n).map(|i| centred(series.component(i))).collect();
    let ss: Vec<f64> = c.iter().map(|v| v.iter().map(|a| a * a).sum()).collect();
    let correlation = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if ss[i] == 0.0 || ss[j] == 0.0 {
                        None
                    } else {
                        let sxy: f64 = c[i].iter().zip(&c[j]).map(|(a, b)| a * b).sum();
                        Some(sxy / (ss[i] * ss[j]).sqrt())
                    }
                })
                .collect()
        })
        .collect();
    MomentSummary {
        n_obs: k,
        delta: series.delta(),
        components,
        correlation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, Poisson};

    fn series(cols: Vec<Vec<u64>>) -> CountSeries {
        let n = cols.len();
        CountSeries::new(1.0, CountSeries::default_labels(n), cols).unwrap()
    }

    fn poisson_series(lambda: f64, k: usize, seed: u64) -> Vec<u64> {
        let mut rng = stream_rng(seed, 0);
        let d = Poisson::new(lambda).unwrap();
        (0..k).map(|_| d.sample(&mut rng) as u64).collect()
    }

    #[test]
    fn alternating_series_acf() {
        for k in [6usize, 11, 40] {
            let x: Vec<u64> = (0..k).map(|i| 1 + (i % 2) as u64).collect();
            // Brute force: deviations from the sample mean.
            let m = x.iter().sum::<u64>() as f64 / k as f64;
            let c0: f64 = x.iter().map(|&v| (v as f64 - m).powi(2)).sum();
            let c1: f64 = x.windows(2).map(|w| (w[0] as f64 - m) * (w[1] as f64 - m)).sum();
            let r = sample_acf(&series(vec![x]), 0, 1).unwrap();
            assert!((r[0] - c1 / c0).abs() < 1e-14);
            if k % 2 == 0 {
                assert!((r[0] + (k as f64 - 1.0) / k as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn iid_poisson_acf_small() {
        let s = series(vec![poisson_series(5.0, 100_000, 1)]);
        assert!(sample_acf(&s, 0, 1).unwrap()[0].abs() < 0.02);
    }

    #[test]
    fn constant_series_rejected_and_cumulants_zero() {
        let s = series(vec![vec![3; 50]]);
        assert!(matches!(sample_acf(&s, 0, 5), Err(MivtError::Degenerate(_))));
        assert_eq!(sample_cumulants(&s, 0, 4).unwrap(), vec![3.0, 0.0, 0.0, 0.0]);
        let z = summarize(&series(vec![vec![0; 20]]));
        assert_eq!(z.components[0].mean, 0.0);
        assert_eq!(z.components[0].variance, 0.0);
        assert_eq!(z.components[0].dispersion, None);
    }

    #[test]
    fn poisson_cumulants_all_equal_rate() {
        let s = series(vec![poisson_series(5.0, 400_000, 2)]);
        let c = sample_cumulants(&s, 0, 4).unwrap();
        for (r, v) in c.iter().enumerate() {
            assert!((v - 5.0).abs() < 0.25, "order {}: {v}", r + 1);
        }
    }

    #[test]
    fn ccov_lag0_is_variance_and_symmetric() {
        let s = series(vec![poisson_series(3.0, 500, 3), poisson_series(7.0, 500, 4)]);
        let c = autocovariances(s.component(0), 0)[0];
        assert!((sample_ccov(&s, 0, 0, 0).unwrap() - c).abs() < 1e-12);
        for h in -5i64..=5 {
            assert_eq!(sample_ccov(&s, 0, 1, h).unwrap(), sample_ccov(&s, 1, 0, -h).unwrap());
        }
    }

    #[test]
    fn summary_quartiles() {
        let s = series(vec![vec![1, 2, 3, 4, 5, 6, 7, 8, 9]]);
        let c = &summarize(&s).components[0];
        assert_eq!((c.min, c.q1, c.median, c.q3, c.max), (1.0, 3.0, 5.0, 7.0, 9.0));
        assert_eq!(c.variance, 7.5);
    }
}
