use super::{fit, model_parameters, FitReport, FitTemplate};
use crate::error::{MivtError, Result};
use crate::rng::stream_seed;
use crate::simulate::{default_burnin, simulate_mivt, MivtModel, SimConfig, DEFAULT_BURNIN_EPS};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Percentile interval for one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    /// Whether `lower <= estimate <= upper`. Percentile intervals are not
    /// forced to contain the point estimate.
    pub contains_estimate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInfo {
    pub reps: usize,
    pub failures: usize,
    pub level: f64,
    pub seed: u64,
}

/// Per-replicate estimates, rows ordered by replicate index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateEstimates {
    pub names: Vec<String>,
    pub estimates: Vec<Vec<f64>>,
    pub failures: usize,
    pub reps: usize,
}

impl ReplicateEstimates {
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.estimates.iter().map(|row| row[k]).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<f64>> {
        self.names.iter().position(|n| n == name).map(|k| self.column(k))
    }
}

/// Runs `refit(r, seed_r)` for `r = 0..reps` in parallel with
/// `seed_r = stream_seed(seed, r)`. More than 10% failures is an error.
pub fn replicate_estimates<F>(reps: usize, seed: u64, refit: F) -> Result<ReplicateEstimates>
where
    F: Fn(usize, u64) -> Result<Vec<(String, f64)>> + Sync,
{
    let results: Vec<Result<Vec<(String, f64)>>> = (0..reps)
        .into_par_iter()
        .map(|r| refit(r, stream_seed(seed, r as u64)))
        .collect();
    let mut names: Option<Vec<String>> = None;
    let mut estimates = Vec::new();
    let mut failures = 0;
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(row) => {
                let (n, v): (Vec<String>, Vec<f64>) = row.into_iter().unzip();
                match &names {
                    None => names = Some(n),
                    Some(existing) if *existing != n => {
                        return Err(MivtError::invalid("replicate fits returned different parameter sets"));
                    }
                    _ => {}
                }
                estimates.push(v);
            }
            Err(e) => {
                log::debug!("replicate {r} failed: {e}");
                failures += 1;
            }
        }
    }
    if failures * 10 > reps || estimates.is_empty() {
        return Err(MivtError::BootstrapUnstable { failures, reps });
    }
    Ok(ReplicateEstimates {
        names: names.unwrap_or_default(),
        estimates,
        failures,
        reps,
    })
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed percentile interval of `samples` at `level`.
pub fn percentile_interval(samples: &[f64], level: f64, estimate: f64) -> Result<Interval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(MivtError::invalid(format!("interval level must lie in (0, 1), got {level}")));
    }
    if samples.is_empty() {
        return Err(MivtError::invalid("no bootstrap samples"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let lower = quantile_sorted(&s, 0.5 * (1.0 - level));
    let upper = quantile_sorted(&s, 0.5 * (1.0 + level));
    Ok(Interval {
        level,
        lower,
        upper,
        estimate,
        contains_estimate: lower <= estimate && estimate <= upper,
    })
}

fn config_for(model: &MivtModel, n_obs: usize, delta: f64, seed: u64) -> Result<SimConfig> {
    let bi = default_burnin(model, DEFAULT_BURNIN_EPS)?;
    Ok(SimConfig::new(delta, n_obs as f64 * delta, (bi / delta).ceil() * delta, seed))
}

/// Parametric bootstrap: simulate `reps` paths from the fitted model at the
/// observed length and bin width, refit each, and attach percentile intervals.
pub fn bootstrap(report: &FitReport, reps: usize, level: f64, seed: u64) -> Result<FitReport> {
    if reps < 50 {
        return Err(MivtError::invalid(format!("bootstrap needs at least 50 replicates, got {reps}")));
    }
    let model = report.model.as_ref().ok_or_else(|| {
        MivtError::ModelMismatch("fitted parameters lie outside the model domain; nothing to simulate from".into())
    })?;
    let d = &report.diagnostics;
    let template = report.template.clone();
    let base = config_for(model, d.n_obs, d.delta, 0)?;
    let samples = replicate_estimates(reps, seed, |_, s| {
        let series = simulate_mivt(model, &SimConfig { seed: s, ..base })?;
        Ok(fit(&series, &template)?.parameters())
    })?;
    let mut out = report.clone();
    out.ci.clear();
    for (k, (name, estimate)) in report.parameters().into_iter().enumerate() {
        if samples.names.get(k) != Some(&name) {
            return Err(MivtError::invalid("bootstrap parameter names do not match the fit"));
        }
        out.ci.insert(name, percentile_interval(&samples.column(k), level, estimate)?);
    }
    out.diagnostics.bootstrap = Some(BootstrapInfo {
        reps,
        failures: samples.failures,
        level,
        seed,
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub truth: f64,
    pub median: f64,
    pub mean: f64,
    pub sd: f64,
    pub bias: f64,
    /// Median absolute error.
    pub mad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McStudy {
    pub n_obs: usize,
    pub delta: f64,
    pub replicates: ReplicateEstimates,
    pub summary: Vec<ParamSummary>,
}

/// Simulate-and-refit study at a known truth.
pub fn mc_study(
    model: &MivtModel,
    template: &FitTemplate,
    reps: usize,
    n_obs: usize,
    delta: f64,
    seed: u64,
) -> Result<McStudy> {
    if reps == 0 || n_obs == 0 {
        return Err(MivtError::invalid("study needs at least one replicate and one observation"));
    }
    let base = config_for(model, n_obs, delta, 0)?;
    let replicates = replicate_estimates(reps, seed, |_, s| {
        let series = simulate_mivt(model, &SimConfig { seed: s, ..base })?;
        Ok(fit(&series, template)?.parameters())
    })?;
    let truth = model_parameters(model);
    let summary = truth
        .iter()
        .enumerate()
        .map(|(k, (name, t))| {
            let mut col = replicates.column(k);
            col.sort_by(f64::total_cmp);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let sd = if col.len() > 1 {
                (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let mut abs_err: Vec<f64> = col.iter().map(|v| (v - t).abs()).collect();
            abs_err.sort_by(f64::total_cmp);
            ParamSummary {
                name: name.clone(),
                truth: *t,
                median: quantile_sorted(&col, 0.5),
                mean,
                sd,
                bias: mean - t,
                mad: quantile_sorted(&abs_err, 0.5),
            }
        })
        .collect();
    Ok(McStudy {
        n_obs,
        delta,
        replicates,
        summary,
    })
}
