//! Two-stage method-of-moments estimation and parametric bootstrap.
//!
//! Stage 1a fits each trawl to its empirical autocorrelation, stage 1b turns
//! means and variances into marginal seed parameters, and stage 2 recovers
//! the dependence parameters from lag-0 cross-covariances.

mod bootstrap;
pub mod optim;

pub use bootstrap::{
    bootstrap, mc_study, percentile_interval, replicate_estimates, BootstrapInfo, Interval, McStudy,
    ParamSummary, ReplicateEstimates,
};

use crate::error::{MivtError, Result};
use crate::moments::{cumulants, sample_acf, sample_ccov};
use crate::seed::{SeedFamily, SeedParams, SeedSpec};
use crate::series::CountSeries;
use crate::simulate::MivtModel;
use crate::trawl::{autocorrelator, TrawlFamily, TrawlParams, TrawlSpec};
use optim::{minimize, SimplexOptions};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default number of ACF lags matched in stage 1a.
pub const DEFAULT_LAGS: usize = 30;

// Log-parameters beyond this magnitude count as a run to the domain boundary.
const LOG_BOUND: f64 = 20.0;
const NU_BOUND: f64 = 50.0;

/// Fitted trawl of one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrawlFit {
    pub spec: TrawlSpec,
    /// Sum of squared ACF errors at the optimum.
    pub residual: f64,
    pub lags: usize,
}

fn to_params(family: TrawlFamily, th: &[f64]) -> TrawlParams {
    match family {
        TrawlFamily::Exponential => TrawlParams::Exponential { lambda: th[0].exp() },
        TrawlFamily::SupIg => TrawlParams::SupIg {
            delta: th[0].exp(),
            gamma: th[1].exp(),
        },
        TrawlFamily::GammaLm => TrawlParams::GammaLm {
            alpha: th[0].exp(),
            h: 1.0 + th[1].exp(),
        },
        TrawlFamily::Gig => TrawlParams::Gig {
            nu: th[0],
            delta: th[1].exp(),
            gamma: th[2].exp(),
        },
        TrawlFamily::SeasonalExp => TrawlParams::SeasonalExp {
            lambda: th[0].exp(),
            psi: th[1],
        },
    }
}

fn at_boundary(family: TrawlFamily, th: &[f64]) -> bool {
    beyond(family, th, 1.0)
}

fn beyond(family: TrawlFamily, th: &[f64], factor: f64) -> bool {
    let log_idx: &[usize] = match family {
        TrawlFamily::Exponential => &[0],
        TrawlFamily::SupIg | TrawlFamily::GammaLm => &[0, 1],
        TrawlFamily::Gig => &[1, 2],
        TrawlFamily::SeasonalExp => &[0],
    };
    log_idx.iter().any(|&i| th[i].abs() >= factor * LOG_BOUND)
        || (family == TrawlFamily::Gig && th[0].abs() >= factor * NU_BOUND)
}

fn acf_objective(family: TrawlFamily, acf: &[f64], delta: f64, th: &[f64]) -> f64 {
    if beyond(family, th, 2.0) {
        return f64::INFINITY;
    }
    let spec = match TrawlSpec::new(to_params(family, th)) {
        Ok(s) => s,
        Err(_) => return f64::INFINITY,
    };
    acf.iter()
        .enumerate()
        .map(|(h, &r)| {
            let e = r - spec.acf_unchecked((h + 1) as f64 * delta);
            e * e
        })
        .sum()
}

/// Lag (physical units) at which the empirical ACF first drops to `1/e`.
fn decorrelation_time(acf: &[f64], delta: f64) -> f64 {
    let target = (-1.0f64).exp();
    let mut prev = 1.0;
    for (h, &r) in acf.iter().enumerate() {
        if r <= target {
            let frac = (prev - target) / (prev - r);
            return delta * (h as f64 + frac.clamp(0.0, 1.0)).max(0.05);
        }
        prev = r;
    }
    2.0 * delta * acf.len() as f64
}

fn starts(family: TrawlFamily, acf: &[f64], delta: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let tau = decorrelation_time(acf, delta);
    let mults = [0.1, 0.316, 1.0, 3.16, 10.0];
    match family {
        TrawlFamily::Exponential => {
            let mut v: Vec<(Vec<f64>, Vec<f64>)> =
                mults.iter().map(|m| (vec![(m / tau).ln()], vec![0.5])).collect();
            if let Some(l) = log_regression_rate(acf, delta) {
                v.insert(0, (vec![l.ln()], vec![0.2]));
            }
            v
        }
        TrawlFamily::SupIg => mults
            .iter()
            .map(|m| {
                let gamma = m * (2.0 * tau).sqrt();
                (vec![(gamma / tau).ln(), gamma.ln()], vec![0.5, 0.5])
            })
            .collect(),
        TrawlFamily::GammaLm => mults
            .iter()
            .map(|m| {
                let hm1: f64 = *m;
                let alpha = tau / (1.0 / hm1).exp_m1().min(1e300);
                (vec![alpha.max(1e-8).ln(), hm1.ln()], vec![0.5, 0.5])
            })
            .collect(),
        TrawlFamily::Gig => {
            let gamma = (2.0 * tau).sqrt();
            [-1.5, -0.5, 0.5, 1.5, 3.0]
                .iter()
                .map(|&nu| (vec![nu, (gamma / tau).ln(), gamma.ln()], vec![0.5, 0.5, 0.5]))
                .collect()
        }
        TrawlFamily::SeasonalExp => [0.02, 0.05, 0.1, 0.2, 0.4]
            .iter()
            .map(|&f| (vec![(1.0 / tau).ln(), f / delta], vec![0.5, 0.25 * f / delta]))
            .collect(),
    }
}

/// Through-origin least squares of `ln r(h)` on `h delta` over positive values.
pub fn log_regression_rate(acf: &[f64], delta: f64) -> Option<f64> {
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (h, &r) in acf.iter().enumerate() {
        if r > 0.0 {
            let x = (h + 1) as f64 * delta;
            sxy += x * r.ln();
            sxx += x * x;
        }
    }
    let l = -sxy / sxx;
    (sxx > 0.0 && l.is_finite() && l > 0.0).then_some(l)
}

/// Least-squares fit of a trawl family to `acf[h-1] = r(h delta)`,
/// `h = 1..=acf.len()`, by multi-start simplex search.
pub fn fit_trawl(acf: &[f64], family: TrawlFamily, delta: f64) -> Result<TrawlFit> {
    let p = family.n_params();
    if acf.len() < p + 1 {
        return Err(MivtError::invalid(format!(
            "{family} trawl needs at least {} ACF lags, got {}",
            p + 1,
            acf.len()
        )));
    }
    if acf.iter().any(|r| !(r.abs() <= 1.0)) {
        return Err(MivtError::invalid("ACF values must be finite and within [-1, 1]"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(MivtError::invalid(format!("bin width must be positive, got {delta}")));
    }
    let opts = SimplexOptions::default();
    let objective = |th: &[f64]| acf_objective(family, acf, delta, th);
    let mut best: Option<optim::Minimum> = None;
    for (x0, step) in starts(family, acf, delta) {
        let m = minimize(objective, &x0, &step, &opts);
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    if !best.f.is_finite() {
        return Err(MivtError::FitFailure {
            message: format!("no start produced a valid {family} trawl"),
            best_residual: best.f,
        });
    }
    if at_boundary(family, &best.x) {
        return Err(MivtError::FitFailure {
            message: format!("{family} trawl parameters ran to the boundary of their domain"),
            best_residual: best.f,
        });
    }
    let spec = TrawlSpec::new(to_params(family, &best.x)).map_err(|e| MivtError::FitFailure {
        message: format!("optimum is not a valid trawl: {e}"),
        best_residual: best.f,
    })?;
    Ok(TrawlFit {
        spec,
        residual: best.f,
        lags: acf.len(),
    })
}

/// Process mean and variance of one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentMoments {
    pub mean: f64,
    pub var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalFit {
    /// `alpha_i = var_i / mean_i - 1` (negative binomial families).
    pub alpha: Option<Vec<f64>>,
    /// Seed means `mean_i / leb_i`.
    pub seed_mean: Vec<f64>,
    /// Seed variances `var_i / leb_i`.
    pub seed_var: Vec<f64>,
    /// Per-component gamma shape `mean_i / (leb_i alpha_i)`; a diagnostic only.
    pub implied_shape: Option<Vec<f64>>,
}

/// Stage 1b: de-scale process cumulants by the trawl measures.
pub fn fit_marginal(moments: &[ComponentMoments], leb_hat: &[f64], family: SeedFamily) -> Result<MarginalFit> {
    if moments.len() != leb_hat.len() || moments.is_empty() {
        return Err(MivtError::invalid("one trawl measure per component is required"));
    }
    if leb_hat.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(MivtError::invalid(format!("trawl measures must be positive, got {leb_hat:?}")));
    }
    for (i, m) in moments.iter().enumerate() {
        if !(m.mean > 0.0) {
            return Err(MivtError::Degenerate(format!("component {} has zero mean", i + 1)));
        }
    }
    let seed_mean: Vec<f64> = moments.iter().zip(leb_hat).map(|(m, l)| m.mean / l).collect();
    let seed_var: Vec<f64> = moments.iter().zip(leb_hat).map(|(m, l)| m.var / l).collect();
    if !family.is_negative_binomial() {
        return Ok(MarginalFit {
            alpha: None,
            seed_mean,
            seed_var,
            implied_shape: None,
        });
    }
    let mut alpha = Vec::with_capacity(moments.len());
    for (i, m) in moments.iter().enumerate() {
        let a = m.var / m.mean - 1.0;
        if !(a > 0.0) {
            return Err(MivtError::ModelMismatch(format!(
                "component {} is not overdispersed (variance {} <= mean {}); a negative binomial seed cannot fit it",
                i + 1,
                m.var,
                m.mean
            )));
        }
        alpha.push(a);
    }
    let implied_shape = seed_mean.iter().zip(&alpha).map(|(m, a)| m / a).collect();
    Ok(MarginalFit {
        alpha: Some(alpha),
        seed_mean,
        seed_var,
        implied_shape: Some(implied_shape),
    })
}

/// Seed family plus, for the Poisson factor model, the factor matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTemplate {
    pub trawls: Vec<TrawlFamily>,
    pub seed: SeedFamily,
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    pub factor_matrix: Option<Vec<Vec<u32>>>,
    pub lags: usize,
}

impl FitTemplate {
    pub fn new(trawls: Vec<TrawlFamily>, seed: SeedFamily) -> Self {
        Self {
            trawls,
            seed,
            factor_matrix: None,
            lags: DEFAULT_LAGS,
        }
    }

    /// Families of an existing model.
    pub fn of_model(model: &MivtModel) -> Self {
        let factor_matrix = match model.seed().params() {
            SeedParams::PoissonFactor { a, .. } => Some(a.clone()),
            _ => None,
        };
        Self {
            trawls: model.trawls().iter().map(|t| t.family()).collect(),
            seed: model.seed().family(),
            factor_matrix,
            lags: DEFAULT_LAGS,
        }
    }

    /// Factor matrix, defaulting to one idiosyncratic column per component
    /// plus a shared all-ones column.
    pub fn factor_matrix_or_default(&self) -> Vec<Vec<u32>> {
        if let Some(a) = &self.factor_matrix {
            return a.clone();
        }
        let n = self.trawls.len();
        if n == 1 {
            return vec![vec![1]];
        }
        (0..n)
            .map(|i| {
                let mut row: Vec<u32> = (0..n).map(|k| (k == i) as u32).collect();
                row.push(1);
                row
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub i: usize,
    pub j: usize,
    /// Lag-0 sample cross-covariance.
    pub ccov0: f64,
    /// Fitted autocorrelator `R_ij(0)`.
    pub r0: f64,
    /// `ccov0 / r0`.
    pub kappa_ij: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceFit {
    /// Common-factor shape.
    pub kappa: Option<f64>,
    pub kappa_idio: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub pairs: Vec<PairEstimate>,
    /// Set when a negative estimate was floored at zero.
    pub floored: bool,
    /// Standard deviation of the per-pair common-factor estimates (n > 2).
    pub spread: Option<f64>,
}

/// Stage 2 from a lag-0 cross-covariance matrix (only `i < j` entries are read).
pub fn fit_dependence_from_ccov(
    ccov0: &[Vec<f64>],
    trawls: &[TrawlSpec],
    marginal: &MarginalFit,
    template: &FitTemplate,
) -> Result<(DependenceFit, SeedParams)> {
    let n = trawls.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let r0 = autocorrelator(&trawls[i], &trawls[j], 0.0)?;
            if !(r0 > 0.0) {
                return Err(MivtError::Numeric {
                    message: format!("autocorrelator R_{}{}(0) is not positive", i + 1, j + 1),
                    achieved: r0,
                });
            }
            pairs.push(PairEstimate {
                i,
                j,
                ccov0: ccov0[i][j],
                r0,
                kappa_ij: ccov0[i][j] / r0,
            });
        }
    }
    let mut fit = DependenceFit {
        kappa: None,
        kappa_idio: None,
        theta: None,
        pairs,
        floored: false,
        spread: None,
    };
    let need_alpha = || {
        marginal
            .alpha
            .clone()
            .ok_or_else(|| MivtError::invalid("negative binomial dependence needs marginal alpha estimates"))
    };
    let seed = match template.seed {
        SeedFamily::NbIndependent => {
            let alpha = need_alpha()?;
            SeedParams::NbIndependent {
                kappa: marginal.implied_shape.clone().unwrap_or_default(),
                beta: alpha,
            }
        }
        SeedFamily::NbCommonFactor | SeedFamily::NbCommonPlusIdio => {
            let alpha = need_alpha()?;
            let kappa = if n == 1 {
                marginal.implied_shape.as_ref().map(|s| s[0]).unwrap_or(0.0)
            } else {
                let per_pair: Vec<f64> = fit.pairs.iter().map(|p| p.kappa_ij / (alpha[p.i] * alpha[p.j])).collect();
                let avg = per_pair.iter().sum::<f64>() / per_pair.len() as f64;
                if per_pair.len() > 1 {
                    let var = per_pair.iter().map(|k| (k - avg).powi(2)).sum::<f64>() / (per_pair.len() - 1) as f64;
                    fit.spread = Some(var.sqrt());
                }
                avg
            };
            let kappa = if kappa < 0.0 {
                log::warn!("negative cross-covariance: common-factor shape {kappa} floored at 0");
                fit.floored = true;
                0.0
            } else {
                kappa
            };
            fit.kappa = Some(kappa);
            if template.seed == SeedFamily::NbCommonFactor {
                SeedParams::NbCommonFactor { kappa, alpha }
            } else {
                let shapes = marginal.implied_shape.clone().unwrap_or_default();
                let kappa_idio: Vec<f64> = shapes.iter().map(|s| (s - kappa).max(0.0)).collect();
                fit.kappa_idio = Some(kappa_idio.clone());
                SeedParams::NbCommonPlusIdio {
                    kappa,
                    alpha,
                    kappa_idio,
                }
            }
        }
        SeedFamily::PoissonFactor => {
            let a = template.factor_matrix_or_default();
            if a.len() != n {
                return Err(MivtError::invalid(format!(
                    "factor matrix has {} rows for {n} components",
                    a.len()
                )));
            }
            let theta = fit_poisson_factor(&a, &marginal.seed_mean, &fit.pairs)?;
            fit.theta = Some(theta.clone());
            SeedParams::PoissonFactor { a, theta }
        }
    };
    Ok((fit, seed))
}

/// Least squares for `theta` matching `A theta` to the seed means and
/// `A diag(theta) A^T` to the pairwise seed covariances.
fn fit_poisson_factor(a: &[Vec<u32>], mean: &[f64], pairs: &[PairEstimate]) -> Result<Vec<f64>> {
    let m = a.first().map_or(0, Vec::len);
    if m == 0 {
        return Err(MivtError::invalid("factor matrix has no columns"));
    }
    let scale = |x: f64| x.abs().max(1.0);
    let objective = |lt: &[f64]| -> f64 {
        let th: Vec<f64> = lt.iter().map(|v| v.exp()).collect();
        let mut s = 0.0;
        for (i, row) in a.iter().enumerate() {
            let pred: f64 = row.iter().zip(&th).map(|(&x, t)| x as f64 * t).sum();
            s += ((pred - mean[i]) / scale(mean[i])).powi(2);
        }
        for p in pairs {
            let pred: f64 = (0..m).map(|k| (a[p.i][k] * a[p.j][k]) as f64 * th[k]).sum();
            s += ((pred - p.kappa_ij) / scale(mean[p.i].min(mean[p.j]))).powi(2);
        }
        s
    };
    let x0: Vec<f64> = (0..m)
        .map(|k| {
            let rows: Vec<usize> = (0..a.len()).filter(|&i| a[i][k] == 1).collect();
            let guess = rows
                .iter()
                .map(|&i| mean[i] / a[i].iter().sum::<u32>().max(1) as f64)
                .sum::<f64>()
                / rows.len().max(1) as f64;
            guess.max(1e-6).ln()
        })
        .collect();
    let best = minimize(objective, &x0, &vec![0.5; m], &SimplexOptions::default());
    if !best.f.is_finite() || best.x.iter().any(|v| v.abs() >= LOG_BOUND * 2.0) {
        return Err(MivtError::FitFailure {
            message: "Poisson factor rates did not converge".into(),
            best_residual: best.f,
        });
    }
    Ok(best.x.iter().map(|v| v.exp()).collect())
}

/// Stage 2 on a series.
pub fn fit_dependence(
    series: &CountSeries,
    trawls: &[TrawlSpec],
    marginal: &MarginalFit,
    template: &FitTemplate,
) -> Result<(DependenceFit, SeedParams)> {
    let n = series.dim();
    let mut ccov0 = vec![vec![0.0; n]; n];
    for (i, row) in ccov0.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate().skip(i + 1) {
            *v = sample_ccov(series, i, j, 0)?;
        }
    }
    fit_dependence_from_ccov(&ccov0, trawls, marginal, template)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub labels: Vec<String>,
    pub n_obs: usize,
    pub delta: f64,
    pub lags: usize,
    /// Fitted `leb(A_i)`.
    pub leb: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub trawl: Vec<TrawlFit>,
    pub marginal: MarginalFit,
    pub dependence: DependenceFit,
    /// Raw seed estimates (may sit on the boundary, e.g. a floored shape).
    pub seed: SeedParams,
    pub ci: BTreeMap<String, Interval>,
    pub diagnostics: Diagnostics,
    /// Fitted model; absent when the estimates lie outside the model's domain.
    pub model: Option<MivtModel>,
    pub template: FitTemplate,
}

impl FitReport {
    /// Named point estimates in a fixed order.
    pub fn parameters(&self) -> Vec<(String, f64)> {
        let specs: Vec<TrawlSpec> = self.trawl.iter().map(|t| t.spec).collect();
        named_parameters(&specs, &self.seed)
    }
}

/// `lambda_1, ..., alpha_1, ..., kappa` style names and values.
pub fn named_parameters(trawls: &[TrawlSpec], seed: &SeedParams) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for (i, t) in trawls.iter().enumerate() {
        let names = t.family().param_names();
        for (name, v) in names.iter().zip(t.params().values()) {
            // The gamma trawl's alpha would clash with the seed's alpha_i.
            let prefix = if *name == "alpha" { "trawl_" } else { "" };
            out.push((format!("{prefix}{name}_{}", i + 1), v));
        }
    }
    let indexed = |out: &mut Vec<(String, f64)>, name: &str, v: &[f64]| {
        for (i, &x) in v.iter().enumerate() {
            out.push((format!("{name}_{}", i + 1), x));
        }
    };
    match seed {
        SeedParams::NbCommonFactor { kappa, alpha } => {
            indexed(&mut out, "alpha", alpha);
            out.push(("kappa".into(), *kappa));
        }
        SeedParams::NbCommonPlusIdio {
            kappa,
            alpha,
            kappa_idio,
        } => {
            indexed(&mut out, "alpha", alpha);
            out.push(("kappa".into(), *kappa));
            indexed(&mut out, "kappa_idio", kappa_idio);
        }
        SeedParams::NbIndependent { kappa, beta } => {
            indexed(&mut out, "beta", beta);
            indexed(&mut out, "kappa", kappa);
        }
        SeedParams::PoissonFactor { theta, .. } => indexed(&mut out, "theta", theta),
    }
    out
}

pub fn model_parameters(model: &MivtModel) -> Vec<(String, f64)> {
    named_parameters(model.trawls(), model.seed().params())
}

/// Runs stages 1a, 1b and 2 on a series.
pub fn fit(series: &CountSeries, template: &FitTemplate) -> Result<FitReport> {
    let n = series.dim();
    if template.trawls.len() != n {
        return Err(MivtError::invalid(format!(
            "template has {} trawl families for {n} components",
            template.trawls.len()
        )));
    }
    if template.lags == 0 {
        return Err(MivtError::invalid("at least one ACF lag is required"));
    }
    let lags = template.lags;

    let mut trawl = Vec::with_capacity(n);
    for (i, &family) in template.trawls.iter().enumerate() {
        let fit_i = sample_acf(series, i, lags)
            .and_then(|acf| fit_trawl(&acf, family, series.delta()))
            .map_err(|e| e.at_stage("trawl fit"))?;
        trawl.push(fit_i);
    }
    let specs: Vec<TrawlSpec> = trawl.iter().map(|t| t.spec).collect();
    let leb: Vec<f64> = specs.iter().map(TrawlSpec::leb).collect();

    let moments: Vec<ComponentMoments> = (0..n)
        .map(|i| {
            let c = cumulants(series.component(i));
            ComponentMoments { mean: c[0], var: c[1] }
        })
        .collect();
    let marginal = fit_marginal(&moments, &leb, template.seed).map_err(|e| e.at_stage("marginal fit"))?;

    let (dependence, seed) =
        fit_dependence(series, &specs, &marginal, template).map_err(|e| e.at_stage("dependence fit"))?;
    let model = SeedSpec::new(seed.clone())
        .and_then(|s| MivtModel::new(specs.clone(), s))
        .ok();

    Ok(FitReport {
        trawl,
        marginal,
        dependence,
        seed,
        ci: BTreeMap::new(),
        diagnostics: Diagnostics {
            labels: series.labels().to_vec(),
            n_obs: series.len(),
            delta: series.delta(),
            lags,
            leb,
            bootstrap: None,
        },
        model,
        template: template.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_acf(spec: &TrawlSpec, lags: usize, delta: f64) -> Vec<f64> {
        (1..=lags).map(|h| spec.acf(h as f64 * delta).unwrap()).collect()
    }

    #[test]
    fn exponential_exact_recovery() {
        let spec = TrawlSpec::exponential(2.157).unwrap();
        let fit = fit_trawl(&exact_acf(&spec, 30, 1.0), TrawlFamily::Exponential, 1.0).unwrap();
        match fit.spec.params() {
            TrawlParams::Exponential { lambda } => assert!((lambda - 2.157).abs() < 1e-6, "{lambda}"),
            _ => unreachable!(),
        }
        assert_eq!(log_regression_rate(&exact_acf(&spec, 30, 1.0), 1.0).map(|l| (l - 2.157).abs() < 1e-9), Some(true));
    }

    #[test]
    fn sup_ig_exact_recovery() {
        let spec = TrawlSpec::new(TrawlParams::SupIg { delta: 1.0, gamma: 2.0 }).unwrap();
        let fit = fit_trawl(&exact_acf(&spec, 30, 1.0), TrawlFamily::SupIg, 1.0).unwrap();
        let v = fit.spec.params().values();
        assert!((v[0] - 1.0).abs() < 1e-4 && (v[1] - 2.0).abs() < 1e-4, "{v:?}");
    }

    #[test]
    fn gamma_and_gig_recovery() {
        let g = TrawlSpec::new(TrawlParams::GammaLm { alpha: 1.5, h: 2.5 }).unwrap();
        let fit = fit_trawl(&exact_acf(&g, 30, 1.0), TrawlFamily::GammaLm, 1.0).unwrap();
        let v = fit.spec.params().values();
        assert!((v[0] - 1.5).abs() < 1e-3 && (v[1] - 2.5).abs() < 1e-3, "{v:?}");
        let gig = TrawlSpec::new(TrawlParams::Gig { nu: -0.7, delta: 1.2, gamma: 0.9 }).unwrap();
        let fit = fit_trawl(&exact_acf(&gig, 30, 0.5), TrawlFamily::Gig, 0.5).unwrap();
        assert!(fit.residual < 1e-12, "{}", fit.residual);
    }

    #[test]
    fn scale_consistency() {
        for c in [0.25, 1.0, 4.0] {
            let spec = TrawlSpec::exponential(2.157 / c).unwrap();
            let fit = fit_trawl(&exact_acf(&spec, 30, c), TrawlFamily::Exponential, c).unwrap();
            let lambda = fit.spec.params().values()[0];
            assert!((lambda * c - 2.157).abs() < 1e-6);
        }
    }

    #[test]
    fn boundary_run_is_a_failure() {
        // Perfectly flat ACF drives the rate to zero.
        let err = fit_trawl(&[1.0; 10], TrawlFamily::Exponential, 1.0).unwrap_err();
        assert!(matches!(err, MivtError::FitFailure { .. }), "{err:?}");
    }

    #[test]
    fn marginal_inversion_is_exact() {
        let leb = 1.0 / 2.157;
        let (kappa, alpha) = (0.812, 95.161);
        let m = ComponentMoments {
            mean: leb * kappa * alpha,
            var: leb * kappa * alpha * (1.0 + alpha),
        };
        assert!((m.mean - 35.82).abs() < 0.01);
        let fit = fit_marginal(&[m], &[leb], SeedFamily::NbCommonFactor).unwrap();
        assert!((fit.alpha.unwrap()[0] - alpha).abs() < 1e-9);
        assert!((fit.implied_shape.unwrap()[0] - kappa).abs() < 1e-12);
        let poisson = ComponentMoments { mean: 5.0, var: 5.0 };
        assert!(matches!(
            fit_marginal(&[poisson], &[1.0], SeedFamily::NbCommonFactor),
            Err(MivtError::ModelMismatch(_))
        ));
    }

    #[test]
    fn dependence_inversion_is_exact() {
        let t = [TrawlSpec::exponential(2.157).unwrap(), TrawlSpec::exponential(1.919).unwrap()];
        let (kappa, a1, a2) = (0.812, 95.161, 73.055);
        let r0 = autocorrelator(&t[0], &t[1], 0.0).unwrap();
        let c12 = r0 * kappa * a1 * a2;
        let marginal = MarginalFit {
            alpha: Some(vec![a1, a2]),
            seed_mean: vec![kappa * a1, kappa * a2],
            seed_var: vec![0.0, 0.0],
            implied_shape: Some(vec![kappa, kappa]),
        };
        let template = FitTemplate::new(vec![TrawlFamily::Exponential; 2], SeedFamily::NbCommonFactor);
        let (dep, seed) =
            fit_dependence_from_ccov(&[vec![0.0, c12], vec![0.0, 0.0]], &t, &marginal, &template).unwrap();
        assert!((dep.kappa.unwrap() - kappa).abs() < 1e-9);
        assert!(matches!(seed, SeedParams::NbCommonFactor { .. }));
        let (neg, _) =
            fit_dependence_from_ccov(&[vec![0.0, -c12], vec![0.0, 0.0]], &t, &marginal, &template).unwrap();
        assert!(neg.floored);
        assert_eq!(neg.kappa, Some(0.0));
    }

    #[test]
    fn poisson_factor_inversion() {
        let t = [TrawlSpec::exponential(1.0).unwrap(), TrawlSpec::exponential(1.0).unwrap()];
        let marginal = MarginalFit {
            alpha: None,
            seed_mean: vec![3.0, 5.0],
            seed_var: vec![3.0, 5.0],
            implied_shape: None,
        };
        let template = FitTemplate::new(vec![TrawlFamily::Exponential; 2], SeedFamily::PoissonFactor);
        let r0 = autocorrelator(&t[0], &t[1], 0.0).unwrap();
        let (dep, _) =
            fit_dependence_from_ccov(&[vec![0.0, 2.0 * r0], vec![0.0, 0.0]], &t, &marginal, &template).unwrap();
        let theta = dep.theta.unwrap();
        for (got, want) in theta.iter().zip([1.0, 3.0, 2.0]) {
            assert!((got - want).abs() < 1e-6, "{theta:?}");
        }
    }

    #[test]
    fn parameter_names() {
        let names: Vec<String> = named_parameters(
            &[TrawlSpec::exponential(1.0).unwrap(), TrawlSpec::new(TrawlParams::GammaLm { alpha: 1.0, h: 2.0 }).unwrap()],
            &SeedParams::NbCommonFactor {
                kappa: 1.0,
                alpha: vec![1.0, 2.0],
            },
        )
        .into_iter()
        .map(|(n, _)| n)
        .collect();
        assert_eq!(names, ["lambda_1", "trawl_alpha_2", "H_2", "alpha_1", "alpha_2", "kappa"]);
    }
}
