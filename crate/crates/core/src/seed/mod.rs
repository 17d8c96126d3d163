//! Infinitely divisible integer seed laws and their compound-Poisson form.

pub mod logseries;

use crate::error::{MivtError, Result};
use crate::rng::poisson;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub use logseries::{
    joint_pmf_nb_common, ln_pmf_mlsd, ln_pmf_nb, negative_binomial, pmf_mlsd, pmf_nb, LogSeries, Mlsd,
    ModLog,
};

/// Raw seed parameters, tagged by family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum SeedParams {
    /// `L' = A X` with independent `X_k ~ Poisson(theta_k)`.
    #[serde(rename = "poisson-factor")]
    PoissonFactor {
        #[serde(rename = "A")]
        a: Vec<Vec<u32>>,
        theta: Vec<f64>,
    },
    /// Independent components `NB(kappa_i, beta_i / (1 + beta_i))`.
    #[serde(rename = "nb-independent")]
    NbIndependent { kappa: Vec<f64>, beta: Vec<f64> },
    /// Poisson mixture with one shared `Gamma(kappa, 1)` factor scaled by `alpha_i`.
    #[serde(rename = "nb-common")]
    NbCommonFactor { kappa: f64, alpha: Vec<f64> },
    /// Shared gamma factor plus independent `Gamma(kappa_i, 1)` factors, both scaled by `alpha_i`.
    #[serde(rename = "nb-common-idio")]
    NbCommonPlusIdio {
        kappa: f64,
        alpha: Vec<f64>,
        kappa_idio: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeedFamily {
    #[serde(rename = "poisson-factor")]
    PoissonFactor,
    #[serde(rename = "nb-independent")]
    NbIndependent,
    #[serde(rename = "nb-common")]
    NbCommonFactor,
    #[serde(rename = "nb-common-idio")]
    NbCommonPlusIdio,
}

impl SeedFamily {
    pub fn is_negative_binomial(self) -> bool {
        !matches!(self, SeedFamily::PoissonFactor)
    }
}

impl fmt::Display for SeedFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeedFamily::PoissonFactor => "poisson-factor",
            SeedFamily::NbIndependent => "nb-independent",
            SeedFamily::NbCommonFactor => "nb-common",
            SeedFamily::NbCommonPlusIdio => "nb-common-idio",
        })
    }
}

impl FromStr for SeedFamily {
    type Err = MivtError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "poisson-factor" | "poisson" => Ok(SeedFamily::PoissonFactor),
            "nb-independent" | "nb-indep" => Ok(SeedFamily::NbIndependent),
            "nb-common" | "nb-common-factor" => Ok(SeedFamily::NbCommonFactor),
            "nb-common-idio" | "nb-common-plus-idio" => Ok(SeedFamily::NbCommonPlusIdio),
            other => Err(MivtError::invalid(format!("unknown seed family '{other}'"))),
        }
    }
}

impl SeedParams {
    pub fn family(&self) -> SeedFamily {
        match self {
            SeedParams::PoissonFactor { .. } => SeedFamily::PoissonFactor,
            SeedParams::NbIndependent { .. } => SeedFamily::NbIndependent,
            SeedParams::NbCommonFactor { .. } => SeedFamily::NbCommonFactor,
            SeedParams::NbCommonPlusIdio { .. } => SeedFamily::NbCommonPlusIdio,
        }
    }
}

/// A validated seed law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeedParams", into = "SeedParams")]
pub struct SeedSpec {
    params: SeedParams,
    dim: usize,
}

impl TryFrom<SeedParams> for SeedSpec {
    type Error = MivtError;
    fn try_from(p: SeedParams) -> Result<Self> {
        SeedSpec::new(p)
    }
}

impl From<SeedSpec> for SeedParams {
    fn from(s: SeedSpec) -> Self {
        s.params
    }
}

fn all_positive(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|&x| x.is_finite() && x > 0.0) {
        Ok(())
    } else {
        Err(MivtError::invalid(format!("{name} entries must be finite and positive, got {v:?}")))
    }
}

impl SeedSpec {
    pub fn new(params: SeedParams) -> Result<Self> {
        let dim = match &params {
            SeedParams::PoissonFactor { a, theta } => {
                let n = a.len();
                if n == 0 {
                    return Err(MivtError::invalid("factor matrix A has no rows"));
                }
                let m = theta.len();
                if m == 0 || a.iter().any(|row| row.len() != m) {
                    return Err(MivtError::invalid(format!(
                        "factor matrix A must be {n} x {m} to match theta"
                    )));
                }
                if a.iter().flatten().any(|&x| x > 1) {
                    return Err(MivtError::invalid("factor matrix A must be 0/1"));
                }
                all_positive("theta", theta)?;
                let cols: Vec<Vec<u32>> = (0..m).map(|k| a.iter().map(|r| r[k]).collect()).collect();
                for (k, c) in cols.iter().enumerate() {
                    if c.iter().all(|&x| x == 0) {
                        return Err(MivtError::invalid(format!("column {k} of A is zero")));
                    }
                    if cols[..k].contains(c) {
                        return Err(MivtError::invalid(format!("column {k} of A duplicates an earlier column")));
                    }
                }
                n
            }
            SeedParams::NbIndependent { kappa, beta } => {
                if kappa.is_empty() || kappa.len() != beta.len() {
                    return Err(MivtError::invalid("kappa and beta must be non-empty and of equal length"));
                }
                all_positive("kappa", kappa)?;
                all_positive("beta", beta)?;
                kappa.len()
            }
            SeedParams::NbCommonFactor { kappa, alpha } => {
                if alpha.is_empty() {
                    return Err(MivtError::invalid("alpha must be non-empty"));
                }
                all_positive("kappa", &[*kappa])?;
                all_positive("alpha", alpha)?;
                alpha.len()
            }
            SeedParams::NbCommonPlusIdio {
                kappa,
                alpha,
                kappa_idio,
            } => {
                if alpha.is_empty() || alpha.len() != kappa_idio.len() {
                    return Err(MivtError::invalid("alpha and kappa_idio must be non-empty and of equal length"));
                }
                all_positive("kappa", &[*kappa])?;
                all_positive("alpha", alpha)?;
                if kappa_idio.iter().any(|&k| !(k.is_finite() && k >= 0.0)) {
                    return Err(MivtError::invalid(format!("kappa_idio must be finite and >= 0, got {kappa_idio:?}")));
                }
                alpha.len()
            }
        };
        Ok(Self { params, dim })
    }

    pub fn nb_common(kappa: f64, alpha: Vec<f64>) -> Result<Self> {
        Self::new(SeedParams::NbCommonFactor { kappa, alpha })
    }

    pub fn params(&self) -> &SeedParams {
        &self.params
    }

    pub fn family(&self) -> SeedFamily {
        self.params.family()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cumulants(&self) -> SeedCumulants {
        let n = self.dim;
        let mut mean = vec![0.0; n];
        let mut cov = vec![vec![0.0; n]; n];
        match &self.params {
            SeedParams::PoissonFactor { a, theta } => {
                for i in 0..n {
                    mean[i] = a[i].iter().zip(theta).map(|(&x, &t)| x as f64 * t).sum();
                    for j in 0..n {
                        cov[i][j] = (0..theta.len())
                            .map(|k| (a[i][k] * a[j][k]) as f64 * theta[k])
                            .sum();
                    }
                }
            }
            SeedParams::NbIndependent { kappa, beta } => {
                for i in 0..n {
                    mean[i] = kappa[i] * beta[i];
                    cov[i][i] = mean[i] * (1.0 + beta[i]);
                }
            }
            SeedParams::NbCommonFactor { kappa, alpha } => {
                for i in 0..n {
                    mean[i] = kappa * alpha[i];
                    for j in 0..n {
                        cov[i][j] = kappa * alpha[i] * alpha[j];
                    }
                    cov[i][i] = mean[i] * (1.0 + alpha[i]);
                }
            }
            SeedParams::NbCommonPlusIdio {
                kappa,
                alpha,
                kappa_idio,
            } => {
                for i in 0..n {
                    mean[i] = (kappa + kappa_idio[i]) * alpha[i];
                    for j in 0..n {
                        cov[i][j] = kappa * alpha[i] * alpha[j];
                    }
                    cov[i][i] = mean[i] * (1.0 + alpha[i]);
                }
            }
        }
        SeedCumulants { mean, cov }
    }

    pub fn cp_representation(&self) -> Result<CpRepresentation> {
        let n = self.dim;
        let mut blocks = Vec::new();
        let push_log_blocks = |kappa: &[f64], beta: &[f64], blocks: &mut Vec<CpBlock>| -> Result<()> {
            for i in 0..n {
                if kappa[i] > 0.0 {
                    blocks.push(CpBlock {
                        rate: kappa[i] * beta[i].ln_1p(),
                        law: JumpLaw::Log {
                            component: i,
                            law: LogSeries::new(beta[i] / (1.0 + beta[i]))?,
                        },
                    });
                }
            }
            Ok(())
        };
        match &self.params {
            SeedParams::PoissonFactor { a, theta } => {
                let columns = (0..theta.len())
                    .map(|k| a.iter().map(|r| r[k] as u64).collect())
                    .collect();
                let index = WeightedIndex::new(theta.iter().copied())
                    .map_err(|e| MivtError::invalid(format!("theta weights: {e}")))?;
                blocks.push(CpBlock {
                    rate: theta.iter().sum(),
                    law: JumpLaw::Columns { columns, index },
                });
            }
            SeedParams::NbIndependent { kappa, beta } => push_log_blocks(kappa, beta, &mut blocks)?,
            SeedParams::NbCommonFactor { kappa, alpha } => {
                blocks.push(common_block(*kappa, alpha)?);
            }
            SeedParams::NbCommonPlusIdio {
                kappa,
                alpha,
                kappa_idio,
            } => {
                blocks.push(common_block(*kappa, alpha)?);
                push_log_blocks(kappa_idio, alpha, &mut blocks)?;
            }
        }
        Ok(CpRepresentation { dim: n, blocks })
    }

    /// One draw of the seed `L'` (the Lévy basis over a unit area).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<u64>> {
        Ok(self.cp_representation()?.sample_seed(rng))
    }
}

fn common_block(kappa: f64, alpha: &[f64]) -> Result<CpBlock> {
    let total: f64 = alpha.iter().sum();
    let p: Vec<f64> = alpha.iter().map(|&a| a / (1.0 + total)).collect();
    Ok(CpBlock {
        rate: kappa * total.ln_1p(),
        law: JumpLaw::Mlsd(Mlsd::new(&p)?),
    })
}

/// Means and covariance matrix (variances on the diagonal) of a seed law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCumulants {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl SeedCumulants {
    pub fn var(&self) -> Vec<f64> {
        (0..self.mean.len()).map(|i| self.cov[i][i]).collect()
    }
}

/// Jump law of one compound-Poisson block.
#[derive(Debug, Clone)]
pub enum JumpLaw {
    /// Jumps hitting all components jointly.
    Mlsd(Mlsd),
    /// Jumps in a single component.
    Log { component: usize, law: LogSeries },
    /// Column `k` of the factor matrix with probability `theta_k / sum(theta)`.
    Columns {
        columns: Vec<Vec<u64>>,
        index: WeightedIndex<f64>,
    },
}

impl JumpLaw {
    /// Overwrites `out` with one jump vector.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [u64]) {
        match self {
            JumpLaw::Mlsd(m) => m.sample_into(rng, out),
            JumpLaw::Log { component, law } => {
                out.fill(0);
                out[*component] = law.sample(rng);
            }
            JumpLaw::Columns { columns, index } => {
                out.copy_from_slice(&columns[index.sample(rng)]);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CpBlock {
    /// Expected jumps per unit time (per unit area of the Lévy basis).
    pub rate: f64,
    pub law: JumpLaw,
}

/// The seed written as a superposition of independent compound-Poisson blocks.
#[derive(Debug, Clone)]
pub struct CpRepresentation {
    pub dim: usize,
    pub blocks: Vec<CpBlock>,
}

impl CpRepresentation {
    pub fn total_rate(&self) -> f64 {
        self.blocks.iter().map(|b| b.rate).sum()
    }

    pub fn sample_seed<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let mut total = vec![0u64; self.dim];
        let mut jump = vec![0u64; self.dim];
        for block in &self.blocks {
            for _ in 0..poisson(rng, block.rate) {
                block.law.sample_into(rng, &mut jump);
                for (t, j) in total.iter_mut().zip(&jump) {
                    *t += j;
                }
            }
        }
        total
    }
}

pub fn seed_cumulants(spec: &SeedSpec) -> SeedCumulants {
    spec.cumulants()
}

pub fn cp_representation(spec: &SeedSpec) -> Result<CpRepresentation> {
    spec.cp_representation()
}

pub fn sample_seed<R: Rng + ?Sized>(spec: &SeedSpec, rng: &mut R) -> Result<Vec<u64>> {
    spec.sample(rng)
}
