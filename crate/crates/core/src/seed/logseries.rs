//! Univariate and multivariate logarithmic series laws.

use crate::error::{MivtError, Result};
use crate::rng::poisson;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

const TABLE_TAIL: f64 = 1e-12;
const TABLE_MAX: usize = 1 << 20;

/// `Log(q)`: `P(K = k) = q^k / (-k ln(1-q))`, `k >= 1`.
#[derive(Debug, Clone)]
pub struct LogSeries {
    q: f64,
    norm: f64,
    cdf: Vec<f64>,
}

impl LogSeries {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(MivtError::invalid(format!(
                "logarithmic series parameter must lie in (0, 1), got {q}"
            )));
        }
        let norm = -1.0 / (-q).ln_1p();
        let mut cdf = Vec::new();
        let mut term = norm * q;
        let mut acc = 0.0;
        let mut k = 1.0;
        while acc < 1.0 - TABLE_TAIL && cdf.len() < TABLE_MAX && term > 0.0 {
            acc += term;
            cdf.push(acc);
            term *= q * k / (k + 1.0);
            k += 1.0;
        }
        Ok(Self { q, norm, cdf })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn pmf(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let kf = k as f64;
        (self.norm.ln() + kf * self.q.ln() - kf.ln()).exp()
    }

    pub fn mean(&self) -> f64 {
        self.norm * self.q / (1.0 - self.q)
    }

    /// Inversion against the cached cumulative table; beyond the table the
    /// cumulative sum is continued term by term.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c < u);
        if idx < self.cdf.len() {
            return idx as u64 + 1;
        }
        let mut k = self.cdf.len() as u64;
        let mut acc = *self.cdf.last().unwrap_or(&0.0);
        let mut term = self.pmf(k.max(1));
        loop {
            k += 1;
            term *= self.q * (k - 1) as f64 / k as f64;
            acc += term;
            if acc >= u || term <= 0.0 {
                return k;
            }
        }
    }
}

/// Modified logarithmic law: an atom `zero_prob` at 0, otherwise `Log(q)`.
#[derive(Debug, Clone)]
pub struct ModLog {
    pub zero_prob: f64,
    pub log: LogSeries,
}

impl ModLog {
    pub fn pmf(&self, k: u64) -> f64 {
        if k == 0 {
            self.zero_prob
        } else {
            (1.0 - self.zero_prob) * self.log.pmf(k)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.zero_prob > 0.0 && rng.random::<f64>() < self.zero_prob {
            0
        } else {
            self.log.sample(rng)
        }
    }
}

/// Multivariate logarithmic series law `MLSD(p_1, ..., p_n)`.
///
/// Sampling conditions sequentially: `C_1` is modified logarithmic; given
/// `C_1 = 0` the remainder is `MLSD(p_2, ..., p_n)`, and given `C_1 = c > 0`
/// it is negative multinomial with `c` trials and probabilities `p_2..p_n`.
#[derive(Debug, Clone)]
pub struct Mlsd {
    p: Vec<f64>,
    levels: Vec<ModLog>,
    // Sum of p_k over k > l, per level l.
    rest: Vec<f64>,
}

impl Mlsd {
    pub fn new(p: &[f64]) -> Result<Self> {
        validate_mlsd(p)?;
        let n = p.len();
        let mut levels = Vec::with_capacity(n);
        let mut rest = Vec::with_capacity(n);
        for l in 0..n {
            let tail: f64 = p[l..].iter().sum();
            let others = tail - p[l];
            let zero_prob = if l + 1 == n {
                0.0
            } else {
                (-others).ln_1p() / (-tail).ln_1p()
            };
            let q = p[l] / (1.0 - others);
            levels.push(ModLog {
                zero_prob,
                log: LogSeries::new(q)?,
            });
            rest.push(if l + 1 == n { 0.0 } else { others });
        }
        Ok(Self {
            p: p.to_vec(),
            levels,
            rest,
        })
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Marginal law of component `i`: modified logarithmic with
    /// `zero_prob = ln(1-p+p_i)/ln(1-p)` and `q = p_i/(1-p+p_i)`.
    pub fn marginal(&self, i: usize) -> Result<ModLog> {
        let p_i = *self
            .p
            .get(i)
            .ok_or_else(|| MivtError::invalid(format!("component {i} out of range")))?;
        let total: f64 = self.p.iter().sum();
        let others = total - p_i;
        Ok(ModLog {
            zero_prob: (-others).ln_1p() / (-total).ln_1p(),
            log: LogSeries::new(p_i / (1.0 - others))?,
        })
    }

    pub fn pmf(&self, c: &[u64]) -> Result<f64> {
        pmf_mlsd(&self.p, c)
    }

    /// Writes one draw into `out` (length `dim`).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [u64]) {
        out.fill(0);
        let n = self.p.len();
        for l in 0..n {
            let c = self.levels[l].sample(rng);
            if c == 0 {
                continue;
            }
            out[l] = c;
            let rest = self.rest[l];
            if rest > 0.0 {
                let total = negative_binomial(rng, c as f64, rest);
                multinomial_split(rng, total, &self.p[l + 1..], rest, &mut out[l + 1..]);
            }
            return;
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let mut out = vec![0; self.p.len()];
        self.sample_into(rng, &mut out);
        out
    }
}

fn validate_mlsd(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(MivtError::invalid("MLSD needs at least one component"));
    }
    if p.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(MivtError::invalid(format!("MLSD probabilities must lie in (0, 1), got {p:?}")));
    }
    let total: f64 = p.iter().sum();
    if !(total < 1.0) {
        return Err(MivtError::invalid(format!("MLSD probabilities must sum below 1, got {total}")));
    }
    Ok(())
}

/// `NB(kappa, p)` draw via its gamma-Poisson mixture.
pub fn negative_binomial<R: Rng + ?Sized>(rng: &mut R, kappa: f64, p: f64) -> u64 {
    if p <= 0.0 || kappa <= 0.0 {
        return 0;
    }
    let g = match Gamma::new(kappa, p / (1.0 - p)) {
        Ok(d) => d.sample(rng),
        Err(_) => return 0,
    };
    poisson(rng, g)
}

fn multinomial_split<R: Rng + ?Sized>(rng: &mut R, total: u64, p: &[f64], mass: f64, out: &mut [u64]) {
    let mut left = total;
    let mut mass_left = mass;
    for (k, &pk) in p.iter().enumerate() {
        if k + 1 == p.len() {
            out[k] = left;
            break;
        }
        if left == 0 {
            out[k] = 0;
            continue;
        }
        let prob = (pk / mass_left).clamp(0.0, 1.0);
        let x = Binomial::new(left, prob).map(|b| b.sample(rng)).unwrap_or(0);
        out[k] = x;
        left -= x;
        mass_left -= pk;
    }
}

/// Log-density of `MLSD(p)` at `c != 0`.
pub fn ln_pmf_mlsd(p: &[f64], c: &[u64]) -> Result<f64> {
    validate_mlsd(p)?;
    if c.len() != p.len() {
        return Err(MivtError::invalid(format!(
            "MLSD of dimension {} evaluated at a point of dimension {}",
            p.len(),
            c.len()
        )));
    }
    if c.iter().all(|&x| x == 0) {
        return Err(MivtError::Domain("MLSD has no mass at the origin".into()));
    }
    let total: f64 = p.iter().sum();
    let s: u64 = c.iter().sum();
    let mut ln = ln_gamma(s as f64) - (-(-total).ln_1p()).ln();
    for (&ci, &pi) in c.iter().zip(p) {
        if ci > 0 {
            ln += ci as f64 * pi.ln() - ln_gamma(ci as f64 + 1.0);
        }
    }
    Ok(ln)
}

pub fn pmf_mlsd(p: &[f64], c: &[u64]) -> Result<f64> {
    ln_pmf_mlsd(p, c).map(f64::exp)
}

/// `NB(kappa, p)` pmf, `C(kappa+x-1, x) p^x (1-p)^kappa`.
pub fn pmf_nb(kappa: f64, p: f64, x: u64) -> Result<f64> {
    ln_pmf_nb(kappa, p, x).map(f64::exp)
}

pub fn ln_pmf_nb(kappa: f64, p: f64, x: u64) -> Result<f64> {
    if !(kappa > 0.0) || !(p > 0.0 && p < 1.0) {
        return Err(MivtError::invalid(format!(
            "negative binomial needs kappa > 0 and p in (0, 1), got ({kappa}, {p})"
        )));
    }
    let xf = x as f64;
    Ok(ln_gamma(kappa + xf) - ln_gamma(kappa) - ln_gamma(xf + 1.0) + xf * p.ln() + kappa * (-p).ln_1p())
}

/// Negative-multinomial pmf of the common-factor negative binomial seed.
pub fn joint_pmf_nb_common(kappa: f64, alpha: &[f64], x: &[u64]) -> Result<f64> {
    if !(kappa > 0.0) || alpha.is_empty() || alpha.iter().any(|&a| !(a > 0.0)) {
        return Err(MivtError::invalid("common-factor NB needs kappa > 0 and alpha_i > 0"));
    }
    if x.len() != alpha.len() {
        return Err(MivtError::invalid("dimension mismatch between alpha and x"));
    }
    let a: f64 = alpha.iter().sum();
    let ln1a = a.ln_1p();
    let s: u64 = x.iter().sum();
    let mut ln = ln_gamma(kappa + s as f64) - ln_gamma(kappa) - kappa * ln1a;
    for (&xi, &ai) in x.iter().zip(alpha) {
        if xi > 0 {
            ln += xi as f64 * (ai.ln() - ln1a) - ln_gamma(xi as f64 + 1.0);
        }
    }
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn mlsd_pmf_examples() {
        let v = pmf_mlsd(&[0.3, 0.3], &[1, 0]).unwrap();
        assert!((v - 0.3 / -(0.4f64.ln())).abs() < 1e-14);
        assert!((v - 0.32741).abs() < 1e-5);
        let w = pmf_mlsd(&[0.3, 0.3], &[1, 1]).unwrap();
        assert!((w - 0.09 / -(0.4f64.ln())).abs() < 1e-14);
        assert!(pmf_mlsd(&[0.3, 0.3], &[0, 0]).is_err());
    }

    #[test]
    fn mlsd_pmf_normalises() {
        let mut total = 0.0;
        for s in 1..=300u64 {
            for c1 in 0..=s {
                total += pmf_mlsd(&[0.3, 0.3], &[c1, s - c1]).unwrap();
            }
        }
        assert!((1.0 - total).abs() < 1e-10, "deficit {}", 1.0 - total);
    }

    #[test]
    fn nb_pmf_examples() {
        assert!((pmf_nb(1.0, 0.5, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!((pmf_nb(2.0, 0.5, 1).unwrap() - 0.25).abs() < 1e-15);
        let s: f64 = (0..=500).map(|x| pmf_nb(0.812, 0.99, x).unwrap()).sum();
        // Mass beyond 500 at p = 0.99 is about 0.99^500 (times a slowly varying factor).
        assert!(s > 0.99 && s <= 1.0 + 1e-12, "{s}");
        let s2: f64 = (0..=5000).map(|x| pmf_nb(0.812, 0.99, x).unwrap()).sum();
        assert!((s2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_nb_origin_and_marginals() {
        assert!((joint_pmf_nb_common(1.0, &[1.0, 1.0], &[0, 0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let (kappa, alpha) = (1.3, [0.5, 0.7]);
        for x1 in 0..=30u64 {
            let m: f64 = (0..3000u64)
                .map(|x2| joint_pmf_nb_common(kappa, &alpha, &[x1, x2]).unwrap())
                .sum();
            let direct = pmf_nb(kappa, alpha[0] / (1.0 + alpha[0]), x1).unwrap();
            assert!((m.ln() - direct.ln()).abs() < 1e-12, "x1={x1}");
        }
    }

    #[test]
    fn joint_nb_matches_gamma_mixture() {
        // P(x) = int Gamma(u; kappa, 1) prod Poisson(x_i; alpha_i u) du.
        let (kappa, alpha) = (1.0, [1.0, 1.0]);
        let opts = crate::quad::QuadOptions::default();
        for x in [[0u64, 0], [2, 1], [0, 4]] {
            let integrand = |u: f64| {
                if u <= 0.0 {
                    return 0.0;
                }
                let mut ln = (kappa - 1.0) * u.ln() - u - ln_gamma(kappa);
                for (&xi, &ai) in x.iter().zip(&alpha) {
                    ln += xi as f64 * (ai * u).ln() - ai * u - ln_gamma(xi as f64 + 1.0);
                }
                ln.exp()
            };
            let q = crate::quad::integrate(integrand, 0.0, 60.0, opts).unwrap();
            let closed = joint_pmf_nb_common(kappa, &alpha, &x).unwrap();
            assert!((q.value - closed).abs() < 1e-12, "{x:?}");
        }
    }

    #[test]
    fn log_series_table_and_fallback_agree() {
        let law = LogSeries::new(0.6).unwrap();
        let mut rng = stream_rng(1, 0);
        let n = 200_000;
        let mut counts = [0usize; 6];
        for _ in 0..n {
            let k = law.sample(&mut rng) as usize;
            if k <= 5 {
                counts[k] += 1;
            }
        }
        for (k, &count) in counts.iter().enumerate().skip(1) {
            let f = count as f64 / n as f64;
            let p = law.pmf(k as u64);
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-4, "k={k}");
        }
        let sum: f64 = (1..=200).map(|k| law.pmf(k)).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mlsd_zero_probability_of_first_component() {
        let m = Mlsd::new(&[0.3, 0.3]).unwrap();
        let delta = 0.7f64.ln() / 0.4f64.ln();
        assert!((m.levels[0].zero_prob - delta).abs() < 1e-15);
        assert!((delta - 0.38925).abs() < 1e-5);
        let marg = m.marginal(0).unwrap();
        assert!((marg.zero_prob - delta).abs() < 1e-15);
        // The marginal law of C_1 sums the joint pmf over c_2.
        for c1 in 0..8u64 {
            let start = if c1 == 0 { 1 } else { 0 };
            let s: f64 = (start..2000u64).map(|c2| pmf_mlsd(&[0.3, 0.3], &[c1, c2]).unwrap()).sum();
            assert!((s - marg.pmf(c1)).abs() < 1e-12, "c1={c1}");
        }
    }

    #[test]
    fn univariate_mlsd_is_log_series() {
        let m = Mlsd::new(&[0.4]).unwrap();
        for k in 1..10 {
            assert!((m.pmf(&[k]).unwrap() - LogSeries::new(0.4).unwrap().pmf(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn trivariate_sampler_matches_pmf() {
        let p = [0.2, 0.15, 0.25];
        let m = Mlsd::new(&p).unwrap();
        let mut rng = stream_rng(99, 3);
        let n = 300_000;
        let mut hits = std::collections::HashMap::new();
        for _ in 0..n {
            let c = m.sample(&mut rng);
            assert!(c.iter().any(|&x| x > 0));
            *hits.entry(c).or_insert(0usize) += 1;
        }
        for c in [[1u64, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [0, 1, 1], [1, 1, 1], [2, 0, 1]] {
            let p_c = pmf_mlsd(&p, &c).unwrap();
            let f = *hits.get(c.as_slice()).unwrap_or(&0) as f64 / n as f64;
            let se = (p_c * (1.0 - p_c) / n as f64).sqrt();
            assert!((f - p_c).abs() < 5.0 * se, "{c:?}: {f} vs {p_c}");
        }
    }
}
