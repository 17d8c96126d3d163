//! Parametric trawl functions `d(z)`, `z <= 0`, their Lebesgue measures,
//! autocorrelation functions and pairwise autocorrelators.

pub mod bessel;

use crate::error::{MivtError, Result};
use crate::quad::{integrate_partitioned, QuadOptions};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

pub use bessel::bessel_k;
use bessel::ln_bessel_k_scaled;

/// Largest `delta * gamma` accepted for GIG trawls.
pub const GIG_MAX_DELTA_GAMMA: f64 = 700.0;

/// Default truncation level for autocorrelator quadrature.
pub const DEFAULT_EPS_QUAD: f64 = 1e-12;

/// Raw parameters of a trawl function, tagged by family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TrawlParams {
    /// `d(z) = exp(lambda z)`.
    Exponential { lambda: f64 },
    /// Superposition of exponentials mixed by a reciprocal inverse Gaussian law.
    SupIg { delta: f64, gamma: f64 },
    /// Gamma-mixed exponentials, `d(z) = (1 - z/alpha)^(-H)`.
    GammaLm {
        alpha: f64,
        #[serde(rename = "H")]
        h: f64,
    },
    /// Generalised inverse Gaussian mixture of exponentials.
    Gig { nu: f64, delta: f64, gamma: f64 },
    /// `d(z) = exp(lambda z) (cos(a z) + 1) / 2` with `a = 2 pi psi`.
    SeasonalExp { lambda: f64, psi: f64 },
}

/// Family tag without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrawlFamily {
    Exponential,
    SupIg,
    GammaLm,
    Gig,
    SeasonalExp,
}

impl TrawlFamily {
    pub const ALL: [TrawlFamily; 5] = [
        TrawlFamily::Exponential,
        TrawlFamily::SupIg,
        TrawlFamily::GammaLm,
        TrawlFamily::Gig,
        TrawlFamily::SeasonalExp,
    ];

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            TrawlFamily::Exponential => &["lambda"],
            TrawlFamily::SupIg => &["delta", "gamma"],
            TrawlFamily::GammaLm => &["alpha", "H"],
            TrawlFamily::Gig => &["nu", "delta", "gamma"],
            TrawlFamily::SeasonalExp => &["lambda", "psi"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    pub fn is_monotone(self) -> bool {
        !matches!(self, TrawlFamily::SeasonalExp)
    }
}

impl fmt::Display for TrawlFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TrawlFamily::Exponential => "exponential",
            TrawlFamily::SupIg => "sup-ig",
            TrawlFamily::GammaLm => "gamma-lm",
            TrawlFamily::Gig => "gig",
            TrawlFamily::SeasonalExp => "seasonal-exp",
        };
        f.write_str(s)
    }
}

impl FromStr for TrawlFamily {
    type Err = MivtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exp" | "exponential" => Ok(TrawlFamily::Exponential),
            "supig" | "sup-ig" => Ok(TrawlFamily::SupIg),
            "gamma" | "gamma-lm" | "gammalm" | "lm" => Ok(TrawlFamily::GammaLm),
            "gig" => Ok(TrawlFamily::Gig),
            "seasonal" | "seasonal-exp" => Ok(TrawlFamily::SeasonalExp),
            other => Err(MivtError::invalid(format!("unknown trawl family '{other}'"))),
        }
    }
}

impl TrawlParams {
    pub fn family(&self) -> TrawlFamily {
        match self {
            TrawlParams::Exponential { .. } => TrawlFamily::Exponential,
            TrawlParams::SupIg { .. } => TrawlFamily::SupIg,
            TrawlParams::GammaLm { .. } => TrawlFamily::GammaLm,
            TrawlParams::Gig { .. } => TrawlFamily::Gig,
            TrawlParams::SeasonalExp { .. } => TrawlFamily::SeasonalExp,
        }
    }

    /// Parameter values in the order of [`TrawlFamily::param_names`].
    pub fn values(&self) -> Vec<f64> {
        match *self {
            TrawlParams::Exponential { lambda } => vec![lambda],
            TrawlParams::SupIg { delta, gamma } => vec![delta, gamma],
            TrawlParams::GammaLm { alpha, h } => vec![alpha, h],
            TrawlParams::Gig { nu, delta, gamma } => vec![nu, delta, gamma],
            TrawlParams::SeasonalExp { lambda, psi } => vec![lambda, psi],
        }
    }

    pub fn from_values(family: TrawlFamily, v: &[f64]) -> Result<Self> {
        if v.len() != family.n_params() {
            return Err(MivtError::invalid(format!(
                "{family} trawl takes {} parameters, got {}",
                family.n_params(),
                v.len()
            )));
        }
        Ok(match family {
            TrawlFamily::Exponential => TrawlParams::Exponential { lambda: v[0] },
            TrawlFamily::SupIg => TrawlParams::SupIg {
                delta: v[0],
                gamma: v[1],
            },
            TrawlFamily::GammaLm => TrawlParams::GammaLm { alpha: v[0], h: v[1] },
            TrawlFamily::Gig => TrawlParams::Gig {
                nu: v[0],
                delta: v[1],
                gamma: v[2],
            },
            TrawlFamily::SeasonalExp => TrawlParams::SeasonalExp {
                lambda: v[0],
                psi: v[1],
            },
        })
    }
}

/// A validated trawl function. Construction checks the parameter domain and
/// caches the Lebesgue measure of the trawl set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrawlParams", into = "TrawlParams")]
pub struct TrawlSpec {
    params: TrawlParams,
    leb: f64,
    // GIG: ln of scaled K_nu(delta*gamma) and K_{nu-1}(delta*gamma).
    ln_k: [f64; 2],
}

impl TryFrom<TrawlParams> for TrawlSpec {
    type Error = MivtError;
    fn try_from(p: TrawlParams) -> Result<Self> {
        TrawlSpec::new(p)
    }
}

impl From<TrawlSpec> for TrawlParams {
    fn from(s: TrawlSpec) -> Self {
        s.params
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(MivtError::InvalidParameter(msg()))
    }
}

impl TrawlSpec {
    pub fn new(params: TrawlParams) -> Result<Self> {
        if params.values().iter().any(|v| !v.is_finite()) {
            return Err(MivtError::invalid(format!("non-finite trawl parameter in {params:?}")));
        }
        let mut ln_k = [0.0; 2];
        let leb = match params {
            TrawlParams::Exponential { lambda } => {
                require(lambda > 0.0, || format!("exponential trawl needs lambda > 0, got {lambda}"))?;
                1.0 / lambda
            }
            TrawlParams::SupIg { delta, gamma } => {
                require(delta >= 0.0 && gamma >= 0.0, || {
                    format!("sup-IG trawl needs delta, gamma >= 0, got ({delta}, {gamma})")
                })?;
                require(delta > 0.0 || gamma > 0.0, || {
                    "sup-IG trawl needs delta and gamma not both zero".to_string()
                })?;
                if delta == 0.0 {
                    return Err(MivtError::InfiniteMeasure(format!(
                        "sup-IG trawl with delta = 0 (gamma = {gamma})"
                    )));
                }
                require(gamma > 0.0, || {
                    "sup-IG trawl with gamma = 0 has a null trawl set".to_string()
                })?;
                gamma / delta
            }
            TrawlParams::GammaLm { alpha, h } => {
                require(alpha > 0.0, || format!("gamma trawl needs alpha > 0, got {alpha}"))?;
                if h <= 1.0 {
                    return Err(MivtError::InfiniteMeasure(format!(
                        "gamma trawl needs H > 1, got {h}"
                    )));
                }
                alpha / (h - 1.0)
            }
            TrawlParams::Gig { nu, delta, gamma } => {
                require(delta > 0.0 && gamma > 0.0, || {
                    format!("GIG trawl needs delta > 0 and gamma > 0, got ({delta}, {gamma})")
                })?;
                let dg = delta * gamma;
                require(dg <= GIG_MAX_DELTA_GAMMA, || {
                    format!("GIG trawl needs delta*gamma <= {GIG_MAX_DELTA_GAMMA}, got {dg}")
                })?;
                ln_k = [ln_bessel_k_scaled(nu, dg)?, ln_bessel_k_scaled(nu - 1.0, dg)?];
                let leb = (gamma / delta) * (ln_k[1] - ln_k[0]).exp();
                if !(leb.is_finite() && leb > 0.0) {
                    return Err(MivtError::Range(format!(
                        "GIG trawl measure not representable for nu={nu}, delta={delta}, gamma={gamma}"
                    )));
                }
                leb
            }
            TrawlParams::SeasonalExp { lambda, psi } => {
                require(lambda > 0.0, || format!("seasonal trawl needs lambda > 0, got {lambda}"))?;
                let a = 2.0 * PI * psi;
                (2.0 * lambda * lambda + a * a) / (2.0 * lambda * (lambda * lambda + a * a))
            }
        };
        Ok(Self { params, leb, ln_k })
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        Self::new(TrawlParams::Exponential { lambda })
    }

    pub fn params(&self) -> &TrawlParams {
        &self.params
    }

    pub fn family(&self) -> TrawlFamily {
        self.params.family()
    }

    pub fn is_monotone(&self) -> bool {
        self.family().is_monotone()
    }

    /// Trawl function `d(z)` for `z <= 0`.
    pub fn eval(&self, z: f64) -> Result<f64> {
        if !(z <= 0.0) {
            return Err(MivtError::Domain(format!(
                "trawl functions are defined for z <= 0, got {z}"
            )));
        }
        Ok(self.d(z))
    }

    /// Unchecked `d(z)`; callers guarantee `z <= 0`.
    #[inline]
    pub(crate) fn d(&self, z: f64) -> f64 {
        match self.params {
            TrawlParams::Exponential { lambda } => (lambda * z).exp(),
            TrawlParams::SupIg { delta, gamma } => {
                let u = (1.0 - 2.0 * z / (gamma * gamma)).sqrt();
                (delta * gamma * (1.0 - u)).exp() / u
            }
            TrawlParams::GammaLm { alpha, h } => (1.0 - z / alpha).powf(-h),
            TrawlParams::Gig { nu, delta, gamma } => {
                let u = (1.0 - 2.0 * z / (gamma * gamma)).sqrt();
                let dg = delta * gamma;
                match ln_bessel_k_scaled(nu, dg * u) {
                    Ok(ln_k) => (-nu * u.ln() + ln_k - self.ln_k[0] - dg * (u - 1.0)).exp(),
                    Err(_) => f64::NAN,
                }
            }
            TrawlParams::SeasonalExp { lambda, psi } => {
                let a = 2.0 * PI * psi;
                0.5 * (lambda * z).exp() * ((a * z).cos() + 1.0)
            }
        }
    }

    /// Lebesgue measure of the trawl set, `int_{-inf}^0 d(s) ds`.
    pub fn leb(&self) -> f64 {
        self.leb
    }

    /// Theoretical autocorrelation `r(h) = leb(A cap A_h) / leb(A)`.
    pub fn acf(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return Err(MivtError::Domain(format!("acf needs lag h >= 0, got {h}")));
        }
        Ok(self.acf_unchecked(h))
    }

    pub(crate) fn acf_unchecked(&self, h: f64) -> f64 {
        match self.params {
            TrawlParams::Exponential { lambda } => (-lambda * h).exp(),
            TrawlParams::SupIg { delta, gamma } => {
                (delta * gamma * (1.0 - (1.0 + 2.0 * h / (gamma * gamma)).sqrt())).exp()
            }
            TrawlParams::GammaLm { alpha, h: hurst } => (1.0 + h / alpha).powf(1.0 - hurst),
            TrawlParams::Gig { nu, delta, gamma } => {
                if h == 0.0 {
                    return 1.0;
                }
                let g2 = (gamma * gamma + 2.0 * h).sqrt();
                let x0 = delta * gamma;
                let x1 = delta * g2;
                match ln_bessel_k_scaled(nu - 1.0, x1) {
                    Ok(ln_k1) => (ln_k1 - x1 - self.ln_k[1] + x0
                        + 0.5 * (1.0 - nu) * (1.0 + 2.0 * h / (gamma * gamma)).ln())
                    .exp(),
                    Err(_) => f64::NAN,
                }
            }
            TrawlParams::SeasonalExp { lambda, psi } => {
                seasonal_overlap(lambda, 2.0 * PI * psi, h) / self.leb
            }
        }
    }

    /// `int_{-inf}^{s} d(z) dz` for `s <= 0`, in closed form.
    pub fn tail_mass(&self, s: f64) -> f64 {
        let s = s.min(0.0);
        match self.params {
            TrawlParams::SeasonalExp { lambda, psi } => {
                let a = 2.0 * PI * psi;
                seasonal_antiderivative(lambda, a, 0.0, s)
            }
            // For monotone trawls A cap A_h = {s <= -h}, so the tail is leb * r(-s).
            _ => self.leb * self.acf_unchecked(-s),
        }
    }

    /// A lag `tau >= 0` such that `d(-t) < level` for every `t > tau`.
    /// Exact generalised inverse for the monotone families; for the seasonal
    /// family the bound comes from the envelope `exp(lambda z)`.
    pub fn envelope_lag(&self, level: f64) -> f64 {
        if level <= 0.0 {
            return f64::INFINITY;
        }
        if level > 1.0 {
            return 0.0;
        }
        match self.params {
            TrawlParams::Exponential { lambda } | TrawlParams::SeasonalExp { lambda, .. } => {
                -level.ln() / lambda
            }
            TrawlParams::GammaLm { alpha, h } => alpha * (level.powf(-1.0 / h) - 1.0),
            TrawlParams::SupIg { .. } | TrawlParams::Gig { .. } => self.invert_monotone(level),
        }
    }

    fn invert_monotone(&self, level: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = self.leb.max(1e-12);
        while self.d(-hi) >= level {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.d(-mid) >= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

fn seasonal_antiderivative(lambda: f64, a: f64, phase: f64, s: f64) -> f64 {
    let e = (lambda * s).exp();
    0.5 * e
        * (1.0 / lambda
            + (lambda * (a * s + phase).cos() + a * (a * s + phase).sin()) / (lambda * lambda + a * a))
}

/// `int_{-inf}^0 min(d(s), d(s-h)) ds` for the seasonal trawl.
///
/// Both `d(s)` and `d(s-h)` scale by `exp(-lambda P)` under a shift by one
/// period `P = 2 pi / a`, so the integral is a geometric series over one
/// period. Within a period the two curves cross exactly twice, at roots of
/// `|cos(as/2)| = exp(-lambda h/2) |cos(a(s-h)/2)|`.
pub(crate) fn seasonal_overlap(lambda: f64, a: f64, h: f64) -> f64 {
    let a = a.abs();
    if a == 0.0 {
        return (-lambda * h).exp() / lambda;
    }
    let leb = (2.0 * lambda * lambda + a * a) / (2.0 * lambda * (lambda * lambda + a * a));
    let period = 2.0 * PI / a;
    let c = (-0.5 * lambda * h).exp();
    let phi = 0.5 * a * h;
    let (s_phi, c_phi) = phi.sin_cos();
    if s_phi.abs() < 1e-15 {
        // d(s-h) = exp(-lambda h) d(s) everywhere.
        return (-lambda * h).exp() * leb;
    }
    let mut points = vec![-period, 0.0];
    for sigma in [1.0, -1.0] {
        let u0 = ((1.0 - sigma * c * c_phi) / (sigma * c * s_phi)).atan();
        let s0 = 2.0 * u0 / a;
        points.push(s0.rem_euclid(period) - period);
    }
    points.sort_by(f64::total_cmp);
    let shift = (-lambda * h).exp();
    let f = |s: f64| 0.5 * (lambda * s).exp() * ((a * s).cos() + 1.0);
    let g = |s: f64| 0.5 * shift * (lambda * s).exp() * ((a * (s - h)).cos() + 1.0);
    let mut one_period = 0.0;
    for w in points.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        one_period += if f(mid) <= g(mid) {
            seasonal_antiderivative(lambda, a, 0.0, hi) - seasonal_antiderivative(lambda, a, 0.0, lo)
        } else {
            shift
                * (seasonal_antiderivative(lambda, a, -a * h, hi)
                    - seasonal_antiderivative(lambda, a, -a * h, lo))
        };
    }
    one_period / (-(-lambda * period).exp_m1())
}

/// Autocorrelator value with provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub value: f64,
    /// Error estimate; zero for closed forms.
    pub error: f64,
    pub closed_form: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct AutocorrelatorOptions {
    /// Truncation level: the domain is cut where both trawl branches drop
    /// below this value and the remainder is added from closed-form tails.
    pub eps_quad: f64,
    pub quad: QuadOptions,
}

impl Default for AutocorrelatorOptions {
    fn default() -> Self {
        Self {
            eps_quad: DEFAULT_EPS_QUAD,
            quad: QuadOptions::default(),
        }
    }
}

/// `R_ij(h) = leb(A_i cap A_j shifted by h)`.
pub fn autocorrelator(spec_i: &TrawlSpec, spec_j: &TrawlSpec, h: f64) -> Result<f64> {
    Ok(autocorrelator_with(spec_i, spec_j, h, &AutocorrelatorOptions::default())?.value)
}

/// As [`autocorrelator`], reporting the method and error estimate.
pub fn autocorrelator_with(
    spec_i: &TrawlSpec,
    spec_j: &TrawlSpec,
    h: f64,
    opts: &AutocorrelatorOptions,
) -> Result<Overlap> {
    if !(h >= 0.0) {
        return Err(MivtError::Domain(format!("autocorrelator needs h >= 0, got {h}")));
    }
    if let (TrawlParams::Exponential { lambda: li }, TrawlParams::Exponential { lambda: lj }) =
        (spec_i.params, spec_j.params)
    {
        return Ok(Overlap {
            value: exponential_overlap(li, lj, h),
            error: 0.0,
            closed_form: true,
        });
    }
    autocorrelator_quadrature(spec_i, spec_j, h, opts)
}

/// Closed form of `int_{-inf}^0 min(exp(li s), exp(lj (s-h))) ds`.
pub fn exponential_overlap(li: f64, lj: f64, h: f64) -> f64 {
    if h == 0.0 {
        return 1.0 / li.max(lj);
    }
    if li <= lj {
        // exp(lj (s-h)) <= exp(li s) on s <= 0.
        return (-lj * h).exp() / lj;
    }
    // Single crossing at s* < 0: d_i below on (-inf, s*], shifted d_j above.
    let s_star = lj * h / (lj - li);
    (li * s_star).exp() / li + (-lj * h).exp() * (-(lj * s_star).exp_m1()) / lj
}

/// Adaptive quadrature route for the autocorrelator, valid for every pair.
pub fn autocorrelator_quadrature(
    spec_i: &TrawlSpec,
    spec_j: &TrawlSpec,
    h: f64,
    opts: &AutocorrelatorOptions,
) -> Result<Overlap> {
    let eps = opts.eps_quad;
    let s_i = -spec_i.envelope_lag(eps);
    let s_j = h - spec_j.envelope_lag(eps);
    let s_min = s_i.min(s_j).min(-f64::EPSILON);
    if !s_min.is_finite() {
        return Err(MivtError::Numeric {
            message: "could not bound the autocorrelator integration domain".into(),
            achieved: f64::INFINITY,
        });
    }

    let scale = spec_i.leb().min(spec_j.leb());
    let mut breaks = vec![0.0];
    let mut b = -scale / 16.0;
    while b > s_min {
        breaks.push(b);
        b *= 2.0;
    }
    // Oscillating trawls get period-spaced breakpoints.
    for spec in [spec_i, spec_j] {
        if let TrawlParams::SeasonalExp { psi, .. } = spec.params {
            if psi != 0.0 {
                let half_period = 0.5 / psi.abs();
                let n = ((-s_min) / half_period).ceil().min(4000.0) as usize;
                breaks.extend((1..n).map(|k| -(k as f64) * half_period));
            }
        }
    }
    if h > 0.0 && -h > s_min {
        breaks.push(-h);
    }
    breaks.push(s_min);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // The min has a kink wherever the two branches cross; place breakpoints there.
    let gap = |s: f64| spec_i.d(s) - spec_j.d(s - h);
    let mut kinks = Vec::new();
    for w in breaks.windows(2) {
        const SCAN: usize = 16;
        let step = (w[1] - w[0]) / SCAN as f64;
        let mut a = w[0];
        let mut ga = gap(a);
        for k in 1..=SCAN {
            let b = if k == SCAN { w[1] } else { w[0] + k as f64 * step };
            let gb = gap(b);
            if ga * gb < 0.0 {
                let (mut lo, mut hi, mut glo) = (a, b, ga);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let gm = gap(mid);
                    if gm * glo > 0.0 {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                }
                kinks.push(0.5 * (lo + hi));
            }
            a = b;
            ga = gb;
        }
    }
    breaks.extend(kinks);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let integrand = |s: f64| spec_i.d(s).min(spec_j.d(s - h));
    let quad = QuadOptions {
        abs_tol: opts.quad.abs_tol * scale,
        ..opts.quad
    };
    let body = integrate_partitioned(integrand, &breaks, quad)?;
    let tail = spec_i.tail_mass(s_min).min(spec_j.tail_mass(s_min - h));
    let value = body.value + tail;
    if !(value.is_finite() && value > 0.0) {
        return Err(MivtError::Numeric {
            message: format!("autocorrelator quadrature produced {value}"),
            achieved: body.error,
        });
    }
    Ok(Overlap {
        value,
        error: body.error,
        closed_form: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p: TrawlParams) -> TrawlSpec {
        TrawlSpec::new(p).unwrap()
    }

    fn grid_specs() -> Vec<TrawlSpec> {
        vec![
            spec(TrawlParams::Exponential { lambda: 0.7 }),
            spec(TrawlParams::Exponential { lambda: 2.157 }),
            spec(TrawlParams::SupIg { delta: 1.0, gamma: 1.0 }),
            spec(TrawlParams::SupIg { delta: 0.4, gamma: 2.5 }),
            spec(TrawlParams::GammaLm { alpha: 1.0, h: 2.0 }),
            spec(TrawlParams::GammaLm { alpha: 0.5, h: 3.5 }),
            spec(TrawlParams::Gig { nu: 0.5, delta: 1.0, gamma: 1.0 }),
            spec(TrawlParams::Gig { nu: -1.3, delta: 0.8, gamma: 2.0 }),
            spec(TrawlParams::Gig { nu: 2.2, delta: 3.0, gamma: 0.5 }),
            spec(TrawlParams::SeasonalExp { lambda: 1.0, psi: 0.3 }),
            spec(TrawlParams::SeasonalExp { lambda: 0.6, psi: 1.1 }),
        ]
    }

    #[test]
    fn eval_examples() {
        assert_eq!(TrawlSpec::exponential(2.0).unwrap().eval(0.0).unwrap(), 1.0);
        let g = spec(TrawlParams::GammaLm { alpha: 1.0, h: 2.0 });
        assert!((g.eval(-1.0).unwrap() - 0.25).abs() < 1e-15);
        let s = spec(TrawlParams::SupIg { delta: 1.0, gamma: 1.0 });
        // sqrt(1 + 3) = 2 -> (1/2) e^{1-2}
        assert!((s.eval(-1.5).unwrap() - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(s.eval(0.1).is_err());
    }

    #[test]
    fn gig_at_half_order_is_sup_ig() {
        // The sup-IG trawl is the GIG trawl with nu = 1/2.
        let gig = spec(TrawlParams::Gig { nu: 0.5, delta: 1.3, gamma: 0.9 });
        let sup = spec(TrawlParams::SupIg { delta: 1.3, gamma: 0.9 });
        for z in [-0.01, -0.5, -3.0, -40.0] {
            assert!((gig.d(z) - sup.d(z)).abs() < 1e-12 * sup.d(z).max(1e-300));
        }
        assert!((gig.leb() - sup.leb()).abs() < 1e-12);
        for h in [0.1, 1.0, 7.0] {
            assert!((gig.acf_unchecked(h) - sup.acf_unchecked(h)).abs() < 1e-12);
        }
    }

    #[test]
    fn leb_examples() {
        assert!((TrawlSpec::exponential(2.157).unwrap().leb() - 0.463_606_861_381_548).abs() < 1e-12);
        assert_eq!(spec(TrawlParams::GammaLm { alpha: 1.0, h: 2.0 }).leb(), 1.0);
        assert_eq!(spec(TrawlParams::SeasonalExp { lambda: 1.0, psi: 0.0 }).leb(), 1.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(matches!(
            TrawlSpec::new(TrawlParams::SupIg { delta: 0.0, gamma: 1.0 }),
            Err(MivtError::InfiniteMeasure(_))
        ));
        assert!(matches!(
            TrawlSpec::new(TrawlParams::GammaLm { alpha: 1.0, h: 1.0 }),
            Err(MivtError::InfiniteMeasure(_))
        ));
        assert!(TrawlSpec::exponential(0.0).is_err());
        assert!(TrawlSpec::exponential(f64::NAN).is_err());
        assert!(TrawlSpec::new(TrawlParams::Gig { nu: 0.0, delta: 100.0, gamma: 8.0 }).is_err());
        assert!(TrawlSpec::new(TrawlParams::SeasonalExp { lambda: -1.0, psi: 0.2 }).is_err());
    }

    #[test]
    fn acf_examples() {
        let e = TrawlSpec::exponential(2.0).unwrap();
        assert!((e.acf(1.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        let s = spec(TrawlParams::SupIg { delta: 1.0, gamma: 1.0 });
        assert!((s.acf(1.5).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        let g = spec(TrawlParams::GammaLm { alpha: 1.0, h: 2.0 });
        assert!((g.acf(1.0).unwrap() - 0.5).abs() < 1e-15);
        for sp in grid_specs() {
            assert!((sp.acf(0.0).unwrap() - 1.0).abs() < 1e-14, "{sp:?}");
        }
        assert!(e.acf(-0.1).is_err());
    }

    #[test]
    fn trawl_bounded_and_monotone_on_grid() {
        for sp in grid_specs() {
            let mut prev = 0.0;
            for k in (0..=400).rev() {
                let z = -(k as f64) * 0.05;
                let d = sp.eval(z).unwrap();
                assert!((0.0..=1.0 + 1e-15).contains(&d), "{sp:?} z={z} d={d}");
                if sp.is_monotone() {
                    assert!(d >= prev - 1e-15, "{sp:?} not monotone at {z}");
                }
                prev = d;
            }
        }
    }

    #[test]
    fn acf_monotone_and_bounded_on_grid() {
        for sp in grid_specs() {
            let mut prev = 1.0;
            for k in 0..200 {
                let r = sp.acf((k as f64) * 0.1).unwrap();
                assert!(r.abs() <= 1.0 + 1e-12, "{sp:?}");
                if sp.is_monotone() {
                    assert!(r <= prev + 1e-14, "{sp:?} acf increased at lag {k}");
                }
                prev = r;
            }
        }
    }

    #[test]
    fn quadrature_of_trawl_matches_leb() {
        for sp in grid_specs() {
            // Self-overlap at lag zero integrates d itself.
            let q = autocorrelator_quadrature(&sp, &sp, 0.0, &AutocorrelatorOptions::default()).unwrap();
            assert!(((q.value - sp.leb()) / sp.leb()).abs() < 1e-8, "{sp:?}: {} vs {}", q.value, sp.leb());
        }
    }

    #[test]
    fn tail_mass_is_integral_of_trawl() {
        for sp in grid_specs() {
            let s = -0.8;
            let q = crate::quad::integrate(|z| sp.d(z), s, 0.0, QuadOptions::default()).unwrap();
            let direct = sp.leb() - q.value;
            assert!((sp.tail_mass(s) - direct).abs() < 1e-10, "{sp:?}");
        }
    }

    #[test]
    fn exponential_pair_examples() {
        let a = TrawlSpec::exponential(1.0).unwrap();
        let b = TrawlSpec::exponential(2.0).unwrap();
        let r = autocorrelator(&a, &b, 1.0).unwrap();
        assert!((r - 0.5 * (-2.0f64).exp()).abs() < 1e-15);
        let x = TrawlSpec::exponential(2.157).unwrap();
        let y = TrawlSpec::exponential(1.919).unwrap();
        assert!((autocorrelator(&x, &y, 0.0).unwrap() - 1.0 / 2.157).abs() < 1e-15);
        let q = autocorrelator_quadrature(&x, &y, 0.0, &AutocorrelatorOptions::default()).unwrap();
        assert!((q.value - 1.0 / 2.157).abs() < 1e-10);
    }

    #[test]
    fn autocorrelator_bounded_by_smaller_trawl() {
        let specs = grid_specs();
        for i in &specs {
            for j in &specs {
                for h in [0.0, 0.3, 2.0] {
                    let r = autocorrelator(i, j, h).unwrap();
                    assert!(r <= i.leb().min(j.leb()) * (1.0 + 1e-9), "{i:?} {j:?} h={h}");
                }
            }
        }
    }

    #[test]
    fn seasonal_overlap_matches_brute_force() {
        // Plain midpoint rule on a fine grid as an independent check.
        for &(lambda, psi, h) in &[(1.0, 0.3, 0.7), (0.6, 1.1, 0.25), (2.0, 0.05, 3.0)] {
            let a = 2.0 * PI * psi;
            let d = |s: f64| 0.5 * (lambda * s).exp() * ((a * s).cos() + 1.0);
            let n = 2_000_000;
            let lo = -40.0 / lambda;
            let step = -lo / n as f64;
            let brute: f64 = (0..n)
                .map(|k| {
                    let s = lo + (k as f64 + 0.5) * step;
                    d(s).min(d(s - h))
                })
                .sum::<f64>()
                * step;
            let closed = seasonal_overlap(lambda, a, h);
            assert!((closed - brute).abs() < 1e-7, "({lambda},{psi},{h}): {closed} vs {brute}");
        }
    }

    #[test]
    fn envelope_lag_bounds_trawl() {
        for sp in grid_specs() {
            for level in [0.5, 1e-3, 1e-9] {
                let tau = sp.envelope_lag(level);
                assert!(sp.d(-tau * 1.0001 - 1e-12) < level, "{sp:?} level={level}");
                if sp.is_monotone() {
                    assert!(sp.d(-tau * 0.9999) >= level * (1.0 - 1e-9), "{sp:?} level={level}");
                }
            }
        }
    }

    #[test]
    fn json_round_trip_and_field_names() {
        let s: TrawlSpec = serde_json::from_str(r#"{"family": "exponential", "lambda": 2.157}"#).unwrap();
        assert_eq!(s.leb(), 1.0 / 2.157);
        let g: TrawlSpec = serde_json::from_str(r#"{"family":"gamma-lm","alpha":1.0,"H":2.0}"#).unwrap();
        assert_eq!(g.family(), TrawlFamily::GammaLm);
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"family":"gamma-lm","alpha":1.0,"H":2.0}"#);
        assert!(serde_json::from_str::<TrawlSpec>(r#"{"family":"exponential","lambda":-1}"#).is_err());
    }
}
