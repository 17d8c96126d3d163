//! Modified Bessel function of the third kind, `K_nu(x)`, for real order.
//!
//! The order is reduced to `mu = nu - round(nu)` in `[-1/2, 1/2)`. `K_mu` and
//! `K_{mu+1}` come from Temme's series for `x < 2` and from Steed's continued
//! fraction (CF2) otherwise; forward recurrence in the order is then stable
//! for `K`. Everything is carried in exponentially scaled form `e^x K_nu(x)`
//! with a separate log scale so that ratios stay finite far outside the range
//! where `K_nu` itself is representable.

use crate::error::{MivtError, Result};
use std::f64::consts::PI;

const G1_CHEB: [f64; 14] = [
    -1.145_164_083_662_683,
    0.006_360_853_113_470_842,
    0.001_862_451_930_072_068_4,
    0.000_152_833_085_873_453_5,
    0.000_017_017_464_011_802_04,
    -6.459_750_292_334_725e-7,
    -5.181_984_843_251_938e-8,
    4.518_909_289_485_818e-10,
    3.243_322_737_102_087e-11,
    6.830_943_402_494_752e-13,
    2.835_350_275_517_21e-14,
    -7.988_390_576_932_359e-16,
    -3.372_667_730_077_195e-17,
    -3.658_633_480_921_052e-20,
];

const G2_CHEB: [f64; 15] = [
    1.882_645_524_949_671_8,
    -0.077_490_658_396_167_52,
    -0.018_256_714_847_324_93,
    0.000_633_803_020_907_489_6,
    0.000_076_229_054_350_872_9,
    -9.550_164_756_172_044e-7,
    -8.892_726_810_788_635e-8,
    -1.952_133_477_231_961_4e-9,
    -9.400_305_273_588_516e-11,
    4.687_513_384_953_239e-12,
    2.265_853_574_692_576e-13,
    -1.172_550_969_848_801_5e-15,
    -7.044_133_820_024_522e-17,
    -2.437_787_831_010_769e-18,
    -7.522_524_321_825_39e-20,
];

const MAX_ITER: usize = 20_000;
const RESCALE_AT: f64 = 1e250;

fn chebyshev(coeffs: &[f64], x: f64) -> f64 {
    let y2 = 2.0 * x;
    let (mut d, mut dd) = (0.0, 0.0);
    for &c in coeffs[1..].iter().rev() {
        let tmp = d;
        d = y2 * d - dd + c;
        dd = tmp;
    }
    x * d - dd + 0.5 * coeffs[0]
}

/// Temme's auxiliary gamma quantities for |mu| <= 1/2:
/// (1/Gamma(1+mu), 1/Gamma(1-mu), g1, g2).
fn temme_gamma(mu: f64) -> (f64, f64, f64, f64) {
    let t = 4.0 * mu.abs() - 1.0;
    let g1 = chebyshev(&G1_CHEB, t);
    let g2 = chebyshev(&G2_CHEB, t);
    let inv_g_1mmu = g2 + mu * g1;
    let inv_g_1pmu = g2 - mu * g1;
    (inv_g_1pmu, inv_g_1mmu, g1, g2)
}

/// Scaled `(e^x K_mu(x), e^x K_{mu+1}(x))` by Temme's series, `x < 2`.
fn temme_scaled(mu: f64, x: f64) -> Result<(f64, f64)> {
    let half_x = 0.5 * x;
    let ln_half_x = half_x.ln();
    let half_x_mu = (mu * ln_half_x).exp();
    let pi_mu = PI * mu;
    let sigma = -mu * ln_half_x;
    let sinrat = if pi_mu.abs() < f64::EPSILON {
        1.0
    } else {
        pi_mu / pi_mu.sin()
    };
    let sinhrat = if sigma.abs() < f64::EPSILON {
        1.0
    } else {
        sigma.sinh() / sigma
    };
    let (inv_g_1pmu, inv_g_1mmu, g1, g2) = temme_gamma(mu);
    let g_1pmu = 1.0 / inv_g_1pmu;
    let g_1mmu = 1.0 / inv_g_1mmu;

    let mut fk = sinrat * (sigma.cosh() * g1 - sinhrat * ln_half_x * g2);
    let mut pk = 0.5 / half_x_mu * g_1pmu;
    let mut qk = 0.5 * half_x_mu * g_1mmu;
    let mut ck = 1.0;
    let mut sum0 = fk;
    let mut sum1 = pk;
    let mut converged = false;
    for k in 1..=MAX_ITER {
        let kf = k as f64;
        fk = (kf * fk + pk + qk) / (kf * kf - mu * mu);
        ck *= half_x * half_x / kf;
        pk /= kf - mu;
        qk /= kf + mu;
        let hk = -kf * fk + pk;
        let del0 = ck * fk;
        sum0 += del0;
        sum1 += ck * hk;
        if del0.abs() < 0.5 * sum0.abs() * f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(MivtError::Numeric {
            message: format!("Temme series for K_{mu}({x}) did not converge"),
            achieved: f64::NAN,
        });
    }
    let ex = x.exp();
    Ok((sum0 * ex, sum1 * 2.0 / x * ex))
}

/// Scaled `(e^x K_mu(x), e^x K_{mu+1}(x))` by Steed's CF2, `x >= 2`.
fn steed_cf2_scaled(mu: f64, x: f64) -> Result<(f64, f64)> {
    let mut bi = 2.0 * (1.0 + x);
    let mut di = 1.0 / bi;
    let mut delhi = di;
    let mut hi = di;
    let mut qi = 0.0;
    let mut qip1 = 1.0;
    let mut ai = -(0.25 - mu * mu);
    let a1 = ai;
    let mut ci = -ai;
    let mut bqi = -ai;
    let mut s = 1.0 + bqi * delhi;
    let mut converged = false;
    for i in 2..=MAX_ITER {
        ai -= 2.0 * (i - 1) as f64;
        ci = -ai * ci / i as f64;
        let tmp = (qi - bi * qip1) / ai;
        qi = qip1;
        qip1 = tmp;
        bqi += ci * qip1;
        bi += 2.0;
        di = 1.0 / (bi + ai * di);
        delhi *= bi * di - 1.0;
        hi += delhi;
        let dels = bqi * delhi;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(MivtError::Numeric {
            message: format!("continued fraction for K_{mu}({x}) did not converge"),
            achieved: f64::NAN,
        });
    }
    hi *= -a1;
    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mup1 = k_mu * (mu + x + 0.5 - hi) / x;
    Ok((k_mu, k_mup1))
}

/// `ln(e^x K_nu(x))`, finite for every finite real order and `x > 0`.
pub fn ln_bessel_k_scaled(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(MivtError::Domain(format!(
            "K_nu(x) requires finite x > 0, got x = {x}"
        )));
    }
    if !nu.is_finite() {
        return Err(MivtError::Domain(format!("non-finite Bessel order {nu}")));
    }
    let nu = nu.abs();
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let (mut k_mu, mut k_mup1) = if x < 2.0 {
        temme_scaled(mu, x)?
    } else {
        steed_cf2_scaled(mu, x)?
    };
    let mut ln_scale = 0.0;
    for step in 0..n as usize {
        let k_mum1 = k_mu;
        k_mu = k_mup1;
        k_mup1 = 2.0 * (mu + step as f64 + 1.0) / x * k_mu + k_mum1;
        if k_mup1 > RESCALE_AT {
            ln_scale += k_mup1.ln();
            k_mu /= k_mup1;
            k_mup1 = 1.0;
        }
    }
    if !(k_mu > 0.0) || !k_mu.is_finite() {
        return Err(MivtError::Range(format!(
            "K_{nu}({x}) is not representable even in scaled form"
        )));
    }
    Ok(k_mu.ln() + ln_scale)
}

/// `e^x K_nu(x)`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> Result<f64> {
    let ln = ln_bessel_k_scaled(nu, x)?;
    finite_exp(ln, nu, x)
}

/// Modified Bessel function of the third kind `K_nu(x)` for real `nu` and
/// `x > 0`. Symmetric in the order. Returns a range error when the value
/// overflows or underflows `f64`.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    let ln = ln_bessel_k_scaled(nu, x)? - x;
    finite_exp(ln, nu, x)
}

/// `ln K_nu(x)`.
pub fn ln_bessel_k(nu: f64, x: f64) -> Result<f64> {
    Ok(ln_bessel_k_scaled(nu, x)? - x)
}

fn finite_exp(ln: f64, nu: f64, x: f64) -> Result<f64> {
    let v = ln.exp();
    if v == 0.0 || !v.is_finite() || v < f64::MIN_POSITIVE {
        return Err(MivtError::Range(format!(
            "K_{nu}({x}) = exp({ln}) is outside the f64 range"
        )));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    // K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt; the trapezoid rule is
    // spectrally accurate for this analytic, doubly-exponentially decaying
    // integrand, so it serves as an independent oracle.
    fn integral_oracle(nu: f64, x: f64) -> f64 {
        let h = 1.0 / 256.0;
        let mut sum = 0.5 * (-x).exp();
        let mut t: f64 = h;
        loop {
            let term = (-x * t.cosh() + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp());
            sum += term;
            if term < 1e-300 || t > 60.0 {
                break;
            }
            t += h;
        }
        sum * h
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn half_integer_closed_form() {
        let expected = (PI / 2.0).sqrt() * (-1.0f64).exp();
        assert!(rel(bessel_k(0.5, 1.0).unwrap(), expected) < 1e-13);
        assert!(rel(bessel_k(-0.5, 1.0).unwrap(), expected) < 1e-13);
        // K_{5/2}(x) = sqrt(pi/2x) e^-x (1 + 3/x + 3/x^2)
        for &x in &[0.3, 1.7, 4.0, 25.0] {
            let k52 = (PI / (2.0 * x)).sqrt() * (-x).exp() * (1.0 + 3.0 / x + 3.0 / (x * x));
            assert!(rel(bessel_k(2.5, x).unwrap(), k52) < 1e-12, "x={x}");
        }
    }

    #[test]
    fn reference_values() {
        // Abramowitz & Stegun table 9.8 / standard references.
        assert!(rel(bessel_k(1.0, 2.0).unwrap(), 0.139_865_881_816_522_4) < 1e-12);
        assert!(rel(bessel_k(0.0, 1.0).unwrap(), 0.421_024_438_240_708_3) < 1e-12);
        assert!(rel(bessel_k(0.0, 0.1).unwrap(), 2.427_069_024_702_017) < 1e-12);
        assert!(rel(bessel_k(1.0, 0.1).unwrap(), 9.853_844_780_870_606) < 1e-12);
    }

    #[test]
    fn matches_integral_representation() {
        for &nu in &[0.0, 0.3, -0.7, 1.0, 1.5, 2.2, 4.9, 7.0, -11.3] {
            for &x in &[0.05, 0.5, 1.0, 1.99, 2.0, 3.7, 12.0, 40.0] {
                let got = bessel_k(nu, x).unwrap();
                let want = integral_oracle(nu, x);
                assert!(rel(got, want) < 1e-10, "nu={nu} x={x} got={got} want={want}");
            }
        }
    }

    #[test]
    fn reflection_in_order() {
        for &nu in &[0.25, 1.3, 3.75, 10.0] {
            for &x in &[0.2, 2.5, 9.0] {
                assert_eq!(bessel_k(nu, x).unwrap(), bessel_k(-nu, x).unwrap());
            }
        }
    }

    #[test]
    fn scaled_form_survives_large_arguments() {
        // K_0(800) underflows but its scaled form is ~ sqrt(pi / 1600).
        assert!(bessel_k(0.0, 800.0).is_err());
        let s = bessel_k_scaled(0.0, 800.0).unwrap();
        assert!(rel(s, (PI / 1600.0).sqrt() * (1.0 - 1.0 / 6400.0)) < 1e-6);
        // Large order at small argument overflows.
        assert!(bessel_k(200.0, 0.01).is_err());
        assert!(ln_bessel_k_scaled(200.0, 0.01).unwrap().is_finite());
    }

    #[test]
    fn rejects_non_positive_argument() {
        assert!(bessel_k(1.0, 0.0).is_err());
        assert!(bessel_k(1.0, -1.0).is_err());
    }
}
