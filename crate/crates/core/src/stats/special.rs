//! Special functions behind the p-values.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const MAX_ITER: usize = 500;
const TINY: f64 = 1e-300;

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn betainc(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::Stats(format!(
            "incomplete beta outside its domain: a={a}, b={b}, x={x}"
        )));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    // The continued fraction converges fast for x < (a+1)/(a+b+2).
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - betainc_cf(b, a, 1.0 - x)?)
    } else {
        betainc_cf(a, b, x)
    }
}

/// Modified Lentz evaluation of the continued fraction for `I_x(a, b)`.
fn betainc_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp() / a;

    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut f = d;

    for m in 1..=MAX_ITER {
        let m = m as f64;
        let even = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        d = 1.0 + even * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + even / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        f *= d * c;

        let odd = -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        d = 1.0 + odd * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + odd / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            return Ok(front * f);
        }
    }
    Err(Error::Stats(format!(
        "incomplete beta did not converge for a={a}, b={b}, x={x}"
    )))
}

/// Two-sided tail probability `P(|T| >= |t|)` of Student's t with `df`
/// degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> Result<f64> {
    if t.is_nan() {
        return Err(Error::Stats("t statistic is NaN".into()));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    betainc(df / 2.0, 0.5, df / (df + t * t))
}

/// Upper tail probability `P(F >= f)` of the F distribution.
pub fn f_upper_tail(f: f64, df1: f64, df2: f64) -> Result<f64> {
    if f.is_nan() {
        return Err(Error::Stats("F statistic is NaN".into()));
    }
    if f <= 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))
}
