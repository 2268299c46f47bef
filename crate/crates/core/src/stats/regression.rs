use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::special::{f_upper_tail, student_t_two_sided};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided p-value of the t-test for zero correlation.
    pub p_value: f64,
    pub n: usize,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Pearson correlation with its two-sided p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!(
            "pearson on {} and {} values",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Stats(format!(
            "pearson needs at least 3 pairs, got {n}"
        )));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Stats("pearson on constant input".into()));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        student_t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df)?
    };
    Ok(Correlation { r, p_value, n })
}

/// Power law `y = prefactor * x^exponent` fitted by least squares on logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Pairs used in the fit.
    pub n: usize,
    /// Pairs dropped because either coordinate was not positive.
    pub dropped: usize,
}

pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!(
            "log-log fit on {} and {} values",
            x.len(),
            y.len()
        )));
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    let n = lx.len();
    if n < 3 {
        return Err(Error::Stats(format!(
            "log-log fit needs at least 3 positive pairs, got {n}"
        )));
    }
    let (mx, my) = (mean(&lx), mean(&ly));
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in lx.iter().zip(&ly) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::Stats("log-log fit on constant x".into()));
    }
    let exponent = sxy / sxx;
    Ok(PowerLawFit {
        exponent,
        prefactor: (my - exponent * mx).exp(),
        n,
        dropped: x.len() - n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// Intercept first, then covariates in input order.
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
    pub model_p_value: f64,
    pub observations: usize,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// Least squares fit of `y` on an intercept plus the named covariate
/// columns, with t-tests per coefficient and an F-test for the model.
///
/// Columns are scaled to unit norm before a QR decomposition, so covariates
/// of very different magnitude (GDP next to exposure shares) are fine.
pub fn ols_multi(y: &[f64], covariates: &[(&str, &[f64])]) -> Result<RegressionResult> {
    let n = y.len();
    let p = covariates.len() + 1;
    for (name, col) in covariates {
        if col.len() != n {
            return Err(Error::LengthMismatch(format!(
                "covariate `{name}` has {} values, response has {n}",
                col.len()
            )));
        }
    }
    if n <= p {
        return Err(Error::Stats(format!(
            "{n} observations are too few for {p} coefficients"
        )));
    }
    let column = |j: usize| -> &[f64] {
        if j == 0 {
            &[]
        } else {
            covariates[j - 1].1
        }
    };
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { column(j)[i] });
    let norms: Vec<f64> = (0..p).map(|j| x.column(j).norm()).collect();
    if let Some(j) = norms.iter().position(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Error::Stats(format!(
            "rank-deficient design: column {} is zero or non-finite",
            coefficient_name(covariates, j)
        )));
    }
    let mut xs = x.clone();
    for (j, s) in norms.iter().enumerate() {
        xs.column_mut(j).scale_mut(1.0 / s);
    }

    let qr = xs.qr();
    let r = qr.r();
    let q = qr.q();
    let max_diag = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if let Some(j) = (0..p).find(|&j| r[(j, j)].abs() <= 1e-10 * max_diag) {
        return Err(Error::Stats(format!(
            "rank-deficient design at column {}",
            coefficient_name(covariates, j)
        )));
    }
    let yv = DVector::from_column_slice(y);
    let qty = q.transpose() * &yv;
    let beta_scaled = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Stats("singular triangular factor".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Stats("singular triangular factor".into()))?;

    let beta: Vec<f64> = (0..p).map(|j| beta_scaled[j] / norms[j]).collect();
    let fitted = &x * DVector::from_column_slice(&beta);
    let ssr: f64 = (&yv - &fitted).iter().map(|e| e * e).sum();
    let my = mean(y);
    let sst: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();

    let df_res = (n - p) as f64;
    let df_model = (p - 1) as f64;
    let sigma2 = ssr / df_res;

    let mut coefficients = Vec::with_capacity(p);
    for j in 0..p {
        // (X'X)^-1 = D^-1 R^-1 R^-T D^-1
        let var = r_inv.row(j).norm_squared() / (norms[j] * norms[j]) * sigma2;
        let se = var.sqrt();
        let t = if se > 0.0 {
            beta[j] / se
        } else if beta[j] == 0.0 {
            0.0
        } else {
            beta[j].signum() * f64::INFINITY
        };
        coefficients.push(Coefficient {
            name: coefficient_name(covariates, j),
            estimate: beta[j],
            std_error: se,
            t_value: t,
            p_value: student_t_two_sided(t, df_res)?,
        });
    }

    let (r_squared, f_statistic) = if sst == 0.0 {
        (0.0, 0.0)
    } else {
        let r2 = (1.0 - ssr / sst).clamp(0.0, 1.0);
        let f = if ssr == 0.0 {
            f64::INFINITY
        } else {
            ((sst - ssr) / df_model) / sigma2
        };
        (r2, f)
    };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df_res;
    let model_p_value = if p == 1 {
        1.0
    } else {
        f_upper_tail(f_statistic, df_model, df_res)?
    };

    Ok(RegressionResult {
        coefficients,
        r_squared,
        adj_r_squared,
        f_statistic,
        model_p_value,
        observations: n,
    })
}

fn coefficient_name(covariates: &[(&str, &[f64])], j: usize) -> String {
    if j == 0 {
        "intercept".to_string()
    } else {
        covariates[j - 1].0.to_string()
    }
}
