use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cumulative population share against cumulative value share, regions
/// sorted by ascending value per head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzCurve {
    /// `(population share, value share)`, from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    /// Input positions in the order they appear along the curve.
    pub order: Vec<usize>,
}

/// Lorenz curve of per-region `values` with population `weights`.
pub fn lorenz(values: &[f64], weights: &[f64]) -> Result<LorenzCurve> {
    if values.len() != weights.len() {
        return Err(Error::LengthMismatch(format!(
            "{} values for {} weights",
            values.len(),
            weights.len()
        )));
    }
    if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Stats(
            "Lorenz values must be finite and non-negative".into(),
        ));
    }
    if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::Stats(
            "Lorenz weights must be finite and positive".into(),
        ));
    }
    if !values.iter().any(|&v| v > 0.0) {
        return Err(Error::Stats("Lorenz curve of all-zero values".into()));
    }

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| (values[a] / weights[a]).total_cmp(&(values[b] / weights[b])));

    let total_w: f64 = weights.iter().sum();
    let total_v: f64 = values.iter().sum();
    let mut points = Vec::with_capacity(values.len() + 1);
    points.push((0.0, 0.0));
    let (mut cw, mut cv) = (0.0, 0.0);
    for &i in &order {
        cw += weights[i];
        cv += values[i];
        points.push((cw / total_w, cv / total_v));
    }
    // Rounding in the running sums must not move the end point.
    *points.last_mut().expect("at least one region") = (1.0, 1.0);
    Ok(LorenzCurve { points, order })
}

/// Gini coefficient, one minus twice the trapezoid area under the curve.
///
/// Evaluated as the summed trapezoids between diagonal and curve, which is
/// the same quantity but exactly zero for points on the diagonal.
pub fn gini(curve: &LorenzCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            (x1 - x0) * ((x1 - y1) + (x0 - y0))
        })
        .sum()
}
