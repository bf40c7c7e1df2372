//! Binomial confidence intervals and log-log slope fits.

use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Two-sided 99.9% normal quantile.
pub const Z999: f64 = 3.290_526_731_491_926;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope under the supplied weights.
    pub slope_stderr: f64,
}

/// Weighted least squares of `ln y` on `ln x`. Points with `y <= 0` or zero
/// weight are skipped; `None` if fewer than two remain.
pub fn fit_loglog(points: &[(f64, f64, f64)]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|&&(x, y, w)| x > 0.0 && y > 0.0 && w > 0.0)
        .map(|&(x, y, w)| (x.ln(), y.ln(), w))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // with inverse-variance weights the slope variance is 1 / sxx
    Some(SlopeFit {
        slope,
        intercept,
        slope_stderr: (1.0 / sxx).sqrt(),
    })
}
