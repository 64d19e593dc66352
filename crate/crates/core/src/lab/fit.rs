use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub used: usize,
    /// Pairs dropped for a non-positive coordinate.
    pub dropped: usize,
}

/// Least squares of log y against log x.
pub fn fit_loglog(pairs: &[(f64, f64)]) -> Result<LogLogFit> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let dropped = pairs.len() - pts.len();
    if pts.len() < 3 {
        return Err(Error::Fit(format!("{} usable pairs, need at least 3 ({dropped} dropped)", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(LogLogFit { slope, intercept: my - slope * mx, r_squared, used: pts.len(), dropped })
}
