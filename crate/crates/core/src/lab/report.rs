use serde::Serialize;

use super::fit::fit_loglog;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentReport {
    /// (W₁, discrepancy), in input order.
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Exponent p of the envelope W₁^p used for the ratios.
    pub envelope: f64,
    /// max discrepancy / W₁^p.
    pub max_ratio: f64,
    /// W₁ spans at least two decades.
    pub valid: bool,
    pub dropped: usize,
    /// (decade index ⌊log₁₀ W₁⌋, max ratio in that decade), ascending.
    pub decades: Vec<(i32, f64)>,
}

impl ExponentReport {
    pub fn new(pairs: Vec<(f64, f64)>, envelope: f64) -> Result<Self> {
        let fit = fit_loglog(&pairs)?;
        let ratio = |(w, d): (f64, f64)| d / w.powf(envelope);
        let max_ratio = pairs.iter().filter(|p| p.0 > 0.0).map(|&p| ratio(p)).fold(0.0, f64::max);
        let ws: Vec<f64> = pairs.iter().map(|p| p.0).filter(|&w| w > 0.0).collect();
        let lo = ws.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ws.iter().copied().fold(0.0, f64::max);
        let mut decades: Vec<(i32, f64)> = Vec::new();
        for &(w, d) in pairs.iter().filter(|p| p.0 > 0.0) {
            let k = w.log10().floor() as i32;
            match decades.iter_mut().find(|e| e.0 == k) {
                Some(e) => e.1 = e.1.max(ratio((w, d))),
                None => decades.push((k, ratio((w, d)))),
            }
        }
        decades.sort_by_key(|e| e.0);
        Ok(Self {
            pairs,
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            envelope,
            max_ratio,
            valid: hi >= 100.0 * lo,
            dropped: fit.dropped,
            decades,
        })
    }

    /// Largest factor by which the per-decade max ratio grows when stepping
    /// down to the next smaller W₁ decade.
    pub fn max_decade_growth(&self) -> f64 {
        self.decades
            .windows(2)
            .map(|w| if w[1].1 > 0.0 { w[0].1 / w[1].1 } else { f64::INFINITY })
            .fold(0.0, f64::max)
    }

    /// Largest factor between adjacent decades in either direction.
    pub fn max_decade_spread(&self) -> f64 {
        self.decades
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].1, w[1].1);
                if a > 0.0 && b > 0.0 {
                    (a / b).max(b / a)
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }

    /// Finite max ratio and no ≥10× growth towards small W₁.
    pub fn decade_stable(&self) -> bool {
        self.max_ratio.is_finite() && self.max_decade_growth() < 10.0
    }
}
