//! Sweeps over the cell count and power-law fits of the results.

use rayon::prelude::*;
use serde::Serialize;

use super::config::ScenarioConfig;
use super::csvio::Table;
use super::trajectory::{run_trajectory, Summary, SWEEP_QUANTITIES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingResult {
    pub quantity: String,
    pub n_values: Vec<usize>,
    pub values: Vec<f64>,
    /// Slope of `log(value)` against `log(N)`.
    pub exponent: f64,
    pub prefactor: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    /// Cell counts left out of the fit, with the reason.
    pub excluded: Vec<(usize, String)>,
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, intercept, rms)
}

/// Log-log least squares. Nonpositive values are dropped; the smallest `N`
/// is dropped too when that more than halves the residual.
pub fn fit_exponent(quantity: &str, n_values: &[usize], values: &[f64]) -> Result<ScalingResult> {
    Error::check_dim(n_values.len(), values.len())?;
    let mut excluded = Vec::new();
    let mut pts: Vec<(usize, f64)> = Vec::new();
    for (&n, &v) in n_values.iter().zip(values) {
        if v > 0.0 && v.is_finite() {
            pts.push((n, v));
        } else {
            excluded.push((n, format!("nonpositive value {v}")));
        }
    }
    if pts.len() < 3 {
        return Err(Error::validation(format!("{quantity}: fewer than 3 usable points for a fit")));
    }
    let logs = |p: &[(usize, f64)]| -> (Vec<f64>, Vec<f64>) { p.iter().map(|&(n, v)| ((n as f64).ln(), v.ln())).unzip() };
    let (x, y) = logs(&pts);
    let (mut slope, mut icpt, mut rms) = least_squares(&x, &y);
    if pts.len() >= 4 {
        let (x2, y2) = logs(&pts[1..]);
        let (s2, i2, r2) = least_squares(&x2, &y2);
        if r2 * 2.0 < rms {
            excluded.push((pts[0].0, format!("finite-size transient: residual {rms:.3e} -> {r2:.3e}")));
            (slope, icpt, rms) = (s2, i2, r2);
        }
    }
    Ok(ScalingResult {
        quantity: quantity.to_string(),
        n_values: n_values.to_vec(),
        values: values.to_vec(),
        exponent: slope,
        prefactor: icpt.exp(),
        residual: rms,
        excluded,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub summaries: Vec<Summary>,
    pub fits: Vec<ScalingResult>,
}

impl SweepOutput {
    pub fn fit(&self, quantity: &str) -> Option<&ScalingResult> {
        self.fits.iter().find(|f| f.quantity == quantity)
    }

    pub fn to_table(&self) -> Table {
        let mut header = vec!["N".to_string()];
        header.extend(SWEEP_QUANTITIES.iter().map(|s| s.to_string()));
        let mut t = Table::new(header);
        for s in &self.summaries {
            let mut row = vec![Some(s.n as f64)];
            row.extend(SWEEP_QUANTITIES.iter().map(|q| s.quantity(q)));
            t.push(row);
        }
        t
    }
}

/// Run the scenario for every `N` of the sweep (in parallel) and fit each quantity.
pub fn sweep_scaling(cfg: &ScenarioConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let ns = cfg.sweep.as_ref().ok_or_else(|| Error::Config("sweep section missing".into()))?.n_values.clone();
    let summaries: Vec<Summary> = ns
        .par_iter()
        .map(|&n| run_trajectory(&cfg.with_n(n)).map(|r| r.summary))
        .collect::<Result<_>>()?;
    let mut fits = Vec::new();
    for q in SWEEP_QUANTITIES {
        let values: Vec<f64> = summaries.iter().map(|s| s.quantity(q).unwrap_or(f64::NAN)).collect();
        if let Ok(f) = fit_exponent(q, &ns, &values) {
            fits.push(f);
        }
    }
    Ok(SweepOutput { summaries, fits })
}
