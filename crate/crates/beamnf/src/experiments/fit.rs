use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub delta: f64,
    pub time: f64,
    /// The run hit its horizon; `time` is then only a lower bound.
    #[serde(default)]
    pub censored: bool,
}

/// Least-squares fit of `ln T = ln C − a ln δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    /// `ln C`.
    pub intercept: f64,
    pub r_squared: f64,
    pub used: usize,
    pub censored: Vec<FitPoint>,
}

pub fn fit_exponent(series: &[FitPoint]) -> Result<ExponentFit> {
    let (censored, used): (Vec<FitPoint>, Vec<FitPoint>) = series.iter().partition(|p| p.censored);
    if let Some(p) = used.iter().find(|p| !(p.delta > 0.0 && p.time > 0.0)) {
        return Err(Error::Parameter(format!("fit point ({}, {}) is not positive", p.delta, p.time)));
    }
    if used.len() < 3 {
        return Err(Error::InsufficientData(format!("{} uncensored points, at least 3 needed", used.len())));
    }
    let xs: Vec<f64> = used.iter().map(|p| p.delta.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.time.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all δ values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let intercept = my - b * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - b * x).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(ExponentFit { slope: -b, intercept, r_squared, used: used.len(), censored })
}
