use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Inputs of the lifespan lower bounds. The absolute constants `c`, `c1..c3`
/// are not known numerically and default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictParams {
    /// Analyticity radius `R` of the nonlinearity.
    pub big_r: f64,
    /// `|F|_R`.
    pub f_norm: f64,
    pub gamma: f64,
    pub p: f64,
    pub s: f64,
    pub q: f64,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for PredictParams {
    fn default() -> Self {
        Self { big_r: 1.0, f_norm: 1.0, gamma: 0.5, p: 2.0, s: 1.0, q: 2.0, c: 1.0, c1: 1.0, c2: 1.0, c3: 1.0 }
    }
}

impl PredictParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.big_r, self.f_norm, self.s, self.c, self.c1, self.c2, self.c3];
        if pos.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::Parameter("R, |F|_R, s and the constants must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Parameter(format!("γ = {} outside (0, 1)", self.gamma)));
        }
        if !(self.q > 1.0 && self.q <= 2.0) {
            return Err(Error::Parameter(format!("q = {} outside (1, 2]", self.q)));
        }
        if !(self.p > 1.0) {
            return Err(Error::Parameter(format!("p = {} must exceed 1", self.p)));
        }
        Ok(())
    }

    /// `δ_S = R / (2⁵ |F|_R)`.
    pub fn delta_sobolev(&self) -> f64 {
        self.big_r / (32.0 * self.f_norm)
    }

    /// `ln δ_sE`.
    pub fn ln_delta_subexp(&self) -> f64 {
        let inner = (self.c / (self.gamma.powi(4) * self.s)).powf(1.0 / (self.q - 1.0));
        let first = -(self.c1 * self.f_norm).ln() + (-inner).exp();
        let second = -(self.c2 * self.f_norm).ln();
        first.min(second)
    }

    /// Exponent `b = 24c²[2⁶·36²]^{5/3}` of the optimized-index threshold `δ_S γ^b`.
    pub fn optimized_threshold_exponent(&self) -> f64 {
        24.0 * self.c * self.c * (64.0f64 * 1296.0).powf(5.0 / 3.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Prediction {
    Value { ln_t: f64, t: f64 },
    /// `δ` exceeds the admissible threshold; `ln_threshold` is its logarithm.
    ThresholdViolated { ln_threshold: f64 },
}

impl Prediction {
    fn value(ln_t: f64) -> Self {
        Prediction::Value { ln_t, t: ln_t.exp() }
    }

    pub fn ln_t(&self) -> Option<f64> {
        match self {
            Prediction::Value { ln_t, .. } => Some(*ln_t),
            Prediction::ThresholdViolated { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictedTimes {
    pub delta: f64,
    pub t_subexp: Prediction,
    pub t_sobolev: Prediction,
    pub t_optimized: Prediction,
    /// Optimal Sobolev index `p(δ)`, when `δ < δ_S`.
    pub p_of_delta: Option<f64>,
}

/// Lower bounds on the stability time for data of size `δ`, evaluated in
/// log space.
pub fn predicted_times(delta: f64, params: &PredictParams) -> Result<PredictedTimes> {
    params.validate()?;
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("δ = {delta} must be positive")));
    }
    let ln_delta = delta.ln();
    let ln_gamma = params.gamma.ln();
    let ln_ds = params.delta_sobolev().ln();
    let ln_front = params.big_r.ln() - (2.0 * params.f_norm).ln() - ln_delta;

    let ln_thr_sob = ln_ds + params.c * params.p * ln_gamma;
    let t_sobolev = if ln_delta > ln_thr_sob {
        Prediction::ThresholdViolated { ln_threshold: ln_thr_sob }
    } else {
        let expo = (params.p - 1.0).cbrt() / params.c;
        Prediction::value(ln_front + params.c * params.p * params.p * ln_gamma + expo * (ln_ds - ln_delta))
    };

    let ln_thr_opt = ln_ds + params.optimized_threshold_exponent() * ln_gamma;
    let t_optimized = if ln_delta > ln_thr_opt {
        Prediction::ThresholdViolated { ln_threshold: ln_thr_opt }
    } else {
        let c = params.c;
        let factor = c * (-ln_gamma).powf(-0.2) / (24.0 * c * c).powf(1.2);
        Prediction::value(ln_front + factor * (ln_ds - ln_delta).powf(1.2))
    };

    let ln_dse = params.ln_delta_subexp();
    let t_subexp = if ln_delta > ln_dse {
        Prediction::ThresholdViolated { ln_threshold: ln_dse }
    } else {
        let l = ln_dse - ln_delta;
        let lnln = if l > 1.0 { l.ln() } else { 0.0 };
        let base = params.gamma.powi(4) * params.s / params.c * lnln;
        Prediction::value(params.c3.ln() + l + 0.5 * l * base.powf((params.q - 1.0) / 2.0))
    };

    let p_of_delta = optimal_p(delta, params.gamma, params.delta_sobolev(), params.c).ok();
    Ok(PredictedTimes { delta, t_subexp, t_sobolev, t_optimized, p_of_delta })
}

/// `p(δ) = 1 + ((1/(24c² ln(1/γ))) ln(δ_S/δ))^{3/5}`.
pub fn optimal_p(delta: f64, gamma: f64, delta_s: f64, c: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!("γ = {gamma} outside (0, 1)")));
    }
    if !(delta > 0.0 && delta_s > 0.0 && c > 0.0) {
        return Err(Error::Parameter("δ, δ_S and c must be positive".into()));
    }
    if delta >= delta_s {
        return Err(Error::Domain(format!("δ = {delta} is not below δ_S = {delta_s}")));
    }
    let x = (delta_s / delta).ln() / (24.0 * c * c * (1.0 / gamma).ln());
    Ok(1.0 + x.powf(0.6))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_optimal_p() {
        let (gamma, ds, c) = (0.3, 0.02, 0.7);
        for delta in [1e-3, 1e-6, 1e-12, 1e-40] {
            let p = optimal_p(delta, gamma, ds, c).unwrap();
            let back = ds * (-24.0 * c * c * (p - 1.0).powf(5.0 / 3.0) * (1.0 / gamma).ln()).exp();
            assert!(((back - delta) / delta).abs() < 1e-10);
        }
        assert!(optimal_p(ds, gamma, ds, c).is_err());
        let near = optimal_p(ds * (1.0 - 1e-12), gamma, ds, c).unwrap();
        assert!(near > 1.0 && near < 1.01);
    }

    #[test]
    fn thresholds_and_monotonicity() {
        let params = PredictParams::default();
        let thr = params.delta_sobolev() * params.gamma.powf(params.c * params.p);
        let at = predicted_times(thr, &params).unwrap();
        assert!(at.t_sobolev.ln_t().unwrap().is_finite());
        let above = predicted_times(thr * 1.01, &params).unwrap();
        assert!(matches!(above.t_sobolev, Prediction::ThresholdViolated { .. }));

        let dse = params.ln_delta_subexp().exp();
        assert!(predicted_times(dse, &params).unwrap().t_subexp.ln_t().unwrap().is_finite());

        let mut last = [f64::NEG_INFINITY; 2];
        for k in 0..40 {
            let d = thr * 10f64.powf(-(40 - k) as f64 / 4.0);
            let t = predicted_times(d, &params).unwrap();
            let cur = [t.t_sobolev.ln_t().unwrap(), t.t_subexp.ln_t().unwrap()];
            if k > 0 {
                assert!(cur[0] < last[0] && cur[1] < last[1]);
            }
            last = cur;
        }
    }

    #[test]
    fn sobolev_exponent_shape() {
        let params = PredictParams { p: 3.0, c: 2.0, ..Default::default() };
        let expo = (params.p - 1.0).cbrt() / params.c;
        let t1 = predicted_times(1e-8, &params).unwrap().t_sobolev.ln_t().unwrap();
        let t2 = predicted_times(1e-9, &params).unwrap().t_sobolev.ln_t().unwrap();
        assert!(((t2 - t1) - (1.0 + expo) * 10f64.ln()).abs() < 1e-9);
    }
}
