use super::{momentum, nonlinear_field, quadratic_energy, r0_value, BeamState, NonlinearitySpec, TrajectoryRow};
use crate::error::{Error, Result};
use crate::ham_algebra::PolyHamiltonian;
use crate::small_divisors::FrequencyVector;
use crate::weighted_spaces::{seq_norm, SeqState, Weight};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Non-quadratic part of a Hamiltonian `D_ω + P`.
pub trait Interaction: Sync {
    /// `X_P = −i ∂P/∂ū`.
    fn field(&self, u: &SeqState, freq: &FrequencyVector) -> Result<SeqState>;
    fn value(&self, u: &SeqState, freq: &FrequencyVector) -> Result<f64>;
    /// `P ≡ 0`, so the flow is the exact rotation.
    fn is_zero(&self) -> bool {
        false
    }
}

impl Interaction for NonlinearitySpec {
    fn field(&self, u: &SeqState, freq: &FrequencyVector) -> Result<SeqState> {
        Ok(nonlinear_field(u, freq, self))
    }

    fn value(&self, u: &SeqState, freq: &FrequencyVector) -> Result<f64> {
        Ok(r0_value(u, freq, self))
    }

    fn is_zero(&self) -> bool {
        NonlinearitySpec::is_zero(self)
    }
}

impl Interaction for PolyHamiltonian {
    fn field(&self, u: &SeqState, _freq: &FrequencyVector) -> Result<SeqState> {
        self.vector_field(u, false)
    }

    fn value(&self, u: &SeqState, _freq: &FrequencyVector) -> Result<f64> {
        PolyHamiltonian::value(self, u)
    }

    fn is_zero(&self) -> bool {
        self.as_poly().is_zero()
    }
}

/// A polynomial interaction borrowed from elsewhere.
pub struct PolyInteraction<'a>(pub &'a PolyHamiltonian);

impl Interaction for PolyInteraction<'_> {
    fn field(&self, u: &SeqState, freq: &FrequencyVector) -> Result<SeqState> {
        Interaction::field(self.0, u, freq)
    }

    fn value(&self, u: &SeqState, freq: &FrequencyVector) -> Result<f64> {
        Interaction::value(self.0, u, freq)
    }

    fn is_zero(&self) -> bool {
        Interaction::is_zero(self.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exact half rotation, implicit-midpoint interaction kick, exact half rotation.
    #[default]
    StrangSplit,
    /// Classical RK4 on the interaction-picture field.
    Rk4Interaction,
}

fn rotate(u: &SeqState, freq: &FrequencyVector, tau: f64) -> SeqState {
    SeqState::from_fn(u.cutoff(), |j| u.get(j) * Complex64::from_polar(1.0, -freq.at(j) * tau))
}

fn axpy(y: &SeqState, a: f64, x: &SeqState) -> SeqState {
    let mut out = y.clone();
    for (o, v) in out.coeffs_mut().iter_mut().zip(x.coeffs()) {
        *o += v * a;
    }
    out
}

fn finite(u: &SeqState) -> bool {
    u.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// Solves `y = u + dt X((u + y)/2)` by fixed-point iteration.
fn midpoint_kick(u: &SeqState, inter: &dyn Interaction, freq: &FrequencyVector, dt: f64) -> Result<SeqState> {
    let scale = u.l2().max(f64::MIN_POSITIVE);
    let mut y = axpy(u, dt, &inter.field(u, freq)?);
    let mut prev = f64::INFINITY;
    for _ in 0..100 {
        let mid = u.axpby(0.5, &y, 0.5)?;
        let next = axpy(u, dt, &inter.field(&mid, freq)?);
        let diff = next.max_diff(&y);
        y = next;
        if !finite(&y) {
            break;
        }
        if diff <= 1e-16 * scale || (diff >= prev && diff <= 1e-12 * scale) {
            return Ok(y);
        }
        prev = diff;
    }
    if finite(&y) {
        Err(Error::StepRejected { step: 0, reason: "implicit midpoint kick did not converge".into() })
    } else {
        Ok(y)
    }
}

/// One step of `u̇ = −iωu + X_P(u)`; negative `dt` integrates backward.
pub fn step_with(state: &BeamState, inter: &dyn Interaction, dt: f64, scheme: Scheme) -> Result<BeamState> {
    if !(dt != 0.0 && dt.is_finite()) {
        return Err(Error::Parameter(format!("time step {dt} must be finite and nonzero")));
    }
    let freq = &state.freq;
    let u = match scheme {
        Scheme::StrangSplit => {
            let half = rotate(&state.u, freq, dt / 2.0);
            let kicked = midpoint_kick(&half, inter, freq, dt)?;
            rotate(&kicked, freq, dt / 2.0)
        }
        Scheme::Rk4Interaction => {
            // v(τ) = e^{iωτ} u(t+τ), v̇ = e^{iωτ} X_P(e^{−iωτ} v)
            let g = |tau: f64, v: &SeqState| -> Result<SeqState> {
                let back = rotate(v, freq, tau);
                Ok(rotate(&inter.field(&back, freq)?, freq, -tau))
            };
            let v0 = &state.u;
            let k1 = g(0.0, v0)?;
            let k2 = g(dt / 2.0, &axpy(v0, dt / 2.0, &k1))?;
            let k3 = g(dt / 2.0, &axpy(v0, dt / 2.0, &k2))?;
            let k4 = g(dt, &axpy(v0, dt, &k3))?;
            let mut v = v0.clone();
            for (i, o) in v.coeffs_mut().iter_mut().enumerate() {
                *o += (k1.coeffs()[i] + 2.0 * k2.coeffs()[i] + 2.0 * k3.coeffs()[i] + k4.coeffs()[i]) * (dt / 6.0);
            }
            rotate(&v, freq, dt)
        }
    };
    if !finite(&u) {
        return Err(Error::BlowUp { t: state.t });
    }
    Ok(BeamState { u, freq: state.freq, t: state.t + dt })
}

pub fn step(state: &BeamState, spec: &NonlinearitySpec, dt: f64, scheme: Scheme) -> Result<BeamState> {
    step_with(state, spec, dt, scheme)
}

/// `n` steps of size `dt`.
pub fn integrate(state: &BeamState, inter: &dyn Interaction, dt: f64, n: usize, scheme: Scheme) -> Result<BeamState> {
    if inter.is_zero() {
        let t = n as f64 * dt;
        return Ok(BeamState { u: rotate(&state.u, &state.freq, t), freq: state.freq, t: state.t + t });
    }
    let mut s = state.clone();
    for _ in 0..n {
        s = step_with(&s, inter, dt, scheme)?;
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityOptions {
    pub scheme: Scheme,
    /// Steps between norm samples.
    pub sample_every: usize,
    /// Also record energy and momentum at every sample.
    pub record_invariants: bool,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { scheme: Scheme::StrangSplit, sample_every: 10, record_invariants: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityResult {
    /// First sampled time with `|u|_w > 2δ`; `None` when censored.
    pub t_escape: Option<f64>,
    pub horizon: f64,
    pub samples: Vec<TrajectoryRow>,
}

impl StabilityResult {
    pub fn censored(&self) -> bool {
        self.t_escape.is_none()
    }

    /// Escape time, or the horizon for censored runs.
    pub fn time_or_horizon(&self) -> f64 {
        self.t_escape.unwrap_or(self.horizon)
    }
}

/// Escape time from the `2δ`-ball of `h_w` for the beam nonlinearity.
pub fn stability_time(
    u0: &BeamState,
    spec: &NonlinearitySpec,
    delta: f64,
    w: &Weight,
    horizon: f64,
    dt: f64,
) -> Result<StabilityResult> {
    stability_time_with(u0, spec, delta, w, horizon, dt, StabilityOptions::default())
}

pub fn stability_time_with(
    u0: &BeamState,
    inter: &dyn Interaction,
    delta: f64,
    w: &Weight,
    horizon: f64,
    dt: f64,
    opts: StabilityOptions,
) -> Result<StabilityResult> {
    if !(delta > 0.0 && horizon > 0.0 && dt > 0.0) {
        return Err(Error::Parameter("δ, horizon and dt must be positive".into()));
    }
    if opts.sample_every == 0 {
        return Err(Error::Parameter("sample interval must be positive".into()));
    }
    let n0 = seq_norm(&u0.u, w)?;
    if n0 > delta * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!("initial norm {n0:e} exceeds δ = {delta:e}")));
    }
    let row = |s: &BeamState, norm: f64| -> Result<TrajectoryRow> {
        let (energy, mom) = if opts.record_invariants {
            (quadratic_energy(&s.u, &s.freq) + inter.value(&s.u, &s.freq)?, momentum(&s.u))
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(TrajectoryRow { t: s.t, norm_w: norm, energy, momentum: mom })
    };
    let steps = (horizon / dt).round() as usize;
    let mut s = BeamState { t: 0.0, ..u0.clone() };
    let mut samples = vec![row(&s, n0)?];
    for k in 1..=steps {
        s = if inter.is_zero() {
            BeamState { u: rotate(&u0.u, &u0.freq, k as f64 * dt), ..s }
        } else {
            step_with(&s, inter, dt, opts.scheme)?
        };
        s.t = k as f64 * dt;
        if k % opts.sample_every == 0 || k == steps {
            let norm = seq_norm(&s.u, w)?;
            samples.push(row(&s, norm)?);
            if norm > 2.0 * delta {
                return Ok(StabilityResult { t_escape: Some(s.t), horizon, samples });
            }
        }
    }
    Ok(StabilityResult { t_escape: None, horizon, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest ℓ² norm the flow may reach.
    pub max_radius: f64,
    pub min_step: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { rtol: 1e-13, atol: 1e-18, max_radius: f64::INFINITY, min_step: 1e-9 }
    }
}

/// Time-one flow of `X_S` (`direction = −1` for the inverse).
pub fn apply_generator_flow(u: &BeamState, s: &PolyHamiltonian, direction: i32) -> Result<BeamState> {
    apply_generator_flow_with(u, s, direction, FlowOptions::default())
}

const DP_A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Adaptive Dormand–Prince 5(4) with the first-same-as-last property.
pub fn apply_generator_flow_with(u: &BeamState, s: &PolyHamiltonian, direction: i32, opts: FlowOptions) -> Result<BeamState> {
    if direction != 1 && direction != -1 {
        return Err(Error::Parameter(format!("direction {direction} must be ±1")));
    }
    crate::error::check_cutoff(u.cutoff(), s.cutoff())?;
    if s.is_zero() {
        return Ok(u.clone());
    }
    if u.u.l2() > opts.max_radius {
        return Err(Error::FlowDomain(format!("initial point outside radius {}", opts.max_radius)));
    }
    let sign = direction as f64;
    let f = |y: &SeqState| -> Result<SeqState> { Ok(s.vector_field(y, false)?.scale(sign)) };
    let mut y = u.u.clone();
    let mut t: f64 = 0.0;
    let mut h: f64 = 0.05;
    let mut k1 = f(&y)?;
    while t < 1.0 {
        h = h.min(1.0 - t);
        if h < opts.min_step && 1.0 - t > opts.min_step {
            return Err(Error::FlowDomain(format!("step size underflow at flow time {t}")));
        }
        let mut ks = vec![k1.clone()];
        for row in DP_A {
            let mut arg = y.clone();
            for (a, k) in row.iter().zip(&ks) {
                if *a != 0.0 {
                    arg = axpy(&arg, h * a, k);
                }
            }
            ks.push(f(&arg)?);
        }
        // ks[6] is the field at the 5th-order solution
        let mut y_new = y.clone();
        for (a, k) in DP_A[5].iter().zip(&ks) {
            y_new = axpy(&y_new, h * a, k);
        }
        let mut err = 0.0f64;
        for (i, (yo, yn)) in y.coeffs().iter().zip(y_new.coeffs()).enumerate() {
            let e: Complex64 = ks.iter().zip(DP_E).map(|(k, c)| k.coeffs()[i] * (h * c)).sum();
            let tol = opts.atol + opts.rtol * yo.norm().max(yn.norm());
            err = err.max(e.norm() / tol);
        }
        if !err.is_finite() || !finite(&y_new) {
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            t += h;
            y = y_new;
            k1 = ks.pop().expect("seven stages");
            if y.l2() > opts.max_radius {
                return Err(Error::FlowDomain(format!("flow left radius {} at time {t}", opts.max_radius)));
            }
        }
        h *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
    Ok(BeamState { u: y, freq: u.freq, t: u.t })
}
