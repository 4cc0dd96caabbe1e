use super::{solve_homological, ParamSchedule};
use crate::error::{check_cutoff, Error, Result};
use crate::ham_algebra::{
    inv_factorial, lie_sum, majorant_upper, DegreePart, PolyHamiltonian, ResonantPart,
};
use crate::small_divisors::FrequencyVector;
use serde::Serialize;
use std::collections::BTreeMap;

/// `H = D_ω + Σ_{d<N} Z^{(d)} + Σ_{N≤d≤K} R^{(d)} + tail`, tail truncated at
/// scaling degree `K + 1 + B`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormState {
    pub freq: FrequencyVector,
    pub z_by_degree: BTreeMap<i64, PolyHamiltonian>,
    pub r_by_degree: BTreeMap<i64, PolyHamiltonian>,
    pub tail: PolyHamiltonian,
    /// Completed steps; the next step normalizes degree `step + 1`.
    pub step: usize,
    pub k_max: usize,
    pub buffer: usize,
}

impl NormalFormState {
    /// Splits a perturbation (no quadratic part) by scaling degree.
    pub fn new(h0: &PolyHamiltonian, freq: FrequencyVector, k_max: usize, buffer: usize) -> Result<Self> {
        check_cutoff(freq.cutoff(), h0.cutoff())?;
        if let Some(d) = h0.scaling_degree() {
            if d < 1 {
                return Err(Error::Domain(format!("perturbation has scaling degree {d} < 1")));
            }
        }
        if k_max == 0 {
            return Err(Error::Parameter("K must be at least 1".into()));
        }
        let mut r_by_degree = BTreeMap::new();
        for d in 1..=k_max as i64 {
            let part = h0.project_degree(d, DegreePart::Equal);
            if !part.is_zero() {
                r_by_degree.insert(d, part);
            }
        }
        let top = (k_max + 1 + buffer) as u32 + 2;
        let tail = h0.project_degree(k_max as i64, DegreePart::Greater).truncate_total_degree(top);
        Ok(Self { freq, z_by_degree: BTreeMap::new(), r_by_degree, tail, step: 0, k_max, buffer })
    }

    pub fn cutoff(&self) -> usize {
        self.freq.cutoff()
    }

    pub fn max_total_degree(&self) -> u32 {
        (self.k_max + 1 + self.buffer) as u32 + 2
    }

    pub fn r_at(&self, d: i64) -> PolyHamiltonian {
        self.r_by_degree.get(&d).cloned().unwrap_or_else(|| PolyHamiltonian::zero(self.cutoff()))
    }

    /// `Σ Z^{(d)}`.
    pub fn normal_form(&self) -> Result<PolyHamiltonian> {
        self.z_by_degree.values().try_fold(PolyHamiltonian::zero(self.cutoff()), |a, z| a.add(z))
    }

    /// `Σ R^{(d)} + tail`.
    pub fn remainder(&self) -> Result<PolyHamiltonian> {
        self.r_by_degree.values().try_fold(self.tail.clone(), |a, r| a.add(r))
    }

    /// Everything except `D_ω`.
    pub fn perturbation(&self) -> Result<PolyHamiltonian> {
        self.normal_form()?.add(&self.remainder()?)
    }

    pub fn diagonal(&self) -> PolyHamiltonian {
        let f = self.freq;
        PolyHamiltonian::diagonal(self.cutoff(), move |j| f.at(j))
    }

    /// `D_ω + Z + R + tail`.
    pub fn hamiltonian(&self) -> Result<PolyHamiltonian> {
        self.diagonal().add(&self.perturbation()?)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepOptions {
    /// Proceed even if the empirical gate fails.
    pub override_gates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub degree: i64,
    pub r: f64,
    pub r_next: f64,
    pub delta: f64,
    /// Upper brackets `ε_d = |R^{(d)}|_{r_k, w_k}` for `d ≥ N`.
    pub eps: BTreeMap<i64, f64>,
    pub eps_tail: f64,
    pub ln_j_theory: f64,
    pub theoretical_gate: bool,
    /// `max(1, max 1/|ω·(α−β)|)` over the monomials actually divided.
    pub j_empirical: f64,
    pub empirical_gate: bool,
    pub generator_terms: usize,
    pub generator_norm: f64,
    pub kernel_terms: usize,
    /// Largest nonresonant degree-`N` coefficient after the step, relative to the input.
    pub elimination_residual: f64,
    /// `2|G| (|S| / 2δ)^h` for the first dropped order `h`.
    pub truncation_loss: f64,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: NormalFormState,
    pub record: StepRecord,
    pub generator: PolyHamiltonian,
}

/// One normalization step at degree `N = state.step + 1`:
/// `Z₊^{(N)} = Π_K R^{(N)}`, `S = L_ω⁻¹ Π_R R^{(N)}`, `H₊ = e^{L_S} H`.
///
/// With `G` the non-quadratic part and `P = Π_R R^{(N)}`, using
/// `{D_ω, S} = −P` the new perturbation is
/// `G − P + Σ_{k≥1} L_S^k G / k! − Σ_{k≥2} L_S^{k−1} P / k!`.
pub fn bnf_step(state: &NormalFormState, schedule: &ParamSchedule, opts: StepOptions) -> Result<StepOutput> {
    schedule.validate()?;
    let k = state.step;
    let n = (k + 1) as i64;
    if k >= state.k_max {
        return Err(Error::Parameter(format!("all {} steps already done", state.k_max)));
    }
    let cutoff = state.cutoff();
    let r_k = schedule.r(k);
    let w_k = schedule.weight(k, cutoff)?;
    let delta = schedule.delta(k);

    let mut eps = BTreeMap::new();
    for (&d, part) in state.r_by_degree.range(n..) {
        eps.insert(d, majorant_upper(part, r_k, &w_k)?);
    }
    let eps_tail = majorant_upper(&state.tail, r_k, &w_k)?;
    let eps_total: f64 = eps.values().sum::<f64>() + eps_tail;

    let r_n = state.r_at(n);
    let kernel = r_n.project_resonant(ResonantPart::Kernel);
    let range = r_n.project_resonant(ResonantPart::Range);
    let generator = solve_homological(&range, &state.freq)?;

    let ln_j_theory = schedule.ln_j(k + 1)?;
    let theoretical_gate = eps_total == 0.0 || ln_j_theory + eps_total.ln() <= delta.ln();
    let j_empirical = range
        .terms()
        .map(|(key, _)| 1.0 / state.freq.divisor_of(key.alpha(), key.beta()).abs())
        .fold(1.0, f64::max);
    let empirical_gate = j_empirical * eps_total <= delta;
    if !empirical_gate && !opts.override_gates {
        return Err(Error::StepRejected {
            step: k,
            reason: format!("empirical gate J·ε = {:.3e} exceeds δ = {delta:.3e}", j_empirical * eps_total),
        });
    }

    let g = state.perturbation()?;
    let max_total = state.max_total_degree();
    let t = lie_sum(&g, &generator, max_total, 1, inv_factorial)?;
    let u = lie_sum(&range, &generator, max_total, 1, |m| inv_factorial(m + 1))?;
    let new = g.sub(&range)?.add(&t)?.sub(&u)?;

    let scale = r_n.max_abs().max(f64::MIN_POSITIVE);
    let residual = new.project_degree(n, DegreePart::Equal).project_resonant(ResonantPart::Range).max_abs() / scale;

    let mut next = state.clone();
    next.step = k + 1;
    next.z_by_degree.insert(n, kernel.clone());
    next.r_by_degree.clear();
    for d in (n + 1)..=state.k_max as i64 {
        let part = new.project_degree(d, DegreePart::Equal);
        if !part.is_zero() {
            next.r_by_degree.insert(d, part);
        }
    }
    next.tail = new.project_degree(state.k_max as i64, DegreePart::Greater);

    let generator_norm = majorant_upper(&generator, r_k, &w_k)?;
    let g_norm = majorant_upper(&g, r_k, &w_k)?;
    let d_g = g.scaling_degree().unwrap_or(i64::MAX);
    let truncation_loss = if generator.is_zero() || d_g == i64::MAX {
        0.0
    } else {
        let h = (max_total as i64 - 2 - d_g) / n + 1;
        2.0 * g_norm * (generator_norm / (2.0 * delta)).powi(h as i32)
    };

    let record = StepRecord {
        degree: n,
        r: r_k,
        r_next: schedule.r(k + 1),
        delta,
        eps,
        eps_tail,
        ln_j_theory,
        theoretical_gate,
        j_empirical,
        empirical_gate,
        generator_terms: generator.len(),
        generator_norm,
        kernel_terms: kernel.len(),
        elimination_residual: residual,
        truncation_loss,
    };
    Ok(StepOutput { state: next, record, generator })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BnfReport {
    pub schedule: ParamSchedule,
    pub cutoff: usize,
    pub mass: f64,
    pub steps: Vec<StepRecord>,
    /// `𝚁₀ = |R₀|_{r̄, w₀}` (upper bracket).
    pub r0_norm: f64,
    /// `𝚁₀ 4^{K+3} J_K ε ≤ δ₀` with `ε = r₀/r̄`.
    pub smallness_condition: bool,
    pub ln_c1: f64,
    pub ln_c2: f64,
    pub ln_c3: f64,
    /// `ln(𝙲₂* r₀²)` and `ln(𝙲₃* r₀^{K+1})`.
    pub ln_z_bound: f64,
    pub ln_remainder_bound: f64,
    /// Measured `|𝔷|` and `|ℜ|` at `(r₀/2, w_f)` (upper brackets).
    pub z_norm: f64,
    pub remainder_norm: f64,
    pub completed_steps: usize,
    pub error: Option<String>,
}

impl BnfReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct BnfOutcome {
    pub state: NormalFormState,
    pub report: BnfReport,
    pub generators: Vec<PolyHamiltonian>,
}

/// Runs the `K` steps. A rejected step ends the iteration early; the partial
/// state and the error are kept in the outcome.
pub fn bnf_iterate(
    h0: &PolyHamiltonian,
    freq: FrequencyVector,
    schedule: &ParamSchedule,
    buffer: usize,
    opts: StepOptions,
) -> Result<BnfOutcome> {
    schedule.validate()?;
    let cutoff = freq.cutoff();
    let mut state = NormalFormState::new(h0, freq, schedule.k_max, buffer)?;
    let w0 = schedule.weight(0, cutoff)?;
    let r0_norm = majorant_upper(h0, schedule.r_bar, &w0)?;
    let k = schedule.k_max as f64;
    let ln_jk = schedule.ln_j_final();
    let ln_r0n = r0_norm.ln();
    let ln_rbar = schedule.r_bar.ln();
    let ln_eps = schedule.r0.ln() - ln_rbar;
    let smallness_condition =
        r0_norm == 0.0 || ln_r0n + (k + 3.0) * 4f64.ln() + ln_jk + ln_eps <= schedule.delta(0).ln();
    let ln_16ek = (16.0 * std::f64::consts::E * k).ln();
    let ln_c1 = ln_r0n - ln_rbar + ln_jk;
    let ln_c2 = ln_16ek + ln_r0n + (k + 1.0) * 4f64.ln() - 2.0 * ln_rbar + ln_jk;
    let ln_c3 = ln_r0n + k * (ln_16ek + (k + 2.0) * 4f64.ln()) - (k + 1.0) * ln_rbar + k * ln_jk;

    let mut steps = Vec::new();
    let mut generators = Vec::new();
    let mut error = None;
    while state.step < state.k_max {
        match bnf_step(&state, schedule, opts) {
            Ok(out) => {
                steps.push(out.record);
                generators.push(out.generator);
                state = out.state;
            }
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    let wf = schedule.final_weight(cutoff)?;
    let rf = schedule.r(schedule.k_max);
    let z_norm = majorant_upper(state.normal_form()?.as_poly(), rf, &wf)?;
    let remainder_norm = majorant_upper(state.remainder()?.as_poly(), rf, &wf)?;
    let report = BnfReport {
        schedule: schedule.clone(),
        cutoff,
        mass: freq.mass(),
        completed_steps: steps.len(),
        steps,
        r0_norm,
        smallness_condition,
        ln_c1,
        ln_c2,
        ln_c3,
        ln_z_bound: ln_c2 + 2.0 * schedule.r0.ln(),
        ln_remainder_bound: ln_c3 + (k + 1.0) * schedule.r0.ln(),
        z_norm,
        remainder_norm,
        error,
    };
    Ok(BnfOutcome { state, report, generators })
}
