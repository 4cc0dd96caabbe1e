//! Config-driven experiments: divisor audits, mass scans, normal form runs,
//! lifespan sweeps, exponent fits and lifespan predictions. Every run yields
//! a self-describing [`RunRecord`]; files are written via temp-then-rename.

pub mod cli;
mod fit;

pub use crate::bnf_engine::optimal_p;
pub use fit::{fit_exponent, ExponentFit, FitPoint};

use crate::beam_dynamics::{
    build_r0, stability_time_with, trajectory_csv, BeamState, NonlinearitySpec, Scheme, StabilityOptions,
};
use crate::bnf_engine::{bnf_iterate, predicted_times, ParamSchedule, PredictParams, Regularity, StepOptions};
use crate::error::{Error, Result};
use crate::ham_algebra::to_text;
use crate::small_divisors::{audit_csv, bad_set_measure, check_diophantine, enumerate_lambda, mass_grid, FrequencyVector};
use crate::weighted_spaces::{seq_norm, SeqState, Weight};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    DivisorAudit,
    MassScan,
    Bnf,
    Lifespan,
    Fit,
    PredictTimes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearityConfig {
    /// `(d, F^(d))` pairs.
    pub coeffs: Vec<(u32, f64)>,
    pub radius: f64,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self { coeffs: vec![(3, 1.0)], radius: 1.0 }
    }
}

impl NonlinearityConfig {
    pub fn build(&self) -> Result<NonlinearitySpec> {
        NonlinearitySpec::new(self.coeffs.iter().copied(), self.radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    pub kind: Regularity,
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self { kind: Regularity::Sobolev, s: 1.0, p: 2.0, q: 1.5 }
    }
}

impl WeightConfig {
    pub fn build(&self, cutoff: usize) -> Result<Weight> {
        match self.kind {
            Regularity::SubExp => Weight::subexp(self.s, self.p, self.q, cutoff),
            Regularity::Sobolev => Weight::sobolev(self.p, cutoff),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DivisorAuditConfig {
    pub m: f64,
    pub gamma: f64,
    pub max_l1: usize,
    pub cutoff: usize,
}

impl Default for DivisorAuditConfig {
    fn default() -> Self {
        Self { m: 1.37, gamma: 1e-2, max_l1: 4, cutoff: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MassScanConfig {
    pub gamma: f64,
    pub max_l1: usize,
    pub cutoff: usize,
    pub grid_points: usize,
    pub samples: usize,
}

impl Default for MassScanConfig {
    fn default() -> Self {
        Self { gamma: 1e-2, max_l1: 4, cutoff: 6, grid_points: 64, samples: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BnfConfig {
    pub cutoff: usize,
    pub m: f64,
    pub k_max: usize,
    pub buffer: usize,
    pub regularity: Regularity,
    pub r0: f64,
    pub r_bar: f64,
    pub s0: f64,
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub big_c: f64,
    pub override_gates: bool,
    pub nonlinearity: NonlinearityConfig,
}

impl Default for BnfConfig {
    fn default() -> Self {
        Self {
            cutoff: 4,
            m: 1.37,
            k_max: 3,
            buffer: 2,
            regularity: Regularity::SubExp,
            r0: 1e-3,
            r_bar: 1.0,
            s0: 1.0,
            p: 2.0,
            q: 1.5,
            gamma: 1e-2,
            big_c: 1.0,
            override_gates: false,
            nonlinearity: NonlinearityConfig::default(),
        }
    }
}

/// Largest number of normalization steps accepted from a config.
pub const MAX_BNF_STEPS: usize = 6;

impl BnfConfig {
    pub fn schedule(&self) -> ParamSchedule {
        ParamSchedule {
            kind: self.regularity,
            r0: self.r0,
            r_bar: self.r_bar,
            s0: self.s0,
            p: self.p,
            q: self.q,
            gamma: self.gamma,
            k_max: self.k_max,
            big_c: self.big_c,
        }
    }

    /// `R₀` at the configured mass and cutoff.
    pub fn hamiltonian(&self) -> Result<crate::ham_algebra::PolyHamiltonian> {
        let spec = self.nonlinearity.build()?;
        build_r0(&spec, self.m, self.cutoff, spec.max_degree().max(3))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifespanConfig {
    pub cutoff: usize,
    pub m: f64,
    pub deltas: Vec<f64>,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub sample_every: usize,
    pub weight: WeightConfig,
    pub nonlinearity: NonlinearityConfig,
    pub write_trajectories: bool,
}

impl Default for LifespanConfig {
    fn default() -> Self {
        Self {
            cutoff: 2,
            m: 1.37,
            deltas: vec![0.05, 0.02, 0.01],
            dt: 1e-2,
            horizon: 2000.0,
            scheme: Scheme::StrangSplit,
            sample_every: 10,
            weight: WeightConfig::default(),
            nonlinearity: NonlinearityConfig::default(),
            write_trajectories: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub points: Vec<FitPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    pub deltas: Vec<f64>,
    pub params: PredictParams,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self { deltas: (1..=12).map(|k| 10f64.powi(-k)).collect(), params: PredictParams::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Output directory; nothing is written when absent.
    pub out_dir: Option<PathBuf>,
    pub divisor_audit: DivisorAuditConfig,
    pub mass_scan: MassScanConfig,
    pub bnf: BnfConfig,
    pub lifespan: LifespanConfig,
    pub fit: FitConfig,
    pub predict_times: PredictConfig,
}

fn check_m(m: f64) -> Result<()> {
    if (1.0..=2.0).contains(&m) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("m = {m} outside [1, 2]")))
    }
}

fn check_gamma(g: f64) -> Result<()> {
    if g > 0.0 && g < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("γ = {g} outside (0, 1)")))
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 1.0 && q <= 2.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("q = {q} outside (1, 2]")))
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.5 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("p = {p} must exceed 1/2")))
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {x} must be positive")))
    }
}

impl ExperimentConfig {
    /// Parses a TOML document; missing keys take their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Range checks for the section selected by `kind`.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ExperimentKind::DivisorAudit => {
                let c = &self.divisor_audit;
                check_m(c.m)?;
                check_gamma(c.gamma)
            }
            ExperimentKind::MassScan => {
                let c = &self.mass_scan;
                check_gamma(c.gamma)?;
                if c.grid_points < 2 {
                    return Err(Error::Parameter("mass grid needs at least 2 points".into()));
                }
                if c.samples < 1000 {
                    return Err(Error::Parameter("at least 1000 Monte-Carlo samples required".into()));
                }
                Ok(())
            }
            ExperimentKind::Bnf => {
                let c = &self.bnf;
                check_m(c.m)?;
                c.schedule().validate()?;
                if c.k_max > MAX_BNF_STEPS {
                    return Err(Error::Budget(format!("K = {} exceeds the limit {MAX_BNF_STEPS}", c.k_max)));
                }
                c.nonlinearity.build().map(|_| ())
            }
            ExperimentKind::Lifespan => {
                let c = &self.lifespan;
                check_m(c.m)?;
                check_positive("dt", c.dt)?;
                check_positive("horizon", c.horizon)?;
                if c.deltas.is_empty() {
                    return Err(Error::Parameter("empty δ grid".into()));
                }
                for &d in &c.deltas {
                    check_positive("δ", d)?;
                }
                if c.sample_every == 0 {
                    return Err(Error::Parameter("sample interval must be positive".into()));
                }
                check_p(c.weight.p)?;
                if c.weight.kind == Regularity::SubExp {
                    check_q(c.weight.q)?;
                }
                c.nonlinearity.build().map(|_| ())
            }
            ExperimentKind::Fit => Ok(()),
            ExperimentKind::PredictTimes => {
                for &d in &self.predict_times.deltas {
                    check_positive("δ", d)?;
                }
                self.predict_times.params.validate()
            }
        }
    }

    /// SHA-256 of the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        serde_json::to_string(&c).expect("config serializes")
    }
}

/// Git-style content digest: SHA-256 of `blob <len>\0<bytes>`.
pub fn content_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub schema: u32,
    pub tool: String,
    pub tool_version: String,
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub input_digest: String,
    /// Resolved config, defaults included.
    pub config: ExperimentConfig,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub payload: Value,
    /// Digest of the payload and all artifacts; independent of timestamps.
    pub payload_digest: String,
    pub error: Option<String>,
    pub exit_code: i32,
    /// Files written next to the record (name → contents).
    #[serde(skip)]
    pub artifacts: BTreeMap<String, String>,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

fn now() -> f64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Output of one experiment: payload, artifacts and an optional error that
/// interrupted it after partial results were produced.
struct Outcome {
    payload: Value,
    artifacts: BTreeMap<String, String>,
    error: Option<Error>,
}

impl Outcome {
    fn ok(payload: Value) -> Self {
        Self { payload, artifacts: BTreeMap::new(), error: None }
    }

    fn with(mut self, name: &str, contents: String) -> Self {
        self.artifacts.insert(name.to_string(), contents);
        self
    }
}

/// Validates and executes the experiment. Validation failures are returned
/// as errors; failures during execution are kept in the record together
/// with any partial results. Files are written when `out_dir` is set.
pub fn run(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let started = now();
    let outcome = match dispatch(config) {
        Ok(o) => o,
        Err(e) => Outcome { payload: Value::Null, artifacts: BTreeMap::new(), error: Some(e) },
    };
    let mut h = Sha256::new();
    h.update(serde_json::to_string(&outcome.payload).expect("payload serializes").as_bytes());
    for (name, body) in &outcome.artifacts {
        h.update(name.as_bytes());
        h.update([0]);
        h.update(body.as_bytes());
    }
    let record = RunRecord {
        schema: SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME").to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        kind: config.kind,
        config_hash: config.hash(),
        input_digest: content_digest(config.canonical_json().as_bytes()),
        config: config.clone(),
        started_unix: started,
        finished_unix: now(),
        payload: outcome.payload,
        payload_digest: hex::encode(h.finalize()),
        exit_code: outcome.error.as_ref().map_or(0, Error::exit_code),
        error: outcome.error.map(|e| e.to_string()),
        artifacts: outcome.artifacts,
    };
    if let Some(dir) = &config.out_dir {
        persist(&record, dir)?;
    }
    Ok(record)
}

/// Writes `record.json` and every artifact into `dir`.
pub fn persist(record: &RunRecord, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in &record.artifacts {
        write_atomic(&dir.join(name), body.as_bytes())?;
    }
    write_atomic(&dir.join("record.json"), record.to_json().as_bytes())
}

/// Writes to a sibling temporary file, syncs, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(Error::from)
}

fn dispatch(config: &ExperimentConfig) -> Result<Outcome> {
    match config.kind {
        ExperimentKind::DivisorAudit => divisor_audit(&config.divisor_audit),
        ExperimentKind::MassScan => mass_scan(&config.mass_scan, config.seed),
        ExperimentKind::Bnf => bnf(&config.bnf),
        ExperimentKind::Lifespan => lifespan(&config.lifespan, config.seed),
        ExperimentKind::Fit => {
            let fit = fit_exponent(&config.fit.points)?;
            Ok(Outcome::ok(serde_json::to_value(fit).expect("fit serializes")))
        }
        ExperimentKind::PredictTimes => predict(&config.predict_times),
    }
}

fn divisor_audit(c: &DivisorAuditConfig) -> Result<Outcome> {
    let report = check_diophantine(c.m, c.gamma, c.max_l1, c.cutoff)?;
    let csv = audit_csv(&report.rows);
    let payload = json!({
        "passed": report.passed,
        "checked": report.checked,
        "shortcut": report.shortcut,
        "violations": report.violations,
        "worst": report.worst,
    });
    Ok(Outcome::ok(payload).with("divisor_audit.csv", csv))
}

fn mass_scan(c: &MassScanConfig, seed: u64) -> Result<Outcome> {
    let grid = mass_grid(c.grid_points);
    let rows: Vec<(f64, bool, f64)> = grid
        .par_iter()
        .map(|&m| {
            let r = check_diophantine(m, c.gamma, c.max_l1, c.cutoff)?;
            Ok((m, r.passed, r.worst.map_or(f64::INFINITY, |w| w.1)))
        })
        .collect::<Result<_>>()?;
    let family = enumerate_lambda(c.max_l1, c.cutoff)?;
    let mut out = Outcome::ok(Value::Null);
    let measure = match bad_set_measure(&family, c.gamma, c.samples, seed) {
        Ok(m) => Some(m),
        Err(e) => {
            out.error = Some(e);
            None
        }
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["m", "passed", "worst_ln_ratio"]).map_err(|e| Error::Io(e.to_string()))?;
    for (m, p, r) in &rows {
        w.write_record([format!("{m:.17e}"), p.to_string(), format!("{r:.17e}")]).map_err(|e| Error::Io(e.to_string()))?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).expect("utf8");
    out.payload = json!({
        "grid_points": rows.len(),
        "failing_masses": rows.iter().filter(|r| !r.1).count(),
        "family_size": family.len(),
        "measure": measure,
    });
    Ok(out.with("mass_scan.csv", csv))
}

fn bnf(c: &BnfConfig) -> Result<Outcome> {
    let h0 = c.hamiltonian()?;
    let freq = FrequencyVector::new(c.m, c.cutoff)?;
    let outcome = bnf_iterate(&h0, freq, &c.schedule(), c.buffer, StepOptions { override_gates: c.override_gates })?;
    let report = &outcome.report;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "degree",
        "r",
        "delta",
        "eps_sum",
        "eps_tail",
        "ln_j_theory",
        "theoretical_gate",
        "j_empirical",
        "empirical_gate",
        "generator_terms",
        "generator_norm",
        "elimination_residual",
        "truncation_loss",
    ])
    .map_err(|e| Error::Io(e.to_string()))?;
    for s in &report.steps {
        let f = |x: f64| format!("{x:.17e}");
        w.write_record([
            s.degree.to_string(),
            f(s.r),
            f(s.delta),
            f(s.eps.values().sum()),
            f(s.eps_tail),
            f(s.ln_j_theory),
            s.theoretical_gate.to_string(),
            f(s.j_empirical),
            s.empirical_gate.to_string(),
            s.generator_terms.to_string(),
            f(s.generator_norm),
            f(s.elimination_residual),
            f(s.truncation_loss),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    let ledger = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).expect("utf8");
    let z_terms: BTreeMap<String, usize> =
        outcome.state.z_by_degree.iter().map(|(d, z)| (d.to_string(), z.len())).collect();
    let payload = json!({
        "report": report,
        "normal_form_terms": z_terms,
        "remainder_terms": outcome.state.remainder()?.len(),
    });
    let error = report.error.clone().map(|msg| Error::StepRejected { step: report.completed_steps, reason: msg });
    let mut out = Outcome::ok(payload)
        .with("bnf_ledger.csv", ledger)
        .with("normal_form.txt", to_text(outcome.state.normal_form()?.as_poly()));
    out.error = error;
    Ok(out)
}

/// Seeded initial datum with `|u|_w = δ` along a fixed random direction.
pub fn initial_state(cutoff: usize, m: f64, w: &Weight, delta: f64, seed: u64) -> Result<BeamState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = SeqState::from_fn(cutoff, |_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let n = seq_norm(&raw, w)?;
    BeamState::new(raw.scale(delta / n), m)
}

fn lifespan(c: &LifespanConfig, seed: u64) -> Result<Outcome> {
    let spec = c.nonlinearity.build()?;
    let w = c.weight.build(c.cutoff)?;
    let opts = StabilityOptions { scheme: c.scheme, sample_every: c.sample_every, record_invariants: true };
    let results: Vec<Result<_>> = c
        .deltas
        .par_iter()
        .map(|&delta| {
            let u0 = initial_state(c.cutoff, c.m, &w, delta, seed)?;
            stability_time_with(&u0, &spec, delta, &w, c.horizon, c.dt, opts)
        })
        .collect();
    let mut out = Outcome::ok(Value::Null);
    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut w_csv = csv::Writer::from_writer(Vec::new());
    w_csv.write_record(["delta", "t_escape", "censored"]).map_err(|e| Error::Io(e.to_string()))?;
    for (i, (delta, res)) in c.deltas.iter().zip(results).enumerate() {
        match res {
            Ok(r) => {
                let t = r.time_or_horizon();
                points.push(FitPoint { delta: *delta, time: t, censored: r.censored() });
                rows.push(json!({"delta": delta, "t_escape": r.t_escape, "censored": r.censored()}));
                w_csv
                    .write_record([format!("{delta:.17e}"), format!("{t:.17e}"), r.censored().to_string()])
                    .map_err(|e| Error::Io(e.to_string()))?;
                if c.write_trajectories {
                    out.artifacts.insert(format!("trajectory_{i}.csv"), trajectory_csv(&r.samples)?);
                }
            }
            Err(e) => {
                rows.push(json!({"delta": delta, "error": e.to_string()}));
                if out.error.is_none() {
                    out.error = Some(e);
                }
            }
        }
    }
    let fit = fit_exponent(&points);
    out.payload = json!({
        "runs": rows,
        "fit": fit.as_ref().ok(),
        "fit_error": fit.as_ref().err().map(|e| e.to_string()),
    });
    let csv = String::from_utf8(w_csv.into_inner().map_err(|e| Error::Io(e.to_string()))?).expect("utf8");
    Ok(out.with("lifespan.csv", csv))
}

fn predict(c: &PredictConfig) -> Result<Outcome> {
    let rows: Vec<_> = c.deltas.iter().map(|&d| predicted_times(d, &c.params)).collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["delta", "ln_t_subexp", "ln_t_sobolev", "ln_t_optimized", "p_of_delta"])
        .map_err(|e| Error::Io(e.to_string()))?;
    let cell = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.17e}"));
    for r in &rows {
        w.write_record([
            format!("{:.17e}", r.delta),
            cell(r.t_subexp.ln_t()),
            cell(r.t_sobolev.ln_t()),
            cell(r.t_optimized.ln_t()),
            cell(r.p_of_delta),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).expect("utf8");
    Ok(Outcome::ok(json!({ "predictions": rows })).with("predicted_times.csv", csv))
}
