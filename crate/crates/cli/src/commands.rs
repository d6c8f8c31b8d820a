use std::fs;
use std::path::{Path, PathBuf};

use cwl_core::analysis::{
    ingham_ratio, ingham_threshold, modal_infimum, stability_criterion, transfer_scan, vertical_line_sup,
    write_transfer_csv, CriterionVerdict, InghamResult, VerticalLineSup,
};
use cwl_core::delay::{fit_decay_rate, simulate, DecayFit, DelayParams, InitialData, SimulationOutput};
use cwl_core::galerkin::{
    conjugation_residual, estimate_delta, transfer_resolvent_pair, validate_quadruple, DeltaEstimate,
    OperatorQuadruple, ValidationReport,
};
use cwl_core::model::{assemble_model, ModalModel, ModalState, ModelConfig};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    parse, ConjugacyConfig, CriterionConfig, Field, ObservabilityConfig, RandomQuadrupleSpec, RunConfig,
    TransferConfig, ValidateConfig,
};
use crate::error::CliError;

pub struct Context {
    pub config: PathBuf,
    pub out: PathBuf,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

#[derive(Serialize)]
struct Output<'a, C, R> {
    config: &'a C,
    #[serde(flatten)]
    result: R,
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

/// CSV plus `<file>.config.json` holding the resolved configuration.
fn write_csv_with_sidecar<C: Serialize>(path: &Path, csv: &[u8], config: &C) -> Result<(), CliError> {
    write_bytes(path, csv)?;
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".config.json");
    write_json(Path::new(&sidecar), config)
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Validation(msg()))
    }
}

fn assemble(cfg: &ModelConfig) -> Result<ModalModel, CliError> {
    Ok(assemble_model(cfg)?)
}

fn random_quadruple(rng: &mut ChaCha8Rng, spec: &RandomQuadrupleSpec) -> Result<OperatorQuadruple, CliError> {
    require(spec.n1 > 0 && spec.n2 > 0 && spec.m > 0, || {
        format!("random quadruple dimensions must be positive, got {spec:?}")
    })?;
    Ok(OperatorQuadruple::random(rng, spec.n1, spec.n2, spec.m))
}

#[derive(Serialize)]
struct ValidationOutput {
    source: &'static str,
    report: ValidationReport,
    delta: DeltaEstimate,
    coupling_bound_holds: Option<bool>,
    all_passed: bool,
}

pub fn validate(ctx: &Context) -> Result<(), CliError> {
    let cfg: ValidateConfig = parse(&ctx.config)?;
    let sources = [cfg.model.is_some(), cfg.quadruple.is_some(), cfg.random.is_some()];
    require(sources.iter().filter(|&&s| s).count() == 1, || {
        "exactly one of `model`, `quadruple`, `random` must be given".into()
    })?;
    let (source, quad, bound) = if let Some(m) = &cfg.model {
        ("model", assemble(m)?.quad, Some(m.coupling_bound_holds()))
    } else if let Some(doc) = &cfg.quadruple {
        ("quadruple", OperatorQuadruple::try_from(doc.clone())?, None)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        ("random", random_quadruple(&mut rng, cfg.random.as_ref().expect("checked above"))?, None)
    };
    let report = validate_quadruple(&quad)?;
    let delta = estimate_delta(&quad)?;
    let all_passed = report.all_passed() && delta.admissible;
    let result = ValidationOutput { source, report, delta, coupling_bound_holds: bound, all_passed };
    write_json(&ctx.path("validation.json"), &Output { config: &cfg, result })?;
    if all_passed {
        Ok(())
    } else {
        Err(CliError::Validation("one or more structural checks failed, see validation.json".into()))
    }
}

struct PreparedRun {
    model: ModalModel,
    params: DelayParams,
    init: InitialData,
}

fn prepare_run(cfg: &RunConfig) -> Result<PreparedRun, CliError> {
    let model = assemble(&cfg.model)?;
    let d = &cfg.delay;
    let params = match d.mu {
        Some(mu) => DelayParams::new(d.alpha1, d.alpha2, d.tau, mu)?,
        None => DelayParams::with_midpoint_weight(d.alpha1, d.alpha2, d.tau)?,
    };
    params.delay_steps(cfg.dt)?;
    require(cfg.t_final > 0.0 && cfg.t_final.is_finite(), || format!("T = {} must be positive", cfg.t_final))?;
    require(cfg.sample_every >= 1, || "sample_every must be at least 1".into())?;
    require(cfg.history.is_finite(), || "history must be finite".into())?;
    let dims = model.quad.dims();
    let mut init = InitialData::zeros(dims.state());
    for amp in &cfg.initial {
        require(amp.position.is_finite() && amp.velocity.is_finite(), || format!("non-finite amplitude {amp:?}"))?;
        let (basis, offset) = match amp.field {
            Field::W1 => (model.basis1, 0),
            Field::W2 => (model.basis2, dims.n1),
        };
        let slot = basis
            .slot(amp.mode)
            .ok_or_else(|| CliError::Validation(format!("mode {} is not in the {:?} basis", amp.mode, amp.field)))?;
        init.position[offset + slot] += amp.position;
        init.velocity[offset + slot] += amp.velocity;
    }
    if let Some((a, b)) = cfg.window {
        require(a >= 0.0 && b > a && b <= cfg.t_final, || format!("window ({a}, {b}) must lie inside [0, T]"))?;
    }
    Ok(PreparedRun { model, params, init })
}

fn run(cfg: &RunConfig, prepared: &PreparedRun) -> Result<SimulationOutput, CliError> {
    let m = prepared.model.quad.dims().m;
    let value = cfg.history;
    let history = move |_s: f64| DVector::from_element(m, value);
    Ok(simulate(&prepared.model.quad, prepared.params, &prepared.init, &history, cfg.dt, cfg.t_final)?)
}

#[derive(Serialize)]
struct ResolvedRun<'a> {
    #[serde(flatten)]
    config: &'a RunConfig,
    resolved_delay: DelayParams,
}

pub fn simulate_cmd(ctx: &Context) -> Result<(), CliError> {
    let cfg: RunConfig = parse(&ctx.config)?;
    let prepared = prepare_run(&cfg)?;
    let out = run(&cfg, &prepared)?;
    let mut thinned = cwl_core::EnergyTrace::default();
    for i in (0..out.trace.len()).step_by(cfg.sample_every) {
        thinned.push(out.trace.times[i], out.trace.ed[i], out.trace.etilde[i]);
    }
    let resolved = ResolvedRun { config: &cfg, resolved_delay: prepared.params };
    write_csv_with_sidecar(&ctx.path("trace.csv"), thinned.to_csv_string().as_bytes(), &resolved)
}

#[derive(Serialize)]
struct DecayOutput {
    fit: DecayFit,
    decays: bool,
    initial_energy: f64,
    final_energy: f64,
    max_relative_increase: f64,
    modal_infimum: f64,
    argmin_n: usize,
}

pub fn decay(ctx: &Context) -> Result<(), CliError> {
    let cfg: RunConfig = parse(&ctx.config)?;
    let prepared = prepare_run(&cfg)?;
    let window = cfg.window.unwrap_or((0.5 * cfg.t_final, cfg.t_final));
    let out = run(&cfg, &prepared)?;
    let fit = fit_decay_rate(&out.trace, window)?;
    let (modal_infimum, argmin_n) = modal_infimum(&cfg.model, cfg.model.n);
    let result = DecayOutput {
        fit,
        decays: fit.omega > 0.0,
        initial_energy: out.trace.ed[0],
        final_energy: *out.trace.ed.last().expect("trace holds the initial sample"),
        max_relative_increase: out.trace.max_relative_increase(),
        modal_infimum,
        argmin_n,
    };
    let resolved = ResolvedRun { config: &cfg, resolved_delay: prepared.params };
    write_json(&ctx.path("decay.json"), &Output { config: &resolved, result })
}

#[derive(Serialize)]
struct TransferSummary {
    points: usize,
    max_relative_gap: f64,
    sup: Option<VerticalLineSup>,
}

pub fn transfer(ctx: &Context) -> Result<(), CliError> {
    let cfg: TransferConfig = parse(&ctx.config)?;
    cfg.model.validate()?;
    let mut points: Vec<(f64, f64)> = cfg.grid.as_ref().map(|g| g.points()).unwrap_or_default();
    if let Some(g) = &cfg.grid {
        require(g.n_re >= 1 && g.n_im >= 1, || "grid sizes must be at least 1".into())?;
    }
    points.extend(cfg.points.iter().copied());
    require(!points.is_empty(), || "no lambda points: give `grid` or `points`".into())?;
    for &(re, im) in &points {
        require(re > 0.0 && re.is_finite() && im.is_finite(), || format!("lambda = {re}+{im}i needs Re > 0"))?;
    }
    if let Some(s) = &cfg.sup {
        require(s.gamma > 0.0 && s.omega_max > 0.0 && s.n_samples >= 100, || {
            format!("sup settings need gamma > 0, omega_max > 0, n_samples >= 100, got {s:?}")
        })?;
    }
    let lambdas: Vec<Complex64> = points.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
    let samples = transfer_scan(&cfg.model, &lambdas)?;
    let max_relative_gap = samples
        .chunks(2)
        .map(|p| (p[0].h - p[1].h).norm() / (1.0 + p[1].h.norm()))
        .fold(0.0, f64::max);
    let sup = cfg.sup.map(|s| vertical_line_sup(&cfg.model, s.gamma, s.omega_max, s.n_samples)).transpose()?;

    let mut csv = Vec::new();
    write_transfer_csv(&samples, &mut csv).map_err(|e| CliError::io(ctx.path("transfer.csv"), e))?;
    write_csv_with_sidecar(&ctx.path("transfer.csv"), &csv, &cfg)?;
    let result = TransferSummary { points: lambdas.len(), max_relative_gap, sup };
    write_json(&ctx.path("transfer_summary.json"), &Output { config: &cfg, result })
}

#[derive(Serialize)]
struct Batch {
    min_ratio: f64,
    max_ratio: f64,
    mean_ratio: f64,
    results: Vec<InghamResult>,
}

#[derive(Serialize)]
struct ObservabilityOutput {
    #[serde(rename = "T")]
    t: f64,
    ingham_time: f64,
    batches: Vec<Batch>,
    /// Largest relative change of the bracket ends between consecutive batches.
    bracket_spread: f64,
    modal_infimum: f64,
    argmin_n: usize,
}

pub fn observability(ctx: &Context) -> Result<(), CliError> {
    let cfg: ObservabilityConfig = parse(&ctx.config)?;
    cfg.model.validate()?;
    require(cfg.max_mode >= 1 && cfg.draws >= 1 && cfg.batches >= 1 && cfg.n_scan >= 1, || {
        "max_mode, draws, batches and n_scan must be at least 1".into()
    })?;
    let threshold = ingham_threshold(&cfg.model);
    let t = cfg.t.unwrap_or(1.5 * threshold);
    require(t > threshold, || format!("T = {t} must exceed the Ingham time {threshold}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut batches = Vec::with_capacity(cfg.batches);
    for _ in 0..cfg.batches {
        let states: Vec<ModalState> =
            (0..cfg.draws).map(|_| ModalState::random(&cfg.model, cfg.max_mode, &mut rng)).collect();
        let results: Vec<InghamResult> =
            states.par_iter().map(|s| ingham_ratio(&cfg.model, s, t)).collect::<Result<_, _>>()?;
        let ratios = results.iter().map(|r| r.ratio);
        batches.push(Batch {
            min_ratio: ratios.clone().fold(f64::INFINITY, f64::min),
            max_ratio: ratios.clone().fold(f64::NEG_INFINITY, f64::max),
            mean_ratio: ratios.sum::<f64>() / results.len() as f64,
            results,
        });
    }
    let bracket_spread = batches
        .windows(2)
        .map(|w| {
            let lo = (w[1].min_ratio - w[0].min_ratio).abs() / w[0].min_ratio;
            let hi = (w[1].max_ratio - w[0].max_ratio).abs() / w[0].max_ratio;
            lo.max(hi)
        })
        .fold(0.0, f64::max);
    let (modal_infimum, argmin_n) = modal_infimum(&cfg.model, cfg.n_scan);
    let result = ObservabilityOutput { t, ingham_time: threshold, batches, bracket_spread, modal_infimum, argmin_n };
    write_json(&ctx.path("observability.json"), &Output { config: &cfg, result })
}

pub fn criterion(ctx: &Context) -> Result<(), CliError> {
    let cfg: CriterionConfig = parse(&ctx.config)?;
    let verdict: CriterionVerdict = stability_criterion(cfg.xi, cfg.denom_cap, cfg.tol)?;
    write_json(&ctx.path("criterion.json"), &Output { config: &cfg, result: verdict })
}

#[derive(Serialize)]
struct ConjugacyCase {
    label: String,
    conjugation_residual: f64,
    transfer_discrepancy: f64,
}

#[derive(Serialize)]
struct ConjugacyOutput {
    cases: Vec<ConjugacyCase>,
    max_conjugation_residual: f64,
    max_transfer_discrepancy: f64,
}

pub fn conjugacy(ctx: &Context) -> Result<(), CliError> {
    let cfg: ConjugacyConfig = parse(&ctx.config)?;
    for m in &cfg.models {
        m.validate()?;
    }
    require(cfg.quadruples > 0 || !cfg.models.is_empty(), || "nothing to check: set `quadruples` or `models`".into())?;
    let lambdas: Vec<Complex64> = if cfg.lambdas.is_empty() {
        vec![Complex64::new(1.0, 2.0)]
    } else {
        cfg.lambdas.iter().map(|&(r, i)| Complex64::new(r, i)).collect()
    };
    for l in &lambdas {
        require(l.re > 0.0 && l.is_finite(), || format!("lambda = {l} needs Re > 0"))?;
    }
    let spec = cfg.random.clone().unwrap_or(RandomQuadrupleSpec { n1: 4, n2: 3, m: 1 });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut labelled = Vec::new();
    for i in 0..cfg.quadruples {
        labelled.push((format!("random[{i}]"), random_quadruple(&mut rng, &spec)?));
    }
    for m in &cfg.models {
        labelled.push((format!("{:?}(beta={}, xi={}, N={})", m.kind, m.beta, m.xi, m.n), assemble(m)?.quad));
    }
    let cases: Vec<ConjugacyCase> = labelled
        .par_iter()
        .map(|(label, q)| -> Result<ConjugacyCase, CliError> {
            let conjugation_residual = conjugation_residual(q)?;
            let mut transfer_discrepancy: f64 = 0.0;
            for &l in &lambdas {
                transfer_discrepancy = transfer_discrepancy.max(transfer_resolvent_pair(q, l)?.max_relative_discrepancy());
            }
            Ok(ConjugacyCase { label: label.clone(), conjugation_residual, transfer_discrepancy })
        })
        .collect::<Result<_, _>>()?;
    let result = ConjugacyOutput {
        max_conjugation_residual: cases.iter().map(|c| c.conjugation_residual).fold(0.0, f64::max),
        max_transfer_discrepancy: cases.iter().map(|c| c.transfer_discrepancy).fold(0.0, f64::max),
        cases,
    };
    write_json(&ctx.path("conjugacy.json"), &Output { config: &cfg, result })
}
