//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cwl_core::analysis::{
    ingham_ratio, ingham_threshold, paper_bound_h1, stability_criterion, transfer_scan, vertical_line_sup,
    DEFAULT_DENOM_CAP, DEFAULT_TOL,
};
use cwl_core::delay::{fit_decay_rate, simulate, DelayParams, InitialData};
use cwl_core::galerkin::{conjugation_residual, transfer_resolvent_pair, OperatorQuadruple};
use cwl_core::model::{adjoint_trace, assemble_model, Branch, ModalState, ModelConfig, ModelKind};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONJUGACY_TOL: f64 = 1e-10;
const TRANSFER_IDENTITY_TOL: f64 = 1e-8;
const CLOSED_FORM_TOL: f64 = 1e-6;
const BOUND_SLACK: f64 = 1e-9;
const BOUND_DISPLAY: f64 = 0.3283;
const CONSERVATION_TOL: f64 = 1e-8;
const DISSIPATION_SLACK: f64 = 1e-8;
const DECAY_FLOOR: f64 = 0.01;
const DECAY_RATIO: f64 = 0.1;
const INGHAM_QUAD_TOL: f64 = 1e-8;
const SINGLE_MODE_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    check(elapsed.as_secs_f64() < limit_s, || format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64()))
}

fn model(kind: ModelKind, beta: f64, xi: f64, n: usize) -> ModelConfig {
    ModelConfig::new(kind, beta, xi, n).expect("valid model config")
}

fn random_quadruple(rng: &mut ChaCha8Rng) -> OperatorQuadruple {
    let n1 = rng.random_range(1..=8);
    let n2 = rng.random_range(1..=8);
    let m = rng.random_range(1..=3);
    OperatorQuadruple::random(rng, n1, n2, m)
}

fn conjugacy() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut quads: Vec<OperatorQuadruple> = (0..20).map(|_| random_quadruple(&mut rng)).collect();
    for kind in [ModelKind::Dirichlet, ModelKind::Mixed] {
        quads.push(assemble_model(&model(kind, 0.5, 0.37, 12)).map_err(|e| e.to_string())?.quad);
    }
    let mut worst: f64 = 0.0;
    for q in &quads {
        worst = worst.max(conjugation_residual(q).map_err(|e| e.to_string())?);
    }
    check(worst <= CONJUGACY_TOL, || format!("residual {worst:e} > {CONJUGACY_TOL:e}"))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!("max residual {worst:.2e} over {} quadruples", quads.len()))
}

fn transfer_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let grid: Vec<Complex64> =
        (0..10).map(|k| Complex64::new(0.5 + 1.5 * k as f64 / 9.0, -6.0 + 12.0 * k as f64 / 9.0)).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let q = random_quadruple(&mut rng);
        for &l in &grid {
            let t = transfer_resolvent_pair(&q, l).map_err(|e| e.to_string())?;
            worst = worst.max(t.max_relative_discrepancy());
        }
    }
    check(worst <= TRANSFER_IDENTITY_TOL, || format!("discrepancy {worst:e} > {TRANSFER_IDENTITY_TOL:e}"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("max relative discrepancy {worst:.2e}"))
}

fn closed_form_vs_bvp() -> Outcome {
    let start = Instant::now();
    let grid: Vec<Complex64> =
        (0..20).map(|k| Complex64::new(0.5 + 2.5 * (k % 5) as f64 / 4.0, -40.0 + 80.0 * k as f64 / 19.0)).collect();
    let mut worst: f64 = 0.0;
    for kind in [ModelKind::Dirichlet, ModelKind::Mixed] {
        for (beta, xi) in [(0.0, 0.5), (0.4, 0.37), (0.9, 0.71)] {
            let samples = transfer_scan(&model(kind, beta, xi, 20), &grid).map_err(|e| e.to_string())?;
            for pair in samples.chunks(2) {
                let (cf, bvp) = (&pair[0], &pair[1]);
                let scale = bvp.h.norm().max(bvp.h1.norm()).max(bvp.h2.norm());
                let gap = (cf.h - bvp.h).norm().max((cf.h1 - bvp.h1).norm()).max((cf.h2 - bvp.h2).norm()) / scale;
                worst = worst.max(gap);
            }
        }
    }
    check(worst <= CLOSED_FORM_TOL, || format!("relative gap {worst:e} > {CLOSED_FORM_TOL:e}"))?;
    within(start.elapsed(), 20.0)?;
    Ok(format!("max relative gap {worst:.2e} over 240 points"))
}

fn bound_plug_in() -> Outcome {
    let cfg = model(ModelKind::Dirichlet, 0.0, 0.5, 20);
    let bound = paper_bound_h1(&cfg, 1.0);
    let formula = 0.5 * 1f64.cosh().powi(2) / 2f64.sinh();
    check((bound - formula).abs() <= 1e-14, || format!("bound {bound} differs from {formula}"))?;
    check((bound - BOUND_DISPLAY).abs() < 5e-5, || format!("bound {bound} does not round to {BOUND_DISPLAY}"))?;
    let sup = vertical_line_sup(&cfg, 1.0, 200.0, 40_001).map_err(|e| e.to_string())?;
    check(sup.re_lambda == 2.0, || format!("sampled Re λ = {}", sup.re_lambda))?;
    check(sup.sup_h1 <= bound * (1.0 + BOUND_SLACK), || format!("grid sup {} exceeds bound {bound}", sup.sup_h1))?;
    Ok(format!("bound {bound:.6}, grid sup |H1| {:.6} on Re λ = 2", sup.sup_h1))
}

fn conservation() -> Outcome {
    let mut worst: f64 = 0.0;
    for kind in [ModelKind::Dirichlet, ModelKind::Mixed] {
        let q = assemble_model(&model(kind, 0.6, 0.37, 20)).map_err(|e| e.to_string())?.quad;
        let d = q.dims();
        let mut init = InitialData::zeros(d.state());
        for k in 0..d.n1.min(5) {
            init.position[k] = 1.0 / (k + 1) as f64;
        }
        init.velocity[d.n1] = 0.7;
        let params = DelayParams::new(0.0, 0.0, 0.01, 0.0).map_err(|e| e.to_string())?;
        let h = |_s: f64| DVector::zeros(d.m);
        let dt = 1e-3;
        let out = simulate(&q, params, &init, &h, dt, 1e4 * dt).map_err(|e| e.to_string())?;
        check(out.trace.len() == 10_001, || format!("{} samples", out.trace.len()))?;
        let e0 = out.trace.ed[0];
        let drift = out.trace.ed.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0;
        worst = worst.max(drift);
    }
    check(worst <= CONSERVATION_TOL, || format!("drift {worst:e} > {CONSERVATION_TOL:e}"))?;
    Ok(format!("max relative drift {worst:.2e} over 1e4 steps"))
}

fn dissipativity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let dt = 1.0 / 128.0;
    let mut worst = f64::NEG_INFINITY;
    for draw in 0..5 {
        let kind = if draw % 2 == 0 { ModelKind::Mixed } else { ModelKind::Dirichlet };
        let cfg = model(kind, rng.random_range(0.1..0.95), rng.random_range(0.1..0.9), 20);
        let q = assemble_model(&cfg).map_err(|e| e.to_string())?.quad;
        let alpha1: f64 = rng.random_range(0.2..2.0);
        let alpha2 = alpha1 * rng.random_range(0.0..0.95);
        let tau = [0.25, 0.5, 1.0][rng.random_range(0..3)];
        let (lo, hi) = (tau * alpha2, tau * (2.0 * alpha1 - alpha2));
        let mu = lo + (hi - lo) * rng.random::<f64>();
        let params = DelayParams::new(alpha1, alpha2, tau, mu).map_err(|e| e.to_string())?;
        let d = q.dims();
        let mut init = InitialData::zeros(d.state());
        for k in 0..d.state() {
            init.position[k] = rng.random_range(-1.0..1.0) / (k + 1) as f64;
            init.velocity[k] = rng.random_range(-1.0..1.0) / (k + 1) as f64;
        }
        let phase: f64 = rng.random_range(0.0..PI);
        let h = move |s: f64| DVector::from_element(d.m, (3.0 * s + phase).sin());
        let out = simulate(&q, params, &init, &h, dt, 20.0).map_err(|e| e.to_string())?;
        let inc = out.trace.max_relative_increase();
        check(inc <= DISSIPATION_SLACK, || format!("draw {draw}: E_d increased by {inc:e} with {params:?}"))?;
        worst = worst.max(inc);
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!("max step-wise relative increase {worst:.2e} over 5 draws"))
}

fn fitted_rate(cfg: &ModelConfig, field1_mode: usize) -> Result<f64, String> {
    let m = assemble_model(cfg).map_err(|e| e.to_string())?;
    let mut init = InitialData::zeros(m.quad.dims().state());
    init.position[m.basis1.slot(field1_mode).ok_or("mode outside basis")?] = 1.0;
    let params = DelayParams::with_midpoint_weight(1.0, 0.5, 1.0).map_err(|e| e.to_string())?;
    let h = |_s: f64| DVector::zeros(1);
    let out = simulate(&m.quad, params, &init, &h, 1.0 / 128.0, 40.0).map_err(|e| e.to_string())?;
    Ok(fit_decay_rate(&out.trace, (20.0, 40.0)).map_err(|e| e.to_string())?.omega)
}

fn decay_dichotomy() -> Outcome {
    let stable = fitted_rate(&model(ModelKind::Mixed, 0.8, 1.0 / 3.0, 20), 3)?;
    let mixed_half = fitted_rate(&model(ModelKind::Mixed, 0.8, 0.5, 20), 3)?;
    let dirichlet_half = fitted_rate(&model(ModelKind::Dirichlet, 0.8, 0.5, 20), 10)?;
    check(stable > DECAY_FLOOR, || format!("ξ = 1/3 rate {stable:e} not above {DECAY_FLOOR}"))?;
    check(mixed_half < DECAY_RATIO * stable, || format!("mixed ξ = 1/2 rate {mixed_half:e} vs {stable:e}"))?;
    check(dirichlet_half < DECAY_RATIO * stable, || format!("Dirichlet ξ = 1/2 rate {dirichlet_half:e} vs {stable:e}"))?;
    Ok(format!("ω(1/3) = {stable:.4}, ω(mixed 1/2) = {mixed_half:.1e}, ω(Dirichlet 1/2) = {dirichlet_half:.1e}"))
}

fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let x = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    let w = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * h;
            x.iter().zip(w).map(|(xi, wi)| wi * f(mid + 0.5 * h * xi)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

fn ingham_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for draw in 0..50 {
        let kind = if draw % 2 == 0 { ModelKind::Dirichlet } else { ModelKind::Mixed };
        let cfg = model(kind, rng.random_range(0.0..0.95), rng.random_range(0.05..0.95), 20);
        let t = 1.5 * ingham_threshold(&cfg);
        let state = ModalState::random(&cfg, 4, &mut rng);
        let r = ingham_ratio(&cfg, &state, t).map_err(|e| e.to_string())?;
        let quad = gauss_legendre(|s| adjoint_trace(&cfg, &state, s).expect("valid state").norm_sqr(), 0.0, t, 600);
        worst = worst.max((r.integral - quad).abs() / quad);
    }
    check(worst <= INGHAM_QUAD_TOL, || format!("closed form vs quadrature {worst:e}"))?;

    let mut single: f64 = 0.0;
    for (kind, branch) in [(ModelKind::Dirichlet, None), (ModelKind::Mixed, Some(Branch::Minus))] {
        let cfg = model(kind, 0.4, 0.3, 20);
        let t = 2.0 * ingham_threshold(&cfg);
        let state = ModalState::new(&cfg, [(3, branch, Complex64::new(0.7, -0.4))]).map_err(|e| e.to_string())?;
        let r = ingham_ratio(&cfg, &state, t).map_err(|e| e.to_string())?;
        single = single.max((r.ratio - t).abs() / t);
    }
    check(single <= SINGLE_MODE_TOL, || format!("single-mode ratio off by {single:e}"))?;
    Ok(format!("quadrature gap {worst:.2e} over 50 states, single-mode gap {single:.1e}"))
}

fn criterion_rule() -> Outcome {
    let cases = [
        (1.0 / 3.0, true),
        (2.0 / 3.0, false),
        (0.75, true),
        (std::f64::consts::FRAC_1_SQRT_2, false),
    ];
    let mut parts = Vec::new();
    for (xi, expected) in cases {
        let v = stability_criterion(xi, DEFAULT_DENOM_CAP, DEFAULT_TOL).map_err(|e| e.to_string())?;
        check(v.paper_rule == expected, || format!("ξ = {xi}: paper_rule {} expected {expected}", v.paper_rule))?;
        check(v.modal_infimum.is_finite() && v.modal_infimum >= 0.0, || format!("ξ = {xi}: {v:?}"))?;
        parts.push(format!("{xi:.4}→{} (inf {:.3})", v.paper_rule, v.modal_infimum));
    }
    Ok(parts.join(", "))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).expect("write config");
    p
}

fn run_cli(command: &str, config: &Path, out: &Path, threads: Option<&str>) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cwl"));
    cmd.args([command, "--config"]).arg(config).arg("--out").arg(out);
    match threads {
        Some(t) => cmd.env("CWL_THREADS", t),
        None => cmd.env_remove("CWL_THREADS"),
    };
    let status = cmd.output().map_err(|e| e.to_string())?;
    check(status.status.success(), || {
        format!("{command} exited {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr))
    })
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let configs = [
        ("validate", r#"{"random": {"n1": 5, "n2": 4, "m": 2}, "seed": 11}"#),
        (
            "simulate",
            r#"{"model": {"kind": "mixed", "beta": 0.8, "xi": 0.3333333333333333, "N": 12},
                "delay": {"alpha1": 1.0, "alpha2": 0.5, "tau": 0.5}, "dt": 0.0078125, "T": 5,
                "initial": [{"field": "w1", "mode": 2, "position": 1.0}], "history": 0.2, "seed": 3}"#,
        ),
        (
            "decay",
            r#"{"model": {"kind": "dirichlet", "beta": 0.5, "xi": 0.37, "N": 12},
                "delay": {"alpha1": 1.0, "alpha2": 0.5, "tau": 0.5}, "dt": 0.0078125, "T": 8,
                "initial": [{"field": "w1", "mode": 1, "position": 1.0}], "seed": 3}"#,
        ),
        (
            "transfer",
            r#"{"model": {"kind": "mixed", "beta": 0.5, "xi": 0.37, "N": 10},
                "grid": {"re": [0.5, 2.0], "n_re": 4, "im": [-20.0, 20.0], "n_im": 9},
                "sup": {"gamma": 1.0, "omega_max": 40.0, "n_samples": 2001}, "seed": 4}"#,
        ),
        (
            "observability",
            r#"{"model": {"kind": "dirichlet", "beta": 0.5, "xi": 0.37, "N": 10}, "max_mode": 5, "draws": 16, "seed": 5}"#,
        ),
        ("criterion", r#"{"xi": 0.3333333333, "seed": 6}"#),
        (
            "conjugacy",
            r#"{"seed": 7, "quadruples": 4, "models": [{"kind": "mixed", "beta": 0.5, "xi": 0.37, "N": 8}],
                "lambdas": [[1.0, 2.0], [0.5, -7.0]]}"#,
        ),
    ];
    let mut files = 0;
    for (command, body) in configs {
        let cfg = write_config(dir, &format!("{command}.json"), body);
        let (a, b) = (dir.join(format!("{command}-a")), dir.join(format!("{command}-b")));
        run_cli(command, &cfg, &a, Some("1"))?;
        run_cli(command, &cfg, &b, None)?;
        let mut names: Vec<_> = std::fs::read_dir(&a)
            .map_err(|e| e.to_string())?
            .map(|e| e.expect("dir entry").file_name())
            .collect();
        names.sort();
        check(!names.is_empty(), || format!("{command} wrote no files"))?;
        for name in names {
            let left = std::fs::read(a.join(&name)).map_err(|e| e.to_string())?;
            let right = std::fs::read(b.join(&name)).map_err(|e| format!("{command}: {name:?}: {e}"))?;
            check(left == right, || format!("{command}: {name:?} differs between runs"))?;
            files += 1;
        }
    }
    Ok(format!("{files} output files byte-identical across 7 commands"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("conjugacy", conjugacy),
        ("transfer identity", transfer_identity),
        ("closed form vs BVP", closed_form_vs_bvp),
        ("bound plug-in", bound_plug_in),
        ("conservation", conservation),
        ("delay dissipativity", dissipativity),
        ("decay dichotomy", decay_dichotomy),
        ("Ingham consistency", ingham_consistency),
        ("criterion rule", criterion_rule),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {:>2} PASS {name}: {detail} ({secs:.2} s)", i + 1),
            Err(detail) => {
                failures += 1;
                println!("acceptance {:>2} FAIL {name}: {detail} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
