//! Closed loop with instantaneous and delayed point damping,
//!
//! ```text
//! Ẅ + A W + α₁ B0 B0* Ẇ(t) + α₂ B0 B0* Ẇ(t − τ) = 0,
//! ```
//!
//! integrated in the transformed coordinates `W = (u, v)` by a Crank–Nicolson
//! step. The delayed output is read from a ring of midpoint outputs
//! `ȳ_k = B0*(Ẇ^{k+1} + Ẇ^k)/2`, so `τ` must be a whole number of steps.
//!
//! The delay energy is
//!
//! ```text
//! E_d = ½‖A1^{½} w1‖² + ½‖A2^{½} w2‖² + ½‖ẇ‖² + (μ / 2τ) ∫_{t−τ}^{t} ‖B*ẇ1(s)‖² ds
//! ```
//!
//! with the integral taken as `dt Σ |ȳ|²` over the ring. For
//! `τα₂ ≤ μ ≤ τ(2α₁ − α₂)` the scheme dissipates this quantity exactly.

use std::collections::VecDeque;
use std::io::{self, Write};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::galerkin::{build_block_system, BlockSystem, GalerkinError, OperatorQuadruple};

/// Growth factor over the initial energy that aborts a run.
pub const BLOW_UP_FACTOR: f64 = 1e6;

const WEIGHT_SLACK: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum DelayError {
    #[error("invalid delay parameters: {0}")]
    InvalidParams(String),
    #[error("tau = {tau} is not a positive integer multiple of dt = {dt}")]
    StepMismatch { tau: f64, dt: f64 },
    #[error("energy blew up at t = {t}: {energy:.6e} against initial {initial:.6e}")]
    BlowUp { t: f64, energy: f64, initial: f64 },
    #[error("fit window holds {samples} usable samples, at least 10 are needed")]
    DegenerateWindow { samples: usize },
    #[error("{what} has length {found}, expected {expected}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error(transparent)]
    Galerkin(#[from] GalerkinError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub tau: f64,
    /// Weight of the history term in the delay energy.
    pub mu: f64,
}

/// `[τα₂, τ(2α₁ − α₂)]`.
pub fn delay_weight_bounds(alpha1: f64, alpha2: f64, tau: f64) -> Result<(f64, f64), DelayError> {
    if !(alpha1.is_finite() && alpha2.is_finite() && tau.is_finite()) {
        return Err(DelayError::InvalidParams("parameters must be finite".into()));
    }
    if !(alpha2 >= 0.0 && alpha2 <= alpha1) {
        return Err(DelayError::InvalidParams(format!("need 0 <= alpha2 <= alpha1, got alpha1 = {alpha1}, alpha2 = {alpha2}")));
    }
    if !(tau > 0.0) {
        return Err(DelayError::InvalidParams(format!("tau = {tau} must be positive")));
    }
    Ok((tau * alpha2, tau * (2.0 * alpha1 - alpha2)))
}

impl DelayParams {
    pub fn new(alpha1: f64, alpha2: f64, tau: f64, mu: f64) -> Result<Self, DelayError> {
        let p = Self { alpha1, alpha2, tau, mu };
        p.validate()?;
        Ok(p)
    }

    /// Weight at the centre of the admissible interval, `τα₁`.
    pub fn with_midpoint_weight(alpha1: f64, alpha2: f64, tau: f64) -> Result<Self, DelayError> {
        let (lo, hi) = delay_weight_bounds(alpha1, alpha2, tau)?;
        Self::new(alpha1, alpha2, tau, 0.5 * (lo + hi))
    }

    pub fn validate(&self) -> Result<(), DelayError> {
        let (lo, hi) = delay_weight_bounds(self.alpha1, self.alpha2, self.tau)?;
        let slack = WEIGHT_SLACK * (1.0 + hi.abs());
        if !(self.mu >= lo - slack && self.mu <= hi + slack) {
            return Err(DelayError::InvalidParams(format!("mu = {} outside [{lo}, {hi}]", self.mu)));
        }
        Ok(())
    }

    /// Number of steps spanned by the delay.
    pub fn delay_steps(&self, dt: f64) -> Result<usize, DelayError> {
        let mismatch = DelayError::StepMismatch { tau: self.tau, dt };
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(mismatch);
        }
        let ratio = self.tau / dt;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(mismatch);
        }
        Ok(steps as usize)
    }
}

/// Position and velocity in the original coordinates `(w1, w2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub position: DVector<f64>,
    pub velocity: DVector<f64>,
}

impl InitialData {
    pub fn zeros(n: usize) -> Self {
        Self { position: DVector::zeros(n), velocity: DVector::zeros(n) }
    }
}

/// History sampler `f₀(s)` for `s ∈ [−τ, 0)`, returning the output `B*ẇ1(s)`.
pub type HistorySampler<'a> = &'a dyn Fn(f64) -> DVector<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct DelayState {
    pub w: DVector<f64>,
    pub wdot: DVector<f64>,
    /// Midpoint outputs of the last `L` steps, oldest first.
    pub history: VecDeque<DVector<f64>>,
    pub t: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub ed: Vec<f64>,
    pub etilde: Vec<f64>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, ed: f64, etilde: f64) {
        self.times.push(t);
        self.ed.push(ed);
        self.etilde.push(etilde);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,Ed,Etilde")?;
        for i in 0..self.len() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", self.times[i], self.ed[i], self.etilde[i])?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    /// Largest `E_d(t_{k+1}) / E_d(t_k) − 1` over the trace.
    pub fn max_relative_increase(&self) -> f64 {
        self.ed
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] - 1.0 } else if w[1] > 0.0 { f64::INFINITY } else { 0.0 })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn history_energy(params: &DelayParams, dt: f64, history: &VecDeque<DVector<f64>>) -> f64 {
    if params.mu == 0.0 {
        return 0.0;
    }
    let integral: f64 = history.iter().map(|y| y.norm_squared()).sum::<f64>() * dt;
    params.mu / (2.0 * params.tau) * integral
}

/// `E_d` evaluated in the original coordinates.
pub fn delay_energy(q: &OperatorQuadruple, params: &DelayParams, state: &DelayState) -> f64 {
    let n1 = q.dims().n1;
    let w1 = state.w.rows(0, n1);
    let w2 = state.w.rows(n1, state.w.len() - n1);
    let potential = w1.dot(&(&q.a1 * w1)) + w2.dot(&(&q.a2 * w2));
    0.5 * (potential + state.wdot.norm_squared()) + history_energy(params, state.dt, &state.history)
}

/// `(w, ẇ) ↦ (W, Ẇ)`: `u = w1`, `v = A2^{-½}(ẇ2 − C*w1)`, `v̇ = −A2^{½} w2`.
pub fn to_transformed(
    q: &OperatorQuadruple,
    sys: &BlockSystem,
    w: &DVector<f64>,
    wdot: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let (n1, n2) = (sys.n1, sys.n2);
    let w1 = w.rows(0, n1);
    let mut big_w = DVector::zeros(n1 + n2);
    let mut big_v = DVector::zeros(n1 + n2);
    big_w.rows_mut(0, n1).copy_from(&w1);
    big_w.rows_mut(n1, n2).copy_from(&(&sys.inv_sqrt_a2 * (wdot.rows(n1, n2) - q.c.transpose() * w1)));
    big_v.rows_mut(0, n1).copy_from(&wdot.rows(0, n1));
    big_v.rows_mut(n1, n2).copy_from(&(-(&sys.sqrt_a2 * w.rows(n1, n2))));
    (big_w, big_v)
}

/// Inverse of [`to_transformed`]: `w2 = −A2^{-½} v̇`, `ẇ2 = C*u + A2^{½} v`.
pub fn from_transformed(
    q: &OperatorQuadruple,
    sys: &BlockSystem,
    big_w: &DVector<f64>,
    big_v: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let (n1, n2) = (sys.n1, sys.n2);
    let u = big_w.rows(0, n1);
    let mut w = DVector::zeros(n1 + n2);
    let mut wdot = DVector::zeros(n1 + n2);
    w.rows_mut(0, n1).copy_from(&u);
    w.rows_mut(n1, n2).copy_from(&(-(&sys.inv_sqrt_a2 * big_v.rows(n1, n2))));
    wdot.rows_mut(0, n1).copy_from(&big_v.rows(0, n1));
    wdot.rows_mut(n1, n2).copy_from(&(q.c.transpose() * u + &sys.sqrt_a2 * big_w.rows(n1, n2)));
    (w, wdot)
}

pub struct DelaySimulator<'q> {
    quad: &'q OperatorQuadruple,
    sys: BlockSystem,
    params: DelayParams,
    dt: f64,
    lhs: Cholesky<f64, Dyn>,
    rhs_velocity: DMatrix<f64>,
    h_a: DMatrix<f64>,
    h_alpha2_b: DMatrix<f64>,
    big_w: DVector<f64>,
    big_v: DVector<f64>,
    history: VecDeque<DVector<f64>>,
    steps: usize,
    initial_energy: f64,
}

impl<'q> DelaySimulator<'q> {
    pub fn new(
        quad: &'q OperatorQuadruple,
        params: DelayParams,
        init: &InitialData,
        history: HistorySampler<'_>,
        dt: f64,
    ) -> Result<Self, DelayError> {
        params.validate()?;
        Self::build(quad, params, init, history, dt)
    }

    fn build(
        quad: &'q OperatorQuadruple,
        params: DelayParams,
        init: &InitialData,
        history: HistorySampler<'_>,
        dt: f64,
    ) -> Result<Self, DelayError> {
        let lags = params.delay_steps(dt)?;
        let d = quad.dims();
        for (what, v) in [("initial position", &init.position), ("initial velocity", &init.velocity)] {
            if v.len() != d.state() {
                return Err(DelayError::DimensionMismatch { what, expected: d.state(), found: v.len() });
            }
        }
        let sys = build_block_system(quad)?;
        let n = d.state();
        let b = &sys.b0;
        let bbt = b * b.transpose();
        let quarter = 0.25 * dt * dt;
        let damping = &bbt * (0.5 * dt * params.alpha1);
        let identity = DMatrix::<f64>::identity(n, n);
        let lhs_matrix = &identity + &sys.a * quarter + &damping;
        let lhs = Cholesky::new(lhs_matrix)
            .ok_or_else(|| DelayError::InvalidParams("step matrix is not positive definite".into()))?;
        let rhs_velocity = &identity - &sys.a * quarter - &damping;
        let h_a = &sys.a * dt;
        let h_alpha2_b = b * (dt * params.alpha2);

        let mut ring = VecDeque::with_capacity(lags);
        for j in 0..lags {
            let s = -params.tau + (j as f64 + 0.5) * dt;
            let y = history(s);
            if y.len() != d.m {
                return Err(DelayError::DimensionMismatch { what: "history sample", expected: d.m, found: y.len() });
            }
            ring.push_back(y);
        }

        let (big_w, big_v) = to_transformed(quad, &sys, &init.position, &init.velocity);
        let mut sim = Self {
            quad,
            sys,
            params,
            dt,
            lhs,
            rhs_velocity,
            h_a,
            h_alpha2_b,
            big_w,
            big_v,
            history: ring,
            steps: 0,
            initial_energy: 0.0,
        };
        sim.initial_energy = sim.etilde();
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn block_system(&self) -> &BlockSystem {
        &self.sys
    }

    /// Advances one step and returns the midpoint output pushed onto the ring.
    pub fn step(&mut self) -> Result<DVector<f64>, DelayError> {
        let delayed = self.history.pop_front().expect("ring holds at least one slot");
        let rhs = &self.rhs_velocity * &self.big_v - &self.h_a * &self.big_w - &self.h_alpha2_b * delayed;
        let v_next = self.lhs.solve(&rhs);
        let v_mid = (&v_next + &self.big_v) * 0.5;
        self.big_w += &v_mid * self.dt;
        self.big_v = v_next;
        let y = self.sys.b0.transpose() * v_mid;
        self.history.push_back(y.clone());
        self.steps += 1;

        let e = self.etilde();
        if !e.is_finite() || e > BLOW_UP_FACTOR * self.initial_energy.max(f64::MIN_POSITIVE) {
            return Err(DelayError::BlowUp { t: self.time(), energy: e, initial: self.initial_energy });
        }
        Ok(y)
    }

    /// Output `B*ẇ1` at the current grid time.
    pub fn output(&self) -> DVector<f64> {
        self.sys.b0.transpose() * &self.big_v
    }

    /// Energy evaluated through the block stiffness.
    pub fn etilde(&self) -> f64 {
        0.5 * (self.big_w.dot(&(&self.sys.a * &self.big_w)) + self.big_v.norm_squared())
            + history_energy(&self.params, self.dt, &self.history)
    }

    pub fn state(&self) -> DelayState {
        let (w, wdot) = from_transformed(self.quad, &self.sys, &self.big_w, &self.big_v);
        DelayState { w, wdot, history: self.history.clone(), t: self.time(), dt: self.dt }
    }

    pub fn energy(&self) -> f64 {
        delay_energy(self.quad, &self.params, &self.state())
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub trace: EnergyTrace,
    pub final_state: DelayState,
}

/// Runs to `t_final` (rounded down to a whole step), sampling both energies every step.
pub fn simulate(
    quad: &OperatorQuadruple,
    params: DelayParams,
    init: &InitialData,
    history: HistorySampler<'_>,
    dt: f64,
    t_final: f64,
) -> Result<SimulationOutput, DelayError> {
    let mut sim = DelaySimulator::new(quad, params, init, history, dt)?;
    let steps = (t_final / dt + 1e-9).floor().max(0.0) as usize;
    let mut trace = EnergyTrace::default();
    trace.push(0.0, sim.energy(), sim.etilde());
    for _ in 0..steps {
        sim.step()?;
        trace.push(sim.time(), sim.energy(), sim.etilde());
    }
    Ok(SimulationOutput { trace, final_state: sim.state() })
}

/// Sampler for `f₀ ≡ 0` with `m` outputs.
pub fn zero_history(m: usize) -> impl Fn(f64) -> DVector<f64> {
    move |_| DVector::zeros(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub omega: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Least-squares line through `(t, log E_d)` over `window`, stopping at the
/// first non-positive energy.
pub fn fit_decay_rate(trace: &EnergyTrace, window: (f64, f64)) -> Result<DecayFit, DelayError> {
    let mut ts = Vec::new();
    let mut ls = Vec::new();
    for (&t, &e) in trace.times.iter().zip(&trace.ed) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(e > 0.0) {
            break;
        }
        ts.push(t);
        ls.push(e.ln());
    }
    let n = ts.len();
    if n < 10 {
        return Err(DelayError::DegenerateWindow { samples: n });
    }
    let nf = n as f64;
    let t_mean = ts.iter().sum::<f64>() / nf;
    let l_mean = ls.iter().sum::<f64>() / nf;
    let sxx: f64 = ts.iter().map(|t| (t - t_mean).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(&ls).map(|(t, l)| (t - t_mean) * (l - l_mean)).sum();
    let slope = sxy / sxx;
    let intercept = l_mean - slope * t_mean;
    let residual = (ts.iter().zip(&ls).map(|(t, l)| (l - intercept - slope * t).powi(2)).sum::<f64>() / nf).sqrt();
    let e0 = trace.ed.first().copied().unwrap_or(f64::NAN);
    Ok(DecayFit { omega: -slope, c: intercept.exp() / e0, residual, window, samples: n })
}
