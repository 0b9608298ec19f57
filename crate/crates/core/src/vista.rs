//! VISTA: proximal gradient descent with a learned penalty weight per
//! coefficient.
//!
//! The optimizer minimizes
//!
//! ```text
//! F(β, λ, θ) = f(β, λ, θ) + Σ_k [ρ(λ_k) − ln λ_k] + τ Σ_k λ_k |β_{p(k)}|
//! ```
//!
//! where `f` is a user supplied smooth objective, `ρ` the hyperprior's
//! negative log density and `p(k)` the coefficient carrying weight `k`. Each
//! iteration takes a preconditioned gradient step on everything smooth at a
//! Nesterov extrapolation point, then applies [`prox_vc_l1`] to the
//! `(β_{p(k)}, λ_k)` pairs. The global step is governed by a trust region over
//! the penalty-inclusive quadratic model.
//!
//! [`prox_vc_l1`]: crate::prox::prox_vc_l1

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::GlmProblem;
use crate::hyperprior::HyperPrior;
use crate::prox::{prox_vc_l1, ProxQuery};

/// Relative size of a predicted reduction that the trust region can still
/// assess in double precision.
const RESOLUTION: f64 = 1e-12;

/// Which acceleration machinery is switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    Full,
    NoPrecond,
    NoNesterov,
    /// Fixed step, no preconditioner, no momentum. The step only shrinks when
    /// a step would increase the cost.
    PlainGradient,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::Full,
        Ablation::NoPrecond,
        Ablation::NoNesterov,
        Ablation::PlainGradient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoPrecond => "no-precond",
            Ablation::NoNesterov => "no-nesterov",
            Ablation::PlainGradient => "plain-gradient",
        }
    }

    fn preconditioned(self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoNesterov)
    }

    fn nesterov(self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoPrecond)
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::domain(format!(
                    "unknown ablation '{s}', expected one of full, no-precond, no-nesterov, plain-gradient"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VistaConfig {
    pub tau: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub init_step: f64,
    pub tr_shrink: f64,
    pub tr_expand: f64,
    pub tr_low: f64,
    pub tr_high: f64,
    pub nesterov_reset_after: usize,
    pub ema_decay: f64,
    pub ema_eps: f64,
    pub ablation: Ablation,
    /// Upper bound on the per-coordinate prox step product `τ² s_x s_λ`.
    /// `None` lets the prox enter its discontinuous regime.
    pub max_step_product: Option<f64>,
    /// Permit hyperpriors whose penalized objective is unbounded below.
    pub allow_unbounded_prior: bool,
}

impl Default for VistaConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            max_iter: 5000,
            tol: 1e-8,
            init_step: 1.0,
            tr_shrink: 0.25,
            tr_expand: 2.0,
            tr_low: 0.25,
            tr_high: 0.75,
            nesterov_reset_after: 3,
            ema_decay: 0.999,
            ema_eps: 1e-8,
            ablation: Ablation::Full,
            max_step_product: Some(0.99),
            allow_unbounded_prior: false,
        }
    }
}

impl VistaConfig {
    pub fn with_tau(tau: f64) -> Self {
        Self { tau, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        pos("tau", self.tau)?;
        pos("tol", self.tol)?;
        pos("init_step", self.init_step)?;
        pos("ema_eps", self.ema_eps)?;
        if !(self.tr_shrink > 0.0 && self.tr_shrink < 1.0) {
            return Err(Error::domain(format!("tr_shrink must lie in (0, 1), got {}", self.tr_shrink)));
        }
        if !(self.tr_expand >= 1.0 && self.tr_expand.is_finite()) {
            return Err(Error::domain(format!("tr_expand must be >= 1, got {}", self.tr_expand)));
        }
        if !(self.tr_low <= self.tr_high) {
            return Err(Error::domain("tr_low must not exceed tr_high"));
        }
        if !(self.ema_decay > 0.0 && self.ema_decay < 1.0) {
            return Err(Error::domain(format!("ema_decay must lie in (0, 1), got {}", self.ema_decay)));
        }
        if let Some(c) = self.max_step_product {
            pos("max_step_product", c)?;
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter must be >= 1"));
        }
        Ok(())
    }
}

/// The smooth part of the objective.
///
/// Points are flat slices laid out as `[β (n_beta) | λ (penalized().len()) | θ (n_theta)]`.
/// The hyperprior terms `ρ(λ) − ln λ` are added by the optimizer and must not
/// be included here.
pub trait SmoothObjective {
    fn n_beta(&self) -> usize;

    /// Coefficient index carried by each penalty weight, in λ order.
    fn penalized(&self) -> &[usize];

    fn n_theta(&self) -> usize;

    fn initial_theta(&self) -> Vec<f64>;

    /// Smooth cost at `x`. When `grad` is given it receives the gradient in
    /// the same layout.
    fn eval(&self, x: &[f64], tau: f64, grad: Option<&mut [f64]>) -> Result<f64>;

    fn dim(&self) -> usize {
        self.n_beta() + self.penalized().len() + self.n_theta()
    }
}

/// Penalized maximum likelihood for a [`GlmProblem`]. `θ` holds the family's
/// auxiliary parameter when it has one.
pub struct MapObjective<'a> {
    problem: &'a GlmProblem,
    penalized: Vec<usize>,
}

impl<'a> MapObjective<'a> {
    pub fn new(problem: &'a GlmProblem) -> Self {
        Self {
            penalized: problem.penalized_indices(),
            problem,
        }
    }

    pub fn problem(&self) -> &GlmProblem {
        self.problem
    }
}

/// Starting value for the auxiliary parameter: `ln var(y)` for the Normal
/// family, zero otherwise.
pub fn default_aux(problem: &GlmProblem) -> f64 {
    match problem.family() {
        crate::glm::Family::Normal => {
            let y = problem.y();
            let n = y.len() as f64;
            let mean = y.mean();
            let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1.0);
            if var > 0.0 { var.ln() } else { 0.0 }
        }
        _ => 0.0,
    }
}

impl SmoothObjective for MapObjective<'_> {
    fn n_beta(&self) -> usize {
        self.problem.n_coef()
    }

    fn penalized(&self) -> &[usize] {
        &self.penalized
    }

    fn n_theta(&self) -> usize {
        usize::from(self.problem.family().has_aux())
    }

    fn initial_theta(&self) -> Vec<f64> {
        if self.problem.family().has_aux() {
            vec![default_aux(self.problem)]
        } else {
            Vec::new()
        }
    }

    fn eval(&self, x: &[f64], _tau: f64, grad: Option<&mut [f64]>) -> Result<f64> {
        let p = self.n_beta();
        let k = self.penalized.len();
        let beta = nalgebra::DVector::from_column_slice(&x[..p]);
        let aux = if self.n_theta() == 1 { x[p + k] } else { 0.0 };
        match grad {
            None => self.problem.nll(&beta, aux),
            Some(g) => {
                let (v, gb, ga) = self.problem.nll_grad(&beta, aux)?;
                g[..p].copy_from_slice(gb.as_slice());
                g[p..p + k].fill(0.0);
                if self.n_theta() == 1 {
                    g[p + k] = ga;
                }
                Ok(v)
            }
        }
    }
}

/// Gradient information cached at an extrapolation point, reused while steps
/// from that point keep being rejected.
#[derive(Debug, Clone)]
struct Cache {
    y: Vec<f64>,
    smooth: f64,
    grad: Vec<f64>,
}

/// Iterate and optimizer memory.
#[derive(Debug, Clone)]
pub struct VistaState {
    x: Vec<f64>,
    n_beta: usize,
    n_lambda: usize,
    pub step: f64,
    pub ema_sq_grad: Vec<f64>,
    /// Number of gradients folded into the EMA, for bias correction.
    pub ema_count: u64,
    pub nesterov_t: f64,
    pub nesterov_prev: Vec<f64>,
    pub consecutive_shrinks: usize,
    streak_step: f64,
    pub iter: usize,
    /// Full objective `F` at the current iterate.
    pub cost: f64,
    cache: Option<Cache>,
}

impl VistaState {
    pub fn new(beta: Vec<f64>, lambda: Vec<f64>, theta: Vec<f64>, step: f64) -> Result<Self> {
        if let Some(l) = lambda.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::domain(format!("penalty weights must be finite and >= 0, got {l}")));
        }
        if beta.iter().chain(theta.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("initial coefficients must be finite"));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::domain(format!("step must be finite and > 0, got {step}")));
        }
        let n_beta = beta.len();
        let n_lambda = lambda.len();
        let mut x = beta;
        x.extend(lambda);
        x.extend(theta);
        let d = x.len();
        Ok(Self {
            nesterov_prev: x.clone(),
            x,
            n_beta,
            n_lambda,
            step,
            ema_sq_grad: vec![0.0; d],
            ema_count: 0,
            nesterov_t: 1.0,
            consecutive_shrinks: 0,
            streak_step: step,
            iter: 0,
            cost: f64::NAN,
            cache: None,
        })
    }

    /// `β = 0`, `λ = 1`, `θ` from the objective.
    pub fn cold<O: SmoothObjective + ?Sized>(obj: &O, cfg: &VistaConfig) -> Result<Self> {
        Self::new(
            vec![0.0; obj.n_beta()],
            vec![1.0; obj.penalized().len()],
            obj.initial_theta(),
            cfg.init_step,
        )
    }

    /// Copy suitable for starting a new solve: keeps the iterate, step and
    /// preconditioner, drops momentum and cached evaluations.
    pub fn warm(&self) -> Self {
        let mut s = self.clone();
        s.reset_momentum();
        s.consecutive_shrinks = 0;
        s.streak_step = s.step;
        s.iter = 0;
        s.cost = f64::NAN;
        s.cache = None;
        s
    }

    pub fn beta(&self) -> &[f64] {
        &self.x[..self.n_beta]
    }

    pub fn lambda(&self) -> &[f64] {
        &self.x[self.n_beta..self.n_beta + self.n_lambda]
    }

    pub fn theta(&self) -> &[f64] {
        &self.x[self.n_beta + self.n_lambda..]
    }

    /// Flat iterate `[β | λ | θ]`.
    pub fn point(&self) -> &[f64] {
        &self.x
    }

    fn reset_momentum(&mut self) {
        self.nesterov_t = 1.0;
        self.nesterov_prev.copy_from_slice(&self.x);
    }

    fn momentum_active(&self) -> bool {
        self.nesterov_t > 1.0 && self.nesterov_prev != self.x
    }
}

/// What happened in one [`vista_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    /// Actual over predicted reduction.
    pub ratio: f64,
    /// Max-norm of the accepted move, zero on rejection.
    pub step_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub cost: f64,
    pub step: f64,
    pub nnz: usize,
}

#[derive(Debug, Clone)]
pub struct VistaFit {
    pub state: VistaState,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
}

fn prior_terms(prior: &HyperPrior, lambda: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let mut total = 0.0;
    match grad {
        Some(g) => {
            for (gk, &l) in g.iter_mut().zip(lambda) {
                total += prior.rho(l) - l.ln();
                *gk += prior.rho_prime(l) - 1.0 / l;
            }
        }
        None => {
            for &l in lambda {
                total += prior.rho(l) - l.ln();
            }
        }
    }
    total
}

fn penalty(x: &[f64], penalized: &[usize], n_beta: usize, tau: f64) -> f64 {
    penalized
        .iter()
        .enumerate()
        .map(|(k, &j)| x[n_beta + k] * x[j].abs())
        .sum::<f64>()
        * tau
}

/// Smooth part plus prior terms, `+∞` outside `λ > 0`.
fn smooth_total<O: SmoothObjective + ?Sized>(
    obj: &O,
    prior: &HyperPrior,
    x: &[f64],
    tau: f64,
    grad: Option<&mut [f64]>,
) -> Result<f64> {
    let p = obj.n_beta();
    let k = obj.penalized().len();
    if x[p..p + k].iter().any(|&l| l <= 0.0) {
        return Ok(f64::INFINITY);
    }
    match grad {
        Some(g) => {
            let f = obj.eval(x, tau, Some(g))?;
            Ok(f + prior_terms(prior, &x[p..p + k], Some(&mut g[p..p + k])))
        }
        None => Ok(obj.eval(x, tau, None)? + prior_terms(prior, &x[p..p + k], None)),
    }
}

/// Full objective `F` at a flat point.
pub fn total_cost<O: SmoothObjective + ?Sized>(obj: &O, prior: &HyperPrior, x: &[f64], tau: f64) -> Result<f64> {
    let s = smooth_total(obj, prior, x, tau, None)?;
    Ok(s + penalty(x, obj.penalized(), obj.n_beta(), tau))
}

fn check_layout<O: SmoothObjective + ?Sized>(obj: &O, state: &VistaState) -> Result<()> {
    if state.n_beta != obj.n_beta() || state.n_lambda != obj.penalized().len() || state.x.len() != obj.dim() {
        return Err(Error::domain(format!(
            "state layout ({} coefficients, {} weights, {} total) does not match objective ({}, {}, {})",
            state.n_beta,
            state.n_lambda,
            state.x.len(),
            obj.n_beta(),
            obj.penalized().len(),
            obj.dim()
        )));
    }
    Ok(())
}

fn non_finite(state: &VistaState, message: impl Into<String>) -> Error {
    Error::NonFinite {
        iter: state.iter,
        message: message.into(),
        iterate: state.x.clone(),
    }
}

/// One trial step. Updates `state` in place.
pub fn vista_step<O: SmoothObjective + ?Sized>(
    state: &mut VistaState,
    obj: &O,
    prior: &HyperPrior,
    cfg: &VistaConfig,
) -> Result<StepOutcome> {
    check_layout(obj, state)?;
    let tau = cfg.tau;
    let p = state.n_beta;
    let k = state.n_lambda;
    let d = state.x.len();
    let pen = obj.penalized();

    if !state.cost.is_finite() {
        state.cost = total_cost(obj, prior, &state.x, tau)?;
        if !state.cost.is_finite() {
            return Err(non_finite(state, "objective is not finite at the current iterate"));
        }
    }

    // Extrapolation point.
    let t_next = (1.0 + (1.0 + 4.0 * state.nesterov_t * state.nesterov_t).sqrt()) / 2.0;
    let momentum = cfg.ablation.nesterov() && state.momentum_active();
    let mut y = state.x.clone();
    if momentum {
        let w = (state.nesterov_t - 1.0) / t_next;
        for i in 0..d {
            y[i] += w * (state.x[i] - state.nesterov_prev[i]);
        }
    }

    let cache = match state.cache.take() {
        Some(c) if c.y == y => c,
        _ => {
            let mut g = vec![0.0; d];
            let mut f = if y[p..p + k].iter().all(|&l| l > 0.0) {
                smooth_total(obj, prior, &y, tau, Some(&mut g))?
            } else {
                f64::INFINITY
            };
            let finite = f.is_finite() && g.iter().all(|v| v.is_finite());
            if !finite && y != state.x {
                state.reset_momentum();
                y.copy_from_slice(&state.x);
                g.fill(0.0);
                f = smooth_total(obj, prior, &y, tau, Some(&mut g))?;
            }
            if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(non_finite(state, "smooth cost or gradient is not finite"));
            }
            if cfg.ablation.preconditioned() {
                let b = cfg.ema_decay;
                for (v, gi) in state.ema_sq_grad.iter_mut().zip(&g) {
                    *v = b * *v + (1.0 - b) * gi * gi;
                }
                state.ema_count += 1;
            }
            Cache { y, smooth: f, grad: g }
        }
    };
    let y = &cache.y;
    let g = &cache.grad;
    let momentum = momentum && *y != state.x;

    // Per-coordinate steps.
    let mut s = vec![state.step; d];
    if cfg.ablation.preconditioned() && state.ema_count > 0 {
        let corr = 1.0 - cfg.ema_decay.powf(state.ema_count as f64);
        for i in 0..d {
            s[i] /= (state.ema_sq_grad[i] / corr).sqrt() + cfg.ema_eps;
        }
    }
    if let Some(cap) = cfg.max_step_product {
        for (kk, &j) in pen.iter().enumerate() {
            let prod = tau * tau * s[j] * s[p + kk];
            if prod > cap {
                let f = (cap / prod).sqrt();
                s[j] *= f;
                s[p + kk] *= f;
            }
        }
    }

    // Gradient step, then the joint prox on penalized pairs.
    let mut xn: Vec<f64> = (0..d).map(|i| y[i] - s[i] * g[i]).collect();
    for (kk, &j) in pen.iter().enumerate() {
        let q = ProxQuery::new(xn[j], xn[p + kk].max(0.0), tau * s[j], tau * s[p + kk])?;
        let r = prox_vc_l1(&q);
        xn[j] = r.x_star;
        xn[p + kk] = r.lambda_star;
    }

    // Trust-region ratio on the penalty-inclusive model.
    let h_y = penalty(y, pen, p, tau);
    let h_n = penalty(&xn, pen, p, tau);
    let mut lin = 0.0;
    let mut quad = 0.0;
    for i in 0..d {
        let di = xn[i] - y[i];
        lin += g[i] * di;
        quad += di * di / (2.0 * s[i]);
    }
    let predicted = h_y - (lin + quad + h_n);
    let f_new = total_cost(obj, prior, &xn, tau)?;
    if f_new.is_nan() {
        return Err(non_finite(state, "objective is NaN at the trial point"));
    }
    let f_y = cache.smooth + h_y;
    let actual = f_y - f_new;
    let ratio = if predicted > 0.0 {
        actual / predicted
    } else if actual >= 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    let accepted = f_new.is_finite() && f_new <= state.cost;
    // Below this predicted reduction the ratio is rounding noise.
    let resolved = predicted > RESOLUTION * state.cost.abs().max(1.0);

    // Step-size control.
    if !resolved {
        state.consecutive_shrinks = 0;
    } else if cfg.ablation == Ablation::PlainGradient {
        if !accepted {
            state.step *= cfg.tr_shrink;
        }
    } else if !accepted || ratio < cfg.tr_low {
        if state.consecutive_shrinks == 0 {
            state.streak_step = state.step;
        }
        state.step *= cfg.tr_shrink;
        state.consecutive_shrinks += 1;
    } else {
        state.consecutive_shrinks = 0;
        if ratio > cfg.tr_high {
            state.step *= cfg.tr_expand;
        }
    }

    let mut outcome = StepOutcome {
        accepted,
        ratio,
        step_norm: 0.0,
        converged: false,
    };
    if accepted {
        let step_norm = xn
            .iter()
            .zip(&state.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let rel = (state.cost - f_new).abs() / state.cost.abs().max(1.0);
        outcome.step_norm = step_norm;
        outcome.converged = rel < cfg.tol && step_norm < cfg.tol;
        state.nesterov_prev = std::mem::replace(&mut state.x, xn);
        state.nesterov_t = if cfg.ablation.nesterov() { t_next } else { 1.0 };
        state.cost = f_new;
    } else {
        if !resolved {
            // Nothing left to gain at machine precision, except possibly by
            // dropping the momentum.
            outcome.converged = !momentum;
            if momentum {
                state.reset_momentum();
            }
        }
        state.cache = Some(cache);
    }

    if state.consecutive_shrinks >= cfg.nesterov_reset_after {
        if momentum {
            state.reset_momentum();
            state.step = state.streak_step;
        }
        state.consecutive_shrinks = 0;
    }
    state.iter += 1;
    Ok(outcome)
}

/// Iterates [`vista_step`] from `init` (or a cold start) until convergence or
/// `max_iter` trial steps.
pub fn vista_run<O: SmoothObjective + ?Sized>(
    obj: &O,
    prior: &HyperPrior,
    cfg: &VistaConfig,
    init: Option<VistaState>,
) -> Result<VistaFit> {
    cfg.validate()?;
    if !prior.is_bounded() && !cfg.allow_unbounded_prior {
        return Err(Error::UnboundedObjective(format!(
            "hyperprior {prior} leaves the penalized objective unbounded below"
        )));
    }
    let mut state = match init {
        Some(s) => s.warm(),
        None => VistaState::cold(obj, cfg)?,
    };
    check_layout(obj, &state)?;
    let pen = obj.penalized().to_vec();
    let nnz = |s: &VistaState| pen.iter().filter(|&&j| s.x[j] != 0.0).count();

    let mut trace = Vec::new();
    let mut converged = false;
    let start = state.iter;
    while state.iter - start < cfg.max_iter {
        let out = vista_step(&mut state, obj, prior, cfg)?;
        trace.push(TraceRow {
            iter: state.iter,
            cost: state.cost,
            step: state.step,
            nnz: nnz(&state),
        });
        if out.converged {
            converged = true;
            break;
        }
    }
    Ok(VistaFit {
        iterations: state.iter - start,
        state,
        converged,
        trace,
    })
}
