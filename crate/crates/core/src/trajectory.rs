//! Warm-started τ trajectories, the plain lasso baseline and the replicate
//! simulation harness.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{Family, GlmProblem, WorkingExample};
use crate::hyperprior::HyperPrior;
use crate::prox::shrink;
use crate::sbl::{fit_sbl, SaaDraw, VariationalState};
use crate::vista::{vista_run, MapObjective, VistaConfig, VistaState};

/// Default Monte Carlo sample size for SBL fits.
pub const DEFAULT_MC_SAMPLES: usize = 40;

/// Default credible level for reported intervals.
pub const CREDIBLE_LEVEL: f64 = 0.95;

/// Logarithmically spaced τ values, traversed from `tau_max` down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauGrid {
    pub tau_max: f64,
    pub tau_min: f64,
    pub n_points: usize,
}

impl TauGrid {
    pub fn new(tau_max: f64, tau_min: f64, n_points: usize) -> Result<Self> {
        if !(tau_min > 0.0 && tau_min.is_finite() && tau_max.is_finite() && tau_min < tau_max) {
            return Err(Error::domain(format!(
                "tau grid needs 0 < tau_min < tau_max, got tau_max={tau_max}, tau_min={tau_min}"
            )));
        }
        if n_points < 2 {
            return Err(Error::domain(format!("tau grid needs at least 2 points, got {n_points}")));
        }
        Ok(Self {
            tau_max,
            tau_min,
            n_points,
        })
    }

    /// Grid values, largest first.
    pub fn points(&self) -> Vec<f64> {
        let (a, b) = (self.tau_max.ln(), self.tau_min.ln());
        let last = (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| match i {
                0 => self.tau_max,
                i if i == self.n_points - 1 => self.tau_min,
                _ => (a + (b - a) * i as f64 / last).exp(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Map,
    Sbl,
    LassoBaseline,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Map => "map",
            Mode::Sbl => "sbl",
            Mode::LassoBaseline => "lasso-baseline",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "map" => Ok(Mode::Map),
            "sbl" => Ok(Mode::Sbl),
            "lasso-baseline" | "lasso" => Ok(Mode::LassoBaseline),
            _ => Err(Error::domain(format!("unknown mode '{s}', expected map, sbl or lasso-baseline"))),
        }
    }
}

/// One row of a fitted model: a coefficient or an auxiliary parameter.
///
/// Auxiliary parameters are reported on their log scale as `log_<name>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub name: String,
    /// Point estimate, or variational location.
    pub estimate: f64,
    /// Variational scale (SBL only).
    pub nu: Option<f64>,
    pub lambda: Option<f64>,
    pub ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub tau: f64,
    pub mode: Mode,
    pub params: Vec<ParamEstimate>,
    pub sparsity_fraction: f64,
    pub iterations: usize,
    pub cost: f64,
    pub converged: bool,
}

impl TrajectoryRecord {
    /// Coefficient estimates, in design column order.
    pub fn coefficients(&self, n_coef: usize) -> Vec<f64> {
        self.params[..n_coef].iter().map(|p| p.estimate).collect()
    }
}

fn sparsity(beta: &[f64], penalized: &[usize]) -> f64 {
    if penalized.is_empty() {
        return 0.0;
    }
    penalized.iter().filter(|&&j| beta[j] == 0.0).count() as f64 / penalized.len() as f64
}

/// Record for a MAP solution.
pub fn map_record(problem: &GlmProblem, state: &VistaState, tau: f64, iterations: usize, converged: bool) -> TrajectoryRecord {
    let pen = problem.penalized_indices();
    let beta = state.beta();
    let mut params: Vec<ParamEstimate> = (0..problem.n_coef())
        .map(|j| ParamEstimate {
            name: problem.names()[j].clone(),
            estimate: beta[j],
            nu: None,
            lambda: pen.iter().position(|&i| i == j).map(|k| state.lambda()[k]),
            ci: None,
        })
        .collect();
    if let Some(name) = problem.family().aux_name() {
        params.push(ParamEstimate {
            name: format!("log_{name}"),
            estimate: state.theta()[0],
            nu: None,
            lambda: None,
            ci: None,
        });
    }
    TrajectoryRecord {
        tau,
        mode: Mode::Map,
        params,
        sparsity_fraction: sparsity(beta, &pen),
        iterations,
        cost: state.cost,
        converged,
    }
}

/// Record for an SBL solution with intervals at `level`.
pub fn sbl_record(vs: &VariationalState, level: f64, iterations: usize, cost: f64, converged: bool) -> Result<TrajectoryRecord> {
    let mut params = Vec::with_capacity(vs.eta_beta.len() + 1);
    for j in 0..vs.eta_beta.len() {
        params.push(ParamEstimate {
            name: vs.names[j].clone(),
            estimate: vs.eta_beta[j],
            nu: Some(vs.nu_beta[j]),
            lambda: vs.lambda_of(j),
            ci: Some(vs.credible_interval(j, level)?),
        });
    }
    if let Some(a) = &vs.aux {
        let (lo, hi) = a.interval(level)?;
        params.push(ParamEstimate {
            name: format!("log_{}", a.name),
            estimate: a.eta,
            nu: Some(a.nu),
            lambda: None,
            ci: Some((lo.ln(), hi.ln())),
        });
    }
    Ok(TrajectoryRecord {
        tau: vs.tau,
        mode: Mode::Sbl,
        params,
        sparsity_fraction: vs.sparsity_fraction(),
        iterations,
        cost,
        converged,
    })
}

/// Solves along `grid`, cold at `tau_max` and warm-started afterwards. The
/// SBL draw is generated once from `seed` and shared by every grid point.
/// `cfg.tau` is ignored.
pub fn run_trajectory(
    problem: &GlmProblem,
    prior: &HyperPrior,
    grid: &TauGrid,
    mode: Mode,
    cfg: &VistaConfig,
    seed: u64,
    mc_samples: usize,
) -> Result<Vec<TrajectoryRecord>> {
    run_trajectory_from(problem, prior, &grid.points(), mode, cfg, seed, mc_samples, true)
}

/// As [`run_trajectory`] over explicit τ values, optionally solving every
/// point from a cold start.
#[allow(clippy::too_many_arguments)]
pub fn run_trajectory_from(
    problem: &GlmProblem,
    prior: &HyperPrior,
    taus: &[f64],
    mode: Mode,
    cfg: &VistaConfig,
    seed: u64,
    mc_samples: usize,
    warm: bool,
) -> Result<Vec<TrajectoryRecord>> {
    match mode {
        Mode::LassoBaseline => lasso_path(problem, taus, &LassoConfig::from_vista(cfg), warm),
        Mode::Map => {
            let obj = MapObjective::new(problem);
            let mut prev: Option<VistaState> = None;
            let mut out = Vec::with_capacity(taus.len());
            for &tau in taus {
                let c = VistaConfig { tau, ..cfg.clone() };
                let fit = vista_run(&obj, prior, &c, if warm { prev.take() } else { None })?;
                out.push(map_record(problem, &fit.state, tau, fit.iterations, fit.converged));
                prev = Some(fit.state);
            }
            Ok(out)
        }
        Mode::Sbl => {
            let draw = SaaDraw::for_problem(problem, mc_samples, seed)?;
            let mut prev: Option<VistaState> = None;
            let mut out = Vec::with_capacity(taus.len());
            for &tau in taus {
                let c = VistaConfig { tau, ..cfg.clone() };
                let fit = fit_sbl(problem, prior, &c, &draw, if warm { prev.take() } else { None })?;
                out.push(sbl_record(&fit.state, CREDIBLE_LEVEL, fit.iterations, fit.cost, fit.converged)?);
                prev = Some(fit.vista);
            }
            Ok(out)
        }
    }
}

/// Settings for the lasso baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            max_iter: 20000,
            tol: 1e-10,
        }
    }
}

impl LassoConfig {
    fn from_vista(cfg: &VistaConfig) -> Self {
        Self {
            max_iter: cfg.max_iter.max(LassoConfig::default().max_iter),
            tol: cfg.tol.min(LassoConfig::default().tol),
        }
    }
}

/// Smallest τ at which the lasso solution is entirely zero:
/// `max_j |X_jᵀ y| / n` over penalized columns.
pub fn lasso_critical_tau(problem: &GlmProblem) -> f64 {
    let xty = problem.x().tr_mul(problem.y());
    let n = problem.n_obs() as f64;
    problem
        .penalized_indices()
        .iter()
        .map(|&j| xty[j].abs() / n)
        .fold(0.0, f64::max)
}

/// Plain lasso path `min (1/2n)‖y − Xβ‖² + τ Σ_{penalized} |β_j|` by FISTA,
/// warm-started along `grid`. Normal family only.
pub fn lasso_baseline(problem: &GlmProblem, grid: &TauGrid) -> Result<Vec<TrajectoryRecord>> {
    lasso_path(problem, &grid.points(), &LassoConfig::default(), true)
}

/// Lasso solutions at explicit τ values (τ = 0 gives least squares).
pub fn lasso_path(problem: &GlmProblem, taus: &[f64], cfg: &LassoConfig, warm: bool) -> Result<Vec<TrajectoryRecord>> {
    if problem.family() != Family::Normal {
        return Err(Error::domain(format!(
            "the lasso baseline needs the normal family, got {}",
            problem.family()
        )));
    }
    if let Some(t) = taus.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::domain(format!("lasso tau must be finite and >= 0, got {t}")));
    }
    let x = problem.x();
    let y = problem.y();
    let n = problem.n_obs() as f64;
    let p = problem.n_coef();
    let pen = problem.penalized();
    let lip = gram_norm(problem) / n;
    let step = 1.0 / lip;
    let mut beta = DVector::zeros(p);
    let mut out = Vec::with_capacity(taus.len());
    for &tau in taus {
        if !warm {
            beta.fill(0.0);
        }
        let mut z = beta.clone();
        let mut t = 1.0f64;
        let mut iters = 0;
        let mut converged = false;
        while iters < cfg.max_iter {
            iters += 1;
            let grad = x.tr_mul(&(x * &z - y)) / n;
            let mut next = &z - step * grad;
            for j in 0..p {
                if pen[j] {
                    next[j] = shrink(next[j], step * tau);
                }
            }
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let delta = (&next - &beta).amax();
            z = &next + ((t - 1.0) / t_next) * (&next - &beta);
            beta = next;
            t = t_next;
            if delta < cfg.tol {
                converged = true;
                break;
            }
        }
        let resid = y - x * &beta;
        let l1: f64 = (0..p).filter(|&j| pen[j]).map(|j| beta[j].abs()).sum();
        let cost = resid.norm_squared() / (2.0 * n) + tau * l1;
        let pidx = problem.penalized_indices();
        out.push(TrajectoryRecord {
            tau,
            mode: Mode::LassoBaseline,
            params: (0..p)
                .map(|j| ParamEstimate {
                    name: problem.names()[j].clone(),
                    estimate: beta[j],
                    nu: None,
                    lambda: if pen[j] { Some(1.0) } else { None },
                    ci: None,
                })
                .collect(),
            sparsity_fraction: sparsity(beta.as_slice(), &pidx),
            iterations: iters,
            cost,
            converged,
        });
    }
    Ok(out)
}

/// Largest eigenvalue of `XᵀX` by power iteration.
fn gram_norm(problem: &GlmProblem) -> f64 {
    let x = problem.x();
    let p = problem.n_coef();
    let mut v = DVector::from_element(p, 1.0 / (p as f64).sqrt());
    let mut ev = 0.0;
    for _ in 0..500 {
        let w = x.tr_mul(&(x * &v));
        let norm = w.norm();
        if norm == 0.0 {
            return 1.0;
        }
        let next = norm;
        v = w / norm;
        if (next - ev).abs() <= 1e-12 * next {
            ev = next;
            break;
        }
        ev = next;
    }
    // small safety margin against an unconverged estimate
    ev * 1.01
}

/// Replicate-level accuracy and coverage, aggregated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub family: Family,
    pub mode: Mode,
    pub tau: f64,
    pub n_reps: usize,
    /// Fraction of truly nonzero coefficients estimated as exactly zero.
    pub fnr: f64,
    /// Fraction of truly zero coefficients estimated as nonzero.
    pub fpr: f64,
    /// Coverage of 95% intervals over truly nonzero coefficients (SBL).
    pub beta_coverage: Option<f64>,
    /// Coverage of 95% intervals over all coefficients (SBL).
    pub beta_coverage_all: Option<f64>,
    /// Coverage of the auxiliary parameter's interval (SBL, families with one).
    pub sigma2_coverage: Option<f64>,
    pub failures: usize,
    pub converged: usize,
    pub mean_iterations: f64,
    /// Omitted unless timing is requested, so outputs stay reproducible.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_seconds: Option<f64>,
}

/// Settings for [`simulate_table`].
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub example: WorkingExample,
    pub mode: Mode,
    pub prior: HyperPrior,
    pub vista: VistaConfig,
    pub mc_samples: usize,
    /// Worker threads; `None` uses all logical cores.
    pub threads: Option<usize>,
    pub record_time: bool,
}

impl SimConfig {
    pub fn new(family: Family, mode: Mode) -> Self {
        Self {
            example: WorkingExample::with_family(family),
            mode,
            prior: HyperPrior::default(),
            vista: VistaConfig::default(),
            mc_samples: DEFAULT_MC_SAMPLES,
            threads: None,
            record_time: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct RepCounts {
    fn_: usize,
    nonzero: usize,
    fp: usize,
    zero: usize,
    cov: usize,
    cov_all: usize,
    aux_cov: usize,
    aux_seen: usize,
    converged: bool,
    iterations: usize,
}

/// True value of the family's auxiliary parameter on its natural scale.
fn aux_truth(example: &WorkingExample) -> Option<f64> {
    let s = example.noise_sd;
    match example.family {
        Family::Normal => Some(s * s),
        Family::NegBinomial => Some(1.0 / (s * s)),
        Family::Cauchy => Some(s),
        Family::Bernoulli | Family::Poisson => None,
    }
}

fn replicate(cfg: &SimConfig, tau: f64, data_seed: u64, draw_seed: u64) -> Result<RepCounts> {
    let (problem, truth) = cfg.example.generate(data_seed)?;
    let vcfg = VistaConfig { tau, ..cfg.vista.clone() };
    let (beta, intervals, aux_ok, converged, iterations) = match cfg.mode {
        Mode::Map => {
            let fit = vista_run(&MapObjective::new(&problem), &cfg.prior, &vcfg, None)?;
            (fit.state.beta().to_vec(), None, None, fit.converged, fit.iterations)
        }
        Mode::Sbl => {
            let draw = SaaDraw::for_problem(&problem, cfg.mc_samples, draw_seed)?;
            let fit = fit_sbl(&problem, &cfg.prior, &vcfg, &draw, None)?;
            let ci: Vec<(f64, f64)> = (0..problem.n_coef())
                .map(|j| fit.state.credible_interval(j, CREDIBLE_LEVEL))
                .collect::<Result<_>>()?;
            let aux_ok = match (&fit.state.aux, aux_truth(&cfg.example)) {
                (Some(a), Some(t)) => {
                    let (lo, hi) = a.interval(CREDIBLE_LEVEL)?;
                    Some(lo <= t && t <= hi)
                }
                _ => None,
            };
            (fit.state.eta_beta, Some(ci), aux_ok, fit.converged, fit.iterations)
        }
        Mode::LassoBaseline => {
            let rec = lasso_path(&problem, &[tau], &LassoConfig::default(), false)?;
            let r = &rec[0];
            (r.coefficients(problem.n_coef()), None, None, r.converged, r.iterations)
        }
    };
    let mut c = RepCounts {
        converged,
        iterations,
        ..RepCounts::default()
    };
    for j in problem.penalized_indices() {
        let t = truth[j];
        if t != 0.0 {
            c.nonzero += 1;
            c.fn_ += usize::from(beta[j] == 0.0);
        } else {
            c.zero += 1;
            c.fp += usize::from(beta[j] != 0.0);
        }
        if let Some(ci) = &intervals {
            let inside = ci[j].0 <= t && t <= ci[j].1;
            c.cov_all += usize::from(inside);
            if t != 0.0 {
                c.cov += usize::from(inside);
            }
        }
    }
    if let Some(ok) = aux_ok {
        c.aux_seen = 1;
        c.aux_cov = usize::from(ok);
    }
    Ok(c)
}

/// Replicate seeds `(data, draw)` derived from the master seed.
pub fn replicate_seeds(seed: u64, n_reps: usize) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_reps).map(|_| (rng.next_u64(), rng.next_u64())).collect()
}

/// Fits `n_reps` simulated working-example datasets at a fixed τ and
/// aggregates FNR, FPR and coverage. Replicates run in parallel; results are
/// independent of the thread count.
pub fn simulate_table(cfg: &SimConfig, n_reps: usize, tau: f64, seed: u64) -> Result<SimMetrics> {
    if n_reps == 0 {
        return Err(Error::domain("simulation needs at least one replicate"));
    }
    let vcfg = VistaConfig { tau, ..cfg.vista.clone() };
    vcfg.validate()?;
    if cfg.mode == Mode::LassoBaseline && cfg.example.family != Family::Normal {
        return Err(Error::domain("the lasso baseline needs the normal family"));
    }
    let seeds = replicate_seeds(seed, n_reps);
    let start = Instant::now();
    let work = || -> Vec<Result<RepCounts>> {
        seeds
            .par_iter()
            .map(|&(d, s)| replicate(cfg, tau, d, s))
            .collect()
    };
    let results = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::numeric(format!("could not start worker threads: {e}")))?
            .install(work),
        None => work(),
    };
    let wall = start.elapsed().as_secs_f64();

    let mut total = RepCounts::default();
    let mut failures = 0;
    let mut converged = 0;
    let mut ok_reps = 0usize;
    for r in results {
        match r {
            Ok(c) => {
                ok_reps += 1;
                converged += usize::from(c.converged);
                total.fn_ += c.fn_;
                total.nonzero += c.nonzero;
                total.fp += c.fp;
                total.zero += c.zero;
                total.cov += c.cov;
                total.cov_all += c.cov_all;
                total.aux_cov += c.aux_cov;
                total.aux_seen += c.aux_seen;
                total.iterations += c.iterations;
            }
            Err(_) => failures += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let sbl = cfg.mode == Mode::Sbl;
    Ok(SimMetrics {
        family: cfg.example.family,
        mode: cfg.mode,
        tau,
        n_reps,
        fnr: ratio(total.fn_, total.nonzero),
        fpr: ratio(total.fp, total.zero),
        beta_coverage: sbl.then(|| ratio(total.cov, total.nonzero)),
        beta_coverage_all: sbl.then(|| ratio(total.cov_all, total.nonzero + total.zero)),
        sigma2_coverage: (sbl && total.aux_seen > 0).then(|| ratio(total.aux_cov, total.aux_seen)),
        failures,
        converged,
        mean_iterations: ratio(total.iterations, ok_reps),
        wall_seconds: cfg.record_time.then_some(wall),
    })
}

/// Spearman rank correlation, with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for i in 0..a.len() {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma).powi(2);
        db += (rb[i] - mb).powi(2);
    }
    if da == 0.0 || db == 0.0 {
        return f64::NAN;
    }
    num / (da * db).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_descending_log_spaced() {
        let g = TauGrid::new(100.0, 1.0, 5).unwrap().points();
        assert_eq!(g[0], 100.0);
        assert_eq!(g[4], 1.0);
        for w in g.windows(2) {
            assert!((w[0] / w[1] - 100f64.powf(0.25)).abs() < 1e-12);
        }
        assert!(TauGrid::new(1.0, 2.0, 5).is_err());
        assert!(TauGrid::new(2.0, 1.0, 1).is_err());
    }

    #[test]
    fn lasso_endpoints() {
        let (prob, _) = WorkingExample::default().generate(3).unwrap();
        let crit = lasso_critical_tau(&prob);
        let recs = lasso_path(&prob, &[crit * 1.0001, 0.0], &LassoConfig::default(), true).unwrap();
        assert_eq!(recs[0].sparsity_fraction, 1.0);
        let ls = prob.least_squares().unwrap();
        let b = recs[1].coefficients(50);
        let err = b.iter().zip(ls.iter()).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        // just below the critical value something enters
        let r = lasso_path(&prob, &[crit * 0.99], &LassoConfig::default(), false).unwrap();
        assert!(r[0].sparsity_fraction < 1.0);
    }

    #[test]
    fn lasso_rejects_non_normal() {
        let (prob, _) = WorkingExample::with_family(Family::Poisson).generate(3).unwrap();
        let g = TauGrid::new(1.0, 0.1, 3).unwrap();
        assert!(lasso_baseline(&prob, &g).is_err());
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 2.0]) - 0.894_427_190_999_915_9).abs() < 1e-12);
    }

    #[test]
    fn replicate_seeds_are_stable() {
        assert_eq!(replicate_seeds(7, 3), replicate_seeds(7, 3));
        assert_ne!(replicate_seeds(7, 3), replicate_seeds(8, 3));
    }

    #[test]
    fn null_model_has_few_false_positives() {
        let mut cfg = SimConfig::new(Family::Normal, Mode::Sbl);
        cfg.example.active_values.clear();
        cfg.threads = Some(1);
        let m = simulate_table(&cfg, 4, 140.0, 3).unwrap();
        assert!(m.fpr <= 0.05, "{m:?}");
        assert_eq!(m.failures, 0);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut cfg = SimConfig::new(Family::Normal, Mode::Map);
        cfg.example = WorkingExample {
            n: 60,
            p: 8,
            active_values: vec![1.5, -2.0],
            ..WorkingExample::default()
        };
        cfg.threads = Some(1);
        let a = simulate_table(&cfg, 4, 20.0, 5).unwrap();
        cfg.threads = Some(3);
        let b = simulate_table(&cfg, 4, 20.0, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn map_trajectory_starts_sparse() {
        let (prob, _) = WorkingExample::toy().generate(2).unwrap();
        let grid = TauGrid::new(500.0, 1.0, 8).unwrap();
        let recs = run_trajectory(&prob, &HyperPrior::default(), &grid, Mode::Map, &VistaConfig::default(), 0, 40).unwrap();
        assert_eq!(recs.len(), 8);
        assert_eq!(recs[0].sparsity_fraction, 1.0);
        assert_eq!(recs[7].sparsity_fraction, 0.0);
    }
}
