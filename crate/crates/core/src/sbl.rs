//! Sparse Bayesian Lasso: Laplace variational family with a nonsmooth
//! penalty, optimized with VISTA over a fixed Monte Carlo draw.
//!
//! Each coefficient gets `β_p ~ Laplace(η_p, ν_p)` under the variational
//! distribution and a `Laplace(0, 1/(τλ_p))` prior. The exact KL between the
//! two ([`g_kl`]) is smooth at `η = 0`, so it cannot produce exact zeros;
//! [`g_ns`] swaps `ν e^{−|η|/ν}` for `ν`, which leaves a `τλ|η|` kink that the
//! VISTA prox handles jointly with `λ`.
//!
//! A family's auxiliary parameter (on its log scale) gets a Normal variational
//! distribution `N(m, s²)` and a `N(0, 10²)` prior, so e.g. `σ²` is LogNormal.
//!
//! Layout of a VISTA point for this objective:
//! `[η (P) | λ (K) | ln ν (P) | m, ln s (if the family has aux)]`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::glm::GlmProblem;
use crate::hyperprior::HyperPrior;
use crate::vista::{default_aux, vista_run, SmoothObjective, TraceRow, VistaConfig, VistaState};

/// Floor on Laplace scales, purely as floating-point protection.
pub const NU_FLOOR: f64 = 1e-10;

/// Prior standard deviation for auxiliary parameters on their log scale.
pub const AUX_PRIOR_SD: f64 = 10.0;

/// Initial standard deviation of the auxiliary variational distribution.
const AUX_INIT_SD: f64 = 0.1;

/// Exact KL from `Laplace(η, ν)` to `Laplace(0, 1/(τλ))`.
pub fn g_kl(eta: f64, nu: f64, lambda: f64, tau: f64) -> Result<f64> {
    check_positive(nu, lambda, tau)?;
    let a = eta.abs();
    Ok(tau * lambda * (nu * (-a / nu).exp() + a) - nu.ln() - lambda.ln())
}

/// Nonsmooth surrogate `τλ(ν + |η|) − ln ν − ln λ − 1`.
pub fn g_ns(eta: f64, nu: f64, lambda: f64, tau: f64) -> Result<f64> {
    check_positive(nu, lambda, tau)?;
    Ok(tau * lambda * (nu + eta.abs()) - nu.ln() - lambda.ln() - 1.0)
}

fn check_positive(nu: f64, lambda: f64, tau: f64) -> Result<()> {
    if nu > 0.0 && lambda > 0.0 && tau > 0.0 && nu.is_finite() && lambda.is_finite() && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "penalty needs nu, lambda, tau > 0, got nu={nu}, lambda={lambda}, tau={tau}"
        )))
    }
}

/// Family of a smooth variational or prior distribution, each a transform of
/// an underlying Normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothFamily {
    Normal,
    LogNormal,
    LogitNormal,
}

/// KL divergence between two distributions of the same [`SmoothFamily`],
/// parameterized by the mean and standard deviation of the underlying Normal.
pub fn kl_smooth(family_q: SmoothFamily, eta_q: f64, nu_q: f64, family_p: SmoothFamily, eta_p: f64, nu_p: f64) -> Result<f64> {
    if family_q != family_p {
        return Err(Error::domain(format!(
            "KL needs matching families, got {family_q:?} and {family_p:?}"
        )));
    }
    if !(nu_q > 0.0 && nu_p > 0.0 && eta_q.is_finite() && eta_p.is_finite()) {
        return Err(Error::domain(format!(
            "KL needs finite locations and positive scales, got ({eta_q}, {nu_q}) and ({eta_p}, {nu_p})"
        )));
    }
    let r = nu_q / nu_p;
    let d = (eta_q - eta_p) / nu_p;
    Ok(0.5 * (r * r + d * d - 1.0) - r.ln())
}

/// Maps a standard normal draw to a standard Laplace draw through the
/// probability integral transform.
pub fn laplace_from_normal(e: f64) -> f64 {
    // u = Φ(e) − ½;  −sgn(u) ln(1 − 2|u|) with 1 − 2|u| = erfc(|e|/√2)
    let t = -erfc(e.abs() / std::f64::consts::SQRT_2).ln();
    if e < 0.0 {
        -t
    } else {
        t
    }
}

/// A Monte Carlo draw fixed for a whole optimization.
#[derive(Debug, Clone)]
pub struct SaaDraw {
    /// `B × D` standard normals.
    eps: DMatrix<f64>,
    /// First `n_beta` columns of `eps` mapped to standard Laplace.
    laplace: DMatrix<f64>,
    n_beta: usize,
    seed: u64,
    antithetic: bool,
}

impl SaaDraw {
    /// `b` rows arranged in antithetic pairs: row `2k+1` is minus row `2k`.
    pub fn new(b: usize, n_beta: usize, n_aux: usize, seed: u64) -> Result<Self> {
        if b == 0 || !b.is_multiple_of(2) {
            return Err(Error::domain(format!("Monte Carlo sample size must be even and > 0, got {b}")));
        }
        let d = n_beta + n_aux;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut eps = DMatrix::zeros(b, d);
        for k in 0..b / 2 {
            for j in 0..d {
                let e: f64 = StandardNormal.sample(&mut rng);
                eps[(2 * k, j)] = e;
                eps[(2 * k + 1, j)] = -e;
            }
        }
        Ok(Self::from_eps(eps, n_beta, seed, true))
    }

    /// `b` independent rows, for comparison against antithetic sampling.
    pub fn independent(b: usize, n_beta: usize, n_aux: usize, seed: u64) -> Result<Self> {
        if b == 0 {
            return Err(Error::domain("Monte Carlo sample size must be > 0"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = DMatrix::from_fn(b, n_beta + n_aux, |_, _| StandardNormal.sample(&mut rng));
        Ok(Self::from_eps(eps, n_beta, seed, false))
    }

    /// Draw sized for a problem's coefficients and auxiliary parameter.
    pub fn for_problem(problem: &GlmProblem, b: usize, seed: u64) -> Result<Self> {
        Self::new(b, problem.n_coef(), usize::from(problem.family().has_aux()), seed)
    }

    fn from_eps(eps: DMatrix<f64>, n_beta: usize, seed: u64, antithetic: bool) -> Self {
        let laplace = DMatrix::from_fn(eps.nrows(), n_beta, |i, j| laplace_from_normal(eps[(i, j)]));
        Self {
            eps,
            laplace,
            n_beta,
            seed,
            antithetic,
        }
    }

    pub fn samples(&self) -> usize {
        self.eps.nrows()
    }

    pub fn dim(&self) -> usize {
        self.eps.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_antithetic(&self) -> bool {
        self.antithetic
    }

    pub fn eps(&self) -> &DMatrix<f64> {
        &self.eps
    }

    /// Standard Laplace variates for the coefficients, `B × P`.
    pub fn laplace(&self) -> &DMatrix<f64> {
        &self.laplace
    }

    fn aux(&self, b: usize) -> f64 {
        if self.eps.ncols() > self.n_beta {
            self.eps[(b, self.n_beta)]
        } else {
            0.0
        }
    }
}

/// Variational distribution of a family's auxiliary parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxVariational {
    pub name: String,
    /// Family of the natural-scale parameter (LogNormal for all built-in
    /// likelihoods).
    pub family: SmoothFamily,
    /// Mean of the underlying Normal.
    pub eta: f64,
    /// Standard deviation of the underlying Normal.
    pub nu: f64,
}

impl AuxVariational {
    /// Equal-tailed interval for the natural-scale parameter.
    pub fn interval(&self, level: f64) -> Result<(f64, f64)> {
        let z = normal_quantile(level)?;
        Ok(((self.eta - z * self.nu).exp(), (self.eta + z * self.nu).exp()))
    }
}

fn normal_quantile(level: f64) -> Result<f64> {
    use statrs::distribution::{ContinuousCDF, Normal};
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("credible level must lie in (0, 1), got {level}")));
    }
    Ok(Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.5 + level / 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    pub names: Vec<String>,
    pub eta_beta: Vec<f64>,
    pub nu_beta: Vec<f64>,
    /// Penalty weights, one per penalized coefficient.
    pub lambda: Vec<f64>,
    pub penalized: Vec<usize>,
    pub aux: Option<AuxVariational>,
    pub tau: f64,
}

impl VariationalState {
    /// `η = 0`, `λ = 1`, `ν_p = 1/‖X_p‖`, auxiliary centered at its default.
    pub fn initial(problem: &GlmProblem, tau: f64) -> Self {
        let x = problem.x();
        let nu = (0..problem.n_coef())
            .map(|j| {
                let n2 = x.column(j).norm_squared();
                if n2 > 0.0 { 1.0 / n2.sqrt() } else { 1.0 }
            })
            .collect();
        let penalized = problem.penalized_indices();
        Self {
            names: problem.names().to_vec(),
            eta_beta: vec![0.0; problem.n_coef()],
            nu_beta: nu,
            lambda: vec![1.0; penalized.len()],
            penalized,
            aux: problem.family().aux_name().map(|name| AuxVariational {
                name: name.to_string(),
                family: SmoothFamily::LogNormal,
                eta: default_aux(problem),
                nu: AUX_INIT_SD,
            }),
            tau,
        }
    }

    /// Flat VISTA point.
    pub fn to_point(&self) -> Vec<f64> {
        let mut x = self.eta_beta.clone();
        x.extend(&self.lambda);
        x.extend(self.nu_beta.iter().map(|v| v.ln()));
        if let Some(a) = &self.aux {
            x.push(a.eta);
            x.push(a.nu.ln());
        }
        x
    }

    /// Inverse of [`to_point`](Self::to_point), with names and families taken
    /// from `template`.
    pub fn from_point(template: &VariationalState, x: &[f64], tau: f64) -> Self {
        let p = template.eta_beta.len();
        let k = template.lambda.len();
        let mut out = template.clone();
        out.eta_beta.copy_from_slice(&x[..p]);
        out.lambda.copy_from_slice(&x[p..p + k]);
        for j in 0..p {
            out.nu_beta[j] = x[p + k + j].exp().max(NU_FLOOR);
        }
        if let Some(a) = out.aux.as_mut() {
            a.eta = x[2 * p + k];
            a.nu = x[2 * p + k + 1].exp();
        }
        out.tau = tau;
        out
    }

    /// Equal-tailed Laplace interval for coefficient `j` at `level`.
    pub fn credible_interval(&self, j: usize, level: f64) -> Result<(f64, f64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::domain(format!("credible level must lie in (0, 1), got {level}")));
        }
        let half = self.nu_beta[j] * (1.0 / (1.0 - level)).ln();
        Ok((self.eta_beta[j] - half, self.eta_beta[j] + half))
    }

    /// Penalty weight of coefficient `j`, if it is penalized.
    pub fn lambda_of(&self, j: usize) -> Option<f64> {
        self.penalized.iter().position(|&i| i == j).map(|k| self.lambda[k])
    }

    /// Fraction of penalized coefficients whose mode is exactly zero.
    pub fn sparsity_fraction(&self) -> f64 {
        if self.penalized.is_empty() {
            return 0.0;
        }
        let z = self.penalized.iter().filter(|&&j| self.eta_beta[j] == 0.0).count();
        z as f64 / self.penalized.len() as f64
    }
}

/// The smooth part of the SBL cost over a fixed draw.
pub struct SblObjective<'a> {
    problem: &'a GlmProblem,
    draw: &'a SaaDraw,
    penalized: Vec<usize>,
    has_aux: bool,
    init: Vec<f64>,
}

impl<'a> SblObjective<'a> {
    pub fn new(problem: &'a GlmProblem, draw: &'a SaaDraw) -> Result<Self> {
        let has_aux = problem.family().has_aux();
        let want = problem.n_coef() + usize::from(has_aux);
        if draw.dim() != want || draw.n_beta != problem.n_coef() {
            return Err(Error::domain(format!(
                "draw has dimension {}, problem needs {want}",
                draw.dim()
            )));
        }
        let init = VariationalState::initial(problem, 1.0).to_point();
        let p = problem.n_coef();
        let k = problem.penalized_indices().len();
        Ok(Self {
            penalized: problem.penalized_indices(),
            problem,
            draw,
            has_aux,
            init: init[p + k..].to_vec(),
        })
    }

    /// Per-draw negative log-likelihoods at `x`.
    pub fn draw_nll(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (_, per, _) = self.mc_term(x, false)?;
        Ok(per)
    }

    /// Monte Carlo mean of the nll, per-draw values, and (optionally) the
    /// gradient pieces `(∂η, ∂ln ν, ∂m, ∂ln s)`.
    #[allow(clippy::type_complexity)]
    fn mc_term(&self, x: &[f64], want_grad: bool) -> Result<(f64, Vec<f64>, Option<(Vec<f64>, Vec<f64>, f64, f64)>)> {
        let p = self.problem.n_coef();
        let k = self.penalized.len();
        let n = self.problem.n_obs();
        let b = self.draw.samples();
        let eta = &x[..p];
        let nu: Vec<f64> = x[p + k..2 * p + k].iter().map(|v| v.exp().max(NU_FLOOR)).collect();
        let (m, s) = if self.has_aux {
            (x[2 * p + k], x[2 * p + k + 1].exp())
        } else {
            (0.0, 0.0)
        };
        let z = self.draw.laplace();
        // P × B matrix of coefficient draws.
        let betas = DMatrix::from_fn(p, b, |j, r| eta[j] + nu[j] * z[(r, j)]);
        let lin = self.problem.x() * &betas;
        let y = self.problem.y();
        let family = self.problem.family();
        let mut per = vec![0.0; b];
        let mut d = if want_grad { DMatrix::zeros(n, b) } else { DMatrix::zeros(0, 0) };
        let mut daux = vec![0.0; b];
        for r in 0..b {
            let aux = m + s * self.draw.aux(r);
            let mut tot = 0.0;
            let mut ga = 0.0;
            for i in 0..n {
                let (v, de, da) = family.pointwise(y[i], lin[(i, r)], aux);
                tot += v;
                if want_grad {
                    d[(i, r)] = de;
                    ga += da;
                }
            }
            if !tot.is_finite() {
                return Err(Error::numeric(format!(
                    "negative log-likelihood is not finite for Monte Carlo draw row {r}"
                )));
            }
            per[r] = tot;
            daux[r] = ga;
        }
        let bf = b as f64;
        let mean = per.iter().sum::<f64>() / bf;
        if !want_grad {
            return Ok((mean, per, None));
        }
        let g = self.problem.x().tr_mul(&d);
        let mut g_eta = vec![0.0; p];
        let mut g_lnu = vec![0.0; p];
        for j in 0..p {
            let mut a = 0.0;
            let mut c = 0.0;
            for r in 0..b {
                a += g[(j, r)];
                c += g[(j, r)] * z[(r, j)];
            }
            g_eta[j] = a / bf;
            // floor is inactive in practice; chain rule through exp
            g_lnu[j] = c / bf * nu[j];
        }
        let (mut gm, mut gs) = (0.0, 0.0);
        if self.has_aux {
            for r in 0..b {
                gm += daux[r];
                gs += daux[r] * self.draw.aux(r);
            }
            gm /= bf;
            gs = gs / bf * s;
        }
        Ok((mean, per, Some((g_eta, g_lnu, gm, gs))))
    }
}

fn aux_kl(m: f64, s: f64) -> f64 {
    let r = s / AUX_PRIOR_SD;
    0.5 * (r * r + (m / AUX_PRIOR_SD).powi(2) - 1.0) - r.ln()
}

impl SmoothObjective for SblObjective<'_> {
    fn n_beta(&self) -> usize {
        self.problem.n_coef()
    }

    fn penalized(&self) -> &[usize] {
        &self.penalized
    }

    fn n_theta(&self) -> usize {
        self.problem.n_coef() + if self.has_aux { 2 } else { 0 }
    }

    fn initial_theta(&self) -> Vec<f64> {
        self.init.clone()
    }

    fn eval(&self, x: &[f64], tau: f64, grad: Option<&mut [f64]>) -> Result<f64> {
        let p = self.problem.n_coef();
        let k = self.penalized.len();
        let want = grad.is_some();
        let (mc, _, parts) = self.mc_term(x, want)?;
        let lnu = &x[p + k..2 * p + k];
        let mut cost = mc;
        // −ln ν − 1 for every coefficient, + τλν for penalized ones
        for &l in lnu {
            cost -= l + 1.0;
        }
        for (kk, &j) in self.penalized.iter().enumerate() {
            cost += tau * x[p + kk] * lnu[j].exp().max(NU_FLOOR);
        }
        if self.has_aux {
            cost += aux_kl(x[2 * p + k], x[2 * p + k + 1].exp());
        }
        if let (Some(g), Some((g_eta, g_lnu, gm, gs))) = (grad, parts) {
            g[..p].copy_from_slice(&g_eta);
            for j in 0..p {
                g[p + k + j] = g_lnu[j] - 1.0;
            }
            for (kk, &j) in self.penalized.iter().enumerate() {
                let nu = lnu[j].exp().max(NU_FLOOR);
                g[p + kk] = tau * nu;
                g[p + k + j] += tau * x[p + kk] * nu;
            }
            if self.has_aux {
                let m = x[2 * p + k];
                let s = x[2 * p + k + 1].exp();
                let v2 = AUX_PRIOR_SD * AUX_PRIOR_SD;
                g[2 * p + k] = gm + m / v2;
                g[2 * p + k + 1] = gs + s * s / v2 - 1.0;
            }
        }
        Ok(cost)
    }
}

/// Result of [`saa_elbo`].
#[derive(Debug, Clone)]
pub struct SaaEstimate {
    /// Full cost, including `τλ|η|`, `−ln λ` and `ρ(λ)`.
    pub cost: f64,
    /// Gradient in the flat layout, excluding the `τλ|η|` term.
    pub grad: Vec<f64>,
    /// Standard error of the Monte Carlo term, from the spread of antithetic
    /// pair means (or of single draws for an independent draw).
    pub mc_se: f64,
}

/// SAA estimate of the negative ELBO with the nonsmooth penalty.
pub fn saa_elbo(problem: &GlmProblem, vs: &VariationalState, draw: &SaaDraw, prior: &HyperPrior) -> Result<SaaEstimate> {
    let obj = SblObjective::new(problem, draw)?;
    check_state(problem, vs)?;
    let x = vs.to_point();
    let p = problem.n_coef();
    let mut grad = vec![0.0; x.len()];
    let mut cost = obj.eval(&x, vs.tau, Some(&mut grad))?;
    for (kk, &j) in vs.penalized.iter().enumerate() {
        let l = vs.lambda[kk];
        if l <= 0.0 {
            return Err(Error::domain("penalty weights must be > 0"));
        }
        cost += prior.rho(l) - l.ln() + vs.tau * l * x[j].abs();
        grad[p + kk] += prior.rho_prime(l) - 1.0 / l;
    }
    let per = obj.draw_nll(&x)?;
    Ok(SaaEstimate {
        cost,
        grad,
        mc_se: mc_standard_error(&per, draw.is_antithetic()),
    })
}

fn mc_standard_error(per: &[f64], antithetic: bool) -> f64 {
    let units: Vec<f64> = if antithetic {
        per.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
    } else {
        per.to_vec()
    };
    let n = units.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let mean = units.iter().sum::<f64>() / n;
    let var = units.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

fn check_state(problem: &GlmProblem, vs: &VariationalState) -> Result<()> {
    let p = problem.n_coef();
    if vs.eta_beta.len() != p || vs.nu_beta.len() != p {
        return Err(Error::domain(format!(
            "variational state has {} locations and {} scales, problem has {p} coefficients",
            vs.eta_beta.len(),
            vs.nu_beta.len()
        )));
    }
    if vs.penalized != problem.penalized_indices() || vs.lambda.len() != vs.penalized.len() {
        return Err(Error::domain("variational state penalization does not match the problem"));
    }
    if vs.aux.is_some() != problem.family().has_aux() {
        return Err(Error::domain("variational state auxiliary parameter does not match the family"));
    }
    if vs.nu_beta.iter().any(|&v| !(v > 0.0)) || !(vs.tau > 0.0) {
        return Err(Error::domain("scales and tau must be > 0"));
    }
    Ok(())
}

/// The same cost as [`saa_elbo`] for a Normal likelihood, with the expected
/// negative log-likelihood in closed form instead of by Monte Carlo.
///
/// With `Var(β_p) = 2ν_p²` and `ln σ² ~ N(m, s²)`,
/// `E[nll] = (ξ/2) e^{−m + s²/2} + (N/2) m + (N/2) ln 2π` where
/// `ξ = Σ_p 2ν_p² ‖X_p‖² + ‖y − Xη‖²`.
pub fn closed_form_gaussian_elbo(problem: &GlmProblem, vs: &VariationalState, prior: &HyperPrior) -> Result<f64> {
    if problem.family() != crate::glm::Family::Normal {
        return Err(Error::domain(format!(
            "closed-form ELBO needs the normal family, got {}",
            problem.family()
        )));
    }
    check_state(problem, vs)?;
    let aux = vs.aux.as_ref().expect("normal family has an auxiliary parameter");
    let x = problem.x();
    let eta = DVector::from_column_slice(&vs.eta_beta);
    let resid = problem.y() - x * &eta;
    let mut xi = resid.norm_squared();
    for j in 0..problem.n_coef() {
        xi += 2.0 * vs.nu_beta[j].powi(2) * x.column(j).norm_squared();
    }
    let n = problem.n_obs() as f64;
    let expected = 0.5 * xi * (-aux.eta + 0.5 * aux.nu * aux.nu).exp()
        + 0.5 * n * aux.eta
        + 0.5 * n * (2.0 * std::f64::consts::PI).ln();
    let mut cost = expected + aux_kl(aux.eta, aux.nu);
    for &nu in &vs.nu_beta {
        cost -= nu.ln() + 1.0;
    }
    for (kk, &j) in vs.penalized.iter().enumerate() {
        let l = vs.lambda[kk];
        cost += vs.tau * l * (vs.nu_beta[j] + vs.eta_beta[j].abs()) + prior.rho(l) - l.ln();
    }
    Ok(cost)
}

#[derive(Debug, Clone)]
pub struct SblFit {
    pub state: VariationalState,
    /// Optimizer state, usable as a warm start.
    pub vista: VistaState,
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
}

/// Fits the SBL at `cfg.tau` over a fixed draw. `init` warm-starts from a
/// previous fit's optimizer state.
pub fn fit_sbl(
    problem: &GlmProblem,
    prior: &HyperPrior,
    cfg: &VistaConfig,
    draw: &SaaDraw,
    init: Option<VistaState>,
) -> Result<SblFit> {
    let obj = SblObjective::new(problem, draw)?;
    let init = match init {
        Some(s) => s,
        None => {
            let vs = VariationalState::initial(problem, cfg.tau);
            let x = vs.to_point();
            let p = problem.n_coef();
            let k = vs.lambda.len();
            VistaState::new(x[..p].to_vec(), x[p..p + k].to_vec(), x[p + k..].to_vec(), cfg.init_step)?
        }
    };
    let fit = vista_run(&obj, prior, cfg, Some(init))?;
    let template = VariationalState::initial(problem, cfg.tau);
    let state = VariationalState::from_point(&template, fit.state.point(), cfg.tau);
    Ok(SblFit {
        state,
        cost: fit.state.cost,
        vista: fit.state,
        converged: fit.converged,
        iterations: fit.iterations,
        trace: fit.trace,
    })
}
