//! GLM likelihoods and the working-example data generator.
//!
//! Negative log-likelihoods include all normalizing constants. Auxiliary
//! parameters are carried on an unconstrained log scale:
//!
//! | family       | link     | aux                     |
//! |--------------|----------|-------------------------|
//! | Normal       | identity | `log σ²`                |
//! | Bernoulli    | logit    | none                    |
//! | Poisson      | log      | none                    |
//! | NegBinomial  | log      | `log r`, `r = 1/σ²`     |
//! | Cauchy       | identity | `log scale`             |
//!
//! For the exponential/logistic links the linear predictor saturates at
//! `|η| = 30`; beyond that the likelihood is flat in η.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Cauchy, Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};

/// Linear predictors are clamped to this magnitude before `exp`/logistic.
pub const ETA_CLAMP: f64 = 30.0;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Normal,
    Bernoulli,
    Poisson,
    NegBinomial,
    Cauchy,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Normal,
        Family::Bernoulli,
        Family::Poisson,
        Family::NegBinomial,
        Family::Cauchy,
    ];

    pub fn has_aux(self) -> bool {
        matches!(self, Family::Normal | Family::NegBinomial | Family::Cauchy)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Bernoulli => "bernoulli",
            Family::Poisson => "poisson",
            Family::NegBinomial => "nb",
            Family::Cauchy => "cauchy",
        }
    }

    /// Label of the auxiliary parameter on its natural (positive) scale.
    pub fn aux_name(self) -> Option<&'static str> {
        match self {
            Family::Normal => Some("sigma2"),
            Family::NegBinomial => Some("failures"),
            Family::Cauchy => Some("scale"),
            _ => None,
        }
    }

    pub fn validate_response(self, y: &DVector<f64>) -> Result<()> {
        for (i, &v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Data(format!("response row {i} is not finite")));
            }
            let ok = match self {
                Family::Normal | Family::Cauchy => true,
                Family::Bernoulli => v == 0.0 || v == 1.0,
                Family::Poisson | Family::NegBinomial => v >= 0.0 && v.fract() == 0.0,
            };
            if !ok {
                return Err(Error::domain(format!(
                    "response row {i} has value {v}, invalid for the {} family",
                    self.name()
                )));
            }
        }
        Ok(())
    }

    /// `(nll_i, ∂nll_i/∂η_i, ∂nll_i/∂aux)` for one observation.
    #[inline]
    pub fn pointwise(self, y: f64, eta: f64, aux: f64) -> (f64, f64, f64) {
        match self {
            Family::Normal => {
                let inv = (-aux).exp();
                let r = y - eta;
                let q = 0.5 * r * r * inv;
                (0.5 * (LN_2PI + aux) + q, -r * inv, 0.5 - q)
            }
            Family::Bernoulli => {
                let (e, live) = clamp(eta);
                // log(1 + e^e) − y e, stably
                let softplus = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
                let p = 1.0 / (1.0 + (-e).exp());
                (softplus - y * e, if live { p - y } else { 0.0 }, 0.0)
            }
            Family::Poisson => {
                let (e, live) = clamp(eta);
                let mu = e.exp();
                (mu - y * e + ln_gamma(y + 1.0), if live { mu - y } else { 0.0 }, 0.0)
            }
            Family::NegBinomial => {
                let (e, live) = clamp(eta);
                let mu = e.exp();
                let r = aux.exp();
                let log_rmu = log_sum_exp(aux, e);
                let ll = ln_gamma(y + r) - ln_gamma(r) - ln_gamma(y + 1.0) + r * (aux - log_rmu) + y * (e - log_rmu);
                let d_eta = if live { r * (mu - y) / (r + mu) } else { 0.0 };
                let d_r = -(digamma(y + r) - digamma(r) + aux - log_rmu + (mu - y) / (r + mu));
                (-ll, d_eta, d_r * r)
            }
            Family::Cauchy => {
                let s2 = (2.0 * aux).exp();
                let r = y - eta;
                let z2 = r * r / s2;
                (
                    PI.ln() + aux + z2.ln_1p(),
                    -2.0 * r / (s2 + r * r),
                    1.0 - 2.0 * z2 / (1.0 + z2),
                )
            }
        }
    }
}

#[inline]
fn clamp(eta: f64) -> (f64, bool) {
    if eta > ETA_CLAMP {
        (ETA_CLAMP, false)
    } else if eta < -ETA_CLAMP {
        (-ETA_CLAMP, false)
    } else {
        (eta, true)
    }
}

#[inline]
fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(Family::Normal),
            "bernoulli" | "binomial" | "logistic" => Ok(Family::Bernoulli),
            "poisson" => Ok(Family::Poisson),
            "nb" | "negbinomial" | "neg-binomial" | "negative-binomial" => Ok(Family::NegBinomial),
            "cauchy" => Ok(Family::Cauchy),
            _ => Err(Error::domain(format!("unknown family '{s}'"))),
        }
    }
}

/// Design, response, likelihood and penalization mask.
#[derive(Debug, Clone)]
pub struct GlmProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
    family: Family,
    penalized: Vec<bool>,
    names: Vec<String>,
}

impl GlmProblem {
    /// Builds a problem with every coefficient penalized and names `x1..xP`.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, family: Family) -> Result<Self> {
        let p = x.ncols();
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        Self::with_details(x, y, family, vec![true; p], names)
    }

    pub fn with_details(
        x: DMatrix<f64>,
        y: DVector<f64>,
        family: Family,
        penalized: Vec<bool>,
        names: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = x.shape();
        if n == 0 || p == 0 {
            return Err(Error::Data(format!("design must be non-empty, got {n}x{p}")));
        }
        if y.len() != n {
            return Err(Error::Data(format!("response has {} rows, design has {n}", y.len())));
        }
        if penalized.len() != p || names.len() != p {
            return Err(Error::Data(format!(
                "penalized mask ({}) and names ({}) must have one entry per column ({p})",
                penalized.len(),
                names.len()
            )));
        }
        if let Some((i, _)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Data(format!("design entry (row {}, col {}) is not finite", i % n, i / n)));
        }
        family.validate_response(&y)?;
        Ok(Self {
            x,
            y,
            family,
            penalized,
            names,
        })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn penalized(&self) -> &[bool] {
        &self.penalized
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_coef(&self) -> usize {
        self.x.ncols()
    }

    /// Indices of penalized coefficients.
    pub fn penalized_indices(&self) -> Vec<usize> {
        self.penalized.iter().enumerate().filter(|(_, &p)| p).map(|(i, _)| i).collect()
    }

    pub fn with_family(&self, family: Family) -> Result<Self> {
        Self::with_details(self.x.clone(), self.y.clone(), family, self.penalized.clone(), self.names.clone())
    }

    pub fn with_penalized(mut self, penalized: Vec<bool>) -> Result<Self> {
        if penalized.len() != self.n_coef() {
            return Err(Error::Data("penalized mask length mismatch".into()));
        }
        self.penalized = penalized;
        Ok(self)
    }

    fn check_beta(&self, beta: &DVector<f64>) -> Result<()> {
        if beta.len() != self.n_coef() {
            return Err(Error::domain(format!(
                "beta has length {}, problem has {} coefficients",
                beta.len(),
                self.n_coef()
            )));
        }
        Ok(())
    }

    /// Exact negative log-likelihood at `(β, aux)`.
    pub fn nll(&self, beta: &DVector<f64>, aux: f64) -> Result<f64> {
        self.check_beta(beta)?;
        let eta = &self.x * beta;
        Ok(eta
            .iter()
            .zip(self.y.iter())
            .map(|(&e, &y)| self.family.pointwise(y, e, aux).0)
            .sum())
    }

    /// Negative log-likelihood with its analytic gradient in `β` and `aux`.
    pub fn nll_grad(&self, beta: &DVector<f64>, aux: f64) -> Result<(f64, DVector<f64>, f64)> {
        self.check_beta(beta)?;
        let eta = &self.x * beta;
        let mut d = DVector::zeros(self.n_obs());
        let mut total = 0.0;
        let mut g_aux = 0.0;
        for i in 0..self.n_obs() {
            let (v, de, da) = self.family.pointwise(self.y[i], eta[i], aux);
            total += v;
            d[i] = de;
            g_aux += da;
        }
        Ok((total, self.x.tr_mul(&d), g_aux))
    }

    /// Ordinary least squares fit via Cholesky of `XᵀX`.
    pub fn least_squares(&self) -> Result<DVector<f64>> {
        let xtx = self.x.tr_mul(&self.x);
        let xty = self.x.tr_mul(&self.y);
        let chol = xtx
            .cholesky()
            .ok_or_else(|| Error::numeric("XᵀX is not positive definite"))?;
        Ok(chol.solve(&xty))
    }
}

/// Settings for the simulated working example.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkingExample {
    pub n: usize,
    pub p: usize,
    pub active_values: Vec<f64>,
    /// Normal noise sd, Cauchy scale, or negative-binomial `σ` with `r = 1/σ²`.
    pub noise_sd: f64,
    pub family: Family,
}

impl Default for WorkingExample {
    fn default() -> Self {
        Self {
            n: 250,
            p: 50,
            active_values: vec![-2.5, -2.0, -1.5, 1.5, 2.0, 2.5],
            noise_sd: 1.0,
            family: Family::Normal,
        }
    }
}

impl WorkingExample {
    pub fn with_family(family: Family) -> Self {
        Self { family, ..Self::default() }
    }

    /// The two-coefficient toy: `n = 100`, truth `(−2, 2)`.
    pub fn toy() -> Self {
        Self {
            n: 100,
            p: 2,
            active_values: vec![-2.0, 2.0],
            ..Self::default()
        }
    }

    pub fn true_beta(&self) -> DVector<f64> {
        let mut b = DVector::zeros(self.p);
        for (i, &v) in self.active_values.iter().enumerate() {
            b[i] = v;
        }
        b
    }

    /// Draws `X` with iid standard normal entries and a response from the
    /// family at `Xβ`. The stream is fully determined by `seed`.
    pub fn generate(&self, seed: u64) -> Result<(GlmProblem, DVector<f64>)> {
        if self.active_values.len() > self.p {
            return Err(Error::domain(format!(
                "{} active values exceed p = {}",
                self.active_values.len(),
                self.p
            )));
        }
        if self.n == 0 || self.p == 0 {
            return Err(Error::domain("working example needs n >= 1 and p >= 1"));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd > 0.0) {
            return Err(Error::domain("noise_sd must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = DMatrix::zeros(self.n, self.p);
        for i in 0..self.n {
            for j in 0..self.p {
                x[(i, j)] = StandardNormal.sample(&mut rng);
            }
        }
        let beta = self.true_beta();
        let eta = &x * &beta;
        let y = DVector::from_iterator(
            self.n,
            eta.iter().map(|&e| -> Result<f64> {
                Ok(match self.family {
                    Family::Normal => {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        e + self.noise_sd * z
                    }
                    Family::Cauchy => e + Cauchy::new(0.0, self.noise_sd).unwrap().sample(&mut rng),
                    Family::Bernoulli => {
                        let p = 1.0 / (1.0 + (-clamp(e).0).exp());
                        if Bernoulli::new(p).unwrap().sample(&mut rng) { 1.0 } else { 0.0 }
                    }
                    Family::Poisson => poisson(clamp(e).0.exp(), &mut rng)?,
                    Family::NegBinomial => {
                        let r = 1.0 / (self.noise_sd * self.noise_sd);
                        let mu = clamp(e).0.exp();
                        let rate = Gamma::new(r, mu / r)
                            .map_err(|e| Error::numeric(e.to_string()))?
                            .sample(&mut rng);
                        poisson(rate, &mut rng)?
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?,
        );
        let problem = GlmProblem::new(x, y, self.family)?;
        Ok((problem, beta))
    }
}

fn poisson(rate: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    if rate <= 0.0 {
        return Ok(0.0);
    }
    Poisson::new(rate)
        .map(|d| d.sample(rng))
        .map_err(|e| Error::numeric(format!("poisson rate {rate}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_problem(family: Family, seed: u64) -> (GlmProblem, DVector<f64>, f64) {
        let spec = WorkingExample {
            n: 40,
            p: 5,
            active_values: vec![0.8, -0.5, 0.3],
            noise_sd: 0.7,
            family,
        };
        let (prob, _) = spec.generate(seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let beta = DVector::from_iterator(5, (0..5).map(|_| rng.gen_range(-1.0..1.0)));
        let aux = rng.gen_range(-1.0..1.0);
        (prob, beta, aux)
    }

    #[test]
    fn normal_constant() {
        let x = DMatrix::from_fn(7, 3, |i, j| (i + j) as f64 * 0.1);
        let prob = GlmProblem::new(x, DVector::zeros(7), Family::Normal).unwrap();
        let v = prob.nll(&DVector::zeros(3), 0.0).unwrap();
        assert!((v - 3.5 * (2.0 * PI).ln()).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_at_zero() {
        let (prob, _, _) = random_problem(Family::Bernoulli, 1);
        let v = prob.nll(&DVector::zeros(5), 0.0).unwrap();
        assert!((v - 40.0 * 2f64.ln()).abs() < 1e-10);
        let (_, g, _) = prob.nll_grad(&DVector::zeros(5), 0.0).unwrap();
        let expect = -prob.x().tr_mul(&prob.y().map(|y| y - 0.5));
        assert!((g - expect).norm() < 1e-12);
    }

    #[test]
    fn poisson_matches_term_by_term_log_pmf() {
        let (prob, beta, _) = random_problem(Family::Poisson, 2);
        let eta = prob.x() * &beta;
        let mut total = 0.0;
        for i in 0..prob.n_obs() {
            let k = prob.y()[i] as u64;
            let mu = eta[i].exp();
            let log_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
            total += -(k as f64 * mu.ln() - mu - log_fact);
        }
        let v = prob.nll(&beta, 0.0).unwrap();
        assert!((v - total).abs() < 1e-9 * total.abs().max(1.0));
    }

    #[test]
    fn negbinomial_matches_pmf_product() {
        let (prob, beta, aux) = random_problem(Family::NegBinomial, 3);
        let eta = prob.x() * &beta;
        let r = aux.exp();
        let mut total = 0.0;
        for i in 0..prob.n_obs() {
            let k = prob.y()[i] as u64;
            let mu = eta[i].exp();
            let p = mu / (r + mu);
            // Γ(k+r)/(Γ(r) k!) = Π_{j<k} (r+j)/(j+1)
            let log_coef: f64 = (0..k).map(|j| ((r + j as f64) / (j as f64 + 1.0)).ln()).sum();
            total -= log_coef + r * (1.0 - p).ln() + k as f64 * p.ln();
        }
        let v = prob.nll(&beta, aux).unwrap();
        assert!((v - total).abs() < 1e-9 * total.abs().max(1.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        for family in Family::ALL {
            for seed in 0..20 {
                let (prob, beta, aux) = random_problem(family, seed);
                let (_, g, ga) = prob.nll_grad(&beta, aux).unwrap();
                let mut fd = DVector::zeros(5);
                for j in 0..5 {
                    let h = 1e-6;
                    let mut bp = beta.clone();
                    bp[j] += h;
                    let mut bm = beta.clone();
                    bm[j] -= h;
                    fd[j] = (prob.nll(&bp, aux).unwrap() - prob.nll(&bm, aux).unwrap()) / (2.0 * h);
                }
                let rel = (&g - &fd).norm() / fd.norm().max(1.0);
                assert!(rel < 1e-5, "{family} seed {seed}: {rel}");
                let h = 1e-6;
                let fda = (prob.nll(&beta, aux + h).unwrap() - prob.nll(&beta, aux - h).unwrap()) / (2.0 * h);
                assert!((fda - ga).abs() < 1e-5 * fda.abs().max(1.0), "{family} aux: {fda} vs {ga}");
            }
        }
    }

    #[test]
    fn normal_least_squares_is_stationary() {
        let (prob, _) = WorkingExample::default().generate(5).unwrap();
        let bh = prob.least_squares().unwrap();
        let (_, g, _) = prob.nll_grad(&bh, 0.3).unwrap();
        assert!(g.amax() < 1e-8);
    }

    #[test]
    fn row_permutation_invariance() {
        for family in Family::ALL {
            let (prob, beta, aux) = random_problem(family, 9);
            let n = prob.n_obs();
            let perm: Vec<usize> = (0..n).rev().collect();
            let x = DMatrix::from_fn(n, 5, |i, j| prob.x()[(perm[i], j)]);
            let y = DVector::from_fn(n, |i, _| prob.y()[perm[i]]);
            let q = GlmProblem::new(x, y, family).unwrap();
            let a = prob.nll(&beta, aux).unwrap();
            let b = q.nll(&beta, aux).unwrap();
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn response_validation() {
        let x = DMatrix::from_element(3, 1, 1.0);
        let err = GlmProblem::new(x.clone(), DVector::from_vec(vec![0.0, 0.5, 1.0]), Family::Bernoulli).unwrap_err();
        assert!(err.to_string().contains("row 1"));
        assert!(GlmProblem::new(x.clone(), DVector::from_vec(vec![0.0, 2.5, 1.0]), Family::Poisson).is_err());
        assert!(GlmProblem::new(x.clone(), DVector::from_vec(vec![0.0, -1.0, 1.0]), Family::NegBinomial).is_err());
        assert!(GlmProblem::new(x, DVector::from_vec(vec![0.0, 1.0]), Family::Normal).is_err());
        assert!(GlmProblem::new(DMatrix::zeros(0, 1), DVector::zeros(0), Family::Normal).is_err());
    }

    #[test]
    fn generator_is_deterministic() {
        for family in Family::ALL {
            let spec = WorkingExample::with_family(family);
            let (a, _) = spec.generate(42).unwrap();
            let (b, _) = spec.generate(42).unwrap();
            assert!(a.x().iter().zip(b.x().iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
            assert!(a.y().iter().zip(b.y().iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
    }

    #[test]
    fn generator_moments() {
        // y = Xβ + ε with iid standard normal X: E y = 0, Var y = βᵀβ + 1
        let spec = WorkingExample { n: 20_000, ..WorkingExample::default() };
        let (prob, beta) = spec.generate(7).unwrap();
        let y = prob.y();
        let n = y.len() as f64;
        let mean = y.sum() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let target = beta.norm_squared() + 1.0;
        // sd(mean) = sqrt(26/20000) ≈ 0.036; sd(var) ≈ target·sqrt(2/n) ≈ 0.26
        assert!(mean.abs() < 4.0 * (target / n).sqrt(), "{mean}");
        assert!((var - target).abs() < 4.0 * target * (2.0 / n).sqrt(), "{var} vs {target}");
    }

    #[test]
    fn toy_truth() {
        let (prob, beta) = WorkingExample::toy().generate(1).unwrap();
        assert_eq!(prob.n_obs(), 100);
        assert_eq!(beta.as_slice(), &[-2.0, 2.0]);
        assert!(WorkingExample { p: 3, ..WorkingExample::default() }.generate(0).is_err());
    }
}
