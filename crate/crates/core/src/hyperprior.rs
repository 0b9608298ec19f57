//! Hyperpriors on the penalty weight λ and the profiled penalty they induce.
//!
//! Each prior is represented by `ρ(λ) = −log p(λ)` up to an additive constant.
//! Profiling λ out of `τλ|β| − log λ + ρ(λ)` gives a penalty `g_τ(|β|)` whose
//! slope is `τλ*`, where `λ*` solves `λ = 1 / (τ|β| + ρ'(λ))`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BRACKET_LO: f64 = 1e-12;
const LAMBDA_TOL: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HyperPrior {
    /// `p(λ) ∝ 1 / (1 + λ²/a²)` on λ > 0.
    HalfCauchy { scale: f64 },
    /// `p(λ) ∝ exp(−(λ − m)² / b²)` on λ > 0.
    HalfGaussian { location: f64, scale: f64 },
    /// `p(λ) ∝ exp(−λ / a)`.
    Exponential { scale: f64 },
    /// `p(λ) ∝ λ^(−a)`.
    PowerInverse { exponent: f64 },
    Uniform,
}

impl Default for HyperPrior {
    fn default() -> Self {
        HyperPrior::HalfCauchy { scale: 1.0 }
    }
}

impl HyperPrior {
    pub fn half_cauchy(scale: f64) -> Result<Self> {
        positive("half-cauchy scale", scale)?;
        Ok(HyperPrior::HalfCauchy { scale })
    }

    pub fn half_gaussian(location: f64, scale: f64) -> Result<Self> {
        if !location.is_finite() || location < 0.0 {
            return Err(Error::domain(format!(
                "half-gaussian location must be finite and >= 0, got {location}"
            )));
        }
        positive("half-gaussian scale", scale)?;
        Ok(HyperPrior::HalfGaussian { location, scale })
    }

    pub fn exponential(scale: f64) -> Result<Self> {
        positive("exponential scale", scale)?;
        Ok(HyperPrior::Exponential { scale })
    }

    pub fn power_inverse(exponent: f64) -> Result<Self> {
        positive("power-inverse exponent", exponent)?;
        Ok(HyperPrior::PowerInverse { exponent })
    }

    pub fn rho(&self, lambda: f64) -> f64 {
        match *self {
            HyperPrior::HalfCauchy { scale } => (lambda / scale).powi(2).ln_1p(),
            HyperPrior::HalfGaussian { location, scale } => ((lambda - location) / scale).powi(2),
            HyperPrior::Exponential { scale } => lambda / scale,
            HyperPrior::PowerInverse { exponent } => exponent * lambda.ln(),
            HyperPrior::Uniform => 0.0,
        }
    }

    pub fn rho_prime(&self, lambda: f64) -> f64 {
        match *self {
            HyperPrior::HalfCauchy { scale } => 2.0 * lambda / (scale * scale + lambda * lambda),
            HyperPrior::HalfGaussian { location, scale } => 2.0 * (lambda - location) / (scale * scale),
            HyperPrior::Exponential { scale } => 1.0 / scale,
            HyperPrior::PowerInverse { exponent } => exponent / lambda,
            HyperPrior::Uniform => 0.0,
        }
    }

    pub fn rho_double_prime(&self, lambda: f64) -> f64 {
        match *self {
            HyperPrior::HalfCauchy { scale } => {
                let a2 = scale * scale;
                let l2 = lambda * lambda;
                2.0 * (a2 - l2) / (a2 + l2).powi(2)
            }
            HyperPrior::HalfGaussian { scale, .. } => 2.0 / (scale * scale),
            HyperPrior::Exponential { .. } => 0.0,
            HyperPrior::PowerInverse { exponent } => -exponent / (lambda * lambda),
            HyperPrior::Uniform => 0.0,
        }
    }

    /// Whether the penalized objective stays bounded below with this prior.
    ///
    /// With a uniform prior the cost diverges as `(β, λ) → (0, ∞)`; with a
    /// power-inverse prior `a ≠ 1` it diverges at one end of the λ axis, and
    /// at `a = 1` the weights collapse to the unpenalized problem.
    pub fn is_bounded(&self) -> bool {
        match *self {
            HyperPrior::Uniform => false,
            HyperPrior::PowerInverse { exponent } => exponent == 1.0,
            _ => true,
        }
    }

    /// Stationary weight at `β = 0`, solving `1/λ = ρ'(λ)`.
    pub fn lambda_at_zero(&self) -> Result<f64> {
        solve_lambda_star(0.0, 1.0, self).map(|p| p.lambda_star)
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be finite and > 0, got {v}")))
    }
}

impl fmt::Display for HyperPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            HyperPrior::HalfCauchy { scale } => write!(f, "half-cauchy:{scale}"),
            HyperPrior::HalfGaussian { location, scale } => write!(f, "half-gaussian:{location},{scale}"),
            HyperPrior::Exponential { scale } => write!(f, "exponential:{scale}"),
            HyperPrior::PowerInverse { exponent } => write!(f, "power-inverse:{exponent}"),
            HyperPrior::Uniform => write!(f, "uniform"),
        }
    }
}

impl FromStr for HyperPrior {
    type Err = Error;

    /// Parses `half-cauchy:1.0`, `half-gaussian:m,b`, `exponential:a`,
    /// `power-inverse:a` or `uniform`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), a.trim()),
            None => (s.trim(), ""),
        };
        let nums = || -> Result<Vec<f64>> {
            if args.is_empty() {
                return Ok(Vec::new());
            }
            args.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::domain(format!("bad number '{t}' in prior spec '{s}'")))
                })
                .collect()
        };
        let one = |default: f64| -> Result<f64> {
            match nums()?.as_slice() {
                [] => Ok(default),
                [v] => Ok(*v),
                _ => Err(Error::domain(format!("prior spec '{s}' takes one parameter"))),
            }
        };
        match name {
            "half-cauchy" => HyperPrior::half_cauchy(one(1.0)?),
            "exponential" => HyperPrior::exponential(one(1.0)?),
            "power-inverse" => HyperPrior::power_inverse(one(1.0)?),
            "half-gaussian" => match nums()?.as_slice() {
                [m, b] => HyperPrior::half_gaussian(*m, *b),
                _ => Err(Error::domain(format!("prior spec '{s}' needs 'half-gaussian:m,b'"))),
            },
            "uniform" if args.is_empty() => Ok(HyperPrior::Uniform),
            _ => Err(Error::domain(format!("unknown prior spec '{s}'"))),
        }
    }
}

/// `λ*`, the profiled penalty and its first two derivatives at one `|β|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfiledPenaltyPoint {
    pub beta_abs: f64,
    pub tau: f64,
    pub lambda_star: f64,
    pub g_value: f64,
    pub g_prime: f64,
    pub g_double_prime: f64,
}

impl ProfiledPenaltyPoint {
    /// `|λ* − 1/(τ|β| + ρ'(λ*))|`.
    pub fn residual(&self, prior: &HyperPrior) -> f64 {
        (self.lambda_star - 1.0 / (self.tau * self.beta_abs + prior.rho_prime(self.lambda_star))).abs()
    }
}

/// Solves `λ = 1/(τ|β| + ρ'(λ))` by bisection on `h(λ) = λ(τ|β| + ρ'(λ)) − 1`.
pub fn solve_lambda_star(beta_abs: f64, tau: f64, prior: &HyperPrior) -> Result<ProfiledPenaltyPoint> {
    if !(beta_abs.is_finite() && beta_abs >= 0.0) {
        return Err(Error::domain(format!("|beta| must be finite and >= 0, got {beta_abs}")));
    }
    positive("tau", tau)?;
    match *prior {
        HyperPrior::Uniform => {
            return Err(Error::UnboundedObjective(
                "uniform hyperprior gives an unbounded density; no profiled penalty exists".into(),
            ))
        }
        HyperPrior::PowerInverse { exponent } if exponent <= 1.0 => {
            return Err(Error::UnboundedObjective(format!(
                "power-inverse hyperprior with exponent {exponent} <= 1 has no bounded profiled penalty"
            )))
        }
        _ => {}
    }
    let h = |l: f64| l * (tau * beta_abs + prior.rho_prime(l)) - 1.0;
    let mut lo = BRACKET_LO;
    if h(lo) >= 0.0 {
        return Err(Error::numeric(format!(
            "no sign change for lambda* at the lower bracket ({prior}, |beta|={beta_abs}, tau={tau})"
        )));
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while h(hi) <= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::numeric(format!(
                "no bracket for lambda* after {MAX_DOUBLINGS} doublings ({prior}, |beta|={beta_abs}, tau={tau})"
            )));
        }
    }
    for _ in 0..400 {
        if hi - lo <= LAMBDA_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let l = 0.5 * (lo + hi);
    let rp = prior.rho_prime(l);
    let slope = tau * beta_abs + rp;
    Ok(ProfiledPenaltyPoint {
        beta_abs,
        tau,
        lambda_star: l,
        g_value: tau * l * beta_abs - l.ln() + prior.rho(l),
        g_prime: tau * l,
        g_double_prime: -tau * tau / (slope * slope + prior.rho_double_prime(l)),
    })
}

/// The profiled penalty `g_τ(|β|) = min_λ τλ|β| − log λ + ρ(λ)`.
pub fn g_tau(beta_abs: f64, tau: f64, prior: &HyperPrior) -> Result<f64> {
    solve_lambda_star(beta_abs, tau, prior).map(|p| p.g_value)
}

/// One coordinate of an orthogonal linear design: `β̂` is the least-squares
/// estimate and `v = σ²/Σx²` its sampling variance.
#[derive(Debug, Clone, Copy)]
pub struct OrthogonalDesign {
    pub beta_hat: f64,
    pub sum_x_sq: f64,
    pub sigma_sq: f64,
    pub tau: f64,
}

impl OrthogonalDesign {
    fn validate(&self) -> Result<()> {
        if !self.beta_hat.is_finite() {
            return Err(Error::domain("beta_hat must be finite"));
        }
        positive("sum_x_sq", self.sum_x_sq)?;
        positive("sigma_sq", self.sigma_sq)?;
        positive("tau", self.tau)
    }

    fn variance(&self) -> f64 {
        self.sigma_sq / self.sum_x_sq
    }

    /// λ beyond which the coefficient is thresholded to zero.
    pub fn changepoint(&self) -> f64 {
        self.beta_hat.abs() / (self.variance() * self.tau)
    }

    /// Least-squares misfit plus penalty with β profiled out, excluding the
    /// λ-prior terms.
    pub fn profile_misfit(&self, lambda: f64) -> f64 {
        let v = self.variance();
        let b = self.beta_hat.abs();
        if lambda <= self.changepoint() {
            self.tau * lambda * b - 0.5 * v * self.tau * self.tau * lambda * lambda
        } else {
            b * b / (2.0 * v)
        }
    }

    /// Full profile cost `misfit(λ) − log λ + ρ(λ)`.
    pub fn profile_cost(&self, lambda: f64, prior: &HyperPrior) -> f64 {
        self.profile_misfit(lambda) - lambda.ln() + prior.rho(lambda)
    }

    pub fn beta_star(&self, lambda: f64) -> f64 {
        crate::prox::shrink(self.beta_hat, self.variance() * self.tau * lambda)
    }
}

/// Global minimizer `(β*, λ*)` of the orthogonal-design problem under a
/// Half-Gaussian hyperprior, by comparing the closed-form stationary points
/// of the two regions.
pub fn orthogonal_halfgaussian_solution(design: &OrthogonalDesign, location: f64, scale: f64) -> Result<(f64, f64)> {
    design.validate()?;
    let prior = HyperPrior::half_gaussian(location, scale)?;
    let cut = design.changepoint();
    let b2 = scale * scale;
    let mut candidates = Vec::with_capacity(4);

    let upper = 0.5 * (location + (location * location + 2.0 * b2).sqrt());
    if upper >= cut {
        candidates.push(upper);
    }
    // lower region: A λ² + B λ − 1 = 0
    let a = 2.0 / b2 - design.variance() * design.tau * design.tau;
    let b = design.tau * design.beta_hat.abs() - 2.0 * location / b2;
    candidates.extend(quadratic_roots(a, b, -1.0).into_iter().filter(|&l| l > 0.0 && l <= cut));
    if cut > 0.0 {
        candidates.push(cut);
    }
    pick_best(design, &prior, candidates)
}

/// Global minimizer `(β*, λ*)` under a Half-Cauchy(a) hyperprior. The
/// stationarity condition in the lower region is a quartic; its roots are
/// bracketed on a log-spaced scan and refined by bisection.
pub fn orthogonal_halfcauchy_solution(design: &OrthogonalDesign, a_lambda: f64) -> Result<(f64, f64)> {
    design.validate()?;
    let prior = HyperPrior::half_cauchy(a_lambda)?;
    let cut = design.changepoint();
    let v = design.variance();
    let tau = design.tau;
    let b = design.beta_hat.abs();
    let mut candidates = Vec::new();
    if a_lambda >= cut {
        candidates.push(a_lambda);
    }
    if cut > 0.0 {
        candidates.push(cut);
        let deriv = |l: f64| tau * b - v * tau * tau * l - 1.0 / l + prior.rho_prime(l);
        let n = 4000;
        let lo = (cut * 1e-12).max(1e-300);
        let ratio = (cut / lo).powf(1.0 / n as f64);
        let mut prev_l = lo;
        let mut prev_d = deriv(lo);
        for i in 1..=n {
            let l = if i == n { cut } else { lo * ratio.powi(i) };
            let d = deriv(l);
            if prev_d.signum() != d.signum() {
                candidates.push(bisect(deriv, prev_l, l));
            }
            prev_l = l;
            prev_d = d;
        }
    }
    pick_best(design, &prior, candidates)
}

fn pick_best(design: &OrthogonalDesign, prior: &HyperPrior, candidates: Vec<f64>) -> Result<(f64, f64)> {
    let best = candidates
        .into_iter()
        .filter(|l| l.is_finite() && *l > 0.0)
        .map(|l| (design.profile_cost(l, prior), l))
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .ok_or_else(|| Error::numeric("no stationary point found for the orthogonal design"))?;
    Ok((design.beta_star(best.1), best.1))
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() < 1e-300 {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // numerically stable pair
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn priors() -> Vec<HyperPrior> {
        vec![
            HyperPrior::half_cauchy(1.0).unwrap(),
            HyperPrior::half_cauchy(0.3).unwrap(),
            HyperPrior::half_gaussian(0.5, 2.0).unwrap(),
            HyperPrior::exponential(2.0).unwrap(),
            HyperPrior::power_inverse(1.5).unwrap(),
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for prior in priors() {
            for _ in 0..200 {
                let l = 10f64.powf(rng.gen_range(-2.0..2.0));
                let h = 1e-5 * l;
                let fd1 = (prior.rho(l + h) - prior.rho(l - h)) / (2.0 * h);
                let fd2 = (prior.rho_prime(l + h) - prior.rho_prime(l - h)) / (2.0 * h);
                let r1 = prior.rho_prime(l);
                let r2 = prior.rho_double_prime(l);
                assert!((fd1 - r1).abs() <= 1e-6 * r1.abs().max(1e-3), "{prior} {l} {fd1} {r1}");
                assert!((fd2 - r2).abs() <= 1e-6 * r2.abs().max(1e-3), "{prior} {l} {fd2} {r2}");
            }
        }
    }

    #[test]
    fn half_cauchy_slope_bounded() {
        let p = HyperPrior::half_cauchy(0.7).unwrap();
        for i in 0..1000 {
            let l = 0.001 * i as f64 * 3.0;
            assert!(p.rho_prime(l) <= 1.0 / 0.7 + 1e-12);
        }
        assert!((p.rho_prime(0.7) - 1.0 / 0.7).abs() < 1e-12);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["half-cauchy:1", "half-gaussian:0.5,2", "exponential:3", "power-inverse:1.5", "uniform"] {
            let p: HyperPrior = s.parse().unwrap();
            let q: HyperPrior = p.to_string().parse().unwrap();
            assert_eq!(p, q);
        }
        assert_eq!("half-cauchy".parse::<HyperPrior>().unwrap(), HyperPrior::default());
        assert!("half-cauchy:-1".parse::<HyperPrior>().is_err());
        assert!("half-gaussian:1".parse::<HyperPrior>().is_err());
        assert!("laplace:1".parse::<HyperPrior>().is_err());
        assert!(!HyperPrior::Uniform.is_bounded());
        assert!(!HyperPrior::power_inverse(0.5).unwrap().is_bounded());
        assert!(HyperPrior::default().is_bounded());
    }

    #[test]
    fn exponential_fixed_points() {
        let p = HyperPrior::exponential(1.0).unwrap();
        let pt = solve_lambda_star(1.0, 1.0, &p).unwrap();
        assert!((pt.lambda_star - 0.5).abs() < 1e-11);
        assert!((pt.g_prime - 0.5).abs() < 1e-11);
        let pt = solve_lambda_star(0.0, 1.0, &p).unwrap();
        assert!((pt.lambda_star - 1.0).abs() < 1e-11);
        assert!((pt.g_prime - 1.0).abs() < 1e-11);
        assert!((pt.g_value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn half_cauchy_fixed_point_matches_dense_grid() {
        let p = HyperPrior::half_cauchy(1.0).unwrap();
        let pt = solve_lambda_star(2.0, 1.0, &p).unwrap();
        // grid minimization of τλ|β| − log λ + ρ(λ) over (1e-6, 50)
        let n = 1_000_000;
        let (lo, hi) = (1e-6f64, 50.0f64);
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..n {
            let l = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let c = 2.0 * l - l.ln() + p.rho(l);
            if c < best.0 {
                best = (c, l);
            }
        }
        let spacing = (hi - lo) / (n - 1) as f64;
        assert!((pt.lambda_star - best.1).abs() <= spacing, "{} vs {}", pt.lambda_star, best.1);
        assert!(pt.g_value <= best.0 + 1e-12);
        let l = pt.lambda_star;
        assert!((l * (2.0 + 2.0 * l / (1.0 + l * l)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unbounded_priors_rejected() {
        assert!(matches!(
            solve_lambda_star(1.0, 1.0, &HyperPrior::Uniform),
            Err(Error::UnboundedObjective(_))
        ));
        assert!(matches!(
            solve_lambda_star(1.0, 1.0, &HyperPrior::power_inverse(0.5).unwrap()),
            Err(Error::UnboundedObjective(_))
        ));
        assert!(matches!(
            solve_lambda_star(1.0, 1.0, &HyperPrior::power_inverse(2.0).unwrap()),
            Err(Error::Numeric(_))
        ));
        assert!(solve_lambda_star(-1.0, 1.0, &HyperPrior::default()).is_err());
        assert!(solve_lambda_star(1.0, 0.0, &HyperPrior::default()).is_err());
    }

    #[test]
    fn slope_decays_like_inverse_beta() {
        let p = HyperPrior::half_cauchy(1.0).unwrap();
        let pt = solve_lambda_star(100.0, 1.0, &p).unwrap();
        assert!((pt.g_prime - 0.01).abs() <= 0.02 * 0.01);
        for prior in [HyperPrior::half_cauchy(1.0).unwrap(), HyperPrior::exponential(1.0).unwrap()] {
            for b in [1e2, 1e3, 1e4] {
                let pt = solve_lambda_star(b, 1.0, &prior).unwrap();
                assert!((pt.g_prime * b - 1.0).abs() < 0.05);
            }
        }
    }

    #[test]
    fn g_derivatives_match_finite_differences() {
        for prior in [
            HyperPrior::half_cauchy(1.0).unwrap(),
            HyperPrior::exponential(1.0).unwrap(),
            HyperPrior::half_gaussian(0.5, 1.5).unwrap(),
        ] {
            for &(b, tau) in &[(0.3, 1.0), (2.0, 0.5), (10.0, 3.0), (50.0, 1.0)] {
                let pt = solve_lambda_star(b, tau, &prior).unwrap();
                let h = 1e-4 * b;
                let gp = g_tau(b + h, tau, &prior).unwrap();
                let gm = g_tau(b - h, tau, &prior).unwrap();
                let fd1 = (gp - gm) / (2.0 * h);
                assert!((fd1 - pt.g_prime).abs() <= 1e-4 * pt.g_prime.abs(), "{prior} {b} {tau}");
                let h2 = 1e-3 * b;
                let fd2 = (g_tau(b + h2, tau, &prior).unwrap() - 2.0 * pt.g_value
                    + g_tau(b - h2, tau, &prior).unwrap())
                    / (h2 * h2);
                assert!(
                    (fd2 - pt.g_double_prime).abs() <= 1e-3 * pt.g_double_prime.abs(),
                    "{prior} b={b} tau={tau}: {fd2} vs {}",
                    pt.g_double_prime
                );
            }
        }
    }

    #[test]
    fn orthogonal_zero_estimate() {
        let d = OrthogonalDesign { beta_hat: 0.0, sum_x_sq: 100.0, sigma_sq: 1.0, tau: 2.0 };
        let (b, l) = orthogonal_halfgaussian_solution(&d, 0.0, 2f64.sqrt()).unwrap();
        assert_eq!(b, 0.0);
        assert!((l - 1.0).abs() < 1e-12);
        let (b, l) = orthogonal_halfgaussian_solution(&d, 0.7, 1.3).unwrap();
        assert_eq!(b, 0.0);
        assert!((l - 0.5 * (0.7 + (0.49f64 + 2.0 * 1.69).sqrt())).abs() < 1e-12);
        let (b, l) = orthogonal_halfcauchy_solution(&d, 1.7).unwrap();
        assert_eq!(b, 0.0);
        assert!((l - 1.7).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_halfcauchy_large_estimate_is_unshrunk() {
        let d = OrthogonalDesign { beta_hat: 25.0, sum_x_sq: 250.0, sigma_sq: 1.0, tau: 1.0 };
        let (b, _) = orthogonal_halfcauchy_solution(&d, 1.0).unwrap();
        assert!((b - 25.0).abs() < 1e-3 * 25.0);
    }

    fn grid_argmin(d: &OrthogonalDesign, prior: &HyperPrior) -> (f64, f64, f64) {
        // joint cost with β set by soft thresholding, λ on a 10⁶ log grid
        let n = 1_000_000;
        let (lo, hi) = (1e-6f64.ln(), 1e3f64.ln());
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..n {
            let l = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
            let beta = d.beta_star(l);
            let v = d.sigma_sq / d.sum_x_sq;
            let c = (beta - d.beta_hat).powi(2) / (2.0 * v) + d.tau * l * beta.abs() - l.ln() + prior.rho(l);
            if c < best.0 {
                best = (c, beta, l);
            }
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn orthogonal_solutions_match_grid(bh in -4.0..4.0f64, sxx in 5.0..300.0f64, s2 in 0.2..3.0f64,
                                           tau in 0.1..20.0f64, m in 0.0..2.0f64, b in 0.2..3.0f64, a in 0.2..3.0f64) {
            let d = OrthogonalDesign { beta_hat: bh, sum_x_sq: sxx, sigma_sq: s2, tau };
            let step = (1e3f64.ln() - 1e-6f64.ln()) / 999_999.0;

            let hg = HyperPrior::half_gaussian(m, b).unwrap();
            let (bs, ls) = orthogonal_halfgaussian_solution(&d, m, b).unwrap();
            let (cg, _, lg) = grid_argmin(&d, &hg);
            prop_assert!(d.profile_cost(ls, &hg) <= cg + 1e-9);
            prop_assert!((ls.ln() - lg.ln()).abs() <= 2.0 * step || (d.profile_cost(ls, &hg) - cg).abs() < 1e-9);
            prop_assert_eq!(bs, d.beta_star(ls));

            let hc = HyperPrior::half_cauchy(a).unwrap();
            let (_, ls) = orthogonal_halfcauchy_solution(&d, a).unwrap();
            let (cg, _, lg) = grid_argmin(&d, &hc);
            prop_assert!(d.profile_cost(ls, &hc) <= cg + 1e-9);
            prop_assert!((ls.ln() - lg.ln()).abs() <= 2.0 * step || (d.profile_cost(ls, &hc) - cg).abs() < 1e-9);
        }
    }
}
