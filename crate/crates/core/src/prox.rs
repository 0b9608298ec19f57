//! Soft thresholding and the variable-coefficient ℓ1 proximal operator.
//!
//! The variable-coefficient penalty `g(x, λ) = λ|x|` is treated as a function
//! of both the coefficient `x` and its (nonnegative) weight `λ`. Its proximal
//! program, for steps `s_x, s_λ > 0`, is
//!
//! ```text
//! argmin_{x ∈ ℝ, λ ≥ 0}  λ|x| + (x − x₀)² / 2s_x + (λ − λ₀)² / 2s_λ
//! ```
//!
//! Profiling `x` out with the soft-thresholding operator leaves a piecewise
//! quadratic in `λ` with a changepoint at `λ = |x₀|/s_x`. When `s_x s_λ < 1`
//! both pieces are convex and the minimizer is unique and continuous in the
//! inputs; otherwise the lower piece is concave and the minimizer jumps between
//! `λ = 0` and `λ = λ₀`, with two global optima on the switching surface.

use serde::Serialize;

use crate::error::{Error, Result};

/// Magnitude below which a negative `λ₀` is treated as floating-point drift.
pub const LAMBDA_DRIFT: f64 = 1e-12;

/// Exact soft-thresholding `(|x| − t)⁺ · sgn(x)`.
pub fn soft_threshold(x: f64, threshold: f64) -> Result<f64> {
    if !x.is_finite() || !threshold.is_finite() {
        return Err(Error::domain(format!(
            "soft_threshold requires finite inputs, got x={x}, threshold={threshold}"
        )));
    }
    if threshold < 0.0 {
        return Err(Error::domain(format!(
            "soft_threshold requires threshold >= 0, got {threshold}"
        )));
    }
    Ok(shrink(x, threshold))
}

#[inline]
pub(crate) fn shrink(x: f64, threshold: f64) -> f64 {
    if x > threshold {
        x - threshold
    } else if x < -threshold {
        x + threshold
    } else {
        0.0
    }
}

/// Inputs of the biconvex proximal program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxQuery {
    x0: f64,
    lambda0: f64,
    s_x: f64,
    s_lambda: f64,
}

impl ProxQuery {
    /// Validates the query. A `λ₀` that is negative by less than
    /// [`LAMBDA_DRIFT`] is clamped to zero.
    pub fn new(x0: f64, lambda0: f64, s_x: f64, s_lambda: f64) -> Result<Self> {
        if !(x0.is_finite() && lambda0.is_finite() && s_x.is_finite() && s_lambda.is_finite()) {
            return Err(Error::domain(format!(
                "prox query must be finite: x0={x0}, lambda0={lambda0}, s_x={s_x}, s_lambda={s_lambda}"
            )));
        }
        if s_x <= 0.0 || s_lambda <= 0.0 {
            return Err(Error::domain(format!(
                "prox step sizes must be positive: s_x={s_x}, s_lambda={s_lambda}"
            )));
        }
        let lambda0 = if lambda0 < 0.0 {
            if lambda0 > -LAMBDA_DRIFT {
                0.0
            } else {
                return Err(Error::domain(format!(
                    "prox query requires lambda0 >= 0, got {lambda0}"
                )));
            }
        } else {
            lambda0
        };
        Ok(Self {
            x0,
            lambda0,
            s_x,
            s_lambda,
        })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn s_x(&self) -> f64 {
        self.s_x
    }

    pub fn s_lambda(&self) -> f64 {
        self.s_lambda
    }

    /// Step-size product `s_x · s_λ`; the operator is single valued below 1.
    pub fn step_product(&self) -> f64 {
        self.s_x * self.s_lambda
    }
}

/// Output of [`prox_vc_l1`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProxResult {
    pub x_star: f64,
    pub lambda_star: f64,
    /// The program has two global optima; `lambda_star = λ₀` was reported.
    pub tie: bool,
}

/// Proximal operator of `λ|x|` jointly in `(x, λ)`.
///
/// At a tie (only possible when `s_x s_λ ≥ 1`) the optimum that keeps the
/// penalty alive, `λ* = λ₀`, is returned and `tie` is set.
pub fn prox_vc_l1(q: &ProxQuery) -> ProxResult {
    let ax = q.x0.abs();
    let (lambda_star, tie) = if q.step_product() < 1.0 {
        if q.lambda0 >= ax / q.s_x {
            (q.lambda0, false)
        } else {
            let num = (q.lambda0 - q.s_lambda * ax).max(0.0);
            (num / (1.0 - q.step_product()), false)
        }
    } else {
        let lhs = q.lambda0 / q.s_lambda.sqrt();
        let rhs = ax / q.s_x.sqrt();
        if lhs > rhs {
            (q.lambda0, false)
        } else if lhs < rhs {
            (0.0, false)
        } else {
            (q.lambda0, true)
        }
    };
    ProxResult {
        x_star: shrink(q.x0, q.s_x * lambda_star),
        lambda_star,
        tie,
    }
}

/// Coordinatewise [`prox_vc_l1`]. Returns `(x*, λ*)`.
pub fn prox_vc_l1_vec(
    x0: &[f64],
    lambda0: &[f64],
    s_x: &[f64],
    s_lambda: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = x0.len();
    if lambda0.len() != p || s_x.len() != p || s_lambda.len() != p {
        return Err(Error::domain(format!(
            "prox_vc_l1_vec length mismatch: x0={}, lambda0={}, s_x={}, s_lambda={}",
            p,
            lambda0.len(),
            s_x.len(),
            s_lambda.len()
        )));
    }
    let mut xs = Vec::with_capacity(p);
    let mut ls = Vec::with_capacity(p);
    for i in 0..p {
        let r = prox_vc_l1(&ProxQuery::new(x0[i], lambda0[i], s_x[i], s_lambda[i])?);
        xs.push(r.x_star);
        ls.push(r.lambda_star);
    }
    Ok((xs, ls))
}

/// The proximal objective `λ|x| + (x − x₀)²/2s_x + (λ − λ₀)²/2s_λ`.
pub fn prox_cost(x: f64, lambda: f64, q: &ProxQuery) -> Result<f64> {
    if lambda < 0.0 || !lambda.is_finite() || !x.is_finite() {
        return Err(Error::domain(format!(
            "prox_cost requires finite x and lambda >= 0, got x={x}, lambda={lambda}"
        )));
    }
    let dx = x - q.x0;
    let dl = lambda - q.lambda0;
    Ok(lambda * x.abs() + dx * dx / (2.0 * q.s_x) + dl * dl / (2.0 * q.s_lambda))
}

/// Optimal `λ` as a function of `λ₀`, `a = |x₀|/s_x` and `b = s_x s_λ < 1`.
pub fn reduced_prox_lambda(lambda0: f64, a: f64, b: f64) -> Result<f64> {
    if !(lambda0.is_finite() && a.is_finite() && b.is_finite()) || lambda0 < 0.0 || a < 0.0 {
        return Err(Error::domain(format!(
            "reduced prox requires finite lambda0 >= 0 and a >= 0, got lambda0={lambda0}, a={a}"
        )));
    }
    if !(0.0..1.0).contains(&b) {
        return Err(Error::domain(format!(
            "reduced prox requires b in [0, 1), got {b}; use prox_vc_l1 for b >= 1"
        )));
    }
    if lambda0 >= a {
        Ok(lambda0)
    } else {
        Ok((lambda0 - a * b).max(0.0) / (1.0 - b))
    }
}

/// Brute-force minimum of [`prox_cost`] over an `n × n` lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeMin {
    pub cost: f64,
    pub x: f64,
    pub lambda: f64,
    pub x_spacing: f64,
    pub lambda_spacing: f64,
}

/// Exact minimum of `prox_cost` over the lattice `[x_lo, x_hi] × [0, l_hi]`
/// with `n × n` points. For a fixed lattice λ the cost is convex in x, so the
/// inner minimum is found by discrete ternary search over lattice indices.
pub fn lattice_min(q: &ProxQuery, x_lo: f64, x_hi: f64, l_hi: f64, n: usize) -> Result<LatticeMin> {
    if n < 2 || !(x_lo < x_hi) || !(l_hi > 0.0) || !x_hi.is_finite() || !x_lo.is_finite() || !l_hi.is_finite() {
        return Err(Error::domain(format!(
            "lattice needs n >= 2 and non-degenerate finite bounds, got n={n}, x in [{x_lo}, {x_hi}], lambda in [0, {l_hi}]"
        )));
    }
    let hx = (x_hi - x_lo) / (n - 1) as f64;
    let hl = l_hi / (n - 1) as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for j in 0..n {
        let l = j as f64 * hl;
        let f = |i: usize| {
            let x = x_lo + i as f64 * hx;
            prox_cost(x, l, q)
        };
        let (mut lo, mut hi) = (0usize, n - 1);
        while hi - lo > 2 {
            let m1 = lo + (hi - lo) / 3;
            let m2 = hi - (hi - lo) / 3;
            if f(m1)? <= f(m2)? {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        for i in lo..=hi {
            let c = f(i)?;
            if c < best.0 {
                best = (c, x_lo + i as f64 * hx, l);
            }
        }
    }
    Ok(LatticeMin {
        cost: best.0,
        x: best.1,
        lambda: best.2,
        x_spacing: hx,
        lambda_spacing: hl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(2.5, 1.0).unwrap(), 1.5);
        assert_eq!(soft_threshold(0.5, 1.0).unwrap(), 0.0);
        assert_eq!(soft_threshold(-3.0, 2.0).unwrap(), -1.0);
        assert!(soft_threshold(f64::NAN, 1.0).is_err());
        assert!(soft_threshold(1.0, f64::INFINITY).is_err());
        assert!(soft_threshold(1.0, -0.1).is_err());
    }

    #[test]
    fn prox_examples_against_lattice() {
        let cases = [
            ((1.0, 0.8, 0.5, 0.5), (0.8, 0.4)),
            ((2.0, 0.5, 1.0, 0.25), (2.0, 0.0)),
            ((1.0, 2.0, 1.0, 0.5), (0.0, 2.0)),
        ];
        for ((x0, l0, sx, sl), (xs, ls)) in cases {
            let q = ProxQuery::new(x0, l0, sx, sl).unwrap();
            let r = prox_vc_l1(&q);
            assert!((r.x_star - xs).abs() < 1e-12, "{r:?}");
            assert!((r.lambda_star - ls).abs() < 1e-12, "{r:?}");
            assert!(!r.tie);
            let m = lattice_min(&q, -3.0, 3.0, 3.0, 2001).unwrap();
            let (cmin, xg, lg) = (m.cost, m.x, m.lambda);
            let c = prox_cost(r.x_star, r.lambda_star, &q).unwrap();
            assert!(c <= cmin + 1e-9);
            assert!((xg - xs).abs() <= 0.003 + 1e-12 && (lg - ls).abs() <= 0.0015 + 1e-12);
        }
    }

    #[test]
    fn two_optima_case() {
        let q = ProxQuery::new(1.0, 1.0, 2.0, 2.0).unwrap();
        let r = prox_vc_l1(&q);
        assert!(r.tie);
        assert_eq!((r.x_star, r.lambda_star), (0.0, 1.0));
        let a = prox_cost(0.0, 1.0, &q).unwrap();
        let b = prox_cost(1.0, 0.0, &q).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn nonconvex_regime_matches_lattice() {
        // s_x s_λ >= 1: the minimizer is 0 or λ₀
        for &(x0, l0, sx, sl) in &[(1.5, 1.0, 2.0, 1.0), (0.4, 1.2, 1.5, 1.5), (-2.0, 0.3, 1.0, 1.0)] {
            let q = ProxQuery::new(x0, l0, sx, sl).unwrap();
            let r = prox_vc_l1(&q);
            let cmin = lattice_min(&q, -3.0, 3.0, 3.0, 1201).unwrap().cost;
            assert!(prox_cost(r.x_star, r.lambda_star, &q).unwrap() <= cmin + 1e-9);
        }
    }

    #[test]
    fn query_validation() {
        assert!(ProxQuery::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(ProxQuery::new(1.0, 1.0, 1.0, -1.0).is_err());
        assert!(ProxQuery::new(f64::NAN, 1.0, 1.0, 1.0).is_err());
        assert!(ProxQuery::new(1.0, -1e-6, 1.0, 1.0).is_err());
        let q = ProxQuery::new(1.0, -1e-14, 1.0, 1.0).unwrap();
        assert_eq!(q.lambda0(), 0.0);
    }

    #[test]
    fn prox_cost_examples() {
        let q = ProxQuery::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(prox_cost(0.0, 0.0, &q).unwrap(), 1.0);
        let q = ProxQuery::new(-1.7, 0.6, 0.3, 0.9).unwrap();
        assert!((prox_cost(-1.7, 0.6, &q).unwrap() - 0.6 * 1.7).abs() < 1e-15);
        assert!(prox_cost(0.0, -1.0, &q).is_err());
    }

    #[test]
    fn reduced_prox_examples() {
        assert_eq!(reduced_prox_lambda(2.0, 1.0, 0.5).unwrap(), 2.0);
        assert!((reduced_prox_lambda(0.8, 2.0, 0.25).unwrap() - 0.4).abs() < 1e-15);
        let q = ProxQuery::new(1.0, 0.8, 0.5, 0.5).unwrap();
        assert!((prox_vc_l1(&q).lambda_star - 0.4).abs() < 1e-15);
        assert!((reduced_prox_lambda(0.7, 2.0, 1e-12).unwrap() - 0.7).abs() < 1e-9);
        assert!(reduced_prox_lambda(0.7, 2.0, 1.0).is_err());
    }

    #[test]
    fn vec_matches_scalar_and_validates() {
        let (x, l) = prox_vc_l1_vec(&[0.0, 0.0], &[0.3, 2.0], &[1.0, 0.5], &[0.2, 0.1]).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(l, vec![0.3, 2.0]);
        assert!(prox_vc_l1_vec(&[1.0], &[1.0, 2.0], &[1.0], &[1.0]).is_err());

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 50;
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let l0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
        let sx: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let sl: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let (xv, lv) = prox_vc_l1_vec(&x0, &l0, &sx, &sl).unwrap();
        for i in 0..n {
            let r = prox_vc_l1(&ProxQuery::new(x0[i], l0[i], sx[i], sl[i]).unwrap());
            assert_eq!(r.x_star.to_bits(), xv[i].to_bits());
            assert_eq!(r.lambda_star.to_bits(), lv[i].to_bits());
        }
    }

    proptest! {
        #[test]
        fn result_invariants(x0 in -3.0..3.0f64, l0 in 0.0..3.0f64, sx in 0.05..3.0f64, sl in 0.05..3.0f64) {
            let q = ProxQuery::new(x0, l0, sx, sl).unwrap();
            let r = prox_vc_l1(&q);
            prop_assert!(r.lambda_star >= 0.0);
            prop_assert!(r.x_star.abs() <= x0.abs());
            prop_assert!(r.x_star == 0.0 || r.x_star.signum() == x0.signum());
            prop_assert_eq!(r.x_star, shrink(x0, sx * r.lambda_star));
        }

        #[test]
        fn lipschitz_in_inputs(x0 in -3.0..3.0f64, l0 in 0.0..3.0f64, sx in 0.05..1.0f64, sl in 0.05..1.0f64,
                               dx in -0.05..0.05f64, dl in -0.05..0.05f64) {
            // with unit-bounded steps, |∂λ*/∂λ₀| + |∂λ*/∂x₀| <= 2/(1 − s_x s_λ)
            prop_assume!(sx * sl < 0.95);
            let q1 = ProxQuery::new(x0, l0, sx, sl).unwrap();
            let q2 = ProxQuery::new(x0 + dx, (l0 + dl).max(0.0), sx, sl).unwrap();
            let (r1, r2) = (prox_vc_l1(&q1), prox_vc_l1(&q2));
            let din = (q2.x0() - q1.x0()).abs().max((q2.lambda0() - q1.lambda0()).abs());
            let lip = 2.0 / (1.0 - sx * sl);
            prop_assert!((r1.lambda_star - r2.lambda_star).abs() <= lip * din + 1e-12);
            prop_assert!((r1.x_star - r2.x_star).abs() <= lip * (1.0 + sx) * din + 1e-12);
        }

        #[test]
        fn thresholded_point_is_fixed(x0 in -3.0..3.0f64, sx in 0.05..2.0f64, frac in 0.01..0.95f64, extra in 0.0..2.0f64) {
            let sl = frac / sx;
            let l0 = x0.abs() / sx + extra;
            let r = prox_vc_l1(&ProxQuery::new(x0, l0, sx, sl).unwrap());
            prop_assert_eq!(r.lambda_star, l0);
            prop_assert_eq!(r.x_star, 0.0);
            let r2 = prox_vc_l1(&ProxQuery::new(r.x_star, r.lambda_star, sx, sl).unwrap());
            prop_assert_eq!((r2.x_star, r2.lambda_star), (0.0, l0));
        }
    }
}
