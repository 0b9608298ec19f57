//! Sparse generalized linear models with per-coefficient penalty weights.
//!
//! The penalized objective is
//! `L(β, θ) + τ Σ λ_p |β_p| + Σ (ρ(λ_p) − ln λ_p)`, minimized jointly over
//! coefficients and weights by the VISTA proximal gradient method
//! ([`vista`]). The [`sbl`] module fits a Laplace variational approximation
//! whose locations are exactly sparse while every scale stays positive.
//!
//! ```
//! use vista_sbl::prox::{prox_vc_l1, ProxQuery};
//!
//! let r = prox_vc_l1(&ProxQuery::new(0.2, 1.0, 0.5, 0.5)?);
//! assert_eq!(r.x_star, 0.0);
//! # Ok::<(), vista_sbl::Error>(())
//! ```

pub mod error;
pub mod glm;
pub mod hyperprior;
pub mod io;
pub mod prox;
pub mod sbl;
pub mod trajectory;
pub mod vista;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/prox.md")]
    struct Prox;
    #[doc = include_str!("../../../book/src/hyperprior.md")]
    struct Hyperprior;
    #[doc = include_str!("../../../book/src/vista.md")]
    struct Vista;
    #[doc = include_str!("../../../book/src/sbl.md")]
    struct Sbl;
    #[doc = include_str!("../../../book/src/trajectory.md")]
    struct Trajectory;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
