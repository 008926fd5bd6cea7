//! Numerical certification of the kernel of the linearized Hardy–Sobolev
//! operator around its explicit ground state.
//!
//! The kernel problem splits over spherical harmonics into one-dimensional
//! Schrödinger operators `A_μ = −∂² + q_μ` on the line. [`spectral::analyze`]
//! solves the radial operator once, counts the kernel of every sphere level
//! and checks the result against the closed-form Pöschl–Teller levels of
//! [`oracle`].
//!
//! ```
//! use hardy_kernel::params::{validate_params, ParamMode};
//! use hardy_kernel::spectral::{analyze, SolverConfig, Verdict};
//!
//! let p = validate_params(3, 1.0, 0.0, ParamMode::Theorem)?;
//! let a = analyze(&p, &SolverConfig::default())?;
//! assert_eq!(a.report.verdict, Verdict::VerifiedDim1);
//! # Ok::<(), hardy_kernel::Error>(())
//! ```
//!
//! Modules, in pipeline order:
//!
//! - [`params`]: parameter validation and derived constants.
//! - [`profiles`], [`emden_fowler`]: explicit profiles and the cylinder change of variables.
//! - [`mode_operator`], [`sphere`]: discretized operators and sphere levels.
//! - [`spectral`], [`oracle`]: eigenvalues, kernel counts and their closed forms.
//! - [`lemmas`]: checks of the structural steps behind the count.
//! - [`run`], [`report`]: verification runs, sweeps and their reports.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod emden_fowler;
pub mod error;
pub mod lemmas;
pub mod mode_operator;
pub mod oracle;
pub mod params;
pub mod profiles;
pub mod quadrature;
pub mod report;
pub mod run;
pub mod spectral;
pub mod sphere;

pub use error::{Error, Result};

// The book's snippets run as doctests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/parameters.md")]
    pub mod parameters {}
    #[doc = include_str!("../../../book/src/profiles.md")]
    pub mod profiles {}
    #[doc = include_str!("../../../book/src/mode_operators.md")]
    pub mod mode_operators {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    pub mod spectrum {}
    #[doc = include_str!("../../../book/src/lemmas.md")]
    pub mod lemmas {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
