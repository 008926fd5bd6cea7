//! Cylinder (Emden–Fowler) coordinates `x = e^{−t}σ`.
//!
//! A radial function `u(r)` is carried to `û(t) = e^{−(n−2)t/2} u(e^{−t})`.
//! Under this map the Dirichlet energy becomes
//! `|S^{n−1}| ∫ (û′² + (n−2)²/4 û²) dt` and `−Δ` becomes
//! `e^{(n+2)t/2}(−∂_tt + (n−2)²/4)` on radial functions. The checks here
//! evaluate both sides of those identities by independent routes.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode_operator::LineGrid;
use crate::params::DerivedConstants;
use crate::profiles::{u_hat, u_hat_d2};
use crate::quadrature::{integrate, QuadratureSpec};

type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A radial function supported in `[r_lo, r_hi]`, together with its derivative.
#[derive(Clone)]
pub struct RadialTestFunction {
    value: RadialFn,
    derivative: RadialFn,
    r_lo: f64,
    r_hi: f64,
}

impl std::fmt::Debug for RadialTestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialTestFunction")
            .field("support", &(self.r_lo, self.r_hi))
            .finish_non_exhaustive()
    }
}

impl RadialTestFunction {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: (f64, f64),
    ) -> Result<Self> {
        let (r_lo, r_hi) = support;
        if !(r_lo > 0.0 && r_lo < r_hi && r_hi.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "support [{r_lo}, {r_hi}] must satisfy 0 < r_lo < r_hi"
            )));
        }
        Ok(Self { value: Arc::new(value), derivative: Arc::new(derivative), r_lo, r_hi })
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0, |_| 0.0, (0.5, 2.0)).expect("valid support")
    }

    /// `(1 − ((r − center)/half_width)²)^power` on `|r − center| < half_width`.
    pub fn bump(center: f64, half_width: f64, power: i32) -> Result<Self> {
        if power < 2 {
            return Err(Error::InvalidParams("bump power must be at least 2".into()));
        }
        let p = f64::from(power);
        let value = move |r: f64| {
            let x = (r - center) / half_width;
            (1.0 - x * x).powi(power)
        };
        let derivative = move |r: f64| {
            let x = (r - center) / half_width;
            -2.0 * p * x / half_width * (1.0 - x * x).powi(power - 1)
        };
        Self::new(value, derivative, (center - half_width, center + half_width))
    }

    /// `r^exponent`, cut off outside `[r_lo, r_hi]`.
    pub fn power(exponent: f64, r_lo: f64, r_hi: f64) -> Result<Self> {
        Self::new(
            move |r: f64| r.powf(exponent),
            move |r: f64| exponent * r.powf(exponent - 1.0),
            (r_lo, r_hi),
        )
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let (v, d) = (self.value.clone(), self.derivative.clone());
        Self {
            value: Arc::new(move |r| alpha * v(r)),
            derivative: Arc::new(move |r| alpha * d(r)),
            r_lo: self.r_lo,
            r_hi: self.r_hi,
        }
    }

    /// Pointwise sum; the support is the hull of both supports.
    pub fn sum(&self, other: &Self) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let (a2, b2) = (self.clone(), other.clone());
        Self {
            value: Arc::new(move |r| a.eval(r) + b.eval(r)),
            derivative: Arc::new(move |r| a2.derivative(r) + b2.derivative(r)),
            r_lo: self.r_lo.min(other.r_lo),
            r_hi: self.r_hi.max(other.r_hi),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.r_lo, self.r_hi)
    }

    fn inside(&self, r: f64) -> bool {
        r >= self.r_lo && r <= self.r_hi
    }

    pub fn eval(&self, r: f64) -> f64 {
        if self.inside(r) {
            (self.value)(r)
        } else {
            0.0
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if self.inside(r) {
            (self.derivative)(r)
        } else {
            0.0
        }
    }

    /// Image of the support under `t = −ln r`.
    pub fn t_support(&self) -> (f64, f64) {
        (-self.r_hi.ln(), -self.r_lo.ln())
    }
}

/// Area of the unit sphere `S^{n−1}`: `2π^{n/2} / Γ(n/2)`.
pub fn sphere_area(n: u32) -> f64 {
    // Γ(n/2) by the recurrence from Γ(1) or Γ(1/2).
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    let target = f64::from(n) / 2.0;
    while x < target {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(target) / gamma
}

pub fn hat_transform(u: &RadialTestFunction, t: f64, n: u32) -> f64 {
    let a = (f64::from(n) - 2.0) / 2.0;
    (-a * t).exp() * u.eval((-t).exp())
}

/// `∂_t û`, from the chain rule applied to `u′`.
pub fn hat_transform_d1(u: &RadialTestFunction, t: f64, n: u32) -> f64 {
    let a = (f64::from(n) - 2.0) / 2.0;
    let r = (-t).exp();
    -a * hat_transform(u, t, n) - (-a * t).exp() * r * u.derivative(r)
}

/// `B(u, v)` for radial `u, v`, integrated in the cylinder variable.
pub fn b_form(u: &RadialTestFunction, v: &RadialTestFunction, q: &QuadratureSpec, n: u32) -> Result<f64> {
    let (ul, uh) = u.t_support();
    let (vl, vh) = v.t_support();
    let (lo, hi) = (ul.max(vl), uh.min(vh));
    if lo >= hi {
        return Ok(0.0);
    }
    let mass = (f64::from(n) - 2.0).powi(2) / 4.0;
    let integrand = |t: f64| {
        hat_transform_d1(u, t, n) * hat_transform_d1(v, t, n)
            + mass * hat_transform(u, t, n) * hat_transform(v, t, n)
    };
    Ok(sphere_area(n) * integrate(&integrand, lo, hi, q)?)
}

/// `∫_{ℝⁿ} |∇u|² dx` for radial `u`, integrated in `r`.
pub fn dirichlet_energy_radial(u: &RadialTestFunction, q: &QuadratureSpec, n: u32) -> Result<f64> {
    let (lo, hi) = u.support();
    let k = n as i32 - 1;
    let integrand = |r: f64| {
        let d = u.derivative(r);
        d * d * r.powi(k)
    };
    Ok(sphere_area(n) * integrate(&integrand, lo, hi, q)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacianIdentityReport {
    pub h: f64,
    /// Max residual with step `h`.
    pub max_residual: f64,
    /// Max residual with step `h/2`.
    pub max_residual_half: f64,
    /// `max_residual / max_residual_half`; absent when the finer residual is zero.
    pub ratio: Option<f64>,
    /// Max of the pointwise Richardson combination `(4 R_{h/2} − R_h)/3`.
    pub max_extrapolated: f64,
}

fn laplacian_residual(u: &RadialTestFunction, t: f64, n: u32, h: f64) -> f64 {
    let nf = f64::from(n);
    let r = (-t).exp();
    let (um, u0, up) = (u.eval(r - h), u.eval(r), u.eval(r + h));
    let lhs = -(up - 2.0 * u0 + um) / (h * h) - (nf - 1.0) / r * (up - um) / (2.0 * h);
    let (hm, h0, hp) = (hat_transform(u, t - h, n), hat_transform(u, t, n), hat_transform(u, t + h, n));
    let mass = (nf - 2.0).powi(2) / 4.0;
    let rhs = ((nf + 2.0) * t / 2.0).exp() * (-(hp - 2.0 * h0 + hm) / (h * h) + mass * h0);
    lhs - rhs
}

/// Compares `(−Δu)(e^{−t})` with `e^{(n+2)t/2}(−û″ + (n−2)²/4 û)(t)`, both by
/// centred differences, at step `h` and `h/2`.
pub fn check_laplacian_identity(
    u: &RadialTestFunction,
    t_samples: &[f64],
    n: u32,
    h: f64,
) -> Result<LaplacianIdentityReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidParams("finite-difference step must be positive".into()));
    }
    let (lo, hi) = u.support();
    let (tlo, thi) = u.t_support();
    for &t in t_samples {
        let r = (-t).exp();
        if r - h < lo || r + h > hi || t - h < tlo || t + h > thi {
            return Err(Error::Precondition(format!(
                "sample t = {t} (r = {r}) and its stencil must lie inside the support"
            )));
        }
    }
    let mut report = LaplacianIdentityReport {
        h,
        max_residual: 0.0,
        max_residual_half: 0.0,
        ratio: None,
        max_extrapolated: 0.0,
    };
    for &t in t_samples {
        let coarse = laplacian_residual(u, t, n, h);
        let fine = laplacian_residual(u, t, n, h / 2.0);
        report.max_residual = report.max_residual.max(coarse.abs());
        report.max_residual_half = report.max_residual_half.max(fine.abs());
        report.max_extrapolated = report.max_extrapolated.max(((4.0 * fine - coarse) / 3.0).abs());
    }
    if report.max_residual_half > 0.0 {
        report.ratio = Some(report.max_residual / report.max_residual_half);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UEquationReport {
    /// `max |−Û″ + ε²Û − λÛ^{2⋆(s)−1}|` over the samples.
    pub max_residual: f64,
    /// λ recovered from the equation at `t = 0`.
    pub lambda_recomputed: f64,
    pub lambda_error: f64,
}

/// Residual of the profile equation `−Û″ + ε²Û = λÛ^{2⋆(s)−1}`.
pub fn check_u_equation(c: &DerivedConstants, samples: &[f64]) -> UEquationReport {
    let eps2 = c.epsilon * c.epsilon;
    let p = c.two_star_s - 1.0;
    let max_residual = samples
        .iter()
        .map(|&t| {
            let u = u_hat(t, c);
            (-u_hat_d2(t, c) + eps2 * u - c.lambda * u.powf(p)).abs()
        })
        .fold(0.0, f64::max);
    let u0 = u_hat(0.0, c);
    let lambda_recomputed = (-u_hat_d2(0.0, c) + eps2 * u0) / u0.powf(p);
    UEquationReport {
        max_residual,
        lambda_recomputed,
        lambda_error: (lambda_recomputed - c.lambda).abs(),
    }
}

/// Same check sampled on the nodes of a line grid.
pub fn check_u_equation_on_grid(c: &DerivedConstants, grid: &LineGrid) -> UEquationReport {
    check_u_equation(c, grid.nodes())
}
