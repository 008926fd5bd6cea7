//! Closed-form evaluators for the explicit profiles.
//!
//! In the radial variable `r = |x|` the ground state is
//! `U(r) = (r^{βα₋} + r^{βα₊})^{−1/β}`. After the substitution `r = e^{−t}`
//! and the weight `e^{−(n−2)t/2}` it becomes the even profile
//! `Û(t) = (2 cosh(βεt))^{−1/β}`. All `t`-space evaluators go through
//! logarithms so that they neither overflow nor lose evenness for large `|t|`.

use crate::error::{Error, Result};
use crate::params::DerivedConstants;

/// `ln(2 cosh x)` without overflow.
pub(crate) fn log_2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// `sech²(x)` without overflow.
pub(crate) fn sech2(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// `ln(1 + e^y)`.
pub(crate) fn softplus(y: f64) -> f64 {
    y.max(0.0) + (-y.abs()).exp().ln_1p()
}

/// `1 / (1 + e^{−y})`.
pub(crate) fn logistic(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

/// Radial ground state `U(r)`.
pub fn eval_u(r: f64, c: &DerivedConstants) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!("radius r = {r} must be positive")));
    }
    let sum = r.powf(c.beta * c.alpha_minus) + r.powf(c.beta * c.alpha_plus);
    Ok(sum.powf(-1.0 / c.beta))
}

/// `U′(r)`, differentiated directly in the radial variable.
pub fn eval_u_prime(r: f64, c: &DerivedConstants) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!("radius r = {r} must be positive")));
    }
    let (am, ap, b) = (c.alpha_minus, c.alpha_plus, c.beta);
    let sum = r.powf(b * am) + r.powf(b * ap);
    let inner = am * r.powf(b * am - 1.0) + ap * r.powf(b * ap - 1.0);
    Ok(-sum.powf(-1.0 / b - 1.0) * inner)
}

/// `ln Û(t)`.
pub fn ln_u_hat(t: f64, c: &DerivedConstants) -> f64 {
    -log_2cosh(c.sech_rate() * t) / c.beta
}

/// `Û(t)`; exactly even in `t`.
pub fn u_hat(t: f64, c: &DerivedConstants) -> f64 {
    ln_u_hat(t, c).exp()
}

/// `Û′(t) = −ε tanh(βεt) Û(t)`.
pub fn u_hat_d1(t: f64, c: &DerivedConstants) -> f64 {
    -c.epsilon * (c.sech_rate() * t).tanh() * u_hat(t, c)
}

/// `Û″(t) = Û(t) (ε² tanh²(βεt) − βε² sech²(βεt))`.
pub fn u_hat_d2(t: f64, c: &DerivedConstants) -> f64 {
    let x = c.sech_rate() * t;
    let th = x.tanh();
    let eps = c.epsilon;
    u_hat(t, c) * (eps * eps * th * th - eps * c.sech_rate() * sech2(x))
}

/// Dispatches on derivative order 0, 1 or 2.
///
/// Panics for any other order.
pub fn eval_u_hat(t: f64, c: &DerivedConstants, order: u8) -> f64 {
    match order {
        0 => u_hat(t, c),
        1 => u_hat_d1(t, c),
        2 => u_hat_d2(t, c),
        _ => panic!("eval_u_hat supports derivative orders 0..=2, got {order}"),
    }
}

/// Scaling generator in cylinder coordinates, `Ẑ = −Û′`.
pub fn z_hat(t: f64, c: &DerivedConstants) -> f64 {
    -u_hat_d1(t, c)
}

/// Logarithmic derivatives of `V`: returns `(ln V, (ln V)′, (ln V)″)`.
pub(crate) fn v_log_parts(t: f64, c: &DerivedConstants) -> (f64, f64, f64) {
    let a = c.sech_rate();
    let ell = c.ell();
    let x2 = 2.0 * a * t;
    let (ln_front, p) = if c.alpha_minus > 0.0 {
        let shift = (c.alpha_minus / c.alpha_plus).ln();
        (c.alpha_plus.ln() + softplus(x2 + shift), logistic(x2 + shift))
    } else {
        (c.alpha_plus.ln(), 0.0)
    };
    let sig = logistic(x2);
    let ln_v = (1.0 + c.epsilon) * t + ln_front - ell * softplus(x2);
    let d1 = (1.0 + c.epsilon) + 2.0 * a * p - 2.0 * a * ell * sig;
    let d2 = 4.0 * a * a * (p * (1.0 - p) - ell * sig * (1.0 - sig));
    (ln_v, d1, d2)
}

/// `ln V(t)`; finite for every `t`, unlike `V` itself in the growing cases.
pub fn ln_v(t: f64, c: &DerivedConstants) -> f64 {
    v_log_parts(t, c).0
}

/// The positive supersolution
/// `V(t) = e^{(1+ε)t} (α₊ + α₋e^{2βεt}) (1 + e^{2βεt})^{−(n−s)/(2−s)}`.
pub fn eval_v(t: f64, c: &DerivedConstants) -> f64 {
    ln_v(t, c).exp()
}

/// `V(t) = −e^{−(n−2)t/2} U′(e^{−t})`, evaluated through the radial derivative.
pub fn eval_v_composition(t: f64, c: &DerivedConstants) -> f64 {
    let weight = (-(f64::from(c.n) - 2.0) * t / 2.0).exp();
    -weight * eval_u_prime((-t).exp(), c).expect("e^{-t} > 0")
}

pub fn eval_v_d1(t: f64, c: &DerivedConstants) -> f64 {
    let (l, d1, _) = v_log_parts(t, c);
    l.exp() * d1
}

pub fn eval_v_d2(t: f64, c: &DerivedConstants) -> f64 {
    let (l, d1, d2) = v_log_parts(t, c);
    l.exp() * (d2 + d1 * d1)
}
