//! Problem parameters `(n, s, γ)` and the constants derived from them.
//!
//! Every downstream module works from a validated [`ProblemParams`] and its
//! [`DerivedConstants`]. Validation is the only place parameters are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which hypotheses a parameter triple is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    /// Nondegeneracy hypotheses: `γ ≥ 0` and `γ + s > 0`.
    Theorem,
    /// Additionally admits the translation-invariant triple `γ = s = 0`.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: u32,
    pub s: f64,
    pub gamma: f64,
    pub mode: ParamMode,
}

impl ProblemParams {
    /// `(n − 2)² / 4`, the exclusive upper bound for γ.
    pub fn hardy_bound(n: u32) -> f64 {
        let m = f64::from(n) - 2.0;
        m * m / 4.0
    }

    pub fn is_translation_invariant(&self) -> bool {
        self.gamma == 0.0 && self.s == 0.0
    }
}

/// Checks the parameter domain and the mode-specific hypotheses.
pub fn validate_params(n: u32, s: f64, gamma: f64, mode: ParamMode) -> Result<ProblemParams> {
    if n < 3 {
        return Err(Error::InvalidParams(format!("dimension n = {n} must be at least 3")));
    }
    if !s.is_finite() || !(0.0..2.0).contains(&s) {
        return Err(Error::InvalidParams(format!("s = {s} must lie in [0, 2)")));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidParams(format!(
            "gamma = {gamma} is negative; only gamma >= 0 is covered"
        )));
    }
    let bound = ProblemParams::hardy_bound(n);
    if gamma >= bound {
        return Err(Error::InvalidParams(format!(
            "gamma = {gamma} must be below (n-2)^2/4 = {bound}"
        )));
    }
    if mode == ParamMode::Theorem && gamma + s <= 0.0 {
        return Err(Error::InvalidParams(
            "theorem requires γ+s>0; use boundary mode for gamma = s = 0".to_string(),
        ));
    }
    Ok(ProblemParams { n, s, gamma, mode })
}

/// Closed-form constants attached to a parameter triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub n: u32,
    pub s: f64,
    pub gamma: f64,
    /// `√((n−2)²/4 − γ)`
    pub epsilon: f64,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    /// Critical exponent `2(n−s)/(n−2)`.
    pub two_star_s: f64,
    /// Normalisation `4ε²(n−s)/(n−2)` that makes `U` an exact solution.
    pub lambda: f64,
    /// `(2−s)/(n−2)`, the exponent scale of the explicit profiles.
    pub beta: f64,
}

pub fn derive_constants(p: &ProblemParams) -> DerivedConstants {
    let n = f64::from(p.n);
    let half = (n - 2.0) / 2.0;
    let epsilon = (half * half - p.gamma).sqrt();
    let alpha_plus = half + epsilon;
    // α₋ = γ/α₊ avoids the cancellation in `half − epsilon` for small γ.
    let alpha_minus = p.gamma / alpha_plus;
    DerivedConstants {
        n: p.n,
        s: p.s,
        gamma: p.gamma,
        epsilon,
        alpha_minus,
        alpha_plus,
        two_star_s: 2.0 * (n - p.s) / (n - 2.0),
        lambda: 4.0 * epsilon * epsilon * (n - p.s) / (n - 2.0),
        beta: (2.0 - p.s) / (n - 2.0),
    }
}

impl DerivedConstants {
    /// Decay rate `βε` of the profile's sech form.
    pub fn sech_rate(&self) -> f64 {
        self.beta * self.epsilon
    }

    /// Pöschl–Teller index `(n−s)/(2−s) = 1 + 1/β`.
    pub fn ell(&self) -> f64 {
        (f64::from(self.n) - self.s) / (2.0 - self.s)
    }

    /// Coefficient `(2⋆(s)−1)λ` multiplying `Û^{2⋆(s)−2}` in the linearised potential.
    pub fn coupling(&self) -> f64 {
        (self.two_star_s - 1.0) * self.lambda
    }

    /// Essential-spectrum threshold of the mode operator for sphere eigenvalue `mu`.
    pub fn essential_threshold(&self, mu: f64) -> f64 {
        mu + self.epsilon * self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    /// The supersolution `V` is square integrable on the line.
    CaseI,
    /// `γ > 0`, `ε ≤ 1`: `V ∉ L²(0, ∞)`.
    CaseIIa,
    /// `γ = 0`, `s ≥ n/2`: `V ∉ L²(0, ∞)`.
    CaseIIb,
}

pub fn classify_case(p: &ProblemParams) -> CaseTag {
    let c = derive_constants(p);
    let half_n = f64::from(p.n) / 2.0;
    if p.gamma > 0.0 {
        if c.epsilon > 1.0 {
            CaseTag::CaseI
        } else {
            CaseTag::CaseIIa
        }
    } else if p.s < half_n {
        CaseTag::CaseI
    } else {
        CaseTag::CaseIIb
    }
}
