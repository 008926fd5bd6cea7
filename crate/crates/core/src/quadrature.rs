//! Composite Newton–Cotes quadrature with panel doubling and a Richardson step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    Trapezoid,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rule: QuadratureRule,
    /// Relative change between successive levels accepted as converged.
    pub refinement_target: f64,
    pub max_levels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule: QuadratureRule::Simpson,
            refinement_target: 1e-9,
            max_levels: 20,
        }
    }
}

const INITIAL_PANELS: usize = 16;

fn composite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize, rule: QuadratureRule) -> f64 {
    let h = (b - a) / panels as f64;
    match rule {
        QuadratureRule::Trapezoid => {
            let inner: f64 = (1..panels).map(|i| f(a + i as f64 * h)).sum();
            h * (0.5 * (f(a) + f(b)) + inner)
        }
        QuadratureRule::Simpson => {
            let mut acc = f(a) + f(b);
            for i in 1..panels {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(a + i as f64 * h);
            }
            acc * h / 3.0
        }
    }
}

/// Integrates `f` over `[a, b]`, doubling panels until two levels agree.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if spec.refinement_target <= 0.0 || spec.refinement_target.is_nan() {
        return Err(Error::InvalidParams("refinement_target must be positive".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let order_factor = match spec.rule {
        QuadratureRule::Trapezoid => 3.0,
        QuadratureRule::Simpson => 15.0,
    };
    let mut panels = INITIAL_PANELS;
    let mut prev = composite(f, a, b, panels, spec.rule);
    let mut last_change = f64::INFINITY;
    for _ in 0..spec.max_levels {
        panels *= 2;
        let next = composite(f, a, b, panels, spec.rule);
        let change = next - prev;
        last_change = change.abs();
        if last_change <= spec.refinement_target * next.abs() || (next == 0.0 && prev == 0.0) {
            return Ok(next + change / order_factor);
        }
        prev = next;
    }
    Err(Error::Quadrature { levels: spec.max_levels, last_change })
}
