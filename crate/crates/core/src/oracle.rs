//! Closed-form bound states of `A_0`.
//!
//! With `τ = βεt` the radial operator reads
//! `A_0 = (βε)² (−∂_ττ − ℓ(ℓ+1) sech²τ) + ε²`, a Pöschl–Teller operator with
//! `ℓ = (n−s)/(2−s)`. Its bound states are `E_k = ε² − (βε)²(ℓ−k)²` for
//! integers `0 ≤ k < ℓ`. Because `β(ℓ−1) = 1`, `E_1 = 0` for every triple:
//! that level is the scaling mode `−Û′`.
//!
//! This reduction is independent verification mathematics. The discrete
//! solver never consults it; the two are only compared.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lemmas::{fit_line, DecayFit};
use crate::mode_operator::LineGrid;
use crate::params::DerivedConstants;
use crate::profiles::z_hat;
use crate::spectral::{discrete_l2_norm, normalize_and_fix_sign, ModeSpectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpectrum {
    pub ell: f64,
    pub levels: Vec<f64>,
    /// `E_0 + (n − 1)`.
    pub margin: f64,
}

pub fn oracle_spectrum(c: &DerivedConstants) -> OracleSpectrum {
    let ell = c.ell();
    let rate = c.sech_rate();
    let eps2 = c.epsilon * c.epsilon;
    let levels: Vec<f64> = (0..)
        .map(f64::from)
        .take_while(|&k| k < ell)
        .map(|k| eps2 - rate * rate * (ell - k) * (ell - k))
        .collect();
    let margin = levels[0] + (f64::from(c.n) - 1.0);
    OracleSpectrum { ell, levels, margin }
}

/// Depth of the `sech²` well in units of `(βε)²`, computed from the coupling.
pub fn well_depth_from_coupling(c: &DerivedConstants) -> f64 {
    let rate = c.sech_rate();
    c.coupling() / (4.0 * rate * rate)
}

/// The same depth from the closed form `(n+2−2s)(n−s)/(2−s)²`.
pub fn well_depth_closed_form(n: u32, s: f64) -> f64 {
    let n = f64::from(n);
    (n + 2.0 - 2.0 * s) * (n - s) / ((2.0 - s) * (2.0 - s))
}

/// `(n−1) − ε²(((n−s)/(n−2))² − 1)`: the lowest eigenvalue of `A_{n−1}`.
pub fn theorem_margin(c: &DerivedConstants, n: u32) -> f64 {
    let nf = f64::from(n);
    let ratio = (nf - c.s) / (nf - 2.0);
    (nf - 1.0) - c.epsilon * c.epsilon * (ratio * ratio - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub tol: f64,
    /// Levels below `ε² − separation` in each spectrum.
    pub discrete_count: usize,
    pub oracle_count: usize,
    pub max_gap: f64,
    /// First level whose gap exceeds `tol`, if any.
    pub offending_level: Option<usize>,
    pub oracle_lowest: f64,
    pub passed: bool,
}

/// Compares the discrete `A_0` spectrum with the oracle levels below `ε² − separation`.
pub fn oracle_cross_check(c: &DerivedConstants, discrete: &ModeSpectrum, tol: f64, separation: f64) -> OracleCheck {
    let oracle = oracle_spectrum(c);
    let cutoff = c.epsilon * c.epsilon - separation;
    let exact: Vec<f64> = oracle.levels.iter().copied().filter(|&e| e < cutoff).collect();
    let numeric: Vec<f64> = discrete.eigenvalues.iter().copied().filter(|&e| e < cutoff).collect();
    let mut max_gap: f64 = 0.0;
    let mut offending_level = None;
    for (k, (a, b)) in numeric.iter().zip(&exact).enumerate() {
        let gap = (a - b).abs();
        max_gap = max_gap.max(gap);
        if gap > tol && offending_level.is_none() {
            offending_level = Some(k);
        }
    }
    if numeric.len() != exact.len() && offending_level.is_none() {
        offending_level = Some(numeric.len().min(exact.len()));
    }
    OracleCheck {
        tol,
        discrete_count: numeric.len(),
        oracle_count: exact.len(),
        max_gap,
        offending_level,
        oracle_lowest: oracle.levels[0],
        passed: offending_level.is_none(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroModeCheck {
    /// `‖φ − Ẑ‖ / ‖Ẑ‖` after both are normalized and sign-fixed.
    pub relative_l2_error: f64,
    /// Fit of `ln |φ|` on `[T/2, 3T/4]`.
    pub tail_fit: DecayFit,
    /// `|slope + ε| / ε`.
    pub slope_error: f64,
}

/// Compares the discrete zero eigenfunction of `A_0` with the sampled `Ẑ = −Û′`.
pub fn zero_mode_match(c: &DerivedConstants, grid: &LineGrid, phi: &[f64]) -> Result<ZeroModeCheck> {
    if phi.len() != grid.len() {
        return Err(Error::Precondition("eigenfunction does not live on this grid".into()));
    }
    let h = grid.h();
    let mut z = grid.sample(|t| z_hat(t, c));
    normalize_and_fix_sign(&mut z, h);
    let mut v = phi.to_vec();
    normalize_and_fix_sign(&mut v, h);
    let diff: Vec<f64> = v.iter().zip(&z).map(|(a, b)| a - b).collect();
    let relative_l2_error = discrete_l2_norm(&diff, h) / discrete_l2_norm(&z, h);

    let half = grid.half_width();
    let (ts, ys): (Vec<f64>, Vec<f64>) = grid
        .nodes()
        .iter()
        .zip(&v)
        .filter(|(t, x)| **t >= half / 2.0 && **t <= 0.75 * half && x.abs() > 0.0)
        .map(|(t, x)| (*t, x.abs().ln()))
        .unzip();
    let tail_fit = fit_line(&ts, &ys)?;
    let slope_error = (tail_fit.slope + c.epsilon).abs() / c.epsilon;
    Ok(ZeroModeCheck { relative_l2_error, tail_fit, slope_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_constants, validate_params, ParamMode, ProblemParams};

    fn consts(n: u32, s: f64, gamma: f64) -> DerivedConstants {
        derive_constants(&validate_params(n, s, gamma, ParamMode::Boundary).unwrap())
    }

    #[test]
    fn reference_levels() {
        let o = oracle_spectrum(&consts(3, 1.0, 0.0));
        assert_eq!(o.ell, 2.0);
        assert_eq!(o.levels, vec![-0.75, 0.0]);
        let o = oracle_spectrum(&consts(3, 0.0, 0.0));
        assert_eq!(o.ell, 1.5);
        assert_eq!(o.levels.len(), 2);
        assert!((o.levels[0] + 2.0).abs() < 1e-15);
        assert!(o.levels[1].abs() < 1e-15);
    }

    #[test]
    fn margins() {
        for n in 3..9 {
            let c = consts(n, 0.0, 0.0);
            assert!(theorem_margin(&c, n).abs() < 1e-14);
        }
        assert!((theorem_margin(&consts(3, 1.0, 0.0), 3) - 1.25).abs() < 1e-15);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..20 {
            let g = 0.99 * ProblemParams::hardy_bound(5) * f64::from(i) / 20.0;
            let m = theorem_margin(&consts(5, 0.7, g), 5);
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn zero_mode_is_scaling_direction() {
        use crate::mode_operator::{assemble, build_grid, GridConfig};
        use crate::spectral::{eigenfunction, eigenvalue_at_index};
        use std::sync::Arc;
        let c = consts(3, 1.0, 0.0);
        let grid = Arc::new(build_grid(&c, 5e-5, &GridConfig::default()).unwrap());
        let a = assemble(0.0, grid.clone(), &c);
        let phi = eigenfunction(&a, eigenvalue_at_index(&a, 1, 1e-12)).unwrap();
        let m = zero_mode_match(&c, &grid, &phi).unwrap();
        assert!(m.relative_l2_error < 1e-3);
        assert!(m.slope_error < 0.02);
        let ground = eigenfunction(&a, eigenvalue_at_index(&a, 0, 1e-12)).unwrap();
        assert!(zero_mode_match(&c, &grid, &ground).unwrap().relative_l2_error > 0.5);
    }

    #[test]
    fn well_depth_identity() {
        for &(n, s, g) in &[(3, 1.0, 0.0), (4, 0.5, 0.5), (6, 1.5, 3.6), (5, 0.0, 1.0)] {
            let c = consts(n, s, g);
            let ell = c.ell();
            assert!((well_depth_from_coupling(&c) - ell * (ell + 1.0)).abs() < 1e-12);
            assert!((well_depth_closed_form(n, s) - ell * (ell + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_margin_matches_closed_form() {
        for &(n, s, g) in &[(3, 1.0, 0.0), (4, 0.5, 0.5), (6, 1.5, 3.6)] {
            let c = consts(n, s, g);
            assert!((oracle_spectrum(&c).margin - theorem_margin(&c, n)).abs() < 1e-13);
        }
    }
}
