//! Discretised mode operators `A_μ = −∂_tt + q_μ(t)` on a truncated line.
//!
//! The potential is `q_μ(t) = μ + ε² − (2⋆(s)−1)λ Û(t)^{2⋆(s)−2}`. Because
//! `(2⋆(s)−2)/β = 2`, the well is a pure `sech²(βεt)` profile; the grid and
//! truncation rules below are tuned to its decay scale `1/(βε)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::DerivedConstants;
use crate::profiles::u_hat;

/// Uniform grid of `N` interior nodes on `(−T, T)` with Dirichlet ends.
///
/// `N` is always odd so `t = 0` is a node, and the node set is exactly
/// symmetric (`t_{N−1−i} = −t_i` bit for bit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineGrid {
    half_width: f64,
    h: f64,
    nodes: Vec<f64>,
}

impl LineGrid {
    pub fn new(half_width: f64, n_nodes: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParams(format!("half-width T = {half_width} must be positive")));
        }
        if n_nodes.is_multiple_of(2) || n_nodes < 3 {
            return Err(Error::InvalidParams(format!("node count N = {n_nodes} must be odd and >= 3")));
        }
        let h = 2.0 * half_width / (n_nodes as f64 + 1.0);
        let mid = n_nodes / 2;
        let mut nodes = vec![0.0; n_nodes];
        for i in 0..mid {
            let t = -half_width + (i as f64 + 1.0) * h;
            nodes[i] = t;
            nodes[n_nodes - 1 - i] = -t;
        }
        Ok(Self { half_width, h, nodes })
    }

    /// A grid with (nearly) the same spacing and `factor` times the half-width.
    pub fn extended(&self, factor: f64) -> Result<Self> {
        let mut intervals = (factor * (self.len() as f64 + 1.0)).round() as usize;
        if intervals % 2 == 1 {
            intervals += 1;
        }
        Self::new(intervals as f64 * self.h / 2.0, intervals - 1)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn center_index(&self) -> usize {
        self.len() / 2
    }

    /// Index of `−t_i`.
    pub fn mirror(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    /// Sampled values of `f` at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&t| f(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Largest admissible spacing at the default zero tolerance.
    pub h_max: f64,
    /// Fixed half-width; `None` applies the automatic rule.
    pub half_width: Option<f64>,
    pub max_nodes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { h_max: 0.005, half_width: None, max_nodes: 1_000_000 }
    }
}

/// Zero tolerance the default spacing is calibrated against.
pub const REFERENCE_ZERO_TOL: f64 = 5e-5;

/// Half-width chosen by [`build_grid`] when no override is given.
///
/// `max(40, 10/ε, 8/(βε))`, widened further if `e^{−2εT} < 0.01·zero_tol`
/// would otherwise fail.
pub fn default_half_width(c: &DerivedConstants, zero_tol: f64) -> f64 {
    let eps = c.epsilon;
    let tail = (100.0 / zero_tol).ln() / (2.0 * eps);
    40f64.max(10.0 / eps).max(8.0 / c.sech_rate()).max(tail)
}

/// Grid for the mode operators of one parameter triple.
pub fn build_grid(c: &DerivedConstants, zero_tol: f64, cfg: &GridConfig) -> Result<LineGrid> {
    if !(zero_tol > 0.0) {
        return Err(Error::InvalidParams("zero_tol must be positive".into()));
    }
    let half_width = cfg.half_width.unwrap_or_else(|| default_half_width(c, zero_tol));
    // The O(h²) eigenvalue error has to stay below zero_tol.
    let h = cfg.h_max * (zero_tol / REFERENCE_ZERO_TOL).sqrt().min(1.0);
    grid_with_spacing(half_width, h, cfg.max_nodes)
}

/// Smallest grid on `(−T, T)` with spacing at most `h` and `N + 1` divisible
/// by 4, so that a 1.5× extension keeps the spacing exactly.
pub fn grid_with_spacing(half_width: f64, h: f64, max_nodes: usize) -> Result<LineGrid> {
    let raw = (2.0 * half_width / h).ceil();
    if !raw.is_finite() || raw > max_nodes as f64 + 1.0 {
        return Err(Error::Inconclusive(format!(
            "inconclusive at this precision: T = {half_width}, h = {h:.3e} needs more than {max_nodes} nodes"
        )));
    }
    let intervals = (raw as usize).div_ceil(4) * 4;
    LineGrid::new(half_width, intervals - 1)
}

/// `q_μ(t) = q₀(t) + μ`; the addition is the last operation, so the shift is exact.
pub fn potential_q(mu: f64, t: f64, c: &DerivedConstants) -> f64 {
    let well = c.coupling() * u_hat(t, c).powf(c.two_star_s - 2.0);
    (c.epsilon * c.epsilon - well) + mu
}

/// Symmetric tridiagonal matrix `−D² + diag(q)` with constant off-diagonal `−1/h²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    diag: Vec<f64>,
    offdiag: f64,
    mu: f64,
    grid: Arc<LineGrid>,
}

impl TridiagonalOperator {
    /// `−D² + q` for an arbitrary potential sampled at the nodes.
    pub fn from_potential(grid: Arc<LineGrid>, q: impl Fn(f64) -> f64, mu: f64) -> Self {
        let h = grid.h();
        let kinetic = 2.0 / (h * h);
        let diag = grid.nodes().iter().map(|&t| (kinetic + q(t)) + mu).collect();
        Self { diag, offdiag: -1.0 / (h * h), mu, grid }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> f64 {
        self.offdiag
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn grid(&self) -> &LineGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<LineGrid> {
        self.grid.clone()
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Potential value at node `i`, recovered from the diagonal.
    pub fn potential_at(&self, i: usize) -> f64 {
        let h = self.grid.h();
        self.diag[i] - 2.0 / (h * h)
    }

    pub fn min_potential(&self) -> f64 {
        (0..self.len()).map(|i| self.potential_at(i)).fold(f64::INFINITY, f64::min)
    }

    /// Same matrix with `delta` added to every diagonal entry.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|d| d + delta).collect(),
            offdiag: self.offdiag,
            mu: self.mu + delta,
            grid: self.grid.clone(),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.len(), "vector length must match the grid");
        let n = v.len();
        let e = self.offdiag;
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc += e * v[i - 1];
                }
                if i + 1 < n {
                    acc += e * v[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let r = 2.0 * self.offdiag.abs();
        let lo = self.diag.iter().copied().fold(f64::INFINITY, f64::min) - r;
        let hi = self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) + r;
        (lo, hi)
    }
}

/// Discretisation of `A_μ` for the parameter triple behind `c`.
pub fn assemble(mu: f64, grid: Arc<LineGrid>, c: &DerivedConstants) -> TridiagonalOperator {
    TridiagonalOperator::from_potential(grid, |t| potential_q(0.0, t, c), mu)
}

/// Minimum of `q_μ` over the line and whether it is positive.
///
/// The well is centred at the origin, so the minimum is `q_μ(0)`.
pub fn potential_positivity_check(mu: f64, c: &DerivedConstants) -> (bool, f64) {
    let min = potential_q(mu, 0.0, c);
    (min > 0.0, min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_constants, validate_params, ParamMode};
    use crate::profiles::sech2;

    fn consts(n: u32, s: f64, gamma: f64) -> DerivedConstants {
        derive_constants(&validate_params(n, s, gamma, ParamMode::Boundary).unwrap())
    }

    #[test]
    fn potential_reference_values() {
        let c = consts(3, 1.0, 0.0);
        assert!((potential_q(0.0, 0.0, &c) + 1.25).abs() < 1e-15);
        let far = potential_q(0.0, 500.0, &c);
        assert!((far - 0.25).abs() < 1e-15);
        assert!((potential_q(2.0, 1e4, &c) - 2.25).abs() < 1e-15);
    }

    #[test]
    fn potential_sech2_identity() {
        for &(n, s, g) in &[(3, 1.0, 0.0), (4, 0.5, 0.5), (6, 1.5, 3.6), (5, 0.0, 1.2)] {
            let c = consts(n, s, g);
            for i in -200..=200 {
                let t = 0.1 * f64::from(i);
                let sech_form = c.epsilon * c.epsilon - c.coupling() / 4.0 * sech2(c.sech_rate() * t);
                assert!((potential_q(0.0, t, &c) - sech_form).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn potential_shift_is_exact_and_even() {
        let c = consts(4, 0.3, 0.7);
        for i in 0..500 {
            let t = -25.0 + 0.1 * f64::from(i);
            for mu in [0.0, 3.0, 8.0, 15.0] {
                assert_eq!(potential_q(mu, t, &c), potential_q(0.0, t, &c) + mu);
            }
            assert_eq!(potential_q(0.0, t, &c), potential_q(0.0, -t, &c));
        }
    }

    #[test]
    fn grid_rules() {
        let c = consts(3, 1.0, 0.0);
        let g = build_grid(&c, 5e-5, &GridConfig::default()).unwrap();
        assert_eq!(g.half_width(), 40.0);
        assert!(g.h() <= 0.005);
        assert_eq!(g.len() % 2, 1);
        assert!((15_999..=16_003).contains(&g.len()));
        assert_eq!(g.nodes()[g.center_index()], 0.0);
        for i in 0..g.len() {
            assert_eq!(g.nodes()[i], -g.nodes()[g.mirror(i)]);
        }

        // ε = 0.05 with n = 3, s = 0.
        let c = consts(3, 0.0, 0.25 - 0.0025);
        assert!((c.epsilon - 0.05).abs() < 1e-12);
        let t = default_half_width(&c, 5e-5);
        assert!((t - 200.0).abs() < 1e-9);
    }

    #[test]
    fn grid_refuses_excessive_precision() {
        let c = consts(3, 1.0, 0.0);
        let err = build_grid(&c, 1e-14, &GridConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Inconclusive(ref m) if m.contains("inconclusive at this precision")));
    }

    #[test]
    fn extended_grid_keeps_spacing() {
        let c = consts(3, 1.0, 0.0);
        let g = build_grid(&c, 5e-5, &GridConfig::default()).unwrap();
        let g2 = g.extended(1.5).unwrap();
        assert!((g2.h() - g.h()).abs() < 1e-15);
        assert!((g2.half_width() - 60.0).abs() < 1e-9);
    }

    #[test]
    fn assemble_stencil_and_shift() {
        let c = consts(3, 1.0, 0.0);
        let grid = Arc::new(LineGrid::new(10.0, 199).unwrap());
        let a0 = assemble(0.0, grid.clone(), &c);
        let a2 = assemble(2.0, grid.clone(), &c);
        let h = grid.h();
        assert_eq!(a0.offdiag(), -1.0 / (h * h));
        for i in 0..a0.len() {
            assert_eq!(a2.diag()[i], a0.diag()[i] + 2.0);
            let t = grid.nodes()[i];
            assert!((a0.potential_at(i) - potential_q(0.0, t, &c)).abs() < 1e-9);
        }
        let v: Vec<f64> = (0..a0.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let av = a0.apply(&v);
        let i = 57;
        let row = a0.offdiag() * v[i - 1] + a0.diag()[i] * v[i] + a0.offdiag() * v[i + 1];
        assert_eq!(av[i], row);
    }

    #[test]
    fn positivity_examples() {
        let (ok, min) = potential_positivity_check(2.0, &consts(3, 1.5, 0.0));
        assert!(ok);
        assert!((min - 1.5).abs() < 1e-14);
        let (ok, min) = potential_positivity_check(0.0, &consts(3, 1.0, 0.0));
        assert!(!ok);
        assert!((min + 1.25).abs() < 1e-14);
        assert!(potential_positivity_check(2.0, &consts(3, 1.9, 0.0)).0);
    }

    #[test]
    fn positivity_minimum_is_at_origin() {
        let c = consts(3, 1.7, 0.0);
        let (_, min) = potential_positivity_check(2.0, &c);
        for i in -1000..=1000 {
            assert!(potential_q(2.0, 0.05 * f64::from(i), &c) >= min);
        }
    }
}
