//! Bound states of the discretised mode operators and kernel accounting.
//!
//! Eigenvalues come from Sturm counts (signed `LDLᵀ` pivots) plus bisection,
//! eigenvectors from twisted factorizations. Every `A_μ` is `A_0 + μI`, so
//! only `A_0` is ever solved: `A_μ` has a kernel exactly when `−μ` is an
//! eigenvalue of `A_0`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode_operator::{assemble, build_grid, GridConfig, LineGrid, TridiagonalOperator};
use crate::params::{derive_constants, DerivedConstants, ParamMode, ProblemParams};
use crate::sphere::{sphere_modes, DEFAULT_K_MAX};

/// Distance below the essential threshold at which the bound-state search stops.
pub const THRESHOLD_GAP: f64 = 1e-6;

const MAX_TRUNCATION_EXTENSIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub zero_tol: f64,
    pub separation: f64,
    /// Bracket width for bisected eigenvalues.
    pub eig_tol: f64,
    /// Highest sphere level considered.
    pub k_max: u32,
    pub grid: GridConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            zero_tol: 5e-5,
            separation: 1e-2,
            eig_tol: 1e-10,
            k_max: DEFAULT_K_MAX,
            grid: GridConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.zero_tol > 0.0) || !(self.separation > self.zero_tol) {
            return Err(Error::InvalidParams(format!(
                "need 0 < zero_tol ({}) < separation ({})",
                self.zero_tol, self.separation
            )));
        }
        if !(self.eig_tol > 0.0) {
            return Err(Error::InvalidParams("eig_tol must be positive".into()));
        }
        if self.k_max < 1 {
            return Err(Error::InvalidParams("at least sphere levels 0 and 1 are needed".into()));
        }
        if !(self.grid.h_max > 0.0) {
            return Err(Error::InvalidParams("grid spacing must be positive".into()));
        }
        if let Some(t) = self.grid.half_width {
            if !(t > 0.0) {
                return Err(Error::InvalidParams("half-width T must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Number of eigenvalues of `a` strictly below `x`.
pub fn eigen_count_below(a: &TridiagonalOperator, x: f64) -> usize {
    let e2 = a.offdiag() * a.offdiag();
    let pivmin = f64::MIN_POSITIVE * e2.max(1.0);
    let mut count = 0;
    let mut d = 1.0;
    for (i, &diag) in a.diag().iter().enumerate() {
        d = if i == 0 { diag - x } else { (diag - x) - e2 / d };
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `index`-th eigenvalue (0-based, ascending) bisected inside `[lo, hi]`.
fn bisect_index(a: &TridiagonalOperator, index: usize, mut lo: f64, mut hi: f64, abs_tol: f64) -> f64 {
    while hi - lo > abs_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eigen_count_below(a, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The `index`-th eigenvalue of `a`.
pub fn eigenvalue_at_index(a: &TridiagonalOperator, index: usize, abs_tol: f64) -> f64 {
    assert!(index < a.len(), "eigenvalue index out of range");
    let (lo, hi) = a.gershgorin();
    bisect_index(a, index, lo, hi, abs_tol)
}

/// All eigenvalues below `threshold`, ascending.
pub fn eigenvalues_below(a: &TridiagonalOperator, threshold: f64, abs_tol: f64) -> Vec<f64> {
    assert!(abs_tol > 0.0, "abs_tol must be positive");
    let m = eigen_count_below(a, threshold);
    let (lo, _) = a.gershgorin();
    (0..m).map(|k| bisect_index(a, k, lo, threshold, abs_tol)).collect()
}

/// `h Σ v_i²`.
pub fn discrete_l2_norm(v: &[f64], h: f64) -> f64 {
    (h * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// Scale to unit discrete norm and make the first (leftmost) extremal entry positive.
pub fn normalize_and_fix_sign(v: &mut [f64], h: f64) {
    let norm = discrete_l2_norm(v, h);
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let first = v.iter().position(|x| x.abs() >= peak * (1.0 - 1e-9)).unwrap_or(0);
    let scale = if v[first] < 0.0 { -1.0 / norm } else { 1.0 / norm };
    v.iter_mut().for_each(|x| *x *= scale);
}

/// Eigenvector for an isolated eigenvalue, from a twisted factorization.
///
/// The forward pivots `D⁺` of `LDLᵀ` and backward pivots `D⁻` of `UDUᵀ` of
/// `A − E` meet at the index `r` with the smallest `|γ_r|`, and the vector is
/// grown outwards by the ratios `−e/D±`. Products of ratios keep decaying tails
/// accurate relative to their own size. The result has unit discrete norm
/// `h Σ v_i² = 1` and the sign convention of [`normalize_and_fix_sign`].
pub fn eigenfunction(a: &TridiagonalOperator, eigenvalue: f64) -> Result<Vec<f64>> {
    let n = a.len();
    let e = a.offdiag();
    let pivmin = f64::MIN_POSITIVE * (e * e).max(1.0);
    let guard = |d: f64| if d.abs() < pivmin { -pivmin } else { d };
    let shifted: Vec<f64> = a.diag().iter().map(|d| d - eigenvalue).collect();
    let mut forward = vec![0.0; n];
    let mut backward = vec![0.0; n];
    forward[0] = guard(shifted[0]);
    for i in 1..n {
        forward[i] = guard(shifted[i] - e * e / forward[i - 1]);
    }
    backward[n - 1] = guard(shifted[n - 1]);
    for i in (0..n - 1).rev() {
        backward[i] = guard(shifted[i] - e * e / backward[i + 1]);
    }
    let twist = (0..n)
        .min_by(|&i, &j| {
            let gi = (forward[i] + backward[i] - shifted[i]).abs();
            let gj = (forward[j] + backward[j] - shifted[j]).abs();
            gi.total_cmp(&gj)
        })
        .expect("operator has at least one node");
    let mut v = vec![0.0; n];
    v[twist] = 1.0;
    for i in (0..twist).rev() {
        v[i] = -(e / forward[i]) * v[i + 1];
    }
    for i in twist + 1..n {
        v[i] = -(e / backward[i]) * v[i - 1];
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Inconclusive(format!("eigenvector at {eigenvalue:.6e} overflowed")));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let av = a.apply(&v);
    let residual = av.iter().zip(&v).map(|(y, x)| (y - eigenvalue * x).powi(2)).sum::<f64>().sqrt();
    if residual > 1e-6 {
        return Err(Error::Inconclusive(format!(
            "eigenvector at {eigenvalue:.6e} has residual {residual:.3e}; the eigenvalue is not isolated"
        )));
    }
    normalize_and_fix_sign(&mut v, a.grid().h());
    Ok(v)
}

/// `vᵀAv / vᵀv`.
pub fn rayleigh_quotient(v: &[f64], a: &TridiagonalOperator) -> Result<f64> {
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if vv == 0.0 {
        return Err(Error::InvalidParams("Rayleigh quotient of the zero vector".into()));
    }
    let av = a.apply(v);
    Ok(v.iter().zip(&av).map(|(x, y)| x * y).sum::<f64>() / vv)
}

/// Bound states of one mode operator below its essential threshold.
#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    pub mu: f64,
    pub essential_threshold: f64,
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Vec<f64>>,
}

impl ModeSpectrum {
    pub fn lowest(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }
}

/// Eigenpairs of `a` below `essential_threshold − THRESHOLD_GAP`.
pub fn mode_spectrum(a: &TridiagonalOperator, essential_threshold: f64, eig_tol: f64) -> Result<ModeSpectrum> {
    let eigenvalues = eigenvalues_below(a, essential_threshold - THRESHOLD_GAP, eig_tol);
    let eigenfunctions = eigenvalues.iter().map(|&e| eigenfunction(a, e)).collect::<Result<Vec<_>>>()?;
    Ok(ModeSpectrum { mu: a.mu(), essential_threshold, eigenvalues, eigenfunctions })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelDimension {
    pub dim: usize,
    /// Distance from the centre to the nearest eigenvalue outside the zero band.
    pub margin: f64,
    /// An eigenvalue sits between `zero_tol` and `separation` from the centre.
    pub ambiguous: bool,
}

/// Eigenvalues of `a` within `zero_tol` of `center`, and the gap to the rest.
///
/// The margin is measured to the nearest bound state below `continuum` outside
/// the zero band, or to `continuum` itself when there is none.
pub fn kernel_probe(
    a: &TridiagonalOperator,
    center: f64,
    continuum: f64,
    zero_tol: f64,
    separation: f64,
    eig_tol: f64,
) -> KernelDimension {
    let below = eigen_count_below(a, center - zero_tol);
    let upto = eigen_count_below(a, center + zero_tol);
    let ambiguous =
        eigen_count_below(a, center - separation) != below || eigen_count_below(a, center + separation) != upto;
    let bound = eigen_count_below(a, continuum - THRESHOLD_GAP);
    let mut margin = f64::INFINITY;
    if below > 0 {
        margin = margin.min(center - eigenvalue_at_index(a, below - 1, eig_tol));
    }
    if upto < bound {
        margin = margin.min(eigenvalue_at_index(a, upto, eig_tol) - center);
    }
    if margin.is_infinite() {
        margin = continuum - center;
    }
    KernelDimension { dim: upto - below, margin, ambiguous }
}

/// Bottom of the continuous spectrum: the potential at the truncation edges.
pub fn continuum_edge(a: &TridiagonalOperator) -> f64 {
    a.potential_at(0).min(a.potential_at(a.len() - 1))
}

/// Number of eigenvalues in `(−zero_tol, zero_tol)` and the margin to the rest.
pub fn kernel_dimension(a: &TridiagonalOperator, zero_tol: f64, separation: f64) -> Result<KernelDimension> {
    kernel_dimension_with_tol(a, zero_tol, separation, SolverConfig::default().eig_tol)
}

pub fn kernel_dimension_with_tol(
    a: &TridiagonalOperator,
    zero_tol: f64,
    separation: f64,
    eig_tol: f64,
) -> Result<KernelDimension> {
    if !(zero_tol < separation) {
        return Err(Error::InvalidParams("zero_tol must be smaller than separation".into()));
    }
    let k = kernel_probe(a, 0.0, continuum_edge(a), zero_tol, separation, eig_tol);
    if k.ambiguous {
        return Err(Error::Inconclusive(format!(
            "an eigenvalue lies between zero_tol = {zero_tol:e} and separation = {separation:e}"
        )));
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "verified_dim_1")]
    VerifiedDim1,
    #[serde(rename = "boundary_dim_n_plus_1")]
    BoundaryDimNPlus1,
    #[serde(rename = "violation")]
    Violation,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::VerifiedDim1 => "verified_dim_1",
            Verdict::BoundaryDimNPlus1 => "boundary_dim_n_plus_1",
            Verdict::Violation => "violation",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeKernel {
    pub k: u32,
    pub mu: f64,
    pub multiplicity: u64,
    pub kernel_dim: usize,
    pub margin: f64,
    /// Lowest eigenvalue of `A_μ`, i.e. `λ_min(A_0) + μ`.
    pub lowest_eigenvalue: f64,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub half_width: f64,
    pub nodes: usize,
    pub h: f64,
    /// Number of 1.5× extensions applied before the bound states settled.
    pub extensions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub zero_tol: f64,
    pub separation: f64,
    pub eig_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub params: ProblemParams,
    pub grid: GridSummary,
    /// Bound states of `A_0` below `ε² − THRESHOLD_GAP`.
    pub radial_eigenvalues: Vec<f64>,
    /// `λ_min(A_0) + (n − 1)`: positive iff no level `μ ≥ n − 1` carries kernel.
    pub theorem_margin: f64,
    pub per_mode: Vec<ModeKernel>,
    pub total_dim: u64,
    pub verdict: Verdict,
    pub tolerances: Tolerances,
}

/// Everything computed for one triple; the report is the serialisable part.
#[derive(Debug, Clone)]
pub struct KernelAnalysis {
    pub constants: DerivedConstants,
    pub operator: TridiagonalOperator,
    pub spectrum: ModeSpectrum,
    pub report: KernelReport,
}

/// Bound-state eigenvalues deep enough to be resolved and compared:
/// those below `ε² − separation`.
pub fn resolved_levels(eigenvalues: &[f64], c: &DerivedConstants, separation: f64) -> Vec<f64> {
    let cutoff = c.essential_threshold(0.0) - separation;
    eigenvalues.iter().copied().filter(|&e| e < cutoff).collect()
}

/// Largest change of the resolved levels of `A_0` when `grid` grows by 50%.
/// `None` if the number of resolved levels changes.
pub fn truncation_change(grid: &LineGrid, c: &DerivedConstants, cfg: &SolverConfig) -> Result<Option<f64>> {
    let threshold = c.essential_threshold(0.0) - THRESHOLD_GAP;
    let base = assemble(0.0, Arc::new(grid.clone()), c);
    let wide = assemble(0.0, Arc::new(grid.extended(1.5)?), c);
    let a = resolved_levels(&eigenvalues_below(&base, threshold, cfg.eig_tol), c, cfg.separation);
    let b = resolved_levels(&eigenvalues_below(&wide, threshold, cfg.eig_tol), c, cfg.separation);
    if a.len() != b.len() {
        return Ok(None);
    }
    Ok(Some(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)))
}

/// Grid for `A_0`: the default rule, widened by 1.5× until the resolved bound
/// states move by less than `0.01·zero_tol`. A fixed half-width is used as is.
pub fn settle_grid(c: &DerivedConstants, cfg: &SolverConfig) -> Result<(LineGrid, usize)> {
    let mut grid = build_grid(c, cfg.zero_tol, &cfg.grid)?;
    if cfg.grid.half_width.is_some() {
        return Ok((grid, 0));
    }
    for extensions in 0..=MAX_TRUNCATION_EXTENSIONS {
        match truncation_change(&grid, c, cfg)? {
            Some(change) if change < 0.01 * cfg.zero_tol => return Ok((grid, extensions)),
            _ => {}
        }
        let wider = grid.extended(1.5)?;
        if wider.len() > cfg.grid.max_nodes {
            break;
        }
        grid = wider;
    }
    Err(Error::Inconclusive(format!(
        "bound states did not settle under domain extension (T = {})",
        grid.half_width()
    )))
}

/// Solves `A_0` once and accounts for the kernel of every sphere level.
pub fn analyze(p: &ProblemParams, cfg: &SolverConfig) -> Result<KernelAnalysis> {
    cfg.validate()?;
    let c = derive_constants(p);
    let (grid, extensions) = settle_grid(&c, cfg)?;
    let grid = Arc::new(grid);
    let a0 = assemble(0.0, grid.clone(), &c);
    let spectrum = mode_spectrum(&a0, c.essential_threshold(0.0), cfg.eig_tol)?;
    let lowest = spectrum
        .lowest()
        .ok_or_else(|| Error::Inconclusive("A_0 has no bound state on this grid".into()))?;

    let modes = sphere_modes(p.n, cfg.k_max);
    let reach = -lowest + cfg.separation;
    let mut per_mode = Vec::new();
    for m in &modes {
        if m.k >= 2 && m.mu > reach {
            continue;
        }
        let probe = kernel_probe(&a0, -m.mu, c.essential_threshold(0.0), cfg.zero_tol, cfg.separation, cfg.eig_tol);
        per_mode.push(ModeKernel {
            k: m.k,
            mu: m.mu,
            multiplicity: m.multiplicity,
            kernel_dim: probe.dim,
            margin: probe.margin,
            lowest_eigenvalue: lowest + m.mu,
            ambiguous: probe.ambiguous,
        });
    }
    let levels_exhausted = modes.last().is_none_or(|m| m.mu <= reach);
    let total_dim: u64 = per_mode.iter().map(|m| m.multiplicity * m.kernel_dim as u64).sum();

    let expected = if p.is_translation_invariant() { u64::from(p.n) + 1 } else { 1 };
    let clean = per_mode.iter().all(|m| !m.ambiguous && m.margin > cfg.separation);
    let verdict = if levels_exhausted || per_mode.iter().any(|m| m.ambiguous) {
        Verdict::Inconclusive
    } else if total_dim == expected && clean {
        if p.is_translation_invariant() && p.mode == ParamMode::Boundary {
            Verdict::BoundaryDimNPlus1
        } else {
            Verdict::VerifiedDim1
        }
    } else {
        Verdict::Violation
    };

    let report = KernelReport {
        params: *p,
        grid: GridSummary { half_width: grid.half_width(), nodes: grid.len(), h: grid.h(), extensions },
        radial_eigenvalues: spectrum.eigenvalues.clone(),
        theorem_margin: lowest + f64::from(p.n - 1),
        per_mode,
        total_dim,
        verdict,
        tolerances: Tolerances { zero_tol: cfg.zero_tol, separation: cfg.separation, eig_tol: cfg.eig_tol },
    };
    Ok(KernelAnalysis { constants: c, operator: a0, spectrum, report })
}

pub fn total_kernel_dimension(p: &ProblemParams, cfg: &SolverConfig) -> Result<KernelReport> {
    analyze(p, cfg).map(|a| a.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;

    fn reference() -> (DerivedConstants, TridiagonalOperator) {
        let p = validate_params(3, 1.0, 0.0, ParamMode::Theorem).unwrap();
        let c = derive_constants(&p);
        let grid = Arc::new(build_grid(&c, 5e-5, &GridConfig::default()).unwrap());
        (c, assemble(0.0, grid, &c))
    }

    #[test]
    fn sturm_count_small_matrix() {
        let grid = Arc::new(LineGrid::new(1.5, 3).unwrap());
        let a = TridiagonalOperator::from_potential(grid, |_| 0.0, 0.0);
        // 3×3 Dirichlet Laplacian with h = 0.75: eigenvalues (2 − 2cos(kπ/4))/h².
        let h2 = 0.75f64 * 0.75;
        let exact: Vec<f64> = (1..=3).map(|k| (2.0 - 2.0 * (f64::from(k) * std::f64::consts::PI / 4.0).cos()) / h2).collect();
        assert_eq!(eigen_count_below(&a, exact[0] - 1e-9), 0);
        assert_eq!(eigen_count_below(&a, exact[0] + 1e-9), 1);
        assert_eq!(eigen_count_below(&a, exact[2] + 1e-9), 3);
        for (k, e) in exact.iter().enumerate() {
            assert!((eigenvalue_at_index(&a, k, 1e-13) - e).abs() < 1e-11);
        }
    }

    #[test]
    fn gershgorin_extremes() {
        let (_, a) = reference();
        let (lo, hi) = a.gershgorin();
        assert_eq!(eigen_count_below(&a, lo - 1.0), 0);
        assert_eq!(eigen_count_below(&a, hi + 1.0), a.len());
    }

    #[test]
    fn reference_counts_and_levels() {
        let (_, a) = reference();
        assert_eq!(eigen_count_below(&a, -0.5), 1);
        let levels = eigenvalues_below(&a, 0.2, 1e-10);
        assert_eq!(levels.len(), 2);
        assert!((levels[0] + 0.75).abs() < 1e-4);
        assert!(levels[1].abs() < 1e-4);
    }

    #[test]
    fn free_operator_has_no_bound_state() {
        let grid = Arc::new(LineGrid::new(40.0, 15_999).unwrap());
        let eps2 = 0.25;
        let a = TridiagonalOperator::from_potential(grid, |_| eps2, 0.0);
        assert!(eigenvalues_below(&a, eps2, 1e-10).is_empty());
    }

    #[test]
    fn ground_state_positive_zero_mode_one_node() {
        let (_, a) = reference();
        let levels = eigenvalues_below(&a, 0.2, 1e-10);
        let ground = eigenfunction(&a, levels[0]).unwrap();
        assert!(ground.iter().all(|&x| x > 0.0));
        let zero = eigenfunction(&a, levels[1]).unwrap();
        let peak = zero.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let signs: Vec<f64> = zero.iter().filter(|x| x.abs() > 1e-12 * peak).map(|x| x.signum()).collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 1);
        let h = a.grid().h();
        assert!((discrete_l2_norm(&zero, h) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_quotient_bounds() {
        let (_, a) = reference();
        let levels = eigenvalues_below(&a, 0.2, 1e-12);
        let ground = eigenfunction(&a, levels[0]).unwrap();
        assert!((rayleigh_quotient(&ground, &a).unwrap() - levels[0]).abs() < 1e-9);
        let v: Vec<f64> = a.grid().nodes().iter().map(|t| (-t * t / 50.0).exp() * (1.0 + 0.3 * t.sin())).collect();
        assert!(rayleigh_quotient(&v, &a).unwrap() > levels[0]);
        assert!(rayleigh_quotient(&vec![0.0; a.len()], &a).is_err());
    }

    #[test]
    fn kernel_dimension_reference_modes() {
        let (_, a0) = reference();
        let k0 = kernel_dimension(&a0, 5e-5, 1e-2).unwrap();
        assert_eq!(k0.dim, 1);
        assert!((k0.margin - 0.75).abs() < 1e-3);
        let a1 = a0.shifted(2.0);
        let k1 = kernel_dimension(&a1, 5e-5, 1e-2).unwrap();
        assert_eq!(k1.dim, 0);
        assert!((k1.margin - 1.25).abs() < 1e-3);
    }

    #[test]
    fn kernel_dimension_flags_near_zero_eigenvalue() {
        let (_, a0) = reference();
        let nudged = a0.shifted(3e-3);
        assert!(matches!(kernel_dimension(&nudged, 5e-5, 1e-2), Err(Error::Inconclusive(_))));
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig { zero_tol: 1e-2, separation: 1e-3, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }
}
