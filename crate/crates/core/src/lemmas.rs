//! Executable checks of the auxiliary lemmas: the Rayleigh dichotomy, the
//! positivity and decay arguments, the Wronskian, and the supersolution `V`.

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode_operator::{potential_q, LineGrid, TridiagonalOperator};
use crate::oracle::oracle_spectrum;
use crate::params::{classify_case, derive_constants, CaseTag, DerivedConstants, ProblemParams};
use crate::profiles::{eval_v, ln_u_hat, ln_v, u_hat, v_log_parts};
use crate::spectral::{
    analyze, eigen_count_below, eigenfunction, eigenvalue_at_index, KernelAnalysis, SolverConfig,
};

/// Slopes closer to zero than this count as "no decay".
pub const EXPONENT_MARGIN: f64 = 1e-3;
pub const MIN_CORRELATION: f64 = 0.999;
/// Grid values below this fraction of the peak are not compared.
pub const RESOLVED_FLOOR: f64 = 1e-12;
const OVERFLOW_CAP: f64 = 1e250;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: [f64; 2],
    pub slope: f64,
    pub correlation: f64,
    /// Largest deviation of the data from the fitted line.
    pub max_deviation: f64,
}

impl DecayFit {
    /// Good correlation, or a flat profile with nothing to correlate.
    pub fn acceptable(&self) -> bool {
        let flat = self.slope.abs() < EXPONENT_MARGIN && self.max_deviation < EXPONENT_MARGIN * (self.window[1] - self.window[0]);
        self.correlation.abs() >= MIN_CORRELATION || flat
    }
}

/// Least-squares line through `(t_i, y_i)`.
pub fn fit_line(t: &[f64], y: &[f64]) -> Result<DecayFit> {
    if t.len() < 3 || t.len() != y.len() {
        return Err(Error::Precondition("a line fit needs at least three matching samples".into()));
    }
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut stt, mut syy, mut sty) = (0.0, 0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        stt += (a - mt) * (a - mt);
        syy += (b - my) * (b - my);
        sty += (a - mt) * (b - my);
    }
    let slope = sty / stt;
    let correlation = if syy > 0.0 { sty / (stt * syy).sqrt() } else { 0.0 };
    let max_deviation = t
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mt)).abs())
        .fold(0.0, f64::max);
    Ok(DecayFit { window: [t[0], t[t.len() - 1]], slope, correlation, max_deviation })
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

fn mass_fraction_inside(v: &[f64], grid: &LineGrid, half: f64) -> f64 {
    let total: f64 = v.iter().map(|x| x * x).sum();
    let inside: f64 = grid.nodes().iter().zip(v).filter(|(t, _)| t.abs() <= half).map(|(_, x)| x * x).sum();
    inside / total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Report {
    /// Lowest discrete eigenvalue, the Rayleigh infimum on the grid.
    pub m: f64,
    pub limit: f64,
    pub mass_fraction: f64,
    pub mass_fraction_wide: f64,
    pub localized: bool,
    /// `m ≤ 0 ⇒ localized`.
    pub dichotomy_holds: bool,
}

/// Minimizes the Rayleigh quotient of `−∂² + q` on `grid` and on a grid 50% wider.
pub fn lemma3_minimize(q: &dyn Fn(f64) -> f64, grid: &LineGrid, limit: f64) -> Result<Lemma3Report> {
    let solve = |g: &LineGrid| -> Result<(f64, f64)> {
        let a = TridiagonalOperator::from_potential(Arc::new(g.clone()), q, 0.0);
        let m = eigenvalue_at_index(&a, 0, 1e-12);
        let v = eigenfunction(&a, m)?;
        Ok((m, mass_fraction_inside(&v, g, g.half_width() / 2.0)))
    };
    let (m, mass_fraction) = solve(grid)?;
    let wide = grid.extended(1.5)?;
    let (m_wide, mass_fraction_wide) = solve(&wide)?;
    if !m.is_finite() || !m_wide.is_finite() {
        return Err(Error::Inconclusive("Rayleigh minimum not finite".into()));
    }
    if m < limit && m_wide > m + 1e-6 * (1.0 + m.abs()) {
        return Err(Error::Inconclusive(format!(
            "Rayleigh minimum rose from {m:.6e} to {m_wide:.6e} under domain extension"
        )));
    }
    let localized = mass_fraction > 0.99 && (mass_fraction - mass_fraction_wide).abs() < 1e-3;
    Ok(Lemma3Report {
        m,
        limit,
        mass_fraction,
        mass_fraction_wide,
        localized,
        dichotomy_holds: m > 0.0 || localized,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryDefect {
    /// `|⟨Au, v⟩ − ⟨u, Av⟩|`.
    pub absolute: f64,
    /// `absolute / (‖Au‖‖v‖ + ‖u‖‖Av‖)`, the rounding-relative size.
    pub relative: f64,
}

pub fn selfadjointness_check(a: &TridiagonalOperator, u: &[f64], v: &[f64]) -> SymmetryDefect {
    let au = a.apply(u);
    let av = a.apply(v);
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let norm = |x: &[f64]| dot(x, x).sqrt();
    let absolute = (dot(&au, v) - dot(u, &av)).abs();
    let scale = norm(&au) * norm(v) + norm(u) * norm(&av);
    let relative = if scale > 0.0 { absolute / scale } else { 0.0 };
    SymmetryDefect { absolute, relative }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionReport {
    /// `max |−V″ + q_{n−1}V − rhs| / max(1, V)`.
    pub max_residual: f64,
    pub min_rhs: f64,
    pub max_abs_rhs: f64,
    /// `rhs > 0` at every node.
    pub rhs_positive: bool,
    /// `(q_{μ₂} − q_{n−1})V > 0` at every node.
    pub shift_positive: bool,
}

/// `e^t (2γÛ + sλÛ^{2⋆−1})`, the image of `V` under `A_{n−1}`.
pub fn supersolution_rhs(t: f64, c: &DerivedConstants) -> f64 {
    let u = u_hat(t, c);
    let power = (c.two_star_s - 2.0) * ln_u_hat(t, c);
    t.exp() * u * (2.0 * c.gamma + c.s * c.lambda * power.exp())
}

/// Checks `A_{n−1}V = e^t(2γÛ + sλÛ^{2⋆−1})` with the closed-form `V″`.
pub fn supersolution_check(c: &DerivedConstants, grid: &LineGrid) -> SupersolutionReport {
    let mu1 = f64::from(c.n) - 1.0;
    let mu2 = 2.0 * f64::from(c.n);
    let mut max_residual: f64 = 0.0;
    let mut min_rhs = f64::INFINITY;
    let mut max_abs_rhs: f64 = 0.0;
    let mut shift_positive = true;
    for &t in grid.nodes() {
        let (lv, d1, d2) = v_log_parts(t, c);
        let q1 = potential_q(mu1, t, c);
        // Everything divided by V, which is positive.
        let lu = ln_u_hat(t, c);
        let rhs_over_v = (t + lu - lv).exp() * (2.0 * c.gamma + c.s * c.lambda * ((c.two_star_s - 2.0) * lu).exp());
        let r = -(d2 + d1 * d1) + q1 - rhs_over_v;
        max_residual = max_residual.max(r.abs() * lv.exp().min(1.0));
        let rhs = supersolution_rhs(t, c);
        min_rhs = min_rhs.min(rhs);
        max_abs_rhs = max_abs_rhs.max(rhs.abs());
        if (potential_q(mu2, t, c) - q1) * eval_v(t, c) <= 0.0 {
            shift_positive = false;
        }
    }
    SupersolutionReport { max_residual, min_rhs, max_abs_rhs, rhs_positive: min_rhs > 0.0, shift_positive }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VMembership {
    pub case: CaseTag,
    pub fit: DecayFit,
    pub predicted_exponent: f64,
    /// `ln V` decreases on the positive tail.
    pub decays: bool,
    /// Fit on `[−3T/4, −T/2]`.
    pub negative_fit: DecayFit,
    pub negative_predicted: f64,
    /// `√(ε² + n − 1)`, the decay threshold at `μ = n − 1`.
    pub lemma4_rate: f64,
    /// Negative-tail exponent below the threshold.
    pub contradiction: bool,
    pub consistent: bool,
}

/// Exponent of `V` on `[T/2, 3T/4]` against the case classification.
pub fn v_membership_check(p: &ProblemParams, half_width: f64) -> Result<VMembership> {
    let c = derive_constants(p);
    let case = classify_case(p);
    if p.gamma > 0.0 && (c.epsilon - 1.0).abs() < EXPONENT_MARGIN {
        return Err(Error::Inconclusive("ε = 1 separates the two cases".into()));
    }
    let sample = |lo: f64, hi: f64| -> Result<DecayFit> {
        let ts = linspace(lo, hi, 201);
        let ys: Vec<f64> = ts.iter().map(|&t| ln_v(t, &c)).collect();
        let fit = fit_line(&ts, &ys)?;
        if !fit.acceptable() {
            return Err(Error::Inconclusive(format!(
                "tail fit on [{lo}, {hi}] has correlation {:.6}",
                fit.correlation
            )));
        }
        Ok(fit)
    };
    let fit = sample(half_width / 2.0, 0.75 * half_width)?;
    let negative_fit = sample(-0.75 * half_width, -half_width / 2.0)?;
    let predicted_exponent = if p.gamma > 0.0 { 1.0 - c.epsilon } else { p.s - f64::from(p.n) / 2.0 };
    let negative_predicted = 1.0 + c.epsilon;
    let lemma4_rate = (c.epsilon * c.epsilon + f64::from(p.n) - 1.0).sqrt();
    let decays = fit.slope < -EXPONENT_MARGIN;
    let contradiction = negative_fit.slope < lemma4_rate - EXPONENT_MARGIN;
    let expected_contradiction = c.epsilon < (f64::from(p.n) - 2.0) / 2.0;
    let consistent = decays == (case == CaseTag::CaseI) && contradiction == expected_contradiction;
    Ok(VMembership {
        case,
        fit,
        predicted_exponent,
        decays,
        negative_fit,
        negative_predicted,
        lemma4_rate,
        contradiction,
        consistent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositiveQReport {
    pub min_q: f64,
    pub lowest: f64,
    pub holds: bool,
}

/// With `q ≥ 0` on the grid, the lowest eigenvalue must be positive.
pub fn lemma4_positive_q(a: &TridiagonalOperator) -> Result<PositiveQReport> {
    let min_q = a.min_potential();
    if min_q < 0.0 {
        return Err(Error::Precondition(format!("q takes the negative value {min_q:.6e}")));
    }
    let lowest = eigenvalue_at_index(a, 0, 1e-12);
    Ok(PositiveQReport { min_q, lowest, holds: lowest > 0.0 })
}

/// Smallest node `R₀ ≥ 0` such that `q > a_prime` at every node from `R₀` on.
pub fn lemma4_r0(a: &TridiagonalOperator, a_prime: f64) -> Option<f64> {
    let nodes = a.grid().nodes();
    let mut r0 = None;
    for i in (a.grid().center_index()..nodes.len()).rev() {
        if a.potential_at(i) > a_prime {
            r0 = Some(nodes[i]);
        } else {
            break;
        }
    }
    r0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayBoundReport {
    pub r0: f64,
    /// `2φ(R₀)e^{√A′R₀}`.
    pub c0: f64,
    pub holds: bool,
    pub first_failure: Option<f64>,
    /// Last node at which `φ` is resolved above the rounding floor.
    pub resolved_until: f64,
}

/// Checks `φ(t) ≤ C₀e^{−√A′t}` for every resolved node `t ≥ R₀`.
pub fn lemma4_decay_bound(phi: &[f64], grid: &LineGrid, a_limit: f64, a_prime: f64, r0: f64) -> Result<DecayBoundReport> {
    if !(0.0 < a_prime && a_prime < a_limit) {
        return Err(Error::Precondition(format!("need 0 < A′ < A, got A′ = {a_prime}, A = {a_limit}")));
    }
    if phi.len() != grid.len() {
        return Err(Error::Precondition("φ does not live on this grid".into()));
    }
    let nodes = grid.nodes();
    let start = nodes
        .iter()
        .position(|&t| t >= r0)
        .ok_or_else(|| Error::Precondition("R₀ lies beyond the grid".into()))?;
    let peak = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = RESOLVED_FLOOR * peak;
    let end = (start..nodes.len()).take_while(|&i| phi[i].abs() > floor).last().unwrap_or(start);
    if phi[start..=end].iter().any(|&x| x <= 0.0) {
        return Err(Error::Precondition("φ is not positive beyond R₀".into()));
    }
    let rate = a_prime.sqrt();
    let c0 = 2.0 * phi[start] * (rate * nodes[start]).exp();
    let first_failure = (start..=end)
        .find(|&i| phi[i] > c0 * (-rate * nodes[i]).exp())
        .map(|i| nodes[i]);
    Ok(DecayBoundReport {
        r0: nodes[start],
        c0,
        holds: first_failure.is_none(),
        first_failure,
        resolved_until: nodes[end],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub yp: Vec<f64>,
    pub initial: [f64; 2],
    pub step: f64,
    pub order: u32,
    /// First node at which `|y|` hit the cap; later values are frozen.
    pub overflow_at: Option<usize>,
    /// Largest Numerov defect `|δ²y − h²/12 δ²(qy) − h²qy| / (h² max|y|)` on the untainted prefix.
    pub residual: f64,
}

impl OdeSolution {
    pub fn clean_len(&self) -> usize {
        self.overflow_at.unwrap_or(self.t.len())
    }
}

/// Classical RK4 for `φ̈ = qφ` from the left end of `grid`.
pub fn ode_shoot(q: &dyn Fn(f64) -> f64, grid: &LineGrid, y0: f64, yp0: f64) -> OdeSolution {
    let t = grid.nodes().to_vec();
    let h = grid.h();
    let n = t.len();
    let mut y = vec![0.0; n];
    let mut yp = vec![0.0; n];
    y[0] = y0;
    yp[0] = yp0;
    let mut overflow_at = None;
    for i in 0..n - 1 {
        if overflow_at.is_some() {
            y[i + 1] = y[i];
            yp[i + 1] = yp[i];
            continue;
        }
        let (t0, tm, t1) = (t[i], t[i] + 0.5 * h, t[i] + h);
        let (qa, qm, qb) = (q(t0), q(tm), q(t1));
        let (ya, pa) = (y[i], yp[i]);
        let k1y = pa;
        let k1p = qa * ya;
        let k2y = pa + 0.5 * h * k1p;
        let k2p = qm * (ya + 0.5 * h * k1y);
        let k3y = pa + 0.5 * h * k2p;
        let k3p = qm * (ya + 0.5 * h * k2y);
        let k4y = pa + h * k3p;
        let k4p = qb * (ya + h * k3y);
        let ny = ya + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        let np = pa + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        if !ny.is_finite() || !np.is_finite() || ny.abs() > OVERFLOW_CAP || np.abs() > OVERFLOW_CAP {
            overflow_at = Some(i + 1);
            y[i + 1] = y[i];
            yp[i + 1] = yp[i];
        } else {
            y[i + 1] = ny;
            yp[i + 1] = np;
        }
    }
    let clean = overflow_at.unwrap_or(n);
    let qs: Vec<f64> = t[..clean].iter().map(|&s| q(s)).collect();
    let mut residual: f64 = 0.0;
    for i in 1..clean.saturating_sub(1) {
        let scale = y[i - 1].abs().max(y[i].abs()).max(y[i + 1].abs());
        if scale == 0.0 {
            continue;
        }
        let f = |j: usize| qs[j] * y[j];
        let defect = (y[i + 1] - 2.0 * y[i] + y[i - 1]) - h * h / 12.0 * (f(i + 1) + 10.0 * f(i) + f(i - 1));
        residual = residual.max(defect.abs() / (h * h * scale));
    }
    OdeSolution { t, y, yp, initial: [y0, yp0], step: h, order: 4, overflow_at, residual }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WronskianReport {
    pub value: f64,
    pub max_drift: f64,
    /// `max(|φψ̇| + |φ̇ψ|)` over the prefix, the size of the cancelling terms.
    pub scale: f64,
    pub prefix_len: usize,
}

/// `W = φψ̇ − φ̇ψ` along two shot solutions.
pub fn lemma5_wronskian(phi: &OdeSolution, psi: &OdeSolution) -> Result<WronskianReport> {
    if phi.t.len() != psi.t.len() || phi.step != psi.step || phi.t.first() != psi.t.first() {
        return Err(Error::Precondition("solutions live on different grids".into()));
    }
    let prefix_len = phi.clean_len().min(psi.clean_len());
    if prefix_len == 0 {
        return Err(Error::Inconclusive("both solutions overflow immediately".into()));
    }
    let w = |i: usize| phi.y[i] * psi.yp[i] - phi.yp[i] * psi.y[i];
    let value = w(0);
    let mut max_drift: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..prefix_len {
        max_drift = max_drift.max((w(i) - value).abs());
        scale = scale.max((phi.y[i] * psi.yp[i]).abs() + (phi.yp[i] * psi.y[i]).abs());
    }
    Ok(WronskianReport { value, max_drift, scale, prefix_len })
}

/// At most one eigenvalue in `(−zero_tol, zero_tol)`.
pub fn lemma5_dimension_check(a: &TridiagonalOperator, zero_tol: f64) -> bool {
    eigen_count_below(a, zero_tol) - eigen_count_below(a, -zero_tol) <= 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuiteReport {
    pub lemma3_mu1: Lemma3Report,
    pub lemma3_mu1_oracle: f64,
    pub lemma3_mu0: Lemma3Report,
    /// Rounding-relative symmetry defect for seeded random vectors.
    pub selfadjoint_relative: f64,
    pub supersolution: SupersolutionReport,
    pub v_membership: Option<VMembership>,
    /// `None` when `q_{n−1}` dips below zero somewhere.
    pub positive_q: Option<PositiveQReport>,
    pub decay_bound: Option<DecayBoundReport>,
    pub wronskian: WronskianReport,
    pub dimension_mu0: bool,
    pub dimension_mu1: bool,
    pub notes: Vec<String>,
    pub passed: bool,
}

pub fn run_lemmas(p: &ProblemParams, cfg: &SolverConfig) -> Result<LemmaSuiteReport> {
    let analysis = analyze(p, cfg)?;
    run_lemmas_with(p, cfg, &analysis)
}

/// The lemma suite on the grid already settled by `analysis`.
pub fn run_lemmas_with(p: &ProblemParams, cfg: &SolverConfig, analysis: &KernelAnalysis) -> Result<LemmaSuiteReport> {
    let c = &analysis.constants;
    let a0 = &analysis.operator;
    let grid = a0.grid();
    let mu1 = f64::from(p.n) - 1.0;
    let mut notes = Vec::new();
    let eps2 = c.epsilon * c.epsilon;

    let q1 = |t: f64| potential_q(mu1, t, c);
    let q0 = |t: f64| potential_q(0.0, t, c);
    let lemma3_mu1 = lemma3_minimize(&q1, grid, eps2 + mu1)?;
    let lemma3_mu1_oracle = oracle_spectrum(c).levels[0] + mu1;
    let lemma3_mu0 = lemma3_minimize(&q0, grid, eps2)?;

    let mut rng = StdRng::seed_from_u64(0x5EED);
    let u: Vec<f64> = (0..a0.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..a0.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h = grid.h();
    let a1 = a0.shifted(mu1);
    let selfadjoint_relative = selfadjointness_check(&a1, &u, &v).relative;

    let supersolution = supersolution_check(c, grid);

    let v_membership = match v_membership_check(p, grid.half_width()) {
        Ok(m) => Some(m),
        Err(e) => {
            notes.push(format!("V membership: {e}"));
            None
        }
    };

    let positive_q = match lemma4_positive_q(&a1) {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(format!("positive q: {e}"));
            None
        }
    };

    let zero_index = eigen_count_below(a0, cfg.zero_tol).checked_sub(1);
    let decay_bound = zero_index.and_then(|idx| {
        let e = eigenvalue_at_index(a0, idx, cfg.eig_tol);
        let phi: Vec<f64> = eigenfunction(a0, e).ok()?.iter().map(|x| x.abs()).collect();
        let a_prime = 0.9 * eps2;
        let r0 = lemma4_r0(a0, a_prime)?;
        match lemma4_decay_bound(&phi, grid, eps2, a_prime, r0) {
            Ok(r) => Some(r),
            Err(err) => {
                notes.push(format!("decay bound: {err}"));
                None
            }
        }
    });

    let half = (4.0 / c.epsilon).min(10.0);
    let window = crate::mode_operator::grid_with_spacing(half, h, usize::MAX)?;
    let phi = ode_shoot(&q0, &window, 1.0, 0.0);
    let psi = ode_shoot(&q0, &window, 0.0, 1.0);
    let wronskian = lemma5_wronskian(&phi, &psi)?;

    let dimension_mu0 = lemma5_dimension_check(a0, cfg.zero_tol);
    let dimension_mu1 = lemma5_dimension_check(&a1, cfg.zero_tol);

    let mut passed = lemma3_mu1.dichotomy_holds
        && lemma3_mu0.dichotomy_holds
        && selfadjoint_relative <= 1e-12
        && supersolution.max_residual <= 1e-8
        && supersolution.shift_positive
        && wronskian.max_drift <= 1e-8 * wronskian.value.abs().max(1.0)
        && dimension_mu0
        && dimension_mu1;
    if p.s + p.gamma > 0.0 {
        passed &= lemma3_mu1.m > 0.0 && (lemma3_mu1.m - lemma3_mu1_oracle).abs() <= 1e-4 && supersolution.rhs_positive;
    } else {
        passed &= supersolution.max_abs_rhs < 1e-12;
    }
    if let Some(m) = &v_membership {
        passed &= m.consistent;
    }
    if let Some(r) = &positive_q {
        passed &= r.holds;
    }
    if let Some(r) = &decay_bound {
        passed &= r.holds;
    }
    Ok(LemmaSuiteReport {
        lemma3_mu1,
        lemma3_mu1_oracle,
        lemma3_mu0,
        selfadjoint_relative,
        supersolution,
        v_membership,
        positive_q,
        decay_bound,
        wronskian,
        dimension_mu0,
        dimension_mu1,
        notes,
        passed,
    })
}
