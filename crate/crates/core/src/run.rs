//! The verification pipeline behind each CLI subcommand.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emden_fowler::{
    b_form, check_laplacian_identity, check_u_equation, dirichlet_energy_radial, RadialTestFunction,
};
use crate::error::{Error, Result};
use crate::lemmas::run_lemmas_with;
use crate::oracle::{oracle_cross_check, zero_mode_match};
use crate::params::{classify_case, derive_constants, validate_params, ParamMode, ProblemParams};
use crate::quadrature::QuadratureSpec;
use crate::report::{
    Command, IdentityReport, IsometryRow, RunConfig, RunReport, StageTiming, TripleReport, UEquationRow,
};
use crate::spectral::{analyze, Verdict};

/// Zero-mode tolerances: relative L² distance to `−Û′` and tail slope error.
pub const ZERO_MODE_L2_TOL: f64 = 1e-3;
pub const ZERO_MODE_SLOPE_TOL: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n_values: Vec<u32>,
    pub s_values: Vec<f64>,
    /// `γ = fraction · (n−2)²/4`.
    pub gamma_fractions: Vec<f64>,
    /// Adds `γ = s = 0` for every `n`, in boundary mode.
    pub include_boundary: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            n_values: vec![3, 4, 5, 6],
            s_values: vec![0.0, 0.5, 1.0, 1.5],
            gamma_fractions: vec![0.0, 0.25, 0.5, 0.9],
            include_boundary: false,
        }
    }
}

impl SweepSpec {
    /// Validated triples ordered by `(n, s, γ)`. Combinations with `γ + s = 0`
    /// are skipped unless the boundary is requested.
    pub fn triples(&self) -> Result<Vec<ProblemParams>> {
        if self.n_values.is_empty() || self.s_values.is_empty() || self.gamma_fractions.is_empty() {
            return Err(Error::InvalidParams("sweep needs at least one n, s and gamma fraction".into()));
        }
        for &f in &self.gamma_fractions {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::InvalidParams(format!("gamma fraction {f} must lie in [0, 1)")));
            }
        }
        let mut out = Vec::new();
        for &n in &self.n_values {
            for &s in &self.s_values {
                for &f in &self.gamma_fractions {
                    let gamma = f * ProblemParams::hardy_bound(n);
                    if gamma + s == 0.0 {
                        continue;
                    }
                    out.push(validate_params(n, s, gamma, ParamMode::Theorem)?);
                }
            }
            if self.include_boundary {
                out.push(validate_params(n, 0.0, 0.0, ParamMode::Boundary)?);
            }
        }
        out.sort_by(|a, b| (a.n, a.s, a.gamma).partial_cmp(&(b.n, b.s, b.gamma)).expect("finite parameters"));
        out.dedup();
        Ok(out)
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Full pipeline for one triple. Numerical failures become an inconclusive verdict.
pub fn verify_triple(p: &ProblemParams, cfg: &RunConfig) -> TripleReport {
    let constants = derive_constants(p);
    let mut report = TripleReport {
        params: *p,
        constants,
        case: classify_case(p),
        verdict: Verdict::Inconclusive,
        kernel: None,
        oracle: None,
        zero_mode: None,
        lemmas: None,
        error: None,
        timing: None,
    };
    let start = Instant::now();
    let analysis = match analyze(p, &cfg.solver) {
        Ok(a) => a,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    let analyze_ms = ms(start);

    let start = Instant::now();
    let oracle = oracle_cross_check(&constants, &analysis.spectrum, cfg.oracle_tol, cfg.solver.separation);
    let zero_tol = cfg.solver.zero_tol;
    let zero_mode = analysis
        .spectrum
        .eigenvalues
        .iter()
        .position(|e| e.abs() < zero_tol)
        .map(|i| zero_mode_match(&constants, analysis.operator.grid(), &analysis.spectrum.eigenfunctions[i]));
    let checks_ms = ms(start);

    let mut verdict = analysis.report.verdict;
    let mut failures = Vec::new();
    if !oracle.passed {
        failures.push(format!("oracle gap {:.3e} exceeds {:.1e}", oracle.max_gap, oracle.tol));
    }
    match zero_mode {
        Some(Ok(z)) => {
            if z.relative_l2_error >= ZERO_MODE_L2_TOL || z.slope_error >= ZERO_MODE_SLOPE_TOL {
                failures.push(format!(
                    "zero mode differs from the scaling direction (L² {:.3e}, slope {:.3e})",
                    z.relative_l2_error, z.slope_error
                ));
            }
            report.zero_mode = Some(z);
        }
        Some(Err(e)) => failures.push(format!("zero mode: {e}")),
        None => failures.push("no eigenvalue of A_0 near zero".into()),
    }

    let start = Instant::now();
    if cfg.lemmas {
        match run_lemmas_with(p, &cfg.solver, &analysis) {
            Ok(l) => {
                if !l.passed {
                    failures.push("lemma suite failed".into());
                }
                report.lemmas = Some(l);
            }
            Err(e) => failures.push(format!("lemma suite: {e}")),
        }
    }
    let lemmas_ms = ms(start);

    if !failures.is_empty() && verdict != Verdict::Inconclusive {
        verdict = Verdict::Violation;
    }
    if !failures.is_empty() {
        report.error = Some(failures.join("; "));
    }
    report.verdict = verdict;
    report.oracle = Some(oracle);
    report.kernel = Some(analysis.report);
    if cfg.timing {
        report.timing = Some(StageTiming { analyze_ms, checks_ms, lemmas_ms });
    }
    report
}

pub fn run_verify(p: &ProblemParams, cfg: &RunConfig) -> RunReport {
    let command = if cfg.lemmas { Command::Lemmas } else { Command::Verify };
    RunReport::new(command, *cfg, vec![verify_triple(p, cfg)], None)
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::InvalidParams("--jobs must be at least 1".into()));
        }
        b = b.num_threads(j);
    }
    b.build().map_err(|e| Error::Io(e.to_string()))
}

/// Verifies every triple of `spec` on a worker pool; results keep `(n, s, γ)` order.
pub fn run_sweep(spec: &SweepSpec, cfg: &RunConfig) -> Result<RunReport> {
    cfg.solver.validate()?;
    let triples = spec.triples()?;
    let reports = pool(cfg.jobs)?.install(|| triples.par_iter().map(|p| verify_triple(p, cfg)).collect());
    Ok(RunReport::new(Command::Sweep, *cfg, reports, None))
}

/// Profile equation, energy isometry and Laplacian identity checks.
pub fn identity_report() -> Result<IdentityReport> {
    let mut failures = Vec::new();
    let samples: Vec<f64> = (0..=1000).map(|i| -30.0 + 0.06 * f64::from(i)).collect();
    let spec = SweepSpec { include_boundary: true, ..SweepSpec::default() };
    let u_equation: Vec<UEquationRow> = spec
        .triples()?
        .into_iter()
        .map(|p| UEquationRow { params: p, report: check_u_equation(&derive_constants(&p), &samples) })
        .collect();
    for row in &u_equation {
        let p = &row.params;
        if row.report.max_residual >= 1e-10 || row.report.lambda_error >= 1e-10 {
            failures.push(format!(
                "profile equation at n={} s={} gamma={}: residual {:.3e}, lambda error {:.3e}",
                p.n, p.s, p.gamma, row.report.max_residual, row.report.lambda_error
            ));
        }
    }

    let q = QuadratureSpec::default();
    let mut rng = StdRng::seed_from_u64(0x1DE7);
    let mut isometry = Vec::new();
    for i in 0..10u32 {
        let n = 3 + i % 4;
        let center = rng.gen_range(1.0..3.0);
        let half_width = rng.gen_range(0.2..0.9) * center;
        let power = rng.gen_range(2..6);
        let u = RadialTestFunction::bump(center, half_width, power)?;
        let b = b_form(&u, &u, &q, n)?;
        let energy = dirichlet_energy_radial(&u, &q, n)?;
        let relative_error = (b - energy).abs() / energy;
        if relative_error >= 1e-6 {
            failures.push(format!("isometry error {relative_error:.3e} for bump {i}"));
        }
        isometry.push(IsometryRow { n, center, half_width, power, b_form: b, energy, relative_error });
    }

    let bump = RadialTestFunction::bump(2.0, 1.0, 4)?;
    let bump_t: Vec<f64> = (0..=20).map(|i| -(1.2 + 0.08 * f64::from(i)).ln()).collect();
    let laplacian_bump = check_laplacian_identity(&bump, &bump_t, 3, 1e-3)?;
    match laplacian_bump.ratio {
        Some(r) if (r - 4.0).abs() <= 0.8 => {}
        other => failures.push(format!("Laplacian identity ratio {other:?} is not 4 ± 0.8")),
    }
    let power = RadialTestFunction::power(-0.5, 0.5, 2.0)?;
    let power_t: Vec<f64> = (0..=20).map(|i| -(0.6 + 0.06 * f64::from(i)).ln()).collect();
    let laplacian_power = check_laplacian_identity(&power, &power_t, 3, 1e-3)?;
    if laplacian_power.max_extrapolated >= 1e-8 {
        failures.push(format!("critical power residual {:.3e}", laplacian_power.max_extrapolated));
    }

    let zero = RadialTestFunction::zero();
    let zero_t: Vec<f64> = vec![-0.3, 0.0, 0.3];
    let zero_function = [
        b_form(&zero, &zero, &q, 3)?,
        dirichlet_energy_radial(&zero, &q, 3)?,
        check_laplacian_identity(&zero, &zero_t, 3, 1e-3)?.max_residual,
    ];
    if zero_function.iter().any(|&x| x != 0.0) {
        failures.push("zero function has nonzero identity residuals".into());
    }
    let passed = failures.is_empty();
    Ok(IdentityReport { u_equation, isometry, laplacian_bump, laplacian_power, zero_function, failures, passed })
}

pub fn run_identities(cfg: &RunConfig) -> Result<RunReport> {
    let identities = identity_report()?;
    Ok(RunReport::new(Command::Identities, *cfg, Vec::new(), Some(identities)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sweep_triples() {
        let t = SweepSpec::default().triples().unwrap();
        assert_eq!(t.len(), 4 * 15);
        assert!(t.windows(2).all(|w| (w[0].n, w[0].s, w[0].gamma) < (w[1].n, w[1].s, w[1].gamma)));
        assert!(t.iter().all(|p| p.gamma + p.s > 0.0));
        let with_boundary = SweepSpec { include_boundary: true, ..SweepSpec::default() }.triples().unwrap();
        assert_eq!(with_boundary.len(), 64);
    }

    #[test]
    fn invalid_sweep_rejected() {
        let bad = SweepSpec { s_values: vec![2.0], ..SweepSpec::default() };
        assert!(matches!(bad.triples(), Err(Error::InvalidParams(_))));
        let bad = SweepSpec { gamma_fractions: vec![1.0], ..SweepSpec::default() };
        assert!(bad.triples().is_err());
        let empty = SweepSpec { n_values: vec![], ..SweepSpec::default() };
        assert!(empty.triples().is_err());
    }

    #[test]
    fn verify_reference_triple() {
        let p = validate_params(3, 1.0, 0.0, ParamMode::Theorem).unwrap();
        let r = run_verify(&p, &RunConfig::default());
        assert_eq!(r.triples[0].verdict, Verdict::VerifiedDim1, "{:?}", r.triples[0].error);
        assert_eq!(r.exit_code(), 0);
        let k = r.triples[0].kernel.as_ref().unwrap();
        assert_eq!(k.per_mode.iter().map(|m| m.kernel_dim).collect::<Vec<_>>(), vec![1, 0]);
    }

    #[test]
    fn identities_pass() {
        let r = identity_report().unwrap();
        assert!(r.passed, "{:?}", r.failures);
    }
}
