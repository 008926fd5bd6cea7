//! Run reports and their JSON and CSV forms.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::emden_fowler::{LaplacianIdentityReport, UEquationReport};
use crate::error::{Error, Result};
use crate::lemmas::LemmaSuiteReport;
use crate::oracle::{OracleCheck, ZeroModeCheck};
use crate::params::{CaseTag, DerivedConstants, ProblemParams};
use crate::profiles::{eval_v, u_hat, z_hat};
use crate::spectral::{KernelAnalysis, KernelReport, SolverConfig, Verdict};

pub const SCHEMA_VERSION: &str = "1";

pub const CSV_HEADER: [&str; 11] =
    ["n", "s", "gamma", "epsilon", "lambda", "mu", "kernel_dim", "margin", "lowest_eig", "oracle_lowest", "verdict"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Verify,
    Sweep,
    Identities,
    Lemmas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Everything that shapes a run, echoed into its report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub solver: SolverConfig,
    /// Largest accepted gap between discrete and closed-form levels.
    pub oracle_tol: f64,
    pub lemmas: bool,
    /// Worker threads for sweeps; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    /// Record wall-clock stage timings. Off by default so reports are reproducible.
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), oracle_tol: 1e-4, lemmas: false, jobs: None, timing: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub analyze_ms: f64,
    pub checks_ms: f64,
    pub lemmas_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleReport {
    pub params: ProblemParams,
    pub constants: DerivedConstants,
    pub case: CaseTag,
    pub verdict: Verdict,
    pub kernel: Option<KernelReport>,
    pub oracle: Option<OracleCheck>,
    pub zero_mode: Option<ZeroModeCheck>,
    pub lemmas: Option<LemmaSuiteReport>,
    /// Why the triple could not be decided, when it could not.
    pub error: Option<String>,
    pub timing: Option<StageTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UEquationRow {
    pub params: ProblemParams,
    pub report: UEquationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryRow {
    pub n: u32,
    pub center: f64,
    pub half_width: f64,
    pub power: i32,
    pub b_form: f64,
    pub energy: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub u_equation: Vec<UEquationRow>,
    pub isometry: Vec<IsometryRow>,
    /// Smooth bump: raw residuals and their ratio under h-halving.
    pub laplacian_bump: LaplacianIdentityReport,
    /// `r^{−(n−2)/2}`: residual after Richardson extrapolation.
    pub laplacian_power: LaplacianIdentityReport,
    /// `B(0,0)`, `E(0)` and the Laplacian residual of the zero function.
    pub zero_function: [f64; 3],
    pub failures: Vec<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub verified_dim_1: usize,
    pub boundary_dim_n_plus_1: usize,
    pub violation: usize,
    pub inconclusive: usize,
}

impl Summary {
    pub fn tally<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> Self {
        let mut s = Self::default();
        for v in verdicts {
            match v {
                Verdict::VerifiedDim1 => s.verified_dim_1 += 1,
                Verdict::BoundaryDimNPlus1 => s.boundary_dim_n_plus_1 += 1,
                Verdict::Violation => s.violation += 1,
                Verdict::Inconclusive => s.inconclusive += 1,
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub command: Command,
    pub config: RunConfig,
    pub triples: Vec<TripleReport>,
    pub identities: Option<IdentityReport>,
    pub summary: Summary,
}

impl RunReport {
    pub fn new(command: Command, config: RunConfig, triples: Vec<TripleReport>, identities: Option<IdentityReport>) -> Self {
        let summary = Summary::tally(triples.iter().map(|t| &t.verdict));
        Self { schema_version: SCHEMA_VERSION.to_string(), command, config, triples, identities, summary }
    }

    /// 0 all verified, 1 a violation, 2 inconclusive without violation.
    pub fn exit_code(&self) -> i32 {
        let identities_failed = self.identities.as_ref().is_some_and(|i| !i.passed);
        if self.summary.violation > 0 || identities_failed {
            1
        } else if self.summary.inconclusive > 0 {
            2
        } else {
            0
        }
    }
}

/// Twelve significant digits.
fn num(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn to_json(r: &RunReport) -> Result<String> {
    serde_json::to_string_pretty(r).map_err(|e| Error::Io(e.to_string()))
}

pub fn from_json(text: &str) -> Result<RunReport> {
    let r: RunReport = serde_json::from_str(text).map_err(|e| Error::InvalidParams(format!("bad report: {e}")))?;
    if r.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidParams(format!("unsupported schema_version {}", r.schema_version)));
    }
    Ok(r)
}

/// One row per (triple, sphere level); a triple without a kernel report gets a
/// single row with the mode columns left empty.
pub fn to_csv(r: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for t in &r.triples {
        let p = &t.params;
        let c = &t.constants;
        let head = [p.n.to_string(), num(p.s), num(p.gamma), num(c.epsilon), num(c.lambda)];
        let verdict = t.verdict.as_str().to_string();
        let oracle_lowest = t.oracle.as_ref().map(|o| o.oracle_lowest);
        match &t.kernel {
            Some(k) => {
                for m in &k.per_mode {
                    let mut row: Vec<String> = head.to_vec();
                    row.extend([
                        num(m.mu),
                        m.kernel_dim.to_string(),
                        num(m.margin),
                        num(m.lowest_eigenvalue),
                        oracle_lowest.map(|e| num(e + m.mu)).unwrap_or_default(),
                        verdict.clone(),
                    ]);
                    w.write_record(&row).map_err(io)?;
                }
            }
            None => {
                let mut row: Vec<String> = head.to_vec();
                row.extend([String::new(), String::new(), String::new(), String::new(), String::new(), verdict]);
                w.write_record(&row).map_err(io)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn render(r: &RunReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => to_json(r),
        ReportFormat::Csv => to_csv(r),
    }
}

/// Writes the report to `path`, or returns it for stdout when `path` is `None`.
pub fn emit_report(r: &RunReport, format: ReportFormat, path: Option<&Path>) -> Result<Option<String>> {
    let text = render(r, format)?;
    match path {
        Some(p) => {
            std::fs::write(p, text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

/// Plot-ready columns `t, U_hat, V, Z_hat` plus every `A_0` eigenfunction.
pub fn profiles_csv(a: &KernelAnalysis) -> String {
    let c = &a.constants;
    let grid = a.operator.grid();
    let mut out = String::from("t,u_hat,v,z_hat");
    for k in 0..a.spectrum.eigenfunctions.len() {
        let _ = write!(out, ",phi_{k}");
    }
    out.push('\n');
    for (i, &t) in grid.nodes().iter().enumerate() {
        let _ = write!(out, "{},{},{},{}", num(t), num(u_hat(t, c)), num(eval_v(t, c)), num(z_hat(t, c)));
        for f in &a.spectrum.eigenfunctions {
            let _ = write!(out, ",{}", num(f[i]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_header_only_csv() {
        let r = RunReport::new(Command::Sweep, RunConfig::default(), Vec::new(), None);
        assert_eq!(to_csv(&r).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(0.25), "2.50000000000e-1");
        assert_eq!(num(-0.75), "-7.50000000000e-1");
        let x: f64 = num(std::f64::consts::PI).parse().unwrap();
        assert!((x - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn exit_codes_follow_summary() {
        let mut r = RunReport::new(Command::Sweep, RunConfig::default(), Vec::new(), None);
        r.summary.inconclusive = 1;
        assert_eq!(r.exit_code(), 2);
        r.summary.violation = 1;
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn rejects_unknown_schema() {
        let mut r = RunReport::new(Command::Verify, RunConfig::default(), Vec::new(), None);
        r.schema_version = "0".into();
        let text = to_json(&r).unwrap();
        assert!(from_json(&text).is_err());
    }
}
