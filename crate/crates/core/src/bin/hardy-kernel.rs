use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hardy_kernel::error::{Error, Result};
use hardy_kernel::mode_operator::GridConfig;
use hardy_kernel::params::{validate_params, ParamMode, ProblemParams};
use hardy_kernel::report::{emit_report, from_json, profiles_csv, render, ReportFormat, RunConfig, RunReport};
use hardy_kernel::run::{run_identities, run_sweep, run_verify, SweepSpec};
use hardy_kernel::spectral::{analyze, SolverConfig};

const EXIT_INVALID: u8 = 3;

/// Numerical certification of the linearized kernel around Hardy-Sobolev ground states
#[derive(Parser, Debug)]
#[command(name = "hardy-kernel", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Certify one parameter triple
    Verify {
        #[command(flatten)]
        triple: TripleArgs,
        /// Also run the lemma suite
        #[arg(long)]
        lemmas: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Certify a grid of parameter triples
    Sweep {
        /// Dimensions, comma separated
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u32>>,
        /// Weight exponents, comma separated
        #[arg(long, value_delimiter = ',')]
        s: Option<Vec<f64>>,
        /// Hardy coefficients as fractions of (n-2)^2/4, comma separated
        #[arg(long, value_delimiter = ',')]
        gamma_fractions: Option<Vec<f64>>,
        /// Add the gamma = s = 0 triple for every n
        #[arg(long)]
        boundary: bool,
        /// Also run the lemma suite on every triple
        #[arg(long)]
        lemmas: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check the change-of-variables identities and the profile equation
    Identities {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the lemma suite on one triple
    Lemmas {
        #[command(flatten)]
        triple: TripleArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Convert a saved JSON report, or emit plot-ready profiles
    Report {
        /// JSON report written by an earlier run
        #[arg(long)]
        input: Option<PathBuf>,
        /// Emit U_hat, V, Z_hat and the A_0 eigenfunctions as CSV
        #[arg(long)]
        profiles: bool,
        #[command(flatten)]
        triple: TripleArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct TripleArgs {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Accept gamma = s = 0, where the kernel has dimension n + 1
    #[arg(long)]
    boundary: bool,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// File of "key = value" lines; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Half-width of the truncated line (default: chosen from the parameters)
    #[arg(long = "T")]
    half_width: Option<f64>,
    /// Largest grid spacing
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    zero_tol: Option<f64>,
    #[arg(long)]
    separation: Option<f64>,
    /// Highest sphere level
    #[arg(long)]
    modes: Option<u32>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps
    #[arg(long)]
    jobs: Option<usize>,
    /// Record stage timings in the report
    #[arg(long)]
    timing: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

/// Values from the optional config file.
struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self(HashMap::new()));
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParams(format!("cannot read config {}: {e}", path.display())))?;
        let mut map = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidParams(format!("config line {}: expected key = value", i + 1)))?;
            map.insert(key.trim().replace('-', "_"), value.trim().to_string());
        }
        Ok(Self(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidParams(format!("config key {key}: cannot parse {v:?}"))),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse())
                .collect::<std::result::Result<Vec<T>, _>>()
                .map(Some)
                .map_err(|_| Error::InvalidParams(format!("config key {key}: cannot parse {v:?}"))),
        }
    }

    fn flag(&self, key: &str) -> Result<bool> {
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }
}

struct Settings {
    run: RunConfig,
    format: ReportFormat,
    out: Option<PathBuf>,
}

fn settings(common: &CommonArgs, file: &FileConfig, lemmas: bool) -> Result<Settings> {
    let pick = |flag: Option<f64>, key: &str| -> Result<Option<f64>> {
        Ok(match flag {
            Some(v) => Some(v),
            None => file.get(key)?,
        })
    };
    let defaults = SolverConfig::default();
    let grid = GridConfig {
        h_max: pick(common.h, "h")?.unwrap_or(GridConfig::default().h_max),
        half_width: pick(common.half_width, "T")?,
        ..GridConfig::default()
    };
    let solver = SolverConfig {
        zero_tol: pick(common.zero_tol, "zero_tol")?.unwrap_or(defaults.zero_tol),
        separation: pick(common.separation, "separation")?.unwrap_or(defaults.separation),
        k_max: match common.modes {
            Some(k) => k,
            None => file.get("modes")?.unwrap_or(defaults.k_max),
        },
        grid,
        ..defaults
    };
    solver.validate()?;
    let jobs = match common.jobs {
        Some(j) => Some(j),
        None => file.get("jobs")?,
    };
    if jobs == Some(0) {
        return Err(Error::InvalidParams("jobs must be at least 1".into()));
    }
    let format = match common.format {
        Some(f) => f.into(),
        None => match file.0.get("format").map(String::as_str) {
            None | Some("json") => ReportFormat::Json,
            Some("csv") => ReportFormat::Csv,
            Some(other) => return Err(Error::InvalidParams(format!("unknown format {other:?}"))),
        },
    };
    let out = common.out.clone().or_else(|| file.0.get("out").map(PathBuf::from));
    let run = RunConfig {
        solver,
        lemmas: lemmas || file.flag("lemmas")?,
        jobs,
        timing: common.timing || file.flag("timing")?,
        ..RunConfig::default()
    };
    Ok(Settings { run, format, out })
}

fn triple(args: &TripleArgs, file: &FileConfig) -> Result<ProblemParams> {
    let n = match args.n {
        Some(n) => n,
        None => file.get("n")?.ok_or_else(|| Error::InvalidParams("--n is required".into()))?,
    };
    let s = match args.s {
        Some(s) => s,
        None => file.get("s")?.ok_or_else(|| Error::InvalidParams("--s is required".into()))?,
    };
    let gamma = match args.gamma {
        Some(g) => g,
        None => file.get("gamma")?.ok_or_else(|| Error::InvalidParams("--gamma is required".into()))?,
    };
    let mode = if args.boundary || file.flag("boundary")? { ParamMode::Boundary } else { ParamMode::Theorem };
    validate_params(n, s, gamma, mode)
}

fn write_out(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish(report: &RunReport, s: &Settings) -> Result<u8> {
    if let Some(text) = emit_report(report, s.format, s.out.as_deref())? {
        print!("{text}");
        if s.format == ReportFormat::Json {
            println!();
        }
    }
    let m = &report.summary;
    eprintln!(
        "verified_dim_1 {} boundary_dim_n_plus_1 {} violation {} inconclusive {}",
        m.verified_dim_1, m.boundary_dim_n_plus_1, m.violation, m.inconclusive
    );
    if let Some(i) = &report.identities {
        for f in &i.failures {
            eprintln!("identity failure: {f}");
        }
    }
    for t in &report.triples {
        if let Some(e) = &t.error {
            eprintln!("n={} s={} gamma={}: {e}", t.params.n, t.params.s, t.params.gamma);
        }
    }
    Ok(report.exit_code() as u8)
}

fn execute(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::Verify { triple: t, lemmas, common } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let s = settings(&common, &file, lemmas)?;
            let p = triple(&t, &file)?;
            finish(&run_verify(&p, &s.run), &s)
        }
        Cmd::Lemmas { triple: t, common } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let s = settings(&common, &file, true)?;
            let p = triple(&t, &file)?;
            finish(&run_verify(&p, &s.run), &s)
        }
        Cmd::Sweep { n, s: s_values, gamma_fractions, boundary, lemmas, common } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let settings = settings(&common, &file, lemmas)?;
            let defaults = SweepSpec::default();
            let spec = SweepSpec {
                n_values: match n {
                    Some(v) => v,
                    None => file.list("n")?.unwrap_or(defaults.n_values),
                },
                s_values: match s_values {
                    Some(v) => v,
                    None => file.list("s")?.unwrap_or(defaults.s_values),
                },
                gamma_fractions: match gamma_fractions {
                    Some(v) => v,
                    None => file.list("gamma_fractions")?.unwrap_or(defaults.gamma_fractions),
                },
                include_boundary: boundary || file.flag("boundary")?,
            };
            finish(&run_sweep(&spec, &settings.run)?, &settings)
        }
        Cmd::Identities { common } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let s = settings(&common, &file, false)?;
            finish(&run_identities(&s.run)?, &s)
        }
        Cmd::Report { input, profiles, triple: t, common } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let s = settings(&common, &file, false)?;
            if profiles {
                let p = triple(&t, &file)?;
                let analysis = analyze(&p, &s.run.solver)?;
                write_out(&profiles_csv(&analysis), s.out.as_deref())?;
                return Ok(0);
            }
            let path = input.ok_or_else(|| Error::InvalidParams("report needs --input or --profiles".into()))?;
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::InvalidParams(format!("cannot read {}: {e}", path.display())))?;
            let report = from_json(&text)?;
            let mut rendered = render(&report, s.format)?;
            if s.format == ReportFormat::Json && s.out.is_none() {
                rendered.push('\n');
            }
            write_out(&rendered, s.out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidParams(_) | Error::Precondition(_) => ExitCode::from(EXIT_INVALID),
                Error::Inconclusive(_) | Error::Quadrature { .. } => ExitCode::from(2),
                Error::Io(_) => ExitCode::from(EXIT_INVALID),
            }
        }
    }
}
