//! Batch front end: loads problem files, runs one evaluation or verification
//! per file and writes JSON (plus a CSV summary for verifications).
//!
//! Exit codes: 0 success, 1 usage or validation failure, 2 a verification
//! did not pass.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use siegel_theta::exact::format_rat;
use siegel_theta::modular::{self, DEFAULT_Y_GRID};
use siegel_theta::simplex::{g_n1, g_value};
use siegel_theta::theta::{self, g_truncation_scale, EPS_FLOOR};
use siegel_theta::{
    cone::validate_frame, Kernel, Problem, Rule, SimplexChart, ThetaOptions, Tolerances, TransformReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "siegel-theta", version, about = "Siegel theta series for Lorentzian lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Problem file (JSON); repeat for a batch
    #[arg(long, global = true)]
    pub problem: Vec<PathBuf>,
    /// Truncation target for theta sums (at least 1e-10)
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub eps: f64,
    /// Cubature rule: gm:<degree> or mc:<samples>:<seed>
    #[arg(long, global = true, default_value = "gm:7")]
    pub rule: String,
    /// Comma-separated y values for verify-limit
    #[arg(long, global = true, value_delimiter = ',')]
    pub ygrid: Option<Vec<f64>>,
    /// verify-limit: grow Y along the problem's Z.Y instead of the identity
    #[arg(long, global = true)]
    pub ydir: bool,
    /// Seed for Monte Carlo rules given as mc:<samples>
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path for JSON; verifications also write a .csv beside it
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (results do not depend on this)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Signature, determinant, frame validity and enumeration bounds
    Inspect,
    /// Cone function f(U)
    FEval,
    /// Kernel g(U)
    GEval,
    /// Holomorphic series at Z
    ThetaF,
    /// Modular series at Z
    ThetaG,
    /// Fourier coefficient a(T) of the holomorphic series
    Fourier,
    /// Representatives of A^-1 Z^(m x n) mod Z^(m x n)
    Cosets,
    /// Check theta(Z + S) against the translation law
    VerifyTranslate,
    /// Check theta(-Z^-1) against the inversion law
    VerifyInvert,
    /// Check g(U sqrt(y)) -> f(U)
    VerifyLimit,
}

impl Command {
    fn is_verification(self) -> bool {
        matches!(self, Command::VerifyTranslate | Command::VerifyInvert | Command::VerifyLimit)
    }
}

/// Resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub problems: Vec<PathBuf>,
    pub eps: f64,
    pub rule: Rule,
    pub ygrid: Vec<f64>,
    pub ydir: bool,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, String> {
        if cli.problem.is_empty() {
            return Err("--problem is required".into());
        }
        if !(cli.eps >= EPS_FLOOR) || !cli.eps.is_finite() {
            return Err(format!("--eps must be a finite number of at least {EPS_FLOOR:e}"));
        }
        let rule = parse_rule(&cli.rule, cli.seed)?;
        let ygrid = cli.ygrid.unwrap_or_else(|| DEFAULT_Y_GRID.to_vec());
        if ygrid.is_empty() || ygrid.iter().any(|&y| !(y > 0.0) || !y.is_finite()) {
            return Err("--ygrid needs positive finite values".into());
        }
        if cli.threads == Some(0) {
            return Err("--threads must be positive".into());
        }
        Ok(Self {
            command: cli.command,
            problems: cli.problem,
            eps: cli.eps,
            rule,
            ygrid,
            ydir: cli.ydir,
            seed: cli.seed,
            out: cli.out,
            threads: cli.threads,
        })
    }

    fn kernel(&self) -> Kernel {
        Kernel::with_rule(self.rule)
    }

    fn theta_options(&self) -> ThetaOptions {
        ThetaOptions::with_eps(self.eps)
    }
}

/// `mc:<samples>` takes its seed from `--seed`; a seed in the rule must agree with it.
fn parse_rule(desc: &str, seed: Option<u64>) -> Result<Rule, String> {
    let parts: Vec<&str> = desc.split(':').collect();
    let desc = match (parts.as_slice(), seed) {
        (["mc", n], Some(s)) => format!("mc:{n}:{s}"),
        (["mc", _], None) => return Err("a Monte Carlo rule needs a seed: use mc:<samples>:<seed> or --seed".into()),
        _ => desc.to_string(),
    };
    let rule: Rule = desc.parse().map_err(|e| format!("--rule: {e}"))?;
    if let (Rule::MonteCarlo { seed: rs, .. }, Some(s)) = (rule, seed) {
        if rs != s {
            return Err(format!("--seed {s} conflicts with the seed {rs} in --rule"));
        }
    }
    Ok(rule)
}

enum Failure {
    Invalid(String),
}

impl Failure {
    fn at(self, path: &Path) -> Self {
        let Failure::Invalid(msg) = self;
        Failure::Invalid(format!("{}: {msg}", path.display()))
    }
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Invalid(e.to_string())
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_INVALID
                }
            };
        }
    };
    let config = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_INVALID;
        }
    };
    let result = match config.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| execute(&config)),
            Err(e) => Err(Failure::Invalid(e.to_string())),
        },
        None => execute(&config),
    };
    match result.and_then(|outcome| emit(&config, outcome, stdout)) {
        Ok(code) => code,
        Err(Failure::Invalid(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_INVALID
        }
    }
}

struct Outcome {
    documents: Vec<Value>,
    reports: Vec<TransformReport>,
}

fn execute(config: &RunConfig) -> Result<Outcome, Failure> {
    let mut documents = Vec::new();
    let mut reports = Vec::new();
    for path in &config.problems {
        let problem = Problem::from_path(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
        if config.command.is_verification() {
            let report = verify(config, &problem).map_err(|e| e.at(path))?;
            documents.push(serde_json::to_value(&report)?);
            reports.push(report);
        } else {
            documents.push(evaluate(config, &problem).map_err(|e| e.at(path))?);
        }
    }
    Ok(Outcome { documents, reports })
}

fn verify(config: &RunConfig, problem: &Problem) -> Result<TransformReport, Failure> {
    let frame = problem.require_frame()?;
    let tol = Tolerances::default();
    let opts = config.theta_options();
    let kernel = config.kernel();
    let mut report = match config.command {
        Command::VerifyTranslate => modular::verify_translate(
            &frame,
            &problem.characteristics()?,
            &problem.translation(),
            &problem.siegel_point()?,
            &opts,
            &kernel,
            &tol,
        )?,
        Command::VerifyInvert => {
            modular::verify_invert(&frame, &problem.characteristics()?, &problem.siegel_point()?, &opts, &kernel, &tol)?
        }
        Command::VerifyLimit => {
            let u = problem.require_u()?;
            if config.ydir {
                let z = problem.siegel_point()?;
                modular::verify_limit_along(&frame, u, z.y(), &config.ygrid, &kernel, &tol)?
            } else {
                modular::verify_limit(&frame, u, &config.ygrid, &kernel, &tol)?
            }
        }
        _ => unreachable!("not a verification"),
    };
    report.inputs.insert("rule".into(), Value::from(config.rule.to_string()));
    report.inputs.insert("eps".into(), Value::from(config.eps));
    Ok(report)
}

fn evaluate(config: &RunConfig, problem: &Problem) -> Result<Value, Failure> {
    let opts = config.theta_options();
    let doc = match config.command {
        Command::Inspect => inspect(problem),
        Command::FEval => {
            let frame = problem.require_frame()?;
            let u = problem.require_u()?;
            let xd = frame.x_data(u)?;
            let f = frame.f_value(u)?;
            json!({
                "f": format_rat(&f.value),
                "value": f.as_f64(),
                "in_component": f.in_component,
                "x": xd.x.iter().map(format_rat).collect::<Vec<_>>(),
            })
        }
        Command::GEval => {
            let frame = problem.require_frame()?;
            let u = problem.require_u()?.to_f64();
            let chart = SimplexChart::new(&frame)?;
            let g = g_value(&chart, &u, &config.rule)?;
            let mut doc = serde_json::to_value(&g)?;
            if frame.genus() == 1 {
                doc["closed_form"] = Value::from(g_n1(&frame, u.as_slice())?);
            }
            doc
        }
        Command::ThetaF => {
            let frame = problem.require_frame()?;
            let t = theta::theta_f(&frame, &problem.characteristics()?, &problem.siegel_point()?, &opts)?;
            serde_json::to_value(&t)?
        }
        Command::ThetaG => {
            let frame = problem.require_frame()?;
            let t = theta::theta_g(&frame, &problem.characteristics()?, &problem.siegel_point()?, &opts, &config.kernel())?;
            serde_json::to_value(&t)?
        }
        Command::Fourier => {
            let frame = problem.require_frame()?;
            let ch = problem.characteristics()?;
            if !ch.h.is_zero() {
                return Err(Failure::Invalid("fourier supports H = 0 only".into()));
            }
            let t = problem.require_t()?;
            let a = theta::fourier_coefficient(&frame, &ch.k, t)?;
            json!({"value": [a.re, a.im]})
        }
        Command::Cosets => {
            let c = theta::cosets(&problem.space, problem.genus());
            json!({"count": c.len(), "representatives": serde_json::to_value(&c)?["representatives"]})
        }
        _ => unreachable!("verifications are handled separately"),
    };
    Ok(doc)
}

fn inspect(problem: &Problem) -> Value {
    let space = &problem.space;
    let (r, s) = space.signature();
    let mut doc = json!({
        "m": space.dim(),
        "signature": [r, s],
        "abs_det": space.abs_det().to_string(),
        "lorentzian": space.require_lorentzian().is_ok(),
        "genus": problem.genus(),
    });
    if let Some(c) = &problem.frame_columns {
        let frame_doc = match validate_frame(space, c) {
            Ok(frame) => json!({
                "valid": true,
                "violations": [],
                "lambda_star": frame.enum_bound().ok(),
                "majorant_scale": g_truncation_scale(&frame).ok(),
            }),
            Err(e) => json!({"valid": false, "violations": [e.to_string()]}),
        };
        doc["frame"] = frame_doc;
    }
    if let Some(c) = &problem.c {
        doc["split"] = match space.split(c) {
            Ok(split) => json!({
                "q_c": format_rat(&split.q_c),
                "majorant_min_eigenvalue": split.majorant_f64().symmetric_eigen().eigenvalues.min(),
            }),
            Err(e) => json!({"error": e.to_string()}),
        };
    }
    doc
}

fn inputs_hash(report: &TransformReport) -> String {
    let canonical = serde_json::to_string(&report.inputs).expect("inputs serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Aggregate CSV: one row per report.
pub fn csv_summary(reports: &[TransformReport]) -> String {
    let mut out = String::from("law,inputs_hash,abs_err,rel_err,pass\n");
    for r in reports {
        out.push_str(&format!("{},{},{:e},{:e},{}\n", r.law.as_str(), inputs_hash(r), r.abs_err, r.rel_err, r.pass));
    }
    out
}

fn csv_path(out: &Path) -> PathBuf {
    let p = out.with_extension("csv");
    if p == out {
        let mut s = out.as_os_str().to_owned();
        s.push(".summary.csv");
        PathBuf::from(s)
    } else {
        p
    }
}

fn emit(config: &RunConfig, outcome: Outcome, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let doc = if outcome.documents.len() == 1 {
        outcome.documents.into_iter().next().unwrap()
    } else {
        Value::from(outcome.documents)
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    match &config.out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
            if config.command.is_verification() {
                let csv = csv_path(path);
                std::fs::write(&csv, csv_summary(&outcome.reports))
                    .map_err(|e| Failure::Invalid(format!("{}: {e}", csv.display())))?;
            }
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    if outcome.reports.iter().any(|r| !r.pass) {
        return Ok(EXIT_VERIFY_FAILED);
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_and_seed_resolution() {
        assert_eq!(parse_rule("gm:7", None).unwrap(), Rule::GrundmannMoller { degree: 7 });
        assert_eq!(parse_rule("mc:100", Some(3)).unwrap(), Rule::MonteCarlo { samples: 100, seed: 3 });
        assert_eq!(parse_rule("mc:100:3", Some(3)).unwrap(), Rule::MonteCarlo { samples: 100, seed: 3 });
        assert!(parse_rule("mc:100", None).is_err());
        assert!(parse_rule("mc:100:4", Some(3)).is_err());
        assert!(parse_rule("gm:8", None).is_err());
    }

    #[test]
    fn csv_path_beside_output() {
        assert_eq!(csv_path(Path::new("/tmp/r.json")), PathBuf::from("/tmp/r.csv"));
        assert_eq!(csv_path(Path::new("/tmp/r")), PathBuf::from("/tmp/r.csv"));
        assert_eq!(csv_path(Path::new("/tmp/r.csv")), PathBuf::from("/tmp/r.csv.summary.csv"));
    }

    #[test]
    fn unknown_subcommand_prints_usage() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["siegel-theta", "frobnicate"], &mut out, &mut err);
        assert_eq!(code, EXIT_INVALID);
        assert!(String::from_utf8(err).unwrap().contains("Usage"));
    }

    #[test]
    fn eps_floor_is_validated() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["siegel-theta", "inspect", "--problem", "x.json", "--eps", "1e-12"], &mut out, &mut err);
        assert_eq!(code, EXIT_INVALID);
    }
}
