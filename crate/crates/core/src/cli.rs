//! Command-line front end. [`run`] takes the argument list and output
//! streams so that it can be driven from tests.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::catalog::{catalog_entry, QutritGamma};
use crate::error::{Error, Result};
use crate::fuzzy::{check_conditions, AnsatzScheme};
use crate::hwsic::{decompose_hw, hw_sic_from_fiducial, FiducialKet};
use crate::linalg::{Ket, Operator};
use crate::optics::{build_apparatus, sample_clicks};
use crate::povm::{compose_sequential, ic_rank, is_sic, validate_pom, Label, Pom, SequentialScheme, SicReport};
use crate::tomography::{frequencies, reconstruct, self_test};

/// Version of the JSON and CSV layouts written by the CLI.
pub const FORMAT_VERSION: u32 = 1;

pub const TOL_ENV: &str = "SICSEQ_TOL";

const BUILTINS: &str = "tetrahedron, qutrit-family, dim4, hoggar";

#[derive(Debug, Parser)]
#[command(
    name = "sicseq",
    version = concat!(env!("CARGO_PKG_VERSION"), " (format 1)"),
    about = "SIC POMs as two-step measurements"
)]
struct Cli {
    /// Numerical tolerance for validity checks.
    #[arg(long, global = true, env = TOL_ENV, default_value_t = 1e-9)]
    tol: f64,

    /// Write the artifact here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Heisenberg-Weyl SIC from a fiducial ket, or its two-step scheme.
    Hw {
        #[arg(long)]
        dim: usize,
        /// Ket JSON file.
        #[arg(long)]
        fiducial: PathBuf,
        #[arg(long)]
        decompose: bool,
    },
    /// Built-in constructions for d = 2, 3, 4, 8.
    Catalog {
        #[arg(long)]
        dim: usize,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
        #[arg(long, value_enum, default_value_t = What::Pom)]
        what: What,
    },
    /// Checks the fuzzy-ansatz SIC conditions of a scheme.
    FuzzyCheck {
        /// Ansatz JSON file or built-in name.
        #[arg(long)]
        scheme: String,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
    },
    /// Validity, SIC and IC report for a POM.
    Verify {
        /// POM JSON file or built-in name.
        #[arg(long)]
        pom: String,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
        /// Also fail when the POM is not a SIC.
        #[arg(long)]
        require_sic: bool,
    },
    /// Builds the optical apparatus for a scheme and simulates it.
    Optics {
        /// Scheme JSON file or built-in name.
        #[arg(long)]
        scheme: String,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
        /// Density matrix JSON file; defaults to |0><0|.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Sample this many photons instead of printing probabilities.
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the full circuit JSON here.
        #[arg(long)]
        circuit: Option<PathBuf>,
    },
    /// Linear-inversion state reconstruction.
    Tomography {
        /// POM JSON file or built-in name.
        #[arg(long, required_unless_present = "self_test")]
        pom: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
        /// CSV with columns label,count.
        #[arg(long, required_unless_present = "self_test")]
        counts: Option<PathBuf>,
        #[arg(long)]
        project_psd: bool,
        /// Reference density matrix JSON for error metrics.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        self_test: bool,
        #[arg(long, required_if_eq("self_test", "true"))]
        dim: Option<usize>,
        #[arg(long, default_value_t = 50)]
        states: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum What {
    Pom,
    Scheme,
    Mub,
}

enum Outcome {
    Ok,
    Failed,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    output: Option<PathBuf>,
}

impl Io<'_> {
    fn emit(&mut self, text: &str) -> Result<()> {
        match &self.output {
            Some(path) => fs::write(path, text)?,
            None => self.out.write_all(text.as_bytes())?,
        }
        Ok(())
    }

    fn warn(&mut self, msg: &str) {
        let _ = writeln!(self.err, "warning: {msg}");
    }
}

/// Runs the CLI; returns 0 on success, 1 on a failed verification and 2
/// on usage, input or I/O errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        let _ = writeln!(err, "error: tolerance must be positive, got {}", cli.tol);
        return 2;
    }
    let mut io = Io {
        out,
        err,
        output: cli.output.clone(),
    };
    match dispatch(&cli, &mut io) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::Failed) => 1,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            2
        }
    }
}

fn dispatch(cli: &Cli, io: &mut Io) -> Result<Outcome> {
    let tol = cli.tol;
    match &cli.command {
        Command::Hw {
            dim,
            fiducial,
            decompose,
        } => {
            let ket: Ket = read_json(fiducial)?;
            if ket.dim() != *dim {
                return Err(Error::DimensionMismatch {
                    expected: *dim,
                    found: ket.dim(),
                });
            }
            let fid = FiducialKet::new(ket, tol)?;
            if *decompose {
                io.emit(&to_json(&decompose_hw(&fid))?)?;
            } else {
                io.emit(&to_json(&hw_sic_from_fiducial(&fid))?)?;
            }
            Ok(Outcome::Ok)
        }
        Command::Catalog { dim, gamma, what } => {
            let entry = catalog_entry(*dim, gamma_arg(*gamma, io)?)?;
            let text = match what {
                What::Pom => to_json(&entry.pom)?,
                What::Scheme => to_json(&entry.scheme)?,
                What::Mub => to_json(&entry.mubs.with_computational())?,
            };
            io.emit(&text)?;
            Ok(Outcome::Ok)
        }
        Command::FuzzyCheck { scheme, gamma } => {
            let ansatz = load_ansatz(scheme, *gamma, io)?;
            let report = check_conditions(&ansatz, tol);
            let ok = report.lambda_ok && report.unbiased_ok && report.cross_ok;
            io.emit(&condition_table(&report))?;
            Ok(if ok { Outcome::Ok } else { Outcome::Failed })
        }
        Command::Verify {
            pom,
            gamma,
            require_sic,
        } => {
            let pom = load_pom(pom, *gamma, io)?;
            let report = verify_report(&pom, tol);
            io.emit(&to_json(&report)?)?;
            let ok = report.valid && (!require_sic || report.sic.is_sic);
            Ok(if ok { Outcome::Ok } else { Outcome::Failed })
        }
        Command::Optics {
            scheme,
            gamma,
            state,
            shots,
            seed,
            circuit,
        } => {
            let scheme = load_scheme(scheme, *gamma, io)?;
            let app = build_apparatus(&scheme, tol)?;
            let rho = match state {
                Some(path) => read_json::<Operator>(path)?,
                None => Ket::basis(scheme.dim(), 0).projector(),
            };
            if let Some(path) = circuit {
                fs::write(path, to_json(&app.full_circuit())?)?;
            }
            let text = match shots {
                Some(n) => {
                    let counts = sample_clicks(&app, &rho, *n, *seed, tol)?;
                    write_csv("count", app.detectors(), counts.iter().map(u64::to_string))?
                }
                None => {
                    let probs = app.distribution(&rho, tol)?;
                    write_csv("probability", app.detectors(), probs.iter().map(f64::to_string))?
                }
            };
            io.emit(&text)?;
            Ok(Outcome::Ok)
        }
        Command::Tomography {
            pom,
            gamma,
            counts,
            project_psd,
            truth,
            self_test: run_self_test,
            dim,
            states,
            seed,
        } => {
            if *run_self_test {
                let d = dim.ok_or(Error::InvalidDimension(0))?;
                let report = self_test(d, *states, *seed)?;
                io.emit(&to_json(&report)?)?;
                return Ok(if report.passed { Outcome::Ok } else { Outcome::Failed });
            }
            let (Some(pom), Some(counts)) = (pom, counts) else {
                return Err(Error::Parse("--pom and --counts are required".into()));
            };
            let pom = load_pom(pom, *gamma, io)?;
            let counts = read_counts(counts, pom.labels())?;
            let truth = truth.as_deref().map(read_json::<Operator>).transpose()?;
            let report = reconstruct(&frequencies(&counts)?, &pom, *project_psd, truth.as_ref())?;
            io.emit(&to_json(&report)?)?;
            Ok(Outcome::Ok)
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    dim: usize,
    outcomes: usize,
    valid: bool,
    worst_eigenvalue: f64,
    worst_outcome: usize,
    hermiticity_deviation: f64,
    completeness_deviation: f64,
    sic: SicReport,
    ic_rank: usize,
    is_ic: bool,
}

fn verify_report(pom: &Pom, tol: f64) -> VerifyReport {
    let diag = validate_pom(pom, tol);
    let rank = ic_rank(pom, 1e-10);
    VerifyReport {
        dim: pom.dim(),
        outcomes: pom.len(),
        valid: diag.valid,
        worst_eigenvalue: diag.worst_eigenvalue,
        worst_outcome: diag.worst_outcome,
        hermiticity_deviation: diag.hermiticity_deviation,
        completeness_deviation: diag.completeness_deviation,
        sic: is_sic(pom, tol),
        ic_rank: rank,
        is_ic: rank == pom.dim() * pom.dim(),
    }
}

fn condition_table(r: &crate::fuzzy::ConditionReport) -> String {
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let sign = match r.lambda_sign {
        Some(s) => format!("{s:?}").to_lowercase(),
        None => "none".into(),
    };
    let mut s = format!("{:<10} {:<6} {:>12}  detail\n", "condition", "status", "deviation");
    s += &format!(
        "{:<10} {:<6} {:>12.3e}  sign={sign}\n",
        "lambda",
        verdict(r.lambda_ok),
        r.lambda_deviation
    );
    s += &format!(
        "{:<10} {:<6} {:>12.3e}\n",
        "unbiased",
        verdict(r.unbiased_ok),
        r.unbiased_deviation
    );
    s += &format!(
        "{:<10} {:<6} {:>12.3e}  route={:?} target={:.12}\n",
        "cross",
        verdict(r.cross_ok),
        r.cross_deviation,
        r.cross_route,
        r.cross_target
    );
    s += &format!("{:<10} {:<6}\n", "sic", verdict(r.sic));
    s
}

fn gamma_arg(gamma: Option<f64>, io: &mut Io) -> Result<QutritGamma> {
    let g = QutritGamma::unchecked(gamma.unwrap_or(0.0))?;
    if !g.in_range() {
        io.warn(&format!(
            "gamma {} outside [0, pi/6]; using it as given",
            g.value()
        ));
    }
    Ok(g)
}

fn builtin_dim(name: &str) -> Option<usize> {
    match name {
        "tetrahedron" => Some(2),
        "qutrit-family" => Some(3),
        "dim4" => Some(4),
        "hoggar" => Some(8),
        _ => None,
    }
}

/// Built-in names resolve to the catalog scheme; anything else is a path.
fn load_scheme(arg: &str, gamma: Option<f64>, io: &mut Io) -> Result<SequentialScheme> {
    match builtin_dim(arg) {
        Some(d) => Ok(catalog_entry(d, gamma_arg(gamma, io)?)?.scheme),
        None => read_json(Path::new(arg)),
    }
}

/// Built-in names resolve to the POM realized by the catalog scheme, whose
/// labels match the optics detector labels.
fn load_pom(arg: &str, gamma: Option<f64>, io: &mut Io) -> Result<Pom> {
    match builtin_dim(arg) {
        Some(_) => Ok(compose_sequential(&load_scheme(arg, gamma, io)?)),
        None => read_json(Path::new(arg)),
    }
}

fn load_ansatz(arg: &str, gamma: Option<f64>, io: &mut Io) -> Result<AnsatzScheme> {
    match builtin_dim(arg) {
        Some(d) => catalog_entry(d, gamma_arg(gamma, io)?)?
            .ansatz
            .ok_or_else(|| Error::InvalidScheme(format!("{arg} is not of the fuzzy form"))),
        None => read_json(Path::new(arg)),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e} (built-ins: {BUILTINS})", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_csv(column: &str, labels: &[Label], values: impl Iterator<Item = String>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", column])?;
    for (label, value) in labels.iter().zip(values) {
        w.write_record([label.to_string(), value])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Counts in POM label order from a `label,count` CSV; every label must appear once.
fn read_counts(path: &Path, labels: &[Label]) -> Result<Vec<u64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut counts: Vec<Option<u64>> = vec![None; labels.len()];
    for record in reader.records() {
        let record = record?;
        if record.len() != 2 {
            return Err(Error::Parse(format!("expected 2 columns, found {}", record.len())));
        }
        let label: Label = record[0].parse()?;
        let count: u64 = record[1]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad count {:?}", &record[1])))?;
        let i = labels
            .iter()
            .position(|l| *l == label)
            .ok_or_else(|| Error::MalformedLabels(format!("unknown label {label}")))?;
        if counts[i].replace(count).is_some() {
            return Err(Error::MalformedLabels(format!("duplicate label {label}")));
        }
    }
    counts
        .into_iter()
        .zip(labels)
        .map(|(c, l)| c.ok_or_else(|| Error::MalformedLabels(format!("missing label {l}"))))
        .collect()
}
