//! Command-line front end for the `decomap` certifiers.
//!
//! Exit codes: 0 affirmative verdict, 1 negative verdict with certificate,
//! 2 inconclusive, 64 usage error, 65 unreadable or invalid input.

pub mod io;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand, ValueEnum};
use decomap::certify::{
    certify_cp_with, certify_decomposable_with, certify_separable_small, sep_witness, CertResult, CertifyOptions,
    DEFAULT_BUDGET, DEFAULT_TOL, SEP_WITNESS_BUDGET,
};
use decomap::cones::in_j;
use decomap::corpus::{entries_with_seed, lookup, CorpusObject, CORPUS_SEED};
use decomap::maps::{dual_eval, LinearMap};
use decomap::matlib::is_psd;
use decomap::opsys::OperatorSystem;
use decomap::DecomapError;
use serde_json::json;

use crate::io::{is_map_json, map_from_json, map_to_json, parse_text, to_text, MatrixFile};
use crate::report::{verify_report, Report, ReportSubject, EVALUATED, MEMBER, NOT_MEMBER};

pub const EXIT_AFFIRMATIVE: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INPUT: i32 = 65;

const CORPUS_SCHEME: &str = "corpus:";

#[derive(Parser, Debug)]
#[command(name = "decomap", version, about = "Certify positivity classes of linear maps between matrix algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Relative feasibility tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Dykstra cycles per feasibility problem (sep-witness: random conjugations).
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Seed for randomized restarts and sampling.
    #[arg(long, global = true, env = "DECOMAP_SEED", default_value_t = 0)]
    seed: u64,
    /// Seed for the random corpus entries.
    #[arg(long, global = true, default_value_t = CORPUS_SEED)]
    corpus_seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    #[value(name = "report-v1")]
    ReportV1,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Is the matrix positive semidefinite?
    CheckPsd {
        #[arg(long)]
        matrix: String,
    },
    /// Is the block matrix in J_k: PSD with PSD outer partial transpose?
    CheckJ {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        outer: Option<usize>,
        #[arg(long)]
        inner: Option<usize>,
    },
    /// Evaluate the dual functional s_phi on a block matrix.
    DualEval {
        #[arg(long)]
        map: String,
        #[arg(long)]
        matrix: String,
    },
    /// Complete positivity, with a Choi or extension certificate.
    CertifyCp {
        #[arg(long)]
        map: String,
    },
    /// Decomposability: a CP plus co-CP split, or a PPT witness.
    CertifyDecomposable {
        #[arg(long)]
        map: String,
    },
    /// PPT test, exact for pq <= 6.
    CertifySeparable {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        outer: Option<usize>,
        #[arg(long)]
        inner: Option<usize>,
    },
    /// Search for a positive map separating an entangled state.
    SepWitness {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        outer: Option<usize>,
        #[arg(long)]
        inner: Option<usize>,
    },
    /// Built-in test maps and matrices.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
    /// Re-check a report-v1 document ("-" reads standard input).
    Verify { report: String },
}

#[derive(Subcommand, Debug)]
enum CorpusAction {
    List,
    /// Print an entry as a map or matrix file.
    Dump { name: String },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Numeric(String),
}

impl From<DecomapError> for Failure {
    fn from(e: DecomapError) -> Self {
        match e {
            DecomapError::UnsupportedDimension { .. } => Failure::Usage(e.to_string()),
            DecomapError::Convergence { .. } | DecomapError::Sampling(_) => Failure::Numeric(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_AFFIRMATIVE };
            let text = e.render().to_string();
            let _ = if code == EXIT_USAGE { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Input(m) => (EXIT_INPUT, m),
                Failure::Numeric(m) => (EXIT_INCONCLUSIVE, m),
            };
            let _ = writeln!(err, "decomap: {msg}");
            code
        }
    }
}

fn read_source(path: &str) -> CliResult<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map_err(|e| Failure::Input(e.to_string()))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {path}: {e}")))
}

fn load_map(spec: &str, corpus_seed: u64) -> CliResult<LinearMap> {
    if let Some(name) = spec.strip_prefix(CORPUS_SCHEME) {
        return match lookup(name, corpus_seed)?.object {
            CorpusObject::Map(m) => Ok(m),
            CorpusObject::Matrix { .. } => Err(Failure::Input(format!("corpus entry {name} is a matrix, not a map"))),
        };
    }
    let v = parse_text(&read_source(spec)?)?;
    if !is_map_json(&v) {
        return Err(Failure::Input(format!("{spec} is not a map file")));
    }
    Ok(map_from_json(&v)?)
}

fn load_matrix(spec: &str, corpus_seed: u64) -> CliResult<MatrixFile> {
    if let Some(name) = spec.strip_prefix(CORPUS_SCHEME) {
        return match lookup(name, corpus_seed)?.object {
            CorpusObject::Matrix { matrix, outer, inner } => {
                Ok(MatrixFile { matrix, outer_dim: Some(outer), inner_dim: Some(inner), name: Some(name.into()) })
            }
            CorpusObject::Map(_) => Err(Failure::Input(format!("corpus entry {name} is a map, not a matrix"))),
        };
    }
    Ok(MatrixFile::from_json(&parse_text(&read_source(spec)?)?)?)
}

/// Resolves the bipartite split from flags, falling back to the file.
fn split(file: &MatrixFile, outer: Option<usize>, inner: Option<usize>) -> CliResult<(usize, usize)> {
    let dim = file.matrix.dim();
    let outer = outer.or(file.outer_dim);
    let inner = inner.or(file.inner_dim);
    let (o, i) = match (outer, inner) {
        (Some(o), Some(i)) => (o, i),
        (Some(o), None) if o > 0 && dim.is_multiple_of(o) => (o, dim / o),
        (None, Some(i)) if i > 0 && dim.is_multiple_of(i) => (dim / i, i),
        (None, None) => return Err(Failure::Usage("bipartite split unknown; pass --outer or --inner".into())),
        _ => return Err(Failure::Usage(format!("--outer/--inner do not divide dim {dim}"))),
    };
    if o == 0 || i == 0 || o * i != dim {
        return Err(Failure::Usage(format!("outer {o} x inner {i} does not match dim {dim}")));
    }
    Ok((o, i))
}

fn exit_for_verdict(verdict: &str) -> i32 {
    match verdict {
        MEMBER | EVALUATED => EXIT_AFFIRMATIVE,
        NOT_MEMBER => EXIT_NEGATIVE,
        v => match decomap::certify::Verdict::parse(v) {
            Some(v) if v.is_affirmative() => EXIT_AFFIRMATIVE,
            Some(v) if v.is_negative() => EXIT_NEGATIVE,
            _ => EXIT_INCONCLUSIVE,
        },
    }
}

/// Shortest decimal that reads back within 15 significant digits.
fn human_num(x: f64) -> String {
    let rounded: f64 = format!("{x:.14e}").parse().unwrap_or(x);
    if rounded != 0.0 && !(1e-4..1e15).contains(&rounded.abs()) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn emit(report: &Report, format: Format, out: &mut dyn Write) -> CliResult<i32> {
    let text = match format {
        Format::ReportV1 => to_text(&report.to_json()),
        Format::Human => {
            let mut s = format!("verdict: {}\ncriterion: {}\n", report.verdict, report.criterion);
            for (k, v) in &report.values {
                s.push_str(&format!("{k}: {}\n", human_num(*v)));
            }
            if let Some((c1, c2)) = &report.primal {
                s.push_str(&format!("primal: |C1|_F = {}, |C2|_F = {}\n", human_num(c1.frobenius_norm()), human_num(c2.frobenius_norm())));
            }
            if let Some((w, value)) = &report.witness {
                s.push_str(&format!("witness: {}x{} matrix, value {}\n", w.dim(), w.dim(), human_num(*value)));
            }
            if let Some(m) = &report.witness_map {
                s.push_str(&format!("witness map: M_{} -> M_{}\n", m.domain_dim(), m.codomain_dim()));
            }
            s.push_str(&format!("tol: {:e}\n", report.tol));
            s
        }
    };
    out.write_all(text.as_bytes()).map_err(|e| Failure::Input(e.to_string()))?;
    Ok(exit_for_verdict(&report.verdict))
}

fn cert_report(command: &str, r: &CertResult, budget: Option<usize>, subject: ReportSubject) -> Report {
    Report::from_cert(command, r, budget, subject)
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let tol = cli.tol.unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Usage(format!("--tol must be positive, got {tol}")));
    }
    let opts = CertifyOptions { tol, budget: cli.budget.unwrap_or(DEFAULT_BUDGET), seed: cli.seed, ..Default::default() };
    let cs = cli.corpus_seed;
    let report = match &cli.command {
        Command::CheckPsd { matrix } => {
            let f = load_matrix(matrix, cs)?;
            let (member, lmin) = is_psd(&f.matrix, tol)?;
            let d = f.matrix.dim();
            let subject = ReportSubject::Matrix { matrix: f.matrix, outer: 1, inner: d };
            Report::plain("check-psd", if member { MEMBER } else { NOT_MEMBER }, "minimum eigenvalue", tol, subject)
                .with("lambda_min", lmin)
        }
        Command::CheckJ { matrix, outer, inner } => {
            let f = load_matrix(matrix, cs)?;
            let (o, i) = split(&f, *outer, *inner)?;
            let c = in_j(&f.matrix, &OperatorSystem::full(i), o, tol)?;
            let subject = ReportSubject::Matrix { matrix: f.matrix, outer: o, inner: i };
            Report::plain("check-j", if c.member { MEMBER } else { NOT_MEMBER }, "PSD and PPT", tol, subject)
                .with("lambda_min_raw", c.lambda_min_raw)
                .with("lambda_min_pt", c.lambda_min_pt)
        }
        Command::DualEval { map, matrix } => {
            let phi = load_map(map, cs)?;
            let f = load_matrix(matrix, cs)?;
            let v = dual_eval(&phi, &f.matrix)?;
            let subject = ReportSubject::Pair { map: phi, matrix: f.matrix };
            Report::plain("dual-eval", EVALUATED, "dual functional", tol, subject)
                .with("value", v.re)
                .with("value_imag", v.im)
        }
        Command::CertifyCp { map } => {
            let phi = load_map(map, cs)?;
            let r = certify_cp_with(&phi, &opts)?;
            cert_report("certify-cp", &r, Some(opts.budget), ReportSubject::Map(phi))
        }
        Command::CertifyDecomposable { map } => {
            let phi = load_map(map, cs)?;
            let r = certify_decomposable_with(&phi, &opts)?;
            cert_report("certify-decomposable", &r, Some(opts.budget), ReportSubject::Map(phi))
        }
        Command::CertifySeparable { matrix, outer, inner } => {
            let f = load_matrix(matrix, cs)?;
            let (p, q) = split(&f, *outer, *inner)?;
            let r = certify_separable_small(&f.matrix, p, q, tol)?;
            cert_report("certify-separable", &r, None, ReportSubject::State { rho: f.matrix, p, q })
        }
        Command::SepWitness { matrix, outer, inner } => {
            let f = load_matrix(matrix, cs)?;
            let (p, q) = split(&f, *outer, *inner)?;
            let budget = cli.budget.unwrap_or(SEP_WITNESS_BUDGET);
            let r = sep_witness(&f.matrix, p, q, budget, cli.seed)?;
            cert_report("sep-witness", &r, Some(budget), ReportSubject::State { rho: f.matrix, p, q })
        }
        Command::Corpus { action } => return corpus(action, cli, out),
        Command::Verify { report } => {
            let parsed = Report::from_json(&parse_text(&read_source(report)?)?)?;
            let ok = verify_report(&parsed)?;
            let text = match cli.format {
                Format::ReportV1 => to_text(&json!({ "format": "verify-v1", "verified": ok, "verdict": parsed.verdict })),
                Format::Human => format!("verified: {ok}\nverdict: {}\n", parsed.verdict),
            };
            out.write_all(text.as_bytes()).map_err(|e| Failure::Input(e.to_string()))?;
            if !ok {
                let _ = writeln!(err, "decomap: certificate did not verify");
            }
            return Ok(if ok { EXIT_AFFIRMATIVE } else { EXIT_NEGATIVE });
        }
    };
    emit(&report, cli.format, out)
}

fn corpus(action: &CorpusAction, cli: &Cli, out: &mut dyn Write) -> CliResult<i32> {
    let text = match action {
        CorpusAction::List => {
            let entries = entries_with_seed(cli.corpus_seed);
            match cli.format {
                Format::ReportV1 => to_text(&json!(entries
                    .iter()
                    .map(|e| json!({
                        "name": e.name,
                        "kind": if e.map().is_some() { "map" } else { "matrix" },
                        "expected": e.expected,
                        "provenance": e.provenance,
                    }))
                    .collect::<Vec<_>>())),
                Format::Human => entries
                    .iter()
                    .map(|e| {
                        let expected: Vec<String> = e.expected.iter().map(|(k, v)| format!("{k}={v}")).collect();
                        let kind = if e.map().is_some() { "map" } else { "matrix" };
                        format!("{:<22} {:<7} {}\n", e.name, kind, expected.join(" "))
                    })
                    .collect(),
            }
        }
        CorpusAction::Dump { name } => match lookup(name, cli.corpus_seed)?.object {
            CorpusObject::Map(m) => to_text(&map_to_json(&m, Some(name))),
            CorpusObject::Matrix { matrix, outer, inner } => to_text(
                &MatrixFile { matrix, outer_dim: Some(outer), inner_dim: Some(inner), name: Some(name.clone()) }.to_json(),
            ),
        },
    };
    out.write_all(text.as_bytes()).map_err(|e| Failure::Input(e.to_string()))?;
    Ok(EXIT_AFFIRMATIVE)
}
