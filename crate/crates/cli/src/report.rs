//! The `report-v1` document: verdict, diagnostics, certificate payloads and
//! the subject they refer to, so that `verify` needs nothing else.

use std::collections::BTreeMap;

use decomap::certify::{verify_certificate, CertResult, Subject, Verdict};
use decomap::cones::in_j;
use decomap::maps::{dual_eval, LinearMap};
use decomap::matlib::is_psd;
use decomap::opsys::OperatorSystem;
use decomap::{ComplexMatrix, DecomapError, Result};
use serde_json::{json, Map, Value};

use crate::io::{entries_from_json, entries_json, field, map_from_json, map_to_json, num, parse_err, to_f64, to_usize};

pub const FORMAT: &str = "report-v1";
pub const MEMBER: &str = "Member";
pub const NOT_MEMBER: &str = "NotMember";
pub const EVALUATED: &str = "Evaluated";

/// What a report is about.
#[derive(Clone, Debug)]
pub enum ReportSubject {
    Map(LinearMap),
    State { rho: ComplexMatrix, p: usize, q: usize },
    Matrix { matrix: ComplexMatrix, outer: usize, inner: usize },
    Pair { map: LinearMap, matrix: ComplexMatrix },
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    json!({ "dim": m.dim(), "entries": entries_json(m) })
}

fn matrix_from(v: &Value) -> Result<ComplexMatrix> {
    entries_from_json(field(v, "entries")?, to_usize(field(v, "dim")?)?)
}

impl ReportSubject {
    fn to_json(&self) -> Value {
        match self {
            ReportSubject::Map(m) => json!({ "kind": "map", "map": map_to_json(m, None) }),
            ReportSubject::State { rho, p, q } => json!({ "kind": "state", "p": p, "q": q, "matrix": matrix_json(rho) }),
            ReportSubject::Matrix { matrix, outer, inner } => {
                json!({ "kind": "matrix", "outer": outer, "inner": inner, "matrix": matrix_json(matrix) })
            }
            ReportSubject::Pair { map, matrix } => {
                json!({ "kind": "pair", "map": map_to_json(map, None), "matrix": matrix_json(matrix) })
            }
        }
    }

    fn from_json(v: &Value) -> Result<Self> {
        let kind = field(v, "kind")?.as_str().unwrap_or_default();
        Ok(match kind {
            "map" => ReportSubject::Map(map_from_json(field(v, "map")?)?),
            "state" => ReportSubject::State {
                rho: matrix_from(field(v, "matrix")?)?,
                p: to_usize(field(v, "p")?)?,
                q: to_usize(field(v, "q")?)?,
            },
            "matrix" => ReportSubject::Matrix {
                matrix: matrix_from(field(v, "matrix")?)?,
                outer: to_usize(field(v, "outer")?)?,
                inner: to_usize(field(v, "inner")?)?,
            },
            "pair" => ReportSubject::Pair { map: map_from_json(field(v, "map")?)?, matrix: matrix_from(field(v, "matrix")?)? },
            other => return Err(parse_err(format!("unknown subject kind {other:?}"))),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub verdict: String,
    pub criterion: String,
    pub seed: u64,
    pub tol: f64,
    pub budget: Option<usize>,
    pub values: BTreeMap<String, f64>,
    pub subject: ReportSubject,
    pub primal: Option<(ComplexMatrix, ComplexMatrix)>,
    pub witness: Option<(ComplexMatrix, f64)>,
    pub witness_map: Option<LinearMap>,
}

impl Report {
    pub fn plain(command: &str, verdict: &str, criterion: &str, tol: f64, subject: ReportSubject) -> Self {
        Report {
            command: command.into(),
            verdict: verdict.into(),
            criterion: criterion.into(),
            seed: 0,
            tol,
            budget: None,
            values: BTreeMap::new(),
            subject,
            primal: None,
            witness: None,
            witness_map: None,
        }
    }

    pub fn from_cert(command: &str, r: &CertResult, budget: Option<usize>, subject: ReportSubject) -> Self {
        Report {
            command: command.into(),
            verdict: r.verdict.as_str().into(),
            criterion: r.criterion.clone(),
            seed: r.seed,
            tol: r.tol,
            budget,
            values: r.residuals.clone(),
            subject,
            primal: r.primal.clone(),
            witness: r.witness.clone(),
            witness_map: r.witness_map.clone(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.into(), value);
        self
    }

    pub fn to_json(&self) -> Value {
        let mut cert = Map::new();
        if let Some((c1, c2)) = &self.primal {
            cert.insert("primal".into(), json!({ "c1": matrix_json(c1), "c2": matrix_json(c2) }));
        }
        if let Some((w, value)) = &self.witness {
            cert.insert("witness".into(), json!({ "matrix": matrix_json(w), "value": num(*value) }));
        }
        if let Some(m) = &self.witness_map {
            cert.insert("witness_map".into(), map_to_json(m, None));
        }
        json!({
            "format": FORMAT,
            "tool": "decomap",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "verdict": self.verdict,
            "criterion": self.criterion,
            "seed": self.seed,
            "tol": num(self.tol),
            "budget": self.budget,
            "values": self.values.iter().map(|(k, v)| (k.clone(), num(*v))).collect::<Map<_, _>>(),
            "subject": self.subject.to_json(),
            "certificate": Value::Object(cert),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        if field(v, "format")?.as_str() != Some(FORMAT) {
            return Err(parse_err(format!("not a {FORMAT} document")));
        }
        let text = |k: &str| -> Result<String> {
            field(v, k)?.as_str().map(str::to_string).ok_or_else(|| parse_err(format!("{k} must be a string")))
        };
        let mut values = BTreeMap::new();
        if let Some(obj) = field(v, "values")?.as_object() {
            for (k, x) in obj {
                values.insert(k.clone(), if x.is_null() { f64::NAN } else { to_f64(x)? });
            }
        }
        let cert = field(v, "certificate")?;
        let primal = match cert.get("primal") {
            Some(p) => Some((matrix_from(field(p, "c1")?)?, matrix_from(field(p, "c2")?)?)),
            None => None,
        };
        let witness = match cert.get("witness") {
            Some(w) => Some((matrix_from(field(w, "matrix")?)?, to_f64(field(w, "value")?)?)),
            None => None,
        };
        let witness_map = cert.get("witness_map").map(map_from_json).transpose()?;
        let seed = field(v, "seed")?.as_u64().ok_or_else(|| parse_err("seed must be an integer"))?;
        let budget = match v.get("budget") {
            None | Some(Value::Null) => None,
            Some(b) => Some(to_usize(b)?),
        };
        Ok(Report {
            command: text("command")?,
            verdict: text("verdict")?,
            criterion: text("criterion")?,
            seed,
            tol: to_f64(field(v, "tol")?)?,
            budget,
            values,
            subject: ReportSubject::from_json(field(v, "subject")?)?,
            primal,
            witness,
            witness_map,
        })
    }

    fn cert_result(&self) -> Result<CertResult> {
        let verdict = Verdict::parse(&self.verdict)
            .ok_or_else(|| DecomapError::MalformedCertificate(format!("unknown verdict {:?}", self.verdict)))?;
        Ok(CertResult {
            verdict,
            primal: self.primal.clone(),
            witness: self.witness.clone(),
            witness_map: self.witness_map.clone(),
            residuals: self.values.clone(),
            tol: self.tol,
            seed: self.seed,
            criterion: self.criterion.clone(),
        })
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn recorded(report: &Report, key: &str) -> Result<f64> {
    report
        .values
        .get(key)
        .copied()
        .ok_or_else(|| DecomapError::MalformedCertificate(format!("missing value {key:?}")))
}

/// Recomputes the report's claims from its embedded subject.
pub fn verify_report(report: &Report) -> Result<bool> {
    match (report.command.as_str(), &report.subject) {
        ("check-psd", ReportSubject::Matrix { matrix, .. }) => {
            let (member, lmin) = is_psd(matrix, report.tol)?;
            Ok(verdict_matches(report, member) && close(lmin, recorded(report, "lambda_min")?))
        }
        ("check-j", ReportSubject::Matrix { matrix, outer, inner }) => {
            let c = in_j(matrix, &OperatorSystem::full(*inner), *outer, report.tol)?;
            Ok(verdict_matches(report, c.member)
                && close(c.lambda_min_raw, recorded(report, "lambda_min_raw")?)
                && close(c.lambda_min_pt, recorded(report, "lambda_min_pt")?))
        }
        ("dual-eval", ReportSubject::Pair { map, matrix }) => {
            let v = dual_eval(map, matrix)?;
            Ok(report.verdict == EVALUATED && close(v.re, recorded(report, "value")?) && close(v.im, recorded(report, "value_imag")?))
        }
        (_, ReportSubject::Map(map)) => verify_certificate(&report.cert_result()?, Subject::Map(map)),
        (_, ReportSubject::State { rho, p, q }) => {
            verify_certificate(&report.cert_result()?, Subject::State { rho, p: *p, q: *q })
        }
        (cmd, _) => Err(DecomapError::MalformedCertificate(format!("command {cmd:?} does not match its subject"))),
    }
}

fn verdict_matches(report: &Report, member: bool) -> bool {
    report.verdict == if member { MEMBER } else { NOT_MEMBER }
}
