//! Built-in named maps and matrices, with the verdicts each one is expected
//! to receive.

use std::collections::BTreeMap;

use crate::error::{DecomapError, Result};
use crate::maps::LinearMap;
use crate::matlib::{partial_transpose_outer, ComplexMatrix};
use crate::random::{random_psd, rng_for};

/// Seed behind the random corpus entries unless another is requested.
pub const CORPUS_SEED: u64 = 20;
const RANDOM_DIM: usize = 3;

/// The Choi map on `M_3`: off-diagonal entries negated, diagonal
/// `(x11 + μ x33, x22 + μ x11, x33 + μ x22)`.
///
/// Positive for `μ ≥ 1`; smaller `μ` is accepted, see [`choi_map_warning`].
pub fn choi_map(mu: f64) -> LinearMap {
    LinearMap::from_fn_full(3, 3, |x| {
        let mut y = x.scale(-1.0);
        for i in 0..3 {
            y[(i, i)] = x[(i, i)] + x[((i + 2) % 3, (i + 2) % 3)] * mu;
        }
        y
    })
}

pub fn choi_map_warning(mu: f64) -> Option<String> {
    (mu < 1.0).then(|| format!("choi map with mu = {mu} < 1 need not be positive"))
}

/// The 9×9 PPT matrix `A(a)` (outer index 3): diagonal blocks
/// `diag(1, 1/a, a)`, `diag(a, 1, 1/a)`, `diag(1/a, a, 1)`, with ones joining
/// entries `(0,0)`, `(4,4)` and `(8,8)`.
pub fn stormer_matrix(a: f64) -> Result<ComplexMatrix> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(DecomapError::domain(format!("stormer matrix needs a > 0, got {a}")));
    }
    let diag = [1.0, 1.0 / a, a, a, 1.0, 1.0 / a, 1.0 / a, a, 1.0];
    let mut m = ComplexMatrix::from_diag(&diag);
    for &i in &[0, 4, 8] {
        for &j in &[0, 4, 8] {
            m[(i, j)] = 1.0.into();
        }
    }
    Ok(m)
}

/// Map `M_d → M_d` whose Choi matrix is a seeded random PSD matrix of full rank.
pub fn random_cp(d: usize, seed: u64) -> LinearMap {
    let mut rng = rng_for(seed, 0x0c);
    let c = random_psd(&mut rng, d * d, d * d).scale(d as f64);
    LinearMap::from_choi(&c, d, d).expect("dimensions match")
}

/// `φ ∘ t` with `φ` from [`random_cp`]; its Choi matrix is the partial
/// transpose of a PSD matrix.
pub fn random_cocp(d: usize, seed: u64) -> LinearMap {
    let mut rng = rng_for(seed, 0xcc);
    let c = random_psd(&mut rng, d * d, d * d).scale(d as f64);
    let pt = partial_transpose_outer(&c, d, d).expect("square split");
    LinearMap::from_choi(&pt, d, d).expect("dimensions match")
}

pub fn random_decomposable(d: usize, seed: u64) -> LinearMap {
    random_cp(d, seed).sum(&random_cocp(d, seed)).expect("same shape")
}

pub fn negation(d: usize) -> LinearMap {
    LinearMap::from_fn_full(d, d, |x| x.scale(-1.0))
}

#[derive(Clone, Debug)]
pub enum CorpusObject {
    Map(LinearMap),
    Matrix { matrix: ComplexMatrix, outer: usize, inner: usize },
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub object: CorpusObject,
    /// Property → expected outcome. Keys: `positive`, `cp`, `cocp`,
    /// `decomposable`, `in_j`, `separable`.
    pub expected: BTreeMap<String, bool>,
    pub provenance: String,
}

impl CorpusEntry {
    fn new(name: impl Into<String>, object: CorpusObject, expected: &[(&str, bool)], provenance: &str) -> Self {
        CorpusEntry {
            name: name.into(),
            object,
            expected: expected.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            provenance: provenance.to_string(),
        }
    }

    pub fn map(&self) -> Option<&LinearMap> {
        match &self.object {
            CorpusObject::Map(m) => Some(m),
            CorpusObject::Matrix { .. } => None,
        }
    }

    pub fn expects(&self, key: &str) -> Option<bool> {
        self.expected.get(key).copied()
    }
}

fn fmt_param(x: f64) -> String {
    format!("{x}")
}

fn identity_entry(d: usize) -> CorpusEntry {
    CorpusEntry::new(
        format!("identity-{d}"),
        CorpusObject::Map(LinearMap::identity(d)),
        &[("positive", true), ("cp", true), ("cocp", d == 1), ("decomposable", true)],
        "identity map",
    )
}

fn transpose_entry(d: usize) -> CorpusEntry {
    CorpusEntry::new(
        format!("transpose-{d}"),
        CorpusObject::Map(LinearMap::transpose(d)),
        &[("positive", true), ("cp", d == 1), ("cocp", true), ("decomposable", true)],
        "transpose map, co-completely positive",
    )
}

fn choi_entry(mu: f64) -> CorpusEntry {
    CorpusEntry::new(
        format!("choi-mu{}", fmt_param(mu)),
        CorpusObject::Map(choi_map(mu)),
        &[("positive", mu >= 1.0), ("cp", false), ("decomposable", false)],
        "Choi's positive indecomposable map",
    )
}

fn stormer_entry(a: f64) -> Result<CorpusEntry> {
    Ok(CorpusEntry::new(
        format!("stormer-a{}", fmt_param(a)),
        CorpusObject::Matrix { matrix: stormer_matrix(a)?, outer: 3, inner: 3 },
        &[("in_j", true)],
        "PPT matrix A(a) detected by the Choi map when a mu < 1",
    ))
}

/// All built-in maps, random entries drawn from `seed`.
pub fn named_maps_with_seed(seed: u64) -> Vec<CorpusEntry> {
    let d = RANDOM_DIM;
    let mut out = vec![identity_entry(3)];
    out.extend((2..=4).map(transpose_entry));
    out.push(CorpusEntry::new(
        "random-cp",
        CorpusObject::Map(random_cp(d, seed)),
        &[("positive", true), ("cp", true), ("decomposable", true)],
        "Choi matrix B*B from a seeded random B",
    ));
    out.push(CorpusEntry::new(
        "random-cocp",
        CorpusObject::Map(random_cocp(d, seed)),
        &[("positive", true), ("cocp", true), ("decomposable", true)],
        "partial transpose of a random PSD Choi matrix",
    ));
    out.push(CorpusEntry::new(
        "random-decomposable",
        CorpusObject::Map(random_decomposable(d, seed)),
        &[("positive", true), ("decomposable", true)],
        "sum of the random CP and co-CP entries",
    ));
    out.extend([1.0, 1.5, 2.0].into_iter().map(choi_entry));
    out.push(CorpusEntry::new(
        "negation-3",
        CorpusObject::Map(negation(3)),
        &[("positive", false), ("cp", false), ("cocp", false), ("decomposable", false)],
        "x -> -x, not positive",
    ));
    out
}

pub fn named_maps() -> Vec<CorpusEntry> {
    named_maps_with_seed(CORPUS_SEED)
}

pub fn named_matrices() -> Vec<CorpusEntry> {
    let mut out: Vec<CorpusEntry> =
        [0.5, 1.0, 2.0].into_iter().map(|a| stormer_entry(a).expect("a > 0")).collect();
    let e = crate::matlib::max_entangled_vector(2);
    out.push(CorpusEntry::new(
        "max-entangled-2",
        CorpusObject::Matrix { matrix: ComplexMatrix::outer(&e, &e).scale(0.5), outer: 2, inner: 2 },
        &[("in_j", false), ("separable", false)],
        "maximally entangled two-qubit state",
    ));
    out.push(CorpusEntry::new(
        "maximally-mixed-2x2",
        CorpusObject::Matrix { matrix: ComplexMatrix::identity(4).scale(0.25), outer: 2, inner: 2 },
        &[("in_j", true), ("separable", true)],
        "I/4",
    ));
    out
}

pub fn entries_with_seed(seed: u64) -> Vec<CorpusEntry> {
    let mut all = named_maps_with_seed(seed);
    all.extend(named_matrices());
    all
}

/// Looks up a named entry. Parameterized families accept any value:
/// `choi-mu<μ>`, `stormer-a<a>`, `identity-<d>`, `transpose-<d>`,
/// `negation-<d>`.
pub fn lookup(name: &str, seed: u64) -> Result<CorpusEntry> {
    let param = |prefix: &str| name.strip_prefix(prefix).and_then(|s| s.parse::<f64>().ok());
    let dim = |prefix: &str| name.strip_prefix(prefix).and_then(|s| s.parse::<usize>().ok()).filter(|&d| d >= 1);
    if let Some(mu) = param("choi-mu") {
        return Ok(choi_entry(mu));
    }
    if let Some(a) = param("stormer-a") {
        return stormer_entry(a);
    }
    if let Some(d) = dim("identity-") {
        return Ok(identity_entry(d));
    }
    if let Some(d) = dim("transpose-") {
        return Ok(transpose_entry(d));
    }
    entries_with_seed(seed)
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| DecomapError::Parse(format!("no corpus entry named {name:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::in_j;
    use crate::maps::{choi, dual_eval};
    use crate::matlib::is_psd;
    use crate::opsys::OperatorSystem;

    #[test]
    fn choi_map_on_identity_and_units() {
        let phi = choi_map(1.0);
        let img = phi.apply_matrix(&ComplexMatrix::identity(3)).unwrap();
        assert!((&img - &ComplexMatrix::identity(3).scale(2.0)).max_abs() < 1e-14);
        let e12 = ComplexMatrix::unit(3, 0, 1);
        assert!((&phi.apply_matrix(&e12).unwrap() + &e12).max_abs() < 1e-14);
    }

    #[test]
    fn choi_map_diagonal_columns() {
        let mu = 1.7;
        let phi = choi_map(mu);
        // E_kk ↦ E_kk + μ E_{k+1,k+1}
        for k in 0..3 {
            let img = phi.apply_matrix(&ComplexMatrix::unit(3, k, k)).unwrap();
            let mut want = ComplexMatrix::unit(3, k, k);
            want[((k + 1) % 3, (k + 1) % 3)] = mu.into();
            assert!((&img - &want).max_abs() < 1e-14, "column {k}");
        }
        assert!(choi_map_warning(0.5).is_some());
        assert!(choi_map_warning(1.0).is_none());
    }

    #[test]
    fn stormer_layout() {
        let a = stormer_matrix(1.0).unwrap();
        for i in 0..9 {
            assert_eq!(a[(i, i)].re, 1.0);
        }
        let a = stormer_matrix(0.5).unwrap();
        assert_eq!(a[(1, 1)].re, 2.0);
        assert_eq!(a[(2, 2)].re, 0.5);
        assert_eq!(a[(0, 4)].re, 1.0);
        assert_eq!(a[(8, 0)].re, 1.0);
        assert!(matches!(stormer_matrix(0.0), Err(DecomapError::Domain { .. })));
        assert!(matches!(stormer_matrix(-1.0), Err(DecomapError::Domain { .. })));
    }

    #[test]
    fn stormer_is_ppt_across_range() {
        let full = OperatorSystem::full(3);
        for k in 0..20 {
            let a = 0.05 * (400.0f64).powf(k as f64 / 19.0);
            assert!(in_j(&stormer_matrix(a).unwrap(), &full, 3, 1e-9).unwrap().member, "a = {a}");
        }
    }

    #[test]
    fn dual_value_on_stormer_grid() {
        for &a in &[0.25, 0.5, 2.0] {
            for &mu in &[1.0, 2.0] {
                let v = dual_eval(&choi_map(mu), &stormer_matrix(a).unwrap()).unwrap();
                assert!((v.re - 3.0 * (a * mu - 1.0)).abs() < 1e-12 && v.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_entries_have_their_labels() {
        let cp = choi(&random_cp(3, 5)).unwrap();
        assert!(is_psd(&cp, 1e-12).unwrap().0);
        let cocp = choi(&random_cocp(3, 5)).unwrap();
        assert!(!is_psd(&cocp, 1e-12).unwrap().0);
        assert!(is_psd(&partial_transpose_outer(&cocp, 3, 3).unwrap(), 1e-12).unwrap().0);
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(lookup("choi-mu1", CORPUS_SEED).unwrap().name, "choi-mu1");
        assert_eq!(lookup("stormer-a0.5", CORPUS_SEED).unwrap().name, "stormer-a0.5");
        assert_eq!(lookup("transpose-5", CORPUS_SEED).unwrap().name, "transpose-5");
        assert!(lookup("random-cp", 3).is_ok());
        assert!(lookup("nonsense", 0).is_err());
        assert!(lookup("stormer-a0", 0).is_err());
        let names: Vec<String> = named_maps().into_iter().map(|e| e.name).collect();
        assert!(names.contains(&"choi-mu1.5".to_string()));
        let entry = lookup("choi-mu1", 0).unwrap();
        assert_eq!(entry.expects("decomposable"), Some(false));
        assert_eq!(lookup("transpose-2", 0).unwrap().expects("cp"), Some(false));
    }
}
