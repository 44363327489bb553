//! Certifiers for complete positivity, decomposability and small-dimension
//! separability, each returning a certificate that [`verify_certificate`]
//! re-checks from scratch.
//!
//! A decomposable map `φ` is certified by a split `choi(φ) = C1 + PT(C2)`
//! with both parts PSD. A non-decomposable one is refuted by a trace-one
//! `W ∈ J_n(S)` with `s_φ(W) < 0`; such a `W` exists exactly when no split
//! does. Both searches run on the Dykstra engine.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::cones::{dykstra, in_j, random_j_member, AffineSet, DykstraOutcome, Point, ProjectableSet};
use crate::corpus::choi_map;
use crate::error::{DecomapError, Result};
use crate::exec::{map_indexed, Execution};
use crate::maps::{choi, compose_transpose, dual_eval, dual_gradient, positivity_probe_with, LinearMap, DOMAIN_TOL};
use crate::matlib::{hermitian_eig, is_psd, partial_transpose_outer, psd_project, ComplexMatrix, C64};
use crate::opsys::OperatorSystem;
use crate::random::{random_unitary, rng_for};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_BUDGET: usize = 20000;
/// Separation witnesses must push `s_φ(ρ)` below this value.
pub const WITNESS_THRESHOLD: f64 = -1e-8;
pub const DUAL_RESTARTS: usize = 2;
pub const SEP_WITNESS_BUDGET: usize = 64;
const PROBE_BUDGET: usize = 2000;
const MAX_HERMITICITY_RESIDUAL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Cp,
    NotCp,
    CoCp,
    NotCoCp,
    Decomposable,
    NotDecomposable,
    Separable,
    Entangled,
    Inconclusive,
}

impl Verdict {
    pub const ALL: [Verdict; 9] = [
        Verdict::Cp,
        Verdict::NotCp,
        Verdict::CoCp,
        Verdict::NotCoCp,
        Verdict::Decomposable,
        Verdict::NotDecomposable,
        Verdict::Separable,
        Verdict::Entangled,
        Verdict::Inconclusive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Cp => "CP",
            Verdict::NotCp => "NotCP",
            Verdict::CoCp => "CoCP",
            Verdict::NotCoCp => "NotCoCP",
            Verdict::Decomposable => "Decomposable",
            Verdict::NotDecomposable => "NotDecomposable",
            Verdict::Separable => "Separable",
            Verdict::Entangled => "Entangled",
            Verdict::Inconclusive => "Inconclusive",
        }
    }

    pub fn parse(s: &str) -> Option<Verdict> {
        Verdict::ALL.into_iter().find(|v| v.as_str() == s)
    }

    pub fn is_affirmative(self) -> bool {
        matches!(self, Verdict::Cp | Verdict::CoCp | Verdict::Decomposable | Verdict::Separable)
    }

    pub fn is_negative(self) -> bool {
        !self.is_affirmative() && self != Verdict::Inconclusive
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct CertResult {
    pub verdict: Verdict,
    /// `(C1, C2)` with `choi(φ) = C1 + PT(C2)`. A CP certificate on a
    /// proper subsystem stores the Choi matrix of a CP extension as `C1` and
    /// `C2 = 0`.
    pub primal: Option<(ComplexMatrix, ComplexMatrix)>,
    /// `(W, s_φ(W))`.
    pub witness: Option<(ComplexMatrix, f64)>,
    /// Positive map separating an entangled state.
    pub witness_map: Option<LinearMap>,
    pub residuals: BTreeMap<String, f64>,
    pub tol: f64,
    pub seed: u64,
    pub criterion: String,
}

impl CertResult {
    fn new(verdict: Verdict, tol: f64, seed: u64, criterion: &str) -> Self {
        CertResult {
            verdict,
            primal: None,
            witness: None,
            witness_map: None,
            residuals: BTreeMap::new(),
            tol,
            seed,
            criterion: criterion.to_string(),
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.residuals.insert(key.to_string(), value);
        self
    }

    pub fn witness_value(&self) -> Option<f64> {
        self.witness.as_ref().map(|(_, v)| *v)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CertifyOptions {
    pub tol: f64,
    /// Dykstra cycles per feasibility problem.
    pub budget: usize,
    pub seed: u64,
    pub restarts: usize,
    pub exec: Execution,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            tol: DEFAULT_TOL,
            budget: DEFAULT_BUDGET,
            seed: 0,
            restarts: DUAL_RESTARTS,
            exec: Execution::default(),
        }
    }
}

pub const CRITERION_CHOI: &str = "Choi matrix positive semidefinite";
pub const CRITERION_CP_DUAL: &str = "dual functional positive on (S ⊗ M_n)^+";
pub const CRITERION_DECOMPOSABLE: &str = "dual functional positive on J_n(S)";
pub const CRITERION_PPT: &str = "PPT equals separable for pq <= 6";
pub const CRITERION_POSITIVE_WITNESS: &str = "positive map negative on the state";

/// `W` with `W[(a,i),(b,j)] = conj(v_(i,a)) v_(j,b)`: PSD, trace `‖v‖²`, and
/// `s_φ(W) = v* choi(φ) v`.
fn choi_vector_witness(v: &[C64], d: usize, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n * d, |r, c| {
        let (a, i) = (r / d, r % d);
        let (b, j) = (c / d, c % d);
        v[i * n + a].conj() * v[j * n + b]
    })
}

fn hermiticity_guard(phi: &LinearMap, opts: &CertifyOptions, criterion: &str) -> Option<CertResult> {
    (phi.hermiticity_residual() > MAX_HERMITICITY_RESIDUAL).then(|| {
        CertResult::new(Verdict::Inconclusive, opts.tol, opts.seed, criterion)
            .with("hermiticity_residual", phi.hermiticity_residual())
    })
}

pub fn certify_cp(phi: &LinearMap, tol: f64) -> Result<CertResult> {
    certify_cp_with(phi, &CertifyOptions { tol, ..Default::default() })
}

/// Full domains: eigensolve of the Choi matrix. Proper subsystems: search
/// for a CP extension, refuted by a PSD `W ∈ S ⊗ M_n` with `s_φ(W) < 0`.
pub fn certify_cp_with(phi: &LinearMap, opts: &CertifyOptions) -> Result<CertResult> {
    if let Some(r) = hermiticity_guard(phi, opts, CRITERION_CHOI) {
        return Ok(r);
    }
    if phi.is_full_domain() {
        return cp_by_choi(phi, opts, Verdict::Cp, Verdict::NotCp);
    }
    let (d, n) = (phi.domain_dim(), phi.codomain_dim());
    if let Some((c, residual)) = cp_extension(phi, opts)? {
        let mut r = CertResult::new(Verdict::Cp, opts.tol, opts.seed, CRITERION_CP_DUAL).with("extension_residual", residual);
        r.primal = Some((c, ComplexMatrix::zeros(d * n)));
        return Ok(r);
    }
    let dual = dual_witness(phi, false, opts)?;
    let mut r = match dual.witness {
        Some(w) => {
            let mut r = CertResult::new(Verdict::NotCp, opts.tol, opts.seed, CRITERION_CP_DUAL).with("witness_value", w.1);
            r.witness = Some(w);
            r
        }
        None => CertResult::new(Verdict::Inconclusive, opts.tol, opts.seed, CRITERION_CP_DUAL),
    };
    r.residuals.insert("dual_residual".into(), dual.residual);
    Ok(r)
}

/// `t ∘ φ` is CP.
pub fn certify_cocp(phi: &LinearMap, tol: f64) -> Result<CertResult> {
    certify_cocp_with(phi, &CertifyOptions { tol, ..Default::default() })
}

pub fn certify_cocp_with(phi: &LinearMap, opts: &CertifyOptions) -> Result<CertResult> {
    let t = compose_transpose(phi);
    if phi.is_full_domain() {
        if let Some(r) = hermiticity_guard(phi, opts, CRITERION_CHOI) {
            return Ok(r);
        }
        return cp_by_choi(&t, opts, Verdict::CoCp, Verdict::NotCoCp);
    }
    let mut r = certify_cp_with(&t, opts)?;
    r.verdict = match r.verdict {
        Verdict::Cp => Verdict::CoCp,
        Verdict::NotCp => Verdict::NotCoCp,
        v => v,
    };
    Ok(r)
}

fn cp_by_choi(phi: &LinearMap, opts: &CertifyOptions, yes: Verdict, no: Verdict) -> Result<CertResult> {
    let c = choi(phi)?;
    let eig = hermitian_eig(&c)?;
    let lmin = eig.min_eigenvalue();
    let bound = -opts.tol * (1.0 + c.frobenius_norm());
    if lmin >= bound {
        return Ok(CertResult::new(yes, opts.tol, opts.seed, CRITERION_CHOI).with("lambda_min_choi", lmin));
    }
    let v = eig.eigenvector(0);
    let w = choi_vector_witness(&v, phi.domain_dim(), phi.codomain_dim());
    let value = dual_eval(phi, &w)?.re;
    let mut r = CertResult::new(no, opts.tol, opts.seed, CRITERION_CHOI)
        .with("lambda_min_choi", lmin)
        .with("witness_value", value);
    r.witness = Some((w, value));
    Ok(r)
}

fn extension_residual(phi: &LinearMap, c: &ComplexMatrix) -> Result<f64> {
    let (d, n) = (phi.domain_dim(), phi.codomain_dim());
    let psi = LinearMap::from_choi(c, d, n)?;
    let scale = 1.0 + phi.action().iter().map(|a| a.frobenius_norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for (b, img) in phi.domain().basis().iter().zip(phi.action()) {
        worst = worst.max((&psi.apply_matrix(b)? - img).frobenius_norm());
    }
    Ok(worst / scale)
}

/// PSD Choi matrix of a map on `M_d` agreeing with `φ` on its domain, with
/// the relative mismatch.
fn cp_extension(phi: &LinearMap, opts: &CertifyOptions) -> Result<Option<(ComplexMatrix, f64)>> {
    let (d, n) = (phi.domain_dim(), phi.codomain_dim());
    let matching = ProjectableSet::Affine(AffineSet::ExtensionMatch {
        slot: 0,
        system: Arc::clone(phi.domain()),
        images: phi.action().to_vec(),
    });
    let sets = [ProjectableSet::Psd { slot: 0 }, matching.clone()];
    let start = matching.project(&Point::single(ComplexMatrix::zeros(d * n)))?;
    let out = dykstra(&sets, start, opts.tol * 0.1, opts.budget)?;
    let c = psd_project(&out.point().0[0])?;
    let residual = extension_residual(phi, &c)?;
    Ok((residual <= opts.tol).then_some((c, residual)))
}

pub fn certify_decomposable(phi: &LinearMap, tol: f64, budget: usize, seed: u64) -> Result<CertResult> {
    certify_decomposable_with(phi, &CertifyOptions { tol, budget, seed, ..Default::default() })
}

/// Primal split first; the dual witness search runs when no split verifies.
pub fn certify_decomposable_with(phi: &LinearMap, opts: &CertifyOptions) -> Result<CertResult> {
    if let Some(r) = hermiticity_guard(phi, opts, CRITERION_DECOMPOSABLE) {
        return Ok(r);
    }
    let mut residuals = BTreeMap::new();
    if phi.is_full_domain() {
        let primal = primal_split(phi, opts)?;
        residuals.insert("primal_dykstra_residual".to_string(), primal.dykstra_residual);
        residuals.insert("primal_cycles".to_string(), primal.cycles as f64);
        if let Some((c1, c2, residual)) = primal.split {
            let mut r = CertResult::new(Verdict::Decomposable, opts.tol, opts.seed, CRITERION_DECOMPOSABLE);
            r.residuals = residuals;
            r.residuals.insert("primal_residual".into(), residual);
            r.residuals.insert("c1_norm".into(), c1.frobenius_norm());
            r.residuals.insert("c2_norm".into(), c2.frobenius_norm());
            r.primal = Some((c1, c2));
            return Ok(r);
        }
    }
    let dual = dual_witness(phi, true, opts)?;
    residuals.insert("dual_residual".to_string(), dual.residual);
    residuals.insert("dual_delta".to_string(), dual.delta);
    let mut r = match dual.witness {
        Some(w) => {
            let mut r = CertResult::new(Verdict::NotDecomposable, opts.tol, opts.seed, CRITERION_DECOMPOSABLE);
            residuals.insert("witness_value".to_string(), w.1);
            r.witness = Some(w);
            r
        }
        None => CertResult::new(Verdict::Inconclusive, opts.tol, opts.seed, CRITERION_DECOMPOSABLE),
    };
    r.residuals = residuals;
    Ok(r)
}

#[derive(Clone, Debug)]
pub struct PrimalOutcome {
    /// Verified `(C1, C2, ‖choi − C1 − PT(C2)‖_F)`.
    pub split: Option<(ComplexMatrix, ComplexMatrix, f64)>,
    pub dykstra_residual: f64,
    pub cycles: usize,
}

fn split_check(c: &ComplexMatrix, c1: ComplexMatrix, c2: ComplexMatrix, d: usize, n: usize, tol: f64) -> Result<Option<(ComplexMatrix, ComplexMatrix, f64)>> {
    let c1 = c1.symmetrized().0;
    let c2 = c2.symmetrized().0;
    if !is_psd(&c1, tol)?.0 || !is_psd(&c2, tol)?.0 {
        return Ok(None);
    }
    let residual = (&(c - &c1) - &partial_transpose_outer(&c2, d, n)?).frobenius_norm();
    Ok((residual <= tol * (1.0 + c.frobenius_norm())).then_some((c1, c2, residual)))
}

/// Dykstra over `{C1 ⪰ 0} ∩ {C2 ⪰ 0} ∩ {C1 + PT(C2) = choi(φ)}` from
/// `(C/2, PT(C)/2)`, then one part is projected onto the PSD cone and the
/// other solved for exactly.
pub fn primal_split(phi: &LinearMap, opts: &CertifyOptions) -> Result<PrimalOutcome> {
    let (d, n) = (phi.domain_dim(), phi.codomain_dim());
    let c = choi(phi)?;
    let pt = |m: &ComplexMatrix| partial_transpose_outer(m, d, n);
    let sets = [
        ProjectableSet::Psd { slot: 0 },
        ProjectableSet::Psd { slot: 1 },
        ProjectableSet::Affine(AffineSet::DecompositionSplit { target: c.clone(), outer: d, inner: n }),
    ];
    let start = Point(vec![c.scale(0.5), pt(&c)?.scale(0.5)]);
    let out = dykstra(&sets, start, opts.tol * 0.01, opts.budget)?;
    let x = out.point();
    let mut candidates = Vec::new();
    let c2 = psd_project(&x.0[1])?;
    candidates.push((&c - &pt(&c2)?, c2));
    let c1 = psd_project(&x.0[0])?;
    let rest = pt(&(&c - &c1))?;
    candidates.push((c1, rest));
    let mut split = None;
    for (c1, c2) in candidates {
        if let Some(s) = split_check(&c, c1, c2, d, n, opts.tol)? {
            split = Some(s);
            break;
        }
    }
    Ok(PrimalOutcome { split, dykstra_residual: out.residual(), cycles: out.cycles() })
}

#[derive(Clone, Debug)]
pub struct DualOutcome {
    pub witness: Option<(ComplexMatrix, f64)>,
    pub residual: f64,
    /// Halfspace offset of the last feasibility problem attempted.
    pub delta: f64,
}

/// Makes `W` an exact member of the cone: blocks projected onto `S`, shifted
/// by a multiple of the identity until `W` (and `PT(W)` when `ppt`) is PSD,
/// then scaled to trace one.
fn polish_witness(w: &ComplexMatrix, system: &OperatorSystem, n: usize, ppt: bool) -> Result<ComplexMatrix> {
    let d = system.ambient_dim();
    let mut w = w.symmetrized().0;
    if !system.is_full() {
        w = system.project_blocks(&w, n)?.symmetrized().0;
    }
    let mut lmin = crate::matlib::min_eigenvalue(&w)?;
    if ppt {
        lmin = lmin.min(crate::matlib::min_eigenvalue(&partial_transpose_outer(&w, n, d)?)?);
    }
    if lmin < 0.0 {
        w.axpy(C64::new(-lmin * (1.0 + 1e-12), 0.0), &ComplexMatrix::identity(n * d));
    }
    let tr = w.trace().re;
    Ok(w.scale(1.0 / tr))
}

fn witness_margin(phi: &LinearMap, tol: f64) -> f64 {
    tol * dual_gradient(phi).frobenius_norm()
}

/// Search for a trace-one `W` in `J_n(S)` (`ppt`) or `(S ⊗ M_n)^+` with
/// `s_φ(W) ≤ -δ ‖G‖`, `G` the gradient of `s_φ`, for `δ = 1, 1/2, ...` down
/// to `tol`. Restarts run independently; the most negative verified witness
/// wins, ties to the lowest restart.
pub fn dual_witness(phi: &LinearMap, ppt: bool, opts: &CertifyOptions) -> Result<DualOutcome> {
    let (d, n) = (phi.domain_dim(), phi.codomain_dim());
    let g = dual_gradient(phi);
    let gnorm = g.frobenius_norm();
    if gnorm == 0.0 {
        return Ok(DualOutcome { witness: None, residual: 0.0, delta: 0.0 });
    }
    let functional = Point::single(g.scale(1.0 / gnorm));
    let system = phi.domain();
    let margin = opts.tol * gnorm;

    let run = |restart: usize| -> Result<DualOutcome> {
        let start = if restart == 0 {
            ComplexMatrix::identity(n * d).scale(1.0 / (n * d) as f64)
        } else {
            random_j_member(&mut rng_for(opts.seed, restart as u64), system, n)?
        };
        let mut base = vec![ProjectableSet::Psd { slot: 0 }];
        if ppt {
            base.push(ProjectableSet::PartialTransposePsd { slot: 0, outer: n, inner: d });
        }
        if !system.is_full() {
            base.push(ProjectableSet::Affine(AffineSet::BlockSubspace { slot: 0, system: Arc::clone(system), outer: n }));
        }
        base.push(ProjectableSet::Hyperplane { functional: Point::single(ComplexMatrix::identity(n * d)), value: 1.0 });

        let mut x = Point::single(start);
        let mut delta = 1.0;
        let mut residual = f64::INFINITY;
        while delta >= opts.tol {
            let mut sets = base.clone();
            sets.push(ProjectableSet::Halfspace { functional: functional.clone(), bound: -delta });
            let out = dykstra(&sets, x.clone(), opts.tol * 0.1, opts.budget)?;
            residual = out.residual();
            let w = polish_witness(&out.point().0[0], system, n, ppt)?;
            let value = dual_eval(phi, &w)?.re;
            if value <= -margin {
                return Ok(DualOutcome { witness: Some((w, value)), residual, delta });
            }
            match out {
                DykstraOutcome::Feasible { point, .. } => x = point,
                // Ĝ has unit norm, so the gap to the halfspace is δ plus the
                // infimum of ⟨Ĝ, W⟩ over the remaining sets.
                other if other.residual() - delta > -opts.tol => break,
                _ => {}
            }
            delta *= 0.5;
        }
        Ok(DualOutcome { witness: None, residual, delta })
    };

    let outcomes = map_indexed(opts.exec, opts.restarts.max(1), run);
    let mut best: Option<DualOutcome> = None;
    let mut last_residual = 0.0;
    let mut last_delta = 0.0;
    for o in outcomes {
        let o = o?;
        last_residual = o.residual;
        last_delta = o.delta;
        let better = match (&o.witness, best.as_ref().and_then(|b| b.witness.as_ref())) {
            (Some((_, v)), Some((_, bv))) => v < bv,
            (Some(_), None) => true,
            _ => false,
        };
        if better {
            best = Some(o);
        }
    }
    Ok(best.unwrap_or(DualOutcome { witness: None, residual: last_residual, delta: last_delta }))
}

/// The co-CP map `x ↦ K xᵗ K*` with `K[a][i] = v[a q + i]`; on `ρ ∈ M_p ⊗ M_q`
/// its dual functional equals `v* PT(ρ) v`.
pub fn pt_eigenvector_map(v: &[C64], p: usize, q: usize) -> LinearMap {
    let k = ComplexMatrix::from_fn(q.max(p), |a, i| if a < p && i < q { v[a * q + i] } else { C64::new(0.0, 0.0) });
    LinearMap::from_fn_full(q, p, |x| {
        let mut xt = ComplexMatrix::zeros(q.max(p));
        for i in 0..q {
            for j in 0..q {
                xt[(i, j)] = x[(j, i)];
            }
        }
        let full = &(&k * &xt) * &k.adjoint();
        ComplexMatrix::from_fn(p, |a, b| full[(a, b)])
    })
}

fn check_state(rho: &ComplexMatrix, p: usize, q: usize) -> Result<()> {
    if p == 0 || q == 0 || rho.dim() != p * q {
        return Err(DecomapError::dim(format!("state of dim {} is not {p} x {q}", rho.dim())));
    }
    if rho.hermitian_deviation() > 1e-10 * (1.0 + rho.max_abs()) {
        return Err(DecomapError::domain("state is not Hermitian"));
    }
    Ok(())
}

/// PPT test for `ρ ∈ M_p ⊗ M_q` (outer index `p`); decides separability when
/// `pq ≤ 6`.
pub fn certify_separable_small(rho: &ComplexMatrix, p: usize, q: usize, tol: f64) -> Result<CertResult> {
    check_state(rho, p, q)?;
    if p * q > 6 {
        return Err(DecomapError::UnsupportedDimension { p, q });
    }
    let (psd, lmin) = is_psd(rho, tol)?;
    if !psd {
        return Err(DecomapError::domain(format!("state is not PSD (lambda_min = {lmin:.3e})")));
    }
    let cert = in_j(rho, &OperatorSystem::full(q), p, tol)?;
    let base = |v| {
        CertResult::new(v, tol, 0, CRITERION_PPT)
            .with("lambda_min_raw", cert.lambda_min_raw)
            .with("lambda_min_pt", cert.lambda_min_pt)
    };
    if cert.member {
        return Ok(base(Verdict::Separable));
    }
    let eig = hermitian_eig(&partial_transpose_outer(rho, p, q)?)?;
    let map = pt_eigenvector_map(&eig.eigenvector(0), p, q);
    let value = dual_eval(&map, rho)?.re;
    let mut r = base(Verdict::Entangled).with("witness_value", value);
    r.witness_map = Some(map);
    Ok(r)
}

pub fn sep_witness(rho: &ComplexMatrix, p: usize, q: usize, budget: usize, seed: u64) -> Result<CertResult> {
    sep_witness_with(rho, p, q, budget, seed, Execution::default())
}

/// Searches positive maps `φ: M_q → M_p` with `s_φ(ρ) < WITNESS_THRESHOLD`:
/// the co-CP map built from the most negative eigenvector of `PT(ρ)`, and for
/// `p = q = 3` Choi maps with `μ ≥ 1`, plain and conjugated by `budget`
/// seeded random unitaries. Candidates are tried from the most negative value
/// and accepted when [`positivity_probe_with`] finds no counterexample.
pub fn sep_witness_with(
    rho: &ComplexMatrix,
    p: usize,
    q: usize,
    budget: usize,
    seed: u64,
    exec: Execution,
) -> Result<CertResult> {
    check_state(rho, p, q)?;
    let mut candidates: Vec<LinearMap> = Vec::new();
    let eig = hermitian_eig(&partial_transpose_outer(rho, p, q)?)?;
    if eig.min_eigenvalue() < 0.0 {
        candidates.push(pt_eigenvector_map(&eig.eigenvector(0), p, q));
    }
    if p == 3 && q == 3 {
        const MUS: [f64; 5] = [1.0, 1.25, 1.5, 2.0, 3.0];
        candidates.extend(MUS.iter().map(|&mu| choi_map(mu)));
        let conjugated = map_indexed(exec, budget, |r| {
            let mut rng = rng_for(seed, 0x5e9 + r as u64);
            let pre = random_unitary(&mut rng, 3);
            let post = random_unitary(&mut rng, 3);
            choi_map(MUS[r % MUS.len()]).conjugated(&pre, &post)
        });
        for m in conjugated {
            candidates.push(m?);
        }
    }
    let values = map_indexed(exec, candidates.len(), |i| dual_eval(&candidates[i], rho).map(|v| v.re));
    let mut ranked = Vec::with_capacity(values.len());
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if v < WITNESS_THRESHOLD {
            ranked.push((i, v));
        }
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let tried = ranked.len();
    for (i, value) in ranked {
        let probe = positivity_probe_with(&candidates[i], PROBE_BUDGET, seed, exec)?;
        if !probe.is_counterexample() {
            let mut r = CertResult::new(Verdict::Entangled, DEFAULT_TOL, seed, CRITERION_POSITIVE_WITNESS)
                .with("witness_value", value)
                .with("probe_lambda_min", probe.lambda_min())
                .with("candidates", candidates.len() as f64);
            r.witness_map = Some(candidates.swap_remove(i));
            return Ok(r);
        }
    }
    Ok(CertResult::new(Verdict::Inconclusive, DEFAULT_TOL, seed, CRITERION_POSITIVE_WITNESS)
        .with("candidates", candidates.len() as f64)
        .with("negative_candidates", tried as f64))
}

/// What a certificate speaks about.
#[derive(Clone, Copy, Debug)]
pub enum Subject<'a> {
    Map(&'a LinearMap),
    State { rho: &'a ComplexMatrix, p: usize, q: usize },
}

fn malformed(msg: &str) -> DecomapError {
    DecomapError::MalformedCertificate(msg.to_string())
}

/// Recomputes every claim of `result` with fresh eigensolves and fresh
/// evaluations of `s_φ`. Inconclusive results claim nothing and verify.
pub fn verify_certificate(result: &CertResult, subject: Subject<'_>) -> Result<bool> {
    let tol = result.tol;
    match (result.verdict, subject) {
        (Verdict::Inconclusive, _) => Ok(true),
        (Verdict::Cp | Verdict::CoCp, Subject::Map(phi)) => {
            let target = if result.verdict == Verdict::Cp { phi.clone() } else { compose_transpose(phi) };
            if target.is_full_domain() {
                let c = choi(&target)?;
                return is_psd(&c, tol).map(|r| r.0);
            }
            let (c1, c2) = result.primal.as_ref().ok_or_else(|| malformed("CP on a subsystem needs an extension"))?;
            if c1.dim() != phi.domain_dim() * phi.codomain_dim() {
                return Err(malformed("extension has the wrong dimension"));
            }
            Ok(c2.max_abs() == 0.0 && is_psd(c1, tol)?.0 && extension_residual(&target, c1)? <= tol)
        }
        (Verdict::NotCp | Verdict::NotCoCp, Subject::Map(phi)) => {
            let target = if result.verdict == Verdict::NotCp { phi.clone() } else { compose_transpose(phi) };
            let (w, value) = result.witness.as_ref().ok_or_else(|| malformed("missing witness"))?;
            verify_witness(&target, w, *value, false, tol)
        }
        (Verdict::Decomposable, Subject::Map(phi)) => {
            let (c1, c2) = result.primal.as_ref().ok_or_else(|| malformed("missing primal split"))?;
            let c = choi(phi)?;
            if c1.dim() != c.dim() || c2.dim() != c.dim() {
                return Err(malformed("split has the wrong dimension"));
            }
            let (d, n) = (phi.domain_dim(), phi.codomain_dim());
            Ok(split_check(&c, c1.clone(), c2.clone(), d, n, tol)?.is_some())
        }
        (Verdict::NotDecomposable, Subject::Map(phi)) => {
            let (w, value) = result.witness.as_ref().ok_or_else(|| malformed("missing witness"))?;
            verify_witness(phi, w, *value, true, tol)
        }
        (Verdict::Separable, Subject::State { rho, p, q }) => {
            check_state(rho, p, q)?;
            if p * q > 6 {
                return Ok(false);
            }
            Ok(in_j(rho, &OperatorSystem::full(q), p, tol)?.member)
        }
        (Verdict::Entangled, Subject::State { rho, p, q }) => {
            check_state(rho, p, q)?;
            let map = result.witness_map.as_ref().ok_or_else(|| malformed("missing witness map"))?;
            if map.domain_dim() != q || map.codomain_dim() != p {
                return Err(malformed("witness map has the wrong shape"));
            }
            let value = dual_eval(map, rho)?.re;
            let recorded = result.residuals.get("witness_value").copied().unwrap_or(value);
            if !(value < WITNESS_THRESHOLD) || (value - recorded).abs() > 1e-9 * (1.0 + value.abs()) {
                return Ok(false);
            }
            map_is_positive(map, result.seed)
        }
        _ => Err(malformed(&format!("verdict {} does not match the subject", result.verdict))),
    }
}

fn verify_witness(phi: &LinearMap, w: &ComplexMatrix, value: f64, ppt: bool, tol: f64) -> Result<bool> {
    let (d, n) = (phi.domain_dim(), phi.codomain_dim());
    if w.dim() != d * n {
        return Err(malformed("witness has the wrong dimension"));
    }
    if !phi.domain().is_full() && phi.domain().block_residual(w, n)?.0 > DOMAIN_TOL {
        return Ok(false);
    }
    let member = if ppt { in_j(w, phi.domain(), n, tol)?.member } else { is_psd(w, tol)?.0 };
    if !member {
        return Ok(false);
    }
    let fresh = dual_eval(phi, w)?.re;
    let scale = 1.0 + fresh.abs();
    Ok((fresh - value).abs() <= 1e-9 * scale && fresh <= -witness_margin(phi, tol))
}

/// Exact for CP and co-CP maps, otherwise a seeded sampling probe.
fn map_is_positive(map: &LinearMap, seed: u64) -> Result<bool> {
    let opts = CertifyOptions { tol: 1e-9, ..Default::default() };
    if map.is_full_domain()
        && (cp_by_choi(map, &opts, Verdict::Cp, Verdict::NotCp)?.verdict == Verdict::Cp
            || cp_by_choi(&compose_transpose(map), &opts, Verdict::Cp, Verdict::NotCp)?.verdict == Verdict::Cp)
    {
        return Ok(true);
    }
    Ok(!positivity_probe_with(map, PROBE_BUDGET, seed, Execution::default())?.is_counterexample())
}
