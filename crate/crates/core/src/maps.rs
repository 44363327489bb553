//! Linear maps `φ: S → M_n`, their ampliations, Choi matrices and dual
//! functionals.
//!
//! A map is stored by the images of the orthonormal basis of its domain, so
//! maps on proper operator subsystems need no extension to be represented.
//! The dual functional is
//!
//! ```text
//! s_φ(s ⊗ X) = <(φ(s) ⊗ X) e, e>,   e = Σ_j e_j ⊗ e_j,
//! ```
//!
//! which on a block matrix `[x_ij] = Σ kron(E_ij, x_ij)` is `Σ_ij φ(x_ij)[i][j]`
//! and on an elementary tensor equals `Tr(φ(s) X^t)`.

use std::sync::Arc;

use rand::Rng;

use crate::error::{DecomapError, Result};
use crate::exec::{argmin_by, map_indexed, Execution};
use crate::matlib::{hermitian_eig, kron, max_entangled_vector, ComplexMatrix, C64, ZERO};
use crate::opsys::{OperatorSystem, SystemElement};
use crate::random::{normalize, random_unit_vector, rng_for};

/// Tolerance for outer blocks to count as members of the domain.
pub const DOMAIN_TOL: f64 = 1e-8;
/// A probe only reports a counterexample below this eigenvalue.
pub const PROBE_THRESHOLD: f64 = -1e-8;
pub const PROBE_REFINE_STEPS: usize = 50;

#[derive(Clone, Debug)]
pub struct LinearMap {
    domain: Arc<OperatorSystem>,
    codomain_dim: usize,
    action: Vec<ComplexMatrix>,
    hermiticity_residual: f64,
    /// `φ(E_ij)` exactly as supplied, when built from a Choi matrix.
    units: Option<Arc<Vec<ComplexMatrix>>>,
}

impl LinearMap {
    /// Hermiticity-preserving map from basis images; each image is
    /// symmetrized and the largest dropped anti-Hermitian norm recorded.
    pub fn new(domain: Arc<OperatorSystem>, codomain_dim: usize, action: Vec<ComplexMatrix>) -> Result<Self> {
        let mut map = Self::from_raw_images(domain, codomain_dim, action)?;
        map.action = map.action.iter().map(|a| a.symmetrized().0).collect();
        Ok(map)
    }

    /// Keeps the images as given. `hermiticity_residual` measures how far the
    /// map is from preserving Hermiticity.
    pub fn from_raw_images(
        domain: Arc<OperatorSystem>,
        codomain_dim: usize,
        action: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        if action.len() != domain.dim() {
            return Err(DecomapError::dim(format!(
                "{} images for a domain of dimension {}",
                action.len(),
                domain.dim()
            )));
        }
        if let Some((i, a)) = action.iter().enumerate().find(|(_, a)| a.dim() != codomain_dim) {
            return Err(DecomapError::dim(format!("image {i} has dim {}, expected {codomain_dim}", a.dim())));
        }
        if let Some(i) = action.iter().position(|a| !a.is_finite()) {
            return Err(DecomapError::Parse(format!("image {i} has non-finite entries")));
        }
        let hermiticity_residual = action.iter().map(|a| a.symmetrized().1).fold(0.0, f64::max);
        Ok(LinearMap { domain, codomain_dim, action, hermiticity_residual, units: None })
    }

    /// Map on all of `M_d` given by a linear function evaluated on the basis.
    pub fn from_fn_full(d: usize, n: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let domain = Arc::new(OperatorSystem::full(d));
        let action = domain.basis().iter().map(&f).collect();
        let mut map = Self::from_raw_images(domain, n, action).expect("images have the declared shape");
        map.units = Some(Arc::new((0..d * d).map(|k| f(&ComplexMatrix::unit(d, k / d, k % d))).collect()));
        map
    }

    /// Map whose Choi matrix (outer `d`, inner `n`) is `c`.
    pub fn from_choi(c: &ComplexMatrix, d: usize, n: usize) -> Result<Self> {
        if c.dim() != d * n {
            return Err(DecomapError::dim(format!("Choi matrix of dim {} is not {d} x {n}", c.dim())));
        }
        let domain = Arc::new(OperatorSystem::full(d));
        let action = domain
            .basis()
            .iter()
            .map(|b| {
                let mut img = ComplexMatrix::zeros(n);
                for i in 0..d {
                    for j in 0..d {
                        if b[(i, j)] != ZERO {
                            img.axpy(b[(i, j)], &c.block(n, i, j));
                        }
                    }
                }
                img
            })
            .collect();
        let mut map = Self::from_raw_images(domain, n, action)?;
        map.units = Some(Arc::new((0..d * d).map(|k| c.block(n, k / d, k % d)).collect()));
        Ok(map)
    }

    /// Images `φ(E_ij)` for a full-algebra domain, row-major in `(i, j)`.
    pub fn from_unit_images(d: usize, n: usize, images: &[ComplexMatrix]) -> Result<Self> {
        if images.len() != d * d {
            return Err(DecomapError::dim(format!("{} unit images for M_{d}", images.len())));
        }
        if images.iter().any(|m| m.dim() != n) {
            return Err(DecomapError::dim("unit image with wrong codomain dimension"));
        }
        let c = ComplexMatrix::from_blocks(d, n, |i, j| images[i * d + j].clone());
        Self::from_choi(&c, d, n)
    }

    pub fn identity(d: usize) -> Self {
        Self::from_fn_full(d, d, |x| x.clone())
    }

    pub fn transpose(d: usize) -> Self {
        Self::from_fn_full(d, d, |x| x.transpose())
    }

    pub fn domain(&self) -> &Arc<OperatorSystem> {
        &self.domain
    }

    pub fn domain_dim(&self) -> usize {
        self.domain.ambient_dim()
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn action(&self) -> &[ComplexMatrix] {
        &self.action
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.hermiticity_residual
    }

    pub fn is_hermiticity_preserving(&self, tol: f64) -> bool {
        self.hermiticity_residual <= tol
    }

    pub fn is_full_domain(&self) -> bool {
        self.domain.is_full()
    }

    pub fn apply_coords(&self, coords: &[C64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.codomain_dim);
        for (c, a) in coords.iter().zip(&self.action) {
            if *c != ZERO {
                out.axpy(*c, a);
            }
        }
        out
    }

    /// `φ(x)` for `x` in the domain, checked at `DOMAIN_TOL`.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (inside, residual) = self.domain.contains(x, DOMAIN_TOL)?;
        if !inside {
            return Err(DecomapError::domain(format!("argument lies outside the domain (residual {residual:.3e})")));
        }
        Ok(self.apply_coords(&self.domain.coordinates(x)?))
    }

    /// `φ` applied to the orthogonal projection of `x` onto the domain.
    pub fn apply_projected(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.apply_coords(&self.domain.coordinates(x).expect("dimension checked by caller"))
    }

    pub fn scaled(&self, c: f64) -> Self {
        LinearMap {
            domain: Arc::clone(&self.domain),
            codomain_dim: self.codomain_dim,
            action: self.action.iter().map(|a| a.scale(c)).collect(),
            hermiticity_residual: self.hermiticity_residual * c.abs(),
            units: None,
        }
    }

    pub fn sum(&self, other: &LinearMap) -> Result<Self> {
        if *self.domain != *other.domain || self.codomain_dim != other.codomain_dim {
            return Err(DecomapError::dim("maps have different domains or codomains"));
        }
        let action = self.action.iter().zip(&other.action).map(|(a, b)| a + b).collect();
        Self::from_raw_images(Arc::clone(&self.domain), self.codomain_dim, action)
    }

    /// `x ↦ post φ(pre x pre*) post*` on a full-algebra domain.
    pub fn conjugated(&self, pre: &ComplexMatrix, post: &ComplexMatrix) -> Result<Self> {
        if !self.is_full_domain() {
            return Err(DecomapError::domain("conjugation needs a full-algebra domain"));
        }
        if pre.dim() != self.domain_dim() || post.dim() != self.codomain_dim {
            return Err(DecomapError::dim("conjugating matrices have the wrong size"));
        }
        let pre_adj = pre.adjoint();
        let post_adj = post.adjoint();
        let action = self
            .domain
            .basis()
            .iter()
            .map(|b| {
                let inner = &(pre * b) * &pre_adj;
                &(post * &self.apply_projected(&inner)) * &post_adj
            })
            .collect();
        Self::from_raw_images(Arc::clone(&self.domain), self.codomain_dim, action)
    }

    /// Maximum coefficient-wise distance between the basis images of two maps.
    pub fn distance(&self, other: &LinearMap) -> f64 {
        if self.action.len() != other.action.len() {
            return f64::INFINITY;
        }
        self.action
            .iter()
            .zip(&other.action)
            .map(|(a, b)| (a - b).max_abs())
            .fold(0.0, f64::max)
    }

    /// `φ(E_ij)` in row-major order; full-algebra domains only.
    pub fn unit_images(&self) -> Vec<ComplexMatrix> {
        if let Some(units) = &self.units {
            return units.as_ref().clone();
        }
        let d = self.domain_dim();
        (0..d * d)
            .map(|k| self.apply_projected(&ComplexMatrix::unit(d, k / d, k % d)))
            .collect()
    }
}

pub fn apply(phi: &LinearMap, s: &SystemElement) -> Result<ComplexMatrix> {
    if !s.belongs_to(phi.domain()) {
        return Err(DecomapError::domain("element belongs to a different operator system"));
    }
    Ok(phi.apply_coords(s.coords()))
}

fn check_blocks(phi: &LinearMap, m: &ComplexMatrix, k: usize) -> Result<()> {
    let d = phi.domain_dim();
    if k == 0 || m.dim() != d * k {
        return Err(DecomapError::dim(format!("matrix of dim {} is not {d} x {k}", m.dim())));
    }
    if !phi.is_full_domain() {
        let (worst, (i, j)) = phi.domain().block_residual(m, k)?;
        if worst > DOMAIN_TOL {
            return Err(DecomapError::domain(format!(
                "block ({i}, {j}) lies outside the domain (relative residual {worst:.3e})"
            )));
        }
    }
    Ok(())
}

/// `φ_k = φ ⊗ I_k`: block `(i, j)` of the `d·k` input maps to `φ(block_ij)`.
pub fn ampliate(phi: &LinearMap, m: &ComplexMatrix, k: usize) -> Result<ComplexMatrix> {
    check_blocks(phi, m, k)?;
    let d = phi.domain_dim();
    Ok(ComplexMatrix::from_blocks(k, phi.codomain_dim(), |i, j| phi.apply_projected(&m.block(d, i, j))))
}

/// `Σ_ij kron(E_ij, φ(E_ij))`, outer index `d`, inner `n`.
pub fn choi(phi: &LinearMap) -> Result<ComplexMatrix> {
    if !phi.is_full_domain() {
        return Err(DecomapError::domain(
            "Choi matrix needs a full-algebra domain; the map is defined on a proper subsystem",
        ));
    }
    let d = phi.domain_dim();
    let images = phi.unit_images();
    Ok(ComplexMatrix::from_blocks(d, phi.codomain_dim(), |i, j| images[i * d + j].clone()))
}

/// `s_φ(M) = Σ_ij φ(M_ij)[i][j]` for `M ∈ S ⊗ M_n` (outer index `n`).
pub fn dual_eval(phi: &LinearMap, m: &ComplexMatrix) -> Result<C64> {
    let n = phi.codomain_dim();
    check_blocks(phi, m, n)?;
    let d = phi.domain_dim();
    let mut total = ZERO;
    if let Some(units) = &phi.units {
        for a in 0..n {
            for b in 0..n {
                for i in 0..d {
                    for j in 0..d {
                        total += m[(a * d + i, b * d + j)] * units[i * d + j][(a, b)];
                    }
                }
            }
        }
        return Ok(total);
    }
    for i in 0..n {
        for j in 0..n {
            total += phi.apply_projected(&m.block(d, i, j))[(i, j)];
        }
    }
    Ok(total)
}

/// `s_φ` through the Kronecker form `<φ_n(M) e, e>`.
pub fn dual_eval_kron(phi: &LinearMap, m: &ComplexMatrix) -> Result<C64> {
    let amp = ampliate(phi, m, phi.codomain_dim())?;
    let e = max_entangled_vector(phi.codomain_dim());
    Ok(amp.form(&e, &e))
}

/// Values `f(b_i ⊗ E_jk)` of a functional on `S ⊗ M_n`, indexed `[i][j][k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalTable {
    pub domain_dim: usize,
    pub n: usize,
    pub values: Vec<C64>,
}

impl FunctionalTable {
    pub fn new(domain_dim: usize, n: usize, values: Vec<C64>) -> Result<Self> {
        if values.len() != domain_dim * n * n {
            return Err(DecomapError::dim(format!(
                "functional table has {} values, expected {domain_dim} x {n} x {n}",
                values.len()
            )));
        }
        Ok(FunctionalTable { domain_dim, n, values })
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.values[(i * self.n + j) * self.n + k]
    }
}

/// Tabulates `s_φ` on `b_i ⊗ E_jk` via [`dual_eval`].
pub fn functional_of(phi: &LinearMap) -> Result<FunctionalTable> {
    let n = phi.codomain_dim();
    let mut values = Vec::with_capacity(phi.domain().dim() * n * n);
    for b in phi.domain().basis() {
        for j in 0..n {
            for k in 0..n {
                values.push(dual_eval(phi, &kron(&ComplexMatrix::unit(n, j, k), b))?);
            }
        }
    }
    FunctionalTable::new(phi.domain().dim(), n, values)
}

/// The unique `φ` with `s_φ = f`: `<φ(b_i) e_k, e_j> = f(b_i ⊗ e_j e_k*)`.
pub fn map_from_functional(domain: &Arc<OperatorSystem>, f: &FunctionalTable) -> Result<LinearMap> {
    if f.domain_dim != domain.dim() {
        return Err(DecomapError::dim(format!(
            "functional tabulated on {} basis elements, domain has {}",
            f.domain_dim,
            domain.dim()
        )));
    }
    let n = f.n;
    let action = (0..f.domain_dim)
        .map(|i| ComplexMatrix::from_fn(n, |j, k| f.get(i, j, k)))
        .collect();
    LinearMap::from_raw_images(Arc::clone(domain), n, action)
}

/// `t ∘ φ`.
pub fn compose_transpose(phi: &LinearMap) -> LinearMap {
    LinearMap {
        domain: Arc::clone(&phi.domain),
        codomain_dim: phi.codomain_dim,
        action: phi.action.iter().map(|a| a.transpose()).collect(),
        hermiticity_residual: phi.hermiticity_residual,
        units: None,
    }
}

/// Hermitian `G` on `M_d ⊗ M_n` with `Re s_φ(W) = Re Tr(G W)` for every
/// Hermitian `W ∈ S ⊗ M_n`; `G` itself lies in `S ⊗ M_n`.
pub fn dual_gradient(phi: &LinearMap) -> ComplexMatrix {
    let n = phi.codomain_dim();
    let d = phi.domain_dim();
    let outer_basis = OperatorSystem::full(n);
    let mut g = ComplexMatrix::zeros(d * n);
    for f in outer_basis.basis() {
        for (b, img) in phi.domain().basis().iter().zip(phi.action()) {
            // s_φ(kron(F, b)) = Σ_jk F_jk φ(b)_jk
            let value: C64 = f.as_slice().iter().zip(img.as_slice()).map(|(x, y)| x * y).sum();
            if value.re != 0.0 {
                g.axpy(C64::new(value.re, 0.0), &kron(f, b));
            }
        }
    }
    g
}

#[derive(Clone, Debug)]
pub enum ProbeVerdict {
    /// No sampled positive input had an image with eigenvalue below
    /// `PROBE_THRESHOLD`; `best_lambda_min` is the smallest seen.
    NoCounterexample { best_lambda_min: f64 },
    Counterexample {
        /// The positive input whose image fails to be PSD (trace one).
        input: ComplexMatrix,
        /// Unit vector `x` with `input = x x*`, for full-algebra domains.
        vector: Option<Vec<C64>>,
        lambda_min: f64,
    },
}

impl ProbeVerdict {
    pub fn is_counterexample(&self) -> bool {
        matches!(self, ProbeVerdict::Counterexample { .. })
    }

    pub fn lambda_min(&self) -> f64 {
        match self {
            ProbeVerdict::NoCounterexample { best_lambda_min } => *best_lambda_min,
            ProbeVerdict::Counterexample { lambda_min, .. } => *lambda_min,
        }
    }
}

/// Sampling search for a positive input with non-positive image.
///
/// Full-algebra domains: `budget` random unit vectors `x`, then
/// `PROBE_REFINE_STEPS` projected-gradient steps on the best `λ_min(φ(xx*))`.
/// Proper subsystems: `budget` random positive elements of `S`. Never a proof
/// of positivity.
pub fn positivity_probe(phi: &LinearMap, budget: usize, seed: u64) -> Result<ProbeVerdict> {
    positivity_probe_with(phi, budget, seed, Execution::default())
}

pub fn positivity_probe_with(phi: &LinearMap, budget: usize, seed: u64, exec: Execution) -> Result<ProbeVerdict> {
    let budget = budget.max(1);
    if phi.is_full_domain() {
        probe_rank_one(phi, budget, seed, exec)
    } else {
        probe_subsystem(phi, budget, seed, exec)
    }
}

fn probe_rank_one(phi: &LinearMap, budget: usize, seed: u64, exec: Execution) -> Result<ProbeVerdict> {
    let d = phi.domain_dim();
    let units = phi.unit_images();
    let image = |x: &[C64]| {
        let mut out = ComplexMatrix::zeros(phi.codomain_dim());
        for a in 0..d {
            for b in 0..d {
                out.axpy(x[a] * x[b].conj(), &units[a * d + b]);
            }
        }
        out
    };
    let evaluate = |x: &[C64]| -> Result<(f64, Vec<C64>)> {
        let e = hermitian_eig(&image(x))?;
        Ok((e.min_eigenvalue(), e.eigenvector(0)))
    };

    let samples: Vec<Result<(Vec<C64>, f64)>> = map_indexed(exec, budget, |r| {
        let mut rng = rng_for(seed, r as u64);
        let x = random_unit_vector(&mut rng, d);
        let (l, _) = evaluate(&x)?;
        Ok((x, l))
    });
    let samples: Vec<(Vec<C64>, f64)> = samples.into_iter().collect::<Result<_>>()?;
    let best = argmin_by(&samples, |s| s.1).expect("budget is positive");
    let (mut x, mut lambda) = samples[best].clone();

    for _ in 0..PROBE_REFINE_STEPS {
        let (l, v) = evaluate(&x)?;
        lambda = l;
        // λ(x) = x* M x with M_ba = v* φ(E_ab) v for the current eigenvector v.
        let m = ComplexMatrix::from_fn(d, |b, a| units[a * d + b].form(&v, &v));
        let mx = m.matvec(&x);
        let rayleigh: C64 = x.iter().zip(&mx).map(|(a, b)| a.conj() * b).sum();
        let grad: Vec<C64> = mx.iter().zip(&x).map(|(g, xi)| g - rayleigh * xi).collect();
        if grad.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt() < 1e-14 {
            break;
        }
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-8 {
            let mut cand: Vec<C64> = x.iter().zip(&grad).map(|(a, g)| a - g * step).collect();
            normalize(&mut cand);
            let (lc, _) = evaluate(&cand)?;
            if lc < lambda {
                x = cand;
                lambda = lc;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }

    if lambda < PROBE_THRESHOLD {
        Ok(ProbeVerdict::Counterexample { input: ComplexMatrix::outer(&x, &x), vector: Some(x), lambda_min: lambda })
    } else {
        Ok(ProbeVerdict::NoCounterexample { best_lambda_min: lambda })
    }
}

fn probe_subsystem(phi: &LinearMap, budget: usize, seed: u64, exec: Execution) -> Result<ProbeVerdict> {
    let samples: Vec<Result<(ComplexMatrix, f64)>> = map_indexed(exec, budget, |r| {
        let mut rng = rng_for(seed, r as u64);
        let p = phi.domain().random_positive_element(&mut rng)?;
        let p = p.scale(1.0 / p.trace().re.max(f64::MIN_POSITIVE));
        let l = hermitian_eig(&phi.apply_projected(&p))?.min_eigenvalue();
        Ok((p, l))
    });
    let samples: Vec<(ComplexMatrix, f64)> = samples.into_iter().collect::<Result<_>>()?;
    let best = argmin_by(&samples, |s| s.1).expect("budget is positive");
    let (input, lambda) = samples[best].clone();
    if lambda < PROBE_THRESHOLD {
        Ok(ProbeVerdict::Counterexample { input, vector: None, lambda_min: lambda })
    } else {
        Ok(ProbeVerdict::NoCounterexample { best_lambda_min: lambda })
    }
}

/// `Σ_{r=1..R} kron(q_r, p_r)` with `p_r` positive in `S`, `q_r` PSD in
/// `M_n` and `R` uniform in `1..=5`: a random element of `S^+ ⊗ M_n^+`.
pub fn random_product_positive<R: Rng + ?Sized>(rng: &mut R, system: &OperatorSystem, n: usize) -> Result<ComplexMatrix> {
    let terms = rng.random_range(1..=5);
    random_product_positive_terms(rng, system, n, terms)
}

pub fn random_product_positive_terms<R: Rng + ?Sized>(
    rng: &mut R,
    system: &OperatorSystem,
    n: usize,
    terms: usize,
) -> Result<ComplexMatrix> {
    let d = system.ambient_dim();
    let mut out = ComplexMatrix::zeros(d * n);
    for _ in 0..terms {
        let p = system.random_positive_element(rng)?;
        let rank = rng.random_range(1..=n);
        let q = crate::random::random_psd(rng, n, rank);
        out += &kron(&q, &p);
    }
    Ok(out)
}
