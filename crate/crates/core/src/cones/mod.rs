//! The PPT cone `J_k(S)`, compression of block matrices, separable sampling
//! and the Dykstra feasibility engine.

mod dykstra;

pub use dykstra::{dykstra, AffineSet, DykstraOutcome, Point, ProjectableSet, STABLE_CYCLES, STABLE_RELATIVE_CHANGE};

use rand::Rng;

use crate::error::{DecomapError, Result};
use crate::maps::{random_product_positive_terms, DOMAIN_TOL};
use crate::matlib::{kron, min_eigenvalue, partial_transpose_outer, ComplexMatrix, C64};
use crate::opsys::OperatorSystem;
use crate::random::rng_for;

/// Eigenvalue evidence for (non-)membership in `J_k(S)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JConeCertificate {
    pub lambda_min_raw: f64,
    pub lambda_min_pt: f64,
    pub member: bool,
    pub tol: f64,
}

fn check_system_blocks(m: &ComplexMatrix, system: &OperatorSystem, k: usize) -> Result<()> {
    let d = system.ambient_dim();
    if k == 0 || m.dim() != d * k {
        return Err(DecomapError::dim(format!("matrix of dim {} is not {d} x {k}", m.dim())));
    }
    if !system.is_full() {
        let (worst, (i, j)) = system.block_residual(m, k)?;
        if worst > DOMAIN_TOL {
            return Err(DecomapError::domain(format!(
                "block ({i}, {j}) lies outside the operator system (relative residual {worst:.3e})"
            )));
        }
    }
    Ok(())
}

/// `M ∈ J_k(S)`: `M ⪰ 0` and its outer partial transpose `⪰ 0`, both at
/// `tol (1 + ‖M‖_F)`.
pub fn in_j(m: &ComplexMatrix, system: &OperatorSystem, k: usize, tol: f64) -> Result<JConeCertificate> {
    check_system_blocks(m, system, k)?;
    let pt = partial_transpose_outer(m, k, system.ambient_dim())?;
    certificate_from(m, &pt, tol)
}

/// As [`in_j`], with the transpose on `M_k` taken in the basis `U e_j`.
pub fn in_j_with_basis(
    m: &ComplexMatrix,
    system: &OperatorSystem,
    k: usize,
    basis: &ComplexMatrix,
    tol: f64,
) -> Result<JConeCertificate> {
    check_system_blocks(m, system, k)?;
    let pt = partial_basis_transpose_outer(m, k, system.ambient_dim(), basis)?;
    certificate_from(m, &pt, tol)
}

fn certificate_from(m: &ComplexMatrix, pt: &ComplexMatrix, tol: f64) -> Result<JConeCertificate> {
    let lambda_min_raw = min_eigenvalue(m)?;
    let lambda_min_pt = min_eigenvalue(pt)?;
    let bound = -tol * (1.0 + m.frobenius_norm());
    Ok(JConeCertificate {
        lambda_min_raw,
        lambda_min_pt,
        member: lambda_min_raw >= bound && lambda_min_pt >= bound,
        tol,
    })
}

/// `(t_F ⊗ id)(M)` for the transpose `t_F` on the outer factor associated
/// with the basis `F = U E`.
pub fn partial_basis_transpose_outer(
    m: &ComplexMatrix,
    outer: usize,
    inner: usize,
    basis: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    if basis.dim() != outer {
        return Err(DecomapError::dim(format!("basis of dim {} for outer factor {outer}", basis.dim())));
    }
    let deviation = crate::matlib::unitarity_deviation(basis);
    if !(deviation <= crate::matlib::UNITARY_TOL) {
        return Err(DecomapError::InvalidBasis { deviation });
    }
    let v = kron(&(basis * &basis.transpose()), &ComplexMatrix::identity(inner));
    let pt = partial_transpose_outer(m, outer, inner)?;
    Ok(&(&v * &pt) * &v.adjoint())
}

/// `Σ_{j,k} kron(y_j y_k*, s_jk)` where `s_jk` are the outer blocks of the
/// `d·m` matrix `m` and `y_1..y_m ∈ C^n`.
pub fn compress(m: &ComplexMatrix, ys: &[Vec<C64>], d: usize) -> Result<ComplexMatrix> {
    let outer = ys.len();
    if outer == 0 || d == 0 || m.dim() != d * outer {
        return Err(DecomapError::dim(format!(
            "matrix of dim {} does not match {} vectors over blocks of size {d}",
            m.dim(),
            outer
        )));
    }
    let n = ys[0].len();
    if ys.iter().any(|y| y.len() != n) {
        return Err(DecomapError::dim("compression vectors have different lengths"));
    }
    let mut out = ComplexMatrix::zeros(d * n);
    for j in 0..outer {
        for k in 0..outer {
            out += &kron(&ComplexMatrix::outer(&ys[j], &ys[k]), &m.block(d, j, k));
        }
    }
    Ok(out)
}

/// A random element of `S^+ ⊗ M_n^+` with `terms` elementary summands.
pub fn random_separable(system: &OperatorSystem, n: usize, seed: u64, terms: usize) -> Result<ComplexMatrix> {
    if terms == 0 {
        return Err(DecomapError::Sampling("at least one term is required".into()));
    }
    let mut rng = rng_for(seed, 0);
    random_product_positive_terms(&mut rng, system, n, terms)
}

/// A random member of `J_k(S)`: a random PSD matrix in `S ⊗ M_k` shifted by
/// the identity until its partial transpose is PSD as well.
pub fn random_j_member<R: Rng + ?Sized>(rng: &mut R, system: &OperatorSystem, k: usize) -> Result<ComplexMatrix> {
    let d = system.ambient_dim();
    let rank = rng.random_range(1..=d * k);
    let p = crate::random::random_psd(rng, d * k, rank);
    let m = system.project_blocks(&p, k)?.symmetrized().0;
    let pt = partial_transpose_outer(&m, k, d)?;
    let shift = (-min_eigenvalue(&m)?).max(-min_eigenvalue(&pt)?).max(0.0);
    let mut out = m;
    if shift > 0.0 {
        out.axpy(C64::new(shift * (1.0 + 1e-9) + 1e-12, 0.0), &ComplexMatrix::identity(d * k));
    }
    let tr = out.trace().re;
    Ok(out.scale(1.0 / tr))
}
