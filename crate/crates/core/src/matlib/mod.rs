//! Dense complex linear algebra: Kronecker products, partial and basis
//! transposes, Hermitian eigendecomposition and PSD projection.
//!
//! Tensor-order convention used across the crate: an elementary tensor
//! `s ⊗ X` with `s` in the ambient `M_d` and `X` in `M_k` is stored as
//! `kron(X, s)`. The `M_k` factor is the outer (block) index and `s` fills the
//! `d x d` blocks, so a block matrix `[s_ij]` is literally `Σ kron(E_ij, s_ij)`.

mod eig;
mod matrix;

pub use eig::{hermitian_eig, EigDecomposition, MAX_SWEEPS, OFF_DIAGONAL_TOL};
pub use matrix::{ComplexMatrix, C64, ONE, ZERO};

use crate::error::{DecomapError, Result};

/// Relative tolerance for treating a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum deviation `‖U*U - I‖_F` accepted by [`basis_transpose`].
pub const UNITARY_TOL: f64 = 1e-8;

/// `entry[(i*dimB + k), (j*dimB + l)] = A[i][j] * B[k][l]`
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim(), b.dim());
    let mut out = ComplexMatrix::zeros(da * db);
    for i in 0..da {
        for j in 0..da {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    out[(i * db + k, j * db + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_vec(u: &[C64], v: &[C64]) -> Vec<C64> {
    u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect()
}

fn check_split(m: &ComplexMatrix, outer: usize, inner: usize) -> Result<()> {
    if outer == 0 || inner == 0 || m.dim() != outer * inner {
        return Err(DecomapError::dim(format!(
            "matrix of dim {} cannot be split as {} x {}",
            m.dim(),
            outer,
            inner
        )));
    }
    Ok(())
}

/// Transposes the outer (block) index: block `(i, j)` of the result is block
/// `(j, i)` of `m`, with block contents unchanged.
pub fn partial_transpose_outer(m: &ComplexMatrix, outer: usize, inner: usize) -> Result<ComplexMatrix> {
    check_split(m, outer, inner)?;
    Ok(ComplexMatrix::from_fn(m.dim(), |r, c| {
        let (i, a) = (r / inner, r % inner);
        let (j, b) = (c / inner, c % inner);
        m[(j * inner + a, i * inner + b)]
    }))
}

/// Transposes the inner index inside every block. Equals the outer partial
/// transpose followed by the full transpose.
pub fn partial_transpose_inner(m: &ComplexMatrix, outer: usize, inner: usize) -> Result<ComplexMatrix> {
    check_split(m, outer, inner)?;
    Ok(ComplexMatrix::from_fn(m.dim(), |r, c| {
        let (i, a) = (r / inner, r % inner);
        let (j, b) = (c / inner, c % inner);
        m[(i * inner + b, j * inner + a)]
    }))
}

/// `‖U*U - I‖_F`
pub fn unitarity_deviation(u: &ComplexMatrix) -> f64 {
    (&(&u.adjoint() * u) - &ComplexMatrix::identity(u.dim())).frobenius_norm()
}

/// Transpose associated with the orthonormal basis `f_k = U e_k`:
/// `t_F(T) = V T^t V*` with `V = U U^t`, so that `t_F(f_k f_l*) = f_l f_k*`.
pub fn basis_transpose(t: &ComplexMatrix, u: &ComplexMatrix) -> Result<ComplexMatrix> {
    if t.dim() != u.dim() {
        return Err(DecomapError::dim(format!(
            "basis of dim {} for matrix of dim {}",
            u.dim(),
            t.dim()
        )));
    }
    let deviation = unitarity_deviation(u);
    if !(deviation <= UNITARY_TOL) {
        return Err(DecomapError::InvalidBasis { deviation });
    }
    let v = u * &u.transpose();
    Ok(&(&v * &t.transpose()) * &v.adjoint())
}

/// Frobenius-nearest PSD matrix: `V diag(max(λ, 0)) V*`.
pub fn psd_project(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(h)?.reconstruct_with(|l| l.max(0.0)))
}

/// `(λ_min ≥ -tol (1 + ‖H‖_F), λ_min)`
pub fn is_psd(h: &ComplexMatrix, tol: f64) -> Result<(bool, f64)> {
    let lmin = min_eigenvalue(h)?;
    Ok((lmin >= -tol * (1.0 + h.frobenius_norm()), lmin))
}

pub fn min_eigenvalue(h: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eig(h)?.min_eigenvalue())
}

/// Hilbert–Schmidt inner product `Tr(A* B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(DecomapError::dim(format!("hs_inner of dims {} and {}", a.dim(), b.dim())));
    }
    Ok(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x.conj() * y).sum())
}

/// Real part of the Hilbert–Schmidt product; the inner product on Hermitian matrices.
pub fn hs_real(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// `Σ_j e_j ⊗ e_j` in `C^n ⊗ C^n`.
pub fn max_entangled_vector(n: usize) -> Vec<C64> {
    let mut e = vec![ZERO; n * n];
    for j in 0..n {
        e[j * n + j] = ONE;
    }
    e
}

/// SWAP on `C^n ⊗ C^n`.
pub fn swap_matrix(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n * n, |r, c| {
        let (i, a) = (r / n, r % n);
        let (j, b) = (c / n, c % n);
        if i == b && a == j {
            ONE
        } else {
            ZERO
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_matrix, random_psd, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).frobenius_norm() <= tol
    }

    #[test]
    fn kron_identity_with_x_is_block_diagonal() {
        let k = kron(&ComplexMatrix::identity(2), &pauli_x());
        let expected = ComplexMatrix::from_blocks(2, 2, |i, j| {
            if i == j {
                pauli_x()
            } else {
                ComplexMatrix::zeros(2)
            }
        });
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_units() {
        let e11 = ComplexMatrix::unit(2, 0, 0);
        assert_eq!(kron(&e11, &e11), ComplexMatrix::unit(4, 0, 0));
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let [a, b, c, d] = std::array::from_fn(|_| random_matrix(&mut rng, 2));
        let lhs = &kron(&a, &b) * &kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn partial_transpose_of_maximally_entangled_projector_is_swap() {
        let e = max_entangled_vector(2);
        let ee = ComplexMatrix::outer(&e, &e);
        let pt = partial_transpose_outer(&ee, 2, 2).unwrap();
        assert_eq!(pt, swap_matrix(2));
        let ev = hermitian_eig(&pt).unwrap().eigenvalues;
        let expected = [-1.0, 1.0, 1.0, 1.0];
        for (l, x) in ev.iter().zip(expected) {
            assert!((l - x).abs() < 1e-14);
        }
    }

    #[test]
    fn partial_transpose_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_matrix(&mut rng, 2);
        let s = random_matrix(&mut rng, 3);
        let pt = partial_transpose_outer(&kron(&x, &s), 2, 3).unwrap();
        assert_eq!(pt, kron(&x.transpose(), &s));
        let pti = partial_transpose_inner(&kron(&x, &s), 2, 3).unwrap();
        assert_eq!(pti, kron(&x, &s.transpose()));
    }

    #[test]
    fn partial_transpose_involution_and_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, 6);
        let pt = partial_transpose_outer(&h, 2, 3).unwrap();
        assert_eq!(partial_transpose_outer(&pt, 2, 3).unwrap(), h);
        assert!(pt.is_hermitian());
        assert!((pt.trace() - h.trace()).norm() < 1e-14);
        assert!((pt.frobenius_norm() - h.frobenius_norm()).abs() < 1e-13);
    }

    #[test]
    fn partial_transpose_rejects_bad_split() {
        let m = ComplexMatrix::identity(6);
        assert!(matches!(partial_transpose_outer(&m, 4, 2), Err(DecomapError::Dimension(_))));
    }

    #[test]
    fn basis_transpose_standard() {
        let e12 = ComplexMatrix::unit(2, 0, 1);
        let t = basis_transpose(&e12, &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(t, ComplexMatrix::unit(2, 1, 0));
    }

    #[test]
    fn basis_transpose_swaps_basis_units_and_is_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_unitary(&mut rng, 3);
        let f: Vec<Vec<C64>> = (0..3).map(|k| (0..3).map(|i| u[(i, k)]).collect()).collect();
        let t = basis_transpose(&ComplexMatrix::outer(&f[0], &f[2]), &u).unwrap();
        assert!(close(&t, &ComplexMatrix::outer(&f[2], &f[0]), 1e-12));
        let x = random_matrix(&mut rng, 3);
        let back = basis_transpose(&basis_transpose(&x, &u).unwrap(), &u).unwrap();
        assert!(close(&back, &x, 1e-12));
    }

    #[test]
    fn basis_transpose_preserves_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, 4);
            let u = random_unitary(&mut rng, 4);
            let a = hermitian_eig(&h).unwrap().eigenvalues;
            let b = hermitian_eig(&basis_transpose(&h, &u).unwrap()).unwrap().eigenvalues;
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn basis_transpose_rejects_non_unitary() {
        let u = ComplexMatrix::from_diag(&[1.0, 2.0]);
        assert!(matches!(
            basis_transpose(&ComplexMatrix::identity(2), &u),
            Err(DecomapError::InvalidBasis { .. })
        ));
    }

    #[test]
    fn psd_projection_examples() {
        let p = psd_project(&ComplexMatrix::from_diag(&[2.0, -1.0])).unwrap();
        assert!(close(&p, &ComplexMatrix::from_diag(&[2.0, 0.0]), 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = random_psd(&mut rng, 5, 3);
        assert!(close(&psd_project(&q).unwrap(), &q, 1e-10));
    }

    #[test]
    fn psd_projection_is_nearest_among_sampled_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(&mut rng, 4);
        let p = psd_project(&h).unwrap();
        let best = (&h - &p).frobenius_norm();
        for _ in 0..100 {
            let q = random_psd(&mut rng, 4, 4);
            assert!(best <= (&h - &q).frobenius_norm());
        }
        assert!(close(&psd_project(&p).unwrap(), &p, 1e-10));
    }

    #[test]
    fn positive_and_negative_parts_sum_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let h = random_hermitian(&mut rng, 5);
            let pos = psd_project(&h).unwrap();
            let neg = psd_project(&-&h).unwrap();
            assert!(close(&(&pos - &neg), &h, 1e-10));
        }
    }

    #[test]
    fn is_psd_examples() {
        assert!(is_psd(&ComplexMatrix::identity(3), 1e-12).unwrap().0);
        assert!((is_psd(&ComplexMatrix::identity(3), 1e-12).unwrap().1 - 1.0).abs() < 1e-15);
        let (ok, l) = is_psd(&ComplexMatrix::from_diag(&[1.0, -0.5]), 1e-9).unwrap();
        assert!(!ok);
        assert!((l + 0.5).abs() < 1e-15);
    }

    #[test]
    fn hs_inner_examples() {
        assert_eq!(hs_inner(&ComplexMatrix::identity(3), &ComplexMatrix::identity(3)).unwrap(), C64::new(3.0, 0.0));
        let e12 = ComplexMatrix::unit(3, 0, 1);
        assert_eq!(hs_inner(&e12, &e12).unwrap(), ONE);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_matrix(&mut rng, 3);
        let b = random_matrix(&mut rng, 3);
        assert!((hs_inner(&a, &b).unwrap() - hs_inner(&b, &a).unwrap().conj()).norm() < 1e-14);
        assert!(hs_inner(&a, &ComplexMatrix::identity(2)).is_err());
    }
}
