//! Cyclic Jacobi eigensolver for Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `h_pq`, then applies a
//! real Jacobi rotation to the resulting real symmetric 2x2 problem. Pivots are
//! visited in row-major order `(0,1), (0,2), ..., (n-2,n-1)` every sweep, so
//! the output is a deterministic function of the input bits.

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{DecomapError, Result};

pub const MAX_SWEEPS: usize = 100;
pub const OFF_DIAGONAL_TOL: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct EigDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
    /// Frobenius norm of the anti-Hermitian part dropped before solving.
    pub symmetrization_residual: f64,
    pub sweeps: usize,
}

impl EigDecomposition {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        let v = &self.eigenvectors;
        (0..v.dim()).map(|i| v[(i, k)]).collect()
    }

    /// `V diag(f(lambda)) V*`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvectors.dim();
        let v = &self.eigenvectors;
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

pub fn hermitian_eig(h: &ComplexMatrix) -> Result<EigDecomposition> {
    let (mut a, symmetrization_residual) = h.symmetrized();
    let n = a.dim();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    let threshold = OFF_DIAGONAL_TOL * scale;

    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&a);
    while off > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(DecomapError::Convergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        off = off_diagonal_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |i, k| v[(i, order[k])]);

    Ok(EigDecomposition { eigenvalues, eigenvectors, symmetrization_residual, sweeps })
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let hpq = a[(p, q)];
    let r = hpq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Pivot negligible against both diagonal entries: rotating only adds noise.
    if r < f64::EPSILON * 1e-3 * (app.abs().min(aqq.abs())) {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let phase = hpq / r;
    let zeta = (aqq - app) / (2.0 * r);
    let t = if zeta >= 0.0 {
        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
    } else {
        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // G = [[c, s], [-s conj(u), c conj(u)]] on columns (p, q).
    let g_qp = -phase.conj() * s;
    let g_qq = phase.conj() * c;
    let n = a.dim();

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c + akq * g_qp;
        a[(k, q)] = akp * s + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c + aqk * g_qp.conj();
        a[(q, k)] = apk * s + aqk * g_qq.conj();
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * g_qp;
        v[(k, q)] = vkp * s + vkq * g_qq;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_contract(h: &ComplexMatrix, e: &EigDecomposition) {
        let n = h.dim();
        let recon = (&e.reconstruct() - h).frobenius_norm();
        assert!(recon <= 1e-10 * (1.0 + h.frobenius_norm()), "reconstruction {recon:e}");
        let vv = &e.eigenvectors.adjoint() * &e.eigenvectors;
        assert!((&vv - &ComplexMatrix::identity(n)).frobenius_norm() <= 1e-10);
        assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn diagonal_input_sorted() {
        let e = hermitian_eig(&ComplexMatrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = hermitian_eig(&x).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_pivot() {
        let mut y = ComplexMatrix::zeros(2);
        y[(0, 1)] = C64::new(0.0, -1.0);
        y[(1, 0)] = C64::new(0.0, 1.0);
        let e = hermitian_eig(&y).unwrap();
        assert_contract(&y, &e);
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_contract_over_many_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let n = 2 + trial % 11;
            let h = random_hermitian(&mut rng, n);
            let e = hermitian_eig(&h).unwrap();
            assert_contract(&h, &e);
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(&mut rng, 9);
        let a = hermitian_eig(&h).unwrap();
        let b = hermitian_eig(&h).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert_eq!(a.eigenvectors, b.eigenvectors);
    }

    #[test]
    fn zero_and_degenerate() {
        let e = hermitian_eig(&ComplexMatrix::zeros(4)).unwrap();
        assert_eq!(e.eigenvalues, vec![0.0; 4]);
        let ones = ComplexMatrix::from_fn(3, |_, _| C64::new(1.0, 0.0));
        let e = hermitian_eig(&ones).unwrap();
        assert_contract(&ones, &e);
        assert!((e.max_eigenvalue() - 3.0).abs() < 1e-14);
    }
}
