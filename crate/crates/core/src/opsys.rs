//! Concrete operator systems `S ⊆ M_d`.
//!
//! A system is stored by a Hilbert–Schmidt orthonormal basis of Hermitian
//! matrices whose first element is `I_d / sqrt(d)`. The complex span of the
//! basis is `S`; its real span is the Hermitian part of `S`.

use std::sync::Arc;

use rand::Rng;

use crate::error::{DecomapError, Result};
use crate::matlib::{hs_inner, hs_real, is_psd, kron, ComplexMatrix, C64};
use crate::random::random_psd;

pub const DROP_TOL: f64 = 1e-10;
pub const SAMPLING_ATTEMPTS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSystem {
    ambient_dim: usize,
    basis: Vec<ComplexMatrix>,
}

/// Element of an operator system, by (possibly complex) basis coordinates.
#[derive(Clone, Debug)]
pub struct SystemElement {
    system: Arc<OperatorSystem>,
    coords: Vec<C64>,
}

pub fn make_opsys(generators: &[ComplexMatrix], d: usize) -> Result<Arc<OperatorSystem>> {
    OperatorSystem::new(generators, d).map(Arc::new)
}

/// `(a ∈ S, ‖a - P_S a‖_F)` with membership at `tol (1 + ‖a‖_F)`.
pub fn contains(system: &OperatorSystem, a: &ComplexMatrix, tol: f64) -> Result<(bool, f64)> {
    system.contains(a, tol)
}

/// `Σ kron(X_j, s_j)`: the element `Σ s_j ⊗ X_j` of `S ⊗ M_k`.
pub fn assemble(system: &Arc<OperatorSystem>, terms: &[(SystemElement, ComplexMatrix)]) -> Result<ComplexMatrix> {
    let d = system.ambient_dim();
    let k = match terms.first() {
        Some((_, x)) => x.dim(),
        None => return Err(DecomapError::dim("assemble needs at least one term")),
    };
    let mut out = ComplexMatrix::zeros(d * k);
    for (idx, (s, x)) in terms.iter().enumerate() {
        if !s.belongs_to(system) {
            return Err(DecomapError::domain(format!("term {idx} belongs to a different operator system")));
        }
        if x.dim() != k {
            return Err(DecomapError::dim(format!("term {idx} has factor of dim {}, expected {k}", x.dim())));
        }
        out += &kron(x, &s.matrix());
    }
    Ok(out)
}

impl OperatorSystem {
    /// Orthonormalizes `{I_d} ∪ {Re g, Im g}` for every generator by modified
    /// Gram–Schmidt in the real Hilbert–Schmidt product, dropping candidates
    /// whose residual falls below `DROP_TOL` relative to their norm.
    pub fn new(generators: &[ComplexMatrix], d: usize) -> Result<Self> {
        if d == 0 {
            return Err(DecomapError::dim("ambient dimension must be positive"));
        }
        for (i, g) in generators.iter().enumerate() {
            if g.dim() != d {
                return Err(DecomapError::dim(format!("generator {i} has dim {}, expected {d}", g.dim())));
            }
            if !g.is_finite() {
                return Err(DecomapError::Parse(format!("generator {i} has non-finite entries")));
            }
        }
        let mut basis = vec![ComplexMatrix::identity(d).scale(1.0 / (d as f64).sqrt())];
        for g in generators {
            let gs = g.adjoint();
            let re = (g + &gs).scale(0.5);
            let im = (g - &gs).scale_c(C64::new(0.0, -0.5));
            for cand in [re, im] {
                push_orthonormal(&mut basis, cand);
            }
        }
        Ok(OperatorSystem { ambient_dim: d, basis })
    }

    /// All of `M_d`, basis built from the matrix units in row-major order.
    pub fn full(d: usize) -> Self {
        let units: Vec<ComplexMatrix> =
            (0..d * d).map(|k| ComplexMatrix::unit(d, k / d, k % d)).collect();
        Self::new(&units, d).expect("matrix units are well formed")
    }

    /// Takes `basis` verbatim. It must be Hermitian, orthonormal to `tol`
    /// and start with `I_d / √d`.
    pub fn from_basis(basis: Vec<ComplexMatrix>, d: usize, tol: f64) -> Result<Self> {
        if d == 0 || basis.is_empty() || basis.len() > d * d || basis.iter().any(|b| b.dim() != d) {
            return Err(DecomapError::dim(format!("{} basis elements for ambient dim {d}", basis.len())));
        }
        let unit = ComplexMatrix::identity(d).scale(1.0 / (d as f64).sqrt());
        let mut deviation = (&basis[0] - &unit).max_abs();
        for (i, a) in basis.iter().enumerate() {
            if !a.is_finite() {
                return Err(DecomapError::Parse(format!("basis element {i} has non-finite entries")));
            }
            deviation = deviation.max(a.hermitian_deviation());
            for (j, b) in basis.iter().enumerate().skip(i) {
                let want = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((hs_real(a, b) - want).abs());
            }
        }
        if !(deviation <= tol) {
            return Err(DecomapError::InvalidBasis { deviation });
        }
        Ok(OperatorSystem { ambient_dim: d, basis })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn is_full(&self) -> bool {
        self.basis.len() == self.ambient_dim * self.ambient_dim
    }

    pub fn is_trivial(&self) -> bool {
        self.basis.len() == 1
    }

    fn check_dim(&self, a: &ComplexMatrix) -> Result<()> {
        if a.dim() != self.ambient_dim {
            return Err(DecomapError::dim(format!(
                "matrix of dim {} in a system of ambient dim {}",
                a.dim(),
                self.ambient_dim
            )));
        }
        Ok(())
    }

    /// Complex coordinates `Tr(b_i a)` of the orthogonal projection of `a`.
    pub fn coordinates(&self, a: &ComplexMatrix) -> Result<Vec<C64>> {
        self.check_dim(a)?;
        self.basis.iter().map(|b| hs_inner(b, a)).collect()
    }

    pub fn combine(&self, coords: &[C64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.ambient_dim);
        for (c, b) in coords.iter().zip(&self.basis) {
            out.axpy(*c, b);
        }
        out
    }

    pub fn project(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(self.combine(&self.coordinates(a)?))
    }

    pub fn contains(&self, a: &ComplexMatrix, tol: f64) -> Result<(bool, f64)> {
        let residual = (a - &self.project(a)?).frobenius_norm();
        Ok((residual <= tol * (1.0 + a.frobenius_norm()), residual))
    }

    /// Positive element of `S`: in the span and PSD in the ambient algebra.
    pub fn is_positive_element(&self, p: &ComplexMatrix, tol: f64) -> Result<bool> {
        Ok(self.contains(p, tol)?.0 && is_psd(p, tol)?.0)
    }

    /// Projects every `d x d` block of an element of `M_d ⊗ M_k` onto `S`.
    pub fn project_blocks(&self, m: &ComplexMatrix, outer: usize) -> Result<ComplexMatrix> {
        let d = self.ambient_dim;
        if m.dim() != d * outer {
            return Err(DecomapError::dim(format!("dim {} is not {d} x {outer}", m.dim())));
        }
        if self.is_full() {
            return Ok(m.clone());
        }
        let mut out = ComplexMatrix::zeros(m.dim());
        for i in 0..outer {
            for j in 0..outer {
                out.set_block(d, i, j, &self.project(&m.block(d, i, j))?);
            }
        }
        Ok(out)
    }

    /// Largest block residual of `m` against `S`, with its block index.
    pub fn block_residual(&self, m: &ComplexMatrix, outer: usize) -> Result<(f64, (usize, usize))> {
        let d = self.ambient_dim;
        if m.dim() != d * outer {
            return Err(DecomapError::dim(format!("dim {} is not {d} x {outer}", m.dim())));
        }
        let mut worst = (0.0, (0, 0));
        for i in 0..outer {
            for j in 0..outer {
                let b = m.block(d, i, j);
                let r = (&b - &self.project(&b)?).frobenius_norm() / (1.0 + b.frobenius_norm());
                if r > worst.0 {
                    worst = (r, (i, j));
                }
            }
        }
        Ok(worst)
    }

    /// A random positive element: a random PSD matrix projected onto `S`,
    /// rejected when the projection is no longer PSD.
    pub fn random_positive_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ComplexMatrix> {
        let d = self.ambient_dim;
        for _ in 0..SAMPLING_ATTEMPTS {
            let rank = rng.random_range(1..=d);
            let p = random_psd(rng, d, rank);
            if self.is_full() {
                return Ok(p);
            }
            let q = self.project(&p)?.symmetrized().0;
            if is_psd(&q, 1e-12)?.0 {
                return Ok(q);
            }
        }
        Err(DecomapError::Sampling(format!(
            "no positive element found after {SAMPLING_ATTEMPTS} projections"
        )))
    }

    pub fn unit(self: &Arc<Self>) -> SystemElement {
        let mut coords = vec![C64::new(0.0, 0.0); self.dim()];
        coords[0] = C64::new((self.ambient_dim as f64).sqrt(), 0.0);
        SystemElement { system: Arc::clone(self), coords }
    }

    pub fn element(self: &Arc<Self>, coords: Vec<C64>) -> Result<SystemElement> {
        if coords.len() != self.dim() {
            return Err(DecomapError::dim(format!("{} coordinates for a system of dim {}", coords.len(), self.dim())));
        }
        Ok(SystemElement { system: Arc::clone(self), coords })
    }

    pub fn element_real(self: &Arc<Self>, coords: &[f64]) -> Result<SystemElement> {
        self.element(coords.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    /// Coordinates of `a`, failing with the residual when `a ∉ S`.
    pub fn element_from_matrix(self: &Arc<Self>, a: &ComplexMatrix, tol: f64) -> Result<SystemElement> {
        let (inside, residual) = self.contains(a, tol)?;
        if !inside {
            return Err(DecomapError::domain(format!("matrix lies outside the system (residual {residual:.3e})")));
        }
        self.element(self.coordinates(a)?)
    }
}

fn push_orthonormal(basis: &mut Vec<ComplexMatrix>, cand: ComplexMatrix) {
    let norm0 = cand.frobenius_norm();
    if norm0 == 0.0 {
        return;
    }
    let mut v = cand;
    for _ in 0..2 {
        for b in basis.iter() {
            let c = hs_real(b, &v);
            v.axpy(C64::new(-c, 0.0), b);
        }
    }
    let norm = v.frobenius_norm();
    if norm > DROP_TOL * norm0 {
        basis.push(v.scale(1.0 / norm));
    }
}

impl SystemElement {
    pub fn system(&self) -> &Arc<OperatorSystem> {
        &self.system
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn matrix(&self) -> ComplexMatrix {
        self.system.combine(&self.coords)
    }

    /// Real coordinates, i.e. a Hermitian element.
    pub fn is_hermitian(&self) -> bool {
        self.coords.iter().all(|c| c.im == 0.0)
    }

    pub fn belongs_to(&self, system: &Arc<OperatorSystem>) -> bool {
        Arc::ptr_eq(&self.system, system) || *self.system == **system
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_matrix, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gram_is_identity(s: &OperatorSystem) -> bool {
        let b = s.basis();
        b.iter().enumerate().all(|(i, x)| {
            b.iter().enumerate().all(|(j, y)| {
                let g = hs_inner(x, y).unwrap();
                (g - C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).norm() < 1e-10
            })
        })
    }

    #[test]
    fn empty_generators_give_scalars() {
        let s = make_opsys(&[], 3).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.is_trivial());
        assert!((&s.basis()[0] - &ComplexMatrix::identity(3).scale(1.0 / 3f64.sqrt())).frobenius_norm() < 1e-15);
    }

    #[test]
    fn matrix_units_give_full_algebra() {
        for d in 1..=4 {
            let s = OperatorSystem::full(d);
            assert_eq!(s.dim(), d * d);
            assert!(s.is_full());
            assert!(gram_is_identity(&s));
            assert!(s.basis().iter().all(|b| b.is_hermitian()));
        }
    }

    #[test]
    fn single_off_diagonal_unit() {
        // Hand Gram–Schmidt: I/√2, (E12+E21)/√2, ±i(E12−E21)/√2.
        let s = make_opsys(&[ComplexMatrix::unit(2, 0, 1)], 2).unwrap();
        assert_eq!(s.dim(), 3);
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let mut sym = ComplexMatrix::zeros(2);
        sym[(0, 1)] = C64::new(r2, 0.0);
        sym[(1, 0)] = C64::new(r2, 0.0);
        let mut asym = ComplexMatrix::zeros(2);
        asym[(0, 1)] = C64::new(0.0, r2);
        asym[(1, 0)] = C64::new(0.0, -r2);
        assert!((&s.basis()[1] - &sym).frobenius_norm() < 1e-15);
        let third = &s.basis()[2];
        assert!((third - &asym).frobenius_norm() < 1e-15 || (third + &asym).frobenius_norm() < 1e-15);
        assert!(gram_is_identity(&s));
    }

    #[test]
    fn contains_examples() {
        let scalars = make_opsys(&[], 2).unwrap();
        let (inside, r) = contains(&scalars, &ComplexMatrix::identity(2), 1e-9).unwrap();
        assert!(inside && r < 1e-15);
        let (inside, r) = contains(&scalars, &ComplexMatrix::unit(2, 0, 1), 1e-9).unwrap();
        assert!(!inside);
        assert!((r - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let full = OperatorSystem::full(3);
        let a = random_matrix(&mut rng, 3);
        let (inside, r) = full.contains(&a, 1e-9).unwrap();
        assert!(inside && r <= 1e-10);
        assert!(full.contains(&ComplexMatrix::identity(2), 1e-9).is_err());
    }

    #[test]
    fn idempotent_on_own_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gens: Vec<_> = (0..3).map(|_| random_matrix(&mut rng, 4)).collect();
        let s = make_opsys(&gens, 4).unwrap();
        let again = make_opsys(s.basis(), 4).unwrap();
        assert_eq!(s.dim(), again.dim());
        for b in again.basis() {
            assert!(s.contains(b, 1e-10).unwrap().0);
        }
    }

    #[test]
    fn real_combinations_inside_random_matrix_outside() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = make_opsys(&[random_hermitian(&mut rng, 3)], 3).unwrap();
        assert_eq!(s.dim(), 2);
        for _ in 0..20 {
            let coords: Vec<f64> = (0..s.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let e = s.element_real(&coords).unwrap();
            assert!(e.matrix().is_hermitian());
            assert!(s.contains(&e.matrix(), 1e-10).unwrap().0);
        }
        let (inside, r) = s.contains(&random_matrix(&mut rng, 3), 1e-9).unwrap();
        assert!(!inside && r > 0.1);
    }

    #[test]
    fn assemble_examples() {
        let s = Arc::new(OperatorSystem::full(2));
        let one = s.unit();
        assert_eq!(assemble(&s, &[(one, ComplexMatrix::identity(3))]).unwrap(), ComplexMatrix::identity(6));

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let blocks: Vec<ComplexMatrix> = (0..4).map(|_| random_matrix(&mut rng, 2)).collect();
        let terms: Vec<_> = (0..4)
            .map(|k| {
                let e = s.element_from_matrix(&blocks[k], 1e-9).unwrap();
                (e, ComplexMatrix::unit(2, k / 2, k % 2))
            })
            .collect();
        let m = assemble(&s, &terms).unwrap();
        let expected = ComplexMatrix::from_blocks(2, 2, |i, j| blocks[i * 2 + j].clone());
        assert!((&m - &expected).frobenius_norm() < 1e-12);
    }

    #[test]
    fn assemble_is_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = make_opsys(&[random_matrix(&mut rng, 3)], 3).unwrap();
        let c1: Vec<f64> = (0..s.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c2: Vec<f64> = (0..s.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = random_matrix(&mut rng, 2);
        let y = random_matrix(&mut rng, 2);
        let e1 = s.element_real(&c1).unwrap();
        let e2 = s.element_real(&c2).unwrap();
        let sum: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| 2.0 * a - b).collect();
        let lhs = assemble(&s, &[(s.element_real(&sum).unwrap(), x.clone())]).unwrap();
        let rhs = &assemble(&s, &[(e1.clone(), x.clone())]).unwrap().scale(2.0)
            - &assemble(&s, &[(e2, x.clone())]).unwrap();
        assert!((&lhs - &rhs).frobenius_norm() < 1e-12);
        let lhs = assemble(&s, &[(e1.clone(), &x + &y)]).unwrap();
        let rhs = assemble(&s, &[(e1.clone(), x), (e1, y)]).unwrap();
        assert!((&lhs - &rhs).frobenius_norm() < 1e-12);
    }

    #[test]
    fn assemble_rejects_mixed_dims_and_foreign_elements() {
        let s = Arc::new(OperatorSystem::full(2));
        let t = make_opsys(&[], 3).unwrap();
        let err = assemble(&s, &[(s.unit(), ComplexMatrix::identity(2)), (s.unit(), ComplexMatrix::identity(3))]);
        assert!(matches!(err, Err(DecomapError::Dimension(_))));
        let err = assemble(&s, &[(t.unit(), ComplexMatrix::identity(2))]);
        assert!(matches!(err, Err(DecomapError::Domain { .. })));
    }

    #[test]
    fn generator_dimension_checked() {
        assert!(matches!(make_opsys(&[ComplexMatrix::identity(2)], 3), Err(DecomapError::Dimension(_))));
    }

    #[test]
    fn random_positive_elements_are_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = make_opsys(&[ComplexMatrix::unit(3, 0, 1)], 3).unwrap();
        for _ in 0..20 {
            let p = s.random_positive_element(&mut rng).unwrap();
            assert!(s.is_positive_element(&p, 1e-9).unwrap());
        }
    }
}
