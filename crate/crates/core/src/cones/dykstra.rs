//! Dykstra's alternating projections over closed convex subsets of a product
//! of real Hilbert spaces of Hermitian matrices.

use std::sync::Arc;

use crate::error::Result;
use crate::matlib::{hs_real, kron, partial_transpose_outer, psd_project, ComplexMatrix, C64};
use crate::opsys::OperatorSystem;

/// Number of cycles over which the per-cycle displacement must be stable
/// before the run is declared infeasible.
pub const STABLE_CYCLES: usize = 50;
pub const STABLE_RELATIVE_CHANGE: f64 = 1e-6;
const RESIDUAL_EVERY: usize = 5;

/// A point of `H_1 × ... × H_r`, each `H_i` Hermitian matrices of one size.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(pub Vec<ComplexMatrix>);

impl Point {
    pub fn single(m: ComplexMatrix) -> Self {
        Point(vec![m])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|m| m.frobenius_norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| hs_real(a, b)).sum()
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn axpy(&mut self, s: f64, other: &Point) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.axpy(C64::new(s, 0.0), b);
        }
    }

    pub fn zeros_like(&self) -> Point {
        Point(self.0.iter().map(|m| ComplexMatrix::zeros(m.dim())).collect())
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.sub(other).norm()
    }
}

/// Affine sets with closed-form nearest-point maps.
#[derive(Clone, Debug)]
pub enum AffineSet {
    /// `{(C1, C2) : C1 + PT(C2) = target}` on slots 0 and 1. `PT` is an
    /// orthogonal involution, so the projection subtracts `R/2` from `C1` and
    /// `PT(R)/2` from `C2` where `R = C1 + PT(C2) - target`.
    DecompositionSplit { target: ComplexMatrix, outer: usize, inner: usize },
    /// Matrices of `M_d ⊗ M_k` whose outer blocks lie in `system`.
    BlockSubspace { slot: usize, system: Arc<OperatorSystem>, outer: usize },
    /// Choi matrices `C` (outer `d`, inner `n`) of maps `M_d → M_n` with
    /// `ψ_C(b_i) = images[i]` on the orthonormal basis of `system`. The
    /// constraint operator `L` satisfies `L L* = id`, so the projection is
    /// `C - L*(L C - images)`.
    ExtensionMatch { slot: usize, system: Arc<OperatorSystem>, images: Vec<ComplexMatrix> },
}

#[derive(Clone, Debug)]
pub enum ProjectableSet {
    Psd { slot: usize },
    /// `{X : PT_outer(X) ⪰ 0}`.
    PartialTransposePsd { slot: usize, outer: usize, inner: usize },
    Affine(AffineSet),
    /// `{x : <g, x> ≤ bound}`
    Halfspace { functional: Point, bound: f64 },
    /// `{x : <g, x> = value}`
    Hyperplane { functional: Point, value: f64 },
}

impl ProjectableSet {
    pub fn project(&self, x: &Point) -> Result<Point> {
        let mut out = x.clone();
        match self {
            ProjectableSet::Psd { slot } => {
                out.0[*slot] = psd_project(&x.0[*slot])?;
            }
            ProjectableSet::PartialTransposePsd { slot, outer, inner } => {
                let pt = partial_transpose_outer(&x.0[*slot], *outer, *inner)?;
                out.0[*slot] = partial_transpose_outer(&psd_project(&pt)?, *outer, *inner)?;
            }
            ProjectableSet::Affine(a) => a.project_into(&mut out)?,
            ProjectableSet::Halfspace { functional, bound } => {
                let excess = functional.dot(x) - bound;
                if excess > 0.0 {
                    out.axpy(-excess / functional.dot(functional), functional);
                }
            }
            ProjectableSet::Hyperplane { functional, value } => {
                let excess = functional.dot(x) - value;
                out.axpy(-excess / functional.dot(functional), functional);
            }
        }
        Ok(out)
    }

    pub fn distance(&self, x: &Point) -> Result<f64> {
        match self {
            ProjectableSet::Halfspace { functional, bound } => {
                Ok((functional.dot(x) - bound).max(0.0) / functional.norm())
            }
            ProjectableSet::Hyperplane { functional, value } => {
                Ok((functional.dot(x) - value).abs() / functional.norm())
            }
            _ => Ok(x.distance(&self.project(x)?)),
        }
    }
}

impl AffineSet {
    fn project_into(&self, x: &mut Point) -> Result<()> {
        match self {
            AffineSet::DecompositionSplit { target, outer, inner } => {
                let pt2 = partial_transpose_outer(&x.0[1], *outer, *inner)?;
                let r = &(&x.0[0] + &pt2) - target;
                let half = r.scale(0.5);
                x.0[0] -= &half;
                x.0[1] -= &partial_transpose_outer(&half, *outer, *inner)?;
            }
            AffineSet::BlockSubspace { slot, system, outer } => {
                x.0[*slot] = system.project_blocks(&x.0[*slot], *outer)?;
            }
            AffineSet::ExtensionMatch { slot, system, images } => {
                let c = &x.0[*slot];
                let n = images.first().map(|m| m.dim()).unwrap_or(0);
                let d = system.ambient_dim();
                let mut correction = ComplexMatrix::zeros(c.dim());
                for (b, target) in system.basis().iter().zip(images) {
                    let mut lc = ComplexMatrix::zeros(n);
                    for i in 0..d {
                        for j in 0..d {
                            if b[(i, j)] != C64::new(0.0, 0.0) {
                                lc.axpy(b[(i, j)], &c.block(n, i, j));
                            }
                        }
                    }
                    let diff = &lc - target;
                    correction += &kron(&b.conj(), &diff);
                }
                x.0[*slot] -= &correction;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub enum DykstraOutcome {
    Feasible { point: Point, residual: f64, cycles: usize },
    /// The per-cycle displacement stabilized while the residual stayed above
    /// `10 tol`; `gap` is that stabilized residual.
    Infeasible { gap: f64, point: Point, cycles: usize },
    Budget { point: Point, residual: f64, cycles: usize },
}

impl DykstraOutcome {
    pub fn point(&self) -> &Point {
        match self {
            DykstraOutcome::Feasible { point, .. }
            | DykstraOutcome::Infeasible { point, .. }
            | DykstraOutcome::Budget { point, .. } => point,
        }
    }

    pub fn residual(&self) -> f64 {
        match self {
            DykstraOutcome::Feasible { residual, .. } | DykstraOutcome::Budget { residual, .. } => *residual,
            DykstraOutcome::Infeasible { gap, .. } => *gap,
        }
    }

    pub fn cycles(&self) -> usize {
        match self {
            DykstraOutcome::Feasible { cycles, .. }
            | DykstraOutcome::Infeasible { cycles, .. }
            | DykstraOutcome::Budget { cycles, .. } => *cycles,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, DykstraOutcome::Feasible { .. })
    }
}

fn max_distance(sets: &[ProjectableSet], x: &Point) -> Result<f64> {
    // The last projection of a cycle lands exactly in the last set.
    let mut worst: f64 = 0.0;
    for set in &sets[..sets.len() - 1] {
        worst = worst.max(set.distance(x)?);
    }
    Ok(worst)
}

/// Dykstra's algorithm with one correction term per set.
///
/// Feasible once the largest distance to any set is at most
/// `tol (1 + ‖x‖)`. `max_iter` counts full cycles through all sets.
pub fn dykstra(sets: &[ProjectableSet], start: Point, tol: f64, max_iter: usize) -> Result<DykstraOutcome> {
    assert!(!sets.is_empty(), "dykstra needs at least one set");
    let mut x = start;
    let mut increments: Vec<Point> = sets.iter().map(|_| x.zeros_like()).collect();
    let mut displacements: Vec<f64> = Vec::new();
    let mut residual = max_distance(sets, &x)?;
    if sets.len() == 1 {
        let point = sets[0].project(&x)?;
        return Ok(DykstraOutcome::Feasible { point, residual: 0.0, cycles: 1 });
    }

    for cycle in 1..=max_iter {
        let before = x.clone();
        for (set, inc) in sets.iter().zip(increments.iter_mut()) {
            let y = x.add(inc);
            let projected = set.project(&y)?;
            *inc = y.sub(&projected);
            x = projected;
        }
        displacements.push(x.distance(&before));

        if cycle % RESIDUAL_EVERY == 0 || cycle == max_iter {
            residual = max_distance(sets, &x)?;
            let scale = 1.0 + x.norm();
            if residual <= tol * scale {
                return Ok(DykstraOutcome::Feasible { point: x, residual, cycles: cycle });
            }
            if displacements.len() > STABLE_CYCLES && residual > 10.0 * tol * scale {
                let now = displacements[displacements.len() - 1];
                let then = displacements[displacements.len() - 1 - STABLE_CYCLES];
                if (now - then).abs() <= STABLE_RELATIVE_CHANGE * now.max(then) {
                    return Ok(DykstraOutcome::Infeasible { gap: residual, point: x, cycles: cycle });
                }
            }
        }
    }
    Ok(DykstraOutcome::Budget { point: x, residual, cycles: max_iter })
}
