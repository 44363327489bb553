//! Seeded random generators for matrices, vectors and states.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::matlib::{ComplexMatrix, C64};

/// Independent deterministic stream `stream` of the generator seeded by `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| complex_normal(rng)).collect()
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    let mut v = random_vector(rng, n);
    normalize(&mut v);
    v
}

pub fn normalize(v: &mut [C64]) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
    norm
}

/// Ginibre matrix with i.i.d. standard complex normal entries.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |_, _| complex_normal(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    random_matrix(rng, n).symmetrized().0
}

/// Haar-ish unitary: Gram–Schmidt on the columns of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v: Vec<C64> = (0..n).map(|i| g[(i, k)]).collect();
        for _ in 0..2 {
            for c in &cols {
                let proj: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= proj * ci;
                }
            }
        }
        normalize(&mut v);
        cols.push(v);
    }
    ComplexMatrix::from_fn(n, |i, k| cols[k][i])
}

/// `B B*` with `B` an `n x rank` Ginibre matrix, scaled to unit trace.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n);
    for _ in 0..rank.max(1) {
        let v = random_vector(rng, n);
        m += &ComplexMatrix::outer(&v, &v);
    }
    let tr = m.trace().re;
    if tr > 0.0 {
        m.scale(1.0 / tr)
    } else {
        m
    }
}

/// Random density matrix of random rank in `1..=n`.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let rank = rng.random_range(1..=n);
    random_psd(rng, n, rank)
}
