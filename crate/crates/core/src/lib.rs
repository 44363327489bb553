//! Certifiers for positivity classes of linear maps between matrix algebras.
//!
//! The crate decides, with machine-checkable certificates, whether a linear
//! map `φ: S → M_n` on an operator system `S ⊆ M_d` is completely positive,
//! co-completely-positive or decomposable, and whether a bipartite matrix
//! lies in the PPT cone `J_k(S)` or the separable cone. Decomposability is
//! decided through the dual functional `s_φ`: `φ` is decomposable exactly
//! when `s_φ` is non-negative on `J_n(S)`, so a matrix `W ∈ J_n(S)` with
//! `s_φ(W) < 0` refutes it while a split `choi(φ) = C1 + PT(C2)` into PSD
//! parts proves it.

pub mod certify;
pub mod cones;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod matlib;
pub mod maps;
pub mod opsys;
pub mod random;

pub use error::{DecomapError, Result};
pub use exec::Execution;
pub use matlib::{ComplexMatrix, C64};
pub use opsys::{OperatorSystem, SystemElement};
