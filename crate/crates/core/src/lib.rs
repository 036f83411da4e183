//! Quadratic, hermitian and split-unitary spaces over finite fields.
//!
//! The crate builds `(λ, Λ)`-quadratic spaces over `GF(q)` (with or without a
//! field involution) and over the split ring `k0 ⊕ k0`, enumerates and samples
//! their maximal isotropic subspaces, and computes the exact and limiting
//! distributions of `dim(Z ∩ W)` for a random maximal isotropic `Z`.

pub mod dist;
pub mod gf;
pub mod lift;
pub mod linalg;
pub mod maxiso;
pub mod numeric;
pub mod qseries;
pub mod quadspace;
pub mod splitu;
pub mod verify;
