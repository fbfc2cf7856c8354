//! Conditional symmetry of linear forms of independent random vectors in ℝⁿ.
//!
//! For independent ξ₁ ~ μ₁ and ξ₂ ~ μ₂ and an invertible operator α, the
//! conditional distribution of L₂ = ξ₁ + αξ₂ given L₁ = ξ₁ + ξ₂ is symmetric
//! exactly when the characteristic functions satisfy
//!
//! ```text
//! μ̂₁(u+v) μ̂₂(u+α̃v) = μ̂₁(u−v) μ̂₂(u−α̃v)   for all u, v,
//! ```
//!
//! with α̃ the adjoint. Solutions are shifts of Gaussians supported in an
//! α-invariant subspace G convolved with a distribution supported in
//! K = Ker(I+α). This crate decomposes α, classifies the admissible families,
//! constructs witness pairs and verifies or falsifies the symmetry both from
//! exact characteristic functions and by Monte-Carlo.



#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod cli;
pub mod distribution;
pub mod operator;
pub mod par;


pub mod verify;
pub mod witness;
