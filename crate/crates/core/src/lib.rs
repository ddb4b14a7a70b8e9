//! Numerics for a driven qubit undergoing repeated collisions with thermal
//! qubit ancillas.
//!
//! The crate covers three dynamical regimes of the same collisional model:
//!
//! - the Markovian GKSL limit (`τ → 0`), with its counting-field Liouvillian,
//!   closed-form steady state and heat-current cumulants ([`markov`]);
//! - finite collision times, propagated with exact two-qubit unitaries, and an
//!   ancilla chain coupled by partial SWAPs ([`nonmarkov`]);
//! - quantum TUR ingredients ([`qtur`]) and the BLP trace-distance measure of
//!   information backflow ([`nmq`]).
//!
//! Everything is `no_std` + `alloc`. Natural units are used throughout
//! (`ħ = k_B = t′ = 1`), operators use the basis `|0⟩ = excited`,
//! `|1⟩ = ground`, and density matrices are vectorized by column stacking,
//! `|i⟩⟨j| ↦ e_j ⊗ e_i`, so that `AρB ↦ (Bᵀ ⊗ A)|ρ⟩⟩`.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod dd;
pub mod error;
pub mod fcs;
mod fmath;
pub mod linalg;
pub mod markov;
pub mod model;
pub mod nmq;
pub mod nonmarkov;
pub mod qtur;
pub mod superop;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use model::{DensityMatrix, ModelParams};
