//! Numerics for entropic uncertainty relations with quantum side information.
//!
//! The crate is organised in layers: dense Hermitian linear algebra
//! ([`qmath`]), validated quantum objects ([`states`]), entropy functionals
//! ([`entropy`]), uncertainty relations and overlap bounds ([`bounds`]),
//! minimum-uncertainty state families with Petz recovery ([`mus`]),
//! gap search utilities ([`optimize`]), and a JSON interchange layer ([`io`]).
//!
//! All entropies are in bits. Every seeded routine is deterministic for a
//! fixed seed.

pub mod bounds;
pub mod entropy;
mod error;
pub mod io;
pub mod mus;
pub mod optimize;
pub mod qmath;
pub mod states;
pub mod tol;

pub use error::{Error, Result};
