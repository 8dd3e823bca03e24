//! Structure theory and empirical hypercyclicity certification for finitely
//! generated abelian semigroups of complex matrices.
//!
//! The crate is `no_std` and only needs an allocator. Matrix norms are
//! Frobenius norms throughout.

#![no_std]

extern crate alloc;

pub mod algebra;
pub mod counterexample;
pub mod dynamics;
mod error;
mod linalg;
pub mod normal_form;
pub mod structure;
mod tolerances;

pub use error::Error;
pub use num_complex::Complex64;
pub use tolerances::Tolerances;

pub type Result<T> = core::result::Result<T, Error>;
