//! Exact p-adic residues of differential forms over two-dimensional local
//! fields attached to a point of an arithmetic surface: residue maps at
//! height-one primes of `O_K[[t]]`, a reciprocity verifier, and the
//! finite-depth duality machinery (coefficient reconstruction and annihilator
//! witness search) under the adelic residue pairing.

pub mod adelic;
pub mod completion;
pub mod error;
pub mod field;
pub mod fields2d;
pub mod padic;
pub mod qpoly;
pub mod rpoly;
pub mod series;

pub use error::{Error, Result};
