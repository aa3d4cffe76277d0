//! Subpower membership for finite Mal'tsev algebras, with a polynomial-time
//! decision procedure for wreath products `L ⊗ U` where `|U| = p` is prime
//! and `|L|` is coprime to `p`.

pub mod affine;
pub mod algebra;
pub mod circuit;
pub mod closure;
pub mod diffclonoid;
pub mod echelon;
pub mod error;
pub mod fix;
pub mod group;
pub mod image;
pub mod io;
pub mod plane;
pub mod random;
pub mod rep;
pub mod solver;
pub mod wreath;
pub mod zoo;

pub use algebra::{verify_maltsev, Algebra, Operation};
pub use circuit::{eval_circuit, Circuit, Gate, Gates, Term};
pub use error::{Error, Result};
pub use group::AbelianGroup;

/// A domain element. Domains have at most 256 elements.
pub type Elem = u8;
