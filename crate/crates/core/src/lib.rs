//! Executable matrix models of locally C*-algebras, Hilbert modules over them
//! and their adjointable operators.

pub mod cstar_matrix;
pub mod error;
pub mod hilbert_module;
pub mod json;
pub mod local_algebra;
pub mod operator_algebra;
pub mod suite;

pub use cstar_matrix::{CMatrix, DEFAULT_TOL};
pub use error::{Error, Result};
pub use local_algebra::{Checked, Ideal, Index, IndexSet, LocalAlgebra, LocalElement, SupNorm, TailRule};
pub use hilbert_module::{HilbertModule, ModuleVector};
pub use operator_algebra::ModuleOperator;
