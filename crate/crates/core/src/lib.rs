//! Numerical engine for partial indices of matrix symbols with finitely many
//! jumps on the unit circle, realised through monodromy of Fuchsian systems.

pub mod error;
pub mod fuchsian;
pub mod index;
pub mod json;
pub mod linalg;
pub mod monodromy;
pub mod ode;
pub mod poly;
pub mod reducibility;
pub mod resolver;
pub mod symbol;

pub use error::{Error, ErrorKind, Result};
pub use linalg::{CMatrix, CVector, C64};
