//! Numerical building blocks shared by the solvers.

pub mod jet;
pub mod linalg;
pub mod poly;
pub mod quad;

pub use jet::Jet;
pub use poly::Poly;
