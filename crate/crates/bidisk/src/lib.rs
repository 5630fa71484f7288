//! Sums-of-squares decompositions for polynomials with no zeros on the bidisk,
//! with applications to spectral factorization, distinguished varieties and
//! Pick interpolation.

pub mod bipoly;
pub mod distvar;
pub mod error;
pub mod fejer;
pub mod gen;
pub mod linalg;
pub mod measure;
pub mod opoly;
pub mod pick;
pub mod sos;
pub mod stability;
pub mod szego;
pub mod univar;

pub use bipoly::{BiPoly, DegreeBox, MatPoly1, Var, VecBiPoly};
pub use error::{Error, Result};
pub use num_complex::Complex64;
