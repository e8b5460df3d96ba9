//! C0 interior penalty (Q2) discretization of the clamped-plate biharmonic
//! problem on the unit square, with a nonoverlapping domain decomposition
//! solver: a BDDC preconditioner for the interface Schur complement embedded
//! in a three-space additive preconditioner for the full operator.
//!
//! The crate is organized bottom-up:
//! - [`grid`]: uniform square mesh, subdomain decomposition, classification.
//! - [`space`]: the modified Q2 basis exposing one-sided normal-derivative
//!   dofs on the skeleton and boundary, and its change of basis.
//! - [`assemble`]: the penalized bilinear form, loads, energy seminorm.
//! - [`split`]: the direct splitting into derivative-continuous and
//!   derivative-jump subspaces, subdomain-interior solves, interface Schur
//!   complement.
//! - [`bddc`]: broken interface space, coarse space, local Schur solvers,
//!   the BDDC operator and the full three-space preconditioner.
//! - [`solve`]: SPD factorization, preconditioned conjugate gradients,
//!   dense and Lanczos eigenvalue routines.
//! - [`bench`] / [`report`]: benchmark table drivers and emitters backing
//!   the `c0ip-bench` binary.
//!
//! All numerical kernels are generic over the scalar type through [`Scalar`];
//! concrete f64 aliases for the main entry points live at the crate root.

pub mod assemble;
pub mod bddc;
pub mod bench;
pub mod error;
pub mod grid;
pub mod mms;
pub mod report;
pub mod solve;
pub mod space;
pub mod sparse;
pub mod split;

pub use error::Error;

/// Scalar type the numerical kernels are generic over.
///
/// `RealField` brings the dense linear algebra (Cholesky, symmetric eigen),
/// `FromPrimitive` the construction of constants. Implemented by f32 and f64.
pub trait Scalar:
    nalgebra::RealField + num_traits::FromPrimitive + Copy + std::iter::Sum<Self>
{
    /// Shorthand for lossy construction of constants from f64.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in the scalar type")
    }
}

impl<T> Scalar for T where
    T: nalgebra::RealField + num_traits::FromPrimitive + Copy + std::iter::Sum<T>
{
}

pub type CsrMatrixF64 = sparse::CsrMatrix<f64>;
pub type ChangeOfBasisF64 = space::ChangeOfBasis<f64>;
pub type SpaceF64 = space::Space<f64>;
pub type SplittingF64 = split::Splitting<f64>;
pub type SchurSystemF64 = split::SchurSystem<f64>;
pub type BddcF64 = bddc::BddcPreconditioner<f64>;
pub type FullPreconditionerF64 = bddc::FullPreconditioner<f64>;
pub type SolveReportF64 = solve::SolveReport<f64>;
