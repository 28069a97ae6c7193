//! Quantum information geometry of the matrix exponential family near a
//! maximally entangled origin.
//!
//! The crate covers:
//!
//! - Hermitian operator algebra ([`operators`]): Kronecker products, partial
//!   traces, spectral matrix functions and the Fréchet derivative of `exp`.
//! - States and entropies ([`states`]), including the generalised Bell origin
//!   and its full-rank regularisation.
//! - The classical Shannon obstruction ([`classical`]).
//! - The exponential-family chart `ρ(θ) = exp(Σ θ_a F_a − ψ(θ) I)` with its
//!   Bogoliubov–Kubo–Mori metric ([`expfamily`]).
//! - Marginal-entropy constraint geometry ([`constraint`]).
//! - Projected entropy-ascent flows in game time and entropy time, with an
//!   optional reversible commutator sector ([`flow`]).
//! - Modular Hamiltonians and Gibbs-family diagnostics ([`modular`]).
//!
//! Every routine is generic over the real scalar ([`Real`], implemented for
//! `f32` and `f64`); the `*64` aliases below fix double precision.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod constraint;
pub mod error;
pub mod expfamily;
pub mod flow;
pub mod linalg;
pub mod modular;
pub mod operators;
pub mod sampling;
mod scalar;
pub mod states;

pub use error::{Error, Result};
pub use scalar::{exp_divided_difference, Real, C};

pub type HermitianOperator64 = operators::HermitianOperator<f64>;
pub type OperatorBasis64 = operators::OperatorBasis<f64>;
pub type DensityMatrix64 = states::DensityMatrix<f64>;
pub type NaturalParams64 = expfamily::NaturalParams<f64>;
pub type ExpFamilyPoint64<'b> = expfamily::ExpFamilyPoint<'b, f64>;
pub type ConstraintGeometry64 = constraint::ConstraintGeometry<f64>;
pub type Trajectory64 = flow::Trajectory<f64>;
pub type FlowConfig64 = flow::FlowConfig<f64>;
pub type JointDistribution64 = classical::JointDistribution<f64>;
pub type GibbsFamily64 = modular::GibbsFamily<f64>;
pub type LocalGenerator64 = flow::LocalGenerator<f64>;
