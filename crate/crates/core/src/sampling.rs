//! Seeded random sampling of test inputs: Hermitian operators, full-rank
//! states, and joint probability tables.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::classical::JointDistribution;
use crate::operators::{CMatrix, HermitianOperator, SubsystemShape};
use crate::scalar::{cplx, Real};
use crate::states::DensityMatrix;

/// Deterministic generator used throughout the crate.
pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let x: f64 = StandardNormal.sample(rng);
    T::lit(x)
}

/// Complex Gaussian matrix with iid standard-normal real and imaginary parts.
pub fn ginibre<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix<T> {
    CMatrix::from_fn(d, d, |_, _| cplx(normal(rng), normal(rng)))
}

/// Random Hermitian matrix `(X + X†)/2` with Gaussian `X`.
pub fn random_hermitian<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> HermitianOperator<T> {
    HermitianOperator::symmetrized(ginibre(d, rng))
}

/// Random full-rank state `W W† / tr(W W†)` from the Hilbert–Schmidt ensemble.
pub fn random_density_matrix<T: Real, R: Rng + ?Sized>(
    shape: &SubsystemShape,
    rng: &mut R,
) -> DensityMatrix<T> {
    let d = shape.total();
    let w = ginibre::<T, _>(d, rng);
    let m = &w * w.adjoint();
    let tr = m.trace().re;
    let op = HermitianOperator::symmetrized(m).scale(T::one() / tr);
    DensityMatrix::from_operator_unchecked(op, shape.clone())
}

/// Random real vector with iid `N(0, scale²)` entries.
pub fn random_vector<T: Real, R: Rng + ?Sized>(n: usize, scale: T, rng: &mut R) -> DVector<T> {
    DVector::from_fn(n, |_, _| normal::<T, _>(rng) * scale)
}

/// Joint table drawn uniformly from the probability simplex (Dirichlet(1,…,1)).
pub fn random_joint_table<T: Real, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> JointDistribution<T> {
    let weights: Vec<f64> = (0..rows * cols).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    let table = weights
        .chunks(cols)
        .map(|r| r.iter().map(|w| T::lit(w / total)).collect())
        .collect();
    JointDistribution::new(table).expect("normalised Dirichlet sample")
}
