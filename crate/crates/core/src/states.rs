//! Density matrices, von Neumann entropy, and the maximally entangled origin.

use crate::error::{Error, Result};
use crate::operators::{
    hermitian_deviation, partial_trace_matrix, CMatrix, HermitianOperator, SubsystemShape,
};
use crate::scalar::{abs, creal, Real};

/// Eigenvalues in `[-1e-10, 0)` are treated as round-off and clipped.
pub const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-10;

/// Hermitian, positive semidefinite, unit-trace operator on a composite system.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    op: HermitianOperator<T>,
    shape: SubsystemShape,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: CMatrix<T>, shape: SubsystemShape) -> Result<Self> {
        if m.nrows() != shape.total() || m.ncols() != shape.total() {
            return Err(Error::DimensionMismatch {
                expected: shape.total(),
                got: m.nrows(),
            });
        }
        let dev = hermitian_deviation(&m);
        if dev > T::tol(1e-12) {
            return Err(Error::NotHermitian(dev.as_f64()));
        }
        let op = HermitianOperator::symmetrized(m);
        let tr = op.trace();
        if abs(tr - T::one()) > T::tol(1e-12) {
            return Err(Error::InvalidState(format!("trace {:e}", tr.as_f64())));
        }
        let lo = op.eigh().min_value();
        if lo < -T::tol(NEGATIVE_EIGENVALUE_TOL) {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:e}",
                lo.as_f64()
            )));
        }
        Ok(Self { op, shape })
    }

    pub(crate) fn from_operator_unchecked(op: HermitianOperator<T>, shape: SubsystemShape) -> Self {
        Self { op, shape }
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(shape: &SubsystemShape) -> Self {
        let d = shape.total();
        Self {
            op: HermitianOperator::identity(d).scale(T::one() / T::lit(d as f64)),
            shape: shape.clone(),
        }
    }

    /// Pure state `|ψ><ψ|` for a (not necessarily normalised) vector.
    pub fn pure(amplitudes: &[crate::scalar::C<T>], shape: &SubsystemShape) -> Result<Self> {
        if amplitudes.len() != shape.total() {
            return Err(Error::DimensionMismatch {
                expected: shape.total(),
                got: amplitudes.len(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        let n2 = v.norm_squared();
        if n2 == T::zero() {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let m = &v * v.adjoint() * creal(T::one() / n2);
        Ok(Self {
            op: HermitianOperator::symmetrized(m),
            shape: shape.clone(),
        })
    }

    /// Tensor product of states on the concatenated shape.
    pub fn product(&self, other: &Self) -> Result<Self> {
        let mut dims = self.shape.dims().to_vec();
        dims.extend_from_slice(other.shape.dims());
        let shape = SubsystemShape::new(dims)?;
        Ok(Self {
            op: crate::operators::tensor_product(&self.op, &other.op),
            shape,
        })
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn operator(&self) -> &HermitianOperator<T> {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Reduced state of subsystem `keep`.
    pub fn partial_trace(&self, keep: usize) -> Result<Self> {
        let m = partial_trace_matrix(self.op.matrix(), &self.shape, keep)?;
        let shape = SubsystemShape::new(vec![self.shape.dim(keep)])?;
        Ok(Self {
            op: HermitianOperator::symmetrized(m),
            shape,
        })
    }

    /// All single-subsystem marginals.
    pub fn marginals(&self) -> Vec<Self> {
        (0..self.shape.n_subsystems())
            .map(|i| self.partial_trace(i).expect("index in range"))
            .collect()
    }

    /// Eigenvalues with round-off negatives clipped to zero.
    pub fn spectrum(&self) -> Result<Vec<T>> {
        let eig = self.op.eigh();
        eig.values
            .iter()
            .map(|&q| {
                if q >= T::zero() {
                    Ok(q)
                } else if q >= -T::tol(NEGATIVE_EIGENVALUE_TOL) {
                    Ok(T::zero())
                } else {
                    Err(Error::InvalidState(format!(
                        "negative eigenvalue {:e}",
                        q.as_f64()
                    )))
                }
            })
            .collect()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> T {
        self.op.inner(&self.op)
    }

    pub fn min_eigenvalue(&self) -> T {
        self.op.eigh().min_value()
    }

    /// Relabels the shape (same total dimension).
    pub fn with_shape(self, shape: SubsystemShape) -> Result<Self> {
        if shape.total() != self.shape.total() {
            return Err(Error::DimensionMismatch {
                expected: self.shape.total(),
                got: shape.total(),
            });
        }
        Ok(Self { op: self.op, shape })
    }
}

/// Shannon entropy of a probability vector in nats, `0 log 0 = 0`.
pub fn entropy_of_spectrum<T: Real>(probs: &[T]) -> T {
    probs
        .iter()
        .filter(|&&p| p > T::zero())
        .fold(T::zero(), |acc, &p| acc - p * p.ln())
}

/// `-tr(ρ log ρ)` in nats.
pub fn von_neumann_entropy<T: Real>(rho: &DensityMatrix<T>) -> T {
    let spec = rho
        .spectrum()
        .expect("DensityMatrix eigenvalues within the clipping tolerance");
    entropy_of_spectrum(&spec)
}

/// `Σ_i h(ρ_i) - H(ρ)`.
pub fn multi_information<T: Real>(rho: &DensityMatrix<T>) -> T {
    marginal_entropies(rho)
        .into_iter()
        .fold(T::zero(), |a, h| a + h)
        - von_neumann_entropy(rho)
}

/// `h(ρ_i)` for every subsystem.
pub fn marginal_entropies<T: Real>(rho: &DensityMatrix<T>) -> Vec<T> {
    rho.marginals().iter().map(von_neumann_entropy).collect()
}

/// Amplitudes of `|Φ_q> = q^{-1/2} Σ_j |jj>`.
pub fn bell_amplitudes<T: Real>(q: usize) -> Vec<crate::scalar::C<T>> {
    let amp = T::one() / T::lit(q as f64).sqrt();
    let mut v = vec![creal(T::zero()); q * q];
    for j in 0..q {
        v[j * q + j] = creal(amp);
    }
    v
}

fn require_equal_bipartite(shape: &SubsystemShape) -> Result<usize> {
    match shape.dims() {
        [a, b] if a == b => Ok(*a),
        dims => Err(Error::UnsupportedShape(format!(
            "origin needs two equal local dimensions, got {dims:?}"
        ))),
    }
}

/// Projector onto the generalised Bell state for a `q ⊗ q` system: globally
/// pure with maximally mixed marginals.
pub fn lme_origin<T: Real>(shape: &SubsystemShape) -> Result<DensityMatrix<T>> {
    let q = require_equal_bipartite(shape)?;
    DensityMatrix::pure(&bell_amplitudes(q), shape)
}

/// `(1 - eps) ρ_origin + eps I/d`; full rank, marginals still `I/q`.
pub fn regularized_origin<T: Real>(shape: &SubsystemShape, eps: T) -> Result<DensityMatrix<T>> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::OutOfRange(format!("eps = {} not in (0,1)", eps)));
    }
    let origin = lme_origin::<T>(shape)?;
    let mixed = DensityMatrix::<T>::maximally_mixed(shape);
    let op = origin.op.scale(T::one() - eps).add(&mixed.op.scale(eps));
    Ok(DensityMatrix {
        op,
        shape: shape.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_density_matrix, rng};

    fn two_qutrits() -> SubsystemShape {
        SubsystemShape::bipartite(3, 3).unwrap()
    }

    #[test]
    fn origin_entropies() {
        let rho = lme_origin::<f64>(&two_qutrits()).unwrap();
        assert!(von_neumann_entropy(&rho).abs() < 1e-12);
        for h in marginal_entropies(&rho) {
            assert!((h - 3f64.ln()).abs() < 1e-12);
        }
        assert!((multi_information(&rho) - 2.0 * 3f64.ln()).abs() < 1e-12);
        let cond = von_neumann_entropy(&rho) - marginal_entropies(&rho)[1];
        assert!((cond + 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_entropies() {
        let i3 = DensityMatrix::<f64>::maximally_mixed(&SubsystemShape::new(vec![3]).unwrap());
        assert!((von_neumann_entropy(&i3) - 3f64.ln()).abs() < 1e-14);
        let i9 = DensityMatrix::<f64>::maximally_mixed(&two_qutrits());
        assert!((von_neumann_entropy(&i9) - 9f64.ln()).abs() < 1e-14);
        assert!(multi_information(&i9).abs() < 1e-14);
    }

    #[test]
    fn qubit_bell_marginals() {
        let rho = lme_origin::<f64>(&SubsystemShape::bipartite(2, 2).unwrap()).unwrap();
        for m in rho.marginals() {
            let want = CMatrix::<f64>::identity(2, 2) * creal(0.5);
            assert!((m.matrix() - want).norm() < 1e-15);
        }
    }

    #[test]
    fn qutrit_bell_amplitudes() {
        let v = bell_amplitudes::<f64>(3);
        let a = 1.0 / 3f64.sqrt();
        for (i, z) in v.iter().enumerate() {
            let want = if i % 4 == 0 { a } else { 0.0 };
            assert_eq!(z.re, want);
        }
    }

    #[test]
    fn origin_rejects_unequal_dims() {
        let s = SubsystemShape::bipartite(2, 3).unwrap();
        assert!(matches!(
            lme_origin::<f64>(&s),
            Err(Error::UnsupportedShape(_))
        ));
        let s = SubsystemShape::new(vec![2, 2, 2]).unwrap();
        assert!(matches!(
            lme_origin::<f64>(&s),
            Err(Error::UnsupportedShape(_))
        ));
    }

    #[test]
    fn regularisation_spectrum_and_marginals() {
        let eps = 0.01;
        let rho = regularized_origin::<f64>(&two_qutrits(), eps).unwrap();
        let mut spec = rho.spectrum().unwrap();
        spec.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &q in &spec[..8] {
            assert!((q - eps / 9.0).abs() < 1e-15);
        }
        assert!((spec[8] - (1.0 - eps + eps / 9.0)).abs() < 1e-14);
        let expected = -(8.0 * (eps / 9.0) * (eps / 9.0).ln())
            - (1.0 - 8.0 * eps / 9.0) * (1.0 - 8.0 * eps / 9.0).ln();
        assert!((von_neumann_entropy(&rho) - expected).abs() < 1e-13);
        for m in rho.marginals() {
            let want = CMatrix::<f64>::identity(3, 3) * creal(1.0 / 3.0);
            assert!((m.matrix() - want).norm() < 1e-15);
        }
    }

    #[test]
    fn regularisation_bounds() {
        let s = two_qutrits();
        assert!(regularized_origin::<f64>(&s, 0.0).is_err());
        assert!(regularized_origin::<f64>(&s, 1.0).is_err());
        let near_one = regularized_origin::<f64>(&s, 1.0 - 1e-12).unwrap();
        assert!((von_neumann_entropy(&near_one) - 9f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn purity_decreases_with_regularisation() {
        let s = two_qutrits();
        let mut last = f64::INFINITY;
        for k in 1..100 {
            let eps = k as f64 / 100.0;
            let p = regularized_origin::<f64>(&s, eps).unwrap().purity();
            // closed form (1-eps+eps/9)^2 + 8 (eps/9)^2
            let want = (1.0 - eps + eps / 9.0).powi(2) + 8.0 * (eps / 9.0).powi(2);
            assert!((p - want).abs() < 1e-13);
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn product_state_has_no_multi_information() {
        let mut r = rng(7);
        let a = random_density_matrix::<f64, _>(&SubsystemShape::new(vec![2]).unwrap(), &mut r);
        let b = random_density_matrix::<f64, _>(&SubsystemShape::new(vec![3]).unwrap(), &mut r);
        let ab = a.product(&b).unwrap();
        assert!(multi_information(&ab).abs() < 1e-12);
        let back = ab.partial_trace(0).unwrap();
        assert!((back.matrix() - a.matrix()).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_matches_block_sum_oracle() {
        let shape = SubsystemShape::bipartite(2, 2).unwrap();
        let rho = random_density_matrix::<f64, _>(&shape, &mut rng(3));
        let m = rho.matrix();
        // keep 0: sum the diagonal 2x2 blocks' traces; keep 1: sum the diagonal blocks
        let mut keep0 = CMatrix::<f64>::zeros(2, 2);
        let mut keep1 = CMatrix::<f64>::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                keep0[(a, b)] = m[(2 * a, 2 * b)] + m[(2 * a + 1, 2 * b + 1)];
                keep1[(a, b)] = m[(a, b)] + m[(2 + a, 2 + b)];
            }
        }
        assert!((rho.partial_trace(0).unwrap().matrix() - keep0).norm() < 1e-14);
        assert!((rho.partial_trace(1).unwrap().matrix() - keep1).norm() < 1e-14);
    }

    #[test]
    fn rejects_invalid_states() {
        let s = SubsystemShape::new(vec![2]).unwrap();
        let m = CMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(vec![
            creal(1.2),
            creal(-0.2),
        ]));
        assert!(matches!(
            DensityMatrix::new(m, s.clone()),
            Err(Error::InvalidState(_))
        ));
        let m = CMatrix::<f64>::identity(2, 2);
        assert!(matches!(
            DensityMatrix::new(m, s),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn entropy_bounds_on_random_states() {
        let shape = SubsystemShape::bipartite(2, 3).unwrap();
        let mut r = rng(19);
        for _ in 0..200 {
            let rho = random_density_matrix::<f64, _>(&shape, &mut r);
            let h = von_neumann_entropy(&rho);
            assert!(h >= 0.0 && h <= 6f64.ln() + 1e-10);
            for (i, hi) in marginal_entropies(&rho).into_iter().enumerate() {
                assert!(hi <= (shape.dim(i) as f64).ln() + 1e-10);
            }
            assert!(multi_information(&rho) >= -1e-10);
        }
    }
}
