//! The matrix exponential family `ρ(θ) = exp(K(θ) − ψ(θ) I)` with
//! `K(θ) = Σ_a θ_a F_a` over an orthonormal traceless basis.
//!
//! `K` here is the family generator. The modular Hamiltonian of the same
//! state is `−log ρ = −K + ψ I`; see [`crate::modular`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::{
    exp_kernel, hs_inner, CMatrix, HermitianEigen, HermitianOperator, OperatorBasis,
};
use crate::scalar::{creal, Real};
use crate::states::DensityMatrix;

/// Smallest eigenvalue accepted when inverting a state to natural parameters.
pub const FULL_RANK_FLOOR: f64 = 1e-12;

/// Natural parameters `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalParams<T: Real>(pub DVector<T>);

impl<T: Real> NaturalParams<T> {
    pub fn zeros(m: usize) -> Self {
        Self(DVector::zeros(m))
    }

    pub fn as_vector(&self) -> &DVector<T> {
        &self.0
    }

    pub fn norm(&self) -> T {
        self.0.norm()
    }

    fn validate(&self, basis: &OperatorBasis<T>) -> Result<()> {
        if self.0.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: self.0.len(),
            });
        }
        if self.0.iter().any(|x| !x.is_finite()) {
            return Err(Error::OutOfRange("non-finite natural parameter".into()));
        }
        Ok(())
    }
}

impl<T: Real> From<DVector<T>> for NaturalParams<T> {
    fn from(v: DVector<T>) -> Self {
        Self(v)
    }
}

/// `log Σ_j e^{x_j}` with the maximum subtracted first.
fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let top = xs
        .iter()
        .copied()
        .fold(T::lit(f64::NEG_INFINITY), |a, b| if b > a { b } else { a });
    let s = xs.iter().fold(T::zero(), |acc, &x| acc + (x - top).exp());
    top + s.ln()
}

/// `ψ(θ) = log tr exp(Σ θ_a F_a)`.
pub fn log_partition<T: Real>(theta: &NaturalParams<T>, basis: &OperatorBasis<T>) -> Result<T> {
    theta.validate(basis)?;
    let eig = basis.expand(&theta.0).eigh();
    Ok(log_sum_exp(eig.values.as_slice()))
}

/// One point of the family with every derived quantity evaluated eagerly.
#[derive(Debug, Clone)]
pub struct ExpFamilyPoint<'b, T: Real> {
    basis: &'b OperatorBasis<T>,
    theta: NaturalParams<T>,
    generator: HermitianOperator<T>,
    psi: T,
    eig: HermitianEigen<T>,
    log_probs: Vec<T>,
    rho: DensityMatrix<T>,
    mu: DVector<T>,
    metric: DMatrix<T>,
    /// `U†(F_a − μ_a I)U` for every basis element.
    centered: Vec<CMatrix<T>>,
    /// Divided differences of `exp` at the log-eigenvalues of `ρ`; this is
    /// also the BKM kernel `(p − q)/(log p − log q)`.
    kernel: CMatrix<T>,
}

impl<'b, T: Real> ExpFamilyPoint<'b, T> {
    pub fn new(theta: NaturalParams<T>, basis: &'b OperatorBasis<T>) -> Result<Self> {
        theta.validate(basis)?;
        let generator = basis.expand(&theta.0);
        let eig = generator.eigh();
        let psi = log_sum_exp(eig.values.as_slice());
        let log_probs: Vec<T> = eig.values.iter().map(|&k| k - psi).collect();
        let probs: Vec<T> = log_probs.iter().map(|&l| l.exp()).collect();
        let rho_m = eig.reconstruct(&probs);
        let rho = DensityMatrix::from_operator_unchecked(
            HermitianOperator::symmetrized(rho_m),
            basis.shape().clone(),
        );

        let d = generator.dim();
        let m = basis.len();
        let mut centered = Vec::with_capacity(m);
        let mut mu = DVector::zeros(m);
        for (a, f) in basis.elements().iter().enumerate() {
            let mut ft = eig.to_eigenbasis(f.matrix());
            let mean = (0..d).fold(T::zero(), |acc, j| acc + probs[j] * ft[(j, j)].re);
            mu[a] = mean;
            for j in 0..d {
                ft[(j, j)] -= creal(mean);
            }
            centered.push(ft);
        }
        let kernel = exp_kernel(&log_probs);

        // G = Y Yᵀ with Y_a = sqrt(k) ∘ F̃_a flattened to reals.
        let mut y = DMatrix::zeros(m, 2 * d * d);
        for (a, ft) in centered.iter().enumerate() {
            for j in 0..d {
                for k in 0..d {
                    let w = kernel[(j, k)].re.sqrt();
                    let idx = 2 * (j * d + k);
                    y[(a, idx)] = w * ft[(j, k)].re;
                    y[(a, idx + 1)] = w * ft[(j, k)].im;
                }
            }
        }
        let metric = &y * y.transpose();

        Ok(Self {
            basis,
            theta,
            generator,
            psi,
            eig,
            log_probs,
            rho,
            mu,
            metric,
            centered,
            kernel,
        })
    }

    /// The point whose state is `rho` (full rank required).
    pub fn from_state(rho: &DensityMatrix<T>, basis: &'b OperatorBasis<T>) -> Result<Self> {
        Self::new(params_from_state(rho, basis)?, basis)
    }

    pub fn basis(&self) -> &'b OperatorBasis<T> {
        self.basis
    }

    pub fn theta(&self) -> &NaturalParams<T> {
        &self.theta
    }

    pub fn theta_vec(&self) -> &DVector<T> {
        &self.theta.0
    }

    /// Family generator `K = Σ θ_a F_a`.
    pub fn generator(&self) -> &HermitianOperator<T> {
        &self.generator
    }

    pub fn log_partition(&self) -> T {
        self.psi
    }

    pub fn state(&self) -> &DensityMatrix<T> {
        &self.rho
    }

    /// Eigenvalues of `ρ`, ascending.
    pub fn probabilities(&self) -> Vec<T> {
        self.log_probs.iter().map(|&l| l.exp()).collect()
    }

    /// `log` of the eigenvalues of `ρ`, exact even where they underflow.
    pub fn log_probabilities(&self) -> &[T] {
        &self.log_probs
    }

    pub fn eigen(&self) -> &HermitianEigen<T> {
        &self.eig
    }

    /// Expectation parameters `μ_a = tr(ρ F_a) = ∂ψ/∂θ_a`.
    pub fn mean_params(&self) -> &DVector<T> {
        &self.mu
    }

    /// Bogoliubov–Kubo–Mori metric `G_ab = ∂²ψ/∂θ_a∂θ_b`.
    pub fn bkm_metric(&self) -> Result<&DMatrix<T>> {
        let p_min = self.log_probs[0].exp();
        if p_min <= T::zero() {
            return Err(Error::BoundaryState(p_min.as_f64()));
        }
        Ok(&self.metric)
    }

    /// Metric without the full-rank check; always finite for finite `θ`.
    pub fn metric(&self) -> &DMatrix<T> {
        &self.metric
    }

    /// `H = −θ·μ + ψ` and its gradient `−Gθ`.
    pub fn entropy_and_gradient(&self) -> (T, DVector<T>) {
        (self.entropy(), -(&self.metric * &self.theta.0))
    }

    pub fn entropy(&self) -> T {
        self.psi - self.theta.0.dot(&self.mu)
    }

    /// `∂ρ/∂θ_b` in the computational basis.
    pub fn state_derivative(&self, b: usize) -> CMatrix<T> {
        self.eig
            .from_eigenbasis(&self.centered[b].component_mul(&self.kernel))
    }

    /// `Σ_b v_b ∂ρ/∂θ_b`.
    pub fn directional_state_derivative(&self, v: &DVector<T>) -> CMatrix<T> {
        let d = self.generator.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (ft, &vb) in self.centered.iter().zip(v.iter()) {
            if vb != T::zero() {
                acc += ft * creal(vb);
            }
        }
        self.eig.from_eigenbasis(&acc.component_mul(&self.kernel))
    }

    /// `tr(F_a X)` for every basis element.
    pub fn coordinates(&self, x: &CMatrix<T>) -> DVector<T> {
        self.basis.coordinates(x)
    }
}

/// `ρ(θ)`.
pub fn state_from_params<T: Real>(
    theta: &NaturalParams<T>,
    basis: &OperatorBasis<T>,
) -> Result<DensityMatrix<T>> {
    Ok(ExpFamilyPoint::new(theta.clone(), basis)?.rho)
}

/// Inverts the chart: `θ_a = tr(F_a log ρ)`.
///
/// Eigenvalues below [`FULL_RANK_FLOOR`] are rejected rather than clipped.
pub fn params_from_state<T: Real>(
    rho: &DensityMatrix<T>,
    basis: &OperatorBasis<T>,
) -> Result<NaturalParams<T>> {
    if rho.dim() != basis.shape().total() {
        return Err(Error::DimensionMismatch {
            expected: basis.shape().total(),
            got: rho.dim(),
        });
    }
    let eig = rho.operator().eigh();
    if eig.min_value() < T::lit(FULL_RANK_FLOOR) {
        return Err(Error::BoundaryState(eig.min_value().as_f64()));
    }
    let log_rho = eig.map(|x| x.ln());
    Ok(NaturalParams(DVector::from_iterator(
        basis.len(),
        basis
            .elements()
            .iter()
            .map(|f| hs_inner(f.matrix(), &log_rho)),
    )))
}
