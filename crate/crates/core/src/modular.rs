//! Modular Hamiltonians `K_i = −log ρ_i` of the marginals and the Gibbs-family
//! diagnostics built on them.
//!
//! Sign convention: the exponential family writes `ρ = exp(K_fam − ψ I)`,
//! whereas the modular Hamiltonian is `K_mod = −log ρ = −K_fam + ψ I`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expfamily::FULL_RANK_FLOOR;
use crate::operators::{matrix_exp, HermitianOperator, SubsystemShape};
use crate::scalar::{abs, max, Real};
use crate::states::{entropy_of_spectrum, DensityMatrix};

/// `K = −log ρ` for a full-rank state.
pub fn modular_hamiltonian<T: Real>(rho: &DensityMatrix<T>) -> Result<HermitianOperator<T>> {
    let eig = rho.operator().eigh();
    if eig.min_value() < T::lit(FULL_RANK_FLOOR) {
        return Err(Error::BoundaryState(eig.min_value().as_f64()));
    }
    Ok(HermitianOperator::from_raw(eig.map(|x| -x.ln())))
}

/// `Σ_i tr(ρ_i K_i)`, equal to the marginal-entropy sum.
pub fn modular_energy_sum<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    rho.marginals().iter().try_fold(T::zero(), |acc, m| {
        let k = modular_hamiltonian(m)?;
        Ok(acc + m.operator().inner(&k))
    })
}

/// The one-parameter family `exp(−β H)/Z(β)` of a local generator.
#[derive(Debug, Clone)]
pub struct GibbsFamily<T: Real> {
    pub generator: HermitianOperator<T>,
    pub beta: T,
    /// `log Z(β)`.
    pub log_z: T,
}

impl<T: Real> GibbsFamily<T> {
    pub fn new(generator: HermitianOperator<T>, beta: T) -> Self {
        let eig = generator.eigh();
        let exps: Vec<T> = eig.values.iter().map(|&e| -beta * e).collect();
        let top = exps.iter().copied().fold(exps[0], max);
        let log_z = top
            + exps
                .iter()
                .fold(T::zero(), |a, &x| a + (x - top).exp())
                .ln();
        Self {
            generator,
            beta,
            log_z,
        }
    }

    /// `Z(β)`.
    pub fn partition(&self) -> T {
        self.log_z.exp()
    }

    pub fn state(&self) -> DensityMatrix<T> {
        let op = matrix_exp(&self.generator.scale(-self.beta)).scale((-self.log_z).exp());
        let shape = SubsystemShape::new(vec![op.dim()]).expect("dimension at least 2");
        DensityMatrix::from_operator_unchecked(op, shape)
    }

    /// `h(β)`.
    pub fn entropy(&self) -> T {
        let eig = self.generator.eigh();
        let probs: Vec<T> = eig
            .values
            .iter()
            .map(|&e| (-self.beta * e - self.log_z).exp())
            .collect();
        entropy_of_spectrum(&probs)
    }

    /// `tr(ρ H²) − (tr ρ H)²`.
    pub fn variance(&self) -> T {
        let eig = self.generator.eigh();
        let (mut m1, mut m2) = (T::zero(), T::zero());
        for &e in eig.values.iter() {
            let p = (-self.beta * e - self.log_z).exp();
            m1 += p * e;
            m2 += p * e * e;
        }
        m2 - m1 * m1
    }
}

/// `dh/dβ = −β var(H)`.
pub fn gibbs_entropy_derivative<T: Real>(family: &GibbsFamily<T>) -> T {
    -family.beta * family.variance()
}

/// Best Gibbs-family fit of a marginal.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GibbsLockFit<T> {
    pub beta_star: T,
    /// `min_β ‖K − βH − c(β) I‖_F`.
    pub residual: T,
}

/// Fits `K_i ≈ β H_local + c I` by golden-section search on the residual
/// norm after removing identity components.
pub fn gibbs_lock_residual<T: Real>(
    rho: &DensityMatrix<T>,
    h_local: &HermitianOperator<T>,
) -> Result<GibbsLockFit<T>> {
    if rho.dim() != h_local.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: h_local.dim(),
        });
    }
    let k = modular_hamiltonian(rho)?.traceless_part();
    let h = h_local.traceless_part();
    if h.frobenius_norm() < T::tol(1e-12) {
        return Err(Error::OutOfRange(
            "generator is proportional to the identity".into(),
        ));
    }
    let f = |beta: T| k.sub(&h.scale(beta)).frobenius_norm();

    let two = T::lit(2.0);
    let mut radius = T::one();
    let f0 = f(T::zero());
    while f(radius) < f0 || f(-radius) < f0 {
        radius *= two;
        if radius > T::lit(1e12) {
            return Err(Error::NumericalDegeneracy(radius.as_f64()));
        }
    }

    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / two;
    let (mut lo, mut hi) = (-radius, radius);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let stop = T::lit(4.0) * T::default_epsilon() * radius;
    while hi - lo > stop {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let beta = (lo + hi) / two;
    Ok(GibbsLockFit {
        beta_star: beta,
        residual: f(beta),
    })
}

/// Largest `‖K_i − (log d_i) I‖_F` over subsystems; zero exactly when every
/// marginal is maximally mixed.
pub fn modular_triviality<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    rho.marginals().iter().try_fold(T::zero(), |acc, m| {
        let d = m.dim();
        let k = modular_hamiltonian(m)?;
        let dev = k
            .sub(&HermitianOperator::identity(d).scale(T::lit(d as f64).ln()))
            .frobenius_norm();
        Ok(max(acc, abs(dev)))
    })
}
