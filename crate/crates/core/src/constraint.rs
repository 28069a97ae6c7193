//! Geometry of the marginal-entropy constraint `C(θ) = Σ_i h(ρ_i(θ))`.
//!
//! At points whose marginals are all maximally mixed, `C` sits at its
//! maximum `Σ_i log d_i`: the gradient vanishes and only the Hessian carries
//! information about which velocities keep the constraint. The admissible
//! directions are then the kernel of the marginal Jacobian `M`, and the flow
//! uses the metric-orthogonal projector onto that kernel.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expfamily::{ExpFamilyPoint, NaturalParams, FULL_RANK_FLOOR};
use crate::linalg::{generalized_symmetric_eigen, null_space, spd_condition};
use crate::operators::{hermitian_vec, hs_inner, partial_trace_matrix, CMatrix};
use crate::scalar::{max, Real};
use crate::states::{von_neumann_entropy, DensityMatrix};

/// Tunable thresholds for [`ConstraintGeometry::compute`].
#[derive(Debug, Clone, Copy)]
pub struct GeometryOptions<T> {
    /// Singular values below `kernel_rel_tol · σ_max` count as zero.
    pub kernel_rel_tol: T,
    /// Largest accepted condition number of `NᵀGN`.
    pub max_condition: T,
    /// Also evaluate the finite-difference Hessian of `C`.
    pub hessian: bool,
}

impl<T: Real> Default for GeometryOptions<T> {
    fn default() -> Self {
        Self {
            kernel_rel_tol: T::lit(1e-8),
            max_condition: T::lit(1e12),
            hessian: false,
        }
    }
}

/// `Σ_i h(ρ_i)`.
pub fn marginal_entropy_sum<T: Real>(point: &ExpFamilyPoint<'_, T>) -> T {
    point
        .state()
        .marginals()
        .iter()
        .fold(T::zero(), |acc, m| acc + von_neumann_entropy(m))
}

/// `log ρ_i` for every marginal; rank-deficient marginals are rejected.
fn marginal_logs<T: Real>(rho: &DensityMatrix<T>) -> Result<Vec<CMatrix<T>>> {
    rho.marginals()
        .iter()
        .map(|m| {
            let eig = m.operator().eigh();
            if eig.min_value() < T::lit(FULL_RANK_FLOOR) {
                return Err(Error::BoundaryState(eig.min_value().as_f64()));
            }
            Ok(eig.map(|x| x.ln()))
        })
        .collect()
}

/// `∂ρ_i/∂θ_b` for every subsystem `i` (outer) and direction `b` (inner).
fn marginal_derivatives<T: Real>(point: &ExpFamilyPoint<'_, T>) -> Vec<Vec<CMatrix<T>>> {
    let shape = point.basis().shape();
    let derivs: Vec<CMatrix<T>> = (0..point.basis().len())
        .map(|b| point.state_derivative(b))
        .collect();
    (0..shape.n_subsystems())
        .map(|i| {
            derivs
                .iter()
                .map(|d| partial_trace_matrix(d, shape, i).expect("shape matches basis"))
                .collect()
        })
        .collect()
}

/// `a = ∇C`, with `a_b = −Σ_i tr(log ρ_i · ∂ρ_i/∂θ_b)`.
pub fn constraint_gradient<T: Real>(point: &ExpFamilyPoint<'_, T>) -> Result<DVector<T>> {
    let logs = marginal_logs(point.state())?;
    let derivs = marginal_derivatives(point);
    Ok(gradient_from_parts(&logs, &derivs, point.basis().len()))
}

fn gradient_from_parts<T: Real>(
    logs: &[CMatrix<T>],
    derivs: &[Vec<CMatrix<T>>],
    m: usize,
) -> DVector<T> {
    DVector::from_fn(m, |b, _| {
        logs.iter()
            .zip(derivs)
            .fold(T::zero(), |acc, (l, di)| acc - hs_inner(l, &di[b]))
    })
}

/// Finite-difference step used for the Hessian at `θ`.
pub fn hessian_step<T: Real>(theta: &NaturalParams<T>) -> T {
    T::lit(1e-4) * max(T::one(), theta.norm())
}

/// `∇²C` by central differences of the analytic gradient, symmetrised.
pub fn constraint_hessian<T: Real>(point: &ExpFamilyPoint<'_, T>) -> Result<DMatrix<T>> {
    let basis = point.basis();
    let m = basis.len();
    let theta = point.theta_vec();
    let h = hessian_step(point.theta());
    let columns: Vec<DVector<T>> = (0..m)
        .into_par_iter()
        .map(|b| {
            let shifted = |s: T| -> Result<DVector<T>> {
                let mut t = theta.clone();
                t[b] += s;
                constraint_gradient(&ExpFamilyPoint::new(NaturalParams(t), basis)?)
            };
            let plus = shifted(h)?;
            let minus = shifted(-h)?;
            Ok((plus - minus) / (h + h))
        })
        .collect::<Result<_>>()?;
    let mut hess = DMatrix::zeros(m, m);
    for (b, col) in columns.iter().enumerate() {
        hess.set_column(b, col);
    }
    Ok((&hess + hess.transpose()) * T::lit(0.5))
}

/// Marginal Jacobian: one block of rows per subsystem, each row a real
/// Hermitian-vec coordinate of `∂ρ_i/∂θ_b`.
pub fn marginal_jacobian<T: Real>(point: &ExpFamilyPoint<'_, T>) -> DMatrix<T> {
    jacobian_from_parts(&marginal_derivatives(point), point.basis().len())
}

fn jacobian_from_parts<T: Real>(derivs: &[Vec<CMatrix<T>>], m: usize) -> DMatrix<T> {
    let rows: usize = derivs.iter().map(|di| di[0].nrows().pow(2)).sum();
    let mut jac = DMatrix::zeros(rows, m);
    let mut offset = 0;
    for di in derivs {
        let n = di[0].nrows().pow(2);
        for (b, d) in di.iter().enumerate() {
            for (r, x) in hermitian_vec(d).into_iter().enumerate() {
                jac[(offset + r, b)] = x;
            }
        }
        offset += n;
    }
    jac
}

/// Orthonormal basis of `ker M`.
pub fn kernel_basis<T: Real>(jacobian: &DMatrix<T>, rel_tol: T) -> Result<DMatrix<T>> {
    let n = null_space(jacobian, rel_tol);
    if n.ncols() == 0 {
        return Err(Error::FullyConstrained);
    }
    Ok(n)
}

/// `Π = N (NᵀGN)⁻¹ NᵀG`, the `G`-orthogonal projector onto `span N`.
pub fn marginal_projector<T: Real>(
    metric: &DMatrix<T>,
    kernel: &DMatrix<T>,
    max_condition: T,
) -> Result<DMatrix<T>> {
    let gn = metric * kernel;
    let reduced = kernel.transpose() * &gn;
    let cond = spd_condition(&reduced);
    if !(cond <= max_condition) {
        return Err(Error::NumericalDegeneracy(cond.as_f64()));
    }
    let chol = nalgebra::Cholesky::new(reduced)
        .ok_or_else(|| Error::NumericalDegeneracy(cond.as_f64()))?;
    // (NᵀGN)⁻¹ NᵀG = solve(reduced, (GN)ᵀ)
    Ok(kernel * chol.solve(&gn.transpose()))
}

/// `vᵀ (∇²C) v`.
pub fn second_order_admissibility<T: Real>(hessian: &DMatrix<T>, v: &DVector<T>) -> T {
    v.dot(&(hessian * v))
}

/// Generalised eigenpairs of `(−∇²C, G)`.
#[derive(Debug, Clone)]
pub struct StiffnessSpectrum<T: Real> {
    /// Ascending.
    pub values: DVector<T>,
    /// `G`-orthonormal columns.
    pub vectors: DMatrix<T>,
}

impl<T: Real> StiffnessSpectrum<T> {
    /// Columns whose eigenvalue is below `threshold`.
    pub fn soft_modes(&self, threshold: T) -> DMatrix<T> {
        let cols: Vec<usize> = (0..self.values.len())
            .filter(|&i| self.values[i] < threshold)
            .collect();
        let mut out = DMatrix::zeros(self.vectors.nrows(), cols.len());
        for (c, &i) in cols.iter().enumerate() {
            out.set_column(c, &self.vectors.column(i));
        }
        out
    }

    pub fn soft_count(&self, threshold: T) -> usize {
        self.values.iter().filter(|&&x| x < threshold).count()
    }
}

pub fn stiffness_spectrum<T: Real>(
    hessian: &DMatrix<T>,
    metric: &DMatrix<T>,
) -> Result<StiffnessSpectrum<T>> {
    let (values, vectors) = generalized_symmetric_eigen(&(-hessian), metric)?;
    Ok(StiffnessSpectrum { values, vectors })
}

/// Stiffness `κ(v) = vᵀ(−∇²C)v / vᵀGv`.
pub fn rayleigh_quotient<T: Real>(hessian: &DMatrix<T>, metric: &DMatrix<T>, v: &DVector<T>) -> T {
    -second_order_admissibility(hessian, v) / v.dot(&(metric * v))
}

/// Everything the constrained flow needs at one point.
#[derive(Debug, Clone)]
pub struct ConstraintGeometry<T: Real> {
    pub at: NaturalParams<T>,
    /// `C(θ)`.
    pub value: T,
    pub marginal_entropies: Vec<T>,
    /// `∇C`.
    pub gradient: DVector<T>,
    /// Marginal Jacobian `M`.
    pub jacobian: DMatrix<T>,
    /// `∇²C`, present when requested.
    pub hessian: Option<DMatrix<T>>,
    /// Orthonormal basis `N` of `ker M`.
    pub kernel: DMatrix<T>,
    /// `Π_marg`.
    pub projector: DMatrix<T>,
    /// BKM metric at the point.
    pub metric: DMatrix<T>,
}

impl<T: Real> ConstraintGeometry<T> {
    pub fn compute(point: &ExpFamilyPoint<'_, T>, opts: &GeometryOptions<T>) -> Result<Self> {
        let marginals = point.state().marginals();
        let marginal_entropies: Vec<T> = marginals.iter().map(von_neumann_entropy).collect();
        let value = marginal_entropies.iter().fold(T::zero(), |a, &h| a + h);
        let logs = marginal_logs(point.state())?;
        let derivs = marginal_derivatives(point);
        let m = point.basis().len();
        let gradient = gradient_from_parts(&logs, &derivs, m);
        let jacobian = jacobian_from_parts(&derivs, m);
        let kernel = kernel_basis(&jacobian, opts.kernel_rel_tol)?;
        let metric = point.bkm_metric()?.clone();
        let projector = marginal_projector(&metric, &kernel, opts.max_condition)?;
        let hessian = if opts.hessian {
            Some(constraint_hessian(point)?)
        } else {
            None
        };
        Ok(Self {
            at: point.theta().clone(),
            value,
            marginal_entropies,
            gradient,
            jacobian,
            hessian,
            kernel,
            projector,
            metric,
        })
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel.ncols()
    }

    pub fn stiffness(&self) -> Result<StiffnessSpectrum<T>> {
        let hess = self
            .hessian
            .as_ref()
            .ok_or_else(|| Error::Config("geometry computed without Hessian".into()))?;
        stiffness_spectrum(hess, &self.metric)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{OperatorBasis, SubsystemShape};
    use crate::states::regularized_origin;

    fn qutrits() -> (SubsystemShape, OperatorBasis<f64>) {
        let s = SubsystemShape::bipartite(3, 3).unwrap();
        let b = OperatorBasis::product(&s);
        (s, b)
    }

    #[test]
    fn chart_origin_saturates_constraint() {
        let (s, b) = qutrits();
        let p = ExpFamilyPoint::new(NaturalParams::zeros(b.len()), &b).unwrap();
        let c = marginal_entropy_sum(&p);
        assert!((c - s.max_marginal_entropy::<f64>()).abs() < 1e-14);
        assert!(constraint_gradient(&p).unwrap().amax() < 1e-14);
    }

    #[test]
    fn local_perturbation_lowers_constraint() {
        let (s, b) = qutrits();
        let mut theta = DVector::zeros(b.len());
        theta[b.local_indices(0)[2]] = 0.4;
        let p = ExpFamilyPoint::new(NaturalParams(theta), &b).unwrap();
        assert!(marginal_entropy_sum(&p) < s.max_marginal_entropy::<f64>() - 1e-3);
    }

    #[test]
    fn correlation_directions_do_not_move_marginals_at_chart_origin() {
        let (_, b) = qutrits();
        let p = ExpFamilyPoint::new(NaturalParams::zeros(b.len()), &b).unwrap();
        let m = marginal_jacobian(&p);
        assert_eq!(m.nrows(), 18);
        for a in b.correlation_indices() {
            assert!(m.column(a).amax() < 1e-15);
        }
        for a in b.local_indices(1) {
            assert!(m.column(a).norm() > 1e-3);
        }
        let k = kernel_basis(&m, 1e-8).unwrap();
        assert_eq!(k.ncols(), 64);
        assert_eq!(crate::linalg::rank(&m, 1e-8) + k.ncols(), b.len());
    }

    #[test]
    fn single_system_is_fully_constrained() {
        let s = SubsystemShape::new(vec![3]).unwrap();
        let b = OperatorBasis::<f64>::product(&s);
        let p = ExpFamilyPoint::new(NaturalParams(DVector::from_element(8, 0.1)), &b).unwrap();
        let m = marginal_jacobian(&p);
        assert!(matches!(
            kernel_basis(&m, 1e-8),
            Err(Error::FullyConstrained)
        ));
    }

    #[test]
    fn projector_basic_properties() {
        let n = 5;
        let g = DMatrix::<f64>::from_fn(n, n, |i, j| if i == j { 2.0 + i as f64 } else { 0.1 });
        let eye = DMatrix::identity(n, n);
        let p = marginal_projector(&g, &eye, 1e12).unwrap();
        assert!((p - &eye).amax() < 1e-13);

        let (_, b) = qutrits();
        let theta = crate::sampling::random_vector(b.len(), 0.3, &mut crate::sampling::rng(2));
        let pt = ExpFamilyPoint::new(NaturalParams(theta), &b).unwrap();
        let geo = ConstraintGeometry::compute(&pt, &GeometryOptions::default()).unwrap();
        let pi = &geo.projector;
        assert!((pi * pi - pi).amax() < 1e-8);
        assert!((&geo.jacobian * pi).amax() < 1e-8);
        let gp = &geo.metric * pi;
        assert!((&gp - gp.transpose()).amax() < 1e-8);
        for c in 0..geo.kernel.ncols() {
            let col = geo.kernel.column(c).into_owned();
            assert!((pi * &col - &col).amax() < 1e-10);
        }
    }

    #[test]
    fn degenerate_reduced_metric_is_reported() {
        let g = DMatrix::<f64>::from_diagonal(&DVector::from_vec(vec![1.0, 1e-14]));
        let n = DMatrix::identity(2, 2);
        assert!(matches!(
            marginal_projector(&g, &n, 1e12),
            Err(Error::NumericalDegeneracy(_))
        ));
    }

    #[test]
    fn admissibility_of_zero_velocity() {
        let h = DMatrix::<f64>::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        assert_eq!(second_order_admissibility(&h, &DVector::zeros(2)), 0.0);
        let v = DVector::from_vec(vec![0.3, -0.2]);
        let g = DMatrix::identity(2, 2);
        let k1 = rayleigh_quotient(&h, &g, &v);
        let k2 = rayleigh_quotient(&h, &g, &(&v * 2.0));
        assert!((k1 - k2).abs() < 1e-15);
    }

    #[test]
    fn gradient_vanishes_at_regularised_origin() {
        let (s, b) = qutrits();
        for &eps in &[0.3, 0.05, 0.01] {
            let rho = regularized_origin(&s, eps).unwrap();
            let p = ExpFamilyPoint::from_state(&rho, &b).unwrap();
            assert!(constraint_gradient(&p).unwrap().amax() < 1e-9);
            assert!((marginal_entropy_sum(&p) - 2.0 * 3f64.ln()).abs() < 1e-12);
        }
    }
}
