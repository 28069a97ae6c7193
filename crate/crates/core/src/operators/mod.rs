//! Hermitian operator algebra on finite-dimensional composite systems.
//!
//! Subsystem 0 is the slowest-varying Kronecker factor: for dims `[d0, d1]`
//! the global index of `|j k>` is `j * d1 + k`.

mod basis;

pub use basis::{gell_mann, OperatorBasis, Sector};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{cabs, cplx, creal, exp_divided_difference, max, Real, C};

/// Complex dense matrix.
pub type CMatrix<T> = DMatrix<C<T>>;

/// Local dimensions of a composite system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SubsystemShape {
    dims: Vec<usize>,
}

/// Largest total dimension handled by the dense routines.
pub const MAX_DIM: usize = 64;

impl SubsystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("no subsystems".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidShape(format!("local dimension {d} < 2")));
        }
        let total: usize = dims.iter().product();
        if total > MAX_DIM {
            return Err(Error::InvalidShape(format!(
                "total dimension {total} exceeds {MAX_DIM}"
            )));
        }
        Ok(Self { dims })
    }

    pub fn bipartite(d1: usize, d2: usize) -> Result<Self> {
        Self::new(vec![d1, d2])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, i: usize) -> usize {
        self.dims[i]
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    /// Total Hilbert-space dimension.
    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// `Σ_i log d_i`, the largest attainable marginal-entropy sum.
    pub fn max_marginal_entropy<T: Real>(&self) -> T {
        self.dims
            .iter()
            .fold(T::zero(), |acc, &d| acc + T::lit(d as f64).ln())
    }

    /// Products of the dimensions strictly before and strictly after `i`.
    fn split(&self, i: usize) -> (usize, usize) {
        let left = self.dims[..i].iter().product();
        let right = self.dims[i + 1..].iter().product();
        (left, right)
    }
}

impl TryFrom<Vec<usize>> for SubsystemShape {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<SubsystemShape> for Vec<usize> {
    fn from(s: SubsystemShape) -> Self {
        s.dims
    }
}

/// A Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator<T: Real> {
    m: CMatrix<T>,
}

impl<T: Real> HermitianOperator<T> {
    /// Wraps `m` after checking Hermitian symmetry entrywise.
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let dev = hermitian_deviation(&m);
        if dev > T::tol(1e-12) {
            return Err(Error::NotHermitian(dev.as_f64()));
        }
        Ok(Self { m })
    }

    /// Wraps `(m + m†)/2` without checking.
    pub fn symmetrized(m: CMatrix<T>) -> Self {
        let half = creal(T::lit(0.5));
        let adj = m.adjoint();
        Self {
            m: (m + adj) * half,
        }
    }

    pub(crate) fn from_raw(m: CMatrix<T>) -> Self {
        Self { m }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            m: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            m: CMatrix::zeros(d, d),
        }
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let v: Vec<C<T>> = diag.iter().map(|&x| creal(x)).collect();
        Self {
            m: CMatrix::from_diagonal(&DVector::from_vec(v)),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.m
    }

    pub fn trace(&self) -> T {
        self.m.trace().re
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            m: &self.m * creal(s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            m: &self.m - &other.m,
        }
    }

    /// Hilbert–Schmidt inner product `tr(A B)`, real for Hermitian pairs.
    pub fn inner(&self, other: &Self) -> T {
        hs_inner(&self.m, &other.m)
    }

    pub fn frobenius_norm(&self) -> T {
        self.m.norm()
    }

    /// Spectral decomposition with ascending eigenvalues.
    pub fn eigh(&self) -> HermitianEigen<T> {
        eigh(&self.m)
    }

    /// `A - (tr A / d) I`.
    pub fn traceless_part(&self) -> Self {
        let d = self.dim();
        let shift = self.trace() / T::lit(d as f64);
        Self {
            m: &self.m - CMatrix::identity(d, d) * creal(shift),
        }
    }
}

/// Largest entrywise deviation `|A_jk - conj(A_kj)|`.
pub fn hermitian_deviation<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut dev = T::zero();
    for j in 0..n {
        for k in j..n {
            dev = max(dev, cabs(m[(j, k)] - m[(k, j)].conj()));
        }
    }
    dev
}

/// `Re tr(A B)`.
pub fn hs_inner<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let n = a.nrows();
    let mut acc = T::zero();
    for j in 0..n {
        for k in 0..n {
            acc += (a[(j, k)] * b[(k, j)]).re;
        }
    }
    acc
}

/// Spectral data `A = U diag(λ) U†`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: DVector<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// `U diag(f(λ)) U†`.
    pub fn map(&self, f: impl Fn(T) -> T) -> CMatrix<T> {
        let fvals: Vec<T> = self.values.iter().map(|&x| f(x)).collect();
        self.reconstruct(&fvals)
    }

    pub fn reconstruct(&self, vals: &[T]) -> CMatrix<T> {
        let u = &self.vectors;
        let mut scaled = u.clone();
        for (k, &v) in vals.iter().enumerate() {
            scaled.column_mut(k).scale_mut(v);
        }
        scaled * u.adjoint()
    }

    /// `U† A U`.
    pub fn to_eigenbasis(&self, a: &CMatrix<T>) -> CMatrix<T> {
        self.vectors.adjoint() * a * &self.vectors
    }

    /// `U A U†`.
    pub fn from_eigenbasis(&self, a: &CMatrix<T>) -> CMatrix<T> {
        &self.vectors * a * self.vectors.adjoint()
    }

    pub fn min_value(&self) -> T {
        self.values[0]
    }

    pub fn max_value(&self) -> T {
        self.values[self.values.len() - 1]
    }
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn eigh<T: Real>(m: &CMatrix<T>) -> HermitianEigen<T> {
    let half = creal(T::lit(0.5));
    let sym = (m + m.adjoint()) * half;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let n = m.nrows();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermitianEigen { values, vectors }
}

/// Kronecker product `A ⊗ B`.
pub fn tensor_product<T: Real>(
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
) -> HermitianOperator<T> {
    HermitianOperator::from_raw(a.m.kronecker(&b.m))
}

/// Embeds an operator acting on subsystem `i` as `I ⊗ .. ⊗ A ⊗ .. ⊗ I`.
pub fn embed_local<T: Real>(
    a: &HermitianOperator<T>,
    shape: &SubsystemShape,
    i: usize,
) -> Result<HermitianOperator<T>> {
    if i >= shape.n_subsystems() {
        return Err(Error::InvalidShape(format!("subsystem {i} out of range")));
    }
    if a.dim() != shape.dim(i) {
        return Err(Error::DimensionMismatch {
            expected: shape.dim(i),
            got: a.dim(),
        });
    }
    let (left, right) = shape.split(i);
    let l = CMatrix::<T>::identity(left, left);
    let r = CMatrix::<T>::identity(right, right);
    Ok(HermitianOperator::from_raw(l.kronecker(&a.m).kronecker(&r)))
}

/// Reduced matrix on subsystem `keep`, tracing out all others.
///
/// Works on any square matrix of the right size (not only states), so it is
/// also used for tangent vectors.
pub fn partial_trace_matrix<T: Real>(
    m: &CMatrix<T>,
    shape: &SubsystemShape,
    keep: usize,
) -> Result<CMatrix<T>> {
    if keep >= shape.n_subsystems() {
        return Err(Error::InvalidShape(format!(
            "subsystem {keep} out of range"
        )));
    }
    let d = shape.total();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: m.nrows(),
        });
    }
    let dk = shape.dim(keep);
    let (left, right) = shape.split(keep);
    let stride = dk * right;
    let mut out = CMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = C::<T>::new(T::zero(), T::zero());
            for l in 0..left {
                for r in 0..right {
                    acc += m[(l * stride + a * right + r, l * stride + b * right + r)];
                }
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// `f(A) = U f(Λ) U†`.
pub fn matrix_function<T: Real>(
    a: &HermitianOperator<T>,
    f: impl Fn(T) -> T,
) -> HermitianOperator<T> {
    HermitianOperator::from_raw(a.eigh().map(f))
}

pub fn matrix_exp<T: Real>(a: &HermitianOperator<T>) -> HermitianOperator<T> {
    matrix_function(a, |x| x.exp())
}

/// Matrix logarithm; the input must be positive definite.
pub fn matrix_log<T: Real>(a: &HermitianOperator<T>) -> Result<HermitianOperator<T>> {
    let eig = a.eigh();
    if eig.min_value() <= T::zero() {
        return Err(Error::Domain(format!(
            "log of matrix with eigenvalue {:e}",
            eig.min_value().as_f64()
        )));
    }
    Ok(HermitianOperator::from_raw(eig.map(|x| x.ln())))
}

/// Real power `A^p`; the input must be positive definite.
pub fn matrix_power<T: Real>(a: &HermitianOperator<T>, p: T) -> Result<HermitianOperator<T>> {
    let eig = a.eigh();
    if eig.min_value() <= T::zero() {
        return Err(Error::Domain(format!(
            "power of matrix with eigenvalue {:e}",
            eig.min_value().as_f64()
        )));
    }
    Ok(HermitianOperator::from_raw(eig.map(|x| x.powf(p))))
}

/// Fréchet derivative of the matrix exponential, `Dexp(A)[E]`.
pub fn frechet_exp<T: Real>(
    a: &HermitianOperator<T>,
    e: &HermitianOperator<T>,
) -> Result<HermitianOperator<T>> {
    if a.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: e.dim(),
        });
    }
    let eig = a.eigh();
    let kernel = exp_kernel(eig.values.as_slice());
    let et = eig.to_eigenbasis(e.matrix());
    Ok(HermitianOperator::from_raw(
        eig.from_eigenbasis(&et.component_mul(&kernel)),
    ))
}

/// Matrix of divided differences `φ(λ_j, λ_k)` of `exp`.
pub fn exp_kernel<T: Real>(values: &[T]) -> CMatrix<T> {
    let n = values.len();
    CMatrix::from_fn(n, n, |j, k| {
        creal(exp_divided_difference(values[j], values[k]))
    })
}

/// Commutator `[A, B] = AB - BA`.
pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

/// `-i [A, B]`, Hermitian when `A`, `B` are.
pub fn neg_i_commutator<T: Real>(
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
) -> HermitianOperator<T> {
    HermitianOperator::from_raw(commutator(&a.m, &b.m) * cplx(T::zero(), -T::one()))
}

/// Real coordinates of a Hermitian matrix: the diagonal, then `√2 Re` and
/// `√2 Im` of each strictly-upper entry. Euclidean norm equals Frobenius norm.
pub fn hermitian_vec<T: Real>(m: &CMatrix<T>) -> Vec<T> {
    let n = m.nrows();
    let s2 = T::lit(2.0).sqrt();
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        out.push(m[(j, j)].re);
    }
    for j in 0..n {
        for k in j + 1..n {
            out.push(s2 * m[(j, k)].re);
            out.push(s2 * m[(j, k)].im);
        }
    }
    out
}

/// Largest absolute entry difference between two matrices.
pub fn max_abs_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| max(acc, cabs(*x - *y)))
}
