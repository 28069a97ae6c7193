//! Real dense linear algebra used by the constraint geometry: symmetric and
//! generalised eigenproblems, null spaces, and subspace angles.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::scalar::{max, min, Real};

/// Symmetric eigendecomposition, eigenvalues ascending.
pub fn symmetric_eigen<T: Real>(a: &DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let sym = (a + a.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(sym);
    sort_pairs(eig.eigenvalues, eig.eigenvectors)
}

fn sort_pairs<T: Real>(vals: DVector<T>, vecs: DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| {
        vals[a]
            .partial_cmp(&vals[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let sorted = DVector::from_iterator(vals.len(), order.iter().map(|&i| vals[i]));
    let mut out = DMatrix::zeros(vecs.nrows(), vecs.ncols());
    for (dst, &src) in order.iter().enumerate() {
        out.set_column(dst, &vecs.column(src));
    }
    (sorted, out)
}

/// Solves `A x = λ B x` for symmetric `A` and symmetric positive definite `B`.
///
/// Eigenvalues ascending; eigenvectors are `B`-orthonormal.
pub fn generalized_symmetric_eigen<T: Real>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
) -> Result<(DVector<T>, DMatrix<T>)> {
    let chol = Cholesky::new(b.clone()).ok_or(Error::NumericalDegeneracy(f64::INFINITY))?;
    let l = chol.l();
    // C = L^{-1} A L^{-T}
    let linv_a = l
        .solve_lower_triangular(a)
        .ok_or(Error::NumericalDegeneracy(f64::INFINITY))?;
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or(Error::NumericalDegeneracy(f64::INFINITY))?;
    let (vals, w) = symmetric_eigen(&c);
    let v = l
        .transpose()
        .solve_upper_triangular(&w)
        .ok_or(Error::NumericalDegeneracy(f64::INFINITY))?;
    Ok((vals, v))
}

/// Orthonormal basis of `ker m`; singular values below `rel_tol · σ_max`
/// count as zero. Returns an `n × 0` matrix when the kernel is trivial.
pub fn null_space<T: Real>(m: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let n = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd
        .singular_values
        .iter()
        .fold(T::zero(), |acc, &s| max(acc, s));
    let thr = rel_tol * smax;
    let rows: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > T::zero() && svd.singular_values[i] > thr)
        .collect();
    let rank = rows.len();
    if rank == 0 {
        return DMatrix::identity(n, n);
    }
    let mut range = DMatrix::zeros(n, rank);
    for (c, &r) in rows.iter().enumerate() {
        range.set_column(c, &v_t.row(r).transpose());
    }
    // complement projector has eigenvalues 0 (row space) and 1 (kernel)
    let proj = DMatrix::identity(n, n) - &range * range.transpose();
    let (vals, vecs) = symmetric_eigen(&proj);
    let half = T::lit(0.5);
    let cols: Vec<usize> = (0..n).filter(|&i| vals[i] > half).collect();
    let mut out = DMatrix::zeros(n, cols.len());
    for (c, &i) in cols.iter().enumerate() {
        out.set_column(c, &vecs.column(i));
    }
    out
}

/// Numerical rank with the same relative threshold as [`null_space`].
pub fn rank<T: Real>(m: &DMatrix<T>, rel_tol: T) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.iter().fold(T::zero(), |acc, &s| max(acc, s));
    if smax == T::zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthonormal basis for the column span of `a` (assumed full column rank).
pub fn orthonormalize<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    if a.ncols() == 0 {
        return a.clone();
    }
    let svd = SVD::new(a.clone(), true, false);
    let u = svd.u.expect("requested left singular vectors");
    u.columns(0, a.ncols().min(a.nrows())).into_owned()
}

/// Principal angles (radians, ascending) between the column spans of `a`
/// and `b`, computed from sines so that small angles stay accurate.
pub fn principal_angles<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Vec<T> {
    let (qa, qb) = {
        let qa = orthonormalize(a);
        let qb = orthonormalize(b);
        if qa.ncols() <= qb.ncols() {
            (qa, qb)
        } else {
            (qb, qa)
        }
    };
    if qa.ncols() == 0 {
        return Vec::new();
    }
    let residual = &qa - &qb * (qb.transpose() * &qa);
    let mut sines: Vec<T> = residual.singular_values().iter().copied().collect();
    sines.truncate(qa.ncols());
    let mut angles: Vec<T> = sines.into_iter().map(|s| min(s, T::one()).asin()).collect();
    angles.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    angles
}

/// Ratio of extreme eigenvalues of a symmetric positive definite matrix.
pub fn spd_condition<T: Real>(a: &DMatrix<T>) -> T {
    let (vals, _) = symmetric_eigen(a);
    let lo = vals[0];
    let hi = vals[vals.len() - 1];
    if lo <= T::zero() {
        T::lit(f64::INFINITY)
    } else {
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_zero_is_identity() {
        let n = null_space(&DMatrix::<f64>::zeros(2, 4), 1e-8);
        assert_eq!(n, DMatrix::identity(4, 4));
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = DMatrix::<f64>::from_row_slice(2, 4, &[1.0, 2.0, 0.0, 1.0, 0.0, 1.0, 1.0, -1.0]);
        let n = null_space(&m, 1e-8);
        assert_eq!(n.ncols(), 2);
        assert!((&m * &n).amax() < 1e-14);
        assert!((n.transpose() * &n - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn null_space_of_tall_full_rank_is_empty() {
        let m = DMatrix::<f64>::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(null_space(&m, 1e-8).ncols(), 0);
    }

    #[test]
    fn generalized_eigen_solves_pencil() {
        let a =
            DMatrix::<f64>::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let b =
            DMatrix::<f64>::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let (vals, vecs) = generalized_symmetric_eigen(&a, &b).unwrap();
        for i in 0..3 {
            let v = vecs.column(i);
            let r = &a * v - (&b * v) * vals[i];
            assert!(r.amax() < 1e-13);
        }
        assert!((vecs.transpose() * &b * &vecs - DMatrix::identity(3, 3)).amax() < 1e-13);
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
    }

    #[test]
    fn principal_angles_of_rotated_planes() {
        let a = DMatrix::<f64>::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let t: f64 = 1e-6;
        let b = DMatrix::<f64>::from_row_slice(3, 1, &[t.cos(), t.sin(), 0.0]);
        let ang = principal_angles(&a, &b);
        assert!((ang[0] - t).abs() < 1e-15);
        let same = principal_angles(&a, &a);
        assert!(same[0] < 1e-15);
    }
}
