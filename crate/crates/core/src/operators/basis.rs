use nalgebra::DVector;

use super::{CMatrix, HermitianOperator, SubsystemShape};
use crate::error::{Error, Result};
use crate::scalar::{abs, cplx, creal, max, Real};

/// Which subsystems a basis element acts on nontrivially.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub enum Sector {
    /// Acts only on one subsystem (identity elsewhere).
    Local(usize),
    /// Acts on two or more subsystems.
    Correlation(Vec<usize>),
}

impl Sector {
    pub fn is_local(&self) -> bool {
        matches!(self, Sector::Local(_))
    }
}

/// Generalised Gell-Mann matrices for dimension `d`, scaled so that
/// `tr(F_a F_b) = δ_ab`. Order: real symmetric, imaginary antisymmetric,
/// then diagonal.
pub fn gell_mann<T: Real>(d: usize) -> Vec<HermitianOperator<T>> {
    let inv_s2 = T::one() / T::lit(2.0).sqrt();
    let mut out = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in j + 1..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = creal(inv_s2);
            m[(k, j)] = creal(inv_s2);
            out.push(HermitianOperator::from_raw(m));
        }
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = cplx(T::zero(), -inv_s2);
            m[(k, j)] = cplx(T::zero(), inv_s2);
            out.push(HermitianOperator::from_raw(m));
        }
    }
    for l in 1..d {
        let lf = T::lit(l as f64);
        let norm = T::one() / (lf * (lf + T::one())).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = creal(norm);
        }
        m[(l, l)] = creal(-lf * norm);
        out.push(HermitianOperator::from_raw(m));
    }
    out
}

/// Mixed-radix increment; returns false after the last combination.
fn advance(idx: &mut [usize], radix: &[usize]) -> bool {
    for p in (0..idx.len()).rev() {
        idx[p] += 1;
        if idx[p] < radix[p] {
            return true;
        }
        idx[p] = 0;
    }
    false
}

/// Orthonormal traceless Hermitian basis `{F_a}` on a composite system.
#[derive(Debug, Clone)]
pub struct OperatorBasis<T: Real> {
    shape: SubsystemShape,
    elements: Vec<HermitianOperator<T>>,
    sectors: Vec<Sector>,
}

impl<T: Real> OperatorBasis<T> {
    /// Full product basis of dimension `d² - 1`.
    ///
    /// Elements are tensor products of local Gell-Mann matrices and
    /// normalised identities `I/√d_i`, grouped by the set of subsystems they
    /// act on: all single-subsystem sectors first (in subsystem order), then
    /// correlation sectors by increasing size.
    pub fn product(shape: &SubsystemShape) -> Self {
        let n = shape.n_subsystems();
        let locals: Vec<Vec<HermitianOperator<T>>> =
            shape.dims().iter().map(|&d| gell_mann(d)).collect();
        let ids: Vec<HermitianOperator<T>> = shape
            .dims()
            .iter()
            .map(|&d| HermitianOperator::identity(d).scale(T::one() / T::lit(d as f64).sqrt()))
            .collect();

        let mut subsets: Vec<Vec<usize>> = (1u32..(1 << n))
            .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
            .collect();
        subsets.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then(a.cmp(b)));

        let mut elements = Vec::with_capacity(shape.total().pow(2) - 1);
        let mut sectors = Vec::with_capacity(elements.capacity());
        for subset in subsets {
            let sector = if subset.len() == 1 {
                Sector::Local(subset[0])
            } else {
                Sector::Correlation(subset.clone())
            };
            // odometer over local Gell-Mann indices of the active factors
            let radix: Vec<usize> = subset.iter().map(|&i| locals[i].len()).collect();
            let mut idx = vec![0usize; subset.len()];
            loop {
                let mut acc: Option<CMatrix<T>> = None;
                for i in 0..n {
                    let factor = match subset.iter().position(|&s| s == i) {
                        Some(p) => locals[i][idx[p]].matrix(),
                        None => ids[i].matrix(),
                    };
                    acc = Some(match acc {
                        None => factor.clone(),
                        Some(m) => m.kronecker(factor),
                    });
                }
                elements.push(HermitianOperator::from_raw(acc.expect("nonempty shape")));
                sectors.push(sector.clone());

                if !advance(&mut idx, &radix) {
                    break;
                }
            }
        }
        Self {
            shape: shape.clone(),
            elements,
            sectors,
        }
    }

    /// Builds a (possibly partial) basis from explicit elements, checking
    /// tracelessness and orthonormality.
    pub fn from_elements(
        shape: SubsystemShape,
        elements: Vec<HermitianOperator<T>>,
        sectors: Vec<Sector>,
    ) -> Result<Self> {
        let d = shape.total();
        if elements.is_empty() || elements.len() != sectors.len() {
            return Err(Error::Config("basis needs one sector per element".into()));
        }
        for e in &elements {
            if e.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: e.dim(),
                });
            }
            if abs(e.trace()) > T::tol(1e-12) {
                return Err(Error::Config("basis element is not traceless".into()));
            }
        }
        let basis = Self {
            shape,
            elements,
            sectors,
        };
        let err = basis.orthonormality_error();
        if err > T::tol(1e-10) {
            return Err(Error::Config(format!(
                "basis is not orthonormal (error {:e})",
                err.as_f64()
            )));
        }
        Ok(basis)
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Whether the basis spans all traceless Hermitian operators.
    pub fn is_complete(&self) -> bool {
        self.elements.len() + 1 == self.shape.total().pow(2)
    }

    pub fn elements(&self) -> &[HermitianOperator<T>] {
        &self.elements
    }

    pub fn element(&self, a: usize) -> &HermitianOperator<T> {
        &self.elements[a]
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    /// Indices of elements local to subsystem `i`.
    pub fn local_indices(&self, i: usize) -> Vec<usize> {
        self.indices_where(|s| *s == Sector::Local(i))
    }

    /// Indices of elements acting on more than one subsystem.
    pub fn correlation_indices(&self) -> Vec<usize> {
        self.indices_where(|s| !s.is_local())
    }

    fn indices_where(&self, pred: impl Fn(&Sector) -> bool) -> Vec<usize> {
        self.sectors
            .iter()
            .enumerate()
            .filter(|(_, s)| pred(s))
            .map(|(a, _)| a)
            .collect()
    }

    /// `Σ_a θ_a F_a`.
    pub fn expand(&self, theta: &DVector<T>) -> HermitianOperator<T> {
        let d = self.shape.total();
        let mut acc = CMatrix::zeros(d, d);
        for (f, &t) in self.elements.iter().zip(theta.iter()) {
            if t != T::zero() {
                acc += f.matrix() * creal(t);
            }
        }
        HermitianOperator::from_raw(acc)
    }

    /// Coordinates `tr(F_a X)` of an operator.
    pub fn coordinates(&self, x: &CMatrix<T>) -> DVector<T> {
        DVector::from_iterator(
            self.len(),
            self.elements.iter().map(|f| super::hs_inner(f.matrix(), x)),
        )
    }

    /// `max_ab |tr(F_a F_b) - δ_ab|`.
    pub fn orthonormality_error(&self) -> T {
        let mut err = T::zero();
        for (a, fa) in self.elements.iter().enumerate() {
            for (b, fb) in self.elements.iter().enumerate().skip(a) {
                let target = if a == b { T::one() } else { T::zero() };
                err = max(err, abs(fa.inner(fb) - target));
            }
        }
        err
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gell_mann_is_orthonormal_and_traceless() {
        for d in 2..=4 {
            let g = gell_mann::<f64>(d);
            assert_eq!(g.len(), d * d - 1);
            for (a, x) in g.iter().enumerate() {
                assert!(x.trace().abs() < 1e-15);
                for (b, y) in g.iter().enumerate() {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((x.inner(y) - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn two_qutrit_product_basis_sectors() {
        let shape = SubsystemShape::new(vec![3, 3]).unwrap();
        let b = OperatorBasis::<f64>::product(&shape);
        assert_eq!(b.len(), 80);
        assert!(b.is_complete());
        assert!(b.orthonormality_error() < 1e-12);
        assert_eq!(b.local_indices(0), (0..8).collect::<Vec<_>>());
        assert_eq!(b.local_indices(1), (8..16).collect::<Vec<_>>());
        assert_eq!(b.correlation_indices().len(), 64);
        for f in b.elements() {
            assert!(f.trace().abs() < 1e-12);
        }
    }

    #[test]
    fn tripartite_basis_is_complete() {
        let shape = SubsystemShape::new(vec![2, 2, 2]).unwrap();
        let b = OperatorBasis::<f64>::product(&shape);
        assert_eq!(b.len(), 63);
        assert!(b.orthonormality_error() < 1e-12);
        assert_eq!(b.correlation_indices().len(), 63 - 9);
    }

    #[test]
    fn coordinates_invert_expand() {
        let shape = SubsystemShape::new(vec![2, 3]).unwrap();
        let b = OperatorBasis::<f64>::product(&shape);
        let theta = DVector::from_fn(b.len(), |a, _| (a as f64 * 0.37).sin());
        let k = b.expand(&theta);
        let back = b.coordinates(k.matrix());
        assert!((back - theta).amax() < 1e-13);
    }

    #[test]
    fn from_elements_rejects_unnormalised() {
        let shape = SubsystemShape::new(vec![2]).unwrap();
        let z = HermitianOperator::<f64>::from_real_diagonal(&[1.0, -1.0]);
        let err =
            OperatorBasis::from_elements(shape.clone(), vec![z.clone()], vec![Sector::Local(0)]);
        assert!(err.is_err());
        let ok = OperatorBasis::from_elements(
            shape,
            vec![z.scale(1.0 / 2f64.sqrt())],
            vec![Sector::Local(0)],
        )
        .unwrap();
        assert!(!ok.is_complete());
    }
}
