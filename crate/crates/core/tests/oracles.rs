//! Finite-difference and closed-form oracles for the exponential-family and
//! constraint derivatives.

use nalgebra::DVector;
use qorigin::constraint::{
    constraint_gradient, marginal_entropy_sum, marginal_jacobian, ConstraintGeometry,
    GeometryOptions,
};
use qorigin::expfamily::{log_partition, params_from_state, ExpFamilyPoint, NaturalParams};
use qorigin::operators::{frechet_exp, matrix_exp, OperatorBasis, SubsystemShape};
use qorigin::sampling::{random_density_matrix, random_hermitian, random_vector, rng};
use qorigin::states::{regularized_origin, von_neumann_entropy, DensityMatrix};

fn basis(dims: &[usize]) -> OperatorBasis<f64> {
    OperatorBasis::product(&SubsystemShape::new(dims.to_vec()).unwrap())
}

fn central<F: Fn(&DVector<f64>) -> f64>(f: F, x: &DVector<f64>, a: usize, h: f64) -> f64 {
    let mut up = x.clone();
    let mut dn = x.clone();
    up[a] += h;
    dn[a] -= h;
    (f(&up) - f(&dn)) / (2.0 * h)
}

#[test]
fn mean_parameters_are_the_gradient_of_psi() {
    let mut r = rng(11);
    for dims in [&[2][..], &[3], &[2, 2], &[2, 3]] {
        let b = basis(dims);
        let theta = random_vector(b.len(), 0.7, &mut r);
        let p = ExpFamilyPoint::new(NaturalParams(theta.clone()), &b).unwrap();
        let psi = |t: &DVector<f64>| log_partition(&NaturalParams(t.clone()), &b).unwrap();
        for a in 0..b.len() {
            let fd = central(psi, &theta, a, 1e-5);
            assert!((fd - p.mean_params()[a]).abs() < 1e-9, "{dims:?} a={a}");
        }
    }
}

#[test]
fn frechet_exp_matches_finite_differences() {
    let mut r = rng(12);
    for d in [2, 3, 5] {
        let a = random_hermitian::<f64, _>(d, &mut r);
        let e = random_hermitian::<f64, _>(d, &mut r);
        let h = 1e-5;
        let up = matrix_exp(&a.add(&e.scale(h)));
        let dn = matrix_exp(&a.sub(&e.scale(h)));
        let fd = up.sub(&dn).scale(0.5 / h);
        let exact = frechet_exp(&a, &e).unwrap();
        let rel = exact.sub(&fd).frobenius_norm() / exact.frobenius_norm();
        assert!(rel < 1e-8, "d={d} rel={rel:e}");
    }
}

#[test]
fn frechet_exp_with_degenerate_spectrum() {
    // repeated eigenvalues exercise the divided-difference limit
    let mut r = rng(13);
    let a = qorigin::operators::HermitianOperator::from_real_diagonal(&[0.3, 0.3, -1.0, 0.3]);
    let e = random_hermitian::<f64, _>(4, &mut r);
    let h = 1e-5;
    let fd = matrix_exp(&a.add(&e.scale(h)))
        .sub(&matrix_exp(&a.sub(&e.scale(h))))
        .scale(0.5 / h);
    let exact = frechet_exp(&a, &e).unwrap();
    assert!(exact.sub(&fd).frobenius_norm() / exact.frobenius_norm() < 1e-8);
}

#[test]
fn psi_is_convex_along_lines() {
    let mut r = rng(14);
    let b = basis(&[2, 2]);
    for _ in 0..20 {
        let theta = random_vector(b.len(), 1.0, &mut r);
        let dir = random_vector(b.len(), 1.0, &mut r);
        let psi = |s: f64| log_partition(&NaturalParams(&theta + &dir * s), &b).unwrap();
        for k in -5..=5 {
            let s = 0.2 * k as f64;
            let second = psi(s + 0.05) - 2.0 * psi(s) + psi(s - 0.05);
            assert!(second > -1e-12, "second difference {second:e}");
        }
    }
}

#[test]
fn entropy_is_concave_under_mixing() {
    let mut r = rng(15);
    let shape = SubsystemShape::new(vec![2, 3]).unwrap();
    for _ in 0..20 {
        let a: DensityMatrix<f64> = random_density_matrix(&shape, &mut r);
        let b: DensityMatrix<f64> = random_density_matrix(&shape, &mut r);
        for &l in &[0.1, 0.5, 0.9] {
            let mix = DensityMatrix::new(
                a.operator()
                    .scale(l)
                    .add(&b.operator().scale(1.0 - l))
                    .into_matrix(),
                shape.clone(),
            )
            .unwrap();
            let lhs = von_neumann_entropy(&mix);
            let rhs = l * von_neumann_entropy(&a) + (1.0 - l) * von_neumann_entropy(&b);
            assert!(lhs >= rhs - 1e-12);
        }
    }
}

#[test]
fn constraint_gradient_matches_finite_differences() {
    let mut r = rng(16);
    for dims in [&[2, 2][..], &[2, 3], &[2, 2, 2]] {
        let b = basis(dims);
        let theta = random_vector(b.len(), 0.6, &mut r);
        let p = ExpFamilyPoint::new(NaturalParams(theta.clone()), &b).unwrap();
        let grad = constraint_gradient(&p).unwrap();
        let c = |t: &DVector<f64>| {
            marginal_entropy_sum(&ExpFamilyPoint::new(NaturalParams(t.clone()), &b).unwrap())
        };
        for a in 0..b.len() {
            let fd = central(c, &theta, a, 1e-5);
            assert!(
                (fd - grad[a]).abs() < 1e-7,
                "{dims:?} a={a}: {fd} vs {}",
                grad[a]
            );
        }
    }
}

#[test]
fn marginal_jacobian_matches_finite_differences() {
    let mut r = rng(17);
    let b = basis(&[2, 3]);
    let theta = random_vector(b.len(), 0.5, &mut r);
    let p = ExpFamilyPoint::new(NaturalParams(theta.clone()), &b).unwrap();
    let m = marginal_jacobian(&p);
    let h = 1e-5;
    for a in 0..b.len() {
        let mut up = theta.clone();
        let mut dn = theta.clone();
        up[a] += h;
        dn[a] -= h;
        let col = |t: DVector<f64>| -> Vec<f64> {
            let q = ExpFamilyPoint::new(NaturalParams(t), &b).unwrap();
            q.state()
                .marginals()
                .iter()
                .flat_map(|s| qorigin::operators::hermitian_vec(s.matrix()))
                .collect()
        };
        let (cu, cd) = (col(up), col(dn));
        for k in 0..m.nrows() {
            let fd = (cu[k] - cd[k]) / (2.0 * h);
            assert!((fd - m[(k, a)]).abs() < 1e-8);
        }
    }
}

#[test]
fn hessian_at_saturation_is_minus_d_mtm() {
    let b = basis(&[3, 3]);
    let rho = regularized_origin::<f64>(b.shape(), 0.1).unwrap();
    let p = ExpFamilyPoint::new(params_from_state(&rho, &b).unwrap(), &b).unwrap();
    let opts = GeometryOptions {
        hessian: true,
        ..GeometryOptions::default()
    };
    let g = ConstraintGeometry::compute(&p, &opts).unwrap();
    let exact = -(g.jacobian.transpose() * &g.jacobian) * 3.0;
    let err = (g.hessian.unwrap() - exact).amax();
    assert!(err < 1e-8, "{err:e}");
}
