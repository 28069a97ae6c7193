use qorigin::expfamily::{ExpFamilyPoint, NaturalParams};
use qorigin::flow::{integrate, Clock, FlowConfig};
use qorigin::operators::{OperatorBasis, SubsystemShape};
use qorigin::states::{lme_origin, marginal_entropies, von_neumann_entropy};

#[test]
fn f32_pipeline_agrees_with_f64() {
    let shape = SubsystemShape::bipartite(2, 2).unwrap();
    let (b32, b64) = (
        OperatorBasis::<f32>::product(&shape),
        OperatorBasis::<f64>::product(&shape),
    );
    let theta: Vec<f64> = (0..b64.len())
        .map(|a| 0.3 * ((a as f64) * 0.7).sin())
        .collect();
    let p64 = ExpFamilyPoint::new(NaturalParams(theta.clone().into()), &b64).unwrap();
    let p32 = ExpFamilyPoint::new(
        NaturalParams(theta.iter().map(|&x| x as f32).collect::<Vec<_>>().into()),
        &b32,
    )
    .unwrap();
    assert!((p32.entropy() as f64 - p64.entropy()).abs() < 1e-5);
    let (g32, g64) = (p32.bkm_metric().unwrap(), p64.bkm_metric().unwrap());
    let err = g32
        .iter()
        .zip(g64.iter())
        .map(|(a, b)| (*a as f64 - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-5, "{err:e}");
}

#[test]
fn f32_origin_and_flow() {
    let shape = SubsystemShape::bipartite(2, 2).unwrap();
    let rho = lme_origin::<f32>(&shape).unwrap();
    assert!(von_neumann_entropy(&rho).abs() < 1e-5);
    assert!(marginal_entropies(&rho)
        .iter()
        .all(|h| (h - 2f32.ln()).abs() < 1e-5));

    let b = OperatorBasis::<f32>::product(&shape);
    let mut theta = vec![0f32; b.len()];
    for a in b.correlation_indices() {
        theta[a] = -0.4;
    }
    let mut cfg = FlowConfig::<f32>::default();
    cfg.step.atol = 1e-5;
    cfg.step.rtol = 1e-5;
    cfg.rate_min = 1e-5;
    cfg.conservation_tol = 1e-4;
    let traj = integrate(&NaturalParams(theta.into()), &b, &cfg, Clock::GameTime, 2.0).unwrap();
    assert!(traj.last().entropy > traj.first().entropy);
    assert!(traj.constraint_drift() < 1e-4);
}
