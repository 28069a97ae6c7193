use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use qorigin::classical::{obstruction_suite, quantum_witness, QuantumWitness};
use qorigin::constraint::{ConstraintGeometry, GeometryOptions};
use qorigin::expfamily::{params_from_state, ExpFamilyPoint, NaturalParams};
use qorigin::flow::{integrate, Clock, FlowError, RunSummary, Trajectory};
use qorigin::linalg::{principal_angles, symmetric_eigen};
use qorigin::modular::{gibbs_lock_residual, modular_energy_sum, modular_triviality, GibbsFamily};
use qorigin::operators::OperatorBasis;
use qorigin::sampling::{random_density_matrix, random_hermitian, rng};
use qorigin::states::{marginal_entropies, regularized_origin, von_neumann_entropy, DensityMatrix};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, StartKind};

/// A failed mode-internal assertion.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub check: String,
    pub observed: f64,
    pub limit: f64,
}

/// What a command produced: a JSON report plus any failed assertions.
pub struct Report {
    pub body: Value,
    pub failures: Vec<Failure>,
}

#[derive(Default)]
struct Checks(Vec<Failure>);

impl Checks {
    fn at_most(&mut self, check: impl Into<String>, observed: f64, limit: f64) {
        if !(observed <= limit) {
            self.0.push(Failure {
                check: check.into(),
                observed,
                limit,
            });
        }
    }

    fn equal(&mut self, check: impl Into<String>, observed: usize, expected: usize) {
        if observed != expected {
            self.0.push(Failure {
                check: check.into(),
                observed: observed as f64,
                limit: expected as f64,
            });
        }
    }
}

pub struct Units {
    /// Multiplier applied to entropy-valued outputs.
    pub scale: f64,
    pub name: &'static str,
}

impl Units {
    pub fn new(bits: bool) -> Self {
        if bits {
            Self {
                scale: 1.0 / std::f64::consts::LN_2,
                name: "bits",
            }
        } else {
            Self {
                scale: 1.0,
                name: "nats",
            }
        }
    }
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut f =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn starting_state(cfg: &RunConfig, basis: &OperatorBasis<f64>) -> Result<NaturalParams<f64>> {
    let rho = match cfg.start {
        StartKind::Origin => regularized_origin(basis.shape(), cfg.eps)?,
        StartKind::Random => random_density_matrix(basis.shape(), &mut rng(cfg.seed)),
    };
    Ok(params_from_state(&rho, basis)?)
}

fn scaled_summary(s: &RunSummary, u: &Units) -> RunSummary {
    RunSummary {
        h_initial: s.h_initial * u.scale,
        h_final: s.h_final * u.scale,
        c_drift_max: s.c_drift_max * u.scale,
        slope_of_h_vs_t: s.slope_of_h_vs_t * u.scale,
        rate_initial: s.rate_initial * u.scale,
        rate_final: s.rate_final * u.scale,
        ..s.clone()
    }
}

fn write_trajectory(out: &Path, traj: &Trajectory<f64>, cfg: &RunConfig, u: &Units) -> Result<()> {
    let f = File::create(out.join("trajectory.csv"))?;
    let mut w = BufWriter::new(f);
    traj.write_csv(&mut w, u.scale)?;
    w.flush()?;
    if cfg.write_theta {
        write_json(&out.join("theta.json"), &traj.theta_json())?;
    }
    Ok(())
}

pub fn simulate(cfg: &RunConfig, out: &Path, u: &Units) -> Result<Report> {
    let shape = cfg.shape()?;
    let basis = OperatorBasis::product(&shape);
    let flow = cfg.flow_config(&shape)?;
    let start = starting_state(cfg, &basis)?;
    let duration = match (cfg.duration, cfg.clock) {
        (Some(d), _) => d,
        (None, Clock::GameTime) => 1e6,
        (None, Clock::EntropyTime) => {
            let h0 = ExpFamilyPoint::new(start.clone(), &basis)?.entropy();
            shape.max_marginal_entropy::<f64>() - h0
        }
    };
    let mut checks = Checks::default();
    let traj = match integrate(&start, &basis, &flow, cfg.clock, duration) {
        Ok(t) => t,
        Err(FlowError::Core(e)) => return Err(e.into()),
        Err(e) => {
            let partial = e.partial().expect("integration failures carry samples");
            write_trajectory(out, partial, cfg, u)?;
            let drift = partial.constraint_drift();
            checks.at_most("integration completed", 1.0, 0.0);
            checks.at_most("constraint drift", drift, cfg.conservation_tol);
            let body = json!({
                "units": u.name,
                "error": e.to_string(),
                "summary": scaled_summary(&partial.summary(), u),
            });
            write_json(&out.join("summary.json"), &body)?;
            return Ok(Report {
                body,
                failures: checks.0,
            });
        }
    };
    write_trajectory(out, &traj, cfg, u)?;
    let summary = traj.summary();
    checks.at_most(
        "constraint drift",
        summary.c_drift_max,
        cfg.conservation_tol,
    );
    if cfg.clock == Clock::EntropyTime && traj.len() > 2 {
        checks.at_most(
            "relative deviation of entropy-time slope from c",
            (summary.slope_of_h_vs_t / cfg.c - 1.0).abs(),
            cfg.slope_tol,
        );
    }
    let body = json!({
        "units": u.name,
        "clock": cfg.clock,
        "shape": cfg.shape,
        "summary": scaled_summary(&summary, u),
    });
    write_json(&out.join("summary.json"), &body)?;
    Ok(Report {
        body,
        failures: checks.0,
    })
}

#[derive(Serialize)]
struct OriginRow {
    eps: f64,
    constraint: f64,
    gradient_norm: f64,
    hessian_max_eigenvalue: f64,
    hessian_min_eigenvalue: f64,
    kernel_dim: usize,
    soft_mode_count: usize,
    max_principal_angle: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    stiffness: Option<Vec<f64>>,
}

fn origin_row(
    cfg: &RunConfig,
    basis: &OperatorBasis<f64>,
    eps: f64,
    keep_spectrum: bool,
) -> Result<OriginRow> {
    let rho = regularized_origin(basis.shape(), eps)?;
    let point = ExpFamilyPoint::from_state(&rho, basis)?;
    let opts = GeometryOptions {
        kernel_rel_tol: cfg.kernel_rel_tol,
        hessian: true,
        ..GeometryOptions::default()
    };
    let geom = ConstraintGeometry::compute(&point, &opts)?;
    let hess = geom.hessian.as_ref().expect("hessian requested");
    let (eigs, _) = symmetric_eigen(hess);
    let spec = geom.stiffness()?;
    let soft = spec.soft_modes(cfg.soft_threshold);
    let angle = principal_angles(&soft, &geom.kernel)
        .into_iter()
        .fold(0.0, f64::max);
    Ok(OriginRow {
        eps,
        constraint: geom.value,
        gradient_norm: geom.gradient.norm(),
        hessian_max_eigenvalue: eigs.max(),
        hessian_min_eigenvalue: eigs.min(),
        kernel_dim: geom.kernel_dim(),
        soft_mode_count: soft.ncols(),
        max_principal_angle: angle,
        stiffness: keep_spectrum.then(|| spec.values.iter().copied().collect()),
    })
}

fn saturation_sweep(cfg: &RunConfig, keep_spectrum: bool, name: &str) -> Result<Report> {
    let shape = cfg.shape()?;
    if shape.n_subsystems() != 2 || shape.dim(0) != shape.dim(1) {
        anyhow::bail!("{name} needs a bipartite shape with equal dimensions");
    }
    let basis = OperatorBasis::product(&shape);
    let rows: Vec<OriginRow> = cfg
        .eps_sweep
        .par_iter()
        .map(|&eps| origin_row(cfg, &basis, eps, keep_spectrum))
        .collect::<Result<_>>()?;
    let mut checks = Checks::default();
    let dim0 = rows.first().map(|r| r.kernel_dim).unwrap_or(0);
    let mut by_eps = serde_json::Map::new();
    for r in &rows {
        checks.at_most(
            format!("gradient norm at eps={}", r.eps),
            r.gradient_norm,
            1e-8,
        );
        checks.at_most(
            format!("hessian max eigenvalue at eps={}", r.eps),
            r.hessian_max_eigenvalue,
            1e-6,
        );
        checks.equal(
            format!("kernel dimension at eps={}", r.eps),
            r.kernel_dim,
            dim0,
        );
        checks.equal(
            format!("soft-mode count at eps={}", r.eps),
            r.soft_mode_count,
            r.kernel_dim,
        );
        checks.at_most(
            format!("principal angle at eps={}", r.eps),
            r.max_principal_angle,
            1e-3,
        );
        by_eps.insert(r.eps.to_string(), serde_json::to_value(r)?);
    }
    Ok(Report {
        body: json!({ "shape": cfg.shape, "soft_threshold": cfg.soft_threshold, "eps": by_eps }),
        failures: checks.0,
    })
}

pub fn origin_analysis(cfg: &RunConfig) -> Result<Report> {
    saturation_sweep(cfg, false, "origin-analysis")
}

pub fn stiffness(cfg: &RunConfig) -> Result<Report> {
    saturation_sweep(cfg, true, "stiffness")
}

pub fn obstruction_check(cfg: &RunConfig, u: &Units) -> Result<Report> {
    cfg.validate_common()?;
    let suite = obstruction_suite::<f64>(cfg.samples, cfg.max_alphabet, cfg.slack, cfg.seed)?;
    let witnesses: Vec<QuantumWitness<f64>> = cfg
        .witness_q
        .par_iter()
        .map(|&q| quantum_witness(q))
        .collect::<qorigin::Result<_>>()?;
    let mut checks = Checks::default();
    checks.at_most(
        "H(X|Y) >= 0 violations",
        suite.conditional_violations as f64,
        0.0,
    );
    checks.at_most(
        "I <= min(h1, h2) violations",
        suite.mutual_information_violations as f64,
        0.0,
    );
    let witness_json: Vec<Value> = witnesses
        .iter()
        .map(|w| {
            if !w.violates_classical_bound {
                checks.at_most(
                    format!("quantum witness q={} exceeds classical cap", w.q),
                    1.0,
                    0.0,
                );
            }
            json!({
                "q": w.q,
                "joint_entropy": w.joint_entropy * u.scale,
                "h1": w.h1 * u.scale,
                "h2": w.h2 * u.scale,
                "multi_information": w.multi_information * u.scale,
                "classical_cap": w.classical_cap * u.scale,
                "violates_classical_bound": w.violates_classical_bound,
            })
        })
        .collect();
    Ok(Report {
        body: json!({
            "units": u.name,
            "classical": {
                "samples": suite.samples,
                "checks": 2 * suite.samples,
                "max_rows": suite.max_rows,
                "max_cols": suite.max_cols,
                "conditional_violations": suite.conditional_violations,
                "mutual_information_violations": suite.mutual_information_violations,
                "worst_conditional": suite.worst_conditional * u.scale,
                "worst_mutual_information_excess": suite.worst_mutual_information_excess * u.scale,
            },
            "quantum_witnesses": witness_json,
        }),
        failures: checks.0,
    })
}

pub fn gibbs_check(cfg: &RunConfig, u: &Units) -> Result<Report> {
    let shape = cfg.shape()?;
    let mut checks = Checks::default();

    // Confined regime: regularised origins have scalar modular Hamiltonians.
    let confined: Vec<Value> = cfg
        .eps_sweep
        .iter()
        .map(|&eps| -> Result<Value> {
            let rho = regularized_origin::<f64>(&shape, eps)?;
            let trivial = modular_triviality(&rho)?;
            let energy = modular_energy_sum(&rho)?;
            let sum: f64 = marginal_entropies(&rho).iter().sum();
            checks.at_most(format!("modular triviality at eps={eps}"), trivial, 1e-8);
            checks.at_most(
                format!("modular identity at eps={eps}"),
                (energy - sum).abs(),
                1e-10,
            );
            Ok(json!({
                "eps": eps,
                "max_modular_deviation": trivial,
                "modular_energy_sum": energy * u.scale,
                "marginal_entropy_sum": sum * u.scale,
            }))
        })
        .collect::<Result<_>>()?;

    // Planted Gibbs marginals: draw all instances serially, fit in parallel.
    let mut r = rng(cfg.seed);
    let d = cfg.local_dim;
    let instances: Vec<(f64, _)> = (0..cfg.planted)
        .map(|_| {
            let h = random_hermitian::<f64, _>(d, &mut r);
            (r.random_range(-cfg.beta_range..=cfg.beta_range), h)
        })
        .collect();
    let fits: Vec<Value> = instances
        .par_iter()
        .map(|(beta, h)| -> Result<Value> {
            let family = GibbsFamily::new(h.clone(), *beta);
            let rho: DensityMatrix<f64> = family.state();
            let fit = gibbs_lock_residual(&rho, h)?;
            Ok(json!({
                "beta": beta,
                "beta_star": fit.beta_star,
                "residual": fit.residual,
                "entropy": von_neumann_entropy(&rho) * u.scale,
            }))
        })
        .collect::<Result<_>>()?;
    for f in &fits {
        let err = (f["beta"].as_f64().unwrap() - f["beta_star"].as_f64().unwrap()).abs();
        checks.at_most("planted beta recovery", err, 1e-6);
    }
    Ok(Report {
        body: json!({ "units": u.name, "confined": confined, "planted": fits }),
        failures: checks.0,
    })
}
