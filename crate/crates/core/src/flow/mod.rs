//! Constrained entropy-ascent flows on the natural parameters.
//!
//! The dissipative sector is `θ̇ = −Π_marg θ` in game time; entropy time
//! rescales it by `c/(θᵀGΠθ)` so that `dH/dt = c`. An optional reversible
//! sector adds the commutator action of a local generator `ξ = Σ_i ξ_i ⊗ I`.

mod integrator;
mod trajectory;

pub use integrator::StepControl;
pub use trajectory::{linear_fit, Clock, RunSummary, Sample, TerminalStatus, Trajectory};

use nalgebra::{Cholesky, DVector};
use thiserror::Error;

use crate::constraint::{ConstraintGeometry, GeometryOptions};
use crate::error::{Error, Result};
use crate::expfamily::{ExpFamilyPoint, NaturalParams};
use crate::operators::{
    embed_local, neg_i_commutator, partial_trace_matrix, HermitianOperator, OperatorBasis,
    SubsystemShape,
};
use crate::scalar::{abs, creal, max, Real};
use integrator::{dopri_step, Attempt};

/// A Hamiltonian-like generator of the form `Σ_i ξ_i ⊗ I_{ī}`.
#[derive(Debug, Clone)]
pub struct LocalGenerator<T: Real> {
    shape: SubsystemShape,
    terms: Vec<(usize, HermitianOperator<T>)>,
    full: HermitianOperator<T>,
}

impl<T: Real> LocalGenerator<T> {
    pub fn new(shape: &SubsystemShape, terms: Vec<(usize, HermitianOperator<T>)>) -> Result<Self> {
        let d = shape.total();
        let mut full = HermitianOperator::zeros(d);
        for (i, op) in &terms {
            full = full.add(&embed_local(op, shape, *i)?);
        }
        Ok(Self {
            shape: shape.clone(),
            terms,
            full,
        })
    }

    /// Splits a global operator into local terms, rejecting anything with a
    /// correlation component.
    pub fn from_operator(op: &HermitianOperator<T>, shape: &SubsystemShape) -> Result<Self> {
        let d = shape.total();
        if op.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: op.dim(),
            });
        }
        let mean = op.trace() / T::lit(d as f64);
        let mut terms = Vec::with_capacity(shape.n_subsystems());
        for i in 0..shape.n_subsystems() {
            let di = shape.dim(i);
            let reduced = partial_trace_matrix(op.matrix(), shape, i)?
                * creal(T::lit(di as f64) / T::lit(d as f64));
            let local = HermitianOperator::symmetrized(reduced).traceless_part();
            terms.push((i, local));
        }
        let rebuilt = Self::new(shape, terms)?;
        let residual = op
            .sub(&rebuilt.full)
            .sub(&HermitianOperator::identity(d).scale(mean))
            .frobenius_norm();
        if residual > T::tol(1e-10) * max(T::one(), op.frobenius_norm()) {
            return Err(Error::NonLocalGenerator(residual.as_f64()));
        }
        // keep the identity component; it generates nothing but matches `op`
        let mut out = rebuilt;
        out.full = op.clone();
        Ok(out)
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn terms(&self) -> &[(usize, HermitianOperator<T>)] {
        &self.terms
    }

    pub fn operator(&self) -> &HermitianOperator<T> {
        &self.full
    }
}

/// Parameters of one flow integration.
#[derive(Debug, Clone)]
pub struct FlowConfig<T: Real> {
    /// Entropy production per unit entropy time.
    pub c: T,
    pub step: StepControl<T>,
    pub max_steps: usize,
    /// Runs stop once `θᵀGΠθ` drops below this.
    pub rate_min: T,
    /// Include the projected dissipative term.
    pub dissipative: bool,
    pub generator: Option<LocalGenerator<T>>,
    /// Extra multiplier on the reversible term (1 reproduces the GENERIC
    /// form exactly). Experimental.
    pub reversible_rate: T,
    /// Largest tolerated `|C(s) − C(0)|` before the run is aborted.
    pub conservation_tol: T,
    pub geometry: GeometryOptions<T>,
}

impl<T: Real> Default for FlowConfig<T> {
    fn default() -> Self {
        Self {
            c: T::one(),
            step: StepControl {
                initial_step: T::lit(1e-3),
                min_step: T::lit(1e-14),
                max_step: T::lit(f64::INFINITY),
                atol: T::lit(1e-8),
                rtol: T::lit(1e-8),
            },
            max_steps: 100_000,
            rate_min: T::lit(1e-10),
            dissipative: true,
            generator: None,
            reversible_rate: T::one(),
            conservation_tol: T::lit(1e-6),
            geometry: GeometryOptions::default(),
        }
    }
}

impl<T: Real> FlowConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.c > T::zero()) {
            return bad("c must be positive");
        }
        if !(self.step.atol > T::zero() && self.step.rtol > T::zero()) {
            return bad("tolerances must be positive");
        }
        if !(self.step.initial_step > T::zero() && self.step.min_step > T::zero()) {
            return bad("step sizes must be positive");
        }
        if !(self.rate_min >= T::zero()) {
            return bad("rate_min must be nonnegative");
        }
        if !self.dissipative && self.generator.is_none() {
            return bad("flow has neither a dissipative nor a reversible sector");
        }
        Ok(())
    }
}

/// `−Π θ`.
pub fn dissipative_velocity<T: Real>(
    point: &ExpFamilyPoint<'_, T>,
    geometry: &ConstraintGeometry<T>,
) -> DVector<T> {
    -(&geometry.projector * point.theta_vec())
}

/// `dH/dτ = θᵀ G Π θ`.
pub fn entropy_production_rate<T: Real>(
    point: &ExpFamilyPoint<'_, T>,
    geometry: &ConstraintGeometry<T>,
) -> T {
    let theta = point.theta_vec();
    theta.dot(&(&geometry.metric * (&geometry.projector * theta)))
}

/// `−c Π θ / (θᵀGΠθ)`; fails at stationary points.
pub fn entropy_time_velocity<T: Real>(
    point: &ExpFamilyPoint<'_, T>,
    geometry: &ConstraintGeometry<T>,
    c: T,
    rate_min: T,
) -> Result<DVector<T>> {
    let rate = entropy_production_rate(point, geometry);
    if !(rate > rate_min) {
        return Err(Error::StationaryPoint(rate.as_f64()));
    }
    Ok(dissipative_velocity(point, geometry) * (c / rate))
}

/// Coordinates of `−i[ξ, K]`: the adjoint action on `θ`.
pub fn adjoint_action<T: Real>(
    point: &ExpFamilyPoint<'_, T>,
    xi: &LocalGenerator<T>,
) -> DVector<T> {
    let dk = neg_i_commutator(xi.operator(), point.generator());
    point.coordinates(dk.matrix())
}

/// Pushforward of `ρ̇ = −i[ξ, ρ]` to `θ̇ = G⁻¹ w`, `w_a = tr(F_a ρ̇)`.
pub fn reversible_velocity<T: Real>(
    point: &ExpFamilyPoint<'_, T>,
    xi: &LocalGenerator<T>,
) -> Result<DVector<T>> {
    if xi.shape() != point.basis().shape() {
        return Err(Error::Config(
            "generator shape differs from the family".into(),
        ));
    }
    let rho_dot = neg_i_commutator(xi.operator(), point.state().operator());
    let w = point.coordinates(rho_dot.matrix());
    let chol = Cholesky::new(point.bkm_metric()?.clone())
        .ok_or(Error::NumericalDegeneracy(f64::INFINITY))?;
    Ok(chol.solve(&w))
}

/// `(c/θᵀGΠθ) (−Πθ + ad_ξ θ)`, the entropy-time GENERIC field.
pub fn generic_velocity<T: Real>(
    point: &ExpFamilyPoint<'_, T>,
    geometry: &ConstraintGeometry<T>,
    config: &FlowConfig<T>,
) -> Result<DVector<T>> {
    let rate = entropy_production_rate(point, geometry);
    if !(rate > config.rate_min) {
        return Err(Error::StationaryPoint(rate.as_f64()));
    }
    let mut v = dissipative_velocity(point, geometry);
    if let Some(xi) = &config.generator {
        v += reversible_velocity(point, xi)? * config.reversible_rate;
    }
    Ok(v * (config.c / rate))
}

/// Per-evaluation diagnostics carried alongside the velocity.
#[derive(Debug, Clone)]
struct Diagnostics<T> {
    entropy: T,
    constraint: T,
    marginal_entropies: Vec<T>,
    rate: T,
}

/// Velocity in the chosen clock, with the other clock's rate appended.
fn evaluate<T: Real>(
    theta: &DVector<T>,
    basis: &OperatorBasis<T>,
    config: &FlowConfig<T>,
    clock: Clock,
    enforce_rate: bool,
) -> Result<(DVector<T>, Diagnostics<T>)> {
    let m = basis.len();
    let point = ExpFamilyPoint::new(NaturalParams(theta.rows(0, m).into_owned()), basis)?;
    let geometry = ConstraintGeometry::compute(&point, &config.geometry)?;
    let rate = entropy_production_rate(&point, &geometry);
    let mut v = if config.dissipative {
        dissipative_velocity(&point, &geometry)
    } else {
        DVector::zeros(m)
    };
    if let Some(xi) = &config.generator {
        v += reversible_velocity(&point, xi)? * config.reversible_rate;
    }
    let production = if config.dissipative { rate } else { T::zero() };
    let (v, other_clock) = match clock {
        Clock::GameTime => (v, production / config.c),
        Clock::EntropyTime => {
            // trial stages may dip below rate_min; only accepted samples
            // are tested against it
            if enforce_rate && !(rate > T::zero()) {
                return Err(Error::StationaryPoint(rate.as_f64()));
            }
            let dil = config.c / rate;
            (v * dil, dil)
        }
    };
    let mut out = DVector::zeros(m + 1);
    out.rows_mut(0, m).copy_from(&v);
    out[m] = other_clock;
    Ok((
        out,
        Diagnostics {
            entropy: point.entropy(),
            constraint: geometry.value,
            marginal_entropies: geometry.marginal_entropies.clone(),
            rate,
        },
    ))
}

/// Integration failures that still carry the samples gathered so far.
#[derive(Debug, Error)]
pub enum FlowError<T: Real> {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("step size underflow at step {}", .partial.len())]
    StiffRegion { partial: Box<Trajectory<T>> },
    #[error("constraint drift {drift:e} exceeds budget")]
    ConservationViolated {
        drift: f64,
        partial: Box<Trajectory<T>>,
    },
}

impl<T: Real> FlowError<T> {
    /// Samples gathered before the failure, if any.
    pub fn partial(&self) -> Option<&Trajectory<T>> {
        match self {
            Self::Core(_) => None,
            Self::StiffRegion { partial } | Self::ConservationViolated { partial, .. } => {
                Some(partial)
            }
        }
    }
}

fn make_sample<T: Real>(
    step: usize,
    clock: Clock,
    s: T,
    y: &DVector<T>,
    m: usize,
    diag: &Diagnostics<T>,
) -> Sample<T> {
    let theta = y.rows(0, m).into_owned();
    let (tau, t) = match clock {
        Clock::GameTime => (s, y[m]),
        Clock::EntropyTime => (y[m], s),
    };
    Sample {
        step,
        tau,
        t,
        theta_norm: theta.norm(),
        theta,
        entropy: diag.entropy,
        constraint: diag.constraint,
        marginal_entropies: diag.marginal_entropies.clone(),
        rate: diag.rate,
    }
}

/// Integrates from `start` for `duration` units of the chosen clock.
///
/// Stops early when the entropy production rate drops below
/// `config.rate_min` (dissipative runs) or after `config.max_steps`.
pub fn integrate<T: Real>(
    start: &NaturalParams<T>,
    basis: &OperatorBasis<T>,
    config: &FlowConfig<T>,
    clock: Clock,
    duration: T,
) -> std::result::Result<Trajectory<T>, FlowError<T>> {
    config.validate()?;
    if !(duration > T::zero()) {
        return Err(Error::Config("duration must be positive".into()).into());
    }
    if clock == Clock::EntropyTime && !config.dissipative {
        return Err(Error::Config("entropy time needs the dissipative sector".into()).into());
    }
    let m = basis.len();
    if start.0.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: start.0.len(),
        }
        .into());
    }

    let mut y = DVector::zeros(m + 1);
    y.rows_mut(0, m).copy_from(&start.0);
    let (mut dy, mut diag) = evaluate(&y, basis, config, clock, false)?;
    let c0 = diag.constraint;
    let mut traj = Trajectory {
        clock,
        samples: vec![make_sample(0, clock, T::zero(), &y, m, &diag)],
        status: TerminalStatus::Running,
    };
    let stationary = |d: &Diagnostics<T>| config.dissipative && !(d.rate > config.rate_min);
    if stationary(&diag) {
        traj.status = TerminalStatus::Stationary;
        return Ok(traj);
    }

    let mut rhs = |state: &DVector<T>| evaluate(state, basis, config, clock, true).ok();
    let mut s = T::zero();
    let mut h = config.step.initial_step;
    let mut steps = 0usize;
    loop {
        if s >= duration {
            traj.status = TerminalStatus::Completed;
            return Ok(traj);
        }
        if steps >= config.max_steps {
            traj.status = TerminalStatus::MaxSteps;
            return Ok(traj);
        }
        if h < config.step.min_step {
            traj.status = TerminalStatus::StiffRegion;
            return Err(FlowError::StiffRegion {
                partial: Box::new(traj),
            });
        }
        let remaining = duration - s;
        let last_step = h >= remaining;
        let h_try = if last_step { remaining } else { h };
        match dopri_step(&mut rhs, &y, &dy, h_try, m, &config.step) {
            Attempt::Accepted {
                y: y_new,
                dy: dy_new,
                payload,
                next_step,
            } => {
                steps += 1;
                s = if last_step { duration } else { s + h_try };
                y = y_new;
                dy = dy_new;
                diag = payload;
                h = next_step;
                traj.samples
                    .push(make_sample(steps, clock, s, &y, m, &diag));
                let drift = abs(diag.constraint - c0);
                if drift > config.conservation_tol {
                    traj.status = TerminalStatus::ConservationViolated;
                    return Err(FlowError::ConservationViolated {
                        drift: drift.as_f64(),
                        partial: Box::new(traj),
                    });
                }
                if stationary(&diag) {
                    traj.status = TerminalStatus::Stationary;
                    return Ok(traj);
                }
            }
            Attempt::Rejected { next_step } => h = next_step,
        }
    }
}
