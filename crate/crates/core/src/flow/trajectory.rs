use std::fmt;
use std::io::{self, Write};

use nalgebra::DVector;
use serde::Serialize;

use crate::scalar::Real;

/// Parametrisation of an integrated curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clock {
    /// Affine parameter `τ` of the projected flow.
    GameTime,
    /// Reparametrisation with `dH/dt = c`.
    EntropyTime,
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalStatus {
    /// Still integrating (per-sample marker).
    Running,
    /// Requested duration reached.
    Completed,
    /// Entropy production fell below the stationarity threshold.
    Stationary,
    /// Step budget exhausted.
    MaxSteps,
    /// Step size underflowed.
    StiffRegion,
    /// Constraint drift exceeded its budget.
    ConservationViolated,
}

impl fmt::Display for TerminalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Running => "running",
            Self::Completed => "completed",
            Self::Stationary => "stationary",
            Self::MaxSteps => "max-steps",
            Self::StiffRegion => "stiff-region",
            Self::ConservationViolated => "conservation-violated",
        };
        f.write_str(s)
    }
}

/// One accepted point of a trajectory.
#[derive(Debug, Clone)]
pub struct Sample<T: Real> {
    pub step: usize,
    pub tau: T,
    pub t: T,
    pub theta: DVector<T>,
    /// Joint entropy `H`.
    pub entropy: T,
    /// Marginal-entropy sum `C`.
    pub constraint: T,
    pub marginal_entropies: Vec<T>,
    /// `dH/dτ = θᵀGΠθ`.
    pub rate: T,
    pub theta_norm: T,
}

/// Ordered samples of one integrated flow.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub clock: Clock,
    pub samples: Vec<Sample<T>>,
    pub status: TerminalStatus,
}

/// Scalar digest of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    #[serde(rename = "H_initial")]
    pub h_initial: f64,
    #[serde(rename = "H_final")]
    pub h_final: f64,
    #[serde(rename = "C_drift_max")]
    pub c_drift_max: f64,
    pub slope_of_h_vs_t: f64,
    pub r_squared: f64,
    pub rate_initial: f64,
    pub rate_final: f64,
    pub tau_final: f64,
    pub t_final: f64,
    pub samples: usize,
    pub termination_status: TerminalStatus,
}

/// Least-squares fit `y ≈ slope x + intercept` and its `R²`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    (slope, intercept, r2)
}

impl<T: Real> Trajectory<T> {
    pub fn first(&self) -> &Sample<T> {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample<T> {
        self.samples
            .last()
            .expect("trajectory has its initial sample")
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `max |C(s) − C(0)|` over the samples.
    pub fn constraint_drift(&self) -> T {
        let c0 = self.first().constraint;
        self.samples.iter().fold(T::zero(), |acc, s| {
            let d = s.constraint - c0;
            let d = if d < T::zero() { -d } else { d };
            if d > acc {
                d
            } else {
                acc
            }
        })
    }

    /// Slope and `R²` of `H` regressed on entropy time.
    pub fn entropy_time_fit(&self) -> (f64, f64) {
        let t: Vec<f64> = self.samples.iter().map(|s| s.t.as_f64()).collect();
        let h: Vec<f64> = self.samples.iter().map(|s| s.entropy.as_f64()).collect();
        if t.len() < 2 {
            return (f64::NAN, f64::NAN);
        }
        let (slope, _, r2) = linear_fit(&t, &h);
        (slope, r2)
    }

    pub fn summary(&self) -> RunSummary {
        let (slope, r2) = self.entropy_time_fit();
        let first = self.first();
        let last = self.last();
        RunSummary {
            h_initial: first.entropy.as_f64(),
            h_final: last.entropy.as_f64(),
            c_drift_max: self.constraint_drift().as_f64(),
            slope_of_h_vs_t: slope,
            r_squared: r2,
            rate_initial: first.rate.as_f64(),
            rate_final: last.rate.as_f64(),
            tau_final: last.tau.as_f64(),
            t_final: last.t.as_f64(),
            samples: self.samples.len(),
            termination_status: self.status,
        }
    }

    /// Writes the CSV export; `scale` multiplies every entropy-valued column
    /// (1 for nats, `1/ln 2` for bits).
    pub fn write_csv<W: Write>(&self, mut w: W, scale: f64) -> io::Result<()> {
        let n = self.first().marginal_entropies.len();
        let mut header = String::from("step,tau,t,H,C");
        for i in 0..n {
            header.push_str(&format!(",h_{i}"));
        }
        header.push_str(",rate,theta_norm,status");
        writeln!(w, "{header}")?;
        let last = self.samples.len() - 1;
        for (k, s) in self.samples.iter().enumerate() {
            write!(
                w,
                "{},{},{},{},{}",
                s.step,
                s.tau.as_f64(),
                s.t.as_f64(),
                s.entropy.as_f64() * scale,
                s.constraint.as_f64() * scale
            )?;
            for h in &s.marginal_entropies {
                write!(w, ",{}", h.as_f64() * scale)?;
            }
            let status = if k == last {
                self.status
            } else {
                TerminalStatus::Running
            };
            writeln!(
                w,
                ",{},{},{}",
                s.rate.as_f64() * scale,
                s.theta_norm.as_f64(),
                status
            )?;
        }
        Ok(())
    }

    /// JSON document with the full parameter vector of every sample.
    pub fn theta_json(&self) -> serde_json::Value {
        let samples: Vec<serde_json::Value> = self
            .samples
            .iter()
            .map(|s| {
                serde_json::json!({
                    "step": s.step,
                    "tau": s.tau.as_f64(),
                    "t": s.t.as_f64(),
                    "theta": s.theta.iter().map(|x| x.as_f64()).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({
            "clock": self.clock,
            "status": self.status,
            "samples": samples,
        })
    }
}
