//! Shannon entropies of two-variable joint distributions and the classical
//! obstruction to a zero-entropy state with nonzero marginal entropies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::SubsystemShape;
use crate::scalar::{abs, min, Real};
use crate::states::{entropy_of_spectrum, lme_origin, marginal_entropies, von_neumann_entropy};

/// Joint probability table `p(x, y)` over finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution<T: Real> {
    table: Vec<Vec<T>>,
}

impl<T: Real> JointDistribution<T> {
    pub fn new(table: Vec<Vec<T>>) -> Result<Self> {
        let cols = table.first().map_or(0, Vec::len);
        if cols == 0 || table.iter().any(|r| r.len() != cols) {
            return Err(Error::Config(
                "joint table must be rectangular and nonempty".into(),
            ));
        }
        if table
            .iter()
            .flatten()
            .any(|&p| p < T::zero() || !p.is_finite())
        {
            return Err(Error::OutOfRange(
                "negative or non-finite probability".into(),
            ));
        }
        let total = table.iter().flatten().fold(T::zero(), |a, &p| a + p);
        if abs(total - T::one()) > T::tol(1e-12) {
            return Err(Error::OutOfRange(format!("table sums to {total}")));
        }
        Ok(Self { table })
    }

    /// Point mass on cell `(x, y)`.
    pub fn point_mass(rows: usize, cols: usize, x: usize, y: usize) -> Self {
        let mut table = vec![vec![T::zero(); cols]; rows];
        table[x][y] = T::one();
        Self { table }
    }

    pub fn uniform(rows: usize, cols: usize) -> Self {
        let p = T::one() / T::lit((rows * cols) as f64);
        Self {
            table: vec![vec![p; cols]; rows],
        }
    }

    pub fn rows(&self) -> usize {
        self.table.len()
    }

    pub fn cols(&self) -> usize {
        self.table[0].len()
    }

    pub fn table(&self) -> &[Vec<T>] {
        &self.table
    }

    pub fn marginal_x(&self) -> Vec<T> {
        self.table
            .iter()
            .map(|r| r.iter().fold(T::zero(), |a, &p| a + p))
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<T> {
        (0..self.cols())
            .map(|y| self.table.iter().fold(T::zero(), |a, r| a + r[y]))
            .collect()
    }
}

/// Marginal, joint and derived entropies of a joint table (nats).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShannonEntropies<T> {
    pub h1: T,
    pub h2: T,
    pub joint: T,
    /// `h1 + h2 - joint`.
    pub mutual_information: T,
    /// `joint - h2`, the entropy of the first variable given the second.
    pub conditional_1_given_2: T,
}

pub fn shannon_entropies<T: Real>(j: &JointDistribution<T>) -> ShannonEntropies<T> {
    let h1 = entropy_of_spectrum(&j.marginal_x());
    let h2 = entropy_of_spectrum(&j.marginal_y());
    let cells: Vec<T> = j.table.iter().flatten().copied().collect();
    let joint = entropy_of_spectrum(&cells);
    ShannonEntropies {
        h1,
        h2,
        joint,
        mutual_information: h1 + h2 - joint,
        conditional_1_given_2: joint - h2,
    }
}

/// Outcome of checking one table against the classical obstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObstructionCertificate<T> {
    pub entropies: ShannonEntropies<T>,
    /// `joint <= eta`.
    pub below_threshold: bool,
    /// Upper bound on `h1 + h2` implied by `joint <= eta`: each marginal
    /// entropy is at most the joint entropy, so `2 eta`.
    pub marginal_sum_bound: T,
    /// `h1 + h2 <= marginal_sum_bound` (only meaningful when below threshold).
    pub marginal_sum_certified: bool,
    /// Table is a single point mass.
    pub point_mass: bool,
    /// `h1 - mutual_information`, must be nonnegative.
    pub conditional_slack: T,
    /// `min(h1, h2) - mutual_information`, must be nonnegative.
    pub min_marginal_slack: T,
}

impl<T: Real> ObstructionCertificate<T> {
    /// Whether the chain-rule inequalities hold within `slack`.
    pub fn inequalities_hold(&self, slack: T) -> bool {
        self.conditional_slack >= -slack && self.min_marginal_slack >= -slack
    }
}

/// Checks the implications `H12 <= eta ⇒ h1 + h2 <= 2 eta` (so `H12 = 0` forces
/// `h1 = h2 = 0`) and the bound `I <= min(h1, h2)`.
pub fn classical_origin_infeasible<T: Real>(
    j: &JointDistribution<T>,
    eta: T,
) -> Result<ObstructionCertificate<T>> {
    if eta < T::zero() {
        return Err(Error::OutOfRange(format!("eta = {eta} < 0")));
    }
    let e = shannon_entropies(j);
    let below = e.joint <= eta;
    let bound = eta + eta;
    let point_mass = j.table.iter().flatten().filter(|&&p| p > T::zero()).count() == 1;
    Ok(ObstructionCertificate {
        entropies: e,
        below_threshold: below,
        marginal_sum_bound: bound,
        marginal_sum_certified: !below || e.h1 + e.h2 <= bound + T::tol(1e-12),
        point_mass,
        conditional_slack: e.conditional_1_given_2,
        min_marginal_slack: min(e.h1, e.h2) - e.mutual_information,
    })
}

/// Natural parameter and cumulant of a Bernoulli variable:
/// `θ = log(p/(1-p))`, `ψ = log(1 + e^θ)`.
pub fn bernoulli_chart<T: Real>(p: T) -> Result<(T, T)> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::OutOfRange(format!("p = {p} not in (0,1)")));
    }
    let theta = (p / (T::one() - p)).ln();
    // log(1 + e^θ) = -log(1 - p)
    let psi = -(T::one() - p).ln();
    Ok((theta, psi))
}

/// Quantum counterpart of the obstruction at the maximally entangled `q ⊗ q`
/// origin: zero joint entropy yet `I = 2 log q > min(h1, h2) = log q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantumWitness<T> {
    pub q: usize,
    pub joint_entropy: T,
    pub h1: T,
    pub h2: T,
    pub multi_information: T,
    pub classical_cap: T,
    pub violates_classical_bound: bool,
}

pub fn quantum_witness<T: Real>(q: usize) -> Result<QuantumWitness<T>> {
    let shape = SubsystemShape::bipartite(q, q)?;
    let rho = lme_origin::<T>(&shape)?;
    let joint = von_neumann_entropy(&rho);
    let h = marginal_entropies(&rho);
    let mi = h[0] + h[1] - joint;
    let cap = min(h[0], h[1]);
    Ok(QuantumWitness {
        q,
        joint_entropy: joint,
        h1: h[0],
        h2: h[1],
        multi_information: mi,
        classical_cap: cap,
        violates_classical_bound: mi > cap + T::tol(1e-12),
    })
}

/// Aggregate of the classical inequality suite over random tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObstructionSuite {
    pub samples: usize,
    pub max_rows: usize,
    pub max_cols: usize,
    pub conditional_violations: usize,
    pub mutual_information_violations: usize,
    /// Most negative `H(X|Y)` seen (0 if none negative).
    pub worst_conditional: f64,
    /// Largest `I - min(h1, h2)` seen (0 if none positive).
    pub worst_mutual_information_excess: f64,
}

/// Runs both chain-rule inequalities over `samples` Dirichlet tables with
/// alphabet sizes drawn uniformly from `2..=max_alphabet`.
pub fn obstruction_suite<T: Real>(
    samples: usize,
    max_alphabet: usize,
    slack: T,
    seed: u64,
) -> Result<ObstructionSuite> {
    use rand::Rng;
    if max_alphabet < 2 {
        return Err(Error::Config("alphabet size must be at least 2".into()));
    }
    let mut rng = crate::sampling::rng(seed);
    let mut out = ObstructionSuite {
        samples,
        max_rows: 0,
        max_cols: 0,
        conditional_violations: 0,
        mutual_information_violations: 0,
        worst_conditional: 0.0,
        worst_mutual_information_excess: 0.0,
    };
    for _ in 0..samples {
        let rows = rng.random_range(2..=max_alphabet);
        let cols = rng.random_range(2..=max_alphabet);
        out.max_rows = out.max_rows.max(rows);
        out.max_cols = out.max_cols.max(cols);
        let j = crate::sampling::random_joint_table::<T, _>(rows, cols, &mut rng);
        let cert = classical_origin_infeasible(&j, T::zero())?;
        if cert.conditional_slack < -slack {
            out.conditional_violations += 1;
        }
        if cert.min_marginal_slack < -slack {
            out.mutual_information_violations += 1;
        }
        out.worst_conditional = out.worst_conditional.min(cert.conditional_slack.as_f64());
        out.worst_mutual_information_excess = out
            .worst_mutual_information_excess
            .max(-cert.min_marginal_slack.as_f64());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn uniform_table_is_independent() {
        let e = shannon_entropies(&JointDistribution::<f64>::uniform(2, 2));
        assert!((e.h1 - LN2).abs() < 1e-15);
        assert!((e.h2 - LN2).abs() < 1e-15);
        assert!((e.joint - 2.0 * LN2).abs() < 1e-15);
        assert!(e.mutual_information.abs() < 1e-15);
    }

    #[test]
    fn perfectly_correlated_table_saturates_bound() {
        let j = JointDistribution::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let e = shannon_entropies(&j);
        assert!((e.mutual_information - LN2).abs() < 1e-15);
        assert!((e.mutual_information - e.h1.min(e.h2)).abs() < 1e-15);
        assert!(e.conditional_1_given_2.abs() < 1e-15);
    }

    #[test]
    fn point_mass_has_zero_entropies_and_is_certified() {
        let j = JointDistribution::<f64>::point_mass(3, 4, 1, 2);
        let c = classical_origin_infeasible(&j, 0.0).unwrap();
        assert_eq!(c.entropies.h1, 0.0);
        assert_eq!(c.entropies.h2, 0.0);
        assert_eq!(c.entropies.joint, 0.0);
        assert!(c.below_threshold && c.point_mass && c.marginal_sum_certified);
        assert_eq!(c.marginal_sum_bound, 0.0);
    }

    #[test]
    fn near_deterministic_table_has_small_marginals() {
        let d: f64 = 1e-6;
        let j =
            JointDistribution::new(vec![vec![1.0 - d, d / 3.0], vec![d / 3.0, d / 3.0]]).unwrap();
        let hb = -(1.0 - d) * (1.0 - d).ln() - d * d.ln();
        let c = classical_origin_infeasible(&j, 1e-3).unwrap();
        assert!(c.below_threshold);
        assert!(c.marginal_sum_certified);
        assert!(c.entropies.h1 + c.entropies.h2 <= 4.0 * hb + 1e-12);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(JointDistribution::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(JointDistribution::new(vec![vec![1.5, -0.5]]).is_err());
        assert!(JointDistribution::<f64>::new(vec![vec![0.5], vec![0.25, 0.25]]).is_err());
        let j = JointDistribution::<f64>::uniform(2, 2);
        assert!(classical_origin_infeasible(&j, -1.0).is_err());
    }

    #[test]
    fn bernoulli_chart_values() {
        let (t, p) = bernoulli_chart(0.5_f64).unwrap();
        assert_eq!(t, 0.0);
        assert!((p - LN2).abs() < 1e-15);
        let e = 1f64.exp();
        let (t, p) = bernoulli_chart(e / (1.0 + e)).unwrap();
        assert!((t - 1.0).abs() < 1e-14);
        assert!((p - (1.0 + e).ln()).abs() < 1e-14);
        let (t, _) = bernoulli_chart(0.999999_f64).unwrap();
        assert!(t > 13.0);
        assert!(bernoulli_chart(0.0_f64).is_err());
        assert!(bernoulli_chart(1.0_f64).is_err());
    }

    #[test]
    fn quantum_origin_breaks_classical_cap() {
        let w = quantum_witness::<f64>(3).unwrap();
        assert!((w.multi_information - 2.0 * 3f64.ln()).abs() < 1e-12);
        assert!((w.classical_cap - 3f64.ln()).abs() < 1e-12);
        assert!(w.violates_classical_bound);
    }

    #[test]
    fn suite_is_deterministic() {
        let a = obstruction_suite::<f64>(200, 5, 1e-12, 9).unwrap();
        let b = obstruction_suite::<f64>(200, 5, 1e-12, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.conditional_violations, 0);
    }
}
