use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qorigin::flow::{Clock, FlowConfig, LocalGenerator, StepControl};
use qorigin::operators::{HermitianOperator, SubsystemShape};
use qorigin::{Error, C};
use serde::Deserialize;

/// One local term `ξ_i` of the reversible generator, given as the real and
/// (optional) imaginary parts of a Hermitian matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorTerm {
    pub subsystem: usize,
    pub real: Vec<Vec<f64>>,
    #[serde(default)]
    pub imag: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    /// Regularised maximally entangled origin with mixing weight `eps`.
    Origin,
    /// Hilbert–Schmidt random full-rank state drawn from `seed`.
    Random,
}

/// A full run description. Every field has a default so that `{}` is valid.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub shape: Vec<usize>,
    pub seed: u64,

    // simulate
    pub start: StartKind,
    pub eps: f64,
    pub clock: Clock,
    pub duration: Option<f64>,
    pub c: f64,
    pub rate_min: f64,
    pub max_steps: usize,
    pub initial_step: f64,
    pub atol: f64,
    pub rtol: f64,
    pub dissipative: bool,
    pub generator: Vec<GeneratorTerm>,
    pub reversible_rate: f64,
    pub conservation_tol: f64,
    pub write_theta: bool,
    /// Accepted deviation of the entropy-time slope from `c`, relative.
    pub slope_tol: f64,

    // origin-analysis and stiffness
    pub eps_sweep: Vec<f64>,
    pub soft_threshold: f64,
    pub kernel_rel_tol: f64,

    // obstruction-check
    pub samples: usize,
    pub max_alphabet: usize,
    pub slack: f64,
    pub witness_q: Vec<usize>,

    // gibbs-check
    pub planted: usize,
    pub beta_range: f64,
    pub local_dim: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            shape: vec![3, 3],
            seed: 0,
            start: StartKind::Origin,
            eps: 0.05,
            clock: Clock::EntropyTime,
            duration: None,
            c: 1.0,
            rate_min: 1e-8,
            max_steps: 100_000,
            initial_step: 1e-3,
            atol: 1e-8,
            rtol: 1e-8,
            dissipative: true,
            generator: Vec::new(),
            reversible_rate: 1.0,
            conservation_tol: 1e-6,
            write_theta: false,
            slope_tol: 1e-4,
            eps_sweep: vec![0.3, 0.1, 0.03, 0.01],
            soft_threshold: 1e-6,
            kernel_rel_tol: 1e-8,
            samples: 10_000,
            max_alphabet: 5,
            slack: 1e-12,
            witness_q: vec![2, 3, 4],
            planted: 20,
            beta_range: 2.0,
            local_dim: 3,
        }
    }
}

impl RunConfig {
    /// Reads JSON from `path`, or from standard input when `path` is `-`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let text = match path {
            None => return Ok(Self::default()),
            Some(p) if p.as_os_str() == "-" => {
                let mut s = String::new();
                std::io::stdin().read_to_string(&mut s)?;
                s
            }
            Some(p) => std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?,
        };
        serde_json::from_str(&text).context("parsing config")
    }

    pub fn shape(&self) -> Result<SubsystemShape> {
        Ok(SubsystemShape::new(self.shape.clone())?)
    }

    pub fn validate_common(&self) -> Result<()> {
        if self.max_alphabet > 6 {
            bail!("max_alphabet must be at most 6");
        }
        if self.samples > 1_000_000 {
            bail!("samples must be at most 1e6");
        }
        Ok(())
    }

    pub fn local_generator(&self, shape: &SubsystemShape) -> Result<Option<LocalGenerator<f64>>> {
        if self.generator.is_empty() {
            return Ok(None);
        }
        let mut terms = Vec::with_capacity(self.generator.len());
        for term in &self.generator {
            let d = term.real.len();
            let imag = term.imag.clone().unwrap_or_else(|| vec![vec![0.0; d]; d]);
            if imag.len() != d || term.real.iter().chain(&imag).any(|row| row.len() != d) {
                bail!(
                    "generator term for subsystem {} is not square",
                    term.subsystem
                );
            }
            let m = nalgebra_matrix(d, |r, c| C::new(term.real[r][c], imag[r][c]));
            terms.push((term.subsystem, HermitianOperator::new(m)?));
        }
        Ok(Some(LocalGenerator::new(shape, terms)?))
    }

    pub fn flow_config(&self, shape: &SubsystemShape) -> Result<FlowConfig<f64>> {
        let mut cfg = FlowConfig {
            c: self.c,
            step: StepControl {
                initial_step: self.initial_step,
                atol: self.atol,
                rtol: self.rtol,
                ..FlowConfig::<f64>::default().step
            },
            max_steps: self.max_steps,
            rate_min: self.rate_min,
            dissipative: self.dissipative,
            generator: self.local_generator(shape)?,
            reversible_rate: self.reversible_rate,
            conservation_tol: self.conservation_tol,
            ..FlowConfig::default()
        };
        cfg.geometry.kernel_rel_tol = self.kernel_rel_tol;
        cfg.validate().map_err(|e: Error| anyhow::anyhow!(e))?;
        Ok(cfg)
    }
}

fn nalgebra_matrix(
    d: usize,
    f: impl Fn(usize, usize) -> C<f64>,
) -> qorigin::operators::CMatrix<f64> {
    qorigin::operators::CMatrix::from_fn(d, d, f)
}
