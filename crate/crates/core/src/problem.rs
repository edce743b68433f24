//! Problem definitions and evaluated unit-cube points.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

type PriorFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type LogLikeFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A position in the unit hypercube together with its cached log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitPoint {
    pub u: Vec<f64>,
    pub logl: f64,
}

impl AsRef<[f64]> for UnitPoint {
    fn as_ref(&self) -> &[f64] {
        &self.u
    }
}

/// A prior (as a transform from the unit cube) and a log-likelihood.
///
/// Cheap to clone; the closures are shared.
#[derive(Clone)]
pub struct ProblemDefinition {
    name: String,
    dim: usize,
    true_logz: Option<f64>,
    prior: Arc<PriorFn>,
    loglike: Arc<LogLikeFn>,
}

impl fmt::Debug for ProblemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDefinition")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("true_logz", &self.true_logz)
            .finish_non_exhaustive()
    }
}

impl ProblemDefinition {
    /// `prior` writes the physical parameters for a unit-cube vector into its
    /// second argument; `loglike` maps physical parameters to `ln L`.
    pub fn new<P, L>(name: impl Into<String>, dim: usize, prior: P, loglike: L) -> Self
    where
        P: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        L: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        assert!(dim >= 1, "problem dimension must be positive");
        Self {
            name: name.into(),
            dim,
            true_logz: None,
            prior: Arc::new(prior),
            loglike: Arc::new(loglike),
        }
    }

    /// Unit-cube parameterisation: the prior transform is the identity.
    pub fn on_unit_cube<L>(name: impl Into<String>, dim: usize, loglike: L) -> Self
    where
        L: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, dim, |u, theta| theta.copy_from_slice(u), loglike)
    }

    pub fn with_true_logz(mut self, logz: f64) -> Self {
        self.true_logz = Some(logz);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn true_logz(&self) -> Option<f64> {
        self.true_logz
    }

    pub fn prior_transform(&self, u: &[f64]) -> Vec<f64> {
        let mut theta = vec![0.0; self.dim];
        (self.prior)(u, &mut theta);
        theta
    }

    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        (self.loglike)(theta)
    }

    /// `ln L(prior_transform(u))`, using `scratch` for the physical vector.
    /// No range check on `u`.
    pub(crate) fn log_likelihood_unit(&self, u: &[f64], scratch: &mut [f64]) -> Result<f64> {
        (self.prior)(u, scratch);
        let logl = (self.loglike)(scratch);
        if logl.is_nan() {
            return Err(Error::NanLikelihood);
        }
        Ok(logl)
    }
}

/// Evaluate `problem` at the unit-cube vector `u`.
pub fn evaluate(problem: &ProblemDefinition, u: &[f64]) -> Result<UnitPoint> {
    if u.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            found: u.len(),
        });
    }
    if let Some((axis, &value)) = u
        .iter()
        .enumerate()
        .find(|(_, x)| !(0.0..=1.0).contains(*x))
    {
        return Err(Error::OutOfCube { axis, value });
    }
    let mut scratch = vec![0.0; problem.dim()];
    let logl = problem.log_likelihood_unit(u, &mut scratch)?;
    Ok(UnitPoint {
        u: u.to_vec(),
        logl,
    })
}
