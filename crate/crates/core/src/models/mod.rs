//! Fitted and randomly generated mechanisms.

pub mod generate;
mod ols;
mod polynomial;
mod qr;
mod stumps;

pub use generate::{gen_ground_truth, gen_inputs, GroundTruth, TruthKind, TruthModel};
pub use ols::{fit_ols, OlsFit};
pub use polynomial::{monomial_basis, Monomial, PolynomialMechanism};
pub use stumps::{fit_stump_ensemble, Stump, StumpEnsemble};

use crate::error::{Error, Result};

/// Feature rows `x` (n × d) with targets `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let dim = x.first().map_or(0, Vec::len);
        Self::with_dim(x, y, dim)
    }

    pub fn with_dim(x: Vec<Vec<f64>>, y: Vec<f64>, dim: usize) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::mismatch("dataset targets", x.len(), y.len()));
        }
        if let Some(row) = x.iter().find(|r| r.len() != dim) {
            return Err(Error::mismatch("dataset row", dim, row.len()));
        }
        Ok(Self { x, y, dim })
    }

    /// Applies `mechanism` to each row to produce the targets.
    pub fn from_mechanism(x: Vec<Vec<f64>>, mechanism: &dyn crate::Mechanism) -> Result<Self> {
        let y = x
            .iter()
            .map(|row| crate::mechanism::checked_eval(mechanism, row))
            .collect::<Result<Vec<_>>>()?;
        Self::with_dim(x, y, mechanism.arity())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rows picked by `indices`, repeats allowed.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            dim: self.dim,
        }
    }
}
