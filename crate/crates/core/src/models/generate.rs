//! Random ground-truth mechanism pairs and standard-normal inputs.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::polynomial::{monomial_basis, Monomial, PolynomialMechanism};
use crate::error::Result;
use crate::mechanism::{LinearMechanism, Mechanism, MechanismRef};

pub const MIN_INPUTS: usize = 1;
pub const MAX_INPUTS: usize = 5;
pub const MIN_DEGREE: u32 = 2;
pub const MAX_DEGREE: u32 = 4;
pub const COEF_BOUND: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthKind {
    Linear,
    Polynomial,
}

impl std::fmt::Display for TruthKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TruthKind::Linear => "linear",
            TruthKind::Polynomial => "polynomial",
        })
    }
}

impl std::str::FromStr for TruthKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(TruthKind::Linear),
            "polynomial" | "poly" => Ok(TruthKind::Polynomial),
            _ => Err(crate::Error::InvalidConfig(format!("unknown ground-truth kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TruthModel {
    Linear(LinearMechanism),
    Polynomial(PolynomialMechanism),
}

impl Mechanism for TruthModel {
    fn arity(&self) -> usize {
        match self {
            TruthModel::Linear(m) => m.arity(),
            TruthModel::Polynomial(m) => m.arity(),
        }
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        match self {
            TruthModel::Linear(m) => m.evaluate(x),
            TruthModel::Polynomial(m) => m.evaluate(x),
        }
    }

    fn label(&self) -> &str {
        match self {
            TruthModel::Linear(m) => m.label(),
            TruthModel::Polynomial(m) => m.label(),
        }
    }
}

/// Background and foreground generating mechanisms.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub kind: TruthKind,
    pub d: usize,
    /// Shared total degree of both polynomials; `None` for linear pairs.
    pub degree: Option<u32>,
    pub bg: Arc<TruthModel>,
    pub fg: Arc<TruthModel>,
}

impl GroundTruth {
    pub fn bg_ref(&self) -> MechanismRef {
        self.bg.clone()
    }

    pub fn fg_ref(&self) -> MechanismRef {
        self.fg.clone()
    }

    /// Coefficient vectors when both mechanisms are linear.
    pub fn linear_coefficients(&self) -> Option<(&[f64], &[f64])> {
        match (self.bg.as_ref(), self.fg.as_ref()) {
            (TruthModel::Linear(b), TruthModel::Linear(f)) => Some((&b.coefficients, &f.coefficients)),
            _ => None,
        }
    }

    /// Every coefficient of both mechanisms.
    pub fn coefficients(&self) -> Vec<f64> {
        [&self.bg, &self.fg]
            .iter()
            .flat_map(|m| match m.as_ref() {
                TruthModel::Linear(l) => l.coefficients.clone(),
                TruthModel::Polynomial(p) => p.terms().iter().map(|t| t.coef).collect(),
            })
            .collect()
    }
}

fn coef<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(-COEF_BOUND..COEF_BOUND)
}

/// Draws `d ~ U{1..5}` and, for polynomials, a shared degree `~ U{2..4}`,
/// then independent `U(−5, 5)` coefficients for each scenario.
pub fn gen_ground_truth(kind: TruthKind, seed: u64) -> GroundTruth {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_ground_truth_with(kind, &mut rng)
}

pub fn gen_ground_truth_with<R: Rng>(kind: TruthKind, rng: &mut R) -> GroundTruth {
    let d = rng.random_range(MIN_INPUTS..=MAX_INPUTS);
    match kind {
        TruthKind::Linear => gen_linear_pair(d, rng),
        TruthKind::Polynomial => {
            let degree = rng.random_range(MIN_DEGREE..=MAX_DEGREE);
            gen_polynomial_pair(d, degree, false, rng)
        }
    }
}

/// Linear pair over exactly `d` inputs.
pub fn gen_linear_pair<R: Rng>(d: usize, rng: &mut R) -> GroundTruth {
    let mut draw = || TruthModel::Linear(LinearMechanism::new((0..d).map(|_| coef(rng)).collect()));
    let bg = draw();
    let fg = draw();
    GroundTruth {
        kind: TruthKind::Linear,
        d,
        degree: None,
        bg: Arc::new(bg),
        fg: Arc::new(fg),
    }
}

/// Polynomial pair over the full monomial basis up to `degree`.
pub fn gen_polynomial_pair<R: Rng>(d: usize, degree: u32, include_constant: bool, rng: &mut R) -> GroundTruth {
    let basis = monomial_basis(d, degree, include_constant);
    let mut draw = || {
        let terms = basis
            .iter()
            .map(|e| Monomial {
                exponents: e.clone(),
                coef: coef(rng),
            })
            .collect();
        TruthModel::Polynomial(PolynomialMechanism::new(d, terms).expect("basis matches arity"))
    };
    let bg = draw();
    let fg = draw();
    GroundTruth {
        kind: TruthKind::Polynomial,
        d,
        degree: Some(degree),
        bg: Arc::new(bg),
        fg: Arc::new(fg),
    }
}

/// `n × d` matrix (rows) of iid standard-normal draws.
pub fn gen_inputs(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    gen_inputs_with(d, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn gen_inputs_with<R: Rng>(d: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}
