//! Deterministic mechanisms mapping an input vector to a scalar output.
//!
//! Every algorithm in this crate treats a mechanism as a black-box oracle.
//! Mechanisms are shared through [`MechanismRef`] handles; passing the same
//! handle for both scenarios is how a caller says "the mechanism did not
//! change".

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A deterministic map from a real `arity()`-vector to a real output.
///
/// Implementations must return bit-identical results for bit-identical
/// inputs and must be callable from several threads at once.
pub trait Mechanism: Send + Sync {
    fn arity(&self) -> usize;

    fn evaluate(&self, x: &[f64]) -> Result<f64>;

    fn label(&self) -> &str {
        "mechanism"
    }
}

pub type MechanismRef = Arc<dyn Mechanism>;

/// True when both handles point at the same mechanism object.
pub fn same_handle(a: &MechanismRef, b: &MechanismRef) -> bool {
    std::ptr::addr_eq(Arc::as_ptr(a), Arc::as_ptr(b))
}

/// Evaluates `mechanism`, checking the input length and rejecting
/// non-finite outputs.
pub fn checked_eval(mechanism: &dyn Mechanism, x: &[f64]) -> Result<f64> {
    if x.len() != mechanism.arity() {
        return Err(Error::mismatch(
            format!("input to `{}`", mechanism.label()),
            mechanism.arity(),
            x.len(),
        ));
    }
    let y = mechanism.evaluate(x)?;
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite {
            label: mechanism.label().to_string(),
            value: y,
        })
    }
}

/// Linear mechanism `Σ βⱼ·xⱼ (+ β₀)`.
///
/// The optional intercept is the coefficient of a constant pseudo-feature
/// fixed at 1 in both scenarios, so a change in intercept is always
/// credited to the mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMechanism {
    pub coefficients: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    #[serde(default = "default_linear_label")]
    pub label: String,
}

fn default_linear_label() -> String {
    "linear".to_string()
}

impl LinearMechanism {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self {
            coefficients,
            intercept: None,
            label: default_linear_label(),
        }
    }

    pub fn with_intercept(mut self, intercept: f64) -> Self {
        self.intercept = Some(intercept);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Coefficients with the intercept appended as the weight of the
    /// constant pseudo-feature (0 when absent).
    pub fn augmented_coefficients(&self) -> Vec<f64> {
        let mut beta = self.coefficients.clone();
        beta.push(self.intercept.unwrap_or(0.0));
        beta
    }

    pub fn into_ref(self) -> MechanismRef {
        Arc::new(self)
    }
}

impl Mechanism for LinearMechanism {
    fn arity(&self) -> usize {
        self.coefficients.len()
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let mut y = 0.0;
        for (b, v) in self.coefficients.iter().zip(x) {
            y += b * v;
        }
        if let Some(b0) = self.intercept {
            y += b0;
        }
        Ok(y)
    }

    fn label(&self) -> &str {
        &self.label
    }
}

/// Wraps a plain closure as a mechanism.
pub struct FnMechanism<F> {
    arity: usize,
    label: String,
    f: F,
}

impl<F> FnMechanism<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(arity: usize, label: impl Into<String>, f: F) -> Self {
        Self {
            arity,
            label: label.into(),
            f,
        }
    }
}

impl<F> FnMechanism<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    pub fn into_ref(self) -> MechanismRef {
        Arc::new(self)
    }
}

impl<F> Mechanism for FnMechanism<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn arity(&self) -> usize {
        self.arity
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok((self.f)(x))
    }

    fn label(&self) -> &str {
        &self.label
    }
}

impl<F> fmt::Debug for FnMechanism<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnMechanism")
            .field("arity", &self.arity)
            .field("label", &self.label)
            .finish()
    }
}

/// `scale · inner(x)`.
pub struct ScaledMechanism {
    inner: MechanismRef,
    scale: f64,
    label: String,
}

impl ScaledMechanism {
    pub fn new(inner: MechanismRef, scale: f64) -> Self {
        let label = format!("{}*{}", scale, inner.label());
        Self { inner, scale, label }
    }
}

impl Mechanism for ScaledMechanism {
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok(self.scale * self.inner.evaluate(x)?)
    }

    fn label(&self) -> &str {
        &self.label
    }
}
