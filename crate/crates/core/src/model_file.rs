//! JSON model files, tagged by `kind`:
//!
//! ```json
//! { "kind": "linear", "coefficients": [2.0, -1.0], "intercept": 0.5, "label": "1976" }
//! { "kind": "polynomial", "terms": [{ "exponents": [2, 0], "coef": 1.5 }] }
//! { "kind": "stumps", "arity": 2, "base": 0.1, "rate": 0.3, "stumps": [...] }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{LinearMechanism, MechanismRef};
use crate::models::{Monomial, PolynomialMechanism, StumpEnsemble};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelFile {
    Linear(LinearMechanism),
    Polynomial(PolynomialFile),
    Stumps(StumpEnsemble),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFile {
    /// Needed only when `terms` is empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arity: Option<usize>,
    pub terms: Vec<Monomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ModelFile {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|c| c.is_finite());
        match self {
            ModelFile::Linear(m) => {
                if m.coefficients.is_empty() {
                    return Err(Error::NoInputs);
                }
                if !finite(&m.coefficients) || m.intercept.is_some_and(|b| !b.is_finite()) {
                    return Err(Error::InvalidModel("linear coefficients must be finite".into()));
                }
            }
            ModelFile::Polynomial(p) => {
                if p.arity.is_none() && p.terms.is_empty() {
                    return Err(Error::InvalidModel("polynomial with no terms needs an `arity`".into()));
                }
                if !p.terms.iter().all(|t| t.coef.is_finite()) {
                    return Err(Error::InvalidModel("polynomial coefficients must be finite".into()));
                }
                self.polynomial()?;
            }
            ModelFile::Stumps(s) => {
                if let Some(bad) = s.stumps.iter().find(|t| t.feature >= s.arity) {
                    return Err(Error::InvalidModel(format!(
                        "stump splits on feature {} of a {}-input model",
                        bad.feature, s.arity
                    )));
                }
            }
        }
        Ok(())
    }

    fn polynomial(&self) -> Result<Option<PolynomialMechanism>> {
        let ModelFile::Polynomial(p) = self else {
            return Ok(None);
        };
        let arity = p.arity.unwrap_or_else(|| p.terms[0].exponents.len());
        let mut m = PolynomialMechanism::new(arity, p.terms.clone())?;
        if let Some(label) = &p.label {
            m = m.with_label(label.clone());
        }
        Ok(Some(m))
    }

    pub fn into_mechanism(self) -> MechanismRef {
        match self {
            ModelFile::Linear(m) => m.into_ref(),
            ModelFile::Stumps(s) => s.into_ref(),
            poly @ ModelFile::Polynomial(_) => poly
                .polynomial()
                .expect("validated on load")
                .expect("polynomial variant")
                .into_ref(),
        }
    }
}

impl From<LinearMechanism> for ModelFile {
    fn from(m: LinearMechanism) -> Self {
        ModelFile::Linear(m)
    }
}

impl From<StumpEnsemble> for ModelFile {
    fn from(m: StumpEnsemble) -> Self {
        ModelFile::Stumps(m)
    }
}

impl From<&PolynomialMechanism> for ModelFile {
    fn from(m: &PolynomialMechanism) -> Self {
        use crate::Mechanism;
        ModelFile::Polynomial(PolynomialFile {
            arity: Some(m.arity()),
            terms: m.terms().to_vec(),
            label: Some(m.label().to_string()),
        })
    }
}

/// Reads a model file straight into a shareable mechanism handle.
pub fn load_model(path: impl AsRef<Path>) -> Result<MechanismRef> {
    Ok(ModelFile::load(path)?.into_mechanism())
}
