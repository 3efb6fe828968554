use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, MechanismRef};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coef: f64,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// `Σ coef · ∏ xⱼ^eⱼ` over a list of monomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialMechanism {
    arity: usize,
    terms: Vec<Monomial>,
    label: String,
}

impl PolynomialMechanism {
    pub fn new(arity: usize, terms: Vec<Monomial>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.exponents.len() != arity) {
            return Err(Error::mismatch("monomial exponents", arity, t.exponents.len()));
        }
        Ok(Self {
            arity,
            terms,
            label: "polynomial".into(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn into_ref(self) -> MechanismRef {
        Arc::new(self)
    }
}

impl Mechanism for PolynomialMechanism {
    fn arity(&self) -> usize {
        self.arity
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let mut y = 0.0;
        for t in &self.terms {
            let mut prod = t.coef;
            for (v, &e) in x.iter().zip(&t.exponents) {
                if e > 0 {
                    prod *= v.powi(e as i32);
                }
            }
            y += prod;
        }
        Ok(y)
    }

    fn label(&self) -> &str {
        &self.label
    }
}

/// Every exponent vector over `d` inputs with total degree in
/// `1..=degree` (or `0..=degree` with `include_constant`), graded by total
/// degree and lexicographically descending within a degree.
pub fn monomial_basis(d: usize, degree: u32, include_constant: bool) -> Vec<Vec<u32>> {
    fn fill(d: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == d {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e);
            fill(d, remaining - e, prefix, out);
            prefix.pop();
        }
    }

    let mut out = Vec::new();
    let start = if include_constant { 0 } else { 1 };
    for total in start..=degree {
        fill(d, total, &mut Vec::with_capacity(d), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_for_two_inputs_degree_two() {
        let b = monomial_basis(2, 2, false);
        assert_eq!(b, vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(monomial_basis(2, 2, true).len(), 6);
    }

    #[test]
    fn basis_size_is_binomial() {
        fn binom(n: u64, k: u64) -> u64 {
            (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
        }
        for d in 1..=5usize {
            for deg in 1..=4u32 {
                let expected = binom(d as u64 + deg as u64, deg as u64) - 1;
                assert_eq!(monomial_basis(d, deg, false).len() as u64, expected, "d={d} deg={deg}");
            }
        }
    }

    #[test]
    fn evaluates_sum_of_products() {
        let p = PolynomialMechanism::new(
            2,
            vec![
                Monomial {
                    exponents: vec![2, 1],
                    coef: 3.0,
                },
                Monomial {
                    exponents: vec![0, 0],
                    coef: -1.0,
                },
            ],
        )
        .unwrap();
        assert_eq!(p.evaluate(&[2.0, 5.0]).unwrap(), 59.0);
        assert_eq!(p.degree(), 3);
        assert!(PolynomialMechanism::new(3, p.terms().to_vec()).is_err());
    }
}
