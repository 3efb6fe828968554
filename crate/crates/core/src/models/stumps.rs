use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, MechanismRef};

/// Depth-one regression tree: `x[feature] <= threshold ? left : right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

impl Stump {
    fn predict(&self, x: &[f64]) -> f64 {
        if x[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

/// Boosted sum of stumps on top of a constant base score.
///
/// Stump outputs are stored already multiplied by the learning rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StumpEnsemble {
    pub arity: usize,
    pub base: f64,
    pub rate: f64,
    pub stumps: Vec<Stump>,
}

impl StumpEnsemble {
    pub fn rounds(&self) -> usize {
        self.stumps.len()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base + self.stumps.iter().map(|s| s.predict(x)).sum::<f64>()
    }

    /// Mean squared training error after each prefix of `0..=rounds` stumps.
    pub fn mse_path(&self, data: &Dataset) -> Vec<f64> {
        let n = data.len() as f64;
        let mut pred = vec![self.base; data.len()];
        let mse = |pred: &[f64]| pred.iter().zip(&data.y).map(|(p, y)| (y - p) * (y - p)).sum::<f64>() / n;
        let mut path = vec![mse(&pred)];
        for s in &self.stumps {
            for (p, row) in pred.iter_mut().zip(&data.x) {
                *p += s.predict(row);
            }
            path.push(mse(&pred));
        }
        path
    }

    pub fn into_ref(self) -> MechanismRef {
        Arc::new(self)
    }
}

impl Mechanism for StumpEnsemble {
    fn arity(&self) -> usize {
        self.arity
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict(x))
    }

    fn label(&self) -> &str {
        "stumps"
    }
}

/// Greedy least-squares gradient boosting of depth-one trees.
pub fn fit_stump_ensemble(data: &Dataset, rounds: usize, rate: f64) -> Result<StumpEnsemble> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if rounds == 0 {
        return Err(Error::InvalidConfig("boosting needs at least one round".into()));
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "learning rate must lie in (0, 1], got {rate}"
        )));
    }
    let n = data.len();
    let d = data.dim();
    let base = data.y.iter().sum::<f64>() / n as f64;

    let orders: Vec<Vec<usize>> = (0..d)
        .map(|j| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| data.x[a][j].total_cmp(&data.x[b][j]));
            idx
        })
        .collect();

    let mut pred = vec![base; n];
    let mut residual = vec![0.0; n];
    let mut stumps = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        for i in 0..n {
            residual[i] = data.y[i] - pred[i];
        }
        let total: f64 = residual.iter().sum();
        let stump = best_stump(data, &orders, &residual, total).unwrap_or(Stump {
            feature: 0,
            threshold: f64::MAX,
            left: total / n as f64,
            right: total / n as f64,
        });
        let stump = Stump {
            left: stump.left * rate,
            right: stump.right * rate,
            ..stump
        };
        for (p, row) in pred.iter_mut().zip(&data.x) {
            *p += stump.predict(row);
        }
        stumps.push(stump);
    }
    Ok(StumpEnsemble {
        arity: d,
        base,
        rate,
        stumps,
    })
}

/// Split maximising `S_L²/n_L + S_R²/n_R` (equivalently minimising SSE).
fn best_stump(data: &Dataset, orders: &[Vec<usize>], residual: &[f64], total: f64) -> Option<Stump> {
    let n = residual.len();
    let mut best: Option<(f64, Stump)> = None;
    for (j, order) in orders.iter().enumerate() {
        let mut left_sum = 0.0;
        for k in 0..n - 1 {
            left_sum += residual[order[k]];
            let here = data.x[order[k]][j];
            let next = data.x[order[k + 1]][j];
            if here == next {
                continue;
            }
            let n_left = (k + 1) as f64;
            let n_right = (n - k - 1) as f64;
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / n_left + right_sum * right_sum / n_right;
            if best.as_ref().is_none_or(|(g, _)| gain > *g) {
                let mut threshold = here + (next - here) / 2.0;
                if threshold >= next {
                    threshold = here;
                }
                best = Some((
                    gain,
                    Stump {
                        feature: j,
                        threshold,
                        left: left_sum / n_left,
                        right: right_sum / n_right,
                    },
                ));
            }
        }
    }
    best.map(|(_, s)| s)
}
