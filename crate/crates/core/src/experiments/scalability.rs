use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cell_rng, mean_and_stderr, player_mae, sort_records, ExperimentMethod, FittedKind, MaeRecord};
use crate::attribution::{fine_attrib_sampled, linear_attrib, SamplingConfig};
use crate::error::{Error, Result};
use crate::instance::ChangeInstance;
use crate::models::generate::{gen_inputs_with, gen_linear_pair};
use crate::models::TruthKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalabilityConfig {
    pub dims: Vec<usize>,
    /// Strictly ascending permutation budgets.
    pub budgets: Vec<u64>,
    /// Ground-truth models per `(d, budget)` cell.
    pub repeats: usize,
    /// Instances attributed per model.
    pub n: usize,
    pub seed: u64,
}

impl Default for ScalabilityConfig {
    fn default() -> Self {
        Self {
            dims: vec![10, 20, 30],
            budgets: vec![10, 100, 1000],
            repeats: 100,
            n: 1000,
            seed: 0,
        }
    }
}

impl ScalabilityConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("dimensions must be a non-empty list of positive integers".into());
        }
        if self.budgets.is_empty() || self.budgets[0] == 0 {
            return bad("budgets must be a non-empty list of positive integers".into());
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("budgets must be strictly ascending, got {:?}", self.budgets));
        }
        if self.repeats == 0 || self.n == 0 {
            return bad("repeats and instance count must be at least 1".into());
        }
        Ok(())
    }
}

/// Permutation-sampling error against the linear closed form.
///
/// For each dimension, `repeats` random linear pairs with `n` instances
/// each are drawn once and reused at every budget, as are the per-instance
/// sampling seeds, so budgets differ only in how many orderings are drawn.
/// One record per `(d, budget)`: the mean over models of the per-model
/// MAE, and its standard error.
pub fn run_scalability(config: &ScalabilityConfig) -> Result<Vec<MaeRecord>> {
    config.validate()?;
    let cells: Vec<(usize, usize)> = config
        .dims
        .iter()
        .flat_map(|&d| (0..config.repeats).map(move |r| (d, r)))
        .collect();
    // Per (d, model): MAE at each budget.
    let per_model: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(d, r)| model_errors(config, d, r))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    for (di, &d) in config.dims.iter().enumerate() {
        let rows = &per_model[di * config.repeats..(di + 1) * config.repeats];
        for (bi, &budget) in config.budgets.iter().enumerate() {
            let maes: Vec<f64> = rows.iter().map(|row| row[bi]).collect();
            let (mae, stderr) = mean_and_stderr(&maes);
            records.push(MaeRecord {
                kind: TruthKind::Linear,
                fitted: FittedKind::Truth,
                method: ExperimentMethod::Sampled,
                model_idx: None,
                d,
                budget: Some(budget),
                mae,
                stderr,
                seed: config.seed,
                error: None,
            });
        }
    }
    sort_records(&mut records);
    Ok(records)
}

fn model_errors(config: &ScalabilityConfig, d: usize, model_idx: usize) -> Result<Vec<f64>> {
    let mut rng = cell_rng(config.seed, ((d as u64) << 32) | model_idx as u64);
    let truth = gen_linear_pair(d, &mut rng);
    let x_bg = gen_inputs_with(d, config.n, &mut rng);
    let x_fg = gen_inputs_with(d, config.n, &mut rng);
    let seeds: Vec<u64> = (0..config.n).map(|_| rng.next_u64()).collect();
    let (beta_bg, beta_fg) = truth.linear_coefficients().expect("linear pair");

    let mut sums = vec![0.0; config.budgets.len()];
    for i in 0..config.n {
        let exact = linear_attrib(beta_bg, beta_fg, &x_bg[i], &x_fg[i])?;
        let inst = ChangeInstance::new(x_bg[i].clone(), x_fg[i].clone(), truth.bg_ref(), truth.fg_ref())?;
        for (b, &budget) in config.budgets.iter().enumerate() {
            let sampled = fine_attrib_sampled(&inst, &SamplingConfig::new(budget, seeds[i])?)?;
            sums[b] += player_mae(&sampled, &exact);
        }
    }
    Ok(sums.into_iter().map(|s| s / config.n as f64).collect())
}
