use std::collections::BTreeMap;

use super::game::{exact_shapley, sampled_shapley, MAX_CACHED_PLAYERS};
use super::{InstanceGame, SamplingConfig, DEFAULT_EXACT_LIMIT};
use crate::error::{Error, Result};
use crate::instance::{AttributionResult, ChangeInstance, Method};

/// Exact Shapley values over `{f, x₁, …, x_d}` with the default exact limit.
pub fn fine_attrib_exact(instance: &ChangeInstance) -> Result<AttributionResult> {
    fine_attrib_exact_with_limit(instance, DEFAULT_EXACT_LIMIT)
}

/// Exact Shapley values over `{f, x₁, …, x_d}`; at most `2^(d+1)` oracle
/// calls thanks to the coalition cache.
pub fn fine_attrib_exact_with_limit(instance: &ChangeInstance, limit: usize) -> Result<AttributionResult> {
    let d = instance.dim();
    let limit = limit.min(MAX_CACHED_PLAYERS - 1);
    if d > limit {
        return Err(Error::OverExactLimit { size: d, limit });
    }
    let mut game = InstanceGame::new(instance);
    let out = exact_shapley(&mut game)?;
    let credits: BTreeMap<_, _> = out
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (game.player(i), *v))
        .collect();
    let mut result = AttributionResult::new(out.v_full - out.v_empty, Method::FineExact, credits);
    result.oracle_evaluations = Some(out.evaluations);
    Ok(result)
}

/// Permutation-sampling estimate of the fine-grained Shapley values.
///
/// Credits sum to `Δy` for every budget and seed; `stderr` is the sample
/// standard deviation of each player's marginals over `√M` (absent when
/// `M = 1`).
pub fn fine_attrib_sampled(instance: &ChangeInstance, config: &SamplingConfig) -> Result<AttributionResult> {
    config.validate()?;
    let y_bg = instance.y_bg()?;
    let y_fg = instance.y_fg()?;
    let mut game = InstanceGame::new(instance);
    let out = sampled_shapley(&mut game, y_bg, y_fg, config.num_permutations, config.seed)?;

    let credits = out
        .means
        .iter()
        .enumerate()
        .map(|(i, v)| (game.player(i), *v))
        .collect();
    let mut result = AttributionResult::new(y_fg - y_bg, Method::FineSampled, credits);
    result.stderr = out
        .stderr
        .map(|se| se.iter().enumerate().map(|(i, s)| (game.player(i), *s)).collect());
    result.permutations_used = Some(config.num_permutations);
    result.oracle_evaluations = Some(out.evaluations + 2);
    Ok(result)
}

/// Exact when `d ≤ limit`, otherwise sampled with `sampling`; errors when
/// the dimension is over the limit and no sampling budget was given.
pub fn fine_attrib(
    instance: &ChangeInstance,
    limit: usize,
    sampling: Option<&SamplingConfig>,
) -> Result<AttributionResult> {
    if instance.dim() <= limit.min(MAX_CACHED_PLAYERS - 1) {
        fine_attrib_exact_with_limit(instance, limit)
    } else if let Some(config) = sampling {
        fine_attrib_sampled(instance, config)
    } else {
        Err(Error::OverExactLimit {
            size: instance.dim(),
            limit,
        })
    }
}
