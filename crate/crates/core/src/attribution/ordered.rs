use std::collections::BTreeMap;

use super::game::ordered_marginals;
use super::InstanceGame;
use crate::error::{Error, Result};
use crate::instance::{AttributionResult, ChangeInstance, Method, Player};

/// The mechanism first, then the inputs in index order.
pub fn natural_order(d: usize) -> Vec<Player> {
    std::iter::once(Player::Mechanism)
        .chain((0..d).map(Player::Input))
        .collect()
}

/// Credits each player with its marginal contribution when the players are
/// switched to foreground in the given `order`. No symmetrisation.
pub fn ordered_attrib(instance: &ChangeInstance, order: &[Player]) -> Result<AttributionResult> {
    let d = instance.dim();
    if order.len() != d + 1 {
        return Err(Error::InvalidOrdering(format!(
            "expected {} players, got {}",
            d + 1,
            order.len()
        )));
    }
    let mut seen = vec![false; d + 1];
    let mut indices = Vec::with_capacity(d + 1);
    for p in order {
        let idx = match *p {
            Player::Mechanism => d,
            Player::Input(j) if j < d => j,
            other => {
                return Err(Error::InvalidOrdering(format!(
                    "`{other}` is not a player of this game"
                )))
            }
        };
        if std::mem::replace(&mut seen[idx], true) {
            return Err(Error::InvalidOrdering(format!("`{p}` appears twice")));
        }
        indices.push(idx);
    }

    let mut game = InstanceGame::new(instance);
    let (marginals, v_empty, v_full) = ordered_marginals(&mut game, &indices)?;
    let credits: BTreeMap<_, _> = marginals
        .iter()
        .enumerate()
        .map(|(i, v)| (game.player(i), *v))
        .collect();
    let mut result = AttributionResult::new(v_full - v_empty, Method::Ordered, credits);
    result.oracle_evaluations = Some(d as u64 + 2);
    Ok(result)
}
