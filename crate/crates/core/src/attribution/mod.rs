//! Attribution of `Δy` to the mechanism and the inputs.
//!
//! * [`coarse_attrib`]: two players, the mechanism and the whole input vector.
//! * [`linear_attrib`]: closed form for linear mechanisms, one player per input.
//! * [`fine_attrib_exact`]: one player per input plus the mechanism, exact.
//! * [`fine_attrib_sampled`]: the same game estimated from random orderings.
//! * [`ordered_attrib`]: marginals along one caller-supplied ordering.

mod coarse;
mod fine;
pub mod game;
mod linear;
mod ordered;

pub use coarse::coarse_attrib;
pub use fine::{fine_attrib, fine_attrib_exact, fine_attrib_exact_with_limit, fine_attrib_sampled};
pub use game::{CoalitionCache, CoalitionGame, RNG_ALGORITHM};
pub use linear::{linear_attrib, linear_attrib_mechanisms};
pub use ordered::{natural_order, ordered_attrib};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ChangeInstance, Player};

/// Default largest input dimension handled by exact enumeration.
pub const DEFAULT_EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub num_permutations: u64,
    pub seed: u64,
}

impl SamplingConfig {
    pub fn new(num_permutations: u64, seed: u64) -> Result<Self> {
        let config = Self { num_permutations, seed };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_permutations == 0 {
            return Err(Error::InvalidConfig("number of permutations must be at least 1".into()));
        }
        Ok(())
    }
}

/// The fine-grained game: bits `0..d` are the inputs, bit `d` the mechanism.
pub(crate) struct InstanceGame<'a> {
    instance: &'a ChangeInstance,
    scratch: Vec<f64>,
}

impl<'a> InstanceGame<'a> {
    pub(crate) fn new(instance: &'a ChangeInstance) -> Self {
        Self {
            instance,
            scratch: Vec::with_capacity(instance.dim()),
        }
    }

    pub(crate) fn player(&self, index: usize) -> Player {
        if index == self.instance.dim() {
            Player::Mechanism
        } else {
            Player::Input(index)
        }
    }
}

impl CoalitionGame for InstanceGame<'_> {
    fn num_players(&self) -> usize {
        self.instance.dim() + 1
    }

    fn value(&mut self, members: &[bool]) -> Result<f64> {
        let d = self.instance.dim();
        self.instance
            .fill_hybrid(members[..d].iter().copied(), &mut self.scratch);
        self.instance.eval_hybrid(members[d], &self.scratch)
    }
}
