//! Shared Shapley machinery over "switch-to-foreground" games.
//!
//! A game has `n` players; a coalition is the set of players already
//! switched to their foreground value. Coalition values are memoised by
//! bitmask in a [`CoalitionCache`].

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Name of the generator behind every seeded draw in this crate.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Largest player count the bitmask cache accepts.
pub const MAX_CACHED_PLAYERS: usize = 31;

pub trait CoalitionGame {
    fn num_players(&self) -> usize;

    /// Value of the coalition whose members are flagged in `members`.
    fn value(&mut self, members: &[bool]) -> Result<f64>;
}

/// Bitmask-indexed memo of coalition values.
#[derive(Debug)]
pub struct CoalitionCache {
    players: usize,
    values: Vec<f64>,
    filled: Vec<bool>,
    evaluations: u64,
    members: Vec<bool>,
}

impl CoalitionCache {
    pub fn new(players: usize) -> Result<Self> {
        if players == 0 || players > MAX_CACHED_PLAYERS {
            return Err(Error::InvalidConfig(format!(
                "coalition cache supports 1..={MAX_CACHED_PLAYERS} players, got {players}"
            )));
        }
        let size = 1usize << players;
        Ok(Self {
            players,
            values: vec![0.0; size],
            filled: vec![false; size],
            evaluations: 0,
            members: vec![false; players],
        })
    }

    pub fn players(&self) -> usize {
        self.players
    }

    /// Number of game evaluations performed so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn get<G: CoalitionGame + ?Sized>(&mut self, game: &mut G, mask: usize) -> Result<f64> {
        if self.filled[mask] {
            return Ok(self.values[mask]);
        }
        for (i, m) in self.members.iter_mut().enumerate() {
            *m = mask & (1 << i) != 0;
        }
        let v = game.value(&self.members)?;
        self.values[mask] = v;
        self.filled[mask] = true;
        self.evaluations += 1;
        Ok(v)
    }

    fn fill_all<G: CoalitionGame + ?Sized>(&mut self, game: &mut G) -> Result<()> {
        for mask in 0..self.values.len() {
            self.get(game, mask)?;
        }
        Ok(())
    }
}

/// `1 / (n · C(n−1, k))` for `k = 0..n`.
pub(crate) fn shapley_weights(n: usize) -> Vec<f64> {
    let mut binom = 1.0f64;
    (0..n)
        .map(|k| {
            if k > 0 {
                binom = binom * (n - k) as f64 / k as f64;
            }
            1.0 / (n as f64 * binom)
        })
        .collect()
}

pub(crate) struct ExactOutcome {
    pub values: Vec<f64>,
    pub v_empty: f64,
    pub v_full: f64,
    pub evaluations: u64,
}

/// Exact Shapley values by subset enumeration; each coalition is evaluated
/// once.
pub(crate) fn exact_shapley<G: CoalitionGame + ?Sized>(game: &mut G) -> Result<ExactOutcome> {
    let n = game.num_players();
    let mut cache = CoalitionCache::new(n)?;
    cache.fill_all(game)?;
    let weights = shapley_weights(n);
    let v = &cache.values;
    let full = v.len() - 1;

    let mut phi = vec![0.0; n];
    for (p, phi_p) in phi.iter_mut().enumerate() {
        let bit = 1usize << p;
        let mut acc = 0.0;
        for mask in (0..=full).filter(|m| m & bit == 0) {
            let k = mask.count_ones() as usize;
            acc += weights[k] * (v[mask | bit] - v[mask]);
        }
        *phi_p = acc;
    }
    Ok(ExactOutcome {
        v_empty: v[0],
        v_full: v[full],
        values: phi,
        evaluations: cache.evaluations(),
    })
}

pub(crate) struct SampledOutcome {
    pub means: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
    pub evaluations: u64,
}

/// Monte-Carlo Shapley over `permutations` uniformly drawn orderings.
///
/// Each ordering's marginals telescope from `v_empty` to `v_full`, so the
/// means always sum to `v_full − v_empty`.
pub(crate) fn sampled_shapley<G: CoalitionGame + ?Sized>(
    game: &mut G,
    v_empty: f64,
    v_full: f64,
    permutations: u64,
    seed: u64,
) -> Result<SampledOutcome> {
    if permutations == 0 {
        return Err(Error::InvalidConfig("number of permutations must be at least 1".into()));
    }
    let n = game.num_players();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut members = vec![false; n];
    let mut sums = vec![0.0; n];
    // Welford state per player for the spread of marginals.
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    let mut evaluations = 0u64;

    for m in 0..permutations {
        order.shuffle(&mut rng);
        members.iter_mut().for_each(|x| *x = false);
        let mut prev = v_empty;
        for (k, &p) in order.iter().enumerate() {
            members[p] = true;
            let cur = if k + 1 == n {
                v_full
            } else {
                evaluations += 1;
                game.value(&members)?
            };
            let marginal = cur - prev;
            prev = cur;

            sums[p] += marginal;
            let count = (m + 1) as f64;
            let delta = marginal - mean[p];
            mean[p] += delta / count;
            m2[p] += delta * (marginal - mean[p]);
        }
    }

    let count = permutations as f64;
    let means = sums.iter().map(|s| s / count).collect();
    let stderr = (permutations > 1).then(|| {
        m2.iter()
            .map(|q| (q / (count - 1.0)).max(0.0).sqrt() / count.sqrt())
            .collect()
    });
    Ok(SampledOutcome {
        means,
        stderr,
        evaluations,
    })
}

/// Marginal contribution of each player along one fixed ordering.
pub(crate) fn ordered_marginals<G: CoalitionGame + ?Sized>(
    game: &mut G,
    order: &[usize],
) -> Result<(Vec<f64>, f64, f64)> {
    let n = game.num_players();
    let mut members = vec![false; n];
    let v_empty = game.value(&members)?;
    let mut prev = v_empty;
    let mut credits = vec![0.0; n];
    for &p in order {
        members[p] = true;
        let cur = game.value(&members)?;
        credits[p] = cur - prev;
        prev = cur;
    }
    Ok((credits, v_empty, prev))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Glove game: players 0,1 hold left gloves, player 2 a right glove.
    struct Gloves {
        calls: u64,
    }

    impl CoalitionGame for Gloves {
        fn num_players(&self) -> usize {
            3
        }

        fn value(&mut self, m: &[bool]) -> Result<f64> {
            self.calls += 1;
            let left = m[0] || m[1];
            Ok(if left && m[2] { 1.0 } else { 0.0 })
        }
    }

    #[test]
    fn weights_match_closed_form() {
        let w = shapley_weights(3);
        assert_eq!(w, vec![1.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0]);
        // Σ_k C(n−1,k)·w_k = 1 for every n.
        for n in 1..=21usize {
            let w = shapley_weights(n);
            let mut binom = 1.0;
            let mut total = 0.0;
            for (k, wk) in w.iter().enumerate() {
                if k > 0 {
                    binom = binom * (n - k) as f64 / k as f64;
                }
                total += binom * wk;
            }
            assert!((total - 1.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn glove_game_exact_values() {
        let mut g = Gloves { calls: 0 };
        let out = exact_shapley(&mut g).unwrap();
        let expected = [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0];
        for (a, b) in out.values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(out.evaluations, 8);
        assert_eq!(g.calls, 8);
    }

    #[test]
    fn cache_evaluates_each_coalition_once() {
        let mut g = Gloves { calls: 0 };
        let mut cache = CoalitionCache::new(3).unwrap();
        for _ in 0..3 {
            for mask in 0..8 {
                cache.get(&mut g, mask).unwrap();
            }
        }
        assert_eq!(cache.evaluations(), 8);
        assert_eq!(g.calls, 8);
        assert!(CoalitionCache::new(0).is_err());
    }

    #[test]
    fn sampled_is_seeded_and_complete() {
        let run = |seed| {
            let mut g = Gloves { calls: 0 };
            sampled_shapley(&mut g, 0.0, 1.0, 25, seed).unwrap()
        };
        let a = run(3);
        let b = run(3);
        assert_eq!(a.means, b.means);
        assert!((a.means.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(a.stderr.unwrap().iter().all(|s| *s >= 0.0));
        let mut g = Gloves { calls: 0 };
        assert!(sampled_shapley(&mut g, 0.0, 1.0, 0, 1).is_err());
    }
}
