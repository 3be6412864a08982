//! Shapley values of an instance's active features, played as a weighted
//! voting game.
//!
//! Each active feature is a player whose vote is its model weight. A
//! coalition `S` wins (`v(S) = 1`) iff `Σ_{i∈S} w_i > q - intercept`, so the
//! grand coalition wins exactly when the model predicts positive. A player's
//! Shapley value is its marginal contribution `v(S ∪ {i}) - v(S)` averaged
//! over every order in which the players can join.
//!
//! Marginals are signed: a negative-weight player that drags a winning
//! coalition under the threshold contributes `-1`. Ties with the threshold
//! lose, matching the strict inequality used by [`LinearModel::classify`].

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{FeatureId, LinearModel, SparseInstance};

/// Largest game solved by full subset enumeration unless overridden.
pub const DEFAULT_EXACT_LIMIT: usize = 20;
/// Permutations drawn for games above the exact limit.
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct VotingGame {
    instance_id: u64,
    players: Vec<FeatureId>,
    weights: Vec<f64>,
    effective_threshold: f64,
}

impl VotingGame {
    pub fn new<I>(instance_id: u64, players: I, effective_threshold: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (FeatureId, f64)>,
    {
        if !effective_threshold.is_finite() {
            return Err(Error::NonFinite {
                what: "effective threshold".into(),
                value: effective_threshold,
            });
        }
        let mut pairs: Vec<(FeatureId, f64)> = players.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateFeature(w[0].0));
        }
        if let Some(&(f, w)) = pairs.iter().find(|p| !p.1.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("weight of player {f}"),
                value: w,
            });
        }
        let (players, weights) = pairs.into_iter().unzip();
        Ok(VotingGame {
            instance_id,
            players,
            weights,
            effective_threshold,
        })
    }

    pub fn instance_id(&self) -> u64 {
        self.instance_id
    }

    /// Players in ascending id order.
    pub fn players(&self) -> &[FeatureId] {
        &self.players
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn weight(&self, player: FeatureId) -> Option<f64> {
        self.position(player).map(|i| self.weights[i])
    }

    pub fn effective_threshold(&self) -> f64 {
        self.effective_threshold
    }

    fn position(&self, player: FeatureId) -> Option<usize> {
        self.players.binary_search(&player).ok()
    }

    #[inline]
    pub fn wins(&self, weight_sum: f64) -> bool {
        weight_sum > self.effective_threshold
    }

    pub fn value(&self, coalition: &Coalition) -> u8 {
        self.wins(coalition.weight_sum) as u8
    }

    pub fn grand_value(&self) -> u8 {
        self.wins(self.weights.iter().sum()) as u8
    }

    pub fn empty_value(&self) -> u8 {
        self.wins(0.0) as u8
    }
}

/// Builds the game for one instance; the intercept moves into the threshold.
pub fn build_game(model: &LinearModel, instance: &SparseInstance) -> Result<VotingGame> {
    // range-checks the instance against the model
    model.score(instance)?;
    VotingGame::new(
        instance.id(),
        instance.active().iter().map(|&f| (f, model.weight(f))),
        model.threshold() - model.intercept(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coalition {
    members: BTreeSet<FeatureId>,
    weight_sum: f64,
}

impl Coalition {
    pub fn empty() -> Self {
        Coalition {
            members: BTreeSet::new(),
            weight_sum: 0.0,
        }
    }

    pub fn from_members<I>(game: &VotingGame, members: I) -> Result<Self>
    where
        I: IntoIterator<Item = FeatureId>,
    {
        let mut c = Coalition::empty();
        for f in members {
            c.join(game, f)?;
        }
        Ok(c)
    }

    pub fn join(&mut self, game: &VotingGame, player: FeatureId) -> Result<()> {
        let w = game
            .weight(player)
            .ok_or_else(|| Error::contract(format!("feature {player} is not a player")))?;
        if !self.members.insert(player) {
            return Err(Error::contract(format!(
                "player {player} already in coalition"
            )));
        }
        self.weight_sum += w;
        Ok(())
    }

    pub fn members(&self) -> &BTreeSet<FeatureId> {
        &self.members
    }

    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `v(S ∪ {player}) - v(S)`.
pub fn marginal_utility(game: &VotingGame, coalition: &Coalition, player: FeatureId) -> Result<i8> {
    let w = game
        .weight(player)
        .ok_or_else(|| Error::contract(format!("feature {player} is not a player")))?;
    if coalition.members.contains(&player) {
        return Err(Error::contract(format!(
            "player {player} already in coalition"
        )));
    }
    let before = game.wins(coalition.weight_sum) as i8;
    let after = game.wins(coalition.weight_sum + w) as i8;
    Ok(after - before)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapleyMethod {
    Exact,
    MonteCarlo,
}

impl ShapleyMethod {
    pub fn name(self) -> &'static str {
        match self {
            ShapleyMethod::Exact => "exact",
            ShapleyMethod::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributionVector {
    pub instance_id: u64,
    /// One value per player, ascending by feature id.
    pub values: Vec<(FeatureId, f64)>,
    pub method: ShapleyMethod,
    pub samples: usize,
    pub seed: u64,
}

impl AttributionVector {
    pub fn get(&self, feature: FeatureId) -> Option<f64> {
        self.values
            .binary_search_by_key(&feature, |p| p.0)
            .ok()
            .map(|i| self.values[i].1)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().map(|p| p.1).sum()
    }
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

pub fn exact_shapley(game: &VotingGame) -> Result<AttributionVector> {
    exact_shapley_with_limit(game, DEFAULT_EXACT_LIMIT)
}

/// Subset-sum form of the Shapley value:
/// `φ_i = Σ_{S ⊆ N∖{i}} s!(n-s-1)!/n! · Δ_i v(S)`.
///
/// Swings are tallied as integers per coalition size before weighting, so two
/// players with identical swing profiles get bit-identical values. Memory is
/// `2^n` sums; `limit` bounds `n`.
pub fn exact_shapley_with_limit(game: &VotingGame, limit: usize) -> Result<AttributionVector> {
    let n = game.num_players();
    if n > limit || n >= usize::BITS as usize {
        return Err(Error::ExactLimitExceeded { players: n, limit });
    }
    let full = 1usize << n;
    let mut sums = vec![0.0f64; full];
    let mut win = vec![false; full];
    win[0] = game.wins(0.0);
    for mask in 1..full {
        let hi = (usize::BITS - 1 - mask.leading_zeros()) as usize;
        sums[mask] = sums[mask ^ (1 << hi)] + game.weights[hi];
        win[mask] = game.wins(sums[mask]);
    }
    drop(sums);

    // swings[i * n + s]: net swings of player i over coalitions of size s
    let mut swings = vec![0i64; n * n];
    for mask in 0..full {
        let s = mask.count_ones() as usize;
        let base = win[mask] as i64;
        for i in 0..n {
            let bit = 1 << i;
            if mask & bit == 0 {
                swings[i * n + s] += win[mask | bit] as i64 - base;
            }
        }
    }

    let coalition_weight: Vec<f64> = (0..n)
        .map(|s| 1.0 / (n as f64 * binomial_f64(n - 1, s)))
        .collect();
    let values = game
        .players
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let phi = swings[i * n..(i + 1) * n]
                .iter()
                .zip(&coalition_weight)
                .map(|(&c, &w)| c as f64 * w)
                .sum();
            (f, phi)
        })
        .collect();
    Ok(AttributionVector {
        instance_id: game.instance_id,
        values,
        method: ShapleyMethod::Exact,
        samples: 0,
        seed: 0,
    })
}

/// Net swing count per player (in player order) over `samples` uniformly
/// random join orders. Each order's swings telescope to `v(N) - v(∅)`.
pub fn swing_tally(game: &VotingGame, samples: usize, seed: u64) -> Result<Vec<i64>> {
    if samples == 0 {
        return Err(Error::contract(
            "Monte Carlo Shapley needs at least one sample",
        ));
    }
    let n = game.num_players();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut tally = vec![0i64; n];
    let start = game.wins(0.0);
    for _ in 0..samples {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut prev = start;
        for &i in &order {
            sum += game.weights[i];
            let now = game.wins(sum);
            tally[i] += now as i64 - prev as i64;
            prev = now;
        }
    }
    Ok(tally)
}

/// Monte Carlo Shapley estimate from `samples` random permutations.
pub fn approx_shapley(game: &VotingGame, samples: usize, seed: u64) -> Result<AttributionVector> {
    let tally = swing_tally(game, samples, seed)?;
    let values = game
        .players
        .iter()
        .zip(&tally)
        .map(|(&f, &c)| (f, c as f64 / samples as f64))
        .collect();
    Ok(AttributionVector {
        instance_id: game.instance_id,
        values,
        method: ShapleyMethod::MonteCarlo,
        samples,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapleyOptions {
    pub exact_limit: usize,
    pub samples: usize,
    /// Run-level seed; each instance derives its own via [`instance_seed`].
    pub seed: u64,
}

impl Default for ShapleyOptions {
    fn default() -> Self {
        ShapleyOptions {
            exact_limit: DEFAULT_EXACT_LIMIT,
            samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

/// Exact for games up to `exact_limit` players, Monte Carlo above.
pub fn shapley(game: &VotingGame, opts: &ShapleyOptions) -> Result<AttributionVector> {
    if game.num_players() <= opts.exact_limit {
        exact_shapley_with_limit(game, opts.exact_limit)
    } else {
        approx_shapley(
            game,
            opts.samples,
            instance_seed(opts.seed, game.instance_id),
        )
    }
}

/// Per-instance RNG seed, independent of processing order (SplitMix64 finalizer).
pub fn instance_seed(base_seed: u64, instance_id: u64) -> u64 {
    let mut z = base_seed ^ instance_id.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
