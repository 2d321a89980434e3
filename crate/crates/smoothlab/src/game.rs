//! Finite Bayesian games: independent private types, per-type action sets,
//! welfare aggregates and optimal profiles.
//!
//! A game holds, per player, an ordered universe of action labels and, per
//! type, the subset of the universe available to that type. Constant-strategy
//! games are the special case where every type of a player sees the full
//! universe. Utilities are supplied by a family-specific evaluator that maps
//! `(player, own type, action profile)` to a real; evaluators must be pure and
//! deterministic, and total on every profile drawn from the action universes.

use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::par;

/// Tolerance inside which a probability vector counts as normalized.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Loaders renormalize (with a warning) up to this deviation, reject beyond.
pub const PROB_RENORM_MAX: f64 = 1e-9;

/// Guard on exhaustive per-type-profile action enumerations.
pub const ACTION_ENUM_GUARD: u128 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Players maximize utility; welfare is the sum of utilities.
    Utility,
    /// Players minimize cost; "welfare" aggregates are social cost.
    Cost,
}

/// A finite distribution over a player's types.
#[derive(Clone, Debug)]
pub struct TypeDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl TypeDistribution {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.is_empty() || labels.len() != probs.len() {
            return Err(LabError::Invariant(
                "type support and probabilities must be nonempty and equal-length".into(),
            ));
        }
        let mut seen = labels.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != labels.len() {
            return Err(LabError::Invariant("type labels must be distinct".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(LabError::Invariant(
                "type probabilities must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(LabError::Invariant(format!(
                "type probabilities sum to {sum}, expected 1 within {PROB_SUM_TOL:e}"
            )));
        }
        Ok(Self { labels, probs })
    }

    /// Loader entry point: accepts sums within [`PROB_RENORM_MAX`] of 1 and
    /// renormalizes them, reporting whether it did.
    pub fn renormalized(labels: Vec<String>, probs: Vec<f64>) -> Result<(Self, bool)> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(LabError::Invariant(
                "type probabilities must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if sum == 0.0 || (sum - 1.0).abs() >= PROB_RENORM_MAX {
            return Err(LabError::Invariant(format!(
                "type probabilities sum to {sum}; rejected (deviation >= {PROB_RENORM_MAX:e})"
            )));
        }
        if (sum - 1.0).abs() <= PROB_SUM_TOL {
            return Ok((Self::new(labels, probs)?, false));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / sum).collect();
        Ok((Self::new(labels, probs)?, true))
    }

    pub fn singleton(label: impl Into<String>) -> Self {
        Self {
            labels: vec![label.into()],
            probs: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, k: usize) -> &str {
        &self.labels[k]
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.probs[k]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Mixed-radix indexing of product spaces, player 0 most significant.
///
/// Rank order therefore coincides with lexicographic order over per-player
/// digits, which is the tie-breaking order used throughout.
#[derive(Clone, Debug)]
pub struct MixedRadix {
    radices: Vec<usize>,
    strides: Vec<u64>,
    total: u64,
}

impl MixedRadix {
    pub fn new(radices: Vec<usize>) -> Result<Self> {
        let total_wide = Self::space_size(&radices);
        if total_wide > u64::MAX as u128 {
            return Err(LabError::GuardExceeded {
                size: total_wide,
                guard: u64::MAX as u128,
            });
        }
        let mut strides = vec![0u64; radices.len()];
        let mut acc = 1u64;
        for (pos, r) in radices.iter().enumerate().rev() {
            strides[pos] = acc;
            acc = acc.saturating_mul(*r as u64);
        }
        Ok(Self {
            radices,
            strides,
            total: total_wide as u64,
        })
    }

    /// Product of radices without overflow (0 radices -> empty space).
    pub fn space_size(radices: &[usize]) -> u128 {
        radices.iter().fold(1u128, |acc, r| {
            acc.saturating_mul(*r as u128)
        })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.radices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radices.is_empty()
    }

    pub fn radix(&self, pos: usize) -> usize {
        self.radices[pos]
    }

    pub fn decode_into(&self, rank: u64, out: &mut Vec<usize>) {
        out.clear();
        for stride in &self.strides {
            let r = self.radices[out.len()];
            out.push(((rank / stride) % r as u64) as usize);
        }
    }

    pub fn encode(&self, digits: &[usize]) -> u64 {
        debug_assert_eq!(digits.len(), self.radices.len());
        digits
            .iter()
            .zip(&self.strides)
            .map(|(d, s)| *d as u64 * s)
            .sum()
    }

    pub fn digit(&self, rank: u64, pos: usize) -> usize {
        ((rank / self.strides[pos]) % self.radices[pos] as u64) as usize
    }

    /// Rank with the digit at `pos` replaced by `new`.
    pub fn replace(&self, rank: u64, pos: usize, new: usize) -> u64 {
        let old = self.digit(rank, pos);
        // two's-complement delta: exact for new < old as well
        rank.wrapping_add(
            (new as u64)
                .wrapping_sub(old as u64)
                .wrapping_mul(self.strides[pos]),
        )
    }
}

/// Family-specific utility (or cost) evaluator.
pub trait Utility: Send + Sync {
    /// Value for `player` of own type `own_type` under the action `profile`,
    /// given as per-player indices into the action universes.
    fn eval(&self, player: usize, own_type: usize, profile: &[usize]) -> f64;
}

impl<F> Utility for F
where
    F: Fn(usize, usize, &[usize]) -> f64 + Send + Sync,
{
    fn eval(&self, player: usize, own_type: usize, profile: &[usize]) -> f64 {
        self(player, own_type, profile)
    }
}

/// A finite Bayesian game.
#[derive(Clone)]
pub struct BayesianGame {
    objective: Objective,
    type_dists: Vec<TypeDistribution>,
    /// Per player: global action universe, strictly ascending labels.
    actions: Vec<Vec<String>>,
    /// Per player, per type: sorted universe indices available to that type.
    available: Vec<Vec<Vec<usize>>>,
    utility: Arc<dyn Utility>,
}

impl std::fmt::Debug for BayesianGame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BayesianGame")
            .field("objective", &self.objective)
            .field("players", &self.players())
            .field(
                "universe_sizes",
                &self.actions.iter().map(Vec::len).collect::<Vec<_>>(),
            )
            .finish()
    }
}

impl BayesianGame {
    pub fn new(
        objective: Objective,
        type_dists: Vec<TypeDistribution>,
        actions: Vec<Vec<String>>,
        available: Vec<Vec<Vec<usize>>>,
        utility: Arc<dyn Utility>,
    ) -> Result<Self> {
        let n = type_dists.len();
        if n == 0 {
            return Err(LabError::Invariant("game needs at least one player".into()));
        }
        if actions.len() != n || available.len() != n {
            return Err(LabError::Invariant(
                "actions and availability must cover every player".into(),
            ));
        }
        for (i, labels) in actions.iter().enumerate() {
            if labels.is_empty() {
                return Err(LabError::Invariant(format!(
                    "player {i} has an empty action universe"
                )));
            }
            if !labels.windows(2).all(|w| w[0] < w[1]) {
                return Err(LabError::Invariant(format!(
                    "player {i} action labels must be strictly ascending"
                )));
            }
            if available[i].len() != type_dists[i].len() {
                return Err(LabError::Invariant(format!(
                    "player {i} availability must cover every type"
                )));
            }
            for (t, avail) in available[i].iter().enumerate() {
                if avail.is_empty() {
                    return Err(LabError::Invariant(format!(
                        "player {i} type {t} has no available actions"
                    )));
                }
                if !avail.windows(2).all(|w| w[0] < w[1])
                    || *avail.last().unwrap() >= labels.len()
                {
                    return Err(LabError::Invariant(format!(
                        "player {i} type {t} availability must be sorted, distinct, in range"
                    )));
                }
            }
        }
        Ok(Self {
            objective,
            type_dists,
            actions,
            available,
            utility,
        })
    }

    /// Constant-strategy-space game: every type sees the full universe.
    pub fn constant_space(
        objective: Objective,
        type_dists: Vec<TypeDistribution>,
        actions: Vec<Vec<String>>,
        utility: Arc<dyn Utility>,
    ) -> Result<Self> {
        let available = actions
            .iter()
            .zip(&type_dists)
            .map(|(labels, dist)| vec![(0..labels.len()).collect::<Vec<_>>(); dist.len()])
            .collect();
        Self::new(objective, type_dists, actions, available, utility)
    }

    pub fn players(&self) -> usize {
        self.type_dists.len()
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn type_dist(&self, player: usize) -> &TypeDistribution {
        &self.type_dists[player]
    }

    /// Replaces one player's type distribution (support size must match).
    pub fn with_type_dist(&self, player: usize, dist: TypeDistribution) -> Result<Self> {
        if dist.len() != self.type_dists[player].len() {
            return Err(LabError::Invariant(
                "replacement distribution must keep the support size".into(),
            ));
        }
        let mut next = self.clone();
        next.type_dists[player] = dist;
        Ok(next)
    }

    pub fn action_labels(&self, player: usize) -> &[String] {
        &self.actions[player]
    }

    pub fn action_label(&self, player: usize, action: usize) -> &str {
        &self.actions[player][action]
    }

    pub fn available(&self, player: usize, type_idx: usize) -> &[usize] {
        &self.available[player][type_idx]
    }

    /// True when every type of every player sees the full universe.
    pub fn is_constant_space(&self) -> bool {
        self.available.iter().enumerate().all(|(i, per_type)| {
            per_type
                .iter()
                .all(|avail| avail.len() == self.actions[i].len())
        })
    }

    pub fn utility(&self, player: usize, own_type: usize, profile: &[usize]) -> f64 {
        self.utility.eval(player, own_type, profile)
    }

    pub fn utility_fn(&self) -> Arc<dyn Utility> {
        Arc::clone(&self.utility)
    }

    /// Indexing over type profiles (player 0 most significant).
    pub fn type_space(&self) -> MixedRadix {
        MixedRadix::new(self.type_dists.iter().map(TypeDistribution::len).collect())
            .expect("type spaces are small")
    }

    /// Joint probability of a type profile (independent players).
    pub fn type_profile_prob(&self, t: &[usize]) -> f64 {
        t.iter()
            .enumerate()
            .map(|(i, &ti)| self.type_dists[i].prob(ti))
            .product()
    }

    /// Indexing over the per-type action space `A(t)`; digits are positions in
    /// each player's availability list.
    pub fn action_space(&self, t: &[usize]) -> Result<ActionSpace<'_>> {
        let lists: Vec<&[usize]> = t
            .iter()
            .enumerate()
            .map(|(i, &ti)| self.available(i, ti))
            .collect();
        let size = MixedRadix::space_size(&lists.iter().map(|l| l.len()).collect::<Vec<_>>());
        if size > ACTION_ENUM_GUARD {
            return Err(LabError::GuardExceeded {
                size,
                guard: ACTION_ENUM_GUARD,
            });
        }
        let radix = MixedRadix::new(lists.iter().map(|l| l.len()).collect())?;
        Ok(ActionSpace { lists, radix })
    }

    /// Indexing over the product of full action universes.
    pub fn universe_space(&self) -> Result<MixedRadix> {
        MixedRadix::new(self.actions.iter().map(Vec::len).collect())
    }

    pub fn validate_profile(&self, t: &[usize], a: &[usize]) -> Result<()> {
        if t.len() != self.players() || a.len() != self.players() {
            return Err(LabError::Invariant(
                "type/action profile length must equal the player count".into(),
            ));
        }
        for i in 0..self.players() {
            if !self.available(i, t[i]).contains(&a[i]) {
                return Err(LabError::InvalidProfile {
                    player: i,
                    action: self
                        .actions[i]
                        .get(a[i])
                        .cloned()
                        .unwrap_or_else(|| format!("#{}", a[i])),
                    type_id: self.type_dists[i].label(t[i]).to_string(),
                });
            }
        }
        Ok(())
    }

    /// Sum of player values at `(t, a)` without validation; callers guarantee
    /// `a ∈ A(t)`. Summation is in player order.
    pub fn welfare_unchecked(&self, t: &[usize], a: &[usize]) -> f64 {
        (0..self.players())
            .map(|i| self.utility.eval(i, t[i], a))
            .sum()
    }

    /// Social welfare `Σ_i u_i^{t_i}(a)`; for cost games this is social cost.
    pub fn social_welfare(&self, t: &[usize], a: &[usize]) -> Result<f64> {
        self.validate_profile(t, a)?;
        Ok(self.welfare_unchecked(t, a))
    }

    /// Exhaustive optimum of social welfare over `A(t)` (argmin for cost),
    /// ties to the lexicographically first profile.
    pub fn optimal_profile(&self, t: &[usize]) -> Result<(Vec<usize>, f64)> {
        let space = self.action_space(t)?;
        let flip = match self.objective {
            Objective::Utility => -1.0,
            Objective::Cost => 1.0,
        };
        let t_owned = t.to_vec();
        let (best_rank, key) = par::min_by_index(space.total(), |rank| {
            let mut buf = Vec::with_capacity(self.players());
            space.decode_into(rank, &mut buf);
            flip * self.welfare_unchecked(&t_owned, &buf)
        })
        .expect("action space is nonempty");
        let mut profile = Vec::with_capacity(self.players());
        space.decode_into(best_rank, &mut profile);
        Ok((profile, flip * key))
    }

    /// `Σ_t Pr[t]·SW^t(s(t))`, summed in type-profile rank order.
    pub fn expected_welfare(&self, s: &StrategyProfile) -> Result<f64> {
        s.validate(self)?;
        let space = self.type_space();
        let mut t = Vec::with_capacity(self.players());
        let mut acc = 0.0;
        for rank in 0..space.total() {
            space.decode_into(rank, &mut t);
            let a: Vec<usize> = (0..self.players()).map(|i| s.action(i, t[i])).collect();
            acc += self.type_profile_prob(&t) * self.welfare_unchecked(&t, &a);
        }
        Ok(acc)
    }

    /// `Σ_t Pr[t]·SW^t(Opt(t))`.
    pub fn expected_optimal_welfare(&self) -> Result<f64> {
        let space = self.type_space();
        let mut t = Vec::with_capacity(self.players());
        let mut acc = 0.0;
        for rank in 0..space.total() {
            space.decode_into(rank, &mut t);
            let (_, value) = self.optimal_profile(&t)?;
            acc += self.type_profile_prob(&t) * value;
        }
        Ok(acc)
    }
}

/// The action space `A(t)` for a fixed type profile.
pub struct ActionSpace<'g> {
    lists: Vec<&'g [usize]>,
    radix: MixedRadix,
}

impl ActionSpace<'_> {
    pub fn total(&self) -> u64 {
        self.radix.total()
    }

    /// Decodes a rank into per-player universe action indices.
    pub fn decode_into(&self, rank: u64, out: &mut Vec<usize>) {
        out.clear();
        for (pos, list) in self.lists.iter().enumerate() {
            out.push(list[self.radix.digit(rank, pos)]);
        }
    }

    pub fn radix(&self) -> &MixedRadix {
        &self.radix
    }
}

/// A pure strategy profile: one action per (player, type).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyProfile {
    /// `choices[player][type]` is a universe action index.
    pub choices: Vec<Vec<usize>>,
}

impl StrategyProfile {
    pub fn new(choices: Vec<Vec<usize>>) -> Self {
        Self { choices }
    }

    pub fn action(&self, player: usize, type_idx: usize) -> usize {
        self.choices[player][type_idx]
    }

    pub fn validate(&self, game: &BayesianGame) -> Result<()> {
        if self.choices.len() != game.players() {
            return Err(LabError::Invariant(
                "strategy profile must cover every player".into(),
            ));
        }
        for (i, per_type) in self.choices.iter().enumerate() {
            if per_type.len() != game.type_dist(i).len() {
                return Err(LabError::Invariant(format!(
                    "player {i} strategy must cover every type"
                )));
            }
            for (t, &a) in per_type.iter().enumerate() {
                if !game.available(i, t).contains(&a) {
                    return Err(LabError::InvalidProfile {
                        player: i,
                        action: game
                            .action_labels(i)
                            .get(a)
                            .cloned()
                            .unwrap_or_else(|| format!("#{a}")),
                        type_id: game.type_dist(i).label(t).to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Precomputed utility tensor over the universe product, used to replace
/// evaluator calls with lookups inside hot enumeration loops.
pub struct UtilityTable {
    /// Blocks laid out per (player, own type), each `universe_total` long.
    values: Vec<f64>,
    block_offsets: Vec<Vec<usize>>,
    radix: MixedRadix,
}

impl UtilityTable {
    /// Builds the tensor when its size stays under `max_entries`.
    pub fn build(game: &BayesianGame, max_entries: u64) -> Option<UtilityTable> {
        let radix = game.universe_space().ok()?;
        let per_block = radix.total();
        let blocks: u64 = (0..game.players())
            .map(|i| game.type_dist(i).len() as u64)
            .sum();
        let entries = (per_block as u128).checked_mul(blocks as u128)?;
        if entries == 0 || entries > max_entries as u128 {
            return None;
        }
        let mut values = Vec::with_capacity(entries as usize);
        let mut block_offsets = Vec::with_capacity(game.players());
        for player in 0..game.players() {
            let mut offsets = Vec::new();
            for own_type in 0..game.type_dist(player).len() {
                offsets.push(values.len());
                let radix_ref = &radix;
                let block = par::map_collect(per_block as usize, move |rank| {
                    let mut buf = Vec::with_capacity(game.players());
                    radix_ref.decode_into(rank as u64, &mut buf);
                    game.utility(player, own_type, &buf)
                });
                values.extend_from_slice(&block);
            }
            block_offsets.push(offsets);
        }
        Some(UtilityTable {
            values,
            block_offsets,
            radix,
        })
    }

    pub fn radix(&self) -> &MixedRadix {
        &self.radix
    }

    #[inline]
    pub fn eval(&self, player: usize, own_type: usize, rank: u64) -> f64 {
        self.values[self.block_offsets[player][own_type] + rank as usize]
    }
}

/// Utility evaluation that goes through the tensor when one was built.
pub struct Evaluator<'g> {
    pub game: &'g BayesianGame,
    table: Option<UtilityTable>,
    radix: MixedRadix,
}

impl<'g> Evaluator<'g> {
    /// Default tensor budget (entries) for cached evaluation.
    pub const DEFAULT_CACHE_ENTRIES: u64 = 20_000_000;

    pub fn new(game: &'g BayesianGame) -> Result<Self> {
        let radix = game.universe_space()?;
        Ok(Self {
            game,
            table: UtilityTable::build(game, Self::DEFAULT_CACHE_ENTRIES),
            radix,
        })
    }

    pub fn without_cache(game: &'g BayesianGame) -> Result<Self> {
        let radix = game.universe_space()?;
        Ok(Self {
            game,
            table: None,
            radix,
        })
    }

    pub fn radix(&self) -> &MixedRadix {
        &self.radix
    }

    /// `rank` must encode `profile` in the universe radix.
    #[inline]
    pub fn eval(&self, player: usize, own_type: usize, rank: u64, profile: &[usize]) -> f64 {
        match &self.table {
            Some(tb) => tb.eval(player, own_type, rank),
            None => self.game.utility(player, own_type, profile),
        }
    }

    /// Value for `player` when position `pos` of the base profile is replaced
    /// by `new`. `scratch` must hold the decoded base profile; it is restored
    /// before returning.
    #[inline]
    pub fn eval_replaced(
        &self,
        player: usize,
        own_type: usize,
        base_rank: u64,
        scratch: &mut [usize],
        pos: usize,
        new: usize,
    ) -> f64 {
        match &self.table {
            Some(tb) => tb.eval(player, own_type, self.radix.replace(base_rank, pos, new)),
            None => {
                let old = scratch[pos];
                scratch[pos] = new;
                let v = self.game.utility(player, own_type, scratch);
                scratch[pos] = old;
                v
            }
        }
    }

    /// Welfare at `(t, profile)`, summed in player order.
    #[inline]
    pub fn welfare(&self, t: &[usize], rank: u64, profile: &[usize]) -> f64 {
        (0..self.game.players())
            .map(|i| self.eval(i, t[i], rank, profile))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_game(per_player_utils: Vec<Vec<f64>>) -> BayesianGame {
        // one type per player, one action per entry, u_i depends on own action
        let n = per_player_utils.len();
        let dists = (0..n).map(|_| TypeDistribution::singleton("t")).collect();
        let actions = per_player_utils
            .iter()
            .map(|us| (0..us.len()).map(|k| format!("a{k}")).collect())
            .collect();
        let utils = per_player_utils.clone();
        BayesianGame::constant_space(
            Objective::Utility,
            dists,
            actions,
            Arc::new(move |player: usize, _own: usize, profile: &[usize]| {
                utils[player][profile[player]]
            }),
        )
        .unwrap()
    }

    #[test]
    fn single_player_constant_utility() {
        let g = const_game(vec![vec![5.0]]);
        assert_eq!(g.social_welfare(&[0], &[0]).unwrap(), 5.0);
    }

    #[test]
    fn welfare_sums_zero_terms() {
        let g = const_game(vec![vec![3.0], vec![0.0]]);
        assert_eq!(g.social_welfare(&[0, 0], &[0, 0]).unwrap(), 3.0);
    }

    #[test]
    fn optimal_profile_picks_argmax() {
        // actions x: u=1, y: u=7
        let g = const_game(vec![vec![1.0, 7.0]]);
        let (profile, value) = g.optimal_profile(&[0]).unwrap();
        assert_eq!(profile, vec![1]);
        assert_eq!(value, 7.0);
    }

    #[test]
    fn optimal_profile_tie_is_lexicographic() {
        let g = const_game(vec![vec![2.0, 2.0], vec![1.0, 1.0]]);
        let (profile, value) = g.optimal_profile(&[0, 0]).unwrap();
        assert_eq!(profile, vec![0, 0]);
        assert_eq!(value, 3.0);
    }

    #[test]
    fn cost_objective_minimizes() {
        let dists = vec![TypeDistribution::singleton("t")];
        let g = BayesianGame::constant_space(
            Objective::Cost,
            dists,
            vec![vec!["a0".into(), "a1".into()]],
            Arc::new(|_, _, p: &[usize]| if p[0] == 0 { 4.0 } else { 2.0 }),
        )
        .unwrap();
        let (profile, value) = g.optimal_profile(&[0]).unwrap();
        assert_eq!(profile, vec![1]);
        assert_eq!(value, 2.0);
    }

    #[test]
    fn expected_welfare_singleton_matches_pointwise() {
        let g = const_game(vec![vec![1.0, 7.0]]);
        let s = StrategyProfile::new(vec![vec![1]]);
        assert_eq!(g.expected_welfare(&s).unwrap(), 7.0);
        assert_eq!(g.expected_optimal_welfare().unwrap(), 7.0);
    }

    #[test]
    fn expected_welfare_is_mean_over_equiprobable_profiles() {
        // one player, two types 50/50; action fixed; u depends on own type
        let dist = TypeDistribution::new(
            vec!["lo".into(), "hi".into()],
            vec![0.5, 0.5],
        )
        .unwrap();
        let g = BayesianGame::constant_space(
            Objective::Utility,
            vec![dist],
            vec![vec!["a".into()]],
            Arc::new(|_, own: usize, _: &[usize]| if own == 0 { 0.0 } else { 4.0 }),
        )
        .unwrap();
        let s = StrategyProfile::new(vec![vec![0, 0]]);
        assert_eq!(g.expected_welfare(&s).unwrap(), 2.0);
    }

    #[test]
    fn zero_utilities_give_zero_expected_optimum() {
        let g = const_game(vec![vec![0.0, 0.0], vec![0.0]]);
        assert_eq!(g.expected_optimal_welfare().unwrap(), 0.0);
    }

    #[test]
    fn invalid_profile_is_rejected() {
        let dist = TypeDistribution::new(vec!["a".into(), "b".into()], vec![0.5, 0.5]).unwrap();
        let g = BayesianGame::new(
            Objective::Utility,
            vec![dist],
            vec![vec!["x".into(), "y".into()]],
            vec![vec![vec![0], vec![1]]],
            Arc::new(|_, _, _: &[usize]| 0.0),
        )
        .unwrap();
        assert!(g.social_welfare(&[0], &[0]).is_ok());
        assert!(matches!(
            g.social_welfare(&[0], &[1]),
            Err(LabError::InvalidProfile { .. })
        ));
    }

    #[test]
    fn probability_validation() {
        assert!(TypeDistribution::new(vec!["a".into()], vec![0.9]).is_err());
        assert!(TypeDistribution::new(vec!["a".into(), "a".into()], vec![0.5, 0.5]).is_err());
        let (d, renorm) =
            TypeDistribution::renormalized(vec!["a".into(), "b".into()], vec![0.5, 0.5 + 3e-10])
                .unwrap();
        assert!(renorm);
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() <= PROB_SUM_TOL);
        assert!(TypeDistribution::renormalized(vec!["a".into()], vec![0.9]).is_err());
    }

    #[test]
    fn mixed_radix_roundtrip_and_replace() {
        let r = MixedRadix::new(vec![3, 4, 2]).unwrap();
        assert_eq!(r.total(), 24);
        let mut buf = Vec::new();
        for rank in 0..r.total() {
            r.decode_into(rank, &mut buf);
            assert_eq!(r.encode(&buf), rank);
        }
        let rank = r.encode(&[2, 1, 0]);
        assert_eq!(r.replace(rank, 1, 3), r.encode(&[2, 3, 0]));
        assert_eq!(r.digit(rank, 0), 2);
    }

    #[test]
    fn utility_table_matches_direct_eval() {
        let g = const_game(vec![vec![1.0, 2.0], vec![3.0, 4.0, 5.0]]);
        let table = UtilityTable::build(&g, 1000).unwrap();
        let radix = g.universe_space().unwrap();
        let mut buf = Vec::new();
        for rank in 0..radix.total() {
            radix.decode_into(rank, &mut buf);
            for i in 0..2 {
                assert_eq!(table.eval(i, 0, rank), g.utility(i, 0, &buf));
            }
        }
    }

    #[test]
    fn expected_welfare_linear_in_probability_vector() {
        let dist = |p: f64| {
            TypeDistribution::new(vec!["lo".into(), "hi".into()], vec![p, 1.0 - p]).unwrap()
        };
        let g = BayesianGame::constant_space(
            Objective::Utility,
            vec![dist(0.5), TypeDistribution::singleton("t")],
            vec![vec!["a".into()], vec!["a".into()]],
            Arc::new(|player: usize, own: usize, _: &[usize]| {
                if player == 0 && own == 1 {
                    3.0
                } else {
                    1.0
                }
            }),
        )
        .unwrap();
        let s = StrategyProfile::new(vec![vec![0, 0], vec![0]]);
        let at = |p: f64| {
            g.with_type_dist(0, dist(p))
                .unwrap()
                .expected_welfare(&s)
                .unwrap()
        };
        let (w0, w1, mid) = (at(0.25), at(0.75), at(0.5));
        assert!((0.5 * (w0 + w1) - mid).abs() < 1e-12);
    }
}
