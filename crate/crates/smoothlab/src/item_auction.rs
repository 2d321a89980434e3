//! Simultaneous per-item first- and second-price auctions with combinatorial
//! bidders on a shared bid grid.
//!
//! The induced Bayesian game has one player per bidder plus the seller as a
//! formal last player with a single type and a single action whose utility is
//! the total payment. Both deviation constructions used by the first-price
//! semi-smoothness certificates live here: bidding half the supporting
//! additive values (snapped down to the grid) and the randomized deviation
//! whose expected utility has the closed form
//! `Σ_j max(0, a_j(1−1/e) − p_j)`.

use std::io::Write;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::game::{BayesianGame, Evaluator, MixedRadix, Objective, TypeDistribution};
use crate::smoothness::{self, Certificate, CheckOptions, DeviationMap};
use crate::valuations::{mask_items, Valuation};
#[cfg(test)]
use crate::valuations::XOSValuation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pricing {
    FirstPrice,
    SecondPrice,
}

/// Shared per-item bid grid `{0, step, 2·step, …}`.
#[derive(Clone, Copy, Debug)]
pub struct BidGrid {
    step: f64,
    levels: usize,
}

impl BidGrid {
    pub fn new(step: f64, max: f64) -> Result<Self> {
        if !(step > 0.0) || !max.is_finite() || max < 0.0 {
            return Err(LabError::Invariant(
                "bid grid needs step > 0 and max >= 0".into(),
            ));
        }
        let levels = ((max / step) + 1e-9).floor() as usize + 1;
        Ok(Self { step, levels })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn value(&self, level: usize) -> f64 {
        level as f64 * self.step
    }

    pub fn max_value(&self) -> f64 {
        self.value(self.levels - 1)
    }

    /// Largest grid level with value <= x (x >= 0).
    pub fn snap_down(&self, x: f64) -> usize {
        let k = ((x / self.step) + 1e-9).floor() as usize;
        k.min(self.levels - 1)
    }

    /// Level of a grid value, or an error if `x` is off-grid.
    pub fn level_of(&self, x: f64) -> Result<usize> {
        let k = self.snap_down(x);
        if (self.value(k) - x).abs() > 1e-9 {
            return Err(LabError::Invariant(format!("bid {x} is not on the grid")));
        }
        Ok(k)
    }
}

#[derive(Clone, Debug)]
pub struct BidderSpec {
    pub types: TypeDistribution,
    /// One valuation per type, aligned with the distribution support.
    pub valuations: Vec<Valuation>,
}

#[derive(Clone, Debug)]
pub struct ItemAuction {
    pub pricing: Pricing,
    pub items: usize,
    pub grid: BidGrid,
    /// Second price only: restrict bids to `b_ij <= v_i({j})`.
    pub no_overbidding: bool,
    pub bidders: Vec<BidderSpec>,
}

/// Outcome of one bid profile: per-bidder item masks, per-item prices, and
/// utilities for the bidders plus the seller (last entry).
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub allocation: Vec<u32>,
    pub prices: Vec<f64>,
    pub utilities: Vec<f64>,
}

impl ItemAuction {
    pub fn bidder_count(&self) -> usize {
        self.bidders.len()
    }

    fn validate(&self) -> Result<()> {
        if self.bidders.is_empty() {
            return Err(LabError::Invariant("auction needs bidders".into()));
        }
        if self.items == 0 || self.items > 16 {
            return Err(LabError::Invariant("items must be in 1..=16".into()));
        }
        for (i, b) in self.bidders.iter().enumerate() {
            if b.valuations.len() != b.types.len() {
                return Err(LabError::Invariant(format!(
                    "bidder {i} needs one valuation per type"
                )));
            }
            for v in &b.valuations {
                if v.items() != self.items {
                    return Err(LabError::Invariant(format!(
                        "bidder {i} valuation item count mismatch"
                    )));
                }
                if v.grid_reach() > self.grid.max_value() + 1e-9 {
                    return Err(LabError::Invariant(format!(
                        "bidder {i} valuation exceeds the bid grid maximum"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Allocation, prices, and utilities for explicit grid-value bids.
    pub fn allocate_and_price(&self, bids: &[Vec<f64>]) -> Result<Outcome> {
        if bids.len() != self.bidder_count() {
            return Err(LabError::Invariant("one bid vector per bidder".into()));
        }
        let mut levels = Vec::with_capacity(bids.len());
        for (i, b) in bids.iter().enumerate() {
            if b.len() != self.items {
                return Err(LabError::InvalidAction {
                    player: i,
                    reason: "bid vector length must equal the item count".into(),
                });
            }
            let mut row = Vec::with_capacity(self.items);
            for &x in b {
                row.push(self.grid.level_of(x).map_err(|_| LabError::InvalidAction {
                    player: i,
                    reason: format!("bid {x} not on the grid"),
                })? as u16);
            }
            levels.push(row);
        }
        let refs: Vec<&[u16]> = levels.iter().map(Vec::as_slice).collect();
        // outcome under the first type of each bidder is allocation-correct for
        // any types; utilities here use type 0 valuations.
        Ok(outcome_from_levels(
            self,
            &refs,
            &vec![0; self.bidder_count()],
        ))
    }
}

/// Core auction evaluation on grid levels; `types` selects each bidder's
/// valuation. Utilities: bidders get `v_i(X_i) − Σ_{j∈X_i} p_j`, the seller
/// (last entry) gets `Σ_j p_j`.
fn outcome_from_levels(auction: &ItemAuction, bids: &[&[u16]], types: &[usize]) -> Outcome {
    let n = auction.bidder_count();
    let m = auction.items;
    let mut allocation = vec![0u32; n];
    let mut prices = vec![0.0; m];
    for j in 0..m {
        let mut winner = 0usize;
        let mut best = bids[0][j];
        for (i, b) in bids.iter().enumerate().skip(1) {
            if b[j] > best {
                best = b[j];
                winner = i;
            }
        }
        allocation[winner] |= 1 << j;
        let price_level = match auction.pricing {
            Pricing::FirstPrice => best,
            Pricing::SecondPrice => {
                let mut second = 0u16;
                for (i, b) in bids.iter().enumerate() {
                    if i != winner && b[j] > second {
                        second = b[j];
                    }
                }
                second
            }
        };
        prices[j] = auction.grid.value(price_level as usize);
    }
    let mut utilities = Vec::with_capacity(n + 1);
    let mut revenue = 0.0;
    for i in 0..n {
        let mut paid = 0.0;
        for j in mask_items(allocation[i]) {
            paid += prices[j];
        }
        revenue += paid;
        let v = auction.bidders[i].valuations[types[i]].value(allocation[i]);
        utilities.push(v - paid);
    }
    utilities.push(revenue);
    Outcome {
        allocation,
        prices,
        utilities,
    }
}

/// Optimal allocation of items to bidders for a fixed valuation profile,
/// by direct enumeration of the `n^m` assignments (item-major, lower bidder
/// first on ties). Returns per-bidder masks and the total value.
pub fn optimal_allocation(auction: &ItemAuction, types: &[usize]) -> (Vec<u32>, f64) {
    let n = auction.bidder_count();
    let m = auction.items;
    let total = (n as u64).pow(m as u32);
    let mut best_masks = vec![0u32; n];
    let mut best_value = f64::NEG_INFINITY;
    let mut masks = vec![0u32; n];
    for rank in 0..total {
        masks.iter_mut().for_each(|x| *x = 0);
        let mut r = rank;
        for j in (0..m).rev() {
            masks[(r % n as u64) as usize] |= 1 << j;
            r /= n as u64;
        }
        let value: f64 = (0..n)
            .map(|i| auction.bidders[i].valuations[types[i]].value(masks[i]))
            .sum();
        if value > best_value {
            best_value = value;
            best_masks.copy_from_slice(&masks);
        }
    }
    (best_masks, best_value)
}

/// Precomputed per-type-profile data shared by the game and deviation maps.
struct AuctionData {
    auction: ItemAuction,
    /// Bid level vectors for every universe action (shared across bidders).
    bid_vectors: Vec<Vec<u16>>,
    bidder_type_radix: MixedRadix,
    /// Per bidder-type-profile rank: optimal allocation, its value, and per
    /// bidder the additive cover on their optimal set.
    opt_allocs: Vec<Vec<u32>>,
    opt_values: Vec<f64>,
    covers: Vec<Vec<Vec<f64>>>,
    /// Half-bid deviation actions per (type profile, bidder).
    half_bid_actions: Vec<Vec<usize>>,
}

impl AuctionData {
    fn bidder_rank(&self, t: &[usize]) -> u64 {
        self.bidder_type_radix.encode(&t[..self.auction.bidder_count()])
    }
}

struct AuctionUtility {
    data: Arc<AuctionData>,
}

impl crate::game::Utility for AuctionUtility {
    fn eval(&self, player: usize, own_type: usize, profile: &[usize]) -> f64 {
        let auction = &self.data.auction;
        let n = auction.bidder_count();
        let bids: Vec<&[u16]> = (0..n)
            .map(|k| self.data.bid_vectors[profile[k]].as_slice())
            .collect();
        // only the acting player's valuation matters; outcome allocation and
        // prices are type-independent
        let mut types = vec![0usize; n];
        if player < n {
            types[player] = own_type;
        }
        let outcome = outcome_from_levels(auction, &bids, &types);
        outcome.utilities[player]
    }
}

/// The auction as a Bayesian game, with its deviation constructions.
pub struct ItemAuctionGame {
    auction: ItemAuction,
    game: BayesianGame,
    data: Arc<AuctionData>,
}

/// Deviation flavor for the first-price certificates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FpDeviation {
    /// Bid `a_j/2` (snapped down to the grid) on the optimal set.
    HalfBid,
    /// Randomized bid evaluated in closed form.
    Randomized,
}

impl ItemAuctionGame {
    pub fn build(auction: ItemAuction) -> Result<Self> {
        auction.validate()?;
        let n = auction.bidder_count();
        let m = auction.items;
        let levels = auction.grid.levels();
        let action_count = (levels as u128).pow(m as u32);
        if action_count > 1_000_000 {
            return Err(LabError::GuardExceeded {
                size: action_count,
                guard: 1_000_000,
            });
        }
        let action_count = action_count as usize;

        // universe of bid vectors, item-major, level-minor (rank order is
        // lexicographic over the vectors)
        let mut bid_vectors = Vec::with_capacity(action_count);
        for rank in 0..action_count {
            let mut v = vec![0u16; m];
            let mut r = rank;
            for j in (0..m).rev() {
                v[j] = (r % levels) as u16;
                r /= levels;
            }
            bid_vectors.push(v);
        }
        let width = (levels.max(2) - 1).to_string().len();
        let labels: Vec<String> = bid_vectors
            .iter()
            .map(|v| {
                let parts: Vec<String> =
                    v.iter().map(|k| format!("{:0width$}", k)).collect();
                format!("b{}", parts.join("-"))
            })
            .collect();

        let bidder_type_radix =
            MixedRadix::new(auction.bidders.iter().map(|b| b.types.len()).collect())?;

        // per type profile: optimal allocation, value, covers, half-bid actions
        let mut opt_allocs = Vec::new();
        let mut opt_values = Vec::new();
        let mut covers = Vec::new();
        let mut half_bid_actions = Vec::new();
        let mut t = Vec::new();
        for rank in 0..bidder_type_radix.total() {
            bidder_type_radix.decode_into(rank, &mut t);
            let (masks, value) = optimal_allocation(&auction, &t);
            let mut per_bidder_cover = Vec::with_capacity(n);
            let mut per_bidder_action = Vec::with_capacity(n);
            for i in 0..n {
                let cover = auction.bidders[i].valuations[t[i]].cover(masks[i]);
                let mut lvls = vec![0u16; m];
                for j in mask_items(masks[i]) {
                    lvls[j] = auction.grid.snap_down(cover[j] / 2.0) as u16;
                }
                let mut act = 0usize;
                for j in 0..m {
                    act = act * levels + lvls[j] as usize;
                }
                per_bidder_cover.push(cover);
                per_bidder_action.push(act);
            }
            opt_allocs.push(masks);
            opt_values.push(value);
            covers.push(per_bidder_cover);
            half_bid_actions.push(per_bidder_action);
        }

        let data = Arc::new(AuctionData {
            auction: auction.clone(),
            bid_vectors,
            bidder_type_radix,
            opt_allocs,
            opt_values,
            covers,
            half_bid_actions,
        });

        // assemble the Bayesian game: bidders then the seller
        let mut type_dists: Vec<TypeDistribution> = auction
            .bidders
            .iter()
            .map(|b| b.types.clone())
            .collect();
        type_dists.push(TypeDistribution::singleton("seller"));
        let mut actions: Vec<Vec<String>> = (0..n).map(|_| labels.clone()).collect();
        actions.push(vec!["noop".into()]);
        let mut available: Vec<Vec<Vec<usize>>> = Vec::with_capacity(n + 1);
        for i in 0..n {
            let mut per_type = Vec::new();
            for ti in 0..auction.bidders[i].types.len() {
                let all: Vec<usize> = (0..action_count).collect();
                if matches!(auction.pricing, Pricing::SecondPrice) && auction.no_overbidding {
                    let v = &auction.bidders[i].valuations[ti];
                    let allowed: Vec<usize> = all
                        .iter()
                        .copied()
                        .filter(|&a| {
                            data.bid_vectors[a].iter().enumerate().all(|(j, &lvl)| {
                                auction.grid.value(lvl as usize) <= v.value(1 << j) + 1e-9
                            })
                        })
                        .collect();
                    per_type.push(allowed);
                } else {
                    per_type.push(all);
                }
            }
            available.push(per_type);
        }
        available.push(vec![vec![0]]);
        let game = BayesianGame::new(
            Objective::Utility,
            type_dists,
            actions,
            available,
            Arc::new(AuctionUtility {
                data: Arc::clone(&data),
            }),
        )?;
        Ok(Self {
            auction,
            game,
            data,
        })
    }

    pub fn auction(&self) -> &ItemAuction {
        &self.auction
    }

    pub fn game(&self) -> &BayesianGame {
        &self.game
    }

    /// Certificate slack `n·grid_step` absorbing bid snapping.
    pub fn slack(&self) -> f64 {
        self.auction.bidder_count() as f64 * self.auction.grid.step()
    }

    /// Largest `β` across bidder types (1 when everyone is XOS).
    pub fn max_beta(&self) -> f64 {
        self.auction
            .bidders
            .iter()
            .flat_map(|b| b.valuations.iter().map(Valuation::beta))
            .fold(1.0, f64::max)
    }

    /// Universe action index of the half-bid deviation for `bidder` at the
    /// bidder type profile `t` (bidders only).
    pub fn half_bid_action(&self, t: &[usize], bidder: usize) -> usize {
        let rank = self.data.bidder_type_radix.encode(t);
        self.data.half_bid_actions[rank as usize][bidder]
    }

    /// Per-item grid bids of the half-bid deviation.
    pub fn half_bid_vector(&self, t: &[usize], bidder: usize) -> Vec<f64> {
        let action = self.half_bid_action(t, bidder);
        self.data.bid_vectors[action]
            .iter()
            .map(|&lvl| self.auction.grid.value(lvl as usize))
            .collect()
    }

    pub fn deviation_map(&self, kind: FpDeviation) -> Box<dyn DeviationMap + '_> {
        match kind {
            FpDeviation::HalfBid => Box::new(HalfBidDeviation {
                data: Arc::clone(&self.data),
            }),
            FpDeviation::Randomized => Box::new(RandomizedDeviation {
                data: Arc::clone(&self.data),
            }),
        }
    }

    /// First-price semi-smoothness check `(λ, 0)` with the chosen deviation;
    /// slack is `n·grid_step`.
    pub fn check_fp_semi_smoothness(
        &self,
        lambda: f64,
        kind: FpDeviation,
    ) -> Result<Certificate> {
        if self.auction.pricing != Pricing::FirstPrice {
            return Err(LabError::WrongVariant(
                "semi-smoothness certificates are first-price only".into(),
            ));
        }
        let map = self.deviation_map(kind);
        let opts = CheckOptions::with_slack(self.slack());
        smoothness::check_semi(&self.game, lambda, 0.0, map.as_ref(), &opts)
    }

    /// Streams one CSV row per (type profile, bid profile) with the
    /// semi-smoothness margin. Sequential by construction.
    pub fn write_margin_csv<W: Write>(
        &self,
        lambda: f64,
        kind: FpDeviation,
        out: &mut W,
    ) -> Result<()> {
        let map = self.deviation_map(kind);
        let ev = Evaluator::new(&self.game)?;
        let radix = ev.radix().clone();
        let n = self.game.players();
        let type_space = self.game.type_space();
        writeln!(out, "type_profile,bid_profile,margin")?;
        let mut t = Vec::new();
        let mut a = Vec::new();
        for t_rank in 0..type_space.total() {
            type_space.decode_into(t_rank, &mut t);
            let opt_value = self.data.opt_values[self.data.bidder_rank(&t) as usize];
            for a_rank in 0..radix.total() {
                radix.decode_into(a_rank, &mut a);
                let lhs: f64 = (0..n)
                    .map(|i| match map.action(&t, i) {
                        Some(d) => ev.eval_replaced(i, t[i], a_rank, &mut a, i, d),
                        None => map.utility(&t, i, &a),
                    })
                    .sum();
                let margin = lhs - lambda * opt_value;
                writeln!(out, "{t_rank},{a_rank},{margin}")?;
            }
        }
        Ok(())
    }

    /// Closed-form expected utility of the randomized deviation for `bidder`
    /// against the opposing bids in `profile` (universe indices).
    pub fn randomized_deviation_expected_utility(
        &self,
        t: &[usize],
        bidder: usize,
        profile: &[usize],
    ) -> f64 {
        RandomizedDeviation {
            data: Arc::clone(&self.data),
        }
        .utility(t, bidder, profile)
    }
}

struct HalfBidDeviation {
    data: Arc<AuctionData>,
}

impl DeviationMap for HalfBidDeviation {
    fn action(&self, t: &[usize], player: usize) -> Option<usize> {
        let n = self.data.auction.bidder_count();
        if player == n {
            return Some(0); // the seller's only action
        }
        let rank = self.data.bidder_rank(t);
        Some(self.data.half_bid_actions[rank as usize][player])
    }

    fn utility(&self, _: &[usize], _: usize, _: &[usize]) -> f64 {
        unreachable!("half-bid deviations are concrete actions")
    }
}

struct RandomizedDeviation {
    data: Arc<AuctionData>,
}

impl DeviationMap for RandomizedDeviation {
    fn action(&self, _t: &[usize], player: usize) -> Option<usize> {
        let n = self.data.auction.bidder_count();
        (player == n).then_some(0)
    }

    fn utility(&self, t: &[usize], player: usize, profile: &[usize]) -> f64 {
        let auction = &self.data.auction;
        let n = auction.bidder_count();
        let rank = self.data.bidder_rank(t) as usize;
        let opt_mask = self.data.opt_allocs[rank][player];
        let cover = &self.data.covers[rank][player];
        let cap = 1.0 - 1.0 / std::f64::consts::E;
        let mut acc = 0.0;
        for j in mask_items(opt_mask) {
            // threshold: highest competing bid on item j
            let mut threshold = 0.0f64;
            for k in 0..n {
                if k != player {
                    let lvl = self.data.bid_vectors[profile[k]][j] as usize;
                    threshold = threshold.max(auction.grid.value(lvl));
                }
            }
            acc += (cover[j] * cap - threshold).max(0.0);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium;
    use rand::Rng;
    use rand::SeedableRng;

    fn grid_quarter() -> BidGrid {
        BidGrid::new(0.25, 1.0).unwrap()
    }

    fn single_type_bidder(v: Valuation) -> BidderSpec {
        BidderSpec {
            types: TypeDistribution::singleton("v"),
            valuations: vec![v],
        }
    }

    fn two_bidder_unit_demand() -> ItemAuction {
        ItemAuction {
            pricing: Pricing::FirstPrice,
            items: 2,
            grid: grid_quarter(),
            no_overbidding: false,
            bidders: vec![
                single_type_bidder(Valuation::Xos(
                    XOSValuation::unit_demand(vec![1.0, 1.0]).unwrap(),
                )),
                single_type_bidder(Valuation::Xos(
                    XOSValuation::unit_demand(vec![1.0, 1.0]).unwrap(),
                )),
            ],
        }
    }

    #[test]
    fn all_zero_bids_go_to_bidder_one_at_zero() {
        let auction = two_bidder_unit_demand();
        let out = auction
            .allocate_and_price(&[vec![0.0, 0.0], vec![0.0, 0.0]])
            .unwrap();
        assert_eq!(out.allocation, vec![0b11, 0]);
        assert_eq!(out.prices, vec![0.0, 0.0]);
        assert_eq!(out.utilities[2], 0.0);
    }

    #[test]
    fn first_vs_second_price_on_one_item() {
        let mk = |pricing| ItemAuction {
            pricing,
            items: 1,
            grid: grid_quarter(),
            no_overbidding: false,
            bidders: vec![
                single_type_bidder(Valuation::Xos(XOSValuation::additive(vec![1.0]).unwrap())),
                single_type_bidder(Valuation::Xos(XOSValuation::additive(vec![1.0]).unwrap())),
            ],
        };
        let fp = mk(Pricing::FirstPrice)
            .allocate_and_price(&[vec![1.0], vec![0.5]])
            .unwrap();
        assert_eq!(fp.allocation, vec![0b1, 0]);
        assert_eq!(fp.prices, vec![1.0]);
        let sp = mk(Pricing::SecondPrice)
            .allocate_and_price(&[vec![1.0], vec![0.5]])
            .unwrap();
        assert_eq!(sp.prices, vec![0.5]);
    }

    #[test]
    fn two_by_two_unit_demand_matches_hand_enumeration() {
        let auction = two_bidder_unit_demand();
        // bidder 1 bids (0.5, 0), bidder 2 bids (0.25, 0.25):
        // item 1 -> bidder 1 at 0.5, item 2 -> bidder 2 at 0.25
        let out = auction
            .allocate_and_price(&[vec![0.5, 0.0], vec![0.25, 0.25]])
            .unwrap();
        assert_eq!(out.allocation, vec![0b01, 0b10]);
        assert_eq!(out.utilities[0], 1.0 - 0.5);
        assert_eq!(out.utilities[1], 1.0 - 0.25);
        assert_eq!(out.utilities[2], 0.75);
    }

    #[test]
    fn welfare_of_single_item_first_price_example() {
        // values (2,1), bids (1,0): winner utility 1, loser 0, seller 1 -> SW 2
        let auction = ItemAuction {
            pricing: Pricing::FirstPrice,
            items: 1,
            grid: BidGrid::new(0.5, 2.0).unwrap(),
            no_overbidding: false,
            bidders: vec![
                single_type_bidder(Valuation::Xos(XOSValuation::additive(vec![2.0]).unwrap())),
                single_type_bidder(Valuation::Xos(XOSValuation::additive(vec![1.0]).unwrap())),
            ],
        };
        let built = ItemAuctionGame::build(auction).unwrap();
        let g = built.game();
        // bids: bidder 1 level 2 (=1.0), bidder 2 level 0
        let sw = g.social_welfare(&[0, 0, 0], &[2, 0, 0]).unwrap();
        assert_eq!(sw, 2.0);
    }

    #[test]
    fn optimal_allocation_unit_demand_pair() {
        let auction = two_bidder_unit_demand();
        let (masks, value) = optimal_allocation(&auction, &[0, 0]);
        assert_eq!(value, 2.0);
        assert_eq!(masks[0] | masks[1], 0b11);
        assert_eq!(masks[0] & masks[1], 0);
    }

    #[test]
    fn half_bid_snapping() {
        // a = (4, 6) on the full set -> bids (2, 3)
        let auction = ItemAuction {
            pricing: Pricing::FirstPrice,
            items: 2,
            grid: BidGrid::new(1.0, 6.0).unwrap(),
            no_overbidding: false,
            bidders: vec![single_type_bidder(Valuation::Xos(
                XOSValuation::additive(vec![4.0, 6.0]).unwrap(),
            ))],
        };
        let built = ItemAuctionGame::build(auction).unwrap();
        assert_eq!(built.half_bid_vector(&[0], 0), vec![2.0, 3.0]);

        // grid 0.25: a_j = 1.1 -> bid snap(0.55) = 0.5
        let auction = ItemAuction {
            pricing: Pricing::FirstPrice,
            items: 1,
            grid: BidGrid::new(0.25, 1.25).unwrap(),
            no_overbidding: false,
            bidders: vec![single_type_bidder(Valuation::Xos(
                XOSValuation::additive(vec![1.1]).unwrap(),
            ))],
        };
        let built = ItemAuctionGame::build(auction).unwrap();
        assert_eq!(built.half_bid_vector(&[0], 0), vec![0.5]);
    }

    #[test]
    fn half_bid_empty_optimal_set_is_zero() {
        // bidder 2 has zero value: their optimal set is empty -> zero bid
        let auction = ItemAuction {
            pricing: Pricing::FirstPrice,
            items: 2,
            grid: grid_quarter(),
            no_overbidding: false,
            bidders: vec![
                single_type_bidder(Valuation::Xos(
                    XOSValuation::additive(vec![1.0, 1.0]).unwrap(),
                )),
                single_type_bidder(Valuation::Xos(
                    XOSValuation::additive(vec![0.0, 0.0]).unwrap(),
                )),
            ],
        };
        let built = ItemAuctionGame::build(auction).unwrap();
        assert_eq!(built.half_bid_vector(&[0, 0], 1), vec![0.0, 0.0]);
    }

    #[test]
    fn randomized_closed_form_values() {
        let e = std::f64::consts::E;
        // a_j = 1, p_j = 0 -> 1 - 1/e
        let auction = ItemAuction {
            pricing: Pricing::FirstPrice,
            items: 1,
            grid: grid_quarter(),
            no_overbidding: false,
            bidders: vec![
                single_type_bidder(Valuation::Xos(XOSValuation::additive(vec![1.0]).unwrap())),
                single_type_bidder(Valuation::Xos(XOSValuation::additive(vec![0.0]).unwrap())),
            ],
        };
        let built = ItemAuctionGame::build(auction).unwrap();
        // opponent bids 0
        let u = built.randomized_deviation_expected_utility(&[0, 0, 0], 0, &[0, 0, 0]);
        assert!((u - (1.0 - 1.0 / e)).abs() < 1e-12);
        // threshold 0.75 is above 1 - 1/e ≈ 0.632 -> zero
        let u = built.randomized_deviation_expected_utility(&[0, 0, 0], 0, &[0, 3, 0]);
        assert_eq!(u, 0.0);
    }

    #[test]
    fn randomized_closed_form_matches_monte_carlo() {
        // a = e, p = 1 -> e - 2; inverse-CDF sampling, 10^6 draws, 3σ
        let e = std::f64::consts::E;
        let (a, p) = (e, 1.0);
        let closed = (a * (1.0 - 1.0 / e) - p).max(0.0);
        assert!((closed - (e - 2.0)).abs() < 1e-12);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let u: f64 = rng.random();
            let x = a * (1.0 - (-u).exp());
            let payoff = if x >= p { a - x } else { 0.0 };
            sum += payoff;
            sumsq += payoff * payoff;
        }
        let mean = sum / n as f64;
        let var = (sumsq / n as f64 - mean * mean).max(0.0);
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - closed).abs() <= 3.0 * se,
            "closed {closed} vs MC {mean} ± {se}"
        );
    }

    #[test]
    fn single_bidder_certificate_passes() {
        let auction = ItemAuction {
            pricing: Pricing::FirstPrice,
            items: 1,
            grid: grid_quarter(),
            no_overbidding: false,
            bidders: vec![single_type_bidder(Valuation::Xos(
                XOSValuation::additive(vec![1.0]).unwrap(),
            ))],
        };
        let built = ItemAuctionGame::build(auction).unwrap();
        let cert = built
            .check_fp_semi_smoothness(0.5, FpDeviation::HalfBid)
            .unwrap();
        assert!(cert.verdict.pass, "margin {}", cert.verdict.worst_margin);
    }

    #[test]
    fn unit_demand_pair_passes_half_and_fails_099() {
        let built = ItemAuctionGame::build(two_bidder_unit_demand()).unwrap();
        let ok = built
            .check_fp_semi_smoothness(0.5, FpDeviation::HalfBid)
            .unwrap();
        assert!(ok.verdict.pass, "margin {}", ok.verdict.worst_margin);
        let bad = built
            .check_fp_semi_smoothness(0.99, FpDeviation::HalfBid)
            .unwrap();
        assert!(!bad.verdict.pass);
        assert!(bad.verdict.witness.is_some());
    }

    #[test]
    fn randomized_certificate_passes_at_one_minus_inv_e() {
        let built = ItemAuctionGame::build(two_bidder_unit_demand()).unwrap();
        let lambda = 1.0 - 1.0 / std::f64::consts::E;
        let cert = built
            .check_fp_semi_smoothness(lambda, FpDeviation::Randomized)
            .unwrap();
        assert!(cert.verdict.pass, "margin {}", cert.verdict.worst_margin);
    }

    #[test]
    fn second_price_overbidding_cap_restricts_actions() {
        let auction = ItemAuction {
            pricing: Pricing::SecondPrice,
            items: 2,
            grid: grid_quarter(),
            no_overbidding: true,
            bidders: vec![
                single_type_bidder(Valuation::Xos(
                    XOSValuation::unit_demand(vec![0.5, 0.5]).unwrap(),
                )),
                single_type_bidder(Valuation::Xos(
                    XOSValuation::unit_demand(vec![1.0, 1.0]).unwrap(),
                )),
            ],
        };
        let built = ItemAuctionGame::build(auction).unwrap();
        let g = built.game();
        // bidder 1 may only bid 0, 0.25, 0.5 per item: 9 of 25 vectors
        assert_eq!(g.available(0, 0).len(), 9);
        for &a in g.available(0, 0) {
            for part in g.action_label(0, a)[1..].split('-') {
                let lvl: usize = part.parse().unwrap();
                assert!(built.auction().grid.value(lvl) <= 0.5 + 1e-9);
            }
        }
        // bidder 2's cap does not bind at the grid max
        assert_eq!(g.available(1, 0).len(), 25);
    }

    #[test]
    fn complete_info_first_price_equilibria_are_near_optimal() {
        // values (2,1) on one item, grid 0.5: every exact pure Nash is optimal
        let auction = ItemAuction {
            pricing: Pricing::FirstPrice,
            items: 1,
            grid: BidGrid::new(0.5, 2.0).unwrap(),
            no_overbidding: false,
            bidders: vec![
                single_type_bidder(Valuation::Xos(XOSValuation::additive(vec![2.0]).unwrap())),
                single_type_bidder(Valuation::Xos(XOSValuation::additive(vec![1.0]).unwrap())),
            ],
        };
        let built = ItemAuctionGame::build(auction).unwrap();
        let report = equilibrium::pure_nash_poa(built.game(), &[0, 0, 0], 0.0).unwrap();
        assert!(report.equilibria > 0);
        match report.value {
            equilibrium::PoaValue::Finite(v) => assert_eq!(v, 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn margin_csv_is_emitted() {
        let built = ItemAuctionGame::build(two_bidder_unit_demand()).unwrap();
        let mut buf = Vec::new();
        built
            .write_margin_csv(0.5, FpDeviation::HalfBid, &mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("type_profile,bid_profile,margin"));
        assert_eq!(text.lines().count() as u64, 1 + 25 * 25);
    }
}
