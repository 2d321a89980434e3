//! Greedy first-price mechanisms: greedy allocation by priority function,
//! critical values, approximation audit, the payment fact, and the
//! `(1/2, c−1)` relaxed-smoothness certificate with the seller as the charged
//! subset.
//!
//! Feasibility is an explicit finite family of allocation vectors (per-player
//! item masks). Built-in generators cover disjoint combinatorial allocations
//! and unrestricted per-player menus; explicit families are audited to be
//! closed under zeroing coordinates, which keeps the greedy's ∅-padding
//! inside the family.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::game::{BayesianGame, MixedRadix, Objective, TypeDistribution};
use crate::item_auction::BidGrid;
use crate::smoothness::{self, Certificate, CheckOptions, DeviationMap};
use crate::valuations::{set_lex_cmp, Valuation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Priority {
    /// `r(i, S, v) = v`.
    Value,
    /// `r(i, S, v) = v / |S|`.
    ValuePerItem,
    /// `r(i, S, v) = v / sqrt(|S|)`.
    ValuePerSqrtSize,
}

impl Priority {
    pub fn eval(&self, set: u32, v: f64) -> f64 {
        let size = set.count_ones() as f64;
        match self {
            Priority::Value => v,
            Priority::ValuePerItem => v / size,
            Priority::ValuePerSqrtSize => v / size.sqrt(),
        }
    }
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibilityKind {
    /// All pairwise-disjoint assignments of menu sets.
    DisjointSets,
    /// Any combination of menu sets, overlaps allowed.
    Unrestricted,
    /// Explicit allocation vectors (audited for closure under zeroing).
    Explicit(Vec<Vec<u32>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BidLanguage {
    /// One set from the menu with one positive grid value, or the zero bid.
    SingleMinded,
    /// Per-item grid values, `b(S) = Σ_{j∈S} x_j`.
    Additive,
}

/// A bid as submitted by one player.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bid {
    Zero,
    SingleMinded { set: u32, level: u16 },
    Additive(Vec<u16>),
}

impl Bid {
    /// `b(S)` on the grid.
    pub fn value_on(&self, set: u32, grid: &BidGrid) -> f64 {
        match self {
            Bid::Zero => 0.0,
            Bid::SingleMinded { set: s, level } => {
                if *s == set {
                    grid.value(*level as usize)
                } else {
                    0.0
                }
            }
            Bid::Additive(levels) => {
                let mut acc = 0.0;
                let mut rest = set;
                while rest != 0 {
                    let j = rest.trailing_zeros() as usize;
                    acc += grid.value(levels[j] as usize);
                    rest &= rest - 1;
                }
                acc
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct GreedyMechanism {
    pub items: usize,
    pub priority: Priority,
    /// Per player: the nonempty sets they may be allocated (and bid on).
    pub menus: Vec<Vec<u32>>,
    pub feasibility: FeasibilityKind,
    pub bid_language: BidLanguage,
    pub grid: BidGrid,
}

/// The mechanism with its feasibility family expanded and audited.
pub struct GreedyEngine {
    mech: GreedyMechanism,
    /// Canonically ordered allocation vectors (player-major set-lex order).
    family: Vec<Vec<u32>>,
}

fn alloc_cmp(a: &[u32], b: &[u32]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match set_lex_cmp(*x, *y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

impl GreedyEngine {
    pub fn new(mech: GreedyMechanism) -> Result<Self> {
        let n = mech.menus.len();
        if n == 0 {
            return Err(LabError::Invariant("mechanism needs players".into()));
        }
        if mech.items == 0 || mech.items > 16 {
            return Err(LabError::Invariant("items must be in 1..=16".into()));
        }
        let full = (1u32 << mech.items) - 1;
        for (i, menu) in mech.menus.iter().enumerate() {
            if menu.is_empty() {
                return Err(LabError::Invariant(format!("player {i} menu is empty")));
            }
            for &s in menu {
                if s == 0 || s & !full != 0 {
                    return Err(LabError::Invariant(format!(
                        "player {i} menu sets must be nonempty subsets of the items"
                    )));
                }
            }
        }
        let mut family: Vec<Vec<u32>> = match &mech.feasibility {
            FeasibilityKind::Explicit(list) => {
                if list.is_empty() {
                    return Err(LabError::Invariant("feasibility family is empty".into()));
                }
                for a in list {
                    if a.len() != n {
                        return Err(LabError::Invariant(
                            "allocation vectors must cover every player".into(),
                        ));
                    }
                    for (i, &s) in a.iter().enumerate() {
                        if s != 0 && !mech.menus[i].contains(&s) {
                            return Err(LabError::Invariant(format!(
                                "allocation assigns player {i} a set outside their menu"
                            )));
                        }
                    }
                }
                list.clone()
            }
            generator => {
                // all combinations of menu ∪ {∅}, filtered for disjointness
                // when requested
                fn recurse(
                    mech: &GreedyMechanism,
                    disjoint: bool,
                    current: &mut Vec<u32>,
                    player: usize,
                    used: u32,
                    out: &mut Vec<Vec<u32>>,
                ) {
                    if player == current.len() {
                        out.push(current.clone());
                        return;
                    }
                    current[player] = 0;
                    recurse(mech, disjoint, current, player + 1, used, out);
                    for &s in &mech.menus[player] {
                        if disjoint && used & s != 0 {
                            continue;
                        }
                        current[player] = s;
                        recurse(mech, disjoint, current, player + 1, used | s, out);
                        current[player] = 0;
                    }
                }
                let mut out = Vec::new();
                let mut current = vec![0u32; n];
                let disjoint = matches!(generator, FeasibilityKind::DisjointSets);
                recurse(&mech, disjoint, &mut current, 0, 0, &mut out);
                out
            }
        };
        family.sort_by(|a, b| alloc_cmp(a, b));
        family.dedup();
        // closure under zeroing one coordinate keeps ∅-padding in the family
        for idx in 0..family.len() {
            for i in 0..n {
                if family[idx][i] != 0 {
                    let mut zeroed = family[idx].clone();
                    zeroed[i] = 0;
                    if family
                        .binary_search_by(|probe| alloc_cmp(probe, &zeroed))
                        .is_err()
                    {
                        return Err(LabError::Invariant(
                            "feasibility family is not closed under zeroing a player".into(),
                        ));
                    }
                }
            }
        }
        Ok(Self { mech, family })
    }

    pub fn mechanism(&self) -> &GreedyMechanism {
        &self.mech
    }

    pub fn players(&self) -> usize {
        self.mech.menus.len()
    }

    pub fn family(&self) -> &[Vec<u32>] {
        &self.family
    }

    /// `(i, set)` extends the partial allocation to some family member.
    fn pair_feasible(&self, allocated: &[Option<u32>], player: usize, set: u32) -> bool {
        self.family.iter().any(|a| {
            a[player] == set
                && allocated
                    .iter()
                    .enumerate()
                    .all(|(k, slot)| slot.map_or(true, |s| a[k] == s))
        })
    }

    /// Runs the greedy allocation: repeatedly picks the feasible `(i, S)`
    /// maximizing `r(i, S, b_i(S))` (ties: lowest player, then set-lex order),
    /// allocates, removes the player. Unallocated players get ∅ and pay 0;
    /// payments are first-price `b_i(A_i)`.
    pub fn run_greedy(&self, bids: &[Bid]) -> (Vec<u32>, Vec<f64>) {
        let n = self.players();
        debug_assert_eq!(bids.len(), n);
        let mut allocated: Vec<Option<u32>> = vec![None; n];
        loop {
            let mut best: Option<(f64, usize, u32)> = None;
            for i in 0..n {
                if allocated[i].is_some() {
                    continue;
                }
                for &s in &self.mech.menus[i] {
                    if !self.pair_feasible(&allocated, i, s) {
                        continue;
                    }
                    let r = self
                        .mech
                        .priority
                        .eval(s, bids[i].value_on(s, &self.mech.grid));
                    // strict improvement keeps the first (lowest player,
                    // set-lex) maximizer; menus are iterated in set-lex order
                    if best.map_or(true, |(cur, _, _)| r > cur) {
                        best = Some((r, i, s));
                    }
                }
            }
            match best {
                None => break,
                Some((_, i, s)) => allocated[i] = Some(s),
            }
        }
        let allocation: Vec<u32> = allocated.iter().map(|s| s.unwrap_or(0)).collect();
        let payments: Vec<f64> = allocation
            .iter()
            .zip(bids)
            .map(|(&s, b)| {
                if s == 0 {
                    0.0
                } else {
                    b.value_on(s, &self.mech.grid)
                }
            })
            .collect();
        (allocation, payments)
    }

    /// Whether bidding single-mindedly `level` on `set` wins `set` for
    /// `player` against the fixed opposing bids (`others[player]` ignored).
    pub fn wins_at(&self, player: usize, set: u32, level: u16, others: &[Bid]) -> bool {
        let mut bids: Vec<Bid> = others.to_vec();
        bids[player] = Bid::SingleMinded { set, level };
        let (allocation, _) = self.run_greedy(&bids);
        allocation[player] == set
    }

    /// Critical value θ_i(S, b_{−i}): the smallest grid value that wins `S`
    /// single-mindedly.
    ///
    /// The win indicator is scanned over the whole grid, which both finds the
    /// threshold and audits monotonicity; the binary-search fast path is
    /// cross-checked in debug builds when the indicator is monotone.
    pub fn critical_value(&self, player: usize, set: u32, others: &[Bid]) -> CriticalValue {
        self.critical_value_on(player, set, others, self.mech.grid.levels())
    }

    /// θ on the grid extended past the bid maximum, so a competitor at the
    /// grid top cannot push the threshold to infinity. The extension covers
    /// every built-in priority: beating a priority of `grid_max` needs at
    /// most `|S|·grid_max`, one extra step beyond that suffices.
    pub fn critical_value_extended(&self, player: usize, set: u32, others: &[Bid]) -> CriticalValue {
        let levels = self.mech.grid.levels();
        let extended = (levels - 1) * self.mech.items + 2;
        self.critical_value_on(player, set, others, extended.max(levels))
    }

    fn critical_value_on(
        &self,
        player: usize,
        set: u32,
        others: &[Bid],
        levels: usize,
    ) -> CriticalValue {
        if set == 0 {
            return CriticalValue {
                value: 0.0,
                level: Some(0),
                non_monotone: false,
            };
        }
        let wins: Vec<bool> = (0..levels)
            .map(|lvl| self.wins_at(player, set, lvl as u16, others))
            .collect();
        let first = wins.iter().position(|w| *w);
        let non_monotone = match first {
            None => false,
            Some(k) => wins[k..].iter().any(|w| !w),
        };
        #[cfg(debug_assertions)]
        if !non_monotone && wins[levels - 1] {
            if let Some(k) = first {
                let (mut lo, mut hi) = (0usize, levels - 1);
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if wins[mid] {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                debug_assert_eq!(lo, k, "binary search disagrees with the scan");
            }
        }
        match first {
            None => CriticalValue {
                value: f64::INFINITY,
                level: None,
                non_monotone,
            },
            Some(k) => CriticalValue {
                value: self.mech.grid.value(k),
                level: Some(k as u16),
                non_monotone,
            },
        }
    }

    /// Best feasible allocation value under the reported bids.
    pub fn optimal_bid_value(&self, bids: &[Bid]) -> f64 {
        self.family
            .iter()
            .map(|a| {
                a.iter()
                    .enumerate()
                    .map(|(i, &s)| {
                        if s == 0 {
                            0.0
                        } else {
                            bids[i].value_on(s, &self.mech.grid)
                        }
                    })
                    .sum()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Allocation maximizing `Σ_i v_i(A_i)` over the family (first member in
    /// canonical order on ties).
    pub fn optimal_allocation(&self, valuations: &[&Valuation]) -> (Vec<u32>, f64) {
        let mut best_idx = 0usize;
        let mut best_value = f64::NEG_INFINITY;
        for (idx, a) in self.family.iter().enumerate() {
            let value: f64 = a
                .iter()
                .enumerate()
                .map(|(i, &s)| valuations[i].value(s))
                .sum();
            if value > best_value {
                best_value = value;
                best_idx = idx;
            }
        }
        (self.family[best_idx].clone(), best_value)
    }
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct CriticalValue {
    /// Grid value, or `f64::INFINITY` when no grid bid wins.
    pub value: f64,
    pub level: Option<u16>,
    /// The win indicator was not monotone on the grid; the result came from
    /// the linear scan.
    pub non_monotone: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct PaymentFactVerdict {
    pub pass: bool,
    /// `Σ_i θ_i(A'_i, b_{−i})`.
    pub theta_sum: f64,
    /// `c · Σ_i p_i(b)`.
    pub bound: f64,
    pub margin: f64,
    /// Some θ came from a non-monotone win indicator.
    pub flagged: bool,
}

/// A greedy mechanism with per-type bidder valuations, as a Bayesian game
/// (bidders plus the seller as the last player).
pub struct GreedyGame {
    engine: Arc<GreedyEngine>,
    game: BayesianGame,
    data: Arc<GreedyData>,
}

struct GreedyData {
    engine: Arc<GreedyEngine>,
    /// Universe bids per player (ordered to match action labels).
    actions: Vec<Vec<Bid>>,
    valuations: Vec<Vec<Valuation>>,
    bidder_type_radix: MixedRadix,
    /// Per type profile: optimal allocation, value, half-bid deviations.
    opt_allocs: Vec<Vec<u32>>,
    opt_values: Vec<f64>,
    half_actions: Vec<Vec<usize>>,
}

struct GreedyUtility {
    data: Arc<GreedyData>,
}

impl crate::game::Utility for GreedyUtility {
    fn eval(&self, player: usize, own_type: usize, profile: &[usize]) -> f64 {
        let engine = &self.data.engine;
        let n = engine.players();
        let bids: Vec<Bid> = (0..n)
            .map(|k| self.data.actions[k][profile[k]].clone())
            .collect();
        let (allocation, payments) = engine.run_greedy(&bids);
        if player == n {
            payments.iter().sum()
        } else {
            self.data.valuations[player][own_type].value(allocation[player]) - payments[player]
        }
    }
}

/// Deviation flavor for the relaxed certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedyDeviation {
    /// Bid `v_i(Opt_i(v))/2` single-mindedly on `Opt_i(v)` (snapped down).
    SingleMindedHalf,
    /// Randomized single-minded bid, evaluated in closed form via θ.
    Randomized,
}

impl GreedyGame {
    pub fn build(
        engine: GreedyEngine,
        bidders: Vec<(TypeDistribution, Vec<Valuation>)>,
    ) -> Result<Self> {
        let n = engine.players();
        if bidders.len() != n {
            return Err(LabError::Invariant(
                "one bidder spec per mechanism player".into(),
            ));
        }
        for (i, (dist, vals)) in bidders.iter().enumerate() {
            if vals.len() != dist.len() {
                return Err(LabError::Invariant(format!(
                    "bidder {i} needs one valuation per type"
                )));
            }
            for v in vals {
                if v.items() != engine.mechanism().items {
                    return Err(LabError::Invariant(format!(
                        "bidder {i} valuation item count mismatch"
                    )));
                }
                if v.value((1 << engine.mechanism().items) - 1)
                    > engine.mechanism().grid.max_value() * 2.0 + 1e-9
                {
                    return Err(LabError::Invariant(format!(
                        "bidder {i} half-value deviations exceed the bid grid"
                    )));
                }
            }
        }
        let engine = Arc::new(engine);
        let mech = engine.mechanism();
        let levels = mech.grid.levels();

        // per-player action universes with ascending labels
        let mut actions: Vec<Vec<Bid>> = Vec::with_capacity(n);
        let mut labels: Vec<Vec<String>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut acts = Vec::new();
            let mut labs = Vec::new();
            match mech.bid_language {
                BidLanguage::SingleMinded => {
                    let mut menu = mech.menus[i].clone();
                    menu.sort_by(|a, b| set_lex_cmp(*a, *b));
                    acts.push(Bid::Zero);
                    labs.push("s00-000".to_string());
                    for (si, &s) in menu.iter().enumerate() {
                        for lvl in 1..levels {
                            acts.push(Bid::SingleMinded {
                                set: s,
                                level: lvl as u16,
                            });
                            labs.push(format!("s{:02}-{lvl:03}", si + 1));
                        }
                    }
                }
                BidLanguage::Additive => {
                    let m = mech.items;
                    let count = (levels as u128).pow(m as u32);
                    if count > 100_000 {
                        return Err(LabError::GuardExceeded {
                            size: count,
                            guard: 100_000,
                        });
                    }
                    let width = (levels.max(2) - 1).to_string().len();
                    for rank in 0..count as usize {
                        let mut v = vec![0u16; m];
                        let mut r = rank;
                        for j in (0..m).rev() {
                            v[j] = (r % levels) as u16;
                            r /= levels;
                        }
                        let parts: Vec<String> =
                            v.iter().map(|k| format!("{k:0width$}")).collect();
                        labs.push(format!("x{}", parts.join("-")));
                        acts.push(Bid::Additive(v));
                    }
                }
            }
            actions.push(acts);
            labels.push(labs);
        }

        let bidder_type_radix = MixedRadix::new(bidders.iter().map(|(d, _)| d.len()).collect())?;
        let valuations: Vec<Vec<Valuation>> = bidders.iter().map(|(_, v)| v.clone()).collect();

        // per type profile: optimal allocation and half deviations
        let mut opt_allocs = Vec::new();
        let mut opt_values = Vec::new();
        let mut half_actions = Vec::new();
        let mut t = Vec::new();
        for rank in 0..bidder_type_radix.total() {
            bidder_type_radix.decode_into(rank, &mut t);
            let vals: Vec<&Valuation> = (0..n).map(|i| &valuations[i][t[i]]).collect();
            let (masks, value) = engine.optimal_allocation(&vals);
            let mut per_bidder = Vec::with_capacity(n);
            for i in 0..n {
                let action = if masks[i] == 0 {
                    find_single_minded(&actions[i], 0, 0)
                } else {
                    let lvl = mech.grid.snap_down(vals[i].value(masks[i]) / 2.0) as u16;
                    find_single_minded(&actions[i], masks[i], lvl)
                };
                let action = action.ok_or_else(|| {
                    LabError::Invariant(format!(
                        "half deviation for player {i} is not in the bid language"
                    ))
                })?;
                per_bidder.push(action);
            }
            opt_allocs.push(masks);
            opt_values.push(value);
            half_actions.push(per_bidder);
        }

        let data = Arc::new(GreedyData {
            engine: Arc::clone(&engine),
            actions,
            valuations,
            bidder_type_radix,
            opt_allocs,
            opt_values,
            half_actions,
        });

        let mut type_dists: Vec<TypeDistribution> = bidders.into_iter().map(|(d, _)| d).collect();
        type_dists.push(TypeDistribution::singleton("seller"));
        let mut all_labels = labels;
        all_labels.push(vec!["noop".into()]);
        let game = BayesianGame::constant_space(
            Objective::Utility,
            type_dists,
            all_labels,
            Arc::new(GreedyUtility {
                data: Arc::clone(&data),
            }),
        )?;
        Ok(Self { engine, game, data })
    }

    pub fn engine(&self) -> &GreedyEngine {
        &self.engine
    }

    pub fn game(&self) -> &BayesianGame {
        &self.game
    }

    /// Certificate slack `n·grid_step` absorbing deviation-bid snapping.
    pub fn slack(&self) -> f64 {
        self.engine.players() as f64 * self.engine.mechanism().grid.step()
    }

    /// The seller's player index (the relaxed certificate's subset `K`).
    pub fn seller(&self) -> usize {
        self.engine.players()
    }

    /// Optimal allocation value at a bidder type profile.
    pub fn optimal_value(&self, t: &[usize]) -> f64 {
        let rank = self.data.bidder_type_radix.encode(t);
        self.data.opt_values[rank as usize]
    }

    fn decode_bids(&self, profile: &[usize]) -> Vec<Bid> {
        (0..self.engine.players())
            .map(|k| self.data.actions[k][profile[k]].clone())
            .collect()
    }

    /// Empirical approximation factor: max over all bid profiles of the
    /// optimal-feasible value over the greedy value (`INFINITY` when greedy
    /// gets zero against a positive optimum).
    pub fn approximation_factor(&self) -> Result<f64> {
        let n = self.engine.players();
        let radix = MixedRadix::new((0..n).map(|i| self.data.actions[i].len()).collect())?;
        if radix.total() > 5_000_000 {
            return Err(LabError::GuardExceeded {
                size: radix.total() as u128,
                guard: 5_000_000,
            });
        }
        let mut worst = 1.0f64;
        let mut digits = Vec::new();
        for rank in 0..radix.total() {
            radix.decode_into(rank, &mut digits);
            let bids = self.decode_bids(&digits);
            let (allocation, _) = self.engine.run_greedy(&bids);
            let greedy_value: f64 = allocation
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    if s == 0 {
                        0.0
                    } else {
                        bids[i].value_on(s, &self.engine.mechanism().grid)
                    }
                })
                .sum();
            let opt_value = self.engine.optimal_bid_value(&bids);
            if opt_value <= 0.0 {
                continue;
            }
            if greedy_value <= 0.0 {
                return Ok(f64::INFINITY);
            }
            worst = worst.max(opt_value / greedy_value);
        }
        Ok(worst)
    }

    /// The Lucier–Borodin payment fact `Σ_i θ_i(A'_i, b_{−i}) <= c·Σ_i p_i(b)
    /// + slack` for one bid profile and one feasible allocation.
    ///
    /// θ is taken on the extended grid (finite even against a grid-max
    /// competitor); `slack = n·grid_step` budgets the one-step inflation of
    /// each θ against the continuous infimum, `slack = 0` is the exact grid
    /// form.
    pub fn check_payment_fact(
        &self,
        bids: &[Bid],
        alt: &[u32],
        c: f64,
        slack: f64,
    ) -> PaymentFactVerdict {
        let n = self.engine.players();
        let (_, payments) = self.engine.run_greedy(bids);
        let mut theta_sum = 0.0;
        let mut flagged = false;
        for i in 0..n {
            let cv = self.engine.critical_value_extended(i, alt[i], bids);
            theta_sum += cv.value;
            flagged |= cv.non_monotone;
        }
        let bound = c * payments.iter().sum::<f64>();
        let margin = bound + slack - theta_sum;
        PaymentFactVerdict {
            pass: margin >= -1e-9,
            theta_sum,
            bound,
            margin,
            flagged,
        }
    }

    /// The payment fact over every bid profile and every feasible allocation;
    /// returns the worst margin (first witness on ties).
    pub fn check_payment_fact_all(&self, c: f64, slack: f64) -> Result<PaymentFactVerdict> {
        let n = self.engine.players();
        let radix = MixedRadix::new((0..n).map(|i| self.data.actions[i].len()).collect())?;
        let mut worst: Option<PaymentFactVerdict> = None;
        let mut digits = Vec::new();
        for rank in 0..radix.total() {
            radix.decode_into(rank, &mut digits);
            let bids = self.decode_bids(&digits);
            for alt in self.engine.family() {
                let v = self.check_payment_fact(&bids, alt, c, slack);
                if worst.as_ref().map_or(true, |w| v.margin < w.margin) {
                    worst = Some(v);
                }
            }
        }
        worst.ok_or_else(|| LabError::Invariant("empty enumeration".into()))
    }

    pub fn deviation_map(&self, kind: GreedyDeviation) -> Box<dyn DeviationMap + '_> {
        match kind {
            GreedyDeviation::SingleMindedHalf => Box::new(HalfDeviation {
                data: Arc::clone(&self.data),
            }),
            GreedyDeviation::Randomized => Box::new(RandomizedThetaDeviation {
                data: Arc::clone(&self.data),
            }),
        }
    }

    /// The relaxed-smoothness check with `K = {seller}`: `(1/2, c−1)` for the
    /// half deviation, `(1−1/e, c−1)` for the randomized one; slack
    /// `n·grid_step`.
    pub fn check_greedy_smoothness(&self, c: f64, kind: GreedyDeviation) -> Result<Certificate> {
        let lambda = match kind {
            GreedyDeviation::SingleMindedHalf => 0.5,
            GreedyDeviation::Randomized => 1.0 - 1.0 / std::f64::consts::E,
        };
        let map = self.deviation_map(kind);
        let opts = CheckOptions::with_slack(self.slack());
        smoothness::check_relaxed(
            &self.game,
            lambda,
            c - 1.0,
            map.as_ref(),
            &[self.seller()],
            &opts,
        )
    }
}

fn find_single_minded(actions: &[Bid], set: u32, level: u16) -> Option<usize> {
    if set == 0 || level == 0 {
        return actions.iter().position(|b| matches!(b, Bid::Zero));
    }
    actions
        .iter()
        .position(|b| matches!(b, Bid::SingleMinded { set: s, level: l } if *s == set && *l == level))
}

struct HalfDeviation {
    data: Arc<GreedyData>,
}

impl DeviationMap for HalfDeviation {
    fn action(&self, t: &[usize], player: usize) -> Option<usize> {
        let n = self.data.engine.players();
        if player == n {
            return Some(0);
        }
        let rank = self.data.bidder_type_radix.encode(&t[..n]);
        Some(self.data.half_actions[rank as usize][player])
    }

    fn utility(&self, _: &[usize], _: usize, _: &[usize]) -> f64 {
        unreachable!("half deviations are concrete actions")
    }
}

struct RandomizedThetaDeviation {
    data: Arc<GreedyData>,
}

impl DeviationMap for RandomizedThetaDeviation {
    fn action(&self, _t: &[usize], player: usize) -> Option<usize> {
        let n = self.data.engine.players();
        (player == n).then_some(0)
    }

    fn utility(&self, t: &[usize], player: usize, profile: &[usize]) -> f64 {
        let n = self.data.engine.players();
        let rank = self.data.bidder_type_radix.encode(&t[..n]) as usize;
        let opt_set = self.data.opt_allocs[rank][player];
        if opt_set == 0 {
            return 0.0;
        }
        let value = self.data.valuations[player][t[player]].value(opt_set);
        let bids: Vec<Bid> = (0..n)
            .map(|k| self.data.actions[k][profile[k]].clone())
            .collect();
        let theta = self.data.engine.critical_value(player, opt_set, &bids);
        let cap = 1.0 - 1.0 / std::f64::consts::E;
        (value * cap - theta.value).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuations::XOSValuation;

    fn grid(step: f64, max: f64) -> BidGrid {
        BidGrid::new(step, max).unwrap()
    }

    fn engine(
        items: usize,
        priority: Priority,
        menus: Vec<Vec<u32>>,
        feasibility: FeasibilityKind,
        g: BidGrid,
    ) -> GreedyEngine {
        GreedyEngine::new(GreedyMechanism {
            items,
            priority,
            menus,
            feasibility,
            bid_language: BidLanguage::SingleMinded,
            grid: g,
        })
        .unwrap()
    }

    #[test]
    fn single_player_wins_their_bid_and_pays_it() {
        let e = engine(
            2,
            Priority::Value,
            vec![vec![0b01, 0b10, 0b11]],
            FeasibilityKind::DisjointSets,
            grid(1.0, 4.0),
        );
        let (alloc, pay) = e.run_greedy(&[Bid::SingleMinded { set: 0b11, level: 3 }]);
        assert_eq!(alloc, vec![0b11]);
        assert_eq!(pay, vec![3.0]);
    }

    #[test]
    fn all_zero_bids_resolve_to_player_one_lex_first_set() {
        let e = engine(
            2,
            Priority::Value,
            vec![vec![0b01, 0b10, 0b11], vec![0b01, 0b10]],
            FeasibilityKind::DisjointSets,
            grid(1.0, 2.0),
        );
        let (alloc, pay) = e.run_greedy(&[Bid::Zero, Bid::Zero]);
        // set-lex order: {1} < {1,2} < {2}, so player 1 takes {1}
        assert_eq!(alloc[0], 0b01);
        assert_eq!(pay, vec![0.0, 0.0]);
        // player 2 then takes the remaining feasible {2}
        assert_eq!(alloc[1], 0b10);
    }

    #[test]
    fn two_round_trace_blocks_the_second_player() {
        // bids: player 1 single-minded ({1,2}, 3), player 2 ({1}, 2)
        let e = engine(
            2,
            Priority::Value,
            vec![vec![0b11], vec![0b01]],
            FeasibilityKind::DisjointSets,
            grid(1.0, 4.0),
        );
        let (alloc, pay) = e.run_greedy(&[
            Bid::SingleMinded { set: 0b11, level: 3 },
            Bid::SingleMinded { set: 0b01, level: 2 },
        ]);
        assert_eq!(alloc, vec![0b11, 0]);
        assert_eq!(pay, vec![3.0, 0.0]);
    }

    #[test]
    fn critical_value_respects_tie_breaking() {
        let e = engine(
            1,
            Priority::Value,
            vec![vec![0b1], vec![0b1]],
            FeasibilityKind::DisjointSets,
            grid(1.0, 5.0),
        );
        // player 1 wins ties against an opponent bidding 3: θ = 3
        let opponent = vec![Bid::Zero, Bid::SingleMinded { set: 0b1, level: 3 }];
        let cv = e.critical_value(0, 0b1, &opponent);
        assert_eq!(cv.value, 3.0);
        assert!(!cv.non_monotone);
        // player 2 loses ties against player 1 bidding 3: θ = 4
        let opponent = vec![Bid::SingleMinded { set: 0b1, level: 3 }, Bid::Zero];
        let cv = e.critical_value(1, 0b1, &opponent);
        assert_eq!(cv.value, 4.0);
    }

    #[test]
    fn critical_value_infinity_marker() {
        // the opponent's bid tops the grid and wins ties
        let e = engine(
            1,
            Priority::Value,
            vec![vec![0b1], vec![0b1]],
            FeasibilityKind::DisjointSets,
            grid(1.0, 3.0),
        );
        let opponent = vec![Bid::SingleMinded { set: 0b1, level: 3 }, Bid::Zero];
        let cv = e.critical_value(1, 0b1, &opponent);
        assert!(cv.value.is_infinite());
        assert_eq!(cv.level, None);
    }

    #[test]
    fn solo_zero_bid_wins_at_zero() {
        let e = engine(
            1,
            Priority::Value,
            vec![vec![0b1]],
            FeasibilityKind::DisjointSets,
            grid(1.0, 3.0),
        );
        let cv = e.critical_value(0, 0b1, &[Bid::Zero]);
        assert_eq!(cv.value, 0.0);
    }

    fn value_greedy_three_player_game() -> GreedyGame {
        // menus: p1 {{1,2}}, p2 {{1}}, p3 {{2}}; values 3 / 2 / 2
        let e = engine(
            2,
            Priority::Value,
            vec![vec![0b11], vec![0b01], vec![0b10]],
            FeasibilityKind::DisjointSets,
            grid(1.0, 3.0),
        );
        GreedyGame::build(
            e,
            vec![
                (
                    TypeDistribution::singleton("v"),
                    vec![Valuation::Xos(
                        XOSValuation::new(2, vec![vec![1.5, 1.5]]).unwrap(),
                    )],
                ),
                (
                    TypeDistribution::singleton("v"),
                    vec![Valuation::Xos(
                        XOSValuation::new(2, vec![vec![2.0, 0.0]]).unwrap(),
                    )],
                ),
                (
                    TypeDistribution::singleton("v"),
                    vec![Valuation::Xos(
                        XOSValuation::new(2, vec![vec![0.0, 2.0]]).unwrap(),
                    )],
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn approximation_factor_examples() {
        // single player: always optimal
        let e = engine(
            1,
            Priority::Value,
            vec![vec![0b1]],
            FeasibilityKind::DisjointSets,
            grid(1.0, 2.0),
        );
        let g = GreedyGame::build(
            e,
            vec![(
                TypeDistribution::singleton("v"),
                vec![Valuation::Xos(XOSValuation::additive(vec![2.0]).unwrap())],
            )],
        )
        .unwrap();
        assert_eq!(g.approximation_factor().unwrap(), 1.0);

        // the witness profile: greedy takes {1,2} at 3, optimum splits 2 + 2
        let g = value_greedy_three_player_game();
        let bids = vec![
            Bid::SingleMinded { set: 0b11, level: 3 },
            Bid::SingleMinded { set: 0b01, level: 2 },
            Bid::SingleMinded { set: 0b10, level: 2 },
        ];
        let (alloc, _) = g.engine().run_greedy(&bids);
        let greedy_value: f64 = alloc
            .iter()
            .enumerate()
            .map(|(i, &s)| bids[i].value_on(s, &g.engine().mechanism().grid))
            .sum();
        let opt_value = g.engine().optimal_bid_value(&bids);
        assert_eq!(greedy_value, 3.0);
        assert_eq!(opt_value, 4.0);
        // the enumerated factor tops that witness: equal-bid profiles reach 2
        let f = g.approximation_factor().unwrap();
        assert!(f >= 4.0 / 3.0);
        assert_eq!(f, 2.0);
    }

    #[test]
    fn payment_fact_on_own_allocation_with_c_one() {
        let g = value_greedy_three_player_game();
        let bids = vec![
            Bid::SingleMinded { set: 0b11, level: 3 },
            Bid::SingleMinded { set: 0b01, level: 2 },
            Bid::SingleMinded { set: 0b10, level: 2 },
        ];
        let (alloc, _) = g.engine().run_greedy(&bids);
        // the player's own winning bid tops their θ, so c = 1 needs no slack
        let v = g.check_payment_fact(&bids, &alloc, 1.0, 0.0);
        assert!(v.pass, "θ sum {} vs bound {}", v.theta_sum, v.bound);
    }

    #[test]
    fn payment_fact_all_zero_bids() {
        let g = value_greedy_three_player_game();
        let bids = vec![Bid::Zero, Bid::Zero, Bid::Zero];
        let (alloc, payments) = g.engine().run_greedy(&bids);
        assert_eq!(payments, vec![0.0, 0.0, 0.0]);
        // exact form: RHS is zero, so the verdict hinges on every θ being zero
        let v = g.check_payment_fact(&bids, &alloc, 1.0, 0.0);
        assert_eq!(v.pass, v.theta_sum <= 1e-9);
        // a blocked higher-index player makes θ positive on another feasible
        // allocation: the exact form fails there, the n·step budget absorbs it
        let alt = vec![0u32, 0b01, 0b10];
        let exact = g.check_payment_fact(&bids, &alt, 1.0, 0.0);
        assert!(!exact.pass);
        let budgeted = g.check_payment_fact(&bids, &alt, 1.0, g.slack());
        assert!(budgeted.pass, "margin {}", budgeted.margin);
    }

    #[test]
    fn payment_fact_enumeration_with_measured_c() {
        let g = value_greedy_three_player_game();
        let c = g.approximation_factor().unwrap();
        let v = g.check_payment_fact_all(c, g.slack()).unwrap();
        assert!(v.pass, "margin {}", v.margin);
    }

    #[test]
    fn greedy_smoothness_passes_with_measured_c() {
        let g = value_greedy_three_player_game();
        let c = g.approximation_factor().unwrap();
        let ok = g
            .check_greedy_smoothness(c, GreedyDeviation::SingleMindedHalf)
            .unwrap();
        assert!(ok.verdict.pass, "margin {}", ok.verdict.worst_margin);
    }

    #[test]
    fn greedy_allocation_stays_in_family() {
        let g = value_greedy_three_player_game();
        let radix =
            MixedRadix::new((0..3).map(|i| g.data.actions[i].len()).collect()).unwrap();
        let mut digits = Vec::new();
        for rank in 0..radix.total() {
            radix.decode_into(rank, &mut digits);
            let bids = g.decode_bids(&digits);
            let (alloc, _) = g.engine().run_greedy(&bids);
            assert!(g
                .engine()
                .family()
                .iter()
                .any(|a| a.as_slice() == alloc.as_slice()));
        }
    }

    #[test]
    fn critical_value_consistency() {
        // rerunning at θ wins; at the grid predecessor it does not
        let g = value_greedy_three_player_game();
        let bids = vec![
            Bid::Zero,
            Bid::SingleMinded { set: 0b01, level: 2 },
            Bid::SingleMinded { set: 0b10, level: 1 },
        ];
        let cv = g.engine().critical_value(0, 0b11, &bids);
        let theta_level = cv.level.unwrap();
        assert!(g.engine().wins_at(0, 0b11, theta_level, &bids));
        if theta_level > 0 {
            assert!(!g.engine().wins_at(0, 0b11, theta_level - 1, &bids));
        }
    }

    #[test]
    fn explicit_family_must_be_closed_under_zeroing() {
        let bad = GreedyEngine::new(GreedyMechanism {
            items: 1,
            priority: Priority::Value,
            menus: vec![vec![0b1], vec![0b1]],
            feasibility: FeasibilityKind::Explicit(vec![vec![0b1, 0b1]]),
            bid_language: BidLanguage::SingleMinded,
            grid: grid(1.0, 2.0),
        });
        assert!(bad.is_err());
    }
}
