//! Pure Bayes-Nash equilibrium verification, enumeration, best-response
//! dynamics, and Bayes-Nash price-of-anarchy measurement.
//!
//! Interim utilities marginalize over opponents' types (independence makes
//! the conditional distribution the marginal). Enumeration order over
//! strategy profiles is lexicographic over (player, type, action) slots, so
//! results are reproducible and the parallel partitioning cannot reorder them.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::game::{BayesianGame, Evaluator, MixedRadix, Objective, StrategyProfile};
use crate::par;
use crate::smoothness::VERDICT_TOL;

/// Guard on the number of strategy profiles enumerated.
pub const STRATEGY_ENUM_GUARD: u128 = 10_000_000;

/// Worst interim regret of a strategy profile.
#[derive(Clone, Debug, Serialize)]
pub struct RegretReport {
    pub is_bne: bool,
    pub epsilon: f64,
    pub max_regret: f64,
    /// `(player, type index, better action)` attaining the max regret.
    pub worst: Option<(usize, usize, usize)>,
}

/// Shared precomputation for interim-utility evaluations.
pub struct RegretChecker<'g> {
    game: &'g BayesianGame,
    ev: Evaluator<'g>,
    /// Per player: opponents' type combinations as (full type profile with a
    /// placeholder at the player's slot, joint opponent probability).
    others: Vec<Vec<(Vec<usize>, f64)>>,
}

impl<'g> RegretChecker<'g> {
    pub fn new(game: &'g BayesianGame) -> Result<Self> {
        let ev = Evaluator::new(game)?;
        let n = game.players();
        let type_space = game.type_space();
        let mut others = Vec::with_capacity(n);
        for i in 0..n {
            let mut combos = Vec::new();
            // lexicographic over t_{-i}: iterate the full space with digit i pinned to 0
            let mut t = Vec::new();
            for rank in 0..type_space.total() {
                type_space.decode_into(rank, &mut t);
                if t[i] != 0 {
                    continue;
                }
                let prob: f64 = (0..n)
                    .filter(|&k| k != i)
                    .map(|k| game.type_dist(k).prob(t[k]))
                    .product();
                combos.push((t.clone(), prob));
            }
            others.push(combos);
        }
        Ok(Self { game, ev, others })
    }

    pub fn game(&self) -> &BayesianGame {
        self.game
    }

    /// Interim expected utility for `player` of type `type_idx` playing
    /// `action`, while opponents follow `choose(k, t_k)`.
    pub fn interim_utility(
        &self,
        player: usize,
        type_idx: usize,
        action: usize,
        choose: &dyn Fn(usize, usize) -> usize,
    ) -> f64 {
        let radix = self.ev.radix();
        let mut profile = vec![0usize; self.game.players()];
        let mut acc = 0.0;
        for (t, prob) in &self.others[player] {
            for k in 0..self.game.players() {
                profile[k] = if k == player {
                    action
                } else {
                    choose(k, t[k])
                };
            }
            let rank = radix.encode(&profile);
            acc += prob * self.ev.eval(player, type_idx, rank, &profile);
        }
        acc
    }

    /// Max interim regret of the profile; stops early beyond `epsilon` when
    /// `early_exit` is set.
    pub fn max_regret(
        &self,
        choose: &dyn Fn(usize, usize) -> usize,
        epsilon: f64,
        early_exit: bool,
    ) -> (f64, Option<(usize, usize, usize)>) {
        let cost = matches!(self.game.objective(), Objective::Cost);
        let mut max_regret = 0.0f64;
        let mut worst = None;
        for i in 0..self.game.players() {
            for t_i in 0..self.game.type_dist(i).len() {
                let played = choose(i, t_i);
                let base = self.interim_utility(i, t_i, played, choose);
                for &a in self.game.available(i, t_i) {
                    if a == played {
                        continue;
                    }
                    let alt = self.interim_utility(i, t_i, a, choose);
                    let regret = if cost { base - alt } else { alt - base };
                    if regret > max_regret {
                        max_regret = regret;
                        worst = Some((i, t_i, a));
                        if early_exit && max_regret > epsilon {
                            return (max_regret, worst);
                        }
                    }
                }
            }
        }
        (max_regret, worst)
    }

    /// Interim argmax action (argmin for cost) for `(player, type)` against
    /// `choose`, ties to the lowest action index.
    pub fn best_response(
        &self,
        player: usize,
        type_idx: usize,
        choose: &dyn Fn(usize, usize) -> usize,
    ) -> usize {
        let cost = matches!(self.game.objective(), Objective::Cost);
        let mut best_action = self.game.available(player, type_idx)[0];
        let mut best_value = self.interim_utility(player, type_idx, best_action, choose);
        for &a in &self.game.available(player, type_idx)[1..] {
            let v = self.interim_utility(player, type_idx, a, choose);
            let better = if cost { v < best_value } else { v > best_value };
            if better {
                best_value = v;
                best_action = a;
            }
        }
        best_action
    }

    /// Interim utilities of the played profile are nonnegative up to the
    /// ε-regret budget (an ε-BNE can sit up to ε below the zero-utility
    /// deviation it tolerates).
    pub fn individually_rational(&self, s: &StrategyProfile, epsilon: f64) -> bool {
        if matches!(self.game.objective(), Objective::Cost) {
            return true;
        }
        let choose = |k: usize, t: usize| s.action(k, t);
        for i in 0..self.game.players() {
            for t_i in 0..self.game.type_dist(i).len() {
                if self.interim_utility(i, t_i, s.action(i, t_i), &choose)
                    < -epsilon - VERDICT_TOL
                {
                    return false;
                }
            }
        }
        true
    }
}

/// Whether `s` is a pure ε-Bayes-Nash equilibrium, with the worst regret.
pub fn is_pure_bne(game: &BayesianGame, s: &StrategyProfile, epsilon: f64) -> Result<RegretReport> {
    s.validate(game)?;
    let checker = RegretChecker::new(game)?;
    let choose = |k: usize, t: usize| s.action(k, t);
    let (max_regret, worst) = checker.max_regret(&choose, epsilon, false);
    Ok(RegretReport {
        is_bne: max_regret <= epsilon + VERDICT_TOL,
        epsilon,
        max_regret,
        worst,
    })
}

/// Mixed-radix space over strategy slots (player-major, then type), each slot
/// ranging over that type's available actions.
fn strategy_slots(game: &BayesianGame) -> (Vec<(usize, usize)>, Vec<usize>) {
    let mut slots = Vec::new();
    let mut radices = Vec::new();
    for i in 0..game.players() {
        for t in 0..game.type_dist(i).len() {
            slots.push((i, t));
            radices.push(game.available(i, t).len());
        }
    }
    (slots, radices)
}

fn decode_strategy(
    game: &BayesianGame,
    slots: &[(usize, usize)],
    radix: &MixedRadix,
    rank: u64,
    digits: &mut Vec<usize>,
) -> StrategyProfile {
    radix.decode_into(rank, digits);
    let mut choices: Vec<Vec<usize>> = (0..game.players())
        .map(|i| vec![0; game.type_dist(i).len()])
        .collect();
    for (slot, &(i, t)) in slots.iter().enumerate() {
        choices[i][t] = game.available(i, t)[digits[slot]];
    }
    StrategyProfile::new(choices)
}

/// All pure ε-BNE in lexicographic slot order.
pub fn enumerate_pure_bne(
    game: &BayesianGame,
    epsilon: f64,
) -> Result<Vec<StrategyProfile>> {
    let (slots, radices) = strategy_slots(game);
    let size = MixedRadix::space_size(&radices);
    if size > STRATEGY_ENUM_GUARD {
        return Err(LabError::GuardExceeded {
            size,
            guard: STRATEGY_ENUM_GUARD,
        });
    }
    let radix = MixedRadix::new(radices)?;
    let checker = RegretChecker::new(game)?;
    let out = par::filter_map_collect(radix.total(), |rank| {
        let mut digits = Vec::new();
        let s = decode_strategy(game, &slots, &radix, rank, &mut digits);
        let choose = |k: usize, t: usize| s.action(k, t);
        let (regret, _) = checker.max_regret(&choose, epsilon, true);
        (regret <= epsilon + VERDICT_TOL).then_some(s)
    });
    Ok(out)
}

/// Round-robin best-response dynamics from `start`.
///
/// Each step replaces one `(player, type)` slot by the interim argmax; a full
/// quiet round is a fixed point. Returns the final profile and whether it
/// converged within `max_rounds`.
pub fn best_response_dynamics(
    game: &BayesianGame,
    start: &StrategyProfile,
    max_rounds: usize,
) -> Result<(StrategyProfile, bool)> {
    start.validate(game)?;
    let checker = RegretChecker::new(game)?;
    let mut current = start.clone();
    for _ in 0..max_rounds {
        let mut changed = false;
        for i in 0..game.players() {
            for t in 0..game.type_dist(i).len() {
                let snapshot = current.clone();
                let choose = |k: usize, tt: usize| snapshot.action(k, tt);
                let best = checker.best_response(i, t, &choose);
                let played = current.action(i, t);
                if best != played {
                    let played_v = checker.interim_utility(i, t, played, &choose);
                    let best_v = checker.interim_utility(i, t, best, &choose);
                    // switch only on strict improvement so ties keep the
                    // incumbent and fixed points are stable
                    let improves = match game.objective() {
                        Objective::Utility => best_v > played_v,
                        Objective::Cost => best_v < played_v,
                    };
                    if improves {
                        current.choices[i][t] = best;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return Ok((current, true));
        }
    }
    Ok((current, false))
}

/// Measured Bayes-Nash price of anarchy.
#[derive(Clone, Debug, Serialize)]
pub enum PoaValue {
    Finite(f64),
    /// A zero-welfare (or zero-optimal-cost) equilibrium exists.
    Infinite,
    /// No ε-BNE was found at the given ε.
    NoEquilibrium,
}

#[derive(Clone, Debug, Serialize)]
pub struct PoaReport {
    pub value: PoaValue,
    pub epsilon: f64,
    pub equilibria: usize,
    pub expected_optimal: f64,
    /// Expected welfare (cost) of the worst equilibrium, when one exists.
    pub worst_welfare: Option<f64>,
    #[serde(skip)]
    pub worst_profile: Option<StrategyProfile>,
}

/// Worst-equilibrium PoA over all enumerated pure ε-BNE.
pub fn bayes_nash_poa(game: &BayesianGame, epsilon: f64) -> Result<PoaReport> {
    let equilibria = enumerate_pure_bne(game, epsilon)?;
    poa_over_equilibria(game, &equilibria, epsilon)
}

/// PoA restricted to a provided equilibrium set (first worst profile wins).
pub fn poa_over_equilibria(
    game: &BayesianGame,
    equilibria: &[StrategyProfile],
    epsilon: f64,
) -> Result<PoaReport> {
    let expected_optimal = game.expected_optimal_welfare()?;
    if equilibria.is_empty() {
        return Ok(PoaReport {
            value: PoaValue::NoEquilibrium,
            epsilon,
            equilibria: 0,
            expected_optimal,
            worst_welfare: None,
            worst_profile: None,
        });
    }
    let cost = matches!(game.objective(), Objective::Cost);
    let mut worst: Option<(f64, &StrategyProfile)> = None;
    for s in equilibria {
        let w = game.expected_welfare(s)?;
        let is_worse = match worst {
            None => true,
            Some((cur, _)) => {
                if cost {
                    w > cur
                } else {
                    w < cur
                }
            }
        };
        if is_worse {
            worst = Some((w, s));
        }
    }
    let (worst_welfare, worst_profile) = worst.expect("nonempty");
    let value = if cost {
        if expected_optimal <= 0.0 {
            if worst_welfare <= 0.0 {
                PoaValue::Finite(1.0)
            } else {
                PoaValue::Infinite
            }
        } else {
            PoaValue::Finite(worst_welfare / expected_optimal)
        }
    } else if worst_welfare <= 0.0 {
        if expected_optimal <= 0.0 {
            PoaValue::Finite(1.0)
        } else {
            PoaValue::Infinite
        }
    } else {
        PoaValue::Finite(expected_optimal / worst_welfare)
    };
    Ok(PoaReport {
        value,
        epsilon,
        equilibria: equilibria.len(),
        expected_optimal,
        worst_welfare: Some(worst_welfare),
        worst_profile: Some(worst_profile.clone()),
    })
}

/// The ε ladder used when no equilibrium exists at ε = 0: `0, base, 2·base,
/// 3·base, 4·base`.
pub fn epsilon_ladder(base: f64) -> Vec<f64> {
    if base <= 0.0 {
        vec![0.0]
    } else {
        (0..=4).map(|k| k as f64 * base).collect()
    }
}

/// Enumerates ε-BNE at the first ladder rung that yields a nonempty set.
/// Returns the rung used alongside the set (possibly empty at the last rung).
pub fn equilibria_with_ladder(
    game: &BayesianGame,
    base: f64,
) -> Result<(f64, Vec<StrategyProfile>)> {
    let ladder = epsilon_ladder(base);
    let mut last = (0.0, Vec::new());
    for eps in ladder {
        let found = enumerate_pure_bne(game, eps)?;
        if !found.is_empty() {
            return Ok((eps, found));
        }
        last = (eps, found);
    }
    Ok(last)
}

#[derive(Clone, Debug, Serialize)]
pub struct MisalignmentVerdict {
    pub pass: bool,
    /// `E_t E_w [SW^w(s(t))]`.
    pub cross: f64,
    /// `E_t [SW^t(s(t))]`.
    pub aligned: f64,
    pub budget: f64,
}

/// The equilibrium misalignment inequality
/// `E_t E_w[SW^w(s(t))] <= E_t[SW^t(s(t))] + n·ε` (reversed for cost games).
///
/// `s` must be an ε-BNE; this is verified first.
pub fn check_misalignment(
    game: &BayesianGame,
    s: &StrategyProfile,
    epsilon: f64,
) -> Result<MisalignmentVerdict> {
    let report = is_pure_bne(game, s, epsilon)?;
    if !report.is_bne {
        return Err(LabError::Invariant(format!(
            "misalignment requires an ε-BNE; max regret {} exceeds ε {}",
            report.max_regret, epsilon
        )));
    }
    let n = game.players();
    let space = game.type_space();
    let mut t = Vec::new();
    let mut w = Vec::new();
    let mut aligned = 0.0;
    let mut cross = 0.0;
    for t_rank in 0..space.total() {
        space.decode_into(t_rank, &mut t);
        let pt = game.type_profile_prob(&t);
        let a: Vec<usize> = (0..n).map(|i| s.action(i, t[i])).collect();
        aligned += pt * game.welfare_unchecked(&t, &a);
        for w_rank in 0..space.total() {
            space.decode_into(w_rank, &mut w);
            let pw = game.type_profile_prob(&w);
            cross += pt * pw * game.welfare_unchecked(&w, &a);
        }
    }
    let budget = n as f64 * epsilon;
    let tol = VERDICT_TOL * aligned.abs().max(1.0);
    let pass = match game.objective() {
        Objective::Utility => cross <= aligned + budget + tol,
        Objective::Cost => cross >= aligned - budget - tol,
    };
    Ok(MisalignmentVerdict {
        pass,
        cross,
        aligned,
        budget,
    })
}

/// Complete-information pure-Nash PoA at one fixed type profile, computed by
/// direct enumeration of action profiles (no strategy machinery). Serves as
/// the independent oracle for singleton-type games.
#[derive(Clone, Debug, Serialize)]
pub struct PureNashReport {
    pub value: PoaValue,
    pub equilibria: usize,
    pub optimal: f64,
    pub worst_welfare: Option<f64>,
    #[serde(skip)]
    pub equilibrium_profiles: Vec<Vec<usize>>,
}

pub fn pure_nash_poa(game: &BayesianGame, t: &[usize], epsilon: f64) -> Result<PureNashReport> {
    let space = game.action_space(t)?;
    let cost = matches!(game.objective(), Objective::Cost);
    let (_, optimal) = game.optimal_profile(t)?;
    let mut equilibria = Vec::new();
    let mut a = Vec::new();
    let mut alt = Vec::new();
    'outer: for rank in 0..space.total() {
        space.decode_into(rank, &mut a);
        for i in 0..game.players() {
            let base = game.utility(i, t[i], &a);
            for &d in game.available(i, t[i]) {
                if d == a[i] {
                    continue;
                }
                alt.clear();
                alt.extend_from_slice(&a);
                alt[i] = d;
                let v = game.utility(i, t[i], &alt);
                let regret = if cost { base - v } else { v - base };
                if regret > epsilon + VERDICT_TOL {
                    continue 'outer;
                }
            }
        }
        equilibria.push(a.clone());
    }
    if equilibria.is_empty() {
        return Ok(PureNashReport {
            value: PoaValue::NoEquilibrium,
            equilibria: 0,
            optimal,
            worst_welfare: None,
            equilibrium_profiles: Vec::new(),
        });
    }
    let mut worst: Option<f64> = None;
    for e in &equilibria {
        let w = game.welfare_unchecked(t, e);
        worst = Some(match worst {
            None => w,
            Some(cur) => {
                if cost {
                    cur.max(w)
                } else {
                    cur.min(w)
                }
            }
        });
    }
    let worst_welfare = worst.expect("nonempty");
    let value = if cost {
        if optimal <= 0.0 {
            if worst_welfare <= 0.0 {
                PoaValue::Finite(1.0)
            } else {
                PoaValue::Infinite
            }
        } else {
            PoaValue::Finite(worst_welfare / optimal)
        }
    } else if worst_welfare <= 0.0 {
        if optimal <= 0.0 {
            PoaValue::Finite(1.0)
        } else {
            PoaValue::Infinite
        }
    } else {
        PoaValue::Finite(optimal / worst_welfare)
    };
    Ok(PureNashReport {
        value,
        equilibria: equilibria.len(),
        optimal,
        worst_welfare: Some(worst_welfare),
        equilibrium_profiles: equilibria,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::TypeDistribution;
    use std::sync::Arc;

    fn single_player_game(utils: Vec<f64>) -> BayesianGame {
        BayesianGame::constant_space(
            Objective::Utility,
            vec![TypeDistribution::singleton("t")],
            vec![(0..utils.len()).map(|k| format!("a{k}")).collect()],
            Arc::new(move |_: usize, _: usize, p: &[usize]| utils[p[0]]),
        )
        .unwrap()
    }

    fn matching_pennies() -> BayesianGame {
        // zero-sum 2x2 with no pure equilibrium
        BayesianGame::constant_space(
            Objective::Utility,
            vec![
                TypeDistribution::singleton("t"),
                TypeDistribution::singleton("t"),
            ],
            vec![
                vec!["h".into(), "t".into()],
                vec!["h".into(), "t".into()],
            ],
            Arc::new(|player: usize, _: usize, p: &[usize]| {
                let matches = p[0] == p[1];
                match (player, matches) {
                    (0, true) => 1.0,
                    (0, false) => -1.0,
                    (1, true) => -1.0,
                    (1, false) => 1.0,
                    _ => unreachable!(),
                }
            }),
        )
        .unwrap()
    }

    #[test]
    fn argmax_profile_is_bne_with_zero_regret() {
        let g = single_player_game(vec![1.0, 7.0, 3.0]);
        let s = StrategyProfile::new(vec![vec![1]]);
        let r = is_pure_bne(&g, &s, 0.0).unwrap();
        assert!(r.is_bne);
        assert_eq!(r.max_regret, 0.0);
    }

    #[test]
    fn off_argmax_reports_the_gap() {
        let g = single_player_game(vec![1.0, 7.0, 3.0]);
        let s = StrategyProfile::new(vec![vec![2]]);
        let r = is_pure_bne(&g, &s, 0.0).unwrap();
        assert!(!r.is_bne);
        assert_eq!(r.max_regret, 4.0);
        assert_eq!(r.worst, Some((0, 0, 1)));
    }

    #[test]
    fn enumeration_finds_exactly_the_argmax_profiles() {
        // ties included
        let g = single_player_game(vec![5.0, 5.0, 3.0]);
        let found = enumerate_pure_bne(&g, 0.0).unwrap();
        assert_eq!(found.len(), 2);
        assert_eq!(found[0].choices, vec![vec![0]]);
        assert_eq!(found[1].choices, vec![vec![1]]);
    }

    #[test]
    fn matching_pennies_has_no_pure_bne() {
        let g = matching_pennies();
        assert!(enumerate_pure_bne(&g, 0.0).unwrap().is_empty());
        // and dynamics cycles forever
        let start = StrategyProfile::new(vec![vec![0], vec![0]]);
        let (_, converged) = best_response_dynamics(&g, &start, 50).unwrap();
        assert!(!converged);
    }

    #[test]
    fn dominant_strategy_profile_is_found() {
        // both players have dominant action 1
        let g = BayesianGame::constant_space(
            Objective::Utility,
            vec![
                TypeDistribution::singleton("t"),
                TypeDistribution::singleton("t"),
            ],
            vec![
                vec!["a".into(), "b".into()],
                vec!["a".into(), "b".into()],
            ],
            Arc::new(|player: usize, _: usize, p: &[usize]| {
                if p[player] == 1 {
                    2.0
                } else {
                    1.0
                }
            }),
        )
        .unwrap();
        let found = enumerate_pure_bne(&g, 0.0).unwrap();
        assert!(found
            .iter()
            .any(|s| s.choices == vec![vec![1], vec![1]]));
    }

    #[test]
    fn single_player_dynamics_converges_in_one_round() {
        let g = single_player_game(vec![1.0, 7.0, 3.0]);
        let start = StrategyProfile::new(vec![vec![0]]);
        let (s, converged) = best_response_dynamics(&g, &start, 1).unwrap();
        assert!(converged || s.choices == vec![vec![1]]);
        let (s2, conv2) = best_response_dynamics(&g, &start, 2).unwrap();
        assert!(conv2);
        assert_eq!(s2.choices, vec![vec![1]]);
        let r = is_pure_bne(&g, &s2, 0.0).unwrap();
        assert!(r.is_bne);
    }

    #[test]
    fn guard_refuses_large_spaces() {
        // 30 actions, 6 type slots -> 30^6 = 7.29e8 > guard
        let dist = TypeDistribution::new(
            (0..6).map(|k| format!("t{k}")).collect(),
            vec![1.0 / 6.0 + (1.0 - 6.0 * (1.0 / 6.0)) / 6.0; 6],
        );
        // build probabilities that sum exactly to 1
        let dist = dist.unwrap_or_else(|_| {
            TypeDistribution::new(
                (0..6).map(|k| format!("t{k}")).collect(),
                vec![0.25, 0.25, 0.125, 0.125, 0.125, 0.125],
            )
            .unwrap()
        });
        let g = BayesianGame::constant_space(
            Objective::Utility,
            vec![dist],
            vec![(0..30).map(|k| format!("a{k:02}")).collect()],
            Arc::new(|_, _, _: &[usize]| 0.0),
        )
        .unwrap();
        match enumerate_pure_bne(&g, 0.0) {
            Err(LabError::GuardExceeded { size, guard }) => {
                assert_eq!(size, 30u128.pow(6));
                assert_eq!(guard, STRATEGY_ENUM_GUARD);
            }
            other => panic!("expected guard refusal, got {other:?}"),
        }
    }

    #[test]
    fn single_player_poa_is_one() {
        let g = single_player_game(vec![1.0, 7.0]);
        let r = bayes_nash_poa(&g, 0.0).unwrap();
        match r.value {
            PoaValue::Finite(v) => assert_eq!(v, 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn misalignment_on_singleton_types_is_equality() {
        let g = single_player_game(vec![1.0, 7.0]);
        let s = StrategyProfile::new(vec![vec![1]]);
        let v = check_misalignment(&g, &s, 0.0).unwrap();
        assert!(v.pass);
        assert_eq!(v.cross, v.aligned);
    }

    #[test]
    fn misalignment_type_independent_utilities_is_equality() {
        let dist =
            TypeDistribution::new(vec!["x".into(), "y".into()], vec![0.5, 0.5]).unwrap();
        let g = BayesianGame::constant_space(
            Objective::Utility,
            vec![dist],
            vec![vec!["a".into(), "b".into()]],
            Arc::new(|_, _, p: &[usize]| if p[0] == 0 { 2.0 } else { 1.0 }),
        )
        .unwrap();
        let s = StrategyProfile::new(vec![vec![0, 0]]);
        let v = check_misalignment(&g, &s, 0.0).unwrap();
        assert!(v.pass);
        assert!((v.cross - v.aligned).abs() < 1e-15);
    }

    #[test]
    fn misalignment_requires_equilibrium() {
        let g = single_player_game(vec![1.0, 7.0]);
        let s = StrategyProfile::new(vec![vec![0]]);
        assert!(check_misalignment(&g, &s, 0.0).is_err());
    }

    #[test]
    fn bne_roundtrip_property() {
        // every enumerated profile passes is_pure_bne at the same epsilon
        let g = matching_pennies();
        for eps in [0.0, 1.0, 2.0] {
            for s in enumerate_pure_bne(&g, eps).unwrap() {
                assert!(is_pure_bne(&g, &s, eps).unwrap().is_bne);
            }
        }
    }

    #[test]
    fn dynamics_fixed_points_are_exact_bne() {
        let g = BayesianGame::constant_space(
            Objective::Utility,
            vec![
                TypeDistribution::singleton("t"),
                TypeDistribution::singleton("t"),
            ],
            vec![
                vec!["a".into(), "b".into()],
                vec!["a".into(), "b".into()],
            ],
            // coordination game
            Arc::new(|_: usize, _: usize, p: &[usize]| {
                if p[0] == p[1] {
                    if p[0] == 1 {
                        2.0
                    } else {
                        1.0
                    }
                } else {
                    0.0
                }
            }),
        )
        .unwrap();
        let start = StrategyProfile::new(vec![vec![0], vec![0]]);
        let (s, converged) = best_response_dynamics(&g, &start, 10).unwrap();
        assert!(converged);
        assert!(is_pure_bne(&g, &s, 0.0).unwrap().is_bne);
    }

    #[test]
    fn complete_info_poa_coincides_with_bayes_nash_on_singletons() {
        let g = matching_pennies();
        let direct = pure_nash_poa(&g, &[0, 0], 0.0).unwrap();
        let bayes = bayes_nash_poa(&g, 0.0).unwrap();
        assert!(matches!(direct.value, PoaValue::NoEquilibrium));
        assert!(matches!(bayes.value, PoaValue::NoEquilibrium));

        let g2 = single_player_game(vec![1.0, 3.0]);
        let direct = pure_nash_poa(&g2, &[0], 0.0).unwrap();
        let bayes = bayes_nash_poa(&g2, 0.0).unwrap();
        match (direct.value, bayes.value) {
            (PoaValue::Finite(a), PoaValue::Finite(b)) => assert_eq!(a, b),
            other => panic!("{other:?}"),
        }
    }
}
