//! Weighted congestion games with probabilistic demands.
//!
//! Players route private weights over explicit path lists; edge delays are
//! polynomials with nonnegative coefficients. An action is a (rate, path)
//! pair whose rate is pinned to the player's realized weight, so the game is
//! a variable-strategy-space cost game and its smoothness notion is the
//! universal one. The pointwise delay condition
//! `x*·l(x+x*) <= λ·x*·l(x*) + μ·x·l(x)` is checked on load grids and, for
//! monomials, reduced exactly to one dimension; optimizing `λ/(1−μ)` over the
//! admissible region recovers the known delay-class bounds (linear delays:
//! `(3+√5)/2`).

use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::game::{BayesianGame, Objective, TypeDistribution};
use crate::smoothness::{self, Certificate, CheckOptions};

/// `l(x) = Σ_k coeffs[k]·x^k`, all coefficients nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayPoly {
    coeffs: Vec<f64>,
}

impl DelayPoly {
    pub const MAX_DEGREE: usize = 8;

    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > Self::MAX_DEGREE + 1 {
            return Err(LabError::Invariant(format!(
                "delay polynomial needs 1..={} coefficients",
                Self::MAX_DEGREE + 1
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(LabError::Invariant(
                "delay coefficients must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c]).expect("constant delay")
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

#[derive(Clone, Debug)]
pub struct CongestionPlayer {
    /// Allowed paths as edge masks (explicit lists, nonempty).
    pub paths: Vec<u32>,
    pub types: TypeDistribution,
    /// Weight per type, aligned with the distribution support; all positive.
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct CongestionInstance {
    pub edges: Vec<DelayPoly>,
    pub players: Vec<CongestionPlayer>,
}

impl CongestionInstance {
    pub fn validate(&self) -> Result<()> {
        if self.edges.is_empty() || self.edges.len() > 30 {
            return Err(LabError::Invariant("instance needs 1..=30 edges".into()));
        }
        if self.players.is_empty() {
            return Err(LabError::Invariant("instance needs players".into()));
        }
        let full = (1u32 << self.edges.len()) - 1;
        for (i, p) in self.players.iter().enumerate() {
            if p.paths.is_empty() {
                return Err(LabError::Invariant(format!("player {i} has no paths")));
            }
            if p.paths.iter().any(|&m| m == 0 || m & !full != 0) {
                return Err(LabError::Invariant(format!(
                    "player {i} paths must be nonempty edge subsets"
                )));
            }
            if p.weights.len() != p.types.len() {
                return Err(LabError::Invariant(format!(
                    "player {i} needs one weight per type"
                )));
            }
            if p.weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
                return Err(LabError::Invariant(format!(
                    "player {i} weights must be positive"
                )));
            }
        }
        Ok(())
    }

    /// Edge loads realizable in the game: every sum where each player
    /// contributes one of their weights or nothing. Sorted, deduplicated,
    /// includes 0.
    pub fn realizable_loads(&self) -> Vec<f64> {
        let mut loads = vec![0.0f64];
        for p in &self.players {
            let mut next = loads.clone();
            for &w in &p.weights {
                for &x in &loads {
                    next.push(x + w);
                }
            }
            next.sort_by(|a, b| a.partial_cmp(b).unwrap());
            next.dedup();
            loads = next;
        }
        loads
    }

    /// Per-player costs `Σ_{e∈p_i} r_i·l_e(x_e)` with loads from the action
    /// rates. Validates that each player's rate matches their type's weight.
    pub fn player_cost(&self, t: &[usize], actions: &[(usize, usize)]) -> Result<Vec<f64>> {
        let n = self.players.len();
        if t.len() != n || actions.len() != n {
            return Err(LabError::Invariant(
                "type and action profiles must cover every player".into(),
            ));
        }
        for (i, &(rate_type, path_idx)) in actions.iter().enumerate() {
            if rate_type != t[i] {
                return Err(LabError::InvalidAction {
                    player: i,
                    reason: format!(
                        "rate index {rate_type} does not match the realized type {}",
                        t[i]
                    ),
                });
            }
            if path_idx >= self.players[i].paths.len() {
                return Err(LabError::InvalidAction {
                    player: i,
                    reason: format!("path index {path_idx} out of range"),
                });
            }
        }
        Ok(self.costs_unchecked(actions))
    }

    fn loads_of(&self, actions: &[(usize, usize)]) -> Vec<f64> {
        let mut loads = vec![0.0f64; self.edges.len()];
        for (i, &(rate_type, path_idx)) in actions.iter().enumerate() {
            let w = self.players[i].weights[rate_type];
            let mut rest = self.players[i].paths[path_idx];
            while rest != 0 {
                let e = rest.trailing_zeros() as usize;
                loads[e] += w;
                rest &= rest - 1;
            }
        }
        loads
    }

    fn costs_unchecked(&self, actions: &[(usize, usize)]) -> Vec<f64> {
        let loads = self.loads_of(actions);
        let delay: Vec<f64> = self
            .edges
            .iter()
            .zip(&loads)
            .map(|(l, &x)| l.eval(x))
            .collect();
        actions
            .iter()
            .enumerate()
            .map(|(i, &(rate_type, path_idx))| {
                let w = self.players[i].weights[rate_type];
                let mut acc = 0.0;
                let mut rest = self.players[i].paths[path_idx];
                while rest != 0 {
                    let e = rest.trailing_zeros() as usize;
                    acc += w * delay[e];
                    rest &= rest - 1;
                }
                acc
            })
            .collect()
    }

    /// `Σ_e x_e·l_e(x_e)`, the edge-sum form of social cost.
    pub fn edge_sum_social_cost(&self, actions: &[(usize, usize)]) -> f64 {
        let loads = self.loads_of(actions);
        self.edges
            .iter()
            .zip(&loads)
            .map(|(l, &x)| x * l.eval(x))
            .sum()
    }
}

struct CongestionUtility {
    inst: Arc<CongestionInstance>,
    /// Per player: the (rate type, path) pair of each universe action.
    actions: Vec<Vec<(usize, usize)>>,
}

impl crate::game::Utility for CongestionUtility {
    fn eval(&self, player: usize, _own_type: usize, profile: &[usize]) -> f64 {
        // cost depends on actions only; the own type enters through the
        // action-availability constraint
        let decoded: Vec<(usize, usize)> = profile
            .iter()
            .enumerate()
            .map(|(k, &a)| self.actions[k][a])
            .collect();
        self.inst.costs_unchecked(&decoded)[player]
    }
}

/// The instance as a variable-strategy-space cost game.
pub struct CongestionGame {
    inst: Arc<CongestionInstance>,
    game: BayesianGame,
    actions: Vec<Vec<(usize, usize)>>,
}

impl CongestionGame {
    pub fn build(inst: CongestionInstance) -> Result<Self> {
        inst.validate()?;
        let inst = Arc::new(inst);
        let n = inst.players.len();
        let mut actions = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut available = Vec::with_capacity(n);
        for p in &inst.players {
            let mut acts = Vec::new();
            let mut labs = Vec::new();
            let mut per_type: Vec<Vec<usize>> = vec![Vec::new(); p.types.len()];
            for (ti, slots) in per_type.iter_mut().enumerate() {
                for pi in 0..p.paths.len() {
                    slots.push(acts.len());
                    acts.push((ti, pi));
                    labs.push(format!("r{ti:02}-p{pi:02}"));
                }
            }
            actions.push(acts);
            labels.push(labs);
            available.push(per_type);
        }
        let game = BayesianGame::new(
            Objective::Cost,
            inst.players.iter().map(|p| p.types.clone()).collect(),
            labels,
            available,
            Arc::new(CongestionUtility {
                inst: Arc::clone(&inst),
                actions: actions.clone(),
            }),
        )?;
        Ok(Self {
            inst,
            game,
            actions,
        })
    }

    pub fn instance(&self) -> &CongestionInstance {
        &self.inst
    }

    pub fn game(&self) -> &BayesianGame {
        &self.game
    }

    /// Decodes a universe action index to its (rate type, path) pair.
    pub fn action_pair(&self, player: usize, action: usize) -> (usize, usize) {
        self.actions[player][action]
    }

    /// Universal smoothness check of the built game (no slack: the action
    /// space is exact, not discretized).
    pub fn check_universal_smoothness(
        &self,
        lambda: f64,
        mu: f64,
        opts: &CheckOptions,
    ) -> Result<Certificate> {
        smoothness::check_universal(&self.game, lambda, mu, opts)
    }
}

/// Convenience path generator: all simple s–t paths of a small directed
/// graph, as edge masks over the input edge list.
pub fn simple_paths(
    edge_endpoints: &[(usize, usize)],
    source: usize,
    target: usize,
) -> Result<Vec<u32>> {
    if edge_endpoints.len() > 8 {
        return Err(LabError::Invariant(
            "path generator supports at most 8 edges".into(),
        ));
    }
    let mut out = Vec::new();
    let mut stack = vec![(source, 0u32, 1u64 << source)];
    while let Some((node, mask, visited)) = stack.pop() {
        if node == target {
            out.push(mask);
            continue;
        }
        for (e, &(u, v)) in edge_endpoints.iter().enumerate() {
            if u == node && visited & (1 << v) == 0 {
                stack.push((v, mask | (1 << e), visited | (1 << v)));
            }
        }
    }
    out.sort_unstable();
    if out.is_empty() {
        return Err(LabError::Invariant("no s–t path exists".into()));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct PointwiseVerdict {
    pub pass: bool,
    pub worst_margin: f64,
    /// `(x, x*)` attaining the worst margin.
    pub worst_point: (f64, f64),
}

/// Checks `x*·l(x+x*) <= λ·x*·l(x*) + μ·x·l(x)` over all pairs from `loads`
/// and, through the exact one-dimensional ratio reduction, over every
/// monomial the polynomial carries.
pub fn check_pointwise_condition(
    delay: &DelayPoly,
    lambda: f64,
    mu: f64,
    loads: &[f64],
) -> Result<PointwiseVerdict> {
    if !(lambda > 0.0) || !(0.0..1.0).contains(&mu) {
        return Err(LabError::Invariant(
            "pointwise condition needs λ > 0 and 0 <= μ < 1".into(),
        ));
    }
    let mut worst = f64::INFINITY;
    let mut worst_point = (0.0, 0.0);
    for &x in loads {
        for &xs in loads {
            let margin =
                lambda * xs * delay.eval(xs) + mu * x * delay.eval(x) - xs * delay.eval(x + xs);
            if margin < worst {
                worst = margin;
                worst_point = (x, xs);
            }
        }
    }
    // monomial terms admit the scale-free reduction (1+r)^k <= λ + μ·r^{k+1};
    // λ short of the supremum is a violation even if the grid misses it
    for (k, &c) in delay.coeffs().iter().enumerate() {
        if c > 0.0 {
            let needed = monomial_lambda_needed(k, mu);
            let margin = lambda - needed;
            if margin < worst {
                worst = margin;
                // ratio witness mapped onto (x, x*) = (r, 1)
                worst_point = (monomial_worst_ratio(k, mu), 1.0);
            }
        }
    }
    Ok(PointwiseVerdict {
        pass: worst >= -1e-9,
        worst_margin: worst,
        worst_point,
    })
}

/// `sup_{r >= 0} (1+r)^k − μ·r^{k+1}`: the smallest admissible λ for the
/// monomial `x^k` at a given μ.
fn monomial_lambda_needed(k: usize, mu: f64) -> f64 {
    let r = monomial_worst_ratio(k, mu);
    monomial_objective(k, mu, r)
}

fn monomial_objective(k: usize, mu: f64, r: f64) -> f64 {
    (1.0 + r).powi(k as i32) - mu * r.powi(k as i32 + 1)
}

/// Argmax of the unimodal ratio objective (ternary search on a bracket).
fn monomial_worst_ratio(k: usize, mu: f64) -> f64 {
    if k == 0 {
        return 0.0; // 1 − μ·r is maximized at r = 0
    }
    debug_assert!(mu > 0.0);
    // g'(r) = k(1+r)^{k−1} − (k+1)μ·r^k changes sign exactly once
    let mut hi = 1.0f64;
    while k as f64 * (1.0 + hi).powi(k as i32 - 1) > (k as f64 + 1.0) * mu * hi.powi(k as i32) {
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if monomial_objective(k, mu, m1) < monomial_objective(k, mu, m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    0.5 * (lo + hi)
}

/// A class of delay functions: all polynomials with nonnegative coefficients
/// and degree at most `max_degree`.
#[derive(Clone, Copy, Debug)]
pub struct DelayClass {
    pub max_degree: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DelayParameters {
    pub lambda: f64,
    pub mu: f64,
    /// `λ/(1−μ)`, the implied Bayes-Nash cost PoA bound.
    pub bound: f64,
}

/// Numerically minimizes `λ/(1−μ)` subject to the pointwise condition holding
/// for every monomial of the class; `λ(μ)` is the monomial supremum. Returns
/// `None` as the unbounded marker when no `μ < 1` admits a finite bound.
pub fn best_delay_parameters(class: DelayClass) -> Result<Option<DelayParameters>> {
    if class.max_degree > 4 {
        return Err(LabError::Invariant(
            "delay-class optimization supports degree <= 4".into(),
        ));
    }
    if class.max_degree == 0 {
        // constants: no congestion externality
        return Ok(Some(DelayParameters {
            lambda: 1.0,
            mu: 0.0,
            bound: 1.0,
        }));
    }
    let lambda_of = |mu: f64| -> f64 {
        (0..=class.max_degree)
            .map(|k| monomial_lambda_needed(k, mu))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let bound_of = |mu: f64| -> f64 { lambda_of(mu) / (1.0 - mu) };

    // coarse grid, then golden-section refinement around the best point
    let grid: Vec<f64> = (1..512).map(|k| k as f64 / 512.0).collect();
    let mut best_mu = grid[0];
    let mut best = bound_of(best_mu);
    for &mu in &grid[1..] {
        let b = bound_of(mu);
        if b < best {
            best = b;
            best_mu = mu;
        }
    }
    let mut lo = (best_mu - 1.0 / 512.0).max(1e-9);
    let mut hi = (best_mu + 1.0 / 512.0).min(1.0 - 1e-9);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut m1 = hi - phi * (hi - lo);
    let mut m2 = lo + phi * (hi - lo);
    let mut f1 = bound_of(m1);
    let mut f2 = bound_of(m2);
    for _ in 0..200 {
        if f1 <= f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - phi * (hi - lo);
            f1 = bound_of(m1);
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + phi * (hi - lo);
            f2 = bound_of(m2);
        }
    }
    let mu = 0.5 * (lo + hi);
    if !(0.0..1.0).contains(&mu) {
        return Ok(None);
    }
    // a numerical cushion keeps the returned λ at or above the true supremum
    let lambda = lambda_of(mu) + 1e-12;
    Ok(Some(DelayParameters {
        lambda,
        mu,
        bound: lambda / (1.0 - mu),
    }))
}
