//! Bayesian effort games: players split private budgets across projects with
//! concave piecewise-linear values, and each project's value is shared in
//! proportion to weighted inputs.
//!
//! An action is a (declared type, effort vector) pair; the declared ability
//! is pinned to the true one, so the game has a variable strategy space and
//! the relevant certificate is universal (1,1)-smoothness. Share conservation
//! (`Σ_i share_ij = V_j(S_j)` whenever `S_j > 0`) is an algebraic identity;
//! the `exact` module verifies it in rational arithmetic, where it holds
//! bit-for-bit, while game evaluation uses the f64 fast path.

use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::game::{BayesianGame, Objective, TypeDistribution};
use crate::smoothness::{self, Certificate, CheckOptions};

/// Concave nondecreasing piecewise-linear value with `V(0) = 0`, extended
/// past the last breakpoint with its final slope.
#[derive(Clone, Debug)]
pub struct PwlValue {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PwlValue {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints[0] != (0.0, 0.0) {
            return Err(LabError::Invariant(
                "breakpoints must start at (0, 0)".into(),
            ));
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = breakpoints.into_iter().unzip();
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Invariant(
                "breakpoint abscissae must be strictly increasing".into(),
            ));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(LabError::Invariant("breakpoints must be finite".into()));
        }
        let mut prev_slope = f64::INFINITY;
        for k in 1..xs.len() {
            let slope = (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]);
            if slope < 0.0 {
                return Err(LabError::Invariant("slopes must be nonnegative".into()));
            }
            if slope > prev_slope + 1e-12 {
                return Err(LabError::Invariant(
                    "slopes must be nonincreasing (concavity)".into(),
                ));
            }
            prev_slope = slope;
        }
        Ok(Self { xs, ys })
    }

    /// `min(x, cap)`-style capped linear value.
    pub fn capped_linear(cap: f64) -> Result<Self> {
        Self::new(vec![(0.0, 0.0), (cap, cap), (2.0 * cap, cap)])
    }

    pub fn linear(slope: f64) -> Result<Self> {
        Self::new(vec![(0.0, 0.0), (1.0, slope)])
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn eval(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        let k = match self.xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(k) => return self.ys[k],
            Err(k) => k,
        };
        if k == 0 {
            return self.ys[0];
        }
        let (x0, y0) = (self.xs[k - 1], self.ys[k - 1]);
        let (x1, y1) = if k < self.xs.len() {
            (self.xs[k], self.ys[k])
        } else if self.xs.len() == 1 {
            // a single breakpoint at the origin: identically zero
            return 0.0;
        } else {
            // extend with the final slope
            let xm = self.xs[self.xs.len() - 2];
            let ym = self.ys[self.ys.len() - 2];
            let slope = (self.ys[self.ys.len() - 1] - ym) / (self.xs[self.xs.len() - 1] - xm);
            return self.ys[self.ys.len() - 1] + slope * (x - self.xs[self.xs.len() - 1]);
        };
        y0 + (y1 - y0) / (x1 - x0) * (x - x0)
    }

    /// `V(x)/x` must not increase in `x`; audited on a grid of breakpoints
    /// and midpoints.
    pub fn value_over_x_nonincreasing(&self) -> bool {
        let mut probes: Vec<f64> = self.xs.iter().copied().filter(|x| *x > 0.0).collect();
        let last = *self.xs.last().unwrap();
        probes.push(last + 1.0);
        probes.push(last * 2.0 + 1.0);
        for w in self.xs.windows(2) {
            probes.push(0.5 * (w[0] + w[1]));
        }
        probes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        probes.dedup();
        let mut prev = f64::INFINITY;
        for &x in probes.iter().filter(|x| **x > 0.0) {
            let ratio = self.eval(x) / x;
            if ratio > prev + 1e-12 {
                return false;
            }
            prev = ratio;
        }
        true
    }
}

#[derive(Clone, Debug)]
pub struct EffortType {
    /// Ability per project, nonnegative.
    pub ability: Vec<f64>,
    /// Positive effort budget.
    pub budget: f64,
}

#[derive(Clone, Debug)]
pub struct EffortPlayer {
    pub types: TypeDistribution,
    pub profiles: Vec<EffortType>,
}

#[derive(Clone, Debug)]
pub struct EffortInstance {
    pub projects: Vec<PwlValue>,
    /// Effort grid step.
    pub delta: f64,
    pub players: Vec<EffortPlayer>,
}

impl EffortInstance {
    pub fn validate(&self) -> Result<()> {
        if self.projects.is_empty() {
            return Err(LabError::Invariant("instance needs projects".into()));
        }
        if !(self.delta > 0.0) {
            return Err(LabError::Invariant("delta must be positive".into()));
        }
        if self.players.is_empty() {
            return Err(LabError::Invariant("instance needs players".into()));
        }
        for v in &self.projects {
            if !v.value_over_x_nonincreasing() {
                return Err(LabError::Invariant(
                    "project value fails the V(x)/x monotonicity audit".into(),
                ));
            }
        }
        for (i, p) in self.players.iter().enumerate() {
            if p.profiles.len() != p.types.len() {
                return Err(LabError::Invariant(format!(
                    "player {i} needs one ability/budget pair per type"
                )));
            }
            for ty in &p.profiles {
                if ty.ability.len() != self.projects.len() {
                    return Err(LabError::Invariant(format!(
                        "player {i} ability vector must cover every project"
                    )));
                }
                if ty.ability.iter().any(|a| !a.is_finite() || *a < 0.0) {
                    return Err(LabError::Invariant(format!(
                        "player {i} abilities must be nonnegative"
                    )));
                }
                if !(ty.budget > 0.0) {
                    return Err(LabError::Invariant(format!(
                        "player {i} budget must be positive"
                    )));
                }
            }
        }
        Ok(())
    }

    /// δ-grid effort vectors with `Σ_j x_j <= B`, plus, for each underfull
    /// point, its budget-exhausting completions (one per project). Sorted
    /// lexicographically.
    pub fn effort_vectors(&self, budget: f64) -> Vec<Vec<f64>> {
        let m = self.projects.len();
        let levels = (budget / self.delta + 1e-9).floor() as usize;
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut current = vec![0usize; m];
        loop {
            let total: usize = current.iter().sum();
            if total <= levels {
                let vec: Vec<f64> = current.iter().map(|&k| k as f64 * self.delta).collect();
                let spent: f64 = vec.iter().sum();
                let remainder = budget - spent;
                if remainder > 1e-12 {
                    for j in 0..m {
                        let mut exhausted = vec.clone();
                        exhausted[j] += remainder;
                        out.push(exhausted);
                    }
                }
                out.push(vec);
            }
            // odometer over 0..=levels per coordinate
            let mut pos = m;
            loop {
                if pos == 0 {
                    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    out.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| x == y));
                    return out;
                }
                pos -= 1;
                if current[pos] < levels {
                    current[pos] += 1;
                    for slot in current.iter_mut().skip(pos + 1) {
                        *slot = 0;
                    }
                    break;
                }
            }
        }
    }

    /// Weighted inputs `w_kj = a_kj·x_kj` per (player, project) for a decoded
    /// action profile.
    fn weighted_inputs(&self, actions: &[(usize, &[f64])]) -> Vec<Vec<f64>> {
        actions
            .iter()
            .enumerate()
            .map(|(k, &(ty, efforts))| {
                self.players[k].profiles[ty]
                    .ability
                    .iter()
                    .zip(efforts)
                    .map(|(a, x)| a * x)
                    .collect()
            })
            .collect()
    }

    /// Proportional-share utility of one player (f64 fast path). A zero
    /// weighted input contributes zero even when the project total is zero.
    pub fn utility(&self, player: usize, actions: &[(usize, &[f64])]) -> f64 {
        let w = self.weighted_inputs(actions);
        let mut acc = 0.0;
        for j in 0..self.projects.len() {
            let own = w[player][j];
            if own == 0.0 {
                continue;
            }
            let total: f64 = w.iter().map(|row| row[j]).sum();
            acc += own * self.projects[j].eval(total) / total;
        }
        acc
    }

    /// `Σ_j V_j(S_j)`.
    pub fn social_welfare(&self, actions: &[(usize, &[f64])]) -> f64 {
        let w = self.weighted_inputs(actions);
        (0..self.projects.len())
            .map(|j| {
                let total: f64 = w.iter().map(|row| row[j]).sum();
                self.projects[j].eval(total)
            })
            .sum()
    }
}

/// Exact rational arithmetic audits.
pub mod exact {
    use num_bigint::BigInt;
    use num_rational::BigRational;

    use super::EffortInstance;

    fn rat(x: f64) -> BigRational {
        BigRational::from_float(x).expect("finite input")
    }

    fn pwl_eval(v: &super::PwlValue, x: &BigRational) -> BigRational {
        let pts: Vec<(BigRational, BigRational)> =
            v.breakpoints().map(|(a, b)| (rat(a), rat(b))).collect();
        // locate the segment (extend past the end with the final slope)
        for k in 1..pts.len() {
            if *x <= pts[k].0 {
                let (x0, y0) = &pts[k - 1];
                let (x1, y1) = &pts[k];
                return y0 + (y1 - y0) / (x1 - x0) * (x - x0);
            }
        }
        if pts.len() == 1 {
            return BigRational::from(BigInt::from(0));
        }
        let (x0, y0) = &pts[pts.len() - 2];
        let (x1, y1) = &pts[pts.len() - 1];
        y1 + (y1 - y0) / (x1 - x0) * (x - x1)
    }

    /// `Σ_i share_ij == V_j(S_j)` exactly, for every project with `S_j > 0`.
    pub fn share_conservation(inst: &EffortInstance, actions: &[(usize, &[f64])]) -> bool {
        let zero = BigRational::from(BigInt::from(0));
        for j in 0..inst.projects.len() {
            let inputs: Vec<BigRational> = actions
                .iter()
                .enumerate()
                .map(|(k, &(ty, efforts))| {
                    rat(inst.players[k].profiles[ty].ability[j]) * rat(efforts[j])
                })
                .collect();
            let total: BigRational = inputs.iter().cloned().sum();
            if total == zero {
                continue;
            }
            let value = pwl_eval(&inst.projects[j], &total);
            let shares: BigRational = inputs
                .iter()
                .map(|w| w * &value / &total)
                .sum();
            if shares != value {
                return false;
            }
        }
        true
    }

    /// `Σ_i u_i == Σ_j V_j(S_j)` exactly.
    pub fn welfare_identity(inst: &EffortInstance, actions: &[(usize, &[f64])]) -> bool {
        let zero = BigRational::from(BigInt::from(0));
        let mut utilities = vec![BigRational::from(BigInt::from(0)); actions.len()];
        let mut welfare = BigRational::from(BigInt::from(0));
        for j in 0..inst.projects.len() {
            let inputs: Vec<BigRational> = actions
                .iter()
                .enumerate()
                .map(|(k, &(ty, efforts))| {
                    rat(inst.players[k].profiles[ty].ability[j]) * rat(efforts[j])
                })
                .collect();
            let total: BigRational = inputs.iter().cloned().sum();
            if total == zero {
                continue;
            }
            let value = pwl_eval(&inst.projects[j], &total);
            welfare += &value;
            for (u, w) in utilities.iter_mut().zip(&inputs) {
                *u += w * &value / &total;
            }
        }
        utilities.into_iter().sum::<BigRational>() == welfare
    }
}

struct EffortUtility {
    inst: Arc<EffortInstance>,
    /// Per player: (declared type, effort vector) per universe action.
    actions: Vec<Vec<(usize, Vec<f64>)>>,
}

impl crate::game::Utility for EffortUtility {
    fn eval(&self, player: usize, _own_type: usize, profile: &[usize]) -> f64 {
        // utility is action-determined: the declared ability rides on the
        // action, and availability pins it to the true type
        let decoded: Vec<(usize, &[f64])> = profile
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                let (ty, ref efforts) = self.actions[k][a];
                (ty, efforts.as_slice())
            })
            .collect();
        self.inst.utility(player, &decoded)
    }
}

/// The instance as a variable-strategy-space utility game.
pub struct EffortGame {
    inst: Arc<EffortInstance>,
    game: BayesianGame,
    actions: Vec<Vec<(usize, Vec<f64>)>>,
}

impl EffortGame {
    pub fn build(inst: EffortInstance) -> Result<Self> {
        inst.validate()?;
        let inst = Arc::new(inst);
        let mut actions = Vec::new();
        let mut labels = Vec::new();
        let mut available = Vec::new();
        for p in &inst.players {
            let mut acts: Vec<(usize, Vec<f64>)> = Vec::new();
            let mut labs: Vec<String> = Vec::new();
            let mut per_type: Vec<Vec<usize>> = vec![Vec::new(); p.types.len()];
            for (ti, slots) in per_type.iter_mut().enumerate() {
                let vectors = inst.effort_vectors(p.profiles[ti].budget);
                if vectors.len() > 10_000 {
                    return Err(LabError::GuardExceeded {
                        size: vectors.len() as u128,
                        guard: 10_000,
                    });
                }
                for v in vectors {
                    slots.push(acts.len());
                    let parts: Vec<String> = v.iter().map(|x| format!("{x:09.4}")).collect();
                    labs.push(format!("t{ti:02}-{}", parts.join("-")));
                    acts.push((ti, v));
                }
            }
            actions.push(acts);
            labels.push(labs);
            available.push(per_type);
        }
        let game = BayesianGame::new(
            Objective::Utility,
            inst.players.iter().map(|p| p.types.clone()).collect(),
            labels,
            available,
            Arc::new(EffortUtility {
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

    pub fn instance(&self) -> &EffortInstance {
        &self.inst
    }

    pub fn game(&self) -> &BayesianGame {
        &self.game
    }

    /// Decodes a universe action index to its (declared type, efforts) pair.
    pub fn action_pair(&self, player: usize, action: usize) -> (usize, &[f64]) {
        let (ty, ref efforts) = self.actions[player][action];
        (ty, efforts)
    }

    /// Universal (1,1)-smoothness of the built game.
    pub fn check_universal_11_smoothness(&self, opts: &CheckOptions) -> Result<Certificate> {
        smoothness::check_universal(&self.game, 1.0, 1.0, opts)
    }

    /// Runs the exact rational share-conservation audit on every action
    /// profile of the universe product (guarded).
    pub fn audit_share_conservation(&self, max_profiles: u64) -> Result<bool> {
        let radix = self.game.universe_space()?;
        if radix.total() > max_profiles {
            return Err(LabError::GuardExceeded {
                size: radix.total() as u128,
                guard: max_profiles as u128,
            });
        }
        let mut buf = Vec::new();
        for rank in 0..radix.total() {
            radix.decode_into(rank, &mut buf);
            let decoded: Vec<(usize, &[f64])> = buf
                .iter()
                .enumerate()
                .map(|(k, &a)| {
                    let (ty, ref efforts) = self.actions[k][a];
                    (ty, efforts.as_slice())
                })
                .collect();
            if !exact::share_conservation(&self.inst, &decoded) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
