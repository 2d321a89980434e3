//! Seeded instance corpus.
//!
//! The generators emit the bundled verification corpus: first-price XOS item
//! auctions, β-fractionally-subadditive table auctions, greedy mechanisms
//! under both built-in priorities, linear-delay congestion instances, and
//! effort games. Everything is produced from a fixed seed through a
//! counter-based generator, and numeric inputs are kept dyadic so exactness
//! audits (cost decomposition, share conservation) hold bit-for-bit.
//!
//! Generators reject degenerate draws (zero-value games, instances whose
//! equilibrium set is empty on the whole ε ladder, payment-fact failures that
//! would put a mechanism outside the fact's scope) and redraw; rejection is
//! part of the deterministic stream, so the corpus is reproducible.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::equilibrium;
use crate::instance::{
    build_instance, AuctionBidderBlock, AuctionTypeBlock, CongestionPlayerBlock, CongestionSpec,
    EffortPlayerBlock, EffortSpec, EffortTypeBlock, FamilySpec, FeasibilitySpec,
    GreedyBidderBlock, GreedySpec, GridSpec, InstanceFile, ItemAuctionSpec, LoadedInstance,
    ProjectBlock, ValuationBlock, WeightBlock, SCHEMA_VERSION,
};
use crate::greedy::{BidLanguage, Priority};
use crate::item_auction::Pricing;
use crate::rng::at_counter;

/// Seed of the bundled corpus.
pub const CORPUS_SEED: u64 = 2012;

fn file(name: String, spec: FamilySpec) -> InstanceFile {
    InstanceFile {
        schema_version: SCHEMA_VERSION,
        name,
        spec,
    }
}

/// Random multiple of `q` in `[0, max]`.
fn dyadic(rng: &mut ChaCha8Rng, q: f64, max: f64) -> f64 {
    let levels = (max / q).round() as u64;
    rng.random_range(0..=levels) as f64 * q
}

/// Random two-type probability split that sums to 1 exactly.
fn dyadic_probs(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    match k {
        1 => vec![1.0],
        2 => {
            let splits = [[0.5, 0.5], [0.25, 0.75], [0.75, 0.25]];
            splits[rng.random_range(0..splits.len())].to_vec()
        }
        _ => unreachable!("corpus uses at most two types"),
    }
}

fn xos_block(rng: &mut ChaCha8Rng, items: usize, vmax: f64, prob: f64) -> AuctionTypeBlock {
    loop {
        let clauses = rng.random_range(1..=3usize);
        let matrix: Vec<Vec<f64>> = (0..clauses)
            .map(|_| (0..items).map(|_| dyadic(rng, 0.25, vmax)).collect())
            .collect();
        if matrix.iter().flatten().any(|v| *v > 0.0) {
            return AuctionTypeBlock {
                id: None,
                prob,
                valuation: ValuationBlock {
                    xos: Some(matrix),
                    table: None,
                },
            };
        }
    }
}

/// First-price XOS item auctions: n <= 3, m <= 3, <= 2 types per bidder,
/// grid step 0.25. Designs keep `m <= 2n` (with single bidders exempt: they
/// never lose ties) so the half-bid snapping budget `n·step` is valid, and
/// strategy spaces stay within the enumeration guard.
pub fn fp_item_auction_corpus() -> Vec<InstanceFile> {
    // (bidders, items, types per bidder, grid max)
    let designs: [(usize, usize, usize, f64); 20] = [
        (1, 1, 1, 1.0),
        (1, 2, 2, 1.0),
        (2, 1, 1, 1.0),
        (2, 1, 2, 1.0),
        (2, 2, 1, 1.0),
        (2, 2, 2, 1.0),
        (2, 2, 2, 1.0),
        (2, 3, 1, 1.0),
        (3, 1, 1, 1.0),
        (3, 1, 2, 1.0),
        (3, 2, 1, 1.0),
        (3, 3, 1, 0.5),
        (2, 2, 2, 1.0),
        (2, 1, 2, 1.0),
        (2, 3, 1, 1.0),
        (3, 2, 1, 1.0),
        (2, 2, 1, 1.0),
        (3, 1, 2, 1.0),
        (2, 2, 2, 1.0),
        (3, 3, 1, 0.5),
    ];
    designs
        .iter()
        .enumerate()
        .map(|(k, &(n, m, types, vmax))| {
            let mut rng = at_counter(CORPUS_SEED, 100 + k as u64);
            let bidders = (0..n)
                .map(|_| {
                    let probs = dyadic_probs(&mut rng, types);
                    AuctionBidderBlock {
                        types: probs
                            .into_iter()
                            .map(|p| xos_block(&mut rng, m, vmax, p))
                            .collect(),
                    }
                })
                .collect();
            file(
                format!("fp-xos-{k:02}"),
                FamilySpec::ItemAuction(ItemAuctionSpec {
                    pricing: Pricing::FirstPrice,
                    items: m,
                    grid: GridSpec {
                        step: 0.25,
                        max: 1.0,
                    },
                    no_overbidding: true,
                    bidders,
                }),
            )
        })
        .collect()
}

/// Table-valuation auctions with measured `β ∈ (1, 2]`: symmetric three-item
/// tables `v = a` on singletons, `b` on pairs, `γ` on the full set, chosen so
/// the full-set cover LP binds strictly below `v`.
pub fn beta_table_corpus() -> Vec<InstanceFile> {
    // (a, b, γ): monotone, subadditive, β = γ / (3·min(a, b/2, γ/3)) > 1
    let shapes: [(f64, f64, f64); 6] = [
        (1.0, 1.0, 1.625),
        (1.0, 1.0, 1.75),
        (1.0, 1.0, 1.875),
        (1.0, 1.0, 2.0),
        (0.75, 1.0, 1.75),
        (1.0, 1.25, 2.0),
    ];
    shapes
        .iter()
        .enumerate()
        .map(|(k, &(a, b, gamma))| {
            let mut rng = at_counter(CORPUS_SEED, 200 + k as u64);
            let mut table = vec![0.0f64; 8];
            for s in 1u32..8 {
                table[s as usize] = match s.count_ones() {
                    1 => a,
                    2 => b,
                    _ => gamma,
                };
            }
            // second bidder: a small additive XOS player
            let second = xos_block(&mut rng, 3, 0.75, 1.0);
            file(
                format!("fp-beta-{k:02}"),
                FamilySpec::ItemAuction(ItemAuctionSpec {
                    pricing: Pricing::FirstPrice,
                    items: 3,
                    grid: GridSpec {
                        step: 0.25,
                        max: 1.25,
                    },
                    no_overbidding: true,
                    bidders: vec![
                        AuctionBidderBlock {
                            types: vec![AuctionTypeBlock {
                                id: None,
                                prob: 1.0,
                                valuation: ValuationBlock {
                                    xos: None,
                                    table: Some(table),
                                },
                            }],
                        },
                        AuctionBidderBlock {
                            types: vec![second],
                        },
                    ],
                }),
            )
        })
        .collect()
}

/// Second-price companions for the empirical separation story (measured PoA
/// only; no certificate is claimed for these).
pub fn second_price_corpus() -> Vec<InstanceFile> {
    (0..3)
        .map(|k| {
            let mut rng = at_counter(CORPUS_SEED, 300 + k as u64);
            let bidders = (0..2)
                .map(|_| AuctionBidderBlock {
                    types: vec![xos_block(&mut rng, 2, 1.0, 1.0)],
                })
                .collect();
            file(
                format!("sp-xos-{k:02}"),
                FamilySpec::ItemAuction(ItemAuctionSpec {
                    pricing: Pricing::SecondPrice,
                    items: 2,
                    grid: GridSpec {
                        step: 0.25,
                        max: 1.0,
                    },
                    no_overbidding: true,
                    bidders,
                }),
            )
        })
        .collect()
}

fn additive_block(rng: &mut ChaCha8Rng, items: usize, vmax: f64, prob: f64) -> AuctionTypeBlock {
    loop {
        let clause: Vec<f64> = (0..items).map(|_| dyadic(rng, 0.25, vmax)).collect();
        if clause.iter().any(|v| *v > 0.0) {
            return AuctionTypeBlock {
                id: None,
                prob,
                valuation: ValuationBlock {
                    xos: Some(vec![clause]),
                    table: None,
                },
            };
        }
    }
}

/// Greedy first-price mechanisms under both built-in priorities, disjoint
/// feasibility, single-minded bid spaces. Instances whose payment fact fails
/// even with the discretization budget are redrawn (the fact's side
/// conditions put them outside scope).
pub fn greedy_corpus() -> Vec<InstanceFile> {
    // (players, items, types, priority)
    let designs: [(usize, usize, usize, Priority); 10] = [
        (1, 1, 1, Priority::Value),
        (2, 2, 1, Priority::Value),
        (2, 2, 2, Priority::Value),
        (3, 2, 1, Priority::Value),
        (3, 3, 1, Priority::Value),
        (2, 2, 1, Priority::ValuePerItem),
        (2, 2, 2, Priority::ValuePerItem),
        (3, 2, 1, Priority::ValuePerItem),
        (3, 3, 1, Priority::ValuePerItem),
        (2, 3, 1, Priority::ValuePerItem),
    ];
    designs
        .iter()
        .enumerate()
        .map(|(k, &(n, m, types, priority))| {
            let mut rng = at_counter(CORPUS_SEED, 400 + k as u64);
            for attempt in 0..50 {
                let spec = draw_greedy(&mut rng, n, m, types, priority);
                let candidate = file(format!("greedy-{k:02}"), FamilySpec::GreedyAuction(spec));
                if greedy_instance_ok(&candidate) {
                    return candidate;
                }
                let _ = attempt;
            }
            panic!("greedy corpus design {k} failed to draw a usable instance");
        })
        .collect()
}

fn draw_greedy(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    types: usize,
    priority: Priority,
) -> GreedySpec {
    // menus: one or two nonempty subsets per player, overlapping by design
    let all_sets: Vec<Vec<usize>> = (1u32..1 << m)
        .map(|mask| (0..m).filter(|j| mask & (1 << j) != 0).collect())
        .collect();
    let bidders = (0..n)
        .map(|_| {
            let menu_size = rng.random_range(1..=2usize);
            let mut menu = Vec::new();
            while menu.len() < menu_size {
                let pick = all_sets[rng.random_range(0..all_sets.len())].clone();
                if !menu.contains(&pick) {
                    menu.push(pick);
                }
            }
            let probs = dyadic_probs(rng, types);
            GreedyBidderBlock {
                menu,
                types: probs
                    .into_iter()
                    .map(|p| additive_block(rng, m, 1.0, p))
                    .collect(),
            }
        })
        .collect();
    GreedySpec {
        items: m,
        priority,
        feasibility: FeasibilitySpec::Generator("disjoint-sets".into()),
        bid_language: BidLanguage::SingleMinded,
        grid: GridSpec {
            step: 0.25,
            max: 1.0,
        },
        c: None,
        bidders,
    }
}

fn greedy_instance_ok(candidate: &InstanceFile) -> bool {
    let Ok(loaded) = build_instance(candidate) else {
        return false;
    };
    let crate::instance::FamilyHandle::Greedy { game, .. } = &loaded.family else {
        return false;
    };
    let Ok(c) = game.approximation_factor() else {
        return false;
    };
    if !c.is_finite() {
        return false;
    }
    let Ok(fact) = game.check_payment_fact_all(c, game.slack()) else {
        return false;
    };
    if !fact.pass {
        return false;
    }
    has_ladder_equilibria(&loaded)
}

fn has_ladder_equilibria(loaded: &LoadedInstance) -> bool {
    match equilibrium::equilibria_with_ladder(loaded.game(), loaded.epsilon_base()) {
        Ok((_, found)) => !found.is_empty(),
        Err(_) => false,
    }
}

/// Linear-delay congestion instances: <= 3 players, <= 4 edges, <= 2 weight
/// types, dyadic weights and coefficients (exact cost decomposition).
/// Instances without an exact pure BNE are redrawn.
pub fn congestion_corpus() -> Vec<InstanceFile> {
    // (players, edges, types)
    let designs: [(usize, usize, usize); 10] = [
        (1, 2, 1),
        (2, 2, 1),
        (2, 2, 2),
        (2, 3, 1),
        (2, 3, 2),
        (3, 2, 1),
        (3, 3, 1),
        (3, 3, 2),
        (3, 4, 1),
        (3, 4, 2),
    ];
    designs
        .iter()
        .enumerate()
        .map(|(k, &(n, e, types))| {
            let mut rng = at_counter(CORPUS_SEED, 500 + k as u64);
            for _ in 0..50 {
                let spec = draw_congestion(&mut rng, n, e, types);
                let candidate = file(format!("congestion-{k:02}"), FamilySpec::Congestion(spec));
                if let Ok(loaded) = build_instance(&candidate) {
                    if has_ladder_equilibria(&loaded) {
                        return candidate;
                    }
                }
            }
            panic!("congestion corpus design {k} failed to draw a usable instance");
        })
        .collect()
}

fn draw_congestion(rng: &mut ChaCha8Rng, n: usize, e: usize, types: usize) -> CongestionSpec {
    let edges: Vec<Vec<f64>> = (0..e)
        .map(|_| {
            // linear delays with a positive slope or offset
            loop {
                let c0 = dyadic(rng, 0.25, 1.0);
                let c1 = dyadic(rng, 0.25, 1.0);
                if c0 + c1 > 0.0 {
                    return vec![c0, c1];
                }
            }
        })
        .collect();
    // parallel links: every player may use any single edge
    let paths: Vec<Vec<usize>> = (0..e).map(|j| vec![j]).collect();
    let weight_pool = [0.5, 1.0, 1.5, 2.0];
    let players = (0..n)
        .map(|_| {
            let probs = dyadic_probs(rng, types);
            let mut weights: Vec<f64> = Vec::new();
            while weights.len() < types {
                let w = weight_pool[rng.random_range(0..weight_pool.len())];
                if !weights.contains(&w) {
                    weights.push(w);
                }
            }
            CongestionPlayerBlock {
                paths: paths.clone(),
                weights: probs
                    .into_iter()
                    .zip(weights)
                    .map(|(prob, w)| WeightBlock { id: None, prob, w })
                    .collect(),
            }
        })
        .collect();
    CongestionSpec { edges, players }
}

/// Effort games: <= 3 players, <= 2 projects, dyadic abilities, budgets and
/// breakpoints; one deliberately fine grid exercises the sampled universal
/// check. Instances without ladder equilibria are redrawn.
pub fn effort_corpus() -> Vec<InstanceFile> {
    // (players, projects, types, delta)
    let designs: [(usize, usize, usize, f64); 10] = [
        (1, 1, 1, 0.25),
        (2, 1, 1, 0.25),
        (2, 1, 2, 0.25),
        (2, 2, 1, 0.25),
        (2, 2, 2, 0.25),
        (3, 1, 1, 0.25),
        (3, 2, 1, 0.25),
        (3, 2, 1, 0.5),
        (2, 2, 2, 0.5),
        (3, 2, 1, 0.125),
    ];
    designs
        .iter()
        .enumerate()
        .map(|(k, &(n, m, types, delta))| {
            let mut rng = at_counter(CORPUS_SEED, 600 + k as u64);
            for _ in 0..50 {
                let spec = draw_effort(&mut rng, n, m, types, delta);
                let candidate = file(format!("effort-{k:02}"), FamilySpec::Effort(spec));
                if let Ok(loaded) = build_instance(&candidate) {
                    if has_ladder_equilibria(&loaded) {
                        return candidate;
                    }
                }
            }
            panic!("effort corpus design {k} failed to draw a usable instance");
        })
        .collect()
}

fn draw_effort(rng: &mut ChaCha8Rng, n: usize, m: usize, types: usize, delta: f64) -> EffortSpec {
    let projects: Vec<ProjectBlock> = (0..m)
        .map(|_| match rng.random_range(0..3u8) {
            0 => ProjectBlock {
                // linear
                breakpoints: vec![(0.0, 0.0), (1.0, dyadic_pos(rng, 0.25, 1.0))],
            },
            1 => {
                // capped linear
                let cap = dyadic_pos(rng, 0.25, 1.0);
                ProjectBlock {
                    breakpoints: vec![(0.0, 0.0), (cap, cap), (2.0 * cap, cap)],
                }
            }
            _ => {
                // two concave segments with dyadic slopes
                let y1 = dyadic_pos(rng, 0.25, 1.0);
                let x1 = 0.5;
                let slope2 = dyadic(rng, 0.25, (y1 / x1).min(1.0));
                ProjectBlock {
                    breakpoints: vec![(0.0, 0.0), (x1, y1), (x1 + 1.0, y1 + slope2)],
                }
            }
        })
        .collect();
    let budget_pool = [0.5, 1.0];
    let players = (0..n)
        .map(|_| {
            let probs = dyadic_probs(rng, types);
            EffortPlayerBlock {
                types: probs
                    .into_iter()
                    .map(|prob| EffortTypeBlock {
                        id: None,
                        prob,
                        ability: (0..m).map(|_| dyadic_pos(rng, 0.25, 2.0)).collect(),
                        budget: budget_pool[rng.random_range(0..budget_pool.len())],
                    })
                    .collect(),
            }
        })
        .collect();
    EffortSpec {
        projects,
        delta,
        players,
    }
}

fn dyadic_pos(rng: &mut ChaCha8Rng, q: f64, max: f64) -> f64 {
    loop {
        let v = dyadic(rng, q, max);
        if v > 0.0 {
            return v;
        }
    }
}

/// The whole bundled corpus.
pub fn full_corpus() -> Vec<InstanceFile> {
    let mut out = fp_item_auction_corpus();
    out.extend(beta_table_corpus());
    out.extend(second_price_corpus());
    out.extend(greedy_corpus());
    out.extend(congestion_corpus());
    out.extend(effort_corpus());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic() {
        let a = fp_item_auction_corpus();
        let b = fp_item_auction_corpus();
        assert_eq!(a.len(), 20);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn fp_instances_build() {
        for f in fp_item_auction_corpus() {
            let loaded = build_instance(&f).expect("corpus instance builds");
            assert_eq!(loaded.family_name(), "item-auction");
        }
    }

    #[test]
    fn beta_instances_have_beta_in_range() {
        for f in beta_table_corpus() {
            let loaded = build_instance(&f).unwrap();
            let crate::instance::FamilyHandle::ItemAuction(g) = &loaded.family else {
                panic!("wrong family");
            };
            let beta = g.max_beta();
            assert!(beta > 1.0 && beta <= 2.0, "{}: beta {beta}", f.name);
        }
    }
}
