//! Instance files: one JSON document per game, dispatched to a family
//! builder. Loaders enforce every family invariant and renormalize mildly
//! unnormalized probabilities (warning) while rejecting anything beyond the
//! tolerance.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::congestion::{CongestionGame, CongestionInstance, CongestionPlayer, DelayPoly};
use crate::effort::{EffortGame, EffortInstance, EffortPlayer, EffortType, PwlValue};
use crate::error::{LabError, Result};
use crate::game::{BayesianGame, TypeDistribution};
use crate::greedy::{
    BidLanguage, FeasibilityKind, GreedyEngine, GreedyGame, GreedyMechanism, Priority,
};
use crate::item_auction::{BidGrid, BidderSpec, ItemAuction, ItemAuctionGame, Pricing};
use crate::valuations::{TableValuation, Valuation, XOSValuation};

pub const SCHEMA_VERSION: u32 = 1;

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub name: String,
    pub spec: FamilySpec,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilySpec {
    ItemAuction(ItemAuctionSpec),
    GreedyAuction(GreedySpec),
    Congestion(CongestionSpec),
    Effort(EffortSpec),
}

impl InstanceFile {
    pub fn family_tag(&self) -> &'static str {
        match &self.spec {
            FamilySpec::ItemAuction(_) => "item-auction",
            FamilySpec::GreedyAuction(_) => "greedy-auction",
            FamilySpec::Congestion(_) => "congestion",
            FamilySpec::Effort(_) => "effort",
        }
    }

    /// One JSON object per instance: common keys plus the family payload.
    pub fn to_json(&self) -> serde_json::Value {
        let payload = match &self.spec {
            FamilySpec::ItemAuction(s) => serde_json::to_value(s),
            FamilySpec::GreedyAuction(s) => serde_json::to_value(s),
            FamilySpec::Congestion(s) => serde_json::to_value(s),
            FamilySpec::Effort(s) => serde_json::to_value(s),
        }
        .expect("specs serialize");
        let mut obj = serde_json::Map::new();
        obj.insert("schema_version".into(), self.schema_version.into());
        obj.insert("name".into(), self.name.clone().into());
        obj.insert("family".into(), self.family_tag().into());
        if let serde_json::Value::Object(fields) = payload {
            for (k, v) in fields {
                obj.insert(k, v);
            }
        }
        serde_json::Value::Object(obj)
    }

    pub fn to_pretty_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("json encodes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let serde_json::Value::Object(map) = value else {
            return Err(LabError::Schema {
                path: "$".into(),
                message: "instance document must be a JSON object".into(),
            });
        };
        let mut rest = map.clone();
        let schema_version = match rest.remove("schema_version") {
            None => default_schema_version(),
            Some(v) => serde_json::from_value(v).map_err(|e| LabError::Schema {
                path: "schema_version".into(),
                message: e.to_string(),
            })?,
        };
        let name: String = match rest.remove("name") {
            None => {
                return Err(LabError::Schema {
                    path: "name".into(),
                    message: "missing".into(),
                })
            }
            Some(v) => serde_json::from_value(v).map_err(|e| LabError::Schema {
                path: "name".into(),
                message: e.to_string(),
            })?,
        };
        let family: String = match rest.remove("family") {
            None => {
                return Err(LabError::Schema {
                    path: "family".into(),
                    message: "missing".into(),
                })
            }
            Some(v) => serde_json::from_value(v).map_err(|e| LabError::Schema {
                path: "family".into(),
                message: e.to_string(),
            })?,
        };
        let payload = serde_json::Value::Object(rest);
        let against = |e: serde_json::Error| LabError::Schema {
            path: family.clone(),
            message: e.to_string(),
        };
        let spec = match family.as_str() {
            "item-auction" => {
                FamilySpec::ItemAuction(serde_json::from_value(payload).map_err(against)?)
            }
            "greedy-auction" => {
                FamilySpec::GreedyAuction(serde_json::from_value(payload).map_err(against)?)
            }
            "congestion" => {
                FamilySpec::Congestion(serde_json::from_value(payload).map_err(against)?)
            }
            "effort" => FamilySpec::Effort(serde_json::from_value(payload).map_err(against)?),
            other => {
                return Err(LabError::Schema {
                    path: "family".into(),
                    message: format!("unknown family tag `{other}`"),
                })
            }
        };
        Ok(Self {
            schema_version,
            name,
            spec,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub step: f64,
    pub max: f64,
}

/// A valuation block: exactly one of `xos` (clause matrix) or `table`
/// (all `2^m` values indexed by bitmask).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ValuationBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xos: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<f64>>,
}

impl ValuationBlock {
    fn build(&self, items: usize, at: &str) -> Result<Valuation> {
        match (&self.xos, &self.table) {
            (Some(clauses), None) => Ok(Valuation::Xos(
                XOSValuation::new(items, clauses.clone()).map_err(|e| schema(at, e))?,
            )),
            (None, Some(values)) => Ok(Valuation::Table(
                TableValuation::new(items, values.clone()).map_err(|e| schema(at, e))?,
            )),
            _ => Err(LabError::Schema {
                path: at.into(),
                message: "exactly one of `xos` or `table` is required".into(),
            }),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AuctionTypeBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub prob: f64,
    #[serde(flatten)]
    pub valuation: ValuationBlock,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AuctionBidderBlock {
    pub types: Vec<AuctionTypeBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ItemAuctionSpec {
    pub pricing: Pricing,
    pub items: usize,
    pub grid: GridSpec,
    /// Second price only: cap bids at the per-item value (on by default).
    #[serde(default = "default_true")]
    pub no_overbidding: bool,
    pub bidders: Vec<AuctionBidderBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum FeasibilitySpec {
    Generator(String),
    Explicit(Vec<Vec<Vec<usize>>>),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GreedyBidderBlock {
    /// Nonempty item-index sets the bidder may be allocated and bid on.
    pub menu: Vec<Vec<usize>>,
    pub types: Vec<AuctionTypeBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GreedySpec {
    pub items: usize,
    pub priority: Priority,
    pub feasibility: FeasibilitySpec,
    #[serde(default = "default_bid_language")]
    pub bid_language: BidLanguage,
    pub grid: GridSpec,
    /// Theoretical approximation factor; measured when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub bidders: Vec<GreedyBidderBlock>,
}

fn default_bid_language() -> BidLanguage {
    BidLanguage::SingleMinded
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WeightBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub prob: f64,
    pub w: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CongestionPlayerBlock {
    /// Paths as edge-index lists.
    pub paths: Vec<Vec<usize>>,
    pub weights: Vec<WeightBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CongestionSpec {
    /// Delay polynomial coefficient vectors, constant term first.
    pub edges: Vec<Vec<f64>>,
    pub players: Vec<CongestionPlayerBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProjectBlock {
    pub breakpoints: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EffortTypeBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub prob: f64,
    pub ability: Vec<f64>,
    pub budget: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EffortPlayerBlock {
    pub types: Vec<EffortTypeBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EffortSpec {
    pub projects: Vec<ProjectBlock>,
    pub delta: f64,
    pub players: Vec<EffortPlayerBlock>,
}

fn schema(at: &str, err: LabError) -> LabError {
    LabError::Schema {
        path: at.into(),
        message: err.to_string(),
    }
}

/// A built game together with its family handle and loader warnings.
pub struct LoadedInstance {
    pub name: String,
    pub warnings: Vec<String>,
    pub family: FamilyHandle,
}

pub enum FamilyHandle {
    ItemAuction(Arc<ItemAuctionGame>),
    Greedy {
        game: Arc<GreedyGame>,
        /// Approximation factor supplied by the file, if any.
        declared_c: Option<f64>,
    },
    Congestion(Arc<CongestionGame>),
    Effort(Arc<EffortGame>),
}

impl LoadedInstance {
    pub fn game(&self) -> &BayesianGame {
        match &self.family {
            FamilyHandle::ItemAuction(g) => g.game(),
            FamilyHandle::Greedy { game, .. } => game.game(),
            FamilyHandle::Congestion(g) => g.game(),
            FamilyHandle::Effort(g) => g.game(),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match &self.family {
            FamilyHandle::ItemAuction(_) => "item-auction",
            FamilyHandle::Greedy { .. } => "greedy-auction",
            FamilyHandle::Congestion(_) => "congestion",
            FamilyHandle::Effort(_) => "effort",
        }
    }

    /// Family discretization slack for certificate checks.
    pub fn certificate_slack(&self) -> f64 {
        match &self.family {
            FamilyHandle::ItemAuction(g) => g.slack(),
            FamilyHandle::Greedy { game, .. } => game.slack(),
            FamilyHandle::Congestion(_) => 0.0,
            FamilyHandle::Effort(_) => 0.0,
        }
    }

    /// Base of the ε ladder: the family's action-discretization step.
    pub fn epsilon_base(&self) -> f64 {
        match &self.family {
            FamilyHandle::ItemAuction(g) => g.auction().grid.step(),
            FamilyHandle::Greedy { game, .. } => game.engine().mechanism().grid.step(),
            FamilyHandle::Congestion(_) => 0.0,
            FamilyHandle::Effort(g) => g.instance().delta,
        }
    }
}

/// Builds the typed distribution from (id, prob) blocks, defaulting ids to
/// `t0, t1, …` and renormalizing within tolerance.
fn distribution(
    ids: Vec<Option<String>>,
    probs: Vec<f64>,
    at: &str,
    warnings: &mut Vec<String>,
) -> Result<TypeDistribution> {
    let labels: Vec<String> = ids
        .into_iter()
        .enumerate()
        .map(|(k, id)| id.unwrap_or_else(|| format!("t{k}")))
        .collect();
    let (dist, renormalized) =
        TypeDistribution::renormalized(labels, probs).map_err(|e| schema(at, e))?;
    if renormalized {
        warnings.push(format!("{at}: probabilities renormalized"));
    }
    Ok(dist)
}

fn items_to_mask(items: &[usize], m: usize, at: &str) -> Result<u32> {
    let mut mask = 0u32;
    for &j in items {
        if j >= m {
            return Err(LabError::Schema {
                path: at.into(),
                message: format!("item index {j} out of range (m = {m})"),
            });
        }
        mask |= 1 << j;
    }
    Ok(mask)
}

/// Builds the game from a parsed instance document.
pub fn build_instance(file: &InstanceFile) -> Result<LoadedInstance> {
    let mut warnings = Vec::new();
    let family = match &file.spec {
        FamilySpec::ItemAuction(spec) => {
            let grid = BidGrid::new(spec.grid.step, spec.grid.max)?;
            let mut bidders = Vec::new();
            for (i, b) in spec.bidders.iter().enumerate() {
                let at = format!("bidders[{i}]");
                let ids = b.types.iter().map(|t| t.id.clone()).collect();
                let probs = b.types.iter().map(|t| t.prob).collect();
                let types = distribution(ids, probs, &at, &mut warnings)?;
                let valuations = b
                    .types
                    .iter()
                    .enumerate()
                    .map(|(k, t)| t.valuation.build(spec.items, &format!("{at}.types[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                bidders.push(BidderSpec { types, valuations });
            }
            let auction = ItemAuction {
                pricing: spec.pricing,
                items: spec.items,
                grid,
                no_overbidding: spec.no_overbidding,
                bidders,
            };
            FamilyHandle::ItemAuction(Arc::new(ItemAuctionGame::build(auction)?))
        }
        FamilySpec::GreedyAuction(spec) => {
            let grid = BidGrid::new(spec.grid.step, spec.grid.max)?;
            let mut menus = Vec::new();
            let mut bidders = Vec::new();
            for (i, b) in spec.bidders.iter().enumerate() {
                let at = format!("bidders[{i}]");
                let mut menu = Vec::new();
                for (k, s) in b.menu.iter().enumerate() {
                    menu.push(items_to_mask(s, spec.items, &format!("{at}.menu[{k}]"))?);
                }
                menus.push(menu);
                let ids = b.types.iter().map(|t| t.id.clone()).collect();
                let probs = b.types.iter().map(|t| t.prob).collect();
                let types = distribution(ids, probs, &at, &mut warnings)?;
                let valuations = b
                    .types
                    .iter()
                    .enumerate()
                    .map(|(k, t)| t.valuation.build(spec.items, &format!("{at}.types[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                bidders.push((types, valuations));
            }
            let feasibility = match &spec.feasibility {
                FeasibilitySpec::Generator(name) => match name.as_str() {
                    "disjoint-sets" => FeasibilityKind::DisjointSets,
                    "unrestricted" => FeasibilityKind::Unrestricted,
                    other => {
                        return Err(LabError::Schema {
                            path: "feasibility".into(),
                            message: format!("unknown generator `{other}`"),
                        })
                    }
                },
                FeasibilitySpec::Explicit(list) => {
                    let mut family = Vec::new();
                    for (k, alloc) in list.iter().enumerate() {
                        let mut vector = Vec::new();
                        for (i, s) in alloc.iter().enumerate() {
                            vector.push(items_to_mask(
                                s,
                                spec.items,
                                &format!("feasibility[{k}][{i}]"),
                            )?);
                        }
                        family.push(vector);
                    }
                    FeasibilityKind::Explicit(family)
                }
            };
            let engine = GreedyEngine::new(GreedyMechanism {
                items: spec.items,
                priority: spec.priority,
                menus,
                feasibility,
                bid_language: spec.bid_language,
                grid,
            })?;
            FamilyHandle::Greedy {
                game: Arc::new(GreedyGame::build(engine, bidders)?),
                declared_c: spec.c,
            }
        }
        FamilySpec::Congestion(spec) => {
            let edges = spec
                .edges
                .iter()
                .map(|coeffs| DelayPoly::new(coeffs.clone()))
                .collect::<Result<Vec<_>>>()?;
            let mut players = Vec::new();
            for (i, p) in spec.players.iter().enumerate() {
                let at = format!("players[{i}]");
                let mut paths = Vec::new();
                for (k, path) in p.paths.iter().enumerate() {
                    paths.push(items_to_mask(
                        path,
                        spec.edges.len(),
                        &format!("{at}.paths[{k}]"),
                    )?);
                }
                let ids = p.weights.iter().map(|w| w.id.clone()).collect();
                let probs = p.weights.iter().map(|w| w.prob).collect();
                let types = distribution(ids, probs, &at, &mut warnings)?;
                let weights = p.weights.iter().map(|w| w.w).collect();
                players.push(CongestionPlayer {
                    paths,
                    types,
                    weights,
                });
            }
            FamilyHandle::Congestion(Arc::new(CongestionGame::build(CongestionInstance {
                edges,
                players,
            })?))
        }
        FamilySpec::Effort(spec) => {
            let projects = spec
                .projects
                .iter()
                .map(|p| PwlValue::new(p.breakpoints.clone()))
                .collect::<Result<Vec<_>>>()?;
            let mut players = Vec::new();
            for (i, p) in spec.players.iter().enumerate() {
                let at = format!("players[{i}]");
                let ids = p.types.iter().map(|t| t.id.clone()).collect();
                let probs = p.types.iter().map(|t| t.prob).collect();
                let types = distribution(ids, probs, &at, &mut warnings)?;
                let profiles = p
                    .types
                    .iter()
                    .map(|t| EffortType {
                        ability: t.ability.clone(),
                        budget: t.budget,
                    })
                    .collect();
                players.push(EffortPlayer { types, profiles });
            }
            FamilyHandle::Effort(Arc::new(EffortGame::build(EffortInstance {
                projects,
                delta: spec.delta,
                players,
            })?))
        }
    };
    Ok(LoadedInstance {
        name: file.name.clone(),
        warnings,
        family,
    })
}

/// Parses and builds an instance from a JSON document.
pub fn load_instance_str(text: &str) -> Result<LoadedInstance> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let file = InstanceFile::from_json(&value)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(LabError::Schema {
            path: "schema_version".into(),
            message: format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            ),
        });
    }
    build_instance(&file)
}

/// Loads an instance from a file path.
pub fn load_instance(path: &Path) -> Result<LoadedInstance> {
    let text = std::fs::read_to_string(path)?;
    load_instance_str(&text)
}
