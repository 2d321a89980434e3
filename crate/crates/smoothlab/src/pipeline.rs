//! Batch harness: run an ordered list of verbs against one loaded instance
//! and emit a single JSON report (plus optional CSV tables).
//!
//! Reports are byte-identical across runs and thread counts: every step is
//! deterministic, JSON maps are key-sorted, and nothing time- or
//! machine-dependent is recorded.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::equilibrium::{self, PoaReport};
use crate::error::{LabError, Result};
use crate::game::StrategyProfile;
use crate::greedy::GreedyDeviation;
use crate::instance::{FamilyHandle, LoadedInstance};
use crate::item_auction::FpDeviation;
use crate::smoothness::{
    self, certificate_dominates, Certificate, CheckOptions, DominationInputs, Variant,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "default_run_schema")]
    pub schema_version: u32,
    pub steps: Vec<StepSpec>,
}

fn default_run_schema() -> u32 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepSpec {
    /// Family-default certificate check; any field may be overridden.
    SmoothCheck {
        #[serde(skip_serializing_if = "Option::is_none")]
        variant: Option<Variant>,
        #[serde(skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        mu: Option<f64>,
        /// `half-bid`, `single-minded-half`, or `randomized`.
        #[serde(skip_serializing_if = "Option::is_none")]
        deviation: Option<String>,
        /// Emit the per-(type profile, action profile) margin CSV
        /// (item auctions only).
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        emit_margins: bool,
    },
    /// Adaptive (λ, μ) search minimizing the PoA bound.
    SmoothSearch {
        #[serde(skip_serializing_if = "Option::is_none")]
        variant: Option<Variant>,
        #[serde(skip_serializing_if = "Option::is_none")]
        deviation: Option<String>,
    },
    /// Verify one strategy profile (action labels per player per type).
    BneCheck {
        profile: Vec<Vec<String>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    /// Enumerate pure ε-BNE; without an ε the family ladder is used.
    BneEnumerate {
        #[serde(skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    BneDynamics {
        #[serde(skip_serializing_if = "Option::is_none")]
        start: Option<Vec<Vec<String>>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        max_rounds: Option<usize>,
    },
    /// Worst-equilibrium PoA; without an ε the family ladder is used.
    Poa {
        #[serde(skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    /// The misalignment inequality at every enumerated equilibrium.
    Misalignment {},
    /// Certificate PoA bound vs measured PoA, with ε and slack budgets.
    Domination {},
    /// Greedy auctions: the payment fact over all (b, A′).
    PaymentFact {
        #[serde(skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct StepReport {
    pub op: String,
    /// Some(false) marks a failed certificate or domination check.
    pub pass: Option<bool>,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub instance: String,
    pub family: String,
    pub seed: u64,
    pub warnings: Vec<String>,
    pub steps: Vec<StepReport>,
}

impl Report {
    pub fn to_pretty_string(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&value).expect("report encodes")
    }

    /// True when some step failed a certificate or domination check.
    pub fn has_failures(&self) -> bool {
        self.steps.iter().any(|s| s.pass == Some(false))
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: None,
        }
    }
}

/// State threaded through the steps so later verbs can reuse earlier results.
struct PipelineState {
    certificate: Option<Certificate>,
    equilibria: Option<(f64, Vec<StrategyProfile>)>,
    poa: Option<PoaReport>,
}

fn parse_profile(
    instance: &LoadedInstance,
    labels: &[Vec<String>],
) -> Result<StrategyProfile> {
    let game = instance.game();
    if labels.len() != game.players() {
        return Err(LabError::Schema {
            path: "profile".into(),
            message: format!(
                "profile must cover all {} players (seller included)",
                game.players()
            ),
        });
    }
    let mut choices = Vec::with_capacity(labels.len());
    for (i, per_type) in labels.iter().enumerate() {
        let mut row = Vec::with_capacity(per_type.len());
        for label in per_type {
            let idx = game
                .action_labels(i)
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| LabError::Schema {
                    path: format!("profile[{i}]"),
                    message: format!("unknown action label `{label}`"),
                })?;
            row.push(idx);
        }
        choices.push(row);
    }
    let s = StrategyProfile::new(choices);
    s.validate(game)?;
    Ok(s)
}

fn family_check_options(instance: &LoadedInstance, seed: u64) -> CheckOptions {
    CheckOptions {
        slack: instance.certificate_slack(),
        seed,
        ..CheckOptions::default()
    }
}

/// The family's default certificate parameters:
/// item auctions `(λ_dev/β, 0)` semi, greedy `(λ_dev, c−1)` relaxed with
/// `K = {seller}`, congestion the optimized delay-class pair (universal),
/// effort `(1, 1)` universal.
pub fn default_certificate(
    instance: &LoadedInstance,
    variant: Option<Variant>,
    lambda: Option<f64>,
    mu: Option<f64>,
    deviation: Option<&str>,
    opts: &CheckOptions,
) -> Result<Certificate> {
    match &instance.family {
        FamilyHandle::ItemAuction(g) => {
            let variant = variant.unwrap_or(Variant::Semi);
            if variant != Variant::Semi {
                return explicit_check(instance, variant, lambda, mu, opts);
            }
            let kind = match deviation.unwrap_or("half-bid") {
                "half-bid" => FpDeviation::HalfBid,
                "randomized" => FpDeviation::Randomized,
                other => {
                    return Err(LabError::Schema {
                        path: "deviation".into(),
                        message: format!("unknown item-auction deviation `{other}`"),
                    })
                }
            };
            let base = match kind {
                FpDeviation::HalfBid => 0.5,
                FpDeviation::Randomized => 1.0 - 1.0 / std::f64::consts::E,
            };
            let lambda = lambda.unwrap_or(base / g.max_beta());
            let map = g.deviation_map(kind);
            smoothness::check_semi(g.game(), lambda, mu.unwrap_or(0.0), map.as_ref(), opts)
        }
        FamilyHandle::Greedy { game, declared_c } => {
            let variant = variant.unwrap_or(Variant::Relaxed);
            if variant != Variant::Relaxed {
                return explicit_check(instance, variant, lambda, mu, opts);
            }
            let kind = match deviation.unwrap_or("single-minded-half") {
                "single-minded-half" => GreedyDeviation::SingleMindedHalf,
                "randomized" => GreedyDeviation::Randomized,
                other => {
                    return Err(LabError::Schema {
                        path: "deviation".into(),
                        message: format!("unknown greedy deviation `{other}`"),
                    })
                }
            };
            let base = match kind {
                GreedyDeviation::SingleMindedHalf => 0.5,
                GreedyDeviation::Randomized => 1.0 - 1.0 / std::f64::consts::E,
            };
            let c = match declared_c {
                Some(c) => *c,
                None => game.approximation_factor()?,
            };
            let lambda = lambda.unwrap_or(base);
            let mu = mu.unwrap_or(c - 1.0);
            let map = game.deviation_map(kind);
            smoothness::check_relaxed(
                game.game(),
                lambda,
                mu,
                map.as_ref(),
                &[game.seller()],
                opts,
            )
        }
        FamilyHandle::Congestion(g) => {
            let variant = variant.unwrap_or(Variant::Universal);
            if variant != Variant::Universal {
                return explicit_check(instance, variant, lambda, mu, opts);
            }
            let (lambda, mu) = match (lambda, mu) {
                (Some(l), Some(m)) => (l, m),
                _ => {
                    let degree = g
                        .instance()
                        .edges
                        .iter()
                        .map(crate::congestion::DelayPoly::degree)
                        .max()
                        .unwrap_or(0);
                    let p = crate::congestion::best_delay_parameters(
                        crate::congestion::DelayClass { max_degree: degree },
                    )?
                    .ok_or_else(|| LabError::Invariant("no finite delay-class bound".into()))?;
                    (lambda.unwrap_or(p.lambda), mu.unwrap_or(p.mu))
                }
            };
            g.check_universal_smoothness(lambda, mu, opts)
        }
        FamilyHandle::Effort(g) => {
            let variant = variant.unwrap_or(Variant::Universal);
            if variant != Variant::Universal {
                return explicit_check(instance, variant, lambda, mu, opts);
            }
            smoothness::check_universal(
                g.game(),
                lambda.unwrap_or(1.0),
                mu.unwrap_or(1.0),
                opts,
            )
        }
    }
}

/// A plain/universal check with explicit parameters (no family deviation).
fn explicit_check(
    instance: &LoadedInstance,
    variant: Variant,
    lambda: Option<f64>,
    mu: Option<f64>,
    opts: &CheckOptions,
) -> Result<Certificate> {
    let (Some(lambda), Some(mu)) = (lambda, mu) else {
        return Err(LabError::Schema {
            path: "smooth-check".into(),
            message: "explicit variants require lambda and mu".into(),
        });
    };
    match variant {
        Variant::Plain => smoothness::check_plain(instance.game(), lambda, mu, opts),
        Variant::Universal => smoothness::check_universal(instance.game(), lambda, mu, opts),
        other => Err(LabError::Schema {
            path: "smooth-check".into(),
            message: format!("{other:?} checks need a family deviation map"),
        }),
    }
}

fn equilibria_for(
    instance: &LoadedInstance,
    state: &mut PipelineState,
    epsilon: Option<f64>,
) -> Result<(f64, Vec<StrategyProfile>)> {
    if let (None, Some(found)) = (epsilon, &state.equilibria) {
        return Ok(found.clone());
    }
    let found = match epsilon {
        Some(eps) => (eps, equilibrium::enumerate_pure_bne(instance.game(), eps)?),
        None => equilibrium::equilibria_with_ladder(instance.game(), instance.epsilon_base())?,
    };
    if epsilon.is_none() {
        state.equilibria = Some(found.clone());
    }
    Ok(found)
}

fn profile_labels(instance: &LoadedInstance, s: &StrategyProfile) -> Vec<Vec<String>> {
    let game = instance.game();
    s.choices
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .map(|&a| game.action_label(i, a).to_string())
                .collect()
        })
        .collect()
}

fn write_csv(dir: &Path, file: &str, content: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::fs::File::create(dir.join(file))?;
    f.write_all(content.as_bytes())?;
    Ok(())
}

/// Executes the run spec against one instance.
pub fn run_pipeline(
    instance: &LoadedInstance,
    spec: &RunSpec,
    options: &PipelineOptions,
) -> Result<Report> {
    let mut state = PipelineState {
        certificate: None,
        equilibria: None,
        poa: None,
    };
    let mut steps = Vec::new();
    for step in &spec.steps {
        let report = run_step(instance, step, options, &mut state)?;
        steps.push(report);
    }
    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION,
        instance: instance.name.clone(),
        family: instance.family_name().to_string(),
        seed: options.seed,
        warnings: instance.warnings.clone(),
        steps,
    })
}

fn run_step(
    instance: &LoadedInstance,
    step: &StepSpec,
    options: &PipelineOptions,
    state: &mut PipelineState,
) -> Result<StepReport> {
    let opts = family_check_options(instance, options.seed);
    match step {
        StepSpec::SmoothCheck {
            variant,
            lambda,
            mu,
            deviation,
            emit_margins,
        } => {
            let cert = default_certificate(
                instance,
                *variant,
                *lambda,
                *mu,
                deviation.as_deref(),
                &opts,
            )?;
            if *emit_margins {
                if let (FamilyHandle::ItemAuction(g), Some(dir)) =
                    (&instance.family, &options.out_dir)
                {
                    let kind = match deviation.as_deref().unwrap_or("half-bid") {
                        "randomized" => FpDeviation::Randomized,
                        _ => FpDeviation::HalfBid,
                    };
                    let mut buf = Vec::new();
                    g.write_margin_csv(cert.lambda, kind, &mut buf)?;
                    write_csv(
                        dir,
                        &format!("{}-margins.csv", instance.name),
                        &String::from_utf8(buf).expect("csv is utf-8"),
                    )?;
                }
            }
            let pass = cert.verdict.pass;
            if pass {
                state.certificate = Some(cert.clone());
            }
            Ok(StepReport {
                op: "smooth-check".into(),
                pass: Some(pass),
                detail: serde_json::to_value(&cert)?,
            })
        }
        StepSpec::SmoothSearch { variant, deviation } => {
            let variant = variant.unwrap_or(match &instance.family {
                FamilyHandle::ItemAuction(_) => Variant::Semi,
                FamilyHandle::Greedy { .. } => Variant::Semi,
                _ => Variant::Universal,
            });
            let map: Option<Box<dyn smoothness::DeviationMap + '_>> = match &instance.family {
                FamilyHandle::ItemAuction(g) => {
                    let kind = match deviation.as_deref().unwrap_or("half-bid") {
                        "randomized" => FpDeviation::Randomized,
                        _ => FpDeviation::HalfBid,
                    };
                    Some(g.deviation_map(kind))
                }
                FamilyHandle::Greedy { game, .. } => {
                    let kind = match deviation.as_deref().unwrap_or("single-minded-half") {
                        "randomized" => GreedyDeviation::Randomized,
                        _ => GreedyDeviation::SingleMindedHalf,
                    };
                    Some(game.deviation_map(kind))
                }
                _ => None,
            };
            let best =
                smoothness::best_parameters(instance.game(), variant, map.as_deref(), &opts)?;
            if let Some(b) = &best {
                state.certificate = Some(b.certificate.clone());
            }
            Ok(StepReport {
                op: "smooth-search".into(),
                pass: best.as_ref().map(|_| true),
                detail: match &best {
                    Some(b) => serde_json::to_value(b)?,
                    None => Value::String("none-found".into()),
                },
            })
        }
        StepSpec::BneCheck { profile, epsilon } => {
            let s = parse_profile(instance, profile)?;
            let eps = epsilon.unwrap_or(0.0);
            let report = equilibrium::is_pure_bne(instance.game(), &s, eps)?;
            Ok(StepReport {
                op: "bne-check".into(),
                pass: None,
                detail: serde_json::to_value(&report)?,
            })
        }
        StepSpec::BneEnumerate { epsilon } => {
            let (eps, found) = equilibria_for(instance, state, *epsilon)?;
            if let Some(dir) = &options.out_dir {
                let mut csv = String::from("index,epsilon,expected_welfare\n");
                for (k, s) in found.iter().enumerate() {
                    let w = instance.game().expected_welfare(s)?;
                    csv.push_str(&format!("{k},{eps},{w}\n"));
                }
                write_csv(dir, &format!("{}-equilibria.csv", instance.name), &csv)?;
            }
            let profiles: Vec<Vec<Vec<String>>> = found
                .iter()
                .map(|s| profile_labels(instance, s))
                .collect();
            Ok(StepReport {
                op: "bne-enumerate".into(),
                pass: None,
                detail: serde_json::json!({
                    "epsilon": eps,
                    "count": found.len(),
                    "profiles": profiles,
                }),
            })
        }
        StepSpec::BneDynamics { start, max_rounds } => {
            let game = instance.game();
            let start_profile = match start {
                Some(labels) => parse_profile(instance, labels)?,
                None => StrategyProfile::new(
                    (0..game.players())
                        .map(|i| {
                            (0..game.type_dist(i).len())
                                .map(|t| game.available(i, t)[0])
                                .collect()
                        })
                        .collect(),
                ),
            };
            let (fixed, converged) = equilibrium::best_response_dynamics(
                game,
                &start_profile,
                max_rounds.unwrap_or(100),
            )?;
            Ok(StepReport {
                op: "bne-dynamics".into(),
                pass: None,
                detail: serde_json::json!({
                    "converged": converged,
                    "profile": profile_labels(instance, &fixed),
                }),
            })
        }
        StepSpec::Poa { epsilon } => {
            let (eps, found) = equilibria_for(instance, state, *epsilon)?;
            let poa = equilibrium::poa_over_equilibria(instance.game(), &found, eps)?;
            state.poa = Some(poa.clone());
            Ok(StepReport {
                op: "poa".into(),
                pass: None,
                detail: serde_json::to_value(&poa)?,
            })
        }
        StepSpec::Misalignment {} => {
            let (eps, found) = equilibria_for(instance, state, None)?;
            let mut verdicts = Vec::new();
            let mut all_pass = true;
            for s in &found {
                let v = equilibrium::check_misalignment(instance.game(), s, eps)?;
                all_pass &= v.pass;
                verdicts.push(v);
            }
            Ok(StepReport {
                op: "misalignment".into(),
                pass: Some(all_pass),
                detail: serde_json::json!({
                    "epsilon": eps,
                    "count": verdicts.len(),
                    "verdicts": serde_json::to_value(&verdicts)?,
                }),
            })
        }
        StepSpec::Domination {} => {
            let Some(cert) = state.certificate.clone() else {
                return Err(LabError::Invariant(
                    "domination needs an earlier passing smooth-check".into(),
                ));
            };
            let poa = match &state.poa {
                Some(p) => p.clone(),
                None => {
                    let (eps, found) = equilibria_for(instance, state, None)?;
                    let p = equilibrium::poa_over_equilibria(instance.game(), &found, eps)?;
                    state.poa = Some(p.clone());
                    p
                }
            };
            // the relaxed bound applies only under equilibrium individual
            // rationality; skip with a warning when the audit fails
            if cert.variant == Variant::Relaxed {
                let checker = equilibrium::RegretChecker::new(instance.game())?;
                let (eps, found) = equilibria_for(instance, state, None)?;
                if !found.iter().all(|s| checker.individually_rational(s, eps)) {
                    return Ok(StepReport {
                        op: "domination".into(),
                        pass: None,
                        detail: Value::String(
                            "skipped: individual-rationality audit failed at equilibrium".into(),
                        ),
                    });
                }
            }
            let Some(worst) = poa.worst_welfare else {
                return Ok(StepReport {
                    op: "domination".into(),
                    pass: None,
                    detail: Value::String("skipped: no equilibrium found".into()),
                });
            };
            let verdict = certificate_dominates(
                &cert,
                instance.game().objective(),
                &DominationInputs {
                    expected_optimal: poa.expected_optimal,
                    worst_equilibrium_welfare: worst,
                    epsilon: poa.epsilon,
                    players: instance.game().players(),
                },
            );
            Ok(StepReport {
                op: "domination".into(),
                pass: Some(verdict.pass),
                detail: serde_json::to_value(&verdict)?,
            })
        }
        StepSpec::PaymentFact { c } => {
            let FamilyHandle::Greedy { game, declared_c } = &instance.family else {
                return Err(LabError::WrongVariant(
                    "payment-fact applies to greedy auctions".into(),
                ));
            };
            let c = match c.or(*declared_c) {
                Some(c) => c,
                None => game.approximation_factor()?,
            };
            let verdict = game.check_payment_fact_all(c, game.slack())?;
            Ok(StepReport {
                op: "payment-fact".into(),
                pass: Some(verdict.pass),
                detail: serde_json::json!({
                    "c": c,
                    "verdict": serde_json::to_value(&verdict)?,
                }),
            })
        }
    }
}
