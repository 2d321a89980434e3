//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Every tolerance is pinned here. The suite drives the bundled corpus
//! end-to-end: certificates by enumeration, equilibria by enumeration on the
//! ε ladder, and the central invariant that every passing certificate's PoA
//! bound dominates the measured worst-equilibrium PoA once discretization and
//! ε budgets are added.

use rand::Rng;
use smoothlab::congestion::{best_delay_parameters, DelayClass};
use smoothlab::corpus;
use smoothlab::effort;
use smoothlab::equilibrium::{
    self, equilibria_with_ladder, poa_over_equilibria, pure_nash_poa, PoaValue, RegretChecker,
};
use smoothlab::game::Objective;
use smoothlab::instance::{build_instance, FamilyHandle, InstanceFile, LoadedInstance};
use smoothlab::item_auction::FpDeviation;
use smoothlab::pipeline::{self, PipelineOptions, RunSpec, StepSpec};
use smoothlab::rng::at_counter;
use smoothlab::smoothness::{certificate_dominates, Certificate, DominationInputs, Variant};
use smoothlab::valuations::{beta_fsubadditive, is_subadditive, TableValuation, XOSValuation};
use smoothlab::{par, LabError};

const E: f64 = std::f64::consts::E;

fn verdict_line(criterion: u32, name: &str, pass: bool) {
    println!(
        "ACCEPTANCE {criterion} {name}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance criterion {criterion} ({name}) failed");
}

fn load(f: &InstanceFile) -> LoadedInstance {
    build_instance(f).expect("corpus instance builds")
}

/// Worst-equilibrium domination of a passing certificate, via the ε ladder.
/// Returns None when no equilibrium exists on the ladder.
fn dominates(loaded: &LoadedInstance, cert: &Certificate) -> Option<bool> {
    let (eps, found) = equilibria_with_ladder(loaded.game(), loaded.epsilon_base()).unwrap();
    if found.is_empty() {
        return None;
    }
    if cert.variant == Variant::Relaxed {
        let checker = RegretChecker::new(loaded.game()).unwrap();
        assert!(
            found.iter().all(|s| checker.individually_rational(s, eps)),
            "{}: individual rationality audit failed",
            loaded.name
        );
    }
    let poa = poa_over_equilibria(loaded.game(), &found, eps).unwrap();
    let verdict = certificate_dominates(
        cert,
        loaded.game().objective(),
        &DominationInputs {
            expected_optimal: poa.expected_optimal,
            worst_equilibrium_welfare: poa.worst_welfare.unwrap(),
            epsilon: eps,
            players: loaded.game().players(),
        },
    );
    Some(verdict.pass)
}

#[test]
fn criterion_1_first_price_xos_certificates_and_poa() {
    let corpus = corpus::fp_item_auction_corpus();
    assert!(corpus.len() >= 20);
    let mut with_equilibria = 0usize;
    for f in &corpus {
        let loaded = load(f);
        let FamilyHandle::ItemAuction(g) = &loaded.family else {
            panic!("wrong family");
        };
        let half = g.check_fp_semi_smoothness(0.5, FpDeviation::HalfBid).unwrap();
        assert!(
            half.verdict.pass,
            "{}: half-bid margin {}",
            f.name, half.verdict.worst_margin
        );
        let rand_cert = g
            .check_fp_semi_smoothness(1.0 - 1.0 / E, FpDeviation::Randomized)
            .unwrap();
        assert!(
            rand_cert.verdict.pass,
            "{}: randomized margin {}",
            f.name, rand_cert.verdict.worst_margin
        );
        // measured PoA <= e/(e-1) + combined slack, against the worst ε-BNE
        if let Some(pass) = dominates(&loaded, &rand_cert) {
            assert!(pass, "{}: domination failed", f.name);
            with_equilibria += 1;
        }
    }
    assert!(
        with_equilibria >= 15,
        "only {with_equilibria} instances had ladder equilibria"
    );
    verdict_line(1, "first-price XOS semi-smoothness and PoA domination", true);
}

#[test]
fn criterion_2_beta_scaled_certificates() {
    let corpus = corpus::beta_table_corpus();
    assert!(corpus.len() >= 5);
    for f in &corpus {
        let loaded = load(f);
        let FamilyHandle::ItemAuction(g) = &loaded.family else {
            panic!("wrong family");
        };
        let beta = g.max_beta();
        assert!(
            beta > 1.0 && beta <= 2.0,
            "{}: measured beta {beta} outside (1, 2]",
            f.name
        );
        let lambda = (1.0 - 1.0 / E) / beta;
        let cert = g
            .check_fp_semi_smoothness(lambda, FpDeviation::Randomized)
            .unwrap();
        assert!(
            cert.verdict.pass,
            "{}: beta-scaled margin {}",
            f.name, cert.verdict.worst_margin
        );
        // measured PoA <= e/(e-1)·β + slack
        let pass = dominates(&loaded, &cert).expect("beta instances have equilibria");
        assert!(pass, "{}: beta domination failed", f.name);
    }
    verdict_line(2, "beta-scaled certificates dominate measured PoA", true);
}

#[test]
fn criterion_3_complete_information_first_price_optimality() {
    let mut checked = 0usize;
    for f in corpus::fp_item_auction_corpus() {
        let loaded = load(&f);
        let game = loaded.game();
        let complete_info = (0..game.players()).all(|i| game.type_dist(i).len() == 1);
        if !complete_info {
            continue;
        }
        let FamilyHandle::ItemAuction(g) = &loaded.family else {
            continue;
        };
        let n = g.auction().bidder_count() as f64;
        let step = g.auction().grid.step();
        let t = vec![0usize; game.players()];
        let report = pure_nash_poa(game, &t, 0.0).unwrap();
        if report.equilibria == 0 {
            continue;
        }
        let worst = report.worst_welfare.unwrap();
        assert!(
            worst >= report.optimal - n * step - 1e-9,
            "{}: worst equilibrium welfare {} vs optimal {}",
            f.name,
            worst,
            report.optimal
        );
        checked += 1;
    }
    assert!(checked >= 5, "only {checked} complete-information instances");
    verdict_line(3, "complete-info first-price equilibria near-optimal", true);
}

#[test]
fn criterion_4_greedy_mechanisms() {
    let corpus = corpus::greedy_corpus();
    assert!(corpus.len() >= 10);
    let mut with_equilibria = 0usize;
    for f in &corpus {
        let loaded = load(f);
        let FamilyHandle::Greedy { game, .. } = &loaded.family else {
            panic!("wrong family");
        };
        let c = game.approximation_factor().unwrap();
        assert!(c.is_finite() && c >= 1.0, "{}: c = {c}", f.name);
        let fact = game.check_payment_fact_all(c, game.slack()).unwrap();
        assert!(
            fact.pass,
            "{}: payment fact margin {}",
            f.name, fact.margin
        );
        let cert = game
            .check_greedy_smoothness(c, smoothlab::greedy::GreedyDeviation::SingleMindedHalf)
            .unwrap();
        assert!(
            cert.verdict.pass,
            "{}: (1/2, c-1) margin {}",
            f.name, cert.verdict.worst_margin
        );
        assert_eq!(cert.lambda, 0.5);
        assert_eq!(cert.mu, c - 1.0);
        // measured PoA <= 2c + slack
        if let Some(pass) = dominates(&loaded, &cert) {
            assert!(pass, "{}: greedy domination failed", f.name);
            with_equilibria += 1;
        }
    }
    assert!(with_equilibria >= 8);
    verdict_line(4, "greedy payment fact, (1/2, c-1) certificate, PoA <= 2c", true);
}

#[test]
fn criterion_5_congestion_linear_delays() {
    let p = best_delay_parameters(DelayClass { max_degree: 1 })
        .unwrap()
        .unwrap();
    let golden = (3.0 + 5.0f64.sqrt()) / 2.0;
    assert!(
        (p.bound - golden).abs() <= 1e-3,
        "delay-class bound {} vs {golden}",
        p.bound
    );
    let corpus = corpus::congestion_corpus();
    assert!(corpus.len() >= 10);
    for f in &corpus {
        let loaded = load(f);
        let FamilyHandle::Congestion(g) = &loaded.family else {
            panic!("wrong family");
        };
        let cert = g
            .check_universal_smoothness(p.lambda, p.mu, &Default::default())
            .unwrap();
        assert!(
            cert.verdict.pass,
            "{}: universal margin {}",
            f.name, cert.verdict.worst_margin
        );
        // every pure ε-BNE: E[cost] <= 2.619·E[optimal cost] + nε/(1−μ)
        let (eps, found) = equilibria_with_ladder(loaded.game(), loaded.epsilon_base()).unwrap();
        assert!(!found.is_empty(), "{}: no exact equilibrium", f.name);
        let poa = poa_over_equilibria(loaded.game(), &found, eps).unwrap();
        let worst = poa.worst_welfare.unwrap();
        let budget = loaded.game().players() as f64 * eps / (1.0 - p.mu);
        assert!(
            worst <= 2.619 * poa.expected_optimal + budget + 1e-9,
            "{}: cost {} vs optimal {}",
            f.name,
            worst,
            poa.expected_optimal
        );
        let pass = dominates(&loaded, &cert).unwrap();
        assert!(pass, "{}: congestion domination failed", f.name);
    }
    verdict_line(5, "linear congestion bound (3+sqrt5)/2 and instance checks", true);
}

#[test]
fn criterion_6_effort_games() {
    let corpus = corpus::effort_corpus();
    assert!(corpus.len() >= 10);
    let mut sampled_seen = false;
    for f in &corpus {
        let loaded = load(f);
        let FamilyHandle::Effort(g) = &loaded.family else {
            panic!("wrong family");
        };
        let cert = g.check_universal_11_smoothness(&Default::default()).unwrap();
        sampled_seen |= cert.verdict.sampled;
        assert!(
            cert.verdict.pass,
            "{}: (1,1) margin {}",
            f.name, cert.verdict.worst_margin
        );
        // share conservation holds exactly (rational audit)
        let radix = loaded.game().universe_space().unwrap();
        if radix.total() <= 50_000 {
            assert!(
                g.audit_share_conservation(50_000).unwrap(),
                "{}: share conservation failed",
                f.name
            );
        } else {
            // seeded sample of the profile space
            let mut buf = Vec::new();
            for k in 0..2000u64 {
                let rank = smoothlab::rng::index_at(7, k, radix.total() as u128) as u64;
                radix.decode_into(rank, &mut buf);
                let decoded: Vec<(usize, &[f64])> = buf
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| g.action_pair(i, a))
                    .collect();
                assert!(
                    effort::exact::share_conservation(g.instance(), &decoded),
                    "{}: share conservation failed at sampled profile",
                    f.name
                );
            }
        }
        // measured PoA <= 2 + slack
        if let Some(pass) = dominates(&loaded, &cert) {
            assert!(pass, "{}: effort domination failed", f.name);
        }
    }
    assert!(sampled_seen, "corpus never exercised the sampled check");
    verdict_line(6, "effort (1,1)-smoothness, share conservation, PoA <= 2", true);
}

#[test]
fn criterion_7_cross_cutting_domination_and_misalignment() {
    for f in corpus::full_corpus() {
        let loaded = load(&f);
        // the family certificate, where one exists (second price has none)
        let cert = match &loaded.family {
            FamilyHandle::ItemAuction(g)
                if g.auction().pricing == smoothlab::item_auction::Pricing::FirstPrice =>
            {
                Some(
                    pipeline::default_certificate(
                        &loaded,
                        None,
                        None,
                        None,
                        Some("randomized"),
                        &smoothlab::smoothness::CheckOptions::with_slack(
                            loaded.certificate_slack(),
                        ),
                    )
                    .unwrap(),
                )
            }
            FamilyHandle::ItemAuction(_) => None,
            _ => Some(
                pipeline::default_certificate(
                    &loaded,
                    None,
                    None,
                    None,
                    None,
                    &smoothlab::smoothness::CheckOptions::with_slack(loaded.certificate_slack()),
                )
                .unwrap(),
            ),
        };
        if let Some(cert) = &cert {
            assert!(cert.verdict.pass, "{}: family certificate failed", f.name);
            if let Some(pass) = dominates(&loaded, cert) {
                assert!(pass, "{}: domination violated", f.name);
            }
        }
        // misalignment at every enumerated ε-BNE
        let (eps, found) = equilibria_with_ladder(loaded.game(), loaded.epsilon_base()).unwrap();
        for s in &found {
            let v = equilibrium::check_misalignment(loaded.game(), s, eps).unwrap();
            assert!(v.pass, "{}: misalignment failed", f.name);
        }
    }
    verdict_line(7, "zero domination violations; misalignment at every BNE", true);
}

#[test]
fn criterion_8_oracle_equivalence() {
    // randomized-deviation closed form vs Monte Carlo, 50 seeded pairs
    for k in 0..50u64 {
        let mut rng = at_counter(99, k);
        let a: f64 = rng.random_range(0.25..4.0);
        let p: f64 = rng.random_range(0.0..a);
        let closed = (a * (1.0 - 1.0 / E) - p).max(0.0);
        let n = 1_000_000u32;
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
        // 3σ, with an absolute floor for the zero-variance corner
        assert!(
            (mean - closed).abs() <= 3.0 * se + 1e-9,
            "pair {k}: closed {closed} vs MC {mean} ± {se}"
        );
    }

    // beta == 1 on 20 XOS-derived tables
    for k in 0..20u64 {
        let mut rng = at_counter(101, k);
        let m = rng.random_range(2..=4usize);
        let clauses = rng.random_range(1..=4usize);
        let v = XOSValuation::new(
            m,
            (0..clauses)
                .map(|_| {
                    (0..m)
                        .map(|_| rng.random_range(0..=8u32) as f64 * 0.25)
                        .collect()
                })
                .collect(),
        )
        .unwrap();
        let beta = beta_fsubadditive(&v.to_table());
        assert!((beta - 1.0).abs() <= 1e-9, "table {k}: beta {beta}");
    }

    // random monotone subadditive tables on m = 4 stay below ln 4
    let ln4 = 4.0f64.ln();
    for k in 0..20u64 {
        let table = random_subadditive_table(777, k);
        assert!(is_subadditive(&table));
        let beta = beta_fsubadditive(&table);
        assert!(beta <= ln4 + 1e-9, "table {k}: beta {beta} > ln 4");
    }
    verdict_line(8, "closed form vs Monte Carlo; beta oracles", true);
}

/// Random monotone table pushed to its subadditive-monotone closure.
fn random_subadditive_table(seed: u64, k: u64) -> TableValuation {
    let mut rng = at_counter(seed, k);
    let m = 4usize;
    let size = 1usize << m;
    let mut v = vec![0.0f64; size];
    for s in 1..size {
        let mut lo = 0.0f64;
        for j in 0..m {
            if s & (1 << j) != 0 {
                lo = lo.max(v[s & !(1 << j)]);
            }
        }
        let bump = rng.random_range(0..=8u32) as f64 * 0.25;
        v[s] = lo + bump.min(2.0);
    }
    loop {
        let mut changed = false;
        for s in 1u32..size as u32 {
            let mut t = (s - 1) & s;
            while t != 0 {
                let other = s & !t;
                if other != 0 {
                    let cap = v[t as usize] + v[other as usize];
                    if v[s as usize] > cap {
                        v[s as usize] = cap;
                        changed = true;
                    }
                }
                t = (t - 1) & s;
            }
        }
        for s in 1u32..size as u32 {
            for j in 0..m {
                if s & (1 << j) != 0 && v[s as usize] < v[(s & !(1 << j)) as usize] {
                    v[s as usize] = v[(s & !(1 << j)) as usize];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    TableValuation::new(m, v).expect("closure yields a valid table")
}

#[test]
fn criterion_9_reports_are_byte_identical_across_thread_counts() {
    let corpus = corpus::full_corpus();
    let spec_for = |loaded: &LoadedInstance| -> RunSpec {
        let mut steps = Vec::new();
        let has_cert = match &loaded.family {
            FamilyHandle::ItemAuction(g) => {
                g.auction().pricing == smoothlab::item_auction::Pricing::FirstPrice
            }
            _ => true,
        };
        if has_cert {
            steps.push(StepSpec::SmoothCheck {
                variant: None,
                lambda: None,
                mu: None,
                deviation: match &loaded.family {
                    FamilyHandle::ItemAuction(_) => Some("randomized".into()),
                    _ => None,
                },
                emit_margins: false,
            });
        }
        steps.push(StepSpec::BneEnumerate { epsilon: None });
        steps.push(StepSpec::Poa { epsilon: None });
        steps.push(StepSpec::Misalignment {});
        if has_cert {
            steps.push(StepSpec::Domination {});
        }
        RunSpec {
            schema_version: 1,
            steps,
        }
    };
    for f in &corpus {
        let loaded = load(f);
        let spec = spec_for(&loaded);
        let opts = PipelineOptions {
            seed: 17,
            out_dir: None,
        };
        let run = |threads: usize| -> String {
            par::with_threads(Some(threads), || {
                pipeline::run_pipeline(&loaded, &spec, &opts)
                    .map(|r| r.to_pretty_string())
                    .unwrap_or_else(|e| format!("error: {e}"))
            })
        };
        let single = run(1);
        let eight = run(8);
        assert_eq!(single, eight, "{}: report differs across thread counts", f.name);
        assert!(!single.starts_with("error:"), "{}: {single}", f.name);
    }
    verdict_line(9, "byte-identical reports at 1 and 8 threads", true);
}

#[test]
fn guard_refusals_are_structured() {
    // an oversized enumeration must refuse with the size report, not hang
    let mut f = corpus::fp_item_auction_corpus().remove(5);
    let InstanceFile { ref mut name, .. } = f;
    *name = "oversized".into();
    if let smoothlab::instance::FamilySpec::ItemAuction(spec) = &mut f.spec {
        // three bidders, two types, 25 actions each: strategy space overflows
        spec.bidders = vec![spec.bidders[0].clone(); 3];
        for b in &mut spec.bidders {
            if b.types.len() == 1 {
                let mut t = b.types[0].clone();
                t.prob = 0.5;
                b.types[0].prob = 0.5;
                // nudge the second type's valuation so labels stay distinct
                b.types.push(t);
            }
        }
    }
    let loaded = load(&f);
    match equilibrium::enumerate_pure_bne(loaded.game(), 0.0) {
        Err(LabError::GuardExceeded { size, guard }) => {
            assert!(size > guard);
        }
        other => panic!("expected guard refusal, got {other:?}"),
    }
}
