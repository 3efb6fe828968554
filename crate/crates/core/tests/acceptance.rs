//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Set `DELTA_ATTRIB_PSID` to a panel CSV (default schema) to run
//! the case-study checks on real data; otherwise the two-unit synthetic
//! panel stands in.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{
    ancestors_of_sink, brute_force, golden_mechanisms, golden_panel, random_case, random_dag, rng, scale, simulate,
    CaseKind,
};
use delta_attrib::attribution::{
    coarse_attrib, fine_attrib_exact, fine_attrib_exact_with_limit, fine_attrib_sampled, linear_attrib, natural_order,
    ordered_attrib, SamplingConfig,
};
use delta_attrib::casestudy::{
    attribute_panel, attribute_panel_with_models, coefficient_table, ingest_panel, unit_report, PanelOptions,
    PanelSchema,
};
use delta_attrib::experiments::{
    median, run_reliability, run_scalability, ExperimentMethod, FittedKind, ReliabilityConfig, ScalabilityConfig,
};
use delta_attrib::fcm::{fcm_attrib, recover_noise, FcmNode, InvertibleFcm};
use delta_attrib::models::TruthKind;
use delta_attrib::{AttributionResult, ChangeInstance, LinearMechanism, Player};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    }
}

fn check_complete(r: &AttributionResult, inst: &ChangeInstance, tol: f64) -> Result<(), String> {
    let dy = inst.delta_y().map_err(|e| e.to_string())?;
    let s = scale(inst, &r.credits);
    ensure!(
        (r.total() - dy).abs() <= tol * s,
        "{}: Σ credits {} vs Δy {}",
        r.method,
        r.total(),
        dy
    );
    ensure!(
        (r.delta_y - dy).abs() <= tol * s,
        "{}: reported Δy {} vs {}",
        r.method,
        r.delta_y,
        dy
    );
    Ok(())
}

fn axiom_suite() -> Outcome {
    let start = Instant::now();
    let mut g = rng(1);
    let mut checked = 0;
    for i in 0..1000 {
        let d = 1 + i % 6;
        let kind = if i % 2 == 0 {
            CaseKind::Linear
        } else {
            CaseKind::Polynomial
        };
        let case = random_case(&mut g, d, kind, 0.3);
        let inst = &case.inst;
        let f = |e: delta_attrib::Error| e.to_string();
        let mut results = vec![
            coarse_attrib(inst).map_err(f)?,
            fine_attrib_exact(inst).map_err(f)?,
            fine_attrib_sampled(inst, &SamplingConfig::new(25, i as u64).map_err(f)?).map_err(f)?,
            ordered_attrib(inst, &natural_order(d)).map_err(f)?,
        ];
        if let Some((b1, b2)) = &case.linear {
            results.push(linear_attrib(b1, b2, inst.x_bg(), inst.x_fg()).map_err(f)?);
        }
        for r in &results {
            check_complete(r, inst, 1e-9)?;
            if case.mechanism_unchanged {
                ensure!(
                    r.credit(Player::Mechanism) == 0.0,
                    "{}: unchanged mechanism got credit",
                    r.method
                );
            }
            if r.credits.contains_key(&Player::InputBundle) {
                if case.unchanged_inputs.len() == d {
                    ensure!(
                        r.credit(Player::InputBundle) == 0.0,
                        "coarse: unchanged inputs got credit"
                    );
                }
            } else {
                for &j in &case.unchanged_inputs {
                    ensure!(
                        r.credit(Player::Input(j)) == 0.0,
                        "{}: unchanged x[{j}] got credit",
                        r.method
                    );
                }
            }
            checked += 1;
        }
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("1000 instances, {checked} attributions"))
}

fn linear_equivalence() -> Outcome {
    let start = Instant::now();
    let mut g = rng(2);
    let mut worst = 0f64;
    for i in 0..200 {
        let d = 1 + i % 8;
        let case = random_case(&mut g, d, CaseKind::Linear, 0.2);
        let (b1, b2) = case.linear.as_ref().unwrap();
        let lin = linear_attrib(b1, b2, case.inst.x_bg(), case.inst.x_fg()).map_err(|e| e.to_string())?;
        let fine = fine_attrib_exact(&case.inst).map_err(|e| e.to_string())?;
        let coarse = coarse_attrib(&case.inst).map_err(|e| e.to_string())?;
        for (p, c) in &fine.credits {
            let diff = (lin.credit(*p) - c).abs();
            worst = worst.max(diff);
            ensure!(diff <= 1e-9, "instance {i}, {p}: linear {} vs fine {c}", lin.credit(*p));
        }
        let bundle = (coarse.credit(Player::InputBundle) - fine.input_total()).abs();
        worst = worst.max(bundle);
        ensure!(bundle <= 1e-9, "instance {i}: bundle differs by {bundle}");
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("200 instances, max diff {worst:.1e}"))
}

fn brute_force_oracle() -> Outcome {
    let start = Instant::now();
    let mut g = rng(3);
    let mut worst = 0f64;
    for i in 0..100 {
        let d = 1 + i % 4;
        let case = random_case(&mut g, d, CaseKind::Nonlinear, 0.1);
        let fine = fine_attrib_exact(&case.inst).map_err(|e| e.to_string())?;
        let oracle = brute_force(&case.inst);
        let tol = 1e-12 * scale(&case.inst, &oracle);
        for (p, c) in &oracle {
            let diff = (fine.credit(*p) - c).abs();
            worst = worst.max(diff);
            ensure!(
                diff <= tol,
                "instance {i}, {p}: fine {} vs brute force {c}",
                fine.credit(*p)
            );
        }
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("100 instances, max diff {worst:.1e}"))
}

fn paradox_sign_flip() -> Outcome {
    let inst = ChangeInstance::new(
        vec![1.0],
        vec![-1.0],
        LinearMechanism::new(vec![1.0]).into_ref(),
        LinearMechanism::new(vec![-1.0]).into_ref(),
    )
    .map_err(|e| e.to_string())?;
    let lin = linear_attrib(&[1.0], &[-1.0], &[1.0], &[-1.0]).map_err(|e| e.to_string())?;
    let fine = fine_attrib_exact(&inst).map_err(|e| e.to_string())?;
    let coarse = coarse_attrib(&inst).map_err(|e| e.to_string())?;
    for r in [&lin, &fine] {
        ensure!(
            r.credit(Player::Mechanism) == 0.0 && r.credit(Player::Input(0)) == 0.0,
            "{}: {:?}",
            r.method,
            r.credits
        );
    }
    ensure!(
        coarse.credit(Player::Mechanism) == 0.0 && coarse.credit(Player::InputBundle) == 0.0,
        "coarse: {:?}",
        coarse.credits
    );
    Ok("π(f) = π(x) = 0".into())
}

fn paradox_collapse() -> Outcome {
    let mech = |b1: f64, b2: f64, x1: f64, x2: f64| -> Result<f64, String> {
        let inst = ChangeInstance::new(
            vec![x1],
            vec![x2],
            LinearMechanism::new(vec![b1]).into_ref(),
            LinearMechanism::new(vec![b2]).into_ref(),
        )
        .map_err(|e| e.to_string())?;
        Ok(fine_attrib_exact(&inst)
            .map_err(|e| e.to_string())?
            .credit(Player::Mechanism))
    };
    // f_k(x) = β_k·x with β = (1, 3, 2), x = (1, 2, 4)
    let split = mech(1.0, 3.0, 1.0, 2.0)? + mech(3.0, 2.0, 2.0, 4.0)?;
    let direct = mech(1.0, 2.0, 1.0, 4.0)?;
    let gap = (split - direct).abs();
    ensure!(gap > 0.1, "gap {gap}");
    Ok(format!("π12+π23 = {split}, π13 = {direct}, gap {gap}"))
}

fn sampling_convergence() -> Outcome {
    let start = Instant::now();
    let recs = run_scalability(&ScalabilityConfig {
        dims: vec![10],
        budgets: vec![10, 100, 1000],
        repeats: 100,
        n: 100,
        seed: 0,
    })
    .map_err(|e| e.to_string())?;
    let mae: Vec<f64> = recs.iter().map(|r| r.mae).collect();
    ensure!(mae.len() == 3, "expected 3 cells, got {}", mae.len());
    ensure!(mae[0] > mae[1] && mae[1] > mae[2], "not decreasing: {mae:?}");
    let ratio = mae[2] / mae[1];
    ensure!((0.15..=0.6).contains(&ratio), "MAE(1000)/MAE(100) = {ratio}");
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "MAE {:.4} > {:.4} > {:.4}, ratio {ratio:.3}",
        mae[0], mae[1], mae[2]
    ))
}

fn exact_scale() -> Outcome {
    let start = Instant::now();
    let mut g = rng(4);
    let case = random_case(&mut g, 20, CaseKind::Nonlinear, 0.0);
    let r = fine_attrib_exact_with_limit(&case.inst, 20).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check_complete(&r, &case.inst, 1e-9)?;
    let evals = r.oracle_evaluations.unwrap_or(u64::MAX);
    ensure!(evals <= 1 << 21, "{evals} oracle evaluations");
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!("d=20 in {elapsed:.2?}, {evals} evaluations"))
}

fn reliability_ordering() -> Outcome {
    let start = Instant::now();
    let recs = run_reliability(&ReliabilityConfig {
        num_models: 30,
        n: 500,
        truth_kinds: vec![TruthKind::Linear, TruthKind::Polynomial],
        fitted_kinds: vec![FittedKind::OlsLinear],
        methods: vec![ExperimentMethod::Coarse, ExperimentMethod::Fine],
        seed: 0,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let med = |kind, method| {
        let v: Vec<f64> = recs
            .iter()
            .filter(|r| r.kind == kind && r.method == method && r.fitted == FittedKind::OlsLinear)
            .map(|r| r.mae)
            .collect();
        median(&v)
    };
    let mut notes = Vec::new();
    for method in [ExperimentMethod::Coarse, ExperimentMethod::Fine] {
        let lin = med(TruthKind::Linear, method);
        let poly = med(TruthKind::Polynomial, method);
        ensure!(lin < 0.05, "{method}: median linear MAE {lin}");
        ensure!(
            poly > 3.0 * lin,
            "{method}: median polynomial MAE {poly} vs linear {lin}"
        );
        notes.push(format!("{method} {lin:.2e}/{poly:.3}"));
    }
    within(start.elapsed(), Duration::from_secs(180))?;
    Ok(format!("median linear/polynomial: {}", notes.join(", ")))
}

fn fcm_suite() -> Outcome {
    let chain = InvertibleFcm::new(vec![FcmNode::root("x"), FcmNode::additive("y", vec![0], &[1.0])], 1)
        .map_err(|e| e.to_string())?;
    let r = fcm_attrib(&chain, &[0.0, 0.0], &[1.0, 4.0], None).map_err(|e| e.to_string())?;
    ensure!(
        r.credit(Player::NodeNoise(0)) == 1.0 && r.credit(Player::NodeNoise(1)) == 3.0,
        "chain: {:?}",
        r.credits
    );
    let mut g = rng(5);
    for i in 0..200 {
        let n = 1 + i % 6;
        let (fcm, terms) = random_dag(&mut g, n);
        let nb: Vec<f64> = (0..n).map(|_| g.random_range(-2.0..2.0)).collect();
        let nf: Vec<f64> = nb
            .iter()
            .map(|&v| {
                if g.random_bool(0.3) {
                    v
                } else {
                    g.random_range(-2.0..2.0)
                }
            })
            .collect();
        let (xb, xf) = (simulate(&terms, &nb), simulate(&terms, &nf));
        let r = fcm_attrib(&fcm, &xb, &xf, None).map_err(|e| e.to_string())?;
        let dy = xf[n - 1] - xb[n - 1];
        let s = 1f64
            .max(xb[n - 1].abs())
            .max(xf[n - 1].abs())
            .max(r.credits.values().map(|c| c.abs()).sum());
        ensure!(
            (r.total() - dy).abs() <= 1e-9 * s,
            "DAG {i}: Σ credits {} vs Δy {dy}",
            r.total()
        );
        let rb = recover_noise(&fcm, &xb).map_err(|e| e.to_string())?;
        let rf = recover_noise(&fcm, &xf).map_err(|e| e.to_string())?;
        let anc = ancestors_of_sink(&terms);
        for j in 0..n {
            if rb[j] == rf[j] || !anc[j] {
                ensure!(
                    r.credit(Player::NodeNoise(j)) == 0.0,
                    "DAG {i}: dummy noise[{j}] got credit"
                );
            }
        }
    }
    Ok("chain (1, 3); 200 random DAGs".into())
}

fn case_study_synthetic() -> Outcome {
    let (bg, fg) = golden_mechanisms();
    let p = attribute_panel_with_models(&golden_panel(), 1, 2, &bg, &fg, PanelOptions::default())
        .map_err(|e| e.to_string())?;
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let expect = [
        ("A", Player::Input(0), 0.0),
        ("A", Player::Input(1), 0.45),
        ("A", Player::Mechanism, -0.21),
        ("B", Player::Input(0), 0.11),
        ("B", Player::Input(1), 0.0),
        ("B", Player::Mechanism, -0.09),
    ];
    for (id, player, want) in expect {
        let got = p.unit(id).ok_or(format!("unit {id} missing"))?.result.credit(player);
        ensure!(close(got, want), "unit {id} {player}: {got} vs {want}");
    }
    let r = &p.report;
    ensure!(
        close(r.mechanism().credit, -0.30),
        "mechanism sum {}",
        r.mechanism().credit
    );
    ensure!(close(r.input_sum, 0.56), "input sum {}", r.input_sum);
    ensure!(
        close(r.delta_wage_pct, 0.7 / 11.0 * 100.0),
        "Δwage% {}",
        r.delta_wage_pct
    );
    Ok("synthetic two-unit panel (no extract supplied)".into())
}

fn case_study_extract(path: &str) -> Outcome {
    let data = ingest_panel(path, &PanelSchema::default()).map_err(|e| e.to_string())?;
    let p = attribute_panel(&data, 1976, 1982, PanelOptions::default()).map_err(|e| e.to_string())?;
    let r = &p.report;
    let mut fails = Vec::new();
    if !(8.0..=10.0).contains(&r.delta_wage_pct) {
        fails.push(format!("Δwage% {:.2}", r.delta_wage_pct));
    }
    let mech = r.mechanism().share_pct.unwrap_or(f64::NAN);
    let inputs = r.input_share_pct.unwrap_or(f64::NAN);
    if (mech - 76.0).abs() > 3.0 {
        fails.push(format!("mechanism share {mech:.2}%"));
    }
    if (inputs - 24.0).abs() > 3.0 {
        fails.push(format!("input share {inputs:.2}%"));
    }
    let edu = r.player("edu").and_then(|s| s.share_pct).unwrap_or(f64::NAN);
    if edu != 0.0 {
        fails.push(format!("edu share {edu}%"));
    }
    if (r.units_increased, r.total_units) != (585, 595) {
        fails.push(format!("{}/{} units increased", r.units_increased, r.total_units));
    }
    let coef = coefficient_table(&p);
    match coef.get("occ") {
        Some(&(b76, b82)) => {
            let drop = (b76 - b82) / b76.abs() * 100.0;
            if !(b82 < b76 && (30.0..=50.0).contains(&drop)) {
                fails.push(format!("occ {b76:.4} -> {b82:.4} ({drop:.1}% drop)"));
            }
        }
        None => fails.push("no occ coefficient".into()),
    }
    match unit_report(&p, "167") {
        Ok(u) => {
            let want = [
                (17.0, 17.0),
                (3.0, 9.0),
                (40.0, 50.0),
                (1.0, 1.0),
                (0.0, 0.0),
                (0.0, 0.0),
                (1.0, 1.0),
                (0.0, 0.0),
            ];
            let feats_ok = u.features.len() == want.len()
                && u.features
                    .iter()
                    .zip(want)
                    .all(|(f, (a, b))| f.before == a && f.after == b);
            let wage_ok = (u.wage_bg - 6.2).abs() < 0.05 && (u.wage_fg - 8.3).abs() < 0.05;
            if !(feats_ok && wage_ok) {
                fails.push("unit 167 does not match its published values".into());
            }
        }
        Err(e) => fails.push(e.to_string()),
    }
    if fails.is_empty() {
        Ok(format!(
            "Δwage% {:.2}, mechanism {mech:.1}%, inputs {inputs:.1}%",
            r.delta_wage_pct
        ))
    } else {
        Err(fails.join("; "))
    }
}

fn case_study() -> Outcome {
    match std::env::var("DELTA_ATTRIB_PSID") {
        Ok(path) if !path.is_empty() => case_study_extract(&path),
        _ => case_study_synthetic(),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("axiom suite", axiom_suite),
        ("linear closed form equivalence", linear_equivalence),
        ("brute-force oracle", brute_force_oracle),
        ("sign-flip paradox", paradox_sign_flip),
        ("collapse non-additivity", paradox_collapse),
        ("sampling convergence", sampling_convergence),
        ("exact attribution at d=20", exact_scale),
        ("reliability ordering", reliability_ordering),
        ("fcm suite", fcm_suite),
        ("case study", case_study),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {name} ({t:.2?}): {detail}"),
            Err(why) => {
                failures += 1;
                println!("FAIL {name} ({t:.2?}): {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
