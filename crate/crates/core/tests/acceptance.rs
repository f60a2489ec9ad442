//! Acceptance gate. Runs every criterion at full scale and prints one line per
//! criterion. `ACCEPTANCE_ONLY=1,2,12` restricts the run to a subset.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pencilpow::harness::config::DEFAULT_SEED;
use pencilpow::harness::experiments::{median_with_failures, StepSummary};
use pencilpow::harness::generators::SpectrumRegion;
use pencilpow::harness::invariants::{self, Check, SuiteSize};
use pencilpow::harness::{
    run_condition_evolution, run_expm_experiment, run_square_experiment, summarize, Conditioning,
    ExperimentConfig, ExperimentKind, TrialRecord,
};

const SEED: u64 = DEFAULT_SEED;

struct Outcome {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn from_check(c: Check) -> (bool, String) {
    (c.passed, c.detail)
}

fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3e}")
    } else {
        "inf".into()
    }
}

fn crit8() -> (bool, String) {
    let mut lines = Vec::new();
    let mut ok = true;
    for cond in [Conditioning::Well, Conditioning::Ill] {
        let cfg = ExperimentConfig::new(ExperimentKind::ToyIdentity, cond);
        let summary = match run_square_experiment(&cfg) {
            Ok(r) => summarize(&r),
            Err(e) => return (false, format!("{cond}: {e}")),
        };
        let bad: Vec<u32> =
            summary.iter().filter(|s| s.median_err_irs > s.median_err_es).map(|s| s.p).collect();
        let reached = summary.last().map_or(0, |s| s.p);
        let last = summary.last();
        ok &= bad.is_empty() && reached == cfg.p_max;
        lines.push(format!(
            "{cond}: p=1..={reached}, IRS > ES at {bad:?}, final medians irs {} es {}",
            last.map_or("-".into(), |s| fmt(s.median_err_irs)),
            last.map_or("-".into(), |s| fmt(s.median_err_es)),
        ));
    }
    (ok, lines.join("; "))
}

/// Smallest recorded `p` from which ES stays strictly ahead of IRS.
fn crossover(summary: &[StepSummary]) -> Option<u32> {
    let mut p_star = None;
    for s in summary.iter().rev() {
        if s.median_err_es < s.median_err_irs {
            p_star = Some(s.p);
        } else {
            break;
        }
    }
    p_star
}

fn crit9() -> (bool, String) {
    let mut cfg = ExperimentConfig::new(ExperimentKind::GeneralSquare, Conditioning::Well);
    cfg.spectrum = SpectrumRegion::DEFAULT_ANNULUS;
    let summary = match run_square_experiment(&cfg) {
        Ok(r) => summarize(&r),
        Err(e) => return (false, e.to_string()),
    };
    let trail: Vec<String> = summary
        .iter()
        .map(|s| format!("p{}:{}/{}", s.p, fmt(s.median_err_irs), fmt(s.median_err_es)))
        .collect();
    match crossover(&summary) {
        Some(p) => (true, format!("p* = {p}; irs/es medians {}", trail.join(" "))),
        None => (false, format!("no crossover; irs/es medians {}", trail.join(" "))),
    }
}

fn crit10() -> (bool, String) {
    let mut cfg = ExperimentConfig::new(ExperimentKind::ConditionEvolution, Conditioning::Well);
    cfg.spectrum = SpectrumRegion::Disk;
    cfg.trials = 50;
    cfg.p_max = 3;
    let summary = match run_condition_evolution(&cfg) {
        Ok(r) => summarize(&r),
        Err(e) => return (false, e.to_string()),
    };
    let kappa = |p: u32| summary.iter().find(|s| s.p == p).and_then(|s| s.mean_kappa_ap);
    match (kappa(0), kappa(3)) {
        (Some(k0), Some(k3)) => {
            let trail: Vec<String> =
                summary.iter().map(|s| format!("{}", fmt(s.mean_kappa_ap.unwrap_or(f64::NAN)))).collect();
            (k3 < k0, format!("mean kappa(A_p), p=0..=3: {}", trail.join(" ")))
        }
        _ => (false, "missing kappa at p=0 or p=3".into()),
    }
}

/// Per-trial IRS/ES ratio; a failed IRS counts as +inf, a failed ES as 0.
fn paired_ratio(r: &TrialRecord) -> f64 {
    match (r.err_irs, r.err_es) {
        (Some(i), Some(e)) if e > 0.0 => i / e,
        (Some(i), Some(_)) => if i == 0.0 { 1.0 } else { f64::INFINITY },
        (None, Some(_)) => f64::INFINITY,
        (Some(_), None) => 0.0,
        (None, None) => 1.0,
    }
}

fn crit11() -> (bool, String) {
    let mut medians_s = Vec::new();
    let mut ok = true;
    let mut lines = Vec::new();
    for delta in [1.0, 1e-2, 1e-4] {
        let mut cfg = ExperimentConfig::new(ExperimentKind::ExpmCompare, Conditioning::Well);
        cfg.delta = delta;
        let records = match run_expm_experiment(&cfg) {
            Ok(r) => r,
            Err(e) => return (false, format!("delta {delta:e}: {e}")),
        };
        let s = median_with_failures(records.iter().map(|r| r.s_selected.map(f64::from))).unwrap_or(f64::NAN);
        let irs = median_with_failures(records.iter().map(|r| r.err_irs)).unwrap_or(f64::INFINITY);
        let es = median_with_failures(records.iter().map(|r| r.err_es)).unwrap_or(f64::INFINITY);
        let ratio = median_with_failures(records.iter().map(|r| Some(paired_ratio(r)))).unwrap_or(f64::NAN);
        if delta == 1.0 {
            ok &= (0.5..=2.0).contains(&ratio);
        }
        if delta == 1e-2 {
            ok &= irs <= es;
        }
        medians_s.push(s);
        lines.push(format!("delta {delta:e}: s {s}, irs {}, es {}, ratio {}", fmt(irs), fmt(es), fmt(ratio)));
    }
    ok &= medians_s.windows(2).all(|w| w[0] <= w[1]);
    (ok, lines.join("; "))
}

fn crit13(precision: Check, lemmas_ok: bool) -> (bool, String) {
    (
        precision.passed && lemmas_ok,
        format!("{}; criteria 1-7 {}", precision.detail, if lemmas_ok { "pass" } else { "do not all pass" }),
    )
}

fn main() -> ExitCode {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let selected = |id: u32| only.as_ref().map_or(true, |v| v.contains(&id));
    let full = SuiteSize::FULL;

    type Runner = Box<dyn Fn() -> (bool, String)>;
    let plan: Vec<(u32, &'static str, u64, Runner)> = vec![
        (1, "exact squaring identity", 10, Box::new(move || from_check(invariants::squaring_identity(full.squaring, SEED)))),
        (2, "sigma_min root formula", 5, Box::new(move || from_check(invariants::root_formula(full.roots, SEED)))),
        (3, "kappa_IRS properties", 30, Box::new(move || from_check(invariants::kappa_properties(full.kappa, SEED)))),
        (4, "complement alignment", 20, Box::new(move || from_check(invariants::complement_alignment(full.alignment, SEED)))),
        (5, "QR perturbation certificate", 30, Box::new(move || from_check(invariants::qr_certificate(full.certificate, SEED)))),
        (6, "triangular inequality and Lebesgue bound", 30, Box::new(move || from_check(invariants::triangle_and_lebesgue(full.triangles, SEED)))),
        (7, "sigma_min perturbation", 10, Box::new(move || from_check(invariants::mp_perturbation(full.perturbation, SEED)))),
        (8, "toy identity ordering", 300, Box::new(crit8)),
        (9, "annulus crossover", 300, Box::new(crit9)),
        (10, "disk regularization", 300, Box::new(crit10)),
        (11, "expm scaling and squaring", 600, Box::new(crit11)),
        (12, "flop accounting", 1, Box::new(|| from_check(invariants::flop_accounting(10, SEED)))),
    ];

    let mut outcomes: Vec<Outcome> = Vec::new();
    for (id, name, budget, run) in plan {
        if !selected(id) && !(selected(13) && id <= 7) {
            continue;
        }
        let t = Instant::now();
        let (passed, detail) = run();
        outcomes.push(Outcome { id, name, passed, detail, elapsed: t.elapsed(), budget: secs(budget) });
    }
    if selected(13) {
        let t = Instant::now();
        let probe = invariants::precision_probe(SEED);
        let lemmas_ok = outcomes.iter().filter(|o| o.id <= 7).count() == 7
            && outcomes.iter().filter(|o| o.id <= 7).all(|o| o.passed);
        let (passed, detail) = crit13(probe, lemmas_ok);
        outcomes.push(Outcome {
            id: 13,
            name: "precision ratio probe and lemma suite",
            passed,
            detail,
            elapsed: t.elapsed(),
            budget: secs(60),
        });
    }

    let mut all = true;
    for o in outcomes.iter().filter(|o| selected(o.id)) {
        let in_time = o.elapsed <= o.budget;
        let ok = o.passed && in_time;
        all &= ok;
        println!(
            "{} criterion {:>2} {}: {} [{:.2}s of {}s{}]",
            if ok { "PASS" } else { "FAIL" },
            o.id,
            o.name,
            o.detail,
            o.elapsed.as_secs_f64(),
            o.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
