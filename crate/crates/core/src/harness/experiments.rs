//! Experiment runners and per-step summaries.
//!
//! Trials run serially in trial order. Trial `t` draws everything from
//! `seeded_rng(seed ^ t)`, so any subset of trials can be rerun on its own.

use std::collections::BTreeMap;

use super::config::{Conditioning, ExperimentConfig, ExperimentKind};
use super::generators::{ginibre_from_rng, haar_from_rng, make_ill_conditioned, sample_spectrum, seeded_rng, trial_seed, Spectrum};
use super::problems::{build_expm_problem, build_test_pencil, SquaringOracle};
use crate::error::{Error, Result};
use crate::expm::{expm_detailed, select_scaling, ExpmConfig, SquaringBackend};
use crate::kernels::{self, ComplexMatrix, Precision, Real};
use crate::squaring::{IrsIter, TraceMode};

/// A trial stops once either relative error passes this value.
pub const EXPLOSION_CUTOFF: f64 = 1e3;

pub const EXPM_PADE_DEGREE: u32 = 13;

/// One CSV row. `None` marks a failed quantity (singular `A_p`, singular
/// Padé denominator, non-finite iterate) and serializes as an empty field.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub experiment: ExperimentKind,
    pub trial: usize,
    /// Squaring step; for `expm_compare` the selected `s`.
    pub p: u32,
    pub err_irs: Option<f64>,
    pub err_es: Option<f64>,
    /// `kappa_2(A)`, or `kappa_2(V)` for `expm_compare`.
    pub kappa_a_input: Option<f64>,
    /// `kappa_2(A_p)` of the IRS iterate (`A_s` for `expm_compare`).
    pub kappa_ap: Option<f64>,
    pub sigma_n_ap: Option<f64>,
    pub s_selected: Option<u32>,
}

fn svd_summary<T: Real>(a: &ComplexMatrix<T>) -> (Option<f64>, Option<f64>) {
    match kernels::singular_values(a) {
        Ok(s) if !s.is_empty() => {
            let hi = s[0].as_f64();
            let lo = s[s.len() - 1].as_f64();
            (Some(hi / lo).filter(|k| k.is_finite()), Some(lo))
        }
        _ => (None, None),
    }
}

fn checked_error<T: Real>(oracle: &SquaringOracle, x: &ComplexMatrix<T>, p: u32) -> Option<f64> {
    if !x.is_finite() {
        return None;
    }
    oracle.relative_error(x, p).ok().filter(|e| e.is_finite())
}

fn explodes(err: Option<f64>) -> bool {
    err.map_or(true, |e| e > EXPLOSION_CUTOFF)
}

#[derive(Clone, Copy, Debug)]
struct SquareOptions {
    include_p0: bool,
    stop_on_explosion: bool,
}

/// `A` (well or ill conditioned), Haar `V` and `D` for trial `t`.
fn draw_square_problem(cfg: &ExperimentConfig, t: usize) -> Result<(ComplexMatrix<f64>, ComplexMatrix<f64>, Spectrum)> {
    let n = cfg.n;
    let mut rng = seeded_rng(trial_seed(cfg.seed, t as u64));
    let g: ComplexMatrix<f64> = ginibre_from_rng(n, n, &mut rng);
    let a = match cfg.conditioning {
        Conditioning::Well => g,
        Conditioning::Ill => make_ill_conditioned(&g, cfg.delta)?,
    };
    let v: ComplexMatrix<f64> = haar_from_rng(n, &mut rng);
    let d = match cfg.experiment {
        ExperimentKind::ToyIdentity => Spectrum::ones(n),
        _ => sample_spectrum(cfg.spectrum, n, &mut rng),
    };
    Ok((a, v, d))
}

fn square_trial<T: Real>(cfg: &ExperimentConfig, t: usize, opts: SquareOptions) -> Result<Vec<TrialRecord>> {
    let (a, v, d) = draw_square_problem(cfg, t)?;
    let (pencil, oracle) = build_test_pencil::<T>(&a, &v, &d)?;
    let kappa_a = svd_summary(pencil.a()).0;
    let record = |p: u32, err_irs, err_es, (kappa_ap, sigma_n_ap): (Option<f64>, Option<f64>)| TrialRecord {
        experiment: cfg.experiment,
        trial: t,
        p,
        err_irs,
        err_es,
        kappa_a_input: kappa_a,
        kappa_ap,
        sigma_n_ap,
        s_selected: None,
    };

    let mut es = kernels::invert(pencil.a()).and_then(|inv| kernels::matmul(&inv, pencil.b())).ok();
    let mut out = Vec::new();
    if opts.include_p0 {
        let e0 = es.as_ref().and_then(|d0| checked_error(&oracle, d0, 0));
        out.push(record(0, e0, e0, svd_summary(pencil.a())));
    }
    let mut it = Some(IrsIter::from_pencil(pencil, TraceMode::Fast));
    for p in 1..=cfg.p_max {
        es = es.and_then(|dm| kernels::matmul(&dm, &dm).ok()).filter(|dm| dm.is_finite());
        let err_es = es.as_ref().and_then(|dm| checked_error(&oracle, dm, p));

        let mut err_irs = None;
        let mut diag = (None, None);
        if let Some(iter) = it.as_mut() {
            if iter.step().is_ok() && iter.current().0.is_finite() {
                err_irs = iter.to_explicit().ok().and_then(|x| checked_error(&oracle, &x, p));
                diag = svd_summary(iter.current().0);
            } else {
                it = None;
            }
        }
        out.push(record(p, err_irs, err_es, diag));
        if opts.stop_on_explosion && (explodes(err_irs) || explodes(err_es)) {
            break;
        }
    }
    Ok(out)
}

fn dispatch_square(cfg: &ExperimentConfig, opts: SquareOptions) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for t in 0..cfg.trials {
        let rows = match cfg.precision {
            Precision::Binary32 => square_trial::<f32>(cfg, t, opts)?,
            Precision::Binary64 => square_trial::<f64>(cfg, t, opts)?,
        };
        out.extend(rows);
    }
    Ok(out)
}

/// Relative errors of IRS (run once per trial, sampled after every step) and
/// of explicit squaring for `p = 1..=p_max`, against `V D^{2^p} V^H`.
///
/// `toy_identity` uses `B = A`; otherwise `B = A V D V^H` with `D` drawn from
/// `cfg.spectrum`. A trial stops after the first step at which either error
/// exceeds [`EXPLOSION_CUTOFF`] or fails.
pub fn run_square_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    match cfg.experiment {
        ExperimentKind::ToyIdentity | ExperimentKind::GeneralSquare => {}
        other => return Err(Error::Config(format!("{other} is not a squaring experiment"))),
    }
    dispatch_square(cfg, SquareOptions { include_p0: false, stop_on_explosion: true })
}

/// `kappa_2(A_p)` along the IRS iteration for `p = 0..=p_max` (the `p = 0`
/// row describes `A` itself and `A^{-1} B`). Trials are not cut off, since
/// the conditioning record is the point.
pub fn run_condition_evolution(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let mut cfg = cfg.clone();
    cfg.experiment = ExperimentKind::ConditionEvolution;
    dispatch_square(&cfg, SquareOptions { include_p0: true, stop_on_explosion: false })
}

fn expm_trial<T: Real>(cfg: &ExperimentConfig, t: usize) -> Result<TrialRecord> {
    let n = cfg.n;
    let mut rng = seeded_rng(trial_seed(cfg.seed, t as u64));
    let g: ComplexMatrix<f64> = ginibre_from_rng(n, n, &mut rng);
    let v = make_ill_conditioned(&g, cfg.delta)?;
    let d = sample_spectrum(cfg.spectrum, n, &mut rng).values();
    let problem = build_expm_problem(&v, &d)?;
    let m: ComplexMatrix<T> = problem.m.cast();
    let s = select_scaling(&m, EXPM_PADE_DEGREE)?;
    let run = |backend| {
        let config = ExpmConfig { squaring_backend: backend, pade_degree: EXPM_PADE_DEGREE, scaling_override: Some(s) };
        expm_detailed(&m, &config)
    };
    let error = |x: &ComplexMatrix<T>| {
        if x.is_finite() {
            problem.relative_error(x).ok().filter(|e| e.is_finite())
        } else {
            None
        }
    };
    let explicit = run(SquaringBackend::Explicit).ok();
    let irs = run(SquaringBackend::Irs).ok();
    let (kappa_ap, sigma_n_ap) = irs.as_ref().and_then(|o| o.a_s.as_ref()).map_or((None, None), svd_summary);
    Ok(TrialRecord {
        experiment: ExperimentKind::ExpmCompare,
        trial: t,
        p: s,
        err_irs: irs.as_ref().and_then(|o| error(&o.value)),
        err_es: explicit.as_ref().and_then(|o| error(&o.value)),
        kappa_a_input: Some(problem.kappa_v),
        kappa_ap,
        sigma_n_ap,
        s_selected: Some(s),
    })
}

/// `e^M` for `M = V D V^{-1}`, `V = G - (1 - delta) sigma_n(G) u w^H`, `D`
/// drawn from `cfg.spectrum` (the unit disk by default), with both squaring
/// backends at the same `s`. One record per trial.
pub fn run_expm_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    cfg.experiment = ExperimentKind::ExpmCompare;
    (0..cfg.trials)
        .map(|t| match cfg.precision {
            Precision::Binary32 => expm_trial::<f32>(&cfg, t),
            Precision::Binary64 => expm_trial::<f64>(&cfg, t),
        })
        .collect()
}

/// Runs the experiment named in `cfg` that produces trial records.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    match cfg.experiment {
        ExperimentKind::ToyIdentity | ExperimentKind::GeneralSquare => run_square_experiment(cfg),
        ExperimentKind::ConditionEvolution => run_condition_evolution(cfg),
        ExperimentKind::ExpmCompare => run_expm_experiment(cfg),
        ExperimentKind::BoundReport => Err(Error::Config("bound_report produces a report, not trial records".into())),
    }
}

/// Median with failures counted as `+inf`. `None` for an empty input.
pub fn median_with_failures(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) })
}

/// Sample mean and unbiased (`N - 1`) standard deviation; `std` is 0 for a
/// single sample.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Some((mean, var.sqrt()))
}

/// Errors below this are plotted at this value.
pub const LOG_FLOOR: f64 = 1e-18;

#[derive(Clone, Debug, PartialEq)]
pub struct StepSummary {
    pub p: u32,
    pub records: usize,
    pub median_err_irs: f64,
    pub median_err_es: f64,
    /// Mean and std of `log10(max(err, LOG_FLOOR))` over successful trials.
    pub log_err_irs: Option<(f64, f64)>,
    pub log_err_es: Option<(f64, f64)>,
    pub mean_kappa_ap: Option<f64>,
    pub median_s: Option<f64>,
}

fn log_errors(values: impl Iterator<Item = Option<f64>>) -> Vec<f64> {
    values.flatten().map(|e| e.max(LOG_FLOOR).log10()).collect()
}

/// Per-`p` statistics over the records present at that `p`, ascending in `p`.
pub fn summarize(records: &[TrialRecord]) -> Vec<StepSummary> {
    let mut by_p: BTreeMap<u32, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        by_p.entry(r.p).or_default().push(r);
    }
    by_p.into_iter()
        .map(|(p, rs)| {
            let kappas: Vec<f64> = rs.iter().filter_map(|r| r.kappa_ap).collect();
            let ss: Vec<Option<f64>> = rs.iter().filter_map(|r| r.s_selected.map(|s| Some(s as f64))).collect();
            StepSummary {
                p,
                records: rs.len(),
                median_err_irs: median_with_failures(rs.iter().map(|r| r.err_irs)).unwrap_or(f64::NAN),
                median_err_es: median_with_failures(rs.iter().map(|r| r.err_es)).unwrap_or(f64::NAN),
                log_err_irs: mean_std(&log_errors(rs.iter().map(|r| r.err_irs))),
                log_err_es: mean_std(&log_errors(rs.iter().map(|r| r.err_es))),
                mean_kappa_ap: mean_std(&kappas).map(|(m, _)| m),
                median_s: median_with_failures(ss),
            }
        })
        .collect()
}
