//! Reduced-scale versions of the figure experiments.

use pencilpow::harness::generators::{gen_ginibre, gen_haar, sample_spectrum, seeded_rng, SpectrumRegion};
use pencilpow::harness::problems::build_test_pencil;
use pencilpow::harness::{
    run_condition_evolution, run_expm_experiment, run_square_experiment, summarize, Conditioning,
    ExperimentConfig, ExperimentKind,
};
use pencilpow::squaring::{explicit_squaring_steps, IrsIter, TraceMode};
use pencilpow::ComplexMatrix;

fn evolution(spectrum: SpectrumRegion, n: usize, trials: usize, p_max: u32) -> Vec<f64> {
    let mut cfg = ExperimentConfig::new(ExperimentKind::ConditionEvolution, Conditioning::Well);
    cfg.spectrum = spectrum;
    cfg.n = n;
    cfg.trials = trials;
    cfg.p_max = p_max;
    let summary = summarize(&run_condition_evolution(&cfg).unwrap());
    summary.iter().map(|s| s.mean_kappa_ap.unwrap()).collect()
}

#[test]
fn toy_identity_irs_not_worse_at_n64() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::ToyIdentity, Conditioning::Well);
    cfg.n = 64;
    cfg.p_max = 10;
    let summary = summarize(&run_square_experiment(&cfg).unwrap());
    assert_eq!(summary.len(), 10);
    for s in &summary {
        assert!(s.median_err_irs <= s.median_err_es, "p = {}: {} > {}", s.p, s.median_err_irs, s.median_err_es);
    }
}

#[test]
fn disk_absolute_errors_die_out() {
    // The exact power tends to zero, so both computed powers do as well.
    let n = 16;
    let p_max = 12;
    for trial in 0..3u64 {
        let a: ComplexMatrix<f64> = gen_ginibre(n, 100 + trial);
        let v: ComplexMatrix<f64> = gen_haar(n, 200 + trial);
        let d = sample_spectrum(SpectrumRegion::Disk, n, &mut seeded_rng(300 + trial));
        let (pencil, oracle) = build_test_pencil::<f64>(&a, &v, &d).unwrap();
        let es = explicit_squaring_steps(pencil.a(), pencil.b(), p_max as usize).unwrap();
        let mut it = IrsIter::from_pencil(pencil, TraceMode::Fast);
        let mut irs = Vec::new();
        let mut es_err = Vec::new();
        for p in 1..=p_max {
            it.step().unwrap();
            irs.push(oracle.absolute_error(&it.to_explicit().unwrap(), p).unwrap());
            es_err.push(oracle.absolute_error(&es[p as usize], p).unwrap());
        }
        for errs in [&irs, &es_err] {
            let peak = errs.iter().cloned().fold(0.0, f64::max);
            let last = *errs.last().unwrap();
            assert!(last < 1e-3 * peak.max(1e-16) || last < 1e-20, "trial {trial}: {errs:?}");
        }
    }
}

#[test]
fn annulus_condition_number_blows_up() {
    let k = evolution(SpectrumRegion::DEFAULT_ANNULUS, 32, 4, 10);
    assert!(k[10] > 10.0 * k[0], "{k:?}");
}

#[test]
fn circle_condition_number_stays_bounded() {
    let k = evolution(SpectrumRegion::Circle, 32, 4, 10);
    assert!(k.iter().all(|&x| x <= 10.0 * k[0]), "{k:?}");
}

#[test]
fn disk_condition_number_drops() {
    let k = evolution(SpectrumRegion::Disk, 32, 6, 3);
    assert!(k[3] < k[0], "{k:?}");
}

#[test]
fn expm_scaling_grows_as_v_degrades() {
    let mut last = 0.0;
    for delta in [1.0, 1e-2, 1e-4] {
        let mut cfg = ExperimentConfig::new(ExperimentKind::ExpmCompare, Conditioning::Well);
        cfg.n = 16;
        cfg.trials = 4;
        cfg.delta = delta;
        let records = run_expm_experiment(&cfg).unwrap();
        let mut s: Vec<f64> = records.iter().map(|r| f64::from(r.s_selected.unwrap())).collect();
        s.sort_by(f64::total_cmp);
        let median = (s[1] + s[2]) / 2.0;
        assert!(median >= last, "delta {delta}: median s {median} < {last}");
        last = median;
    }
}
