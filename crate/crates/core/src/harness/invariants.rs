//! Randomized invariant checks, shared by `pencilpow check` and the
//! acceptance tests. Every check is deterministic given its seed.

use std::fmt;

use num_complex::Complex;

use super::bounds::{expected_es_counts, expected_irs_counts};
use super::config::{Conditioning, ExperimentConfig, ExperimentKind};
use super::experiments::run_square_experiment;
use super::generators::{ginibre_from_rng, haar_from_rng, sample_spectrum, seeded_rng, ProblemRng, SpectrumRegion};
use super::output::records_to_csv;
use super::problems::build_test_pencil;
use crate::conditioning::{build_mp_dense, distance_ill_posed, kappa_irs, sigma_min_mp, DEFAULT_GRID_POINTS, DEFAULT_REFINE_ITERS};
use crate::kernels::counters;
use crate::kernels::{self, ComplexMatrix, Precision};
use crate::qrperturb::{align_complement, lebesgue_constant, lebesgue_upper_bound, qr_perturb_certificate, triangular_norm_check};
use crate::squaring::{explicit_squaring, implicit_to_explicit, irs, IrsIter, TraceMode};
use rand::Rng;

type M = ComplexMatrix<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn failed(name: &'static str, err: impl fmt::Display) -> Check {
    check(name, false, format!("error: {err}"))
}

fn pair(n: usize, rng: &mut ProblemRng) -> (M, M) {
    (ginibre_from_rng(n, n, rng), ginibre_from_rng(n, n, rng))
}

/// `||A_p^{-1} B_p - V D^{16} V^H|| / ||V D^{16} V^H|| <= 1e-9` at `p = 4`
/// for `n = 8`, `kappa_2(A) <= 100`, Haar `V`, `|d| in [0.5, 1]`.
pub fn squaring_identity(trials: usize, seed: u64) -> Check {
    const NAME: &str = "exact squaring identity";
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < trials {
        let a: M = ginibre_from_rng(8, 8, &mut rng);
        match kernels::condition_number(&a) {
            Ok(k) if k <= 100.0 => {}
            Ok(_) => continue,
            Err(e) => return failed(NAME, e),
        }
        let v: M = haar_from_rng(8, &mut rng);
        let d = sample_spectrum(SpectrumRegion::Annulus { r_lo: 0.5, r_hi: 1.0 }, 8, &mut rng);
        let result = build_test_pencil::<f64>(&a, &v, &d).and_then(|(pencil, oracle)| {
            let run = irs(pencil.a(), pencil.b(), 4, TraceMode::Fast)?;
            oracle.relative_error(&implicit_to_explicit(&run)?, 4)
        });
        match result {
            Ok(e) => worst = worst.max(e),
            Err(e) => return failed(NAME, e),
        }
        done += 1;
    }
    check(NAME, worst <= 1e-9, format!("{trials} pencils, worst relative error {worst:.3e} (tol 1e-9)"))
}

/// Root formula for `sigma_min(M_p)` against the SVD of the dense `M_p`.
pub fn root_formula(trials: usize, seed: u64) -> Check {
    const NAME: &str = "sigma_min(M_p) root formula";
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n = rng.gen_range(1..=4);
        let p = rng.gen_range(1..=3u32);
        let (a, b) = pair(n, &mut rng);
        let dense = build_mp_dense(&a, &b, p).and_then(|m| kernels::smallest_singular(&m));
        let fast = sigma_min_mp(&a, &b, p);
        match (dense, fast) {
            (Ok(d), Ok(f)) => worst = worst.max((d - f).abs() / d.max(f64::MIN_POSITIVE)),
            (Err(e), _) | (_, Err(e)) => return failed(NAME, e),
        }
    }
    check(NAME, worst <= 1e-11, format!("{trials} instances, worst relative gap {worst:.3e} (tol 1e-11)"))
}

/// `kappa_IRS >= 1`, invariance under `(A, B) -> (zA, zB)`, symmetry under
/// `(A, B) -> (B, A)`, and `kappa_IRS <= ||(A;B)||_2 / d_(A,B)`.
pub fn kappa_properties(trials: usize, seed: u64) -> Check {
    const NAME: &str = "kappa_IRS properties";
    let mut rng = seeded_rng(seed);
    let (mut min_kappa, mut scale_gap, mut swap_gap, mut ceiling_excess) = (f64::INFINITY, 0.0f64, 0.0f64, f64::NEG_INFINITY);
    for _ in 0..trials {
        let n = rng.gen_range(1..=4);
        let p = rng.gen_range(1..=5u32);
        let (a, b) = pair(n, &mut rng);
        let z = Complex::from_polar(10f64.powf(rng.gen_range(-3.0..3.0)), rng.gen_range(0.0..std::f64::consts::TAU));
        let result = (|| -> crate::Result<()> {
            let k = kappa_irs(&a, &b, p)?.value();
            let ks = kappa_irs(&a.scale(z), &b.scale(z), p)?.value();
            let kw = kappa_irs(&b, &a, p)?.value();
            let d = distance_ill_posed(&a, &b, DEFAULT_GRID_POINTS, DEFAULT_REFINE_ITERS)?;
            let ceiling = kernels::stacked_norm(&a, &b)? / d;
            min_kappa = min_kappa.min(k);
            scale_gap = scale_gap.max((ks - k).abs() / k);
            swap_gap = swap_gap.max((kw - k).abs() / k);
            ceiling_excess = ceiling_excess.max(k / ceiling - 1.0);
            Ok(())
        })();
        if let Err(e) = result {
            return failed(NAME, e);
        }
    }
    let passed = min_kappa >= 1.0 - 1e-12 && scale_gap <= 1e-13 && swap_gap <= 1e-10 && ceiling_excess <= 1e-9;
    check(
        NAME,
        passed,
        format!(
            "{trials} trials: min kappa {min_kappa:.6}, scale gap {scale_gap:.2e} (1e-13), swap gap {swap_gap:.2e} (1e-10), ceiling excess {ceiling_excess:.2e} (1e-9)"
        ),
    )
}

/// Complement alignment: `||Q_2 - U_2 W||_2 <= 4 ||Q_1 - U_1||_2` with `W`
/// unitary, for `16 x 16` unitaries whose leading halves are close.
pub fn complement_alignment(trials: usize, seed: u64) -> Check {
    const NAME: &str = "complement alignment";
    let n = 8;
    let mut rng = seeded_rng(seed);
    let (mut worst_ratio, mut worst_w) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let delta = 10f64.powf(rng.gen_range(-8.0..-0.5));
        let q: M = haar_from_rng(2 * n, &mut rng);
        let g: M = ginibre_from_rng(2 * n, n, &mut rng);
        let result = (|| -> crate::Result<(f64, f64)> {
            let perturbed = q.block(0, 0, 2 * n, n).checked_add(&g.scale_real(delta))?;
            let u = kernels::full_qr(&perturbed)?.q;
            let al = align_complement(&q, &u)?;
            let gram = kernels::matmul(&al.w.adjoint(), &al.w)?;
            let wdev = kernels::spectral_norm(&gram.checked_sub(&M::identity(n))?)?;
            Ok((al.residual / (4.0 * al.leading_gap), wdev))
        })();
        match result {
            Ok((r, w)) => {
                worst_ratio = worst_ratio.max(r);
                worst_w = worst_w.max(w);
            }
            Err(e) => return failed(NAME, e),
        }
    }
    check(
        NAME,
        worst_ratio <= 1.0 + 1e-6 && worst_w <= 1e-12,
        format!("{trials} trials: worst residual/(4 delta) {worst_ratio:.4} (<= 1+1e-6), worst ||W^H W - I|| {worst_w:.2e} (1e-12)"),
    )
}

/// QR perturbation certificate on `16 x 8` matrices with
/// `||A^+||_2 ||E||_2 <= 0.5`.
pub fn qr_certificate(trials: usize, seed: u64) -> Check {
    const NAME: &str = "QR perturbation certificate";
    let mut rng = seeded_rng(seed);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let a: M = ginibre_from_rng(16, 8, &mut rng);
        let e: M = ginibre_from_rng(16, 8, &mut rng);
        let target = 0.5 * rng.gen::<f64>().powi(3);
        let result = (|| -> crate::Result<_> {
            let sigma_n = kernels::smallest_singular(&a)?;
            let e = e.scale_real(target * sigma_n / kernels::spectral_norm(&e)?);
            qr_perturb_certificate(&a, &e)
        })();
        match result {
            Ok(c) => {
                if !(c.valid && c.holds()) {
                    violations += 1;
                }
                if c.bound_value > 0.0 {
                    worst = worst.max(c.empirical_w_norm / c.bound_value);
                }
            }
            Err(e) => return failed(NAME, e),
        }
    }
    check(NAME, violations == 0, format!("{trials} trials, {violations} violations, worst empirical/bound {worst:.3e}"))
}

/// Triangular Hermitian-part inequality on random `16 x 16` triangles, the
/// Lebesgue constant ceiling for `k <= 1000`, and `L_0 = 1`.
pub fn triangle_and_lebesgue(trials: usize, seed: u64) -> Check {
    const NAME: &str = "triangular norm inequality and Lebesgue bound";
    let n = 16;
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let g: M = ginibre_from_rng(n, n, &mut rng);
        let l = M::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => g[(i, j)],
            std::cmp::Ordering::Equal => Complex::new(g[(i, j)].re, 0.0),
            std::cmp::Ordering::Less => Complex::new(0.0, 0.0),
        });
        match triangular_norm_check(&l) {
            Ok(c) => worst = worst.max(c.lhs / c.rhs_exact),
            Err(e) => return failed(NAME, e),
        }
    }
    let mut bound_fail = None;
    for k in 1..=1000 {
        let lk = lebesgue_constant(k);
        if lk > lebesgue_upper_bound(k) {
            bound_fail = Some(k);
            break;
        }
    }
    let l0 = lebesgue_constant(0);
    let passed = worst <= 1.0 + 1e-12 && bound_fail.is_none() && l0 == 1.0;
    check(
        NAME,
        passed,
        format!(
            "{trials} triangles, worst lhs/rhs {worst:.4}; L_k bound {} for k <= 1000; L_0 = {l0}",
            bound_fail.map_or("holds".to_string(), |k| format!("fails at k = {k}"))
        ),
    )
}

/// `sigma_min(M_p(A+E, B+F)) >= sigma_min(M_p(A, B)) - 2 delta - 1e-10`.
pub fn mp_perturbation(trials: usize, seed: u64) -> Check {
    const NAME: &str = "sigma_min(M_p) perturbation";
    let mut rng = seeded_rng(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let n = rng.gen_range(1..=6);
        let p = rng.gen_range(1..=4u32);
        let delta = 10f64.powf(rng.gen_range(-8.0..-0.3));
        let (a, b) = pair(n, &mut rng);
        let (e, f) = pair(n, &mut rng);
        let result = (|| -> crate::Result<f64> {
            let e = e.scale_real(delta / kernels::spectral_norm(&e)?);
            let f = f.scale_real(delta / kernels::spectral_norm(&f)?);
            let before = sigma_min_mp(&a, &b, p)?;
            let after = sigma_min_mp(&a.checked_add(&e)?, &b.checked_add(&f)?, p)?;
            Ok(before - 2.0 * delta - after)
        })();
        match result {
            Ok(x) => worst = worst.max(x),
            Err(e) => return failed(NAME, e),
        }
    }
    check(NAME, worst <= 1e-10, format!("{trials} trials, worst shortfall {worst:.3e} (tol 1e-10)"))
}

/// Kernel call counts of ES and of IRS with its final solve.
pub fn flop_accounting(p_max: u32, seed: u64) -> Check {
    const NAME: &str = "flop accounting";
    let mut rng = seeded_rng(seed);
    let a: M = ginibre_from_rng(6, 6, &mut rng);
    let v: M = haar_from_rng(6, &mut rng);
    let d = sample_spectrum(SpectrumRegion::Circle, 6, &mut rng);
    let (a, b) = match build_test_pencil::<f64>(&a, &v, &d) {
        Ok((pencil, _)) => pencil.into_parts(),
        Err(e) => return failed(NAME, e),
    };
    let mut bad = Vec::new();
    for p in 1..=p_max {
        let (res_es, es) = counters::count(|| explicit_squaring(&a, &b, p as usize));
        let (res_irs, ir) = counters::count(|| irs(&a, &b, p as usize, TraceMode::Fast).and_then(|r| implicit_to_explicit(&r)));
        if let Err(e) = res_es.and(res_irs) {
            return failed(NAME, e);
        }
        if es != expected_es_counts(p) || ir != expected_irs_counts(p) {
            bad.push(format!("p={p}: es {es:?}, irs {ir:?}"));
        }
    }
    check(
        NAME,
        bad.is_empty(),
        if bad.is_empty() {
            format!("ES = INV + (p+1) MM and IRS = INV + p QR + (2p+1) MM for p = 1..={p_max}")
        } else {
            bad.join("; ")
        },
    )
}

/// Errors at `p = 4` in binary32 over binary64 on one well-conditioned
/// instance; both algorithms' ratios must lie in `[1e4, 1e10]`.
pub fn precision_probe(seed: u64) -> Check {
    const NAME: &str = "binary32/binary64 error ratio";
    let mut cfg = ExperimentConfig::new(ExperimentKind::GeneralSquare, Conditioning::Well);
    cfg.n = 16;
    cfg.trials = 1;
    cfg.p_max = 4;
    cfg.seed = seed;
    let at_p4 = |precision| -> crate::Result<(Option<f64>, Option<f64>)> {
        let mut c = cfg.clone();
        c.precision = precision;
        let recs = run_square_experiment(&c)?;
        Ok(recs.iter().find(|r| r.p == 4).map_or((None, None), |r| (r.err_irs, r.err_es)))
    };
    match (at_p4(Precision::Binary32), at_p4(Precision::Binary64)) {
        (Ok((Some(i32_), Some(e32))), Ok((Some(i64_), Some(e64)))) => {
            let (ri, re) = (i32_ / i64_, e32 / e64);
            let ok = |r: f64| (1e4..=1e10).contains(&r);
            check(NAME, ok(ri) && ok(re), format!("IRS ratio {ri:.3e}, ES ratio {re:.3e} (range [1e4, 1e10])"))
        }
        (Err(e), _) | (_, Err(e)) => failed(NAME, e),
        _ => check(NAME, false, "a run did not reach p = 4".into()),
    }
}

/// The `p`-step IRS output agrees exactly with the `(p-1)`-step output
/// advanced by one step.
pub fn incremental_irs(seed: u64) -> Check {
    const NAME: &str = "incremental IRS consistency";
    let (a, b) = pair(10, &mut seeded_rng(seed));
    let result = (|| -> crate::Result<bool> {
        let mut it = IrsIter::new(a.clone(), b.clone(), TraceMode::Fast)?;
        for p in 1..=6 {
            it.step()?;
            let fresh = irs(&a, &b, p, TraceMode::Fast)?;
            if it.current() != (&fresh.a_p, &fresh.b_p) {
                return Ok(false);
            }
        }
        Ok(true)
    })();
    match result {
        Ok(ok) => check(NAME, ok, "steps 1..=6 match fresh runs bit for bit".into()),
        Err(e) => failed(NAME, e),
    }
}

/// Two runs of the same config give identical CSV text.
pub fn determinism(seed: u64) -> Check {
    const NAME: &str = "determinism";
    let mut cfg = ExperimentConfig::new(ExperimentKind::GeneralSquare, Conditioning::Ill);
    cfg.n = 12;
    cfg.trials = 3;
    cfg.p_max = 5;
    cfg.spectrum = SpectrumRegion::DEFAULT_ANNULUS;
    cfg.seed = seed;
    match (run_square_experiment(&cfg), run_square_experiment(&cfg)) {
        (Ok(x), Ok(y)) => check(NAME, records_to_csv(&x) == records_to_csv(&y), format!("{} rows compared", x.len())),
        (Err(e), _) | (_, Err(e)) => failed(NAME, e),
    }
}

/// Trial counts used by `pencilpow check`.
#[derive(Clone, Copy, Debug)]
pub struct SuiteSize {
    pub squaring: usize,
    pub roots: usize,
    pub kappa: usize,
    pub alignment: usize,
    pub certificate: usize,
    pub triangles: usize,
    pub perturbation: usize,
}

impl SuiteSize {
    pub const FULL: SuiteSize = SuiteSize {
        squaring: 50,
        roots: 100,
        kappa: 200,
        alignment: 1000,
        certificate: 1000,
        triangles: 1000,
        perturbation: 200,
    };

    pub const QUICK: SuiteSize = SuiteSize {
        squaring: 5,
        roots: 10,
        kappa: 10,
        alignment: 20,
        certificate: 20,
        triangles: 20,
        perturbation: 10,
    };
}

pub fn run_suite(size: SuiteSize, seed: u64) -> Vec<Check> {
    vec![
        squaring_identity(size.squaring, seed),
        root_formula(size.roots, seed.wrapping_add(1)),
        kappa_properties(size.kappa, seed.wrapping_add(2)),
        complement_alignment(size.alignment, seed.wrapping_add(3)),
        qr_certificate(size.certificate, seed.wrapping_add(4)),
        triangle_and_lebesgue(size.triangles, seed.wrapping_add(5)),
        mp_perturbation(size.perturbation, seed.wrapping_add(6)),
        flop_accounting(8, seed.wrapping_add(7)),
        precision_probe(seed.wrapping_add(8)),
        incremental_irs(seed.wrapping_add(9)),
        determinism(seed.wrapping_add(10)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        for c in run_suite(SuiteSize::QUICK, 3) {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn display_marks_outcome() {
        let c = check("x", false, "y".into());
        assert_eq!(c.to_string(), "FAIL x: y");
    }
}
