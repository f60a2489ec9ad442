//! Evaluated forward-error bounds for IRS and explicit squaring.
//!
//! Constants: `mu(n) = n^2` for every kernel, `c_INV = 1` with the natural
//! logarithm in the exponent `kappa^{c_INV ln n}`, and `u` of the working
//! precision. The IRS bound uses the `epsilon` that the backward error result
//! ties to `u`, `epsilon = 14 mu u (1 + 4 sqrt(2) (8 ln(n+1) + 28) kappa_IRS)^{p-1}`.
//! These are stand-ins, so a violated bound is reported, not treated as a bug.

use std::f64::consts::SQRT_2;

use super::config::{Conditioning, ExperimentConfig};
use super::generators::{ginibre_from_rng, haar_from_rng, make_ill_conditioned, sample_spectrum, seeded_rng, trial_seed};
use super::problems::{build_test_pencil, SquaringOracle};
use crate::conditioning::{kappa_irs, sigma_min_mp};
use crate::error::Result;
use crate::kernels::counters::{self, OpCounts};
use crate::kernels::{self, ComplexMatrix, Precision, Real};
use crate::squaring::{explicit_squaring, implicit_to_explicit, irs, IrsIter, TraceMode};

/// Kernel call counts of explicit squaring: one inversion, `p + 1` products.
pub fn expected_es_counts(p: u32) -> OpCounts {
    OpCounts { matmul: p as u64 + 1, qr: 0, invert: 1 }
}

/// IRS plus the final solve: one inversion, `p` QRs, `2p + 1` products.
pub fn expected_irs_counts(p: u32) -> OpCounts {
    OpCounts { matmul: 2 * p as u64 + 1, qr: p as u64, invert: 1 }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub trial: usize,
    pub p: u32,
    pub measured_irs: f64,
    pub term_solve: f64,
    pub term_backward: f64,
    pub term_input: f64,
    pub bound_irs: f64,
    pub epsilon: f64,
    /// `epsilon < 1` and `epsilon <= sigma_min(M_p)/(8 sqrt 2)`.
    pub epsilon_admissible: bool,
    pub measured_es: f64,
    /// Inductive bound `delta_p` from the one-step propagation inequality.
    pub bound_es: f64,
    /// Product form with the `O(.)` dropped.
    pub bound_es_rough: f64,
    pub ops_es: OpCounts,
    pub ops_irs: OpCounts,
}

impl BoundRow {
    pub fn ratio_irs(&self) -> f64 {
        self.bound_irs / self.measured_irs
    }

    pub fn ratio_es(&self) -> f64 {
        self.bound_es / self.measured_es
    }

    pub fn counts_match(&self) -> bool {
        self.ops_es == expected_es_counts(self.p) && self.ops_irs == expected_irs_counts(self.p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub precision: Precision,
    pub rows: Vec<BoundRow>,
}

pub const BOUND_CSV_HEADER: &str = "trial,p,measured_irs,bound_irs,term_solve,term_backward,term_input,epsilon,epsilon_admissible,measured_es,bound_es,bound_es_rough,ratio_irs,ratio_es,ops_es_mm,ops_es_qr,ops_es_inv,ops_irs_mm,ops_irs_qr,ops_irs_inv,counts_match";

impl BoundReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(BOUND_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{},{},{},{},{},{},{}\n",
                r.trial,
                r.p,
                r.measured_irs,
                r.bound_irs,
                r.term_solve,
                r.term_backward,
                r.term_input,
                r.epsilon,
                r.epsilon_admissible,
                r.measured_es,
                r.bound_es,
                r.bound_es_rough,
                r.ratio_irs(),
                r.ratio_es(),
                r.ops_es.matmul,
                r.ops_es.qr,
                r.ops_es.invert,
                r.ops_irs.matmul,
                r.ops_irs.qr,
                r.ops_irs.invert,
                r.counts_match()
            ));
        }
        s
    }

    /// Rows where a measured error exceeds its evaluated bound.
    pub fn violations(&self) -> Vec<&BoundRow> {
        self.rows.iter().filter(|r| r.measured_irs > r.bound_irs || r.measured_es > r.bound_es).collect()
    }
}

/// Input-side quantities shared by every `p`.
struct InputNorms {
    mu_u: f64,
    log_n: f64,
    stack: f64,
    sigma_n_a: f64,
    norm_b: f64,
    kappa_a: f64,
    norm_c: f64,
}

fn input_norms<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<InputNorms> {
    let n = a.rows();
    let (a64, b64) = (a.cast::<f64>(), b.cast::<f64>());
    let sa = kernels::singular_values(&a64)?;
    let c = kernels::matmul_uncounted(&kernels::invert_uncounted(&a64)?, &b64)?;
    Ok(InputNorms {
        mu_u: (n * n) as f64 * T::UNIT_ROUNDOFF.as_f64(),
        log_n: (n as f64).ln(),
        stack: kernels::stacked_norm(&a64, &b64)?,
        sigma_n_a: sa[n - 1],
        norm_b: kernels::spectral_norm(&b64)?,
        kappa_a: sa[0] / sa[n - 1],
        norm_c: kernels::spectral_norm(&c)?,
    })
}

/// `x / (s - y)`, or `inf` once `y >= s`.
fn guarded_ratio(x: f64, s: f64, y: f64) -> f64 {
    if y >= s {
        f64::INFINITY
    } else {
        x / (s - y)
    }
}

fn es_bounds(inp: &InputNorms, p: u32) -> (f64, f64) {
    let mu_u = inp.mu_u;
    let base = (mu_u + (1.0 + mu_u) * inp.kappa_a.powf(inp.log_n) * mu_u) * inp.norm_b / inp.sigma_n_a;
    let c = inp.norm_c;
    let mut delta = base;
    let mut product = 1.0;
    for j in 1..=p {
        let cj = c.powf(2f64.powi(j as i32 - 1));
        delta = (1.0 + mu_u) * (2.0 * cj + delta) * delta + mu_u * cj * cj;
        product *= 2.0 * (1.0 + mu_u) * cj;
    }
    let rough = product * mu_u * (1.0 + (1.0 + mu_u) * inp.kappa_a.powf(inp.log_n)) * inp.norm_b / inp.sigma_n_a;
    (delta, rough)
}

fn bound_trial<T: Real>(cfg: &ExperimentConfig, t: usize) -> Result<Vec<BoundRow>> {
    let n = cfg.n;
    let mut rng = seeded_rng(trial_seed(cfg.seed, t as u64));
    let g: ComplexMatrix<f64> = ginibre_from_rng(n, n, &mut rng);
    let a = match cfg.conditioning {
        Conditioning::Well => g,
        Conditioning::Ill => make_ill_conditioned(&g, cfg.delta)?,
    };
    let v: ComplexMatrix<f64> = haar_from_rng(n, &mut rng);
    let d = sample_spectrum(cfg.spectrum, n, &mut rng);
    let (pencil, oracle): (_, SquaringOracle) = build_test_pencil::<T>(&a, &v, &d)?;
    let (a, b) = (pencil.a().clone(), pencil.b().clone());
    let inp = input_norms(&a, &b)?;
    let delta = inp.mu_u * inp.stack * guarded_ratio(inp.sigma_n_a + inp.norm_b, inp.sigma_n_a, inp.mu_u * inp.stack)
        / inp.sigma_n_a;
    let gamma_coeff = 4.0 * SQRT_2 * (8.0 * ((n + 1) as f64).ln() + 28.0);

    let mut rows = Vec::new();
    let mut es = kernels::matmul_uncounted(&kernels::invert_uncounted(&a)?, &b)?;
    let mut it = IrsIter::new(a.clone(), b.clone(), TraceMode::Fast)?;
    let mut product = 1.0;
    for p in 1..=cfg.p_max {
        es = kernels::matmul_uncounted(&es, &es)?;
        it.step()?;
        let x = it.to_explicit()?;
        let measured_irs = oracle.absolute_error(&x, p)?;
        let measured_es = oracle.absolute_error(&es, p)?;

        let (ap, bp) = it.current();
        let sap = kernels::singular_values(&ap.cast::<f64>())?;
        let sigma_n_ap = sap[n - 1];
        let kappa_ap = sap[0] / sigma_n_ap;
        let norm_bp = kernels::spectral_norm(&bp.cast::<f64>())?;

        let kappa = kappa_irs(&a, &b, p)?.value();
        let epsilon = 14.0 * inp.mu_u * (1.0 + gamma_coeff * kappa).powi(p as i32 - 1);
        let sigma_mp = sigma_min_mp(&a, &b, p)?.as_f64();
        let epsilon_admissible = epsilon < 1.0 && epsilon <= sigma_mp / (8.0 * SQRT_2);

        let term_solve = inp.mu_u * (1.0 + (1.0 + inp.mu_u) * kappa_ap.powf(inp.log_n)) * norm_bp / sigma_n_ap;
        let term_backward =
            epsilon * inp.stack / sigma_n_ap * guarded_ratio(sigma_n_ap + norm_bp, sigma_n_ap, epsilon * inp.stack);
        let e = 2f64.powi(p as i32 - 1);
        product *= inp.norm_c.powf(e) + (inp.norm_c + delta).powf(e);
        let term_input = delta * product;
        let (bound_es, bound_es_rough) = es_bounds(&inp, p);

        let ((), ops_es) = counters::count(|| {
            explicit_squaring(&a, &b, p as usize).map(|_| ()).unwrap_or(())
        });
        let ((), ops_irs) = counters::count(|| {
            irs(&a, &b, p as usize, TraceMode::Fast).and_then(|run| implicit_to_explicit(&run)).map(|_| ()).unwrap_or(())
        });

        rows.push(BoundRow {
            trial: t,
            p,
            measured_irs,
            term_solve,
            term_backward,
            term_input,
            bound_irs: term_solve + term_backward + term_input,
            epsilon,
            epsilon_admissible,
            measured_es,
            bound_es,
            bound_es_rough,
            ops_es,
            ops_irs,
        });
    }
    Ok(rows)
}

/// Bounds and measured absolute errors `||D - V D^{2^p} V^H||_2` for every
/// trial and `p = 1..=p_max`, plus kernel call counts of both algorithms.
pub fn run_bound_report(cfg: &ExperimentConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for t in 0..cfg.trials {
        rows.extend(match cfg.precision {
            Precision::Binary32 => bound_trial::<f32>(cfg, t)?,
            Precision::Binary64 => bound_trial::<f64>(cfg, t)?,
        });
    }
    Ok(BoundReport { n: cfg.n, precision: cfg.precision, rows })
}
