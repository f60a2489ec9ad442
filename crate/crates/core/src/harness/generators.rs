//! Random problem generators.
//!
//! All randomness flows from one generator type, [`ProblemRng`] (ChaCha20, a
//! counter-based stream cipher), seeded through [`seeded_rng`]. Normal deviates
//! come from `rand_distr`'s ziggurat sampler. Matrices are always drawn in
//! binary64 and rounded to the target precision, so an f32 run and an f64 run
//! with the same seed see the same problem up to input rounding.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::{self, ComplexMatrix, Real};

pub type ProblemRng = ChaCha20Rng;

pub fn seeded_rng(seed: u64) -> ProblemRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Seed of trial `t` under root seed `root`.
pub fn trial_seed(root: u64, trial: u64) -> u64 {
    root ^ trial
}

/// `rows x cols` matrix of i.i.d. standard complex Gaussians `(x + i y)/sqrt(2)`.
pub fn ginibre_from_rng<T: Real>(rows: usize, cols: usize, rng: &mut ProblemRng) -> ComplexMatrix<T> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let m = ComplexMatrix::<f64>::from_fn(rows, cols, |_, _| {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        Complex::new(x * scale, y * scale)
    });
    m.cast()
}

pub fn gen_ginibre<T: Real>(n: usize, seed: u64) -> ComplexMatrix<T> {
    ginibre_from_rng(n, n, &mut seeded_rng(seed))
}

/// Haar-distributed unitary: the Q factor of a Ginibre matrix. The QR
/// normalization (real nonnegative diagonal of R) is what makes it Haar.
pub fn haar_from_rng<T: Real>(n: usize, rng: &mut ProblemRng) -> ComplexMatrix<T> {
    let g: ComplexMatrix<f64> = ginibre_from_rng(n, n, rng);
    let q = kernels::full_qr_uncounted(&g)
        .expect("square input always admits a full QR")
        .q;
    q.cast()
}

pub fn gen_haar<T: Real>(n: usize, seed: u64) -> ComplexMatrix<T> {
    haar_from_rng(n, &mut seeded_rng(seed))
}

/// `A - (1 - delta) sigma_n(A) u w^H` with `u`, `w` the last left and right
/// singular vectors, which moves `sigma_n` to `delta sigma_n` and leaves the
/// other singular values alone.
pub fn make_ill_conditioned<T: Real>(a: &ComplexMatrix<T>, delta: f64) -> Result<ComplexMatrix<T>> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1], got {delta}")));
    }
    if delta == 1.0 {
        return Ok(a.clone());
    }
    let s = kernels::svd(a)?;
    let k = s.singular_values.len() - 1;
    let coef = T::of_f64(1.0 - delta) * s.singular_values[k];
    let u = s.u.column(k);
    let w = s.v.column(k);
    Ok(ComplexMatrix::from_fn(a.rows(), a.cols(), |i, j| {
        a[(i, j)] - u[i] * w[j].conj() * coef
    }))
}

/// Where the eigenvalues of `A^{-1} B` are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumRegion {
    /// `|z| = 1`.
    Circle,
    /// `|z| <= 1`, area-uniform.
    Disk,
    /// `r_lo <= |z| <= r_hi`, modulus uniform.
    Annulus { r_lo: f64, r_hi: f64 },
}

impl SpectrumRegion {
    pub const DEFAULT_ANNULUS: SpectrumRegion = SpectrumRegion::Annulus { r_lo: 0.95, r_hi: 1.05 };

    pub fn name(&self) -> &'static str {
        match self {
            SpectrumRegion::Circle => "circle",
            SpectrumRegion::Disk => "disk",
            SpectrumRegion::Annulus { .. } => "annulus",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let SpectrumRegion::Annulus { r_lo, r_hi } = *self {
            if !(r_lo > 0.0 && r_lo < r_hi) {
                return Err(Error::InvalidArgument(format!(
                    "annulus needs 0 < r_lo < r_hi, got [{r_lo}, {r_hi}]"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for SpectrumRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumRegion::Annulus { r_lo, r_hi } => write!(f, "annulus({r_lo},{r_hi})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for SpectrumRegion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "circle" => Ok(SpectrumRegion::Circle),
            "disk" => Ok(SpectrumRegion::Disk),
            "annulus" => Ok(SpectrumRegion::DEFAULT_ANNULUS),
            _ => {
                let inner = s
                    .strip_prefix("annulus(")
                    .and_then(|t| t.strip_suffix(')'))
                    .ok_or_else(|| format!("unknown spectrum '{s}'"))?;
                let (lo, hi) = inner.split_once(',').ok_or_else(|| format!("bad annulus '{s}'"))?;
                let r_lo = lo.trim().parse::<f64>().map_err(|e| e.to_string())?;
                let r_hi = hi.trim().parse::<f64>().map_err(|e| e.to_string())?;
                let region = SpectrumRegion::Annulus { r_lo, r_hi };
                region.validate().map_err(|e| e.to_string())?;
                Ok(region)
            }
        }
    }
}

/// Diagonal entries `r_k e^{i theta_k}` kept in polar form so that powers
/// `d^{2^p} = r^{2^p} e^{i 2^p theta}` can be evaluated without accumulating
/// rounding through repeated complex squaring.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub moduli: Vec<f64>,
    pub angles: Vec<f64>,
}

impl Spectrum {
    /// All ones (the `A = B` toy problem).
    pub fn ones(n: usize) -> Self {
        Self {
            moduli: vec![1.0; n],
            angles: vec![0.0; n],
        }
    }

    pub fn from_values(values: &[Complex<f64>]) -> Self {
        Self {
            moduli: values.iter().map(|z| z.norm()).collect(),
            angles: values.iter().map(|z| z.arg()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    pub fn values(&self) -> Vec<Complex<f64>> {
        self.power(0)
    }

    /// `d_k^{2^p}` for every entry.
    pub fn power(&self, p: u32) -> Vec<Complex<f64>> {
        let e = 2f64.powi(p as i32);
        self.moduli
            .iter()
            .zip(&self.angles)
            .map(|(&r, &t)| {
                let m = if r == 1.0 { 1.0 } else { r.powf(e) };
                let (s, c) = (t * e).sin_cos();
                Complex::new(m * c, m * s)
            })
            .collect()
    }

    /// `max_k |d_k|^{2^p}`.
    pub fn radius_power(&self, p: u32) -> f64 {
        let e = 2f64.powi(p as i32);
        self.moduli.iter().map(|&r| if r == 1.0 { 1.0 } else { r.powf(e) }).fold(0.0, f64::max)
    }
}

pub fn sample_spectrum(region: SpectrumRegion, n: usize, rng: &mut ProblemRng) -> Spectrum {
    let mut moduli = Vec::with_capacity(n);
    let mut angles = Vec::with_capacity(n);
    for _ in 0..n {
        let theta = rng.gen::<f64>() * 2.0 * PI;
        let r = match region {
            SpectrumRegion::Circle => 1.0,
            SpectrumRegion::Disk => rng.gen::<f64>().sqrt(),
            SpectrumRegion::Annulus { r_lo, r_hi } => r_lo + (r_hi - r_lo) * rng.gen::<f64>(),
        };
        moduli.push(r);
        angles.push(theta);
    }
    Spectrum { moduli, angles }
}
