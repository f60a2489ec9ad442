//! Scaling-and-squaring matrix exponential with a choice of final squaring.
//!
//! `e^M ~ (q(M/2^s)^{-1} p(M/2^s))^{2^s}` for the diagonal Pade pair `(p, q)`.
//! The last step is `(Q^{-1} P)^{2^s}` with `Q = q(M/2^s)`, `P = p(M/2^s)`:
//! either formed explicitly and squared, or obtained from `s` IRS steps on the
//! pencil `(Q, P)` followed by a single solve.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels::{self, ComplexMatrix, Real};
use crate::squaring::{self, IrsIter, TraceMode};

pub const SUPPORTED_DEGREES: [u32; 5] = [3, 5, 7, 9, 13];

/// Largest `||X||_1` for which the degree-`m` diagonal Pade approximant of
/// `e^X` has backward error below `2^-53`.
pub fn theta(degree: u32) -> Option<f64> {
    match degree {
        3 => Some(1.495585217958292e-2),
        5 => Some(2.539398330063230e-1),
        7 => Some(9.504178996162932e-1),
        9 => Some(2.097847961257068e0),
        13 => Some(5.371920351148152e0),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SquaringBackend {
    #[default]
    Explicit,
    Irs,
}

impl fmt::Display for SquaringBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SquaringBackend::Explicit => "explicit",
            SquaringBackend::Irs => "irs",
        })
    }
}

impl FromStr for SquaringBackend {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "explicit" | "es" => Ok(SquaringBackend::Explicit),
            "irs" | "implicit" => Ok(SquaringBackend::Irs),
            other => Err(format!("unknown squaring backend '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExpmConfig {
    pub squaring_backend: SquaringBackend,
    pub pade_degree: u32,
    /// Forces `s`; otherwise [`select_scaling`] picks it.
    pub scaling_override: Option<u32>,
}

impl Default for ExpmConfig {
    fn default() -> Self {
        Self { squaring_backend: SquaringBackend::Explicit, pade_degree: 13, scaling_override: None }
    }
}

impl ExpmConfig {
    pub fn with_backend(backend: SquaringBackend) -> Self {
        Self { squaring_backend: backend, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !SUPPORTED_DEGREES.contains(&self.pade_degree) {
            return Err(Error::InvalidArgument(format!(
                "pade_degree must be one of {SUPPORTED_DEGREES:?}, got {}",
                self.pade_degree
            )));
        }
        Ok(())
    }
}

/// Smallest `s >= 0` with `||M||_1 / 2^s <= theta(degree)`.
pub fn select_scaling<T: Real>(m: &ComplexMatrix<T>, degree: u32) -> Result<u32> {
    let th = theta(degree).ok_or_else(|| Error::InvalidArgument(format!("no threshold for degree {degree}")))?;
    let norm = m.one_norm().as_f64();
    if !norm.is_finite() {
        return Err(Error::InvalidArgument("matrix 1-norm is not finite".into()));
    }
    let mut s = 0u32;
    let mut scaled = norm;
    while scaled > th {
        scaled /= 2.0;
        s += 1;
    }
    Ok(s)
}

/// `c_0 = 1`, `c_{j+1} = c_j (m - j) / ((2m - j)(j + 1))`.
pub fn pade_coefficients(degree: u32) -> Vec<f64> {
    let m = degree as f64;
    let mut c = vec![1.0];
    for j in 0..degree as usize {
        let jf = j as f64;
        let next = c[j] * (m - jf) / ((2.0 * m - jf) * (jf + 1.0));
        c.push(next);
    }
    c
}

/// `(p_m(X), q_m(X))` where `p_m(x) = sum c_j x^j` and `q_m(x) = p_m(-x)`,
/// evaluated as `P = V + U`, `Q = V - U` from the even part `V` and odd part
/// `U`, both built from powers of `X^2`.
pub fn pade_numerator_denominator<T: Real>(
    x: &ComplexMatrix<T>,
    degree: u32,
) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    if !x.is_square() {
        return Err(Error::NotSquare { op: "pade", rows: x.rows(), cols: x.cols() });
    }
    if degree == 0 {
        return Err(Error::InvalidArgument("pade degree must be >= 1".into()));
    }
    let n = x.rows();
    let c = pade_coefficients(degree);
    let x2 = kernels::matmul_uncounted(x, x)?;
    let mut power = ComplexMatrix::identity(n);
    let mut even = ComplexMatrix::zeros(n, n);
    let mut odd_inner = ComplexMatrix::zeros(n, n);
    let mut k = 0usize;
    while 2 * k <= degree as usize {
        if k > 0 {
            power = kernels::matmul_uncounted(&power, &x2)?;
        }
        even = even.checked_add(&power.scale_real(T::of_f64(c[2 * k])))?;
        if 2 * k + 1 <= degree as usize {
            odd_inner = odd_inner.checked_add(&power.scale_real(T::of_f64(c[2 * k + 1])))?;
        }
        k += 1;
    }
    let odd = kernels::matmul_uncounted(x, &odd_inner)?;
    Ok((even.checked_add(&odd)?, even.checked_sub(&odd)?))
}

/// Everything [`expm_detailed`] computed.
#[derive(Clone, Debug)]
pub struct ExpmOutcome<T> {
    pub value: ComplexMatrix<T>,
    pub s: u32,
    /// `A_s` of the IRS path (`A_0 = Q`); `None` for the explicit backend.
    pub a_s: Option<ComplexMatrix<T>>,
}

fn invert_pade_denominator<T: Real>(q: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    kernels::invert(q).map_err(|e| match e {
        Error::Singular { sigma_min } => Error::SingularPadeDenominator { sigma_min },
        other => other,
    })
}

/// `e^M` together with the chosen `s` and, on the IRS path, `A_s`.
pub fn expm_detailed<T: Real>(m: &ComplexMatrix<T>, config: &ExpmConfig) -> Result<ExpmOutcome<T>> {
    config.validate()?;
    if !m.is_square() {
        return Err(Error::NotSquare { op: "expm", rows: m.rows(), cols: m.cols() });
    }
    let s = match config.scaling_override {
        Some(s) => s,
        None => select_scaling(m, config.pade_degree)?,
    };
    if s > 1000 {
        return Err(Error::InvalidArgument(format!("scaling exponent {s} is too large")));
    }
    let x = m.scale_real(T::of_f64(0.5f64.powi(s as i32)));
    let (p, q) = pade_numerator_denominator(&x, config.pade_degree)?;
    if s == 0 {
        let value = kernels::matmul(&invert_pade_denominator(&q)?, &p)?;
        let a_s = (config.squaring_backend == SquaringBackend::Irs).then_some(q);
        return Ok(ExpmOutcome { value, s, a_s });
    }
    match config.squaring_backend {
        SquaringBackend::Explicit => {
            let d0 = kernels::matmul(&invert_pade_denominator(&q)?, &p)?;
            let mut d = d0;
            for _ in 0..s {
                d = kernels::matmul(&d, &d)?;
            }
            Ok(ExpmOutcome { value: d, s, a_s: None })
        }
        SquaringBackend::Irs => {
            let mut it = IrsIter::new(q, p, TraceMode::Fast)?;
            for _ in 0..s {
                it.step()?;
            }
            let run = it.into_run();
            let value = squaring::implicit_to_explicit(&run)?;
            Ok(ExpmOutcome { value, s, a_s: Some(run.a_p) })
        }
    }
}

pub fn expm<T: Real>(m: &ComplexMatrix<T>, config: &ExpmConfig) -> Result<ComplexMatrix<T>> {
    Ok(expm_detailed(m, config)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators::{ginibre_from_rng, make_ill_conditioned, sample_spectrum, seeded_rng, SpectrumRegion};
    use crate::kernels::{matmul, spectral_norm};
    use num_complex::Complex;
    use proptest::prelude::*;

    type M = ComplexMatrix<f64>;

    fn both() -> [ExpmConfig; 2] {
        [ExpmConfig::with_backend(SquaringBackend::Explicit), ExpmConfig::with_backend(SquaringBackend::Irs)]
    }

    fn rel(x: &M, y: &M) -> f64 {
        spectral_norm(&(x - y)).unwrap() / spectral_norm(y).unwrap()
    }

    /// `(V D V^{-1}, V e^D V^{-1}, V)` for a moderately conditioned `V` and
    /// `D` drawn from the unit disk.
    fn similarity_instance(n: usize, seed: u64, delta: f64) -> (M, M, M, Vec<Complex<f64>>) {
        let mut rng = seeded_rng(seed);
        let g: M = ginibre_from_rng(n, n, &mut rng);
        let v = make_ill_conditioned(&g, delta).unwrap();
        let d = sample_spectrum(SpectrumRegion::Disk, n, &mut rng).values();
        let vinv = kernels::invert(&v).unwrap();
        let m = matmul(&matmul(&v, &M::from_diagonal(&d)).unwrap(), &vinv).unwrap();
        let ed: Vec<Complex<f64>> = d.iter().map(|z| z.exp()).collect();
        let oracle = matmul(&matmul(&v, &M::from_diagonal(&ed)).unwrap(), &vinv).unwrap();
        (m, oracle, v, d)
    }

    #[test]
    fn scaling_selection() {
        assert_eq!(select_scaling(&M::zeros(3, 3), 13).unwrap(), 0);
        let four = M::identity(2).scale_real(4.0);
        assert_eq!(select_scaling(&four, 13).unwrap(), 0);
        let hundred = M::identity(2).scale_real(100.0);
        assert_eq!(select_scaling(&hundred, 13).unwrap(), 5);
        assert_eq!(select_scaling(&M::identity(2).scale_real(5.371920351148152), 13).unwrap(), 0);
        assert!(select_scaling(&four, 4).is_err());
    }

    #[test]
    fn coefficients_of_low_degrees() {
        assert_eq!(pade_coefficients(1), vec![1.0, 0.5]);
        let c3 = pade_coefficients(3);
        assert_eq!(c3, vec![1.0, 0.5, 0.1, 1.0 / 120.0]);
    }

    #[test]
    fn pade_at_zero_and_degree_one() {
        let (p, q) = pade_numerator_denominator(&M::zeros(3, 3), 13).unwrap();
        assert_eq!(p, M::identity(3));
        assert_eq!(q, M::identity(3));
        let x = M::from_real_rows(&[&[0.3]]).unwrap();
        let (p, q) = pade_numerator_denominator(&x, 1).unwrap();
        assert!((p[(0, 0)].re - 1.15).abs() < 1e-16);
        assert!((q[(0, 0)].re - 0.85).abs() < 1e-16);
    }

    #[test]
    fn pade_13_matches_scalar_exp() {
        let x = M::from_real_rows(&[&[0.1]]).unwrap();
        let (p, q) = pade_numerator_denominator(&x, 13).unwrap();
        let r = p[(0, 0)].re / q[(0, 0)].re;
        assert!((r - 0.1f64.exp()).abs() <= 1e-16 * 0.1f64.exp() * 2.0);
    }

    #[test]
    fn exponential_of_zero_and_nilpotent() {
        let nil = M::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let expect = M::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        for cfg in both() {
            assert_eq!(expm(&M::zeros(3, 3), &cfg).unwrap(), M::identity(3));
            let e = expm(&nil, &cfg).unwrap();
            assert!(spectral_norm(&(&e - &expect)).unwrap() <= 1e-15);
            // Forced scaling exercises the squaring phase of both backends.
            let forced = ExpmConfig { scaling_override: Some(3), ..cfg };
            let e = expm(&nil, &forced).unwrap();
            assert!(spectral_norm(&(&e - &expect)).unwrap() <= 1e-14);
        }
    }

    #[test]
    fn scalar_exponentials_with_scaling() {
        for x in [-7.5, -1.0, 0.4, 3.0, 20.0] {
            let m = M::from_real_rows(&[&[x]]).unwrap();
            for cfg in both() {
                let out = expm_detailed(&m, &cfg).unwrap();
                assert!((out.value[(0, 0)].re - x.exp()).abs() <= 1e-13 * x.exp(), "x={x} {cfg:?}");
                assert_eq!(out.s, select_scaling(&m, 13).unwrap());
                assert_eq!(out.a_s.is_some(), cfg.squaring_backend == SquaringBackend::Irs);
            }
        }
    }

    #[test]
    fn similarity_oracle_n32() {
        let (m, oracle, _, _) = similarity_instance(32, 3, 0.5);
        for cfg in both() {
            let e = expm(&m, &cfg).unwrap();
            assert!(rel(&e, &oracle) <= 1e-10, "{cfg:?}: {:e}", rel(&e, &oracle));
        }
    }

    #[test]
    fn eigenpairs_are_exponentiated() {
        let (m, _, v, d) = similarity_instance(12, 8, 1.0);
        for cfg in both() {
            let e = expm(&m, &cfg).unwrap();
            for k in 0..d.len() {
                let vk = v.column(k);
                let ev = e.apply(&vk);
                let target = d[k].exp();
                let res: f64 = ev.iter().zip(&vk).map(|(a, b)| (a - b * target).norm_sqr()).sum::<f64>().sqrt();
                let scale: f64 = vk.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() * target.norm();
                assert!(res <= 1e-8 * scale, "{cfg:?} k={k}");
            }
        }
    }

    #[test]
    fn spectral_radius_ceiling() {
        let (m, _, v, _) = similarity_instance(16, 5, 0.1);
        let kappa = kernels::condition_number(&v).unwrap();
        for cfg in both() {
            let e = expm(&m, &cfg).unwrap();
            assert!(spectral_norm(&e).unwrap() <= std::f64::consts::E * kappa);
        }
    }

    #[test]
    fn rejects_bad_config_and_singular_denominator() {
        let bad = ExpmConfig { pade_degree: 4, ..ExpmConfig::default() };
        assert!(expm(&M::identity(2), &bad).is_err());
        // q_3(x) = 1 - x/2 + x^2/10 - x^3/120 has a real root near x = 4.64.
        let root = {
            let q = |x: f64| 1.0 - x / 2.0 + x * x / 10.0 - x * x * x / 120.0;
            let (mut lo, mut hi) = (4.0, 5.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if q(lo) * q(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let cfg = ExpmConfig { pade_degree: 3, scaling_override: Some(0), ..ExpmConfig::default() };
        let m = M::from_fn(16, 16, |i, j| Complex::new(if i == 0 && j == 0 { root } else { 0.0 }, 0.0));
        let got = expm(&m, &cfg);
        assert!(matches!(got, Err(Error::SingularPadeDenominator { .. })), "{got:?}");
    }

    #[test]
    fn backend_names_parse() {
        assert_eq!("irs".parse::<SquaringBackend>().unwrap(), SquaringBackend::Irs);
        assert_eq!("Explicit".parse::<SquaringBackend>().unwrap(), SquaringBackend::Explicit);
        assert!("taylor".parse::<SquaringBackend>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn backends_agree_on_benign_inputs(seed in any::<u64>(), n in 2usize..=12, scale in 0.05f64..1.0) {
            let g: M = ginibre_from_rng(n, n, &mut seeded_rng(seed));
            let m = g.scale_real(scale / spectral_norm(&g).unwrap());
            let ex = expm(&m, &ExpmConfig::with_backend(SquaringBackend::Explicit)).unwrap();
            let ir = expm(&m, &ExpmConfig::with_backend(SquaringBackend::Irs)).unwrap();
            prop_assert!(rel(&ir, &ex) <= 1e-11);
        }
    }
}
