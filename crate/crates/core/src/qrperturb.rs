//! Perturbation of QR factorizations in the spectral norm.
//!
//! Three ingredients and one certificate:
//!
//! * [`sun_alpha`]: `alpha(eps) = ln(1/(1 - eps)) / eps`.
//! * [`lebesgue_constant`] and [`triangular_norm_check`]: for `L` lower
//!   triangular with real diagonal, `||L||_2 <= (1/2 + L_{n+1}) ||L + L^H||_2`,
//!   and the looser `(ln(n+1) + 3) ||L + L^H||_2`.
//! * [`align_complement`]: given two unitary matrices whose leading `n`
//!   columns are `delta`-close, a unitary `W` with `||Q_2 - U_2 W||_2 <= 4 delta`.
//! * [`qr_perturb_certificate`]: checks, on a concrete `(A, E)`, that the
//!   Q-factor drift is below `(2 ln(n+1) + 7) ln(1/(1 - ||A^+||_2 ||E||_2))`.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::kernels::{self, ComplexMatrix, Real};

/// Below this `eps`, [`sun_alpha`] returns the series `1 + eps/2`.
pub const ALPHA_SERIES_CUTOFF: f64 = 1e-8;

/// `alpha(eps) = (1/eps) ln(1/(1 - eps))` for `0 < eps < 1`.
pub fn sun_alpha(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("sun_alpha needs 0 < eps < 1, got {eps}")));
    }
    if eps < ALPHA_SERIES_CUTOFF {
        return Ok(1.0 + eps / 2.0);
    }
    Ok(-(-eps).ln_1p() / eps)
}

// 15-point Kronrod nodes on [-1, 1] (nonnegative half) with their weights, and
// the weights of the embedded 7-point Gauss rule at the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (k, err) = gauss_kronrod(f, a, b);
    if err <= tol || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1)
}

/// `|D_k(theta)| = |sin((k + 1/2) theta) / sin(theta / 2)|`, with the limit
/// `2k + 1` at `theta = 0`.
pub fn dirichlet_abs(k: usize, theta: f64) -> f64 {
    let half = 0.5 * theta;
    let s = half.sin();
    if s.abs() < 1e-300 {
        return (2 * k + 1) as f64;
    }
    ((2 * k + 1) as f64 * half).sin().abs() / s.abs()
}

/// `L_k = (1/2pi) int_{-pi}^{pi} |D_k|`, integrated piecewise between the zeros
/// `2 pi j / (2k + 1)` where `|D_k|` is smooth.
pub fn lebesgue_constant(k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let f = |t: f64| dirichlet_abs(k, t);
    let step = 2.0 * PI / (2 * k + 1) as f64;
    let mut total = 0.0;
    let mut lo = 0.0;
    for j in 1..=k + 1 {
        let hi = if j == k + 1 { PI } else { j as f64 * step };
        let (rough, _) = gauss_kronrod(&f, lo, hi);
        total += adaptive(&f, lo, hi, 1e-12 * rough.abs(), 10);
        lo = hi;
    }
    total / PI
}

/// `L_k <= ln k + ln pi + (2/pi)(1 + 2/k)`, for `k >= 1`.
pub fn lebesgue_upper_bound(k: usize) -> f64 {
    let k = k as f64;
    k.ln() + PI.ln() + (2.0 / PI) * (1.0 + 2.0 / k)
}

/// The three sides of the triangular norm inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangularNormCheck {
    /// `||L||_2`.
    pub lhs: f64,
    /// `(1/2 + L_{n+1}) ||L + L^H||_2`.
    pub rhs_exact: f64,
    /// `(ln(n+1) + 3) ||L + L^H||_2`.
    pub rhs_loose: f64,
    /// `||L + L^H||_2`.
    pub hermitian_norm: f64,
}

impl TriangularNormCheck {
    /// `||L||_2 / ||L + L^H||_2`; zero for `L = 0`, infinite when only the
    /// Hermitian part vanishes.
    pub fn ratio(&self) -> f64 {
        if self.hermitian_norm > 0.0 {
            self.lhs / self.hermitian_norm
        } else if self.lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Evaluates both sides of the inequality for `L` lower triangular with a real
/// diagonal (both checked exactly).
pub fn triangular_norm_check<T: Real>(l: &ComplexMatrix<T>) -> Result<TriangularNormCheck> {
    if !l.is_square() {
        return Err(Error::NotSquare { op: "triangular_norm_check", rows: l.rows(), cols: l.cols() });
    }
    let n = l.rows();
    for i in 0..n {
        if l[(i, i)].im != T::zero() {
            return Err(Error::NotLowerTriangular(format!("diagonal entry ({i}, {i}) is not real")));
        }
        for j in i + 1..n {
            if l[(i, j)] != Complex::new(T::zero(), T::zero()) {
                return Err(Error::NotLowerTriangular(format!("entry ({i}, {j}) above the diagonal is nonzero")));
            }
        }
    }
    let lhs = kernels::spectral_norm(l)?.as_f64();
    let herm = kernels::spectral_norm(&(l + &l.adjoint()))?.as_f64();
    Ok(TriangularNormCheck {
        lhs,
        rhs_exact: (0.5 + lebesgue_constant(n + 1)) * herm,
        rhs_loose: ((n as f64 + 1.0).ln() + 3.0) * herm,
        hermitian_norm: herm,
    })
}

/// Strictly lower triangular `L_{jk} = i / (j - k)`. Its Hermitian part is `i`
/// times a skew-symmetric Hilbert-type matrix with norm below `pi`, while
/// `||L||_2` grows like `log n`.
pub fn log_growth_triangle(n: usize) -> ComplexMatrix<f64> {
    ComplexMatrix::from_fn(n, n, |j, k| {
        if j > k {
            Complex::new(0.0, 1.0 / (j - k) as f64)
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}

/// Output of [`align_complement`].
#[derive(Clone, Debug)]
pub struct Alignment<T> {
    pub w: ComplexMatrix<T>,
    /// `||Q_2 - U_2 W||_2`.
    pub residual: f64,
    /// `||Q_1 - U_1||_2`.
    pub leading_gap: f64,
}

fn unitarity_defect<T: Real>(q: &ComplexMatrix<T>) -> Result<f64> {
    let g = kernels::matmul_uncounted(&q.adjoint(), q)?;
    Ok(kernels::spectral_norm(&(&g - &ComplexMatrix::identity(q.cols())))?.as_f64())
}

/// For `2n x 2n` unitary `Q = [Q_1 Q_2]`, `U = [U_1 U_2]`, the unitary
/// `W = V_1 V_2^H` built from the SVD `U_2^H Q_2 = V_1 S V_2^H`.
pub fn align_complement<T: Real>(q: &ComplexMatrix<T>, u: &ComplexMatrix<T>) -> Result<Alignment<T>> {
    if !q.is_square() || q.rows() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "align_complement needs square inputs of even order, got {}x{}",
            q.rows(),
            q.cols()
        )));
    }
    if q.shape() != u.shape() {
        return Err(Error::DimensionMismatch {
            op: "align_complement",
            left_rows: q.rows(),
            left_cols: q.cols(),
            right_rows: u.rows(),
            right_cols: u.cols(),
        });
    }
    let n = q.rows() / 2;
    let limit = 100.0 * n as f64 * T::UNIT_ROUNDOFF.as_f64();
    for m in [q, u] {
        let deviation = unitarity_defect(m)?;
        if deviation > limit {
            return Err(Error::NotUnitary { deviation });
        }
    }
    let q1 = q.block(0, 0, 2 * n, n);
    let q2 = q.block(0, n, 2 * n, n);
    let u1 = u.block(0, 0, 2 * n, n);
    let u2 = u.block(0, n, 2 * n, n);
    let s = kernels::svd(&kernels::matmul_uncounted(&u2.adjoint(), &q2)?)?;
    let w = kernels::matmul_uncounted(&s.u, &s.v.adjoint())?;
    let residual = kernels::spectral_norm(&(&q2 - &kernels::matmul_uncounted(&u2, &w)?))?.as_f64();
    let leading_gap = kernels::spectral_norm(&(&q1 - &u1))?.as_f64();
    Ok(Alignment { w, residual, leading_gap })
}

/// Measured drift of the Q factor against its theoretical ceiling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbCertificate {
    /// `||Q_{A+E} - Q_A||_2` (reduced factors, positive diagonal of R).
    pub empirical_w_norm: f64,
    /// `(2 ln(n+1) + 7) alpha(x) kappa_2(A) ||E||_2 / ||A||_2` with `x` below;
    /// infinite when the certificate is not valid.
    pub bound_value: f64,
    /// `x = ||A^+||_2 ||E||_2`.
    pub alpha_arg: f64,
    /// `x < 1`, the theorem's hypothesis.
    pub valid: bool,
    /// Roundoff allowance used by [`PerturbCertificate::holds`].
    pub slack: f64,
}

impl PerturbCertificate {
    /// Invalid certificates make no claim and always hold.
    pub fn holds(&self) -> bool {
        !self.valid || self.empirical_w_norm <= self.bound_value + self.slack
    }
}

/// Compares reduced QR factors of `A` and `A + E` (`m x n`, `m >= n`, rank `n`).
///
/// Both factorizations are normalized to a positive diagonal of `R`, which is
/// exactly the uniqueness condition of the theorem, so the difference of the Q
/// factors is the theorem's `W` and no gauge fixing is needed.
pub fn qr_perturb_certificate<T: Real>(a: &ComplexMatrix<T>, e: &ComplexMatrix<T>) -> Result<PerturbCertificate> {
    if a.shape() != e.shape() {
        return Err(Error::DimensionMismatch {
            op: "qr_perturb_certificate",
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: e.rows(),
            right_cols: e.cols(),
        });
    }
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::WideQr { rows: m, cols: n });
    }
    let sv = kernels::singular_values(a)?;
    let a_norm = sv[0].as_f64();
    let sigma_n = sv[n - 1].as_f64();
    let u = T::UNIT_ROUNDOFF.as_f64();
    if !(sigma_n > n as f64 * u * a_norm) {
        return Err(Error::RankDeficient { sigma_min: sigma_n });
    }
    let e_norm = kernels::spectral_norm(e)?.as_f64();
    let x = e_norm / sigma_n;
    let qa = kernels::full_qr_uncounted(a)?.reduced().0;
    let qae = kernels::full_qr_uncounted(&a.checked_add(e)?)?.reduced().0;
    let empirical = kernels::spectral_norm(&(&qae - &qa))?.as_f64();
    let slack = 50.0 * m as f64 * u;
    let constant = 2.0 * (n as f64 + 1.0).ln() + 7.0;
    let (bound_value, valid) = if x == 0.0 {
        (0.0, true)
    } else if x < 1.0 {
        let kappa = a_norm / sigma_n;
        (constant * sun_alpha(x)? * kappa * e_norm / a_norm, true)
    } else {
        (f64::INFINITY, false)
    };
    Ok(PerturbCertificate { empirical_w_norm: empirical, bound_value, alpha_arg: x, valid, slack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators::{gen_haar, ginibre_from_rng, haar_from_rng, seeded_rng};
    use crate::kernels::spectral_norm;
    use proptest::prelude::*;

    type M = ComplexMatrix<f64>;

    /// `L_k = 1/(2k+1) + (2/pi) sum_{j=1}^k tan(pi j/(2k+1)) / j`.
    fn lebesgue_closed_form(k: usize) -> f64 {
        let m = (2 * k + 1) as f64;
        1.0 / m + (2.0 / PI) * (1..=k).map(|j| (PI * j as f64 / m).tan() / j as f64).sum::<f64>()
    }

    /// Composite trapezoid on each smooth piece of `|D_k|` at `per_piece` and
    /// `per_piece/2` panels, combined by one Richardson step.
    fn lebesgue_trapezoid(k: usize, per_piece: usize) -> f64 {
        let step = 2.0 * PI / (2 * k + 1) as f64;
        let mut edges: Vec<f64> = (0..=k).map(|j| j as f64 * step).collect();
        edges.push(PI);
        let trap = |a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let inner: f64 = (1..n).map(|i| dirichlet_abs(k, a + i as f64 * h)).sum();
            h * (inner + 0.5 * (dirichlet_abs(k, a) + dirichlet_abs(k, b)))
        };
        let total = |n: usize| edges.windows(2).map(|w| trap(w[0], w[1], n)).sum::<f64>() / PI;
        (4.0 * total(per_piece) - total(per_piece / 2)) / 3.0
    }

    #[test]
    fn alpha_values() {
        assert!((sun_alpha(1e-12).unwrap() - 1.0).abs() < 1e-11);
        assert!((sun_alpha(0.5).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((sun_alpha(0.9).unwrap() - 2.558427881104495).abs() < 1e-12);
        // Both sides of the series cutoff agree with 1 + x/2 + x^2/3.
        for x in [ALPHA_SERIES_CUTOFF * 0.999, ALPHA_SERIES_CUTOFF * 1.001] {
            let series = 1.0 + x / 2.0 + x * x / 3.0;
            assert!((sun_alpha(x).unwrap() - series).abs() < 1e-15);
        }
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(sun_alpha(bad).is_err());
        }
    }

    #[test]
    fn lebesgue_matches_oracles() {
        assert_eq!(lebesgue_constant(0), 1.0);
        let l1 = lebesgue_constant(1);
        let trap = lebesgue_trapezoid(1, 4096);
        assert!((l1 - trap).abs() <= 1e-8 * trap, "{l1} vs {trap}");
        assert!((l1 - (1.0 / 3.0 + 3f64.sqrt() * 2.0 / PI)).abs() < 1e-14);
        for k in [2, 7, 30, 200] {
            let exact = lebesgue_closed_form(k);
            assert!((lebesgue_constant(k) - exact).abs() <= 1e-12 * exact, "k={k}");
        }
    }

    #[test]
    fn lebesgue_bound_and_growth() {
        let mut prev = lebesgue_constant(1);
        for k in 1..=300 {
            let lk = lebesgue_constant(k);
            assert!(lk <= lebesgue_upper_bound(k), "k={k}");
            if k > 1 {
                assert!(lk >= prev, "k={k}");
            }
            prev = lk;
        }
    }

    #[test]
    fn triangular_check_identity_and_zero() {
        let c = triangular_norm_check(&M::identity(5)).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-15);
        assert!((c.rhs_exact - 2.0 * (0.5 + lebesgue_constant(6))).abs() < 1e-12);
        assert!(c.rhs_exact >= 2.0 && c.lhs <= c.rhs_exact);
        let z = triangular_norm_check(&M::zeros(4, 4)).unwrap();
        assert_eq!((z.lhs, z.rhs_exact, z.rhs_loose), (0.0, 0.0, 0.0));
    }

    #[test]
    fn triangular_check_rejects_bad_input() {
        let mut upper = M::identity(3);
        upper[(0, 2)] = Complex::new(1.0, 0.0);
        assert!(matches!(triangular_norm_check(&upper), Err(Error::NotLowerTriangular(_))));
        let mut cdiag = M::identity(3);
        cdiag[(1, 1)] = Complex::new(1.0, 1e-300);
        assert!(matches!(triangular_norm_check(&cdiag), Err(Error::NotLowerTriangular(_))));
    }

    #[test]
    fn log_growth_triangle_ratio_increases() {
        let mut last = 0.0;
        for n in [8, 32, 128] {
            let l = log_growth_triangle(n);
            let c = triangular_norm_check(&l).unwrap();
            assert!(c.hermitian_norm < PI);
            let ratio = c.ratio();
            assert!(ratio > last, "n={n}: {ratio} after {last}");
            assert!(c.lhs <= c.rhs_exact);
            last = ratio;
        }
    }

    #[test]
    fn alignment_of_equal_unitaries() {
        let q: M = gen_haar(8, 1);
        let al = align_complement(&q, &q).unwrap();
        assert!(al.residual <= 1e-13);
        assert_eq!(al.leading_gap, 0.0);
    }

    #[test]
    fn alignment_absorbs_gauge_of_the_complement() {
        let n = 4;
        let mut rng = seeded_rng(2);
        let q: M = haar_from_rng(2 * n, &mut rng);
        let g: M = haar_from_rng(n, &mut rng);
        let mut u = q.clone();
        u.set_block(0, n, &kernels::matmul(&q.block(0, n, 2 * n, n), &g).unwrap());
        let al = align_complement(&q, &u).unwrap();
        assert!(al.residual <= 1e-12);
        let wg = kernels::matmul(&g, &al.w).unwrap();
        assert!(spectral_norm(&(&wg - &M::identity(n))).unwrap() <= 1e-12);
    }

    #[test]
    fn alignment_rejects_non_unitary() {
        let q: M = gen_haar(4, 3);
        assert!(matches!(align_complement(&q.scale_real(1.1), &q), Err(Error::NotUnitary { .. })));
        assert!(align_complement(&M::identity(3), &M::identity(3)).is_err());
    }

    #[test]
    fn certificate_zero_perturbation() {
        let a: M = ginibre_from_rng(6, 3, &mut seeded_rng(4));
        let c = qr_perturb_certificate(&a, &M::zeros(6, 3)).unwrap();
        assert!(c.empirical_w_norm <= 1e-13);
        assert_eq!(c.bound_value, 0.0);
        assert!(c.valid && c.holds());
    }

    #[test]
    fn certificate_identity_plus_scaled_identity() {
        let n = 5;
        let delta = 1e-4;
        let c = qr_perturb_certificate(&M::identity(n), &M::identity(n).scale_real(delta)).unwrap();
        assert_eq!(c.empirical_w_norm, 0.0);
        let expect = (2.0 * (n as f64 + 1.0).ln() + 7.0) * sun_alpha(delta).unwrap() * delta;
        assert!((c.bound_value - expect).abs() <= 1e-15 * expect);
        assert!(c.holds());
    }

    #[test]
    fn certificate_invalid_and_rank_deficient() {
        let a = M::identity(3);
        let c = qr_perturb_certificate(&a, &a.scale_real(2.0)).unwrap();
        assert!(!c.valid && c.holds());
        let mut r = M::identity(3);
        r[(2, 2)] = Complex::new(0.0, 0.0);
        assert!(matches!(qr_perturb_certificate(&r, &a), Err(Error::RankDeficient { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn random_triangles_satisfy_the_inequality(seed in any::<u64>(), n in 1usize..=16) {
            let g: M = ginibre_from_rng(n, n, &mut seeded_rng(seed));
            let l = ComplexMatrix::from_fn(n, n, |i, j| {
                if i > j { g[(i, j)] } else if i == j { Complex::new(g[(i, j)].re, 0.0) } else { Complex::new(0.0, 0.0) }
            });
            let c = triangular_norm_check(&l).unwrap();
            prop_assert!(c.lhs <= c.rhs_exact * (1.0 + 1e-12));
            prop_assert!(c.rhs_exact <= c.rhs_loose * (1.0 + 1e-12));
        }

        #[test]
        fn certificate_never_violated(seed in any::<u64>(), target in 1e-6f64..0.5) {
            let mut rng = seeded_rng(seed);
            let a: M = ginibre_from_rng(16, 8, &mut rng);
            let e: M = ginibre_from_rng(16, 8, &mut rng);
            let sigma_n = kernels::smallest_singular(&a).unwrap();
            let e = e.scale_real(target * sigma_n / spectral_norm(&e).unwrap());
            let c = qr_perturb_certificate(&a, &e).unwrap();
            prop_assert!(c.valid);
            prop_assert!(c.holds(), "{c:?}");
        }

        #[test]
        fn alignment_bound_holds(seed in any::<u64>(), delta in 1e-8f64..0.3) {
            let n = 4;
            let mut rng = seeded_rng(seed);
            let q: M = haar_from_rng(2 * n, &mut rng);
            let g: M = ginibre_from_rng(2 * n, n, &mut rng);
            let perturbed = q.block(0, 0, 2 * n, n).checked_add(&g.scale_real(delta)).unwrap();
            let u = kernels::full_qr(&perturbed).unwrap().q;
            let al = align_complement(&q, &u).unwrap();
            prop_assert!(al.residual <= 4.0 * al.leading_gap * (1.0 + 1e-6));
            let wdev = spectral_norm(&(&kernels::matmul(&al.w.adjoint(), &al.w).unwrap() - &M::identity(n))).unwrap();
            prop_assert!(wdev <= 100.0 * n as f64 * f64::UNIT_ROUNDOFF);
        }
    }
}
