//! Condition numbers for repeated squaring.
//!
//! The central object is the `mn x mn` block matrix (`m = 2^p`)
//!
//! ```text
//!          [ -A              -B ]
//!          [  B  -A             ]
//! M_p  =   [      B  -A         ]
//!          [          .   .     ]
//!          [              B  -A ]
//! ```
//!
//! Its block-circulant structure makes it unitarily similar to
//! `diag(-A + e^{i theta_j} B)` over the `m`-th roots of `-1`,
//! `theta_j = (2j - 1) pi / m`, so `sigma_min(M_p)` is a minimum of `m`
//! smallest singular values of `n x n` matrices. The IRS condition number is
//! `kappa_IRS = ||(A; B)||_2 / sigma_min(M_p)`.
//!
//! Also here: the distance `d` to the nearest pencil with an eigenvalue on the
//! unit circle, `min_theta sigma_n(-A + e^{i theta} B)`, and Malyshev's `omega`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::kernels::{self, ComplexMatrix, Real};

/// Largest `m n` for which [`build_mp_dense`] will form `M_p`.
pub const DENSE_ORDER_LIMIT: usize = 4096;
pub const DEFAULT_GRID_POINTS: usize = 256;
pub const DEFAULT_REFINE_ITERS: usize = 40;
pub const DEFAULT_QUAD_POINTS: usize = 512;
/// Relative agreement between successive quadrature estimates of `omega`.
pub const OMEGA_REL_TOL: f64 = 1e-6;
/// Number of node doublings tried before the last estimate is returned.
pub const OMEGA_MAX_DOUBLINGS: usize = 6;
/// Slack of the inequality chain, relative to `||(A; B)||_2`.
pub const CHAIN_REL_SLACK: f64 = 1e-8;

fn check_pair<T: Real>(op: &'static str, a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare { op, rows: a.rows(), cols: a.cols() });
    }
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            op,
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: b.rows(),
            right_cols: b.cols(),
        });
    }
    Ok(())
}

fn blocks(p: u32) -> Result<usize> {
    if p == 0 {
        return Err(Error::InvalidArgument("M_p needs p >= 1".into()));
    }
    if p >= usize::BITS - 1 {
        return Err(Error::InvalidArgument(format!("p = {p} is too large")));
    }
    Ok(1usize << p)
}

/// `theta_j = (2j - 1) pi / m` for `j = 1..m`.
pub fn roots_of_minus_one(m: usize) -> Vec<f64> {
    (1..=m).map(|j| (2 * j - 1) as f64 * PI / m as f64).collect()
}

/// `-A + e^{i theta} B`.
pub fn circle_combination<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>, theta: f64) -> ComplexMatrix<T> {
    let (s, c) = theta.sin_cos();
    let z = Complex::new(T::of_f64(c), T::of_f64(s));
    ComplexMatrix::from_fn(a.rows(), a.cols(), |i, j| b[(i, j)] * z - a[(i, j)])
}

/// Dense `M_p(A, B)`; refused when `2^p n` exceeds [`DENSE_ORDER_LIMIT`].
pub fn build_mp_dense<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>, p: u32) -> Result<ComplexMatrix<T>> {
    check_pair("build_mp_dense", a, b)?;
    let m = blocks(p)?;
    let n = a.rows();
    let order = m.checked_mul(n).unwrap_or(usize::MAX);
    if order > DENSE_ORDER_LIMIT {
        return Err(Error::SizeGuard { order, limit: DENSE_ORDER_LIMIT });
    }
    let neg_a = -a;
    let neg_b = -b;
    let mut out = ComplexMatrix::zeros(order, order);
    for k in 0..m {
        out.set_block(k * n, k * n, &neg_a);
        if k > 0 {
            out.set_block(k * n, (k - 1) * n, b);
        }
    }
    if m > 1 {
        out.set_block(0, (m - 1) * n, &neg_b);
    } else {
        out = out.checked_add(&neg_b)?;
    }
    Ok(out)
}

/// `sigma_min(M_p(A, B))` from the root formula, without forming `M_p`.
pub fn sigma_min_mp<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>, p: u32) -> Result<T> {
    check_pair("sigma_min_mp", a, b)?;
    let m = blocks(p)?;
    let mut best = T::infinity();
    for theta in roots_of_minus_one(m) {
        let s = kernels::smallest_singular(&circle_combination(a, b, theta))?;
        if s < best {
            best = s;
        }
    }
    Ok(best)
}

/// `kappa_IRS`, with a distinguished state for a numerically zero
/// `sigma_min(M_p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KappaIrs {
    Finite(f64),
    Infinite,
}

impl KappaIrs {
    pub fn value(self) -> f64 {
        match self {
            KappaIrs::Finite(v) => v,
            KappaIrs::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, KappaIrs::Infinite)
    }
}

impl fmt::Display for KappaIrs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KappaIrs::Finite(v) => write!(f, "{v:.6e}"),
            KappaIrs::Infinite => f.write_str("infinite"),
        }
    }
}

fn kappa_from_parts(sigma_min: f64, stack_norm: f64, n: usize, u: f64) -> KappaIrs {
    if sigma_min < n as f64 * u * stack_norm || sigma_min == 0.0 {
        KappaIrs::Infinite
    } else {
        KappaIrs::Finite(stack_norm / sigma_min)
    }
}

/// `||(A; B)||_2 / sigma_min(M_p(A, B))`.
pub fn kappa_irs<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>, p: u32) -> Result<KappaIrs> {
    let sigma = sigma_min_mp(a, b, p)?.as_f64();
    let norm = kernels::stacked_norm(a, b)?.as_f64();
    Ok(kappa_from_parts(sigma, norm, a.rows(), T::UNIT_ROUNDOFF.as_f64()))
}

/// Minimizer and minimum of `sigma_n(-A + e^{i theta} B)` over the circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceEstimate {
    pub value: f64,
    pub theta: f64,
    /// Spacing of the coarse grid; the refinement only searches one spacing
    /// either side of the best grid point, so the estimate is an upper bound
    /// on the true minimum that may miss narrow dips elsewhere.
    pub grid_spacing: f64,
}

/// Grid search plus golden-section refinement of
/// `min_theta sigma_n(-A + e^{i theta} B)`.
pub fn distance_estimate<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    grid_points: usize,
    refine_iters: usize,
) -> Result<DistanceEstimate> {
    check_pair("distance_ill_posed", a, b)?;
    if grid_points < 8 {
        return Err(Error::InvalidArgument(format!("grid_points must be >= 8, got {grid_points}")));
    }
    let f = |theta: f64| -> Result<f64> {
        Ok(kernels::smallest_singular(&circle_combination(a, b, theta))?.as_f64())
    };
    let h = 2.0 * PI / grid_points as f64;
    let mut best = (0.0, f64::INFINITY);
    for k in 0..grid_points {
        let theta = k as f64 * h;
        let v = f(theta)?;
        if v < best.1 {
            best = (theta, v);
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best.0 - h, best.0 + h);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..refine_iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
        if f1.min(f2) < best.1 {
            best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        }
    }
    Ok(DistanceEstimate {
        value: best.1,
        theta: best.0.rem_euclid(2.0 * PI),
        grid_spacing: h,
    })
}

/// `d_(A,B)` estimated as in [`distance_estimate`].
pub fn distance_ill_posed<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    grid_points: usize,
    refine_iters: usize,
) -> Result<f64> {
    Ok(distance_estimate(a, b, grid_points, refine_iters)?.value)
}

/// Trapezoid sum of `(B - e^{i phi} A)^{-1} (A A^H + B B^H) (B - e^{i phi} A)^{-H}`
/// over the given nodes (unscaled).
fn omega_partial<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    gram: &ComplexMatrix<T>,
    nodes: impl Iterator<Item = f64>,
    floor: f64,
    acc: &mut ComplexMatrix<T>,
) -> Result<()> {
    let n = a.rows();
    for phi in nodes {
        // B - e^{i phi} A = -(-B + e^{i phi} A).
        let node = -&circle_combination(b, a, phi);
        let s = kernels::svd(&node)?;
        let sigma_n = s.smallest().as_f64();
        if !(sigma_n > floor) {
            return Err(Error::SingularQuadratureNode { phi, sigma_n });
        }
        // X = V diag(1/s) U^H.
        let x = ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).fold(Complex::new(T::zero(), T::zero()), |sum, k| {
                sum + s.v[(i, k)] * s.u[(j, k)].conj() / s.singular_values[k]
            })
        });
        let xg = kernels::matmul_uncounted(&x, gram)?;
        let term = kernels::matmul_uncounted(&xg, &x.adjoint())?;
        *acc = acc.checked_add(&term)?;
    }
    Ok(())
}

/// Outcome of the adaptive quadrature for `omega`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaEstimate {
    pub value: f64,
    pub nodes: usize,
    /// False when the doubling cap was reached before the relative change
    /// fell below [`OMEGA_REL_TOL`]; `value` is then the last estimate.
    pub converged: bool,
}

/// Malyshev's `omega_(A,B)` by adaptive trapezoid quadrature, starting from
/// `quad_points` nodes and doubling until successive estimates agree.
///
/// A node where `sigma_n(B - e^{i phi} A) <= n u ||(A; B)||_2` (an eigenvalue of
/// the pencil on or next to the unit circle) is an error naming `phi`.
pub fn omega_estimate<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    quad_points: usize,
) -> Result<OmegaEstimate> {
    check_pair("omega_malyshev", a, b)?;
    if quad_points < 2 {
        return Err(Error::InvalidArgument(format!("quad_points must be >= 2, got {quad_points}")));
    }
    let n = a.rows();
    let gram = kernels::matmul_uncounted(a, &a.adjoint())?
        .checked_add(&kernels::matmul_uncounted(b, &b.adjoint())?)?;
    let floor = n as f64 * T::UNIT_ROUNDOFF.as_f64() * kernels::stacked_norm(a, b)?.as_f64();

    let mut count = quad_points;
    let mut acc = ComplexMatrix::zeros(n, n);
    let h0 = 2.0 * PI / count as f64;
    omega_partial(a, b, &gram, (0..count).map(|k| k as f64 * h0), floor, &mut acc)?;
    let estimate = |acc: &ComplexMatrix<T>, count: usize| -> Result<f64> {
        let scale = T::of_f64(PI / count as f64);
        Ok(kernels::spectral_norm(&acc.scale_real(scale))?.as_f64())
    };
    let mut current = estimate(&acc, count)?;
    for _ in 0..OMEGA_MAX_DOUBLINGS {
        let h = 2.0 * PI / (2 * count) as f64;
        omega_partial(a, b, &gram, (0..count).map(|k| (2 * k + 1) as f64 * h), floor, &mut acc)?;
        count *= 2;
        let next = estimate(&acc, count)?;
        let change = (next - current).abs();
        current = next;
        if change <= OMEGA_REL_TOL * next.abs() {
            return Ok(OmegaEstimate { value: current, nodes: count, converged: true });
        }
    }
    Ok(OmegaEstimate { value: current, nodes: count, converged: false })
}

/// `omega_(A,B)`; see [`omega_estimate`].
pub fn omega_malyshev<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>, quad_points: usize) -> Result<f64> {
    Ok(omega_estimate(a, b, quad_points)?.value)
}

/// Status of one inequality of the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkStatus {
    Holds,
    Fails,
    /// The right-hand side could not be evaluated (a singular quadrature
    /// node makes `omega` infinite and the bound trivially true).
    Vacuous,
}

impl LinkStatus {
    fn from_bool(ok: bool) -> Self {
        if ok {
            LinkStatus::Holds
        } else {
            LinkStatus::Fails
        }
    }

    pub fn is_ok(self) -> bool {
        !matches!(self, LinkStatus::Fails)
    }
}

/// Every quantity of the chain
/// `sigma_n(B; -A) >= sigma_min(M_p) >= d > sqrt(sigma_n(A A^H + B B^H)) / (14 omega)`
/// with the verdict on each link.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub p: u32,
    pub stack_sigma_n: f64,
    pub sigma_min_mp: f64,
    pub kappa_irs: KappaIrs,
    pub d_ab: f64,
    pub d_theta: f64,
    pub d_grid_spacing: f64,
    /// `None` when a quadrature node was numerically singular.
    pub omega_ab: Option<f64>,
    pub omega_converged: bool,
    /// `sqrt(sigma_n(A A^H + B B^H)) / (14 omega)`, or `None` with `omega_ab`.
    pub omega_bound: Option<f64>,
    /// Absolute slack applied to every link.
    pub slack: f64,
    pub stack_vs_mp: LinkStatus,
    pub mp_vs_d: LinkStatus,
    pub d_vs_omega: LinkStatus,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.stack_vs_mp.is_ok() && self.mp_vs_d.is_ok() && self.d_vs_omega.is_ok()
    }
}

/// Evaluates the chain with the default estimator settings and a slack of
/// [`CHAIN_REL_SLACK`] `||(A; B)||_2`.
pub fn condition_chain_check<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>, p: u32) -> Result<ConditionReport> {
    check_pair("condition_chain_check", a, b)?;
    let n = a.rows();
    let stack_sv = kernels::singular_values(&ComplexMatrix::vstack(b, &-a)?)?;
    let stack_norm = stack_sv[0].as_f64();
    let stack_sigma_n = stack_sv[n - 1].as_f64();
    let sigma = sigma_min_mp(a, b, p)?.as_f64();
    let kappa = kappa_from_parts(sigma, stack_norm, n, T::UNIT_ROUNDOFF.as_f64());
    let dist = distance_estimate(a, b, DEFAULT_GRID_POINTS, DEFAULT_REFINE_ITERS)?;
    let slack = CHAIN_REL_SLACK * stack_norm;

    let (omega_ab, omega_converged) = match omega_estimate(a, b, DEFAULT_QUAD_POINTS) {
        Ok(o) => (Some(o.value), o.converged),
        Err(Error::SingularQuadratureNode { .. }) => (None, false),
        Err(e) => return Err(e),
    };
    let omega_bound = match omega_ab {
        Some(w) => {
            let gram = kernels::matmul_uncounted(a, &a.adjoint())?
                .checked_add(&kernels::matmul_uncounted(b, &b.adjoint())?)?;
            let s = kernels::smallest_singular(&gram)?.as_f64();
            Some(s.max(0.0).sqrt() / (14.0 * w))
        }
        None => None,
    };
    let d_vs_omega = match omega_bound {
        Some(rhs) => LinkStatus::from_bool(dist.value + slack > rhs),
        None => LinkStatus::Vacuous,
    };
    Ok(ConditionReport {
        p,
        stack_sigma_n,
        sigma_min_mp: sigma,
        kappa_irs: kappa,
        d_ab: dist.value,
        d_theta: dist.theta,
        d_grid_spacing: dist.grid_spacing,
        omega_ab,
        omega_converged,
        omega_bound,
        slack,
        stack_vs_mp: LinkStatus::from_bool(stack_sigma_n >= sigma - slack),
        mp_vs_d: LinkStatus::from_bool(sigma >= dist.value - slack),
        d_vs_omega,
    })
}
