//! One-sided (Hestenes) Jacobi SVD.
//!
//! Columns of a working copy of `A` are rotated pairwise until they are
//! mutually orthogonal to relative tolerance `n u`; the column norms are then
//! the singular values. This keeps small singular values accurate relative to
//! their own size, which the conditioning and perturbation code relies on.

use num_complex::Complex;
use num_traits::{One, Zero};

use super::matrix::ComplexMatrix;
use super::real::Real;
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 30;

/// Thin SVD `A = U diag(s) V^H` with `k = min(rows, cols)` singular triplets.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    pub u: ComplexMatrix<T>,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<T>,
    pub v: ComplexMatrix<T>,
}

impl<T: Real> Svd<T> {
    pub fn largest(&self) -> T {
        self.singular_values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn smallest(&self) -> T {
        self.singular_values.last().copied().unwrap_or_else(T::zero)
    }

    /// `sigma_1 / sigma_k`; infinite when the smallest value is zero.
    pub fn condition_number(&self) -> T {
        self.largest() / self.smallest()
    }

    /// `U diag(s) V^H`.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let (m, k) = self.u.shape();
        let n = self.v.rows();
        ComplexMatrix::from_fn(m, n, |i, j| {
            (0..k).fold(Complex::zero(), |acc, l| {
                acc + self.u[(i, l)] * self.singular_values[l] * self.v[(j, l)].conj()
            })
        })
    }
}

#[inline]
fn dot_conj<T: Real>(x: &[Complex<T>], y: &[Complex<T>]) -> Complex<T> {
    let mut re = T::zero();
    let mut im = T::zero();
    for (a, b) in x.iter().zip(y) {
        re += a.re * b.re + a.im * b.im;
        im += a.re * b.im - a.im * b.re;
    }
    Complex::new(re, im)
}

#[inline]
fn norm_sq<T: Real>(x: &[Complex<T>]) -> T {
    let mut s = T::zero();
    for z in x {
        s += z.re * z.re + z.im * z.im;
    }
    s
}

/// Rotates columns `p < q` of a column-major buffer with leading dimension `ld`:
/// `x' = c x - s conj(e) y`, `y' = s e x + c y`.
#[inline]
fn rotate<T: Real>(buf: &mut [Complex<T>], ld: usize, p: usize, q: usize, c: T, s: T, e: Complex<T>) {
    let (left, right) = buf.split_at_mut(q * ld);
    let x = &mut left[p * ld..(p + 1) * ld];
    let y = &mut right[..ld];
    let se = e * s;
    let sec = e.conj() * s;
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let a = *xi;
        let b = *yi;
        *xi = Complex::new(
            c * a.re - (sec.re * b.re - sec.im * b.im),
            c * a.im - (sec.re * b.im + sec.im * b.re),
        );
        *yi = Complex::new(
            c * b.re + (se.re * a.re - se.im * a.im),
            c * b.im + (se.re * a.im + se.im * a.re),
        );
    }
}

/// Orthogonalizes the columns of `work` (`m x n`, column-major, `m >= n`).
/// When `v` is supplied it accumulates the right rotations.
fn jacobi_sweeps<T: Real>(
    work: &mut [Complex<T>],
    m: usize,
    n: usize,
    mut v: Option<&mut [Complex<T>]>,
) -> Result<()> {
    let tol = T::of_usize(n.max(1)) * T::UNIT_ROUNDOFF;
    let mut norms: Vec<T> = (0..n).map(|j| norm_sq(&work[j * m..(j + 1) * m])).collect();
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == T::zero() || beta == T::zero() {
                    continue;
                }
                let gamma = dot_conj(&work[p * m..(p + 1) * m], &work[q * m..(q + 1) * m]);
                let g = gamma.norm();
                if g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (g + g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let e = gamma / g;
                rotate(work, m, p, q, c, s, e);
                if let Some(v) = v.as_deref_mut() {
                    rotate(v, n, p, q, c, s, e);
                }
                norms[p] = norm_sq(&work[p * m..(p + 1) * m]);
                norms[q] = norm_sq(&work[q * m..(q + 1) * m]);
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::NoConvergence { sweeps: MAX_SWEEPS })
}

fn sorted_order<T: Real>(values: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
    idx
}

/// Power of two bringing the largest entry near 1, so that squared column
/// norms neither underflow nor overflow. Exact for normal numbers.
fn balancing_exponent<T: Real>(a: &ComplexMatrix<T>) -> i32 {
    let big = a.max_abs();
    if big == T::zero() || !big.is_finite() {
        return 0;
    }
    let limit = T::max_value().log2().floor().as_f64() as i32 - 1;
    (big.log2().floor().as_f64() as i32).clamp(-limit, limit)
}

fn pow2<T: Real>(e: i32) -> T {
    T::of_f64(2f64.powi(e))
}

/// Singular values only, nonincreasing.
pub fn singular_values<T: Real>(a: &ComplexMatrix<T>) -> Result<Vec<T>> {
    let e = balancing_exponent(a);
    if e != 0 {
        let s = singular_values_unbalanced(&a.scale_real(pow2(-e)))?;
        return Ok(s.into_iter().map(|x| x * pow2(e)).collect());
    }
    singular_values_unbalanced(a)
}

fn singular_values_unbalanced<T: Real>(a: &ComplexMatrix<T>) -> Result<Vec<T>> {
    let (m, n) = a.shape();
    let (mut work, rows, cols) = if m >= n {
        (a.to_col_major(), m, n)
    } else {
        (a.adjoint().to_col_major(), n, m)
    };
    jacobi_sweeps(&mut work, rows, cols, None)?;
    let mut s: Vec<T> = (0..cols).map(|j| norm_sq(&work[j * rows..(j + 1) * rows]).sqrt()).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(s)
}

/// Thin SVD with singular vectors.
pub fn svd<T: Real>(a: &ComplexMatrix<T>) -> Result<Svd<T>> {
    let (m, n) = a.shape();
    if m < n {
        let t = svd(&a.adjoint())?;
        return Ok(Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    let e = balancing_exponent(a);
    if e != 0 {
        let mut out = svd(&a.scale_real(pow2(-e)))?;
        for x in &mut out.singular_values {
            *x = *x * pow2(e);
        }
        return Ok(out);
    }
    let mut work = a.to_col_major();
    let mut v = vec![Complex::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = Complex::one();
    }
    jacobi_sweeps(&mut work, m, n, Some(&mut v))?;
    let raw: Vec<T> = (0..n).map(|j| norm_sq(&work[j * m..(j + 1) * m]).sqrt()).collect();
    let order = sorted_order(&raw);

    let mut u_cols: Vec<Vec<Complex<T>>> = Vec::with_capacity(n);
    let mut v_sorted = vec![Complex::zero(); n * n];
    let mut singular_values = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let sigma = raw[src];
        singular_values.push(sigma);
        v_sorted[dst * n..(dst + 1) * n].copy_from_slice(&v[src * n..(src + 1) * n]);
        let col = &work[src * m..(src + 1) * m];
        if sigma > T::zero() {
            let inv = T::one() / sigma;
            u_cols.push(col.iter().map(|&z| z * inv).collect());
        } else {
            u_cols.push(vec![Complex::zero(); m]);
            deficient.push(dst);
        }
    }
    complete_orthonormal(&mut u_cols, &deficient, m);

    let mut u_flat = Vec::with_capacity(m * n);
    for col in &u_cols {
        u_flat.extend_from_slice(col);
    }
    Ok(Svd {
        u: ComplexMatrix::from_col_major(m, n, &u_flat),
        singular_values,
        v: ComplexMatrix::from_col_major(n, n, &v_sorted),
    })
}

/// Fills the columns listed in `missing` with unit vectors orthogonal to all
/// other columns (two passes of Gram-Schmidt against the standard basis).
fn complete_orthonormal<T: Real>(cols: &mut [Vec<Complex<T>>], missing: &[usize], m: usize) {
    let mut candidate = 0usize;
    for &slot in missing {
        while candidate < m {
            let mut e = vec![Complex::zero(); m];
            e[candidate] = Complex::one();
            candidate += 1;
            for _ in 0..2 {
                for (j, col) in cols.iter().enumerate() {
                    if j == slot || col.iter().all(|z| *z == Complex::zero()) {
                        continue;
                    }
                    let proj = dot_conj(col, &e);
                    for (ei, ci) in e.iter_mut().zip(col) {
                        *ei -= *ci * proj;
                    }
                }
            }
            let nrm = norm_sq(&e).sqrt();
            if nrm > T::of_f64(0.5) {
                let inv = T::one() / nrm;
                cols[slot] = e.into_iter().map(|z| z * inv).collect();
                break;
            }
        }
    }
}

pub fn spectral_norm<T: Real>(a: &ComplexMatrix<T>) -> Result<T> {
    Ok(singular_values(a)?.first().copied().unwrap_or_else(T::zero))
}

pub fn smallest_singular<T: Real>(a: &ComplexMatrix<T>) -> Result<T> {
    Ok(singular_values(a)?.last().copied().unwrap_or_else(T::zero))
}

/// `sigma_1 / sigma_min` via singular values.
pub fn condition_number<T: Real>(a: &ComplexMatrix<T>) -> Result<T> {
    let s = singular_values(a)?;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) => Ok(hi / lo),
        _ => Ok(T::one()),
    }
}

/// Cheap lower estimate of `||A||_2` by power iteration on `A^H A`.
pub(crate) fn power_norm_estimate<T: Real>(a: &ComplexMatrix<T>, iters: usize) -> T {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return T::zero();
    }
    // Deterministic start vector with no special structure.
    let mut x: Vec<Complex<T>> = (0..n)
        .map(|i| {
            let t = (i as f64 + 1.0) * 0.618_033_988_749_895;
            Complex::new(T::of_f64(1.0 + t.fract()), T::of_f64((2.0 * t).fract() - 0.5))
        })
        .collect();
    let mut est = T::zero();
    for _ in 0..iters {
        let nx = norm_sq(&x).sqrt();
        if nx == T::zero() || !nx.is_finite() {
            return if nx.is_finite() { T::zero() } else { T::infinity() };
        }
        let inv = T::one() / nx;
        for z in &mut x {
            *z = *z * inv;
        }
        let y = a.apply(&x);
        est = norm_sq(&y).sqrt();
        x = a.apply_adjoint(&y);
    }
    est
}
