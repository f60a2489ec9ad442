//! Householder QR for complex matrices with `rows >= cols`.

use num_complex::Complex;
use num_traits::{One, Zero};

use super::matrix::ComplexMatrix;
use super::real::Real;
use crate::error::{Error, Result};

/// Full QR factorization `A = Q R` with `Q` square and `R` trapezoidal.
///
/// The diagonal of `R` is real and nonnegative with an exactly zero imaginary
/// part. Everything strictly below the diagonal of `R` is an exact zero.
#[derive(Clone, Debug)]
pub struct FullQr<T> {
    pub q: ComplexMatrix<T>,
    pub r: ComplexMatrix<T>,
}

impl<T: Real> FullQr<T> {
    /// First `cols` columns of `Q` and the leading square block of `R`.
    pub fn reduced(&self) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
        let n = self.r.cols();
        (self.q.block(0, 0, self.q.rows(), n), self.r.block(0, 0, n, n))
    }
}

/// Compact Householder factorization in column-major storage.
///
/// `R` lives on and above the diagonal of `work`; the essential part of each
/// reflector `v_k` (with implicit leading 1) lives below it. The reflectors
/// satisfy `H_k^H ... H_0^H A = R` with `H_k = I - tau_k v_k v_k^H`.
pub(crate) struct Householder<T> {
    m: usize,
    n: usize,
    work: Vec<Complex<T>>,
    tau: Vec<Complex<T>>,
}

#[inline]
fn dot_conj<T: Real>(v: &[Complex<T>], x: &[Complex<T>]) -> Complex<T> {
    let mut re = T::zero();
    let mut im = T::zero();
    for (a, b) in v.iter().zip(x) {
        // conj(a) * b
        re += a.re * b.re + a.im * b.im;
        im += a.re * b.im - a.im * b.re;
    }
    Complex::new(re, im)
}

#[inline]
fn axpy<T: Real>(alpha: Complex<T>, v: &[Complex<T>], y: &mut [Complex<T>]) {
    for (yi, vi) in y.iter_mut().zip(v) {
        yi.re -= alpha.re * vi.re - alpha.im * vi.im;
        yi.im -= alpha.re * vi.im + alpha.im * vi.re;
    }
}

/// Applies `I - tau v v^H` (with `v[0] = 1` implicit) to the column `x`.
#[inline]
fn reflect<T: Real>(v_tail: &[Complex<T>], tau: Complex<T>, x: &mut [Complex<T>]) {
    let w = x[0] + dot_conj(v_tail, &x[1..]);
    let s = tau * w;
    x[0] -= s;
    axpy(s, v_tail, &mut x[1..]);
}

impl<T: Real> Householder<T> {
    pub(crate) fn factor(a: &ComplexMatrix<T>) -> Result<Self> {
        let (m, n) = a.shape();
        if m < n {
            return Err(Error::WideQr { rows: m, cols: n });
        }
        let mut work = a.to_col_major();
        let mut tau = vec![Complex::zero(); n];
        for k in 0..n {
            let (head, tail) = work.split_at_mut((k + 1) * m);
            let col = &mut head[k * m..];
            let t = Self::make_reflector(&mut col[k..]);
            tau[k] = t;
            if t != Complex::zero() {
                let v_tail = &col[k + 1..];
                let t_conj = t.conj();
                for j in 0..(n - k - 1) {
                    let x = &mut tail[j * m + k..(j + 1) * m];
                    reflect(v_tail, t_conj, x);
                }
            }
        }
        Ok(Self { m, n, work, tau })
    }

    /// Overwrites `x = (alpha; x_tail)` with `(beta; v_tail)` and returns
    /// `tau` such that `(I - tau v v^H)^H x = beta e_1` with `beta` real.
    fn make_reflector(x: &mut [Complex<T>]) -> Complex<T> {
        let alpha = x[0];
        let tail_sq: T = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail_sq == T::zero() && alpha.im == T::zero() {
            return Complex::zero();
        }
        let norm = (alpha.norm_sqr() + tail_sq).sqrt();
        let beta = if alpha.re >= T::zero() { -norm } else { norm };
        let tau = Complex::new((beta - alpha.re) / beta, -alpha.im / beta);
        let scale = Complex::<T>::one() / (alpha - Complex::new(beta, T::zero()));
        for z in &mut x[1..] {
            *z = *z * scale;
        }
        x[0] = Complex::new(beta, T::zero());
        tau
    }

    fn v_tail(&self, k: usize) -> &[Complex<T>] {
        &self.work[k * self.m + k + 1..(k + 1) * self.m]
    }

    pub(crate) fn r_diag(&self, k: usize) -> Complex<T> {
        self.work[k * self.m + k]
    }

    /// Entry `(i, j)` of the unnormalized `R` (valid for `i <= j`).
    pub(crate) fn r_entry(&self, i: usize, j: usize) -> Complex<T> {
        self.work[j * self.m + i]
    }

    /// Full unitary factor `H_0 H_1 ... H_{n-1}` in column-major order.
    fn q_col_major(&self) -> Vec<Complex<T>> {
        let m = self.m;
        let mut q = vec![Complex::zero(); m * m];
        for i in 0..m {
            q[i * m + i] = Complex::one();
        }
        for k in (0..self.n).rev() {
            let t = self.tau[k];
            if t == Complex::zero() {
                continue;
            }
            let v_tail = self.v_tail(k).to_vec();
            for j in k..m {
                reflect(&v_tail, t, &mut q[j * m + k..(j + 1) * m]);
            }
        }
        q
    }

    /// `Q^H` applied to an `m x c` column-major block, in place.
    pub(crate) fn apply_qh(&self, b: &mut [Complex<T>], c: usize) {
        let m = self.m;
        for k in 0..self.n {
            let t = self.tau[k];
            if t == Complex::zero() {
                continue;
            }
            let t_conj = t.conj();
            let v_tail = self.v_tail(k);
            for j in 0..c {
                reflect(v_tail, t_conj, &mut b[j * m + k..(j + 1) * m]);
            }
        }
    }

    /// Assembles the phase-normalized full factorization.
    pub(crate) fn into_full(self) -> FullQr<T> {
        let (m, n) = (self.m, self.n);
        let mut q = self.q_col_major();
        let mut r = ComplexMatrix::zeros(m, n);
        for j in 0..n {
            for i in 0..=j {
                r[(i, j)] = self.r_entry(i, j);
            }
        }
        for k in 0..n {
            let d = r[(k, k)];
            let mag = d.norm();
            if mag > T::zero() {
                let phase = d / mag;
                let phase_conj = phase.conj();
                for j in k..n {
                    r[(k, j)] = r[(k, j)] * phase_conj;
                }
                for z in &mut q[k * m..(k + 1) * m] {
                    *z = *z * phase;
                }
            }
            r[(k, k)] = Complex::new(mag, T::zero());
        }
        FullQr {
            q: ComplexMatrix::from_col_major(m, m, &q),
            r,
        }
    }
}

/// Full QR of an `m x n` matrix with `m >= n`.
pub(crate) fn full_qr_uncounted<T: Real>(a: &ComplexMatrix<T>) -> Result<FullQr<T>> {
    Ok(Householder::factor(a)?.into_full())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflector_zeroes_tail_with_real_beta() {
        let mut x = vec![
            Complex::new(0.3, -1.2),
            Complex::new(2.0, 0.5),
            Complex::new(-0.7, 0.1),
        ];
        let orig = x.clone();
        let tau = Householder::<f64>::make_reflector(&mut x);
        let beta = x[0];
        assert_eq!(beta.im, 0.0);
        let v_tail = x[1..].to_vec();
        let mut y = orig.clone();
        reflect(&v_tail, tau.conj(), &mut y);
        assert!((y[0] - beta).norm() < 1e-14);
        assert!(y[1].norm() < 1e-14 && y[2].norm() < 1e-14);
    }

    #[test]
    fn real_diagonal_already_handled_without_reflection() {
        let mut x = vec![Complex::new(-2.0, 0.0)];
        let tau = Householder::<f64>::make_reflector(&mut x);
        assert_eq!(tau, Complex::zero());
        assert_eq!(x[0], Complex::new(-2.0, 0.0));
    }
}
