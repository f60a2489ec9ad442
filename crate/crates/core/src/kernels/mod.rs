//! Dense complex kernels: multiplication, full QR, QR-based inversion and SVD.
//!
//! Every kernel is generic over the element precision through [`Real`]. Two
//! operands always share a precision because they share a type parameter, so
//! mixing precisions is a compile-time error rather than a runtime one.

pub mod counters;
mod matrix;
mod qr;
mod real;
mod svd;

use num_complex::Complex;
use num_traits::Zero;

pub use matrix::ComplexMatrix;
pub use qr::FullQr;
pub use real::{Precision, Real};
pub use svd::{condition_number, singular_values, smallest_singular, spectral_norm, svd, Svd, MAX_SWEEPS};

pub(crate) use qr::{full_qr_uncounted, Householder};

use crate::error::{Error, Result};

/// Classical product `A B` without touching the call counters.
pub(crate) fn matmul_uncounted<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: b.rows(),
            right_cols: b.cols(),
        });
    }
    let (m, k) = a.shape();
    let n = b.cols();
    let bs = b.as_slice();
    let mut out = vec![Complex::<T>::zero(); m * n];
    for i in 0..m {
        let c_row = &mut out[i * n..(i + 1) * n];
        for (l, &alpha) in a.row(i).iter().enumerate().take(k) {
            if alpha == Complex::zero() {
                continue;
            }
            let b_row = &bs[l * n..(l + 1) * n];
            for (c, bv) in c_row.iter_mut().zip(b_row) {
                c.re += alpha.re * bv.re - alpha.im * bv.im;
                c.im += alpha.re * bv.im + alpha.im * bv.re;
            }
        }
    }
    Ok(ComplexMatrix::from_raw(m, n, out))
}

/// Matrix product `A B` (conventional triple loop, row-major `i-k-j` order).
pub fn matmul<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    counters::bump_matmul();
    matmul_uncounted(a, b)
}

/// Householder full QR of an `m x n` matrix, `m >= n`.
///
/// `Q` is `m x m`, `R` is `m x n` with exact zeros below the diagonal and a
/// real nonnegative diagonal; the unit phases are absorbed into `Q`.
pub fn full_qr<T: Real>(a: &ComplexMatrix<T>) -> Result<FullQr<T>> {
    counters::bump_qr();
    qr::full_qr_uncounted(a)
}

/// Power iterations used for the cheap singularity estimate in [`invert`].
const INVERT_NORM_ITERS: usize = 12;

/// Inverse through Householder QR and back substitution, `A^{-1} = R^{-1} Q^H`.
///
/// Fails with [`Error::Singular`] when a diagonal entry of `R` vanishes or the
/// estimated `sigma_min(A)` drops below `n u ||A||_2`. Both norms in that test
/// are power-iteration estimates, so the reported `sigma_min` is approximate.
pub fn invert<T: Real>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    counters::bump_invert();
    invert_uncounted(a)
}

pub(crate) fn invert_uncounted<T: Real>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let (n, cols) = a.shape();
    if n != cols {
        return Err(Error::NotSquare { op: "invert", rows: n, cols });
    }
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    let h = Householder::factor(a)?;
    if (0..n).any(|k| h.r_diag(k) == Complex::zero()) {
        return Err(Error::Singular { sigma_min: 0.0 });
    }
    let mut x = ComplexMatrix::<T>::identity(n).to_col_major();
    h.apply_qh(&mut x, n);
    // Column-oriented back substitution for R X = Q^H.
    for j in 0..n {
        let col = &mut x[j * n..(j + 1) * n];
        for l in (0..n).rev() {
            col[l] = col[l] / h.r_diag(l);
            let xl = col[l];
            for i in 0..l {
                col[i] -= h.r_entry(i, l) * xl;
            }
        }
    }
    let inv = ComplexMatrix::from_col_major(n, n, &x);
    if !inv.is_finite() {
        return Err(Error::Singular { sigma_min: 0.0 });
    }
    let a_norm = svd::power_norm_estimate(a, INVERT_NORM_ITERS);
    let inv_norm = svd::power_norm_estimate(&inv, INVERT_NORM_ITERS);
    let sigma_min = T::one() / inv_norm;
    if !(sigma_min >= T::of_usize(n) * T::UNIT_ROUNDOFF * a_norm) {
        return Err(Error::Singular {
            sigma_min: sigma_min.as_f64(),
        });
    }
    Ok(inv)
}

/// Spectral norm of the `2n x n` stack `(top; bottom)`.
pub fn stacked_norm<T: Real>(top: &ComplexMatrix<T>, bottom: &ComplexMatrix<T>) -> Result<T> {
    spectral_norm(&ComplexMatrix::vstack(top, bottom)?)
}
