//! Test pencils with a known power `(A^{-1}B)^{2^p}`.

use num_complex::Complex;

use super::generators::Spectrum;
use crate::error::{Error, Result};
use crate::kernels::{self, ComplexMatrix, Real};
use crate::squaring::Pencil;

/// Tolerance on `||V^H V - I||_2` accepted by [`build_test_pencil`].
pub const UNITARY_TOL: f64 = 1e-10;

/// `V D^{2^p} V^H` for the `V`, `D` a pencil was built from, in binary64.
#[derive(Clone, Debug)]
pub struct SquaringOracle {
    v: ComplexMatrix<f64>,
    spectrum: Spectrum,
    identity: bool,
}

impl SquaringOracle {
    pub fn n(&self) -> usize {
        self.spectrum.len()
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// True for the `A = B` problem, whose oracle is exactly `I`.
    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn at(&self, p: u32) -> ComplexMatrix<f64> {
        let n = self.n();
        if self.identity {
            return ComplexMatrix::identity(n);
        }
        let d = self.spectrum.power(p);
        let vd = ComplexMatrix::from_fn(n, n, |i, j| self.v[(i, j)] * d[j]);
        let vh = self.v.adjoint();
        kernels::matmul_uncounted(&vd, &vh).expect("square factors")
    }

    /// `||V D^{2^p} V^H||_2 = max_k |d_k|^{2^p}` since `V` is unitary.
    pub fn norm(&self, p: u32) -> f64 {
        self.spectrum.radius_power(p)
    }

    pub fn absolute_error<T: Real>(&self, x: &ComplexMatrix<T>, p: u32) -> Result<f64> {
        let diff = x.cast::<f64>().checked_sub(&self.at(p))?;
        kernels::spectral_norm(&diff)
    }

    /// `||X - V D^{2^p} V^H||_2 / ||V D^{2^p} V^H||_2`.
    pub fn relative_error<T: Real>(&self, x: &ComplexMatrix<T>, p: u32) -> Result<f64> {
        Ok(self.absolute_error(x, p)? / self.norm(p))
    }
}

/// `(A, A V D V^H)` with its oracle. The product is formed in binary64 and
/// rounded once to `T`. When every `d_k` is exactly 1 the pencil is `(A, A)`.
pub fn build_test_pencil<T: Real>(
    a: &ComplexMatrix<f64>,
    v: &ComplexMatrix<f64>,
    d: &Spectrum,
) -> Result<(Pencil<T>, SquaringOracle)> {
    let n = d.len();
    if a.shape() != (n, n) || v.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            op: "build_test_pencil",
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: v.rows(),
            right_cols: v.cols(),
        });
    }
    let gram = kernels::matmul_uncounted(&v.adjoint(), v)?;
    let deviation = kernels::spectral_norm(&gram.checked_sub(&ComplexMatrix::identity(n))?)?;
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let identity = d.moduli.iter().zip(&d.angles).all(|(&r, &t)| r == 1.0 && t == 0.0);
    let oracle = SquaringOracle { v: v.clone(), spectrum: d.clone(), identity };
    let b = if identity { a.clone() } else { kernels::matmul_uncounted(a, &oracle.at(0))? };
    let pencil = Pencil::new(a.cast(), b.cast())?;
    Ok((pencil, oracle))
}

/// `V e^D V^{-1}` and `V D V^{-1}` for an invertible `V`.
#[derive(Clone, Debug)]
pub struct ExpmProblem {
    pub m: ComplexMatrix<f64>,
    pub exact: ComplexMatrix<f64>,
    pub exact_norm: f64,
    pub kappa_v: f64,
}

pub fn build_expm_problem(v: &ComplexMatrix<f64>, d: &[Complex<f64>]) -> Result<ExpmProblem> {
    let vinv = kernels::invert_uncounted(v)?;
    let vd = ComplexMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * d[j]);
    let m = kernels::matmul_uncounted(&vd, &vinv)?;
    let ved = ComplexMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * d[j].exp());
    let exact = kernels::matmul_uncounted(&ved, &vinv)?;
    let exact_norm = kernels::spectral_norm(&exact)?;
    let kappa_v = kernels::condition_number(v)?;
    Ok(ExpmProblem { m, exact, exact_norm, kappa_v })
}

impl ExpmProblem {
    pub fn relative_error<T: Real>(&self, x: &ComplexMatrix<T>) -> Result<f64> {
        let diff = x.cast::<f64>().checked_sub(&self.exact)?;
        Ok(kernels::spectral_norm(&diff)? / self.exact_norm)
    }
}
