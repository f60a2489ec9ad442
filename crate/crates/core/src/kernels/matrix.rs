use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use super::real::{Precision, Real};
use crate::error::{Error, Result};

/// Dense complex matrix stored row-major.
///
/// Matrices built through [`ComplexMatrix::from_vec`] are checked for finite
/// entries. Results of arithmetic are not re-checked; an exploding computation
/// shows up through [`ComplexMatrix::is_finite`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    elems: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            elems: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.elems[i * n + i] = Complex::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, elems: Vec<Complex<T>>) -> Result<Self> {
        if elems.len() != rows * cols {
            return Err(Error::ElementCount {
                rows,
                cols,
                len: elems.len(),
            });
        }
        if let Some(idx) = elems.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                row: idx / cols.max(1),
                col: idx % cols.max(1),
            });
        }
        Ok(Self { rows, cols, elems })
    }

    /// Builds a matrix from real row slices; convenient in tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut elems = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::ElementCount {
                    rows: r,
                    cols: c,
                    len: row.len(),
                });
            }
            elems.extend(row.iter().map(|&x| Complex::new(T::of_f64(x), T::zero())));
        }
        Self::from_vec(r, c, elems)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut elems = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                elems.push(f(i, j));
            }
        }
        Self { rows, cols, elems }
    }

    pub fn from_diagonal(diag: &[Complex<T>]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.elems[i * n + i] = d;
        }
        m
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, elems: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(elems.len(), rows * cols);
        Self { rows, cols, elems }
    }

    /// Internal constructor from a column-major buffer.
    pub(crate) fn from_col_major(rows: usize, cols: usize, data: &[Complex<T>]) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        let mut elems = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                elems.push(data[j * rows + i]);
            }
        }
        Self { rows, cols, elems }
    }

    pub(crate) fn to_col_major(&self) -> Vec<Complex<T>> {
        let mut out = vec![Complex::zero(); self.rows * self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.elems[i * self.cols + j];
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn precision(&self) -> Precision {
        T::PRECISION
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.elems
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.elems
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.elems[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self.elems[i * self.cols + j]).collect()
    }

    pub fn diagonal(&self) -> Vec<Complex<T>> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.elems.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.elems[j * self.rows + i] = self.elems[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.elems[j * self.rows + i] = self.elems[i * self.cols + j];
            }
        }
        out
    }

    pub fn scale(&self, alpha: Complex<T>) -> Self {
        self.map(|z| z * alpha)
    }

    pub fn scale_real(&self, alpha: T) -> Self {
        self.map(|z| z * alpha)
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            elems: self.elems.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Copy of the `rows x cols` block whose top-left corner is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            let src = &self.elems[(r0 + i) * self.cols + c0..(r0 + i) * self.cols + c0 + cols];
            out.elems[i * cols..(i + 1) * cols].copy_from_slice(src);
        }
        out
    }

    /// Writes `src` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, src: &Self) {
        assert!(r0 + src.rows <= self.rows && c0 + src.cols <= self.cols, "block out of range");
        for i in 0..src.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.elems[dst..dst + src.cols].copy_from_slice(src.row(i));
        }
    }

    /// Vertical concatenation `(top; bottom)`.
    pub fn vstack(top: &Self, bottom: &Self) -> Result<Self> {
        if top.cols != bottom.cols {
            return Err(Error::DimensionMismatch {
                op: "vstack",
                left_rows: top.rows,
                left_cols: top.cols,
                right_rows: bottom.rows,
                right_cols: bottom.cols,
            });
        }
        let mut elems = Vec::with_capacity(top.elems.len() + bottom.elems.len());
        elems.extend_from_slice(&top.elems);
        elems.extend_from_slice(&bottom.elems);
        Ok(Self {
            rows: top.rows + bottom.rows,
            cols: top.cols,
            elems,
        })
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        rhs: &Self,
        op: &'static str,
        f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>,
    ) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: rhs.rows,
                right_cols: rhs.cols,
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            elems: self
                .elems
                .iter()
                .zip(&rhs.elems)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.elems.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> T {
        let mut sums = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (s, z) in sums.iter_mut().zip(self.row(i)) {
                *s += z.norm();
            }
        }
        sums.into_iter().fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.elems.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// Converts the element type, rounding when narrowing.
    pub fn cast<U: Real>(&self) -> ComplexMatrix<U> {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            elems: self
                .elems
                .iter()
                .map(|z| Complex::new(U::of_f64(z.re.as_f64()), U::of_f64(z.im.as_f64())))
                .collect(),
        }
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.cols, "apply: vector length mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(Complex::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Conjugate-transpose matrix-vector product `A^H x`.
    pub fn apply_adjoint(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.rows, "apply_adjoint: vector length mismatch");
        let mut out = vec![Complex::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        out
    }
}

impl<T> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.elems[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.elems[i * self.cols + j]
    }
}

// Operator forms panic on shape mismatch; use `checked_add`/`checked_sub`
// or the kernel functions when the shapes are not known to agree.
impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        self.checked_add(rhs).expect("matrix add: shape mismatch")
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        self.checked_sub(rhs).expect("matrix sub: shape mismatch")
    }
}

impl<T: Real> Neg for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn neg(self) -> ComplexMatrix<T> {
        self.map(|z| -z)
    }
}

impl<T: Real> Mul<T> for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn mul(self, rhs: T) -> ComplexMatrix<T> {
        self.scale_real(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn from_vec_rejects_bad_length_and_non_finite() {
        assert!(matches!(
            ComplexMatrix::<f64>::from_vec(2, 2, vec![c(1.0, 0.0); 3]),
            Err(Error::ElementCount { .. })
        ));
        let err = ComplexMatrix::from_vec(2, 2, vec![c(1.0, 0.0), c(0.0, 0.0), c(f64::NAN, 0.0), c(0.0, 0.0)])
            .unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 1, col: 0 });
        assert!(ComplexMatrix::from_vec(1, 1, vec![c(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn adjoint_conjugates_and_transposes() {
        let m = ComplexMatrix::from_vec(2, 3, (0..6).map(|k| c(k as f64, 1.0 + k as f64)).collect()).unwrap();
        let h = m.adjoint();
        assert_eq!(h.shape(), (3, 2));
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(h[(j, i)], m[(i, j)].conj());
            }
        }
    }

    #[test]
    fn block_roundtrip_and_vstack() {
        let m = ComplexMatrix::<f64>::from_fn(4, 4, |i, j| c(i as f64, j as f64));
        let b = m.block(1, 2, 2, 2);
        assert_eq!(b[(0, 0)], c(1.0, 2.0));
        assert_eq!(b[(1, 1)], c(2.0, 3.0));
        let mut z = ComplexMatrix::zeros(4, 4);
        z.set_block(1, 2, &b);
        assert_eq!(z[(2, 3)], c(2.0, 3.0));
        let top = m.block(0, 0, 2, 4);
        let bottom = m.block(2, 0, 2, 4);
        assert_eq!(ComplexMatrix::vstack(&top, &bottom).unwrap(), m);
        assert!(ComplexMatrix::vstack(&top, &m.block(0, 0, 2, 3)).is_err());
    }

    #[test]
    fn norms_of_simple_matrices() {
        let m = ComplexMatrix::<f64>::from_real_rows(&[&[1.0, -2.0], &[3.0, 4.0]]).unwrap();
        assert_eq!(m.one_norm(), 6.0);
        assert!((m.frobenius_norm() - 30f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.max_abs(), 4.0);
    }

    #[test]
    fn col_major_roundtrip() {
        let m = ComplexMatrix::<f64>::from_fn(3, 2, |i, j| c(i as f64, -(j as f64)));
        let cm = m.to_col_major();
        assert_eq!(ComplexMatrix::from_col_major(3, 2, &cm), m);
    }

    #[test]
    fn cast_rounds_to_single() {
        let m = ComplexMatrix::<f64>::from_real_rows(&[&[0.1]]).unwrap();
        let s: ComplexMatrix<f32> = m.cast();
        assert_eq!(s[(0, 0)].re, 0.1f32);
        assert_eq!(s.precision(), Precision::Binary32);
    }
}
