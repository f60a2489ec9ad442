//! Implicit repeated squaring (IRS), explicit squaring (ES), and the two ways
//! of consuming an IRS result: forming `A_p^{-1} B_p` and applying the
//! spectral projector `(A_p + B_p)^{-1} A_p`.
//!
//! An IRS step factors the stack `(B_j; -A_j) = Q R` and keeps the last `n`
//! columns of `Q`:
//!
//! ```text
//! A_{j+1} = Q12^H A_j,    B_{j+1} = Q22^H B_j
//! ```
//!
//! where `Q12` and `Q22` are the top-right and bottom-right `n x n` blocks.
//! Since `Q12^H B_j = Q22^H A_j`, the quotient squares:
//! `A_{j+1}^{-1} B_{j+1} = (A_j^{-1} B_j)^2`.

use crate::error::{Error, Result};
use crate::kernels::{self, ComplexMatrix, Real};

/// The input pair `(A, B)` of a squaring problem. Both are `n x n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pencil<T> {
    a: ComplexMatrix<T>,
    b: ComplexMatrix<T>,
}

impl<T: Real> Pencil<T> {
    pub fn new(a: ComplexMatrix<T>, b: ComplexMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare { op: "pencil", rows: a.rows(), cols: a.cols() });
        }
        if a.shape() != b.shape() {
            return Err(Error::DimensionMismatch {
                op: "pencil",
                left_rows: a.rows(),
                left_cols: a.cols(),
                right_rows: b.rows(),
                right_cols: b.cols(),
            });
        }
        Ok(Self { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &ComplexMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix<T> {
        &self.b
    }

    pub fn into_parts(self) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
        (self.a, self.b)
    }

    pub fn precision(&self) -> crate::kernels::Precision {
        T::PRECISION
    }

    /// `||(A; B)||_2`.
    pub fn stack_norm(&self) -> Result<T> {
        kernels::stacked_norm(&self.a, &self.b)
    }
}

/// How much per-step diagnostic work an IRS run does.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TraceMode {
    /// SVDs of the stack, `A_j` and `B_j` at every step.
    #[default]
    Full,
    /// No diagnostics at all; only the QR and the two products.
    Fast,
}

/// Singular-value diagnostics of the pair `(A_j, B_j)` entering step `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDiagnostics {
    /// `||(A_j; B_j)||_2`.
    pub norm_stack: f64,
    /// `sigma_n(B_j; -A_j)`, which equals `sigma_n(A_j; B_j)`.
    pub sigma_n_stack: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrsStepTrace {
    /// Zero-based index `j` of the step; the diagnostics describe its input.
    pub step_index: usize,
    pub diagnostics: Option<StepDiagnostics>,
    /// Set to `sigma_n` of the stack when it fell below `n u ||stack||_2`.
    /// The step is still taken.
    pub rank_warning: Option<f64>,
}

/// Result of `p` IRS steps: `A_p^{-1} B_p = (A^{-1} B)^{2^p}`.
#[derive(Clone, Debug)]
pub struct IrsRun<T> {
    pub a_p: ComplexMatrix<T>,
    pub b_p: ComplexMatrix<T>,
    pub trace: Vec<IrsStepTrace>,
    pub p: usize,
}

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

fn diagnostics<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
) -> Result<(StepDiagnostics, Option<f64>)> {
    let n = a.rows();
    let stack = kernels::singular_values(&ComplexMatrix::vstack(a, b)?)?;
    let norm_stack = stack[0].as_f64();
    let sigma_n_stack = stack[n - 1].as_f64();
    let kappa_a = kernels::condition_number(a)?.as_f64();
    let kappa_b = kernels::condition_number(b)?.as_f64();
    let floor = n as f64 * T::UNIT_ROUNDOFF.as_f64() * norm_stack;
    let warning = (sigma_n_stack < floor).then_some(sigma_n_stack);
    Ok((StepDiagnostics { norm_stack, sigma_n_stack, kappa_a, kappa_b }, warning))
}

/// One IRS step. The trace's `step_index` is set to `step_index`.
pub fn irs_step<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    step_index: usize,
    mode: TraceMode,
) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>, IrsStepTrace)> {
    check_pair("irs_step", a, b)?;
    let n = a.rows();
    let (diag, rank_warning) = match mode {
        TraceMode::Full => {
            let (d, w) = diagnostics(a, b)?;
            (Some(d), w)
        }
        TraceMode::Fast => (None, None),
    };
    let stack = ComplexMatrix::vstack(b, &-a)?;
    let qr = kernels::full_qr(&stack)?;
    let q12h = qr.q.block(0, n, n, n).adjoint();
    let q22h = qr.q.block(n, n, n, n).adjoint();
    let a_next = kernels::matmul(&q12h, a)?;
    let b_next = kernels::matmul(&q22h, b)?;
    Ok((
        a_next,
        b_next,
        IrsStepTrace { step_index, diagnostics: diag, rank_warning },
    ))
}

/// IRS advanced one step at a time, so callers can inspect every `(A_j, B_j)`
/// of a single run.
#[derive(Clone, Debug)]
pub struct IrsIter<T> {
    a: ComplexMatrix<T>,
    b: ComplexMatrix<T>,
    trace: Vec<IrsStepTrace>,
    mode: TraceMode,
}

impl<T: Real> IrsIter<T> {
    pub fn new(a: ComplexMatrix<T>, b: ComplexMatrix<T>, mode: TraceMode) -> Result<Self> {
        check_pair("irs", &a, &b)?;
        Ok(Self { a, b, trace: Vec::new(), mode })
    }

    pub fn from_pencil(pencil: Pencil<T>, mode: TraceMode) -> Self {
        let (a, b) = pencil.into_parts();
        Self { a, b, trace: Vec::new(), mode }
    }

    pub fn steps(&self) -> usize {
        self.trace.len()
    }

    pub fn current(&self) -> (&ComplexMatrix<T>, &ComplexMatrix<T>) {
        (&self.a, &self.b)
    }

    pub fn trace(&self) -> &[IrsStepTrace] {
        &self.trace
    }

    pub fn step(&mut self) -> Result<&IrsStepTrace> {
        let (a, b, t) = irs_step(&self.a, &self.b, self.trace.len(), self.mode)?;
        self.a = a;
        self.b = b;
        self.trace.push(t);
        Ok(self.trace.last().expect("just pushed"))
    }

    /// `A_j^{-1} B_j` for the current `j`.
    pub fn to_explicit(&self) -> Result<ComplexMatrix<T>> {
        quotient(&self.a, &self.b)
    }

    pub fn into_run(self) -> IrsRun<T> {
        let p = self.trace.len();
        IrsRun { a_p: self.a, b_p: self.b, trace: self.trace, p }
    }
}

/// `p >= 1` steps of implicit repeated squaring.
pub fn irs<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    p: usize,
    mode: TraceMode,
) -> Result<IrsRun<T>> {
    if p == 0 {
        return Err(Error::InvalidArgument("irs needs p >= 1".into()));
    }
    let mut it = IrsIter::new(a.clone(), b.clone(), mode)?;
    for _ in 0..p {
        it.step()?;
    }
    Ok(it.into_run())
}

/// `D_0, ..., D_p` of explicit squaring: `D_0 = A^{-1} B`, `D_j = D_{j-1}^2`.
pub fn explicit_squaring_steps<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    p: usize,
) -> Result<Vec<ComplexMatrix<T>>> {
    check_pair("explicit_squaring", a, b)?;
    let mut out = Vec::with_capacity(p + 1);
    out.push(kernels::matmul(&kernels::invert(a)?, b)?);
    for _ in 0..p {
        let last = out.last().expect("nonempty");
        let next = kernels::matmul(last, last)?;
        out.push(next);
    }
    Ok(out)
}

/// `(A^{-1} B)^{2^p}` by forming `A^{-1} B` and squaring it `p` times.
pub fn explicit_squaring<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    p: usize,
) -> Result<ComplexMatrix<T>> {
    Ok(explicit_squaring_steps(a, b, p)?.pop().expect("nonempty"))
}

fn quotient<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let inv = kernels::invert(a).map_err(|e| match e {
        Error::Singular { sigma_min } => Error::SingularImplicitDenominator { sigma_min },
        other => other,
    })?;
    kernels::matmul(&inv, b)
}

/// `A_p^{-1} B_p`.
pub fn implicit_to_explicit<T: Real>(run: &IrsRun<T>) -> Result<ComplexMatrix<T>> {
    quotient(&run.a_p, &run.b_p)
}

/// `(A_p + B_p)^{-1} A_p = (I + (A^{-1} B)^{2^p})^{-1}`.
///
/// An eigenvector of `A^{-1} B` with eigenvalue `mu` is mapped to
/// `1/(1 + mu^{2^p})` times itself, so as `p` grows the result tends to the
/// projector onto the invariant subspace of eigenvalues with `|mu| < 1`.
pub fn spectral_projector<T: Real>(run: &IrsRun<T>) -> Result<ComplexMatrix<T>> {
    let sum = run.a_p.checked_add(&run.b_p)?;
    let inv = kernels::invert(&sum).map_err(|e| match e {
        Error::Singular { sigma_min } => Error::SingularProjectorSum { sigma_min },
        other => other,
    })?;
    kernels::matmul(&inv, &run.a_p)
}
