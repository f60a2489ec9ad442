//! Per-thread call counters for the black-box kernels.
//!
//! Only the public entry points [`super::matmul`], [`super::full_qr`] and
//! [`super::invert`] increment a counter. Kernels that call each other
//! internally go through uncounted paths, so a count reflects exactly the
//! calls an algorithm makes.

use std::cell::Cell;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub matmul: u64,
    pub qr: u64,
    pub invert: u64,
}

thread_local! {
    static COUNTS: Cell<OpCounts> = const { Cell::new(OpCounts { matmul: 0, qr: 0, invert: 0 }) };
}

pub fn reset() {
    COUNTS.with(|c| c.set(OpCounts::default()));
}

pub fn snapshot() -> OpCounts {
    COUNTS.with(|c| c.get())
}

/// Runs `f` with freshly zeroed counters and returns its result together with
/// the calls it made. The previous counter state is restored afterwards.
pub fn count<R>(f: impl FnOnce() -> R) -> (R, OpCounts) {
    let saved = snapshot();
    reset();
    let out = f();
    let counts = snapshot();
    COUNTS.with(|c| c.set(saved));
    (out, counts)
}

pub(crate) fn bump_matmul() {
    COUNTS.with(|c| {
        let mut v = c.get();
        v.matmul += 1;
        c.set(v);
    });
}

pub(crate) fn bump_qr() {
    COUNTS.with(|c| {
        let mut v = c.get();
        v.qr += 1;
        c.set(v);
    });
}

pub(crate) fn bump_invert() {
    COUNTS.with(|c| {
        let mut v = c.get();
        v.invert += 1;
        c.set(v);
    });
}
