//! Thread-local floating point operation counter.
//!
//! Kernels record analytic counts per class: GEMM-like contractions count
//! exactly `2mnk`, while QR (`2mn²` per factorization), SVD (`14mn²`) and
//! Cholesky (`n³/3`) record closed-form estimates. Solvers take snapshots
//! and report differences, so nested work is attributed to the caller.

use std::cell::Cell;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// Kernel class a flop count is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlopKind {
    Contract,
    Qr,
    Svd,
    Cholesky,
}

/// Per-class flop totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopTally {
    pub contract: u64,
    pub qr: u64,
    pub svd: u64,
    pub cholesky: u64,
}

impl FlopTally {
    pub fn total(&self) -> u64 {
        self.contract + self.qr + self.svd + self.cholesky
    }

    pub fn get(&self, kind: FlopKind) -> u64 {
        match kind {
            FlopKind::Contract => self.contract,
            FlopKind::Qr => self.qr,
            FlopKind::Svd => self.svd,
            FlopKind::Cholesky => self.cholesky,
        }
    }
}

impl Sub for FlopTally {
    type Output = FlopTally;

    fn sub(self, rhs: FlopTally) -> FlopTally {
        FlopTally {
            contract: self.contract.saturating_sub(rhs.contract),
            qr: self.qr.saturating_sub(rhs.qr),
            svd: self.svd.saturating_sub(rhs.svd),
            cholesky: self.cholesky.saturating_sub(rhs.cholesky),
        }
    }
}

impl Add for FlopTally {
    type Output = FlopTally;

    fn add(self, rhs: FlopTally) -> FlopTally {
        FlopTally {
            contract: self.contract + rhs.contract,
            qr: self.qr + rhs.qr,
            svd: self.svd + rhs.svd,
            cholesky: self.cholesky + rhs.cholesky,
        }
    }
}

thread_local! {
    static TALLY: Cell<FlopTally> = const { Cell::new(FlopTally { contract: 0, qr: 0, svd: 0, cholesky: 0 }) };
    static PAUSED: Cell<u32> = const { Cell::new(0) };
}

/// Adds `n` flops of class `kind` to the current thread's tally.
pub fn record(kind: FlopKind, n: u64) {
    if PAUSED.with(|p| p.get()) > 0 {
        return;
    }
    TALLY.with(|t| {
        let mut v = t.get();
        match kind {
            FlopKind::Contract => v.contract += n,
            FlopKind::Qr => v.qr += n,
            FlopKind::Svd => v.svd += n,
            FlopKind::Cholesky => v.cholesky += n,
        }
        t.set(v);
    });
}

/// Current totals of this thread.
pub fn snapshot() -> FlopTally {
    TALLY.with(|t| t.get())
}

/// Runs `f` without recording anything, used by kernels whose cost is
/// already booked as a closed-form estimate.
pub fn uncounted<R>(f: impl FnOnce() -> R) -> R {
    struct Resume;
    impl Drop for Resume {
        fn drop(&mut self) {
            PAUSED.with(|p| p.set(p.get() - 1));
        }
    }
    PAUSED.with(|p| p.set(p.get() + 1));
    let _guard = Resume;
    f()
}

/// Runs `f` and returns its result together with the flops it recorded.
pub fn measure<R>(f: impl FnOnce() -> R) -> (R, FlopTally) {
    let before = snapshot();
    let out = f();
    (out, snapshot() - before)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_and_delta() {
        let (_, d) = measure(|| {
            record(FlopKind::Contract, 10);
            record(FlopKind::Svd, 5);
            uncounted(|| record(FlopKind::Qr, 100));
        });
        assert_eq!(d, FlopTally { contract: 10, qr: 0, svd: 5, cholesky: 0 });
        assert_eq!(d.total(), 15);
    }
}
