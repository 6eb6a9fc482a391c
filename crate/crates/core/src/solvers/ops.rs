use std::cell::OnceCell;

use crate::error::Result;
use crate::fast::{axpby_trunc, fast_orthogonalize, fast_truncate, fast_truncate_relative};
use crate::tt::{axpby_raw, norm, truncate, truncate_relative, Direction, TensorTrain};

use super::config::Backend;
use super::map::TtLinearMap;

/// Truncation and addition kernels of one backend.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Ops {
    pub backend: Backend,
    pub max_rank: usize,
}

impl Ops {
    pub(crate) fn new(backend: Backend, max_rank: usize) -> Self {
        Ops { backend, max_rank }
    }

    pub(crate) fn trunc_rel(&self, x: &TensorTrain, rel: f64) -> Result<TensorTrain> {
        match self.backend {
            Backend::Standard => truncate_relative(x, rel, self.max_rank),
            Backend::Fast => Ok(fast_truncate_relative(x, rel, self.max_rank)?.0),
        }
    }

    pub(crate) fn trunc_abs(&self, x: &TensorTrain, abs: f64) -> Result<TensorTrain> {
        match self.backend {
            Backend::Standard => truncate(x, abs, self.max_rank),
            Backend::Fast => Ok(fast_truncate(x, abs, self.max_rank)?.0),
        }
    }

    /// `trunc(αX + βY)` relative to the norm of the sum. With the fast
    /// backend a known `norm_hint` of the sum enables the
    /// orthogonality-exploiting addition.
    pub(crate) fn axpby_rel(
        &self,
        alpha: f64,
        x: &TensorTrain,
        beta: f64,
        y: &TensorTrain,
        rel: f64,
        norm_hint: Option<f64>,
    ) -> Result<TensorTrain> {
        match (self.backend, norm_hint) {
            (Backend::Fast, Some(h)) => axpby_trunc(alpha, x, beta, y, rel * h, self.max_rank),
            _ => self.trunc_rel(&axpby_raw(alpha, x, beta, y)?, rel),
        }
    }
}

/// Krylov vector together with a lazily built copy orthogonalized in the
/// opposite direction, so additions can always pair matching orientations.
pub(crate) struct Oriented {
    base: TensorTrain,
    other: OnceCell<TensorTrain>,
}

impl Oriented {
    pub(crate) fn new(x: TensorTrain) -> Self {
        Oriented { base: x, other: OnceCell::new() }
    }

    pub(crate) fn get(&self) -> &TensorTrain {
        &self.base
    }

    /// The copy whose orthogonality matches `w`, if one can be had.
    pub(crate) fn matching(&self, w: &TensorTrain) -> Result<&TensorTrain> {
        let want_left = w.is_left_orthogonal();
        let want_right = w.is_right_orthogonal();
        let b = &self.base;
        if self.base.d() == 1 || (want_left && b.is_left_orthogonal()) || (want_right && b.is_right_orthogonal()) {
            return Ok(b);
        }
        if !want_left && !want_right {
            return Ok(b);
        }
        if self.other.get().is_none() {
            let mut c = b.clone();
            fast_orthogonalize(&mut c, if want_left { Direction::Left } else { Direction::Right })?;
            let _ = self.other.set(c);
        }
        Ok(self.other.get().expect("initialized above"))
    }
}

/// `‖B − A·X‖_F` computed through an exact orthogonalization.
pub(crate) fn residual_norm<M: TtLinearMap + ?Sized>(a: &M, b: &TensorTrain, x: &TensorTrain) -> Result<f64> {
    Ok(norm(&axpby_raw(1.0, b, -1.0, &a.apply(x)?)?))
}

/// `sqrt(‖W‖² − h²)` when it is free of cancellation.
pub(crate) fn deflated_norm(w_norm: f64, h: f64) -> Option<f64> {
    let s = w_norm * w_norm - h * h;
    if s > 1e-12 * w_norm * w_norm {
        Some(s.sqrt())
    } else {
        None
    }
}
