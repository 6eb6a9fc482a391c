use crate::error::Result;
use crate::tt::{TensorTrain, TtOperator};

/// Square linear map on tensor trains, as seen by TT-GMRES.
pub trait TtLinearMap {
    fn dims(&self) -> Vec<usize>;

    fn apply(&self, x: &TensorTrain) -> Result<TensorTrain>;

    fn is_symmetric(&self) -> bool;
}

impl TtLinearMap for TtOperator {
    fn dims(&self) -> Vec<usize> {
        self.col_dims()
    }

    fn apply(&self, x: &TensorTrain) -> Result<TensorTrain> {
        TtOperator::apply(self, x)
    }

    fn is_symmetric(&self) -> bool {
        TtOperator::is_symmetric(self)
    }
}
