//! Symbolic operator models and their basic functionals.

mod diagonal;
mod matrix;
mod shifted;
mod tail;

use thiserror::Error;

use crate::exact::Q;

pub use diagonal::{
    CoordinateSubspace, Layout, MinAttainment, NormalDiagonalModel, PositiveDiagonalModel, Slot,
    StreamSelection, StreamSource,
};
pub use matrix::{FiniteMatrix, MatrixShapeError};
pub use shifted::{ShiftForm, ShiftedDiagonalModel};
pub use tail::{Direction, Tail, TailError, TailRule, TermMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("cell {cell} has multiplicity 0")]
    ZeroMultiplicity { cell: usize },
    #[error("cell {cell} has negative value {value}")]
    NegativeCell { cell: usize, value: Q },
    #[error("tail {tail} has negative terms (infimum {infimum})")]
    NegativeTail { tail: usize, infimum: Q },
    #[error(transparent)]
    Tail(#[from] TailError),
    #[error("range is not closed: 0 is an accumulation point of the entries")]
    RangeNotClosed,
    #[error("subspace selects {found} streams but the model has {expected}")]
    SubspaceShape { expected: usize, found: usize },
    #[error("index {0} is not a finite-cell index of the model")]
    IndexOutOfRange(u64),
}
