//! Quantum channel numerics: representations, random-unitary approximation of
//! arbitrary channels, output entropy and p-norm optimization, circuit
//! compilation and diamond-norm estimation.

pub mod approximation;
pub mod channels;
pub mod circuits;
pub mod diamond;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod sampling;
pub mod standard_channels;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, DensityMatrix, PureState, UnitaryMatrix, C64};
