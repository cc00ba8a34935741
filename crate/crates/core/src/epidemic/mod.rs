//! Epidemic-style baselines: full flooding and the single-copy walk.

mod ideal;
mod one_copy;

pub use ideal::IdealEpidemic;
pub use one_copy::{OneCopyConfig, OneCopyEpidemic};
