//! Library side of the `trinfer` command: the PUMAW1 weight format, golden
//! vectors, and the verify, bench and infer runners.

pub mod bench;
pub mod golden;
pub mod infer;
pub mod pumaw1;
pub mod verify;

pub use pumaw1::{load_weights, save_weights, WeightsError};
