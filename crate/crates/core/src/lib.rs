pub mod cost;
pub mod error;
pub mod harness;
pub mod nonlinear;
pub mod oracle;
pub mod primitives;
pub mod ring;
pub mod runtime;
pub mod share;
pub mod tensor;
pub mod transformer;
