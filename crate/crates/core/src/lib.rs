//! Bit-exact modelling and bounded verification of fixed-point Direct Form I
//! digital filters.
//!
//! The library covers three property classes: arithmetic overflow under
//! error-detecting quantization, zero-input limit cycles under wrap-around
//! quantization, and per-sample timing deadlines under a static cycle-count
//! model. Violations are reported as concrete counterexample traces that are
//! always re-validated by simulation before being handed back.

pub mod cli;
pub mod filter_model;
pub mod fixedpoint;
pub mod smt_backend;
pub mod timing;
pub mod verifier;

pub use fixedpoint::{FixedFormat, FxNum, OverflowMode, Rational};
