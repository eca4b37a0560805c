//! Physics and compute core for a coherent VCSEL optical neural network.
//!
//! Laser fields interfere on balanced receivers; amplitude-encoded inputs
//! give linear products, phase-encoded inputs give the homodyne
//! nonlinearity `f_NL(x, w) = w·√(1−x²) − x·√(1−w²)`.

pub mod energy;
pub mod engine;
pub mod error;
pub mod modulation;
pub mod noise;
pub mod photonics;
pub mod tensor;

pub use error::{OnnError, Result};
