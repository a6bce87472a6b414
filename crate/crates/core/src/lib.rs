//! Reading ILU codes from constrained scene images.

pub mod error;
pub mod geometry;
pub mod ilu;
pub mod imaging;
pub mod locate;
pub mod ocr;
pub mod pipeline;
pub mod pnm;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
