pub mod aadnet;
pub mod cli;
pub mod data;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod linear;
pub mod nn;
pub mod seed;

pub use error::{Error, Result};
