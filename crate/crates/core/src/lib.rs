pub mod autoencoder;
pub mod credit;
pub mod data;
pub mod error;
pub mod harness;
pub mod memory;
pub mod nn;

pub use error::{Error, Result};
