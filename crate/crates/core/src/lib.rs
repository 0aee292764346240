pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod family;
pub mod fourier;
pub mod generator;
pub mod graph;
pub mod linalg;
pub mod numfmt;
pub mod oracle;
pub mod spectral;
pub mod statespace;
pub mod suite;

pub use error::{Error, Result};
