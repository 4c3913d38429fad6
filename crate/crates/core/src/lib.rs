pub mod bessel;
pub mod cli;
pub mod biot_savart;
pub mod error;
pub mod extraction;
pub mod field;
pub mod grid;
pub mod io;
pub mod packets;
pub mod paraproduct;
pub mod recipes;
pub mod report;
pub mod solver;
pub mod lemmas;
pub mod spectral;

pub use error::{Error, Result};
