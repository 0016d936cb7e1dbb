//! Correlation of powers of Hüsler-Reiss vectors and Brown-Resnick fields.

pub mod brown_resnick;
pub mod cli;
pub mod config;
pub mod error;
pub mod gev;
pub mod hr;
pub mod numerics;
pub mod oracle;
pub mod output;
pub mod risk;
pub mod suite;

pub use error::{Error, Result};
