//! Quantum discord and Maxwell-demon work accounting on finite-dimensional
//! density operators.

pub mod circuit;
pub mod error;
pub mod factory;
pub mod info;
pub mod ledger;
pub mod linalg;
pub mod locc;
pub mod optimize;
pub mod state;
pub mod sweep;

pub use error::{DiscordError, Result};
pub use info::{InfoReport, MeasurementBasis};
pub use linalg::ComplexMatrix;
pub use optimize::{OptimizationResult, OptimizerConfig};
pub use state::{DensityOperator, SubsystemLayout, Tolerances};

/// Tag carried by every serialized document.
pub const SCHEMA: &str = "discordium/1";
