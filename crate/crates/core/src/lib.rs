//! Direct and indirect shock exposures on firm-level supply networks.
//!
//! A failing firm stops supplying its customers, which lose production in
//! proportion to the share of their suppliers affected, and so on down the
//! supply chain ([`cascade`]). Aggregating these cascades over regions gives
//! region-to-region exposure matrices ([`exposure`]) whose inequality across
//! regions is measured with Lorenz curves, Gini coefficients, correlations
//! and regressions ([`stats`]).

pub mod cascade;
pub mod error;
pub mod exposure;
pub mod graph;
pub mod io;
pub mod matrix;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synth;

pub use cascade::{debt_rank, propagate, CascadeResult, Direction};
pub use error::{Error, Result};
pub use exposure::{
    exposed_value, firm_region_exposure, group_exposure, region_region_exposure, total_exposure,
    ExposureProfile,
};
pub use graph::{build_network, preprocess, Partition, PreprocessConfig, SupplyNetwork};
pub use matrix::{ExposureMatrix, MatrixKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
