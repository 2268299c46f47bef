//! Inequality and association statistics.

mod inequality;
mod regression;
pub mod special;

pub use inequality::{gini, lorenz, LorenzCurve};
pub use regression::{
    loglog_fit, ols_multi, pearson, Coefficient, Correlation, PowerLawFit, RegressionResult,
};
