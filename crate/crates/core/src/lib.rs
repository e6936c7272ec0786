pub mod beta_egarch;
pub mod cgarch;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod fgarch;
pub mod gas;
pub mod innovations;
pub mod market_data;
pub mod mcs;
pub mod mean_filter;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
