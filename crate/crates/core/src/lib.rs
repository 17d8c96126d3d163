//! Multivariate integer-valued trawl processes: trawl functions, integer
//! seed laws, grid simulation and moment-based inference.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binning;
pub mod error;
pub mod infer;
pub mod moments;
pub mod quad;
pub mod rng;
pub mod seed;
pub mod series;
pub mod simulate;
pub mod trawl;

pub use binning::bin_events;
pub use error::{MivtError, Result};
pub use infer::{bootstrap, fit, mc_study, FitReport, FitTemplate};
pub use seed::{SeedFamily, SeedParams, SeedSpec};
pub use series::CountSeries;
pub use simulate::{default_burnin, simulate_mivt, MivtModel, SimConfig};
pub use trawl::{autocorrelator, TrawlFamily, TrawlParams, TrawlSpec};
