//! SIR epidemics on dynamic random graphs: graph generators, time-marked
//! union graphs, forward and backward epidemic engines, sampled local limits
//! and neighborhood metrics.

pub mod epidemic;
pub mod error;
pub mod generators;
pub mod graph;
pub mod io;
pub mod limits;
pub mod metrics;
pub mod rng;
pub mod util;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
