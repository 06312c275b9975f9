//! Experiment orchestration for `dynepi-core`: configurations and figure
//! presets, seeded parallel Monte Carlo runs, curve comparison, SVG charts,
//! run directories and the acceptance suite.

pub mod acceptance;
pub mod compare;
pub mod config;
pub mod experiments;
pub mod rundir;
pub mod svg;

pub use compare::{compare, read_curve_csv, ComparisonReport};
pub use config::{preset, Comparison, Engine, ExperimentConfig, PRESETS};
pub use experiments::{run_graph_experiment, run_limit_experiment, RunSeeds};
pub use svg::{render_svg, svg_document};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
