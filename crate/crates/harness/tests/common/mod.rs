use dynepi::config::{Comparison, Engine, ExperimentConfig};
use dynepi_core::epidemic::{DistSpec, EpidemicParams};
use dynepi_core::generators::{DerConfig, ModelConfig};
use dynepi_core::limits::{Dynamics, LimitModel};

/// Small DER experiment with its limit: 40 vertices, 3 runs, 6 grid points.
pub fn tiny() -> ExperimentConfig {
    ExperimentConfig {
        name: "tiny".into(),
        graph: Some(ModelConfig::Der(DerConfig { n: 40, gamma: 2.0, horizon: 1.0 })),
        limit: Some(LimitModel::Der { gamma: 2.0, horizon: 1.0 }),
        dynamics: Dynamics::Dynamic,
        epidemic: EpidemicParams { rho: 0.25, d_i: DistSpec::Exp { rate: 2.0 }, d_r: DistSpec::Exp { rate: 3.0 } },
        radius: Some(3),
        engine: Engine::Backward,
        comparison: Comparison::GraphVsLimit,
        grid_points: 6,
        runs: 3,
        limit_roots_per_run: 4,
        path_cap: 1_000_000,
        seed: 42,
        output_dir: None,
    }
}
