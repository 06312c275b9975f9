//! Results depend on the master seed only, not on the thread count.

mod common;

use dynepi::experiments::{run_graph_experiment, run_limit_experiment};
use dynepi::Engine;
use dynepi_core::limits::Dynamics;

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn same_seed_same_bytes() {
    let cfg = common::tiny();
    let a = run_graph_experiment(&cfg).unwrap().to_csv();
    let b = run_graph_experiment(&cfg).unwrap().to_csv();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(run_graph_experiment(&other).unwrap().to_csv(), a);
}

#[test]
fn thread_count_does_not_matter() {
    let mut cfg = common::tiny();
    cfg.runs = 8;
    for engine in [Engine::Backward, Engine::Forward] {
        for dynamics in [Dynamics::Dynamic, Dynamics::Static] {
            let cfg = dynepi::ExperimentConfig { engine, dynamics, ..cfg.clone() };
            let one = with_threads(1, || run_graph_experiment(&cfg).unwrap().to_csv());
            let four = with_threads(4, || run_graph_experiment(&cfg).unwrap().to_csv());
            assert_eq!(one, four, "{engine:?} {dynamics:?}");
        }
    }
    let one = with_threads(1, || run_limit_experiment(&cfg).unwrap().to_csv());
    let four = with_threads(4, || run_limit_experiment(&cfg).unwrap().to_csv());
    assert_eq!(one, four);
}
