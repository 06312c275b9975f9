//! Run directories: every output of a command plus `manifest.json`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::experiments::RunSeeds;

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub dynepi: String,
    pub dynepi_core: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub master_seed: u64,
    /// How per-run seeds follow from the master seed.
    pub seed_derivation: String,
    pub run_seeds: Vec<RunSeeds>,
    pub versions: Versions,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub elapsed_secs: f64,
}

pub struct RunDir {
    path: PathBuf,
    outputs: Vec<String>,
    started: Instant,
}

impl RunDir {
    pub fn create(path: &Path) -> Result<Self> {
        std::fs::create_dir_all(path).with_context(|| format!("creating run directory {}", path.display()))?;
        Ok(RunDir { path: path.to_path_buf(), outputs: Vec::new(), started: Instant::now() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Path for an output file, recorded in the manifest.
    pub fn output(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.path.join(name);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        self.outputs.push(name.to_string());
        Ok(p)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.output(name)?;
        std::fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }

    pub fn finish<C: Serialize>(mut self, command: &str, config: &C, master_seed: u64, run_seeds: Vec<RunSeeds>) -> Result<PathBuf> {
        self.outputs.push("manifest.json".into());
        let manifest = Manifest {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            master_seed,
            seed_derivation: "graph = derive_seed(master, RUN_GRAPH, run); epidemic = derive_seed(master, RUN_EPIDEMIC, run); limit tree k = derive_seed(master, RUN_LIMIT, k)".into(),
            run_seeds,
            versions: Versions { dynepi: crate::VERSION.into(), dynepi_core: dynepi_core::VERSION.into() },
            threads: rayon::current_num_threads(),
            outputs: self.outputs,
            elapsed_secs: self.started.elapsed().as_secs_f64(),
        };
        let p = self.path.join("manifest.json");
        std::fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }
}
