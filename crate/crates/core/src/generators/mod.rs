//! Samplers for the four dynamic random-graph models.

mod cm;
mod der;
mod rig;

use serde::{Deserialize, Serialize};

use crate::graph::DynamicGraph;

pub use cm::{gen_dynamic_cm, CmConfig, CmProcess, RewiringClock};
pub use der::{gen_alt_dynamic_er, gen_dynamic_er, DerConfig};
pub use rig::{
    elementary_symmetric, gen_dynamic_rig, group_activation_rate, GroupSizePmf, RigConfig, WeightLaw, WeightSpec,
};

/// Run statistics written next to a generated graph.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenMeta {
    pub model: String,
    pub n: u32,
    pub horizon: f64,
    pub seed: u64,
    /// Edges (DER), groups (RIG) or half-edge pairs (CM) present at time 0.
    pub initial_on: u64,
    /// OFF->ON switches after time 0 (edges for DER/alt-DER, groups for RIG,
    /// rewiring events for CM).
    pub activations: u64,
    /// Candidate activations rejected by thinning.
    pub rejected: u64,
    pub truncations: Vec<String>,
    pub notes: Vec<String>,
}

/// One materialized group of a random intersection graph with its single ON
/// interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub members: Vec<u32>,
    pub on: f64,
    pub off: f64,
}

#[derive(Clone, Debug)]
pub struct GenOutput {
    pub graph: DynamicGraph,
    pub meta: GenMeta,
    /// RIG only.
    pub groups: Option<Vec<Group>>,
    /// CM only: per-vertex count of half-edge re-pairings that changed the
    /// partner.
    pub new_connections: Option<Vec<u32>>,
}

/// Model selection in the JSON config block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelConfig {
    Der(DerConfig),
    AltDer(DerConfig),
    Rig(RigConfig),
    Cm(CmConfig),
}

impl ModelConfig {
    pub fn generate(&self, seed: u64) -> crate::Result<GenOutput> {
        match self {
            ModelConfig::Der(c) => gen_dynamic_er(c, seed),
            ModelConfig::AltDer(c) => gen_alt_dynamic_er(c, seed),
            ModelConfig::Rig(c) => gen_dynamic_rig(c, seed),
            ModelConfig::Cm(c) => gen_dynamic_cm(c, seed),
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            ModelConfig::Der(c) | ModelConfig::AltDer(c) => c.horizon,
            ModelConfig::Rig(c) => c.horizon,
            ModelConfig::Cm(c) => c.horizon,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            ModelConfig::Der(c) | ModelConfig::AltDer(c) => c.n as usize,
            ModelConfig::Rig(c) => c.n as usize,
            ModelConfig::Cm(c) => c.degrees.len(),
        }
    }
}

/// Uniform unordered pair of distinct vertices.
pub(crate) fn random_pair<R: rand::Rng + ?Sized>(rng: &mut R, n: u32) -> (u32, u32) {
    let u = rng.random_range(0..n);
    let mut v = rng.random_range(0..n - 1);
    if v >= u {
        v += 1;
    }
    crate::graph::pair(u, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_shape() {
        let c: ModelConfig = serde_json::from_str(r#"{"model":"der","n":100,"gamma":3.0,"T":1.0}"#).unwrap();
        assert_eq!(c, ModelConfig::Der(DerConfig { n: 100, gamma: 3.0, horizon: 1.0 }));
        let c: ModelConfig =
            serde_json::from_str(r#"{"model":"cm","degrees":[1,1,2,2],"alpha":0.5,"T":1.0}"#).unwrap();
        assert!(matches!(c, ModelConfig::Cm(_)));
        let c: ModelConfig =
            serde_json::from_str(r#"{"model":"rig","n":50,"p_k":[0,0,0.5,0.5],"T":2.0}"#).unwrap();
        assert!(matches!(c, ModelConfig::Rig(_)));
    }
}
