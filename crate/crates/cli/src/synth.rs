//! Synthetic dataset generation with a ground-truth sidecar.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use plc_core::plc::sample_plc_ranking;
use plc_core::{ConsiderationProbs, RankingDataset, Universe, Utilities};

use crate::error::{CliError, CliResult};
use crate::files::write_atomic;

/// The generating parameters written next to a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSidecar {
    pub items: Vec<String>,
    pub utilities: Vec<f64>,
    pub consideration_probs: Vec<f64>,
    pub k: usize,
    pub samples: usize,
    pub seed: u64,
    /// sum(p) / k, the largest alpha the generated data actually satisfies.
    pub alpha_true: f64,
}

/// Draws `m` independent rankings from the model. Reproducible per seed.
pub fn generate_synthetic(
    u: &Utilities,
    p: &ConsiderationProbs,
    k: usize,
    m: usize,
    seed: u64,
) -> CliResult<RankingDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rankings = Vec::with_capacity(m);
    for _ in 0..m {
        rankings.push(
            sample_plc_ranking(u, p, k, &mut rng).map_err(|e| CliError::Validation(e.to_string()))?,
        );
    }
    RankingDataset::from_rankings(u.len(), k, rankings)
        .map_err(|e| CliError::Validation(e.to_string()))
}

pub fn sidecar_for(
    universe: &Universe,
    u: &Utilities,
    p: &ConsiderationProbs,
    k: usize,
    m: usize,
    seed: u64,
) -> GroundTruthSidecar {
    GroundTruthSidecar {
        items: (0..universe.n()).map(|i| universe.label(i)).collect(),
        utilities: u.as_slice().to_vec(),
        consideration_probs: p.as_slice().to_vec(),
        k,
        samples: m,
        seed,
        alpha_true: p.sum() / k as f64,
    }
}

/// Writes a dataset in the rankings-file format. No consideration section
/// is emitted; the generating sets play the role of unobserved state.
pub fn write_rankings_csv(path: &Path, universe: &Universe, dataset: &RankingDataset) -> CliResult<()> {
    let mut out = String::new();
    for r in dataset.rankings() {
        let labels: Vec<String> = r.entries().iter().map(|&i| universe.label(i)).collect();
        out.push_str(&labels.join(","));
        out.push('\n');
    }
    write_atomic(path, &out)
}

pub fn write_sidecar(path: &Path, sidecar: &GroundTruthSidecar) -> CliResult<()> {
    let content =
        serde_json::to_string_pretty(sidecar).map_err(|e| CliError::Io(e.to_string()))?;
    write_atomic(path, &content)
}

pub fn read_sidecar(path: &Path) -> CliResult<GroundTruthSidecar> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(e.to_string()))
}
