//! Run configuration: one JSON document drives the whole pipeline. Flags
//! override file values; the manifest records a hash of the effective
//! config so artifact directories are self-describing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embed::Node2vecParams;
use crate::error::{Error, Result};
use crate::synth::SyntheticSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridConfig {
    pub split_ratio: f64,
    pub epochs: usize,
    pub lr: f64,
    /// indicator entries (true) vs raw vote weights (false) in X
    pub binarize: bool,
    pub blend_epochs: usize,
    pub blend_lr: f64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            split_ratio: 0.8,
            epochs: 40,
            lr: 1e-4,
            binarize: true,
            blend_epochs: 200,
            blend_lr: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub reviews_path: PathBuf,
    pub friends_path: PathBuf,
    pub out_dir: PathBuf,

    pub min_reviews: usize,
    pub high_stars: u8,
    pub low_stars: u8,
    pub epsilon: f64,

    pub dim: usize,
    /// per-method overrides of `dim`; spectral in particular follows the
    /// convention that d nontrivial eigenvectors resolve d+1 clusters
    pub node2vec_dim: Option<usize>,
    pub spectral_dim: Option<usize>,
    pub hope_dim: Option<usize>,
    pub node2vec: Node2vecParams,
    /// Katz decay; None picks half the divergence limit from the graph.
    pub hope_beta: Option<f64>,
    /// error out on disconnected graphs instead of embedding the nullspace
    pub spectral_strict: bool,

    pub k_min: usize,
    pub k_max: usize,
    pub kmeans_max_iter: usize,

    pub cohort_size: usize,
    pub eligibility_lower: usize,
    pub eligibility_upper: usize,
    pub n_neighbors: usize,
    /// per-user recommendation list cap; evaluation truncates further
    pub rec_list_len: usize,
    /// drop the user's own high-rated items from their list (serving mode);
    /// evaluation needs this off, hits are counted against those items
    pub exclude_own: bool,

    pub eval_ks: Vec<usize>,
    pub hybrid: HybridConfig,
    pub seed: u64,
    pub synth: SyntheticSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            reviews_path: PathBuf::from("reviews.jsonl"),
            friends_path: PathBuf::from("friends.jsonl"),
            out_dir: PathBuf::from("out"),
            min_reviews: 10,
            high_stars: 4,
            low_stars: 2,
            epsilon: 0.001,
            dim: 25,
            node2vec_dim: None,
            spectral_dim: None,
            hope_dim: None,
            node2vec: Node2vecParams::default(),
            hope_beta: None,
            spectral_strict: true,
            k_min: 2,
            k_max: 10,
            kmeans_max_iter: 100,
            cohort_size: 100,
            eligibility_lower: 5,
            eligibility_upper: 50,
            n_neighbors: 10,
            rec_list_len: 200,
            exclude_own: false,
            eval_ks: vec![100, 200],
            hybrid: HybridConfig::default(),
            seed: 7,
            synth: SyntheticSpec::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let config: PipelineConfig =
            serde_json::from_str(&std::fs::read_to_string(path)?)?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Checks every constraint and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if self.min_reviews == 0 {
            v.push("min_reviews must be >= 1".to_string());
        }
        if self.low_stars >= self.high_stars {
            v.push(format!(
                "low_stars ({}) must sit below high_stars ({})",
                self.low_stars, self.high_stars
            ));
        }
        if self.high_stars > 5 {
            v.push("high_stars must be <= 5".to_string());
        }
        if self.epsilon < 0.0 {
            v.push("epsilon must be non-negative".to_string());
        }
        if self.dim == 0 {
            v.push("dim must be positive".to_string());
        }
        for (name, d) in [
            ("node2vec_dim", self.node2vec_dim),
            ("spectral_dim", self.spectral_dim),
            ("hope_dim", self.hope_dim),
        ] {
            if d == Some(0) {
                v.push(format!("{name} must be positive when set"));
            }
        }
        if !(self.node2vec.p > 0.0 && self.node2vec.q > 0.0) {
            v.push("node2vec p and q must be positive".to_string());
        }
        if self.node2vec.walk_length < 2 {
            v.push("node2vec walk_length must be >= 2".to_string());
        }
        if self.node2vec.window == 0 || self.node2vec.walks_per_node == 0 {
            v.push("node2vec window and walks_per_node must be positive".to_string());
        }
        if let Some(beta) = self.hope_beta {
            if beta <= 0.0 {
                v.push(format!("hope_beta must be positive, got {beta}"));
            }
        }
        if !(2 <= self.k_min && self.k_min < self.k_max) {
            v.push(format!(
                "cluster scan needs 2 <= k_min < k_max, got [{}, {}]",
                self.k_min, self.k_max
            ));
        }
        if self.kmeans_max_iter == 0 {
            v.push("kmeans_max_iter must be positive".to_string());
        }
        if self.cohort_size == 0 {
            v.push("cohort_size must be positive".to_string());
        }
        if !(1 <= self.eligibility_lower && self.eligibility_lower <= self.eligibility_upper) {
            v.push(format!(
                "eligibility bounds need 1 <= lower <= upper, got [{}, {}]",
                self.eligibility_lower, self.eligibility_upper
            ));
        }
        if self.n_neighbors == 0 {
            v.push("n_neighbors must be positive".to_string());
        }
        if self.rec_list_len == 0 {
            v.push("rec_list_len must be positive".to_string());
        }
        if self.eval_ks.is_empty() || self.eval_ks.contains(&0) {
            v.push("eval_ks must be non-empty positive integers".to_string());
        }
        if !(self.hybrid.split_ratio > 0.0 && self.hybrid.split_ratio < 1.0) {
            v.push(format!(
                "hybrid split_ratio must lie in (0, 1), got {}",
                self.hybrid.split_ratio
            ));
        }
        if let Err(Error::ConfigValidation(mut sv)) = self.synth.validate() {
            v.append(&mut sv);
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(v))
        }
    }

    /// SHA-256 of the canonical JSON form; changes iff any field changes.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn round_trips_through_json() {
        let config = PipelineConfig::default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        config.save(&path).unwrap();
        assert_eq!(PipelineConfig::load(&path).unwrap(), config);
    }

    #[test]
    fn empty_document_fills_defaults() {
        let config: PipelineConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(config, PipelineConfig::default());
    }

    #[test]
    fn all_violations_are_reported_together() {
        let config = PipelineConfig {
            min_reviews: 0,
            dim: 0,
            k_min: 5,
            k_max: 5,
            eval_ks: vec![],
            ..PipelineConfig::default()
        };
        match config.validate() {
            Err(Error::ConfigValidation(v)) => assert_eq!(v.len(), 4, "{v:?}"),
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn hash_changes_with_any_field() {
        let base = PipelineConfig::default();
        let mut changed = base.clone();
        changed.seed += 1;
        assert_ne!(base.hash(), changed.hash());
        assert_eq!(base.hash(), PipelineConfig::default().hash());
    }

    #[test]
    fn missing_file_is_a_missing_artifact() {
        assert!(matches!(
            PipelineConfig::load(Path::new("/nonexistent/config.json")),
            Err(Error::MissingArtifact(_))
        ));
    }
}
