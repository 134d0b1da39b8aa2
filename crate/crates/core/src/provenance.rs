//! Reproducibility header embedded in every output artifact.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::rng::GENERATOR_ID;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub generator: String,
    pub seeds: Vec<(String, u64)>,
    /// `sha256:` digest of the canonical JSON form of the command's settings.
    pub config_digest: String,
}

impl Provenance {
    pub fn new<C: Serialize>(command: &str, config: &C, seeds: &[(&str, u64)]) -> Self {
        let canonical = serde_json::to_vec(config).expect("config serializes");
        Self {
            tool: "capeval".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            generator: GENERATOR_ID.to_string(),
            seeds: seeds.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            config_digest: digest(&canonical),
        }
    }

    /// `#`-prefixed lines for the tab-separated formats, all of which skip
    /// comment lines on read.
    pub fn header_lines(&self) -> String {
        let seeds = self
            .seeds
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        format!(
            "# {} {} command={}\n# generator={} seeds=[{}]\n# config={}\n",
            self.tool, self.version, self.command, self.generator, seeds, self.config_digest
        )
    }
}

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}
