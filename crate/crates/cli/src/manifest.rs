//! `manifest.txt`: provenance for one experiment run.

use sha2::{Digest, Sha256};

pub const TOOL: &str = "rbcom-sim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

/// Renders the manifest. `canonical_config` is hashed, not embedded.
pub fn render(experiment: &str, seed: u64, canonical_config: &str, files: &[&str]) -> String {
    format!(
        "tool={TOOL}\nversion={VERSION}\nexperiment={experiment}\nseed={seed}\nconfig_sha256={}\nfiles={}\n",
        sha256_hex(canonical_config.as_bytes()),
        files.join(",")
    )
}
