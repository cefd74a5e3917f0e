use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lifecycle::{ExternalStatus, Observation};
use crate::rules::RuleConfig;

/// Bumped whenever cached payloads change meaning.
pub const CACHE_VERSION: u32 = 1;

/// Per-tree analysis results, addressed by content.
#[derive(Debug, Clone)]
pub struct DiagnosticCache {
    dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub observations: Vec<Observation>,
    pub external: ExternalStatus,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn rule_config_hash(cfg: &RuleConfig) -> String {
    sha256_hex(&serde_json::to_vec(cfg).expect("rule config serializes"))
}

/// Key of one analysis: tree, rule configuration and analyzer identity.
pub fn cache_key(tree_id: &str, rule_hash: &str, analyzer: &str) -> String {
    sha256_hex(format!("v{CACHE_VERSION}\0{tree_id}\0{rule_hash}\0{analyzer}").as_bytes())
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

impl DiagnosticCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        DiagnosticCache { dir: dir.into() }
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    /// A missing or unreadable entry is a miss.
    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        let bytes = std::fs::read(self.path(key)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    pub fn put(&self, key: &str, entry: &CacheEntry) -> std::io::Result<()> {
        write_atomic(&self.path(key), &serde_json::to_vec(entry)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_key_sensitivity() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiagnosticCache::new(dir.path());
        let rules = rule_config_hash(&RuleConfig::default());
        let key = cache_key("abc", &rules, "none");
        assert!(cache.get(&key).is_none());
        let entry = CacheEntry { observations: vec![], external: ExternalStatus::Disabled };
        cache.put(&key, &entry).unwrap();
        assert_eq!(cache.get(&key), Some(entry));
        assert_ne!(key, cache_key("abd", &rules, "none"));
        assert_ne!(key, cache_key("abc", &rules, "2.22.0"));
        let mut other = RuleConfig::default();
        other.slow_call_names.insert("lcd_print".into());
        assert_ne!(key, cache_key("abc", &rule_config_hash(&other), "none"));
    }

    #[test]
    fn corrupt_entry_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiagnosticCache::new(dir.path());
        let key = cache_key("t", "r", "a");
        write_atomic(&cache.path(&key), b"{\"observ").unwrap();
        assert!(cache.get(&key).is_none());
    }
}
