use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use glob::Pattern;

use super::GitMinerError;

pub const TEMPLATE: &str = "TEMPLATE";

/// Maps commit identities to canonical author ids.
///
/// Map file lines look like `alice Alice Smith <alice@uni.edu>`: the first
/// word is the canonical id, the rest an optional display name and the
/// address. `#` starts a comment.
#[derive(Debug, Clone, Default)]
pub struct AuthorMap {
    by_email: BTreeMap<String, String>,
    by_name: BTreeMap<String, String>,
    template_patterns: Vec<Pattern>,
    template_before: Option<DateTime<Utc>>,
}

impl AuthorMap {
    pub fn parse(text: &str) -> Result<Self, GitMinerError> {
        let mut map = AuthorMap::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || GitMinerError::AuthorMap { line: n as u32 + 1, message: format!("expected `canonical [name] <email>`, got {raw:?}") };
            let (head, rest) = line.split_once('<').ok_or_else(bad)?;
            let (email, tail) = rest.split_once('>').ok_or_else(bad)?;
            if !tail.trim().is_empty() {
                return Err(bad());
            }
            let mut words = head.split_whitespace();
            let canonical = words.next().ok_or_else(bad)?.to_string();
            let name = words.collect::<Vec<_>>().join(" ");
            map.by_email.insert(email.trim().to_lowercase(), canonical.clone());
            if !name.is_empty() {
                map.by_name.insert(name, canonical);
            }
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self, GitMinerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GitMinerError::AuthorMap { line: 0, message: format!("{}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    /// Identities whose name or email matches one of `patterns` are template authors.
    pub fn with_template_authors(mut self, patterns: &[String]) -> Result<Self, GitMinerError> {
        for p in patterns {
            let pat = Pattern::new(p).map_err(|e| GitMinerError::AuthorMap { line: 0, message: format!("pattern {p:?}: {e}") })?;
            self.template_patterns.push(pat);
        }
        Ok(self)
    }

    /// Commits authored strictly before `start` are template commits.
    pub fn with_template_before(mut self, start: Option<DateTime<Utc>>) -> Self {
        self.template_before = start;
        self
    }

    /// Canonical id for an identity, ignoring template rules. Unmapped
    /// identities fall back to the lowercased email, or the name without one.
    pub fn canonical(&self, name: &str, email: &str) -> String {
        let key = email.trim().to_lowercase();
        if let Some(id) = self.by_email.get(&key).or_else(|| self.by_name.get(name.trim())) {
            return id.clone();
        }
        if key.is_empty() {
            name.trim().to_string()
        } else {
            key
        }
    }

    /// Canonical id of a commit author, `TEMPLATE` for instructor code.
    pub fn resolve(&self, name: &str, email: &str, timestamp: i64) -> String {
        let is_template = self.template_patterns.iter().any(|p| p.matches(name) || p.matches(&email.to_lowercase()))
            || self.template_before.is_some_and(|start| timestamp < start.timestamp());
        if is_template {
            TEMPLATE.to_string()
        } else {
            self.canonical(name, email)
        }
    }
}
