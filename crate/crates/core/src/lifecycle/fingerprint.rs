use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lexparse::SourceModel;
use crate::rules::{Diagnostic, DiagnosticSource, NO_INCLUDE_GUARD};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    pub rule_id: String,
    pub path: String,
    pub symbol: String,
    pub context_hash: String,
    /// Distinguishes otherwise identical fingerprints in one file, in line order.
    pub ordinal: u32,
}

/// A fingerprinted diagnostic of one commit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub fingerprint: Fingerprint,
    pub path: String,
    pub line: u32,
    pub source: DiagnosticSource,
    pub severity: String,
    pub critical: bool,
    pub message: String,
}

fn short_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Context of a diagnostic that survives line shifts. With a symbol, the
/// enclosing function is enough; without one, the code on the two non-blank
/// lines either side is used.
pub fn context_hash(diag: &Diagnostic, model: Option<&SourceModel>) -> String {
    let Some(model) = model else { return short_hash("") };
    if diag.rule_id == NO_INCLUDE_GUARD {
        return short_hash("<file>");
    }
    if !diag.symbol.is_empty() {
        let scope = model.enclosing_function(diag.line).map(|f| format!("fn {}", f.name)).unwrap_or_else(|| "<file>".into());
        return short_hash(&scope);
    }
    let lines = &model.normalized_lines;
    let mut window: Vec<&str> = lines.range(..diag.line).rev().take(2).map(|(_, t)| t.as_str()).collect();
    window.reverse();
    window.push(lines.get(&diag.line).map(String::as_str).unwrap_or(""));
    window.extend(lines.range(diag.line + 1..).take(2).map(|(_, t)| t.as_str()));
    short_hash(&window.join("\n"))
}

/// Fingerprint with ordinal 0; [`observe`] assigns ordinals.
pub fn fingerprint(diag: &Diagnostic, model: &SourceModel) -> Fingerprint {
    Fingerprint {
        rule_id: diag.rule_id.clone(),
        path: diag.path.clone(),
        symbol: diag.symbol.clone(),
        context_hash: context_hash(diag, Some(model)),
        ordinal: 0,
    }
}

/// Fingerprints all diagnostics of one commit. `models` maps paths to their
/// parsed source; diagnostics on unparsed paths get an empty context.
pub fn observe(diags: &[Diagnostic], models: &BTreeMap<String, SourceModel>) -> Vec<Observation> {
    let mut sorted: Vec<&Diagnostic> = diags.iter().collect();
    sorted.sort_by(|a, b| (&a.path, a.line, &a.rule_id, &a.symbol, &a.message).cmp(&(&b.path, b.line, &b.rule_id, &b.symbol, &b.message)));
    let mut counts: BTreeMap<Fingerprint, u32> = BTreeMap::new();
    sorted
        .into_iter()
        .map(|d| {
            let mut fp = Fingerprint {
                rule_id: d.rule_id.clone(),
                path: d.path.clone(),
                symbol: d.symbol.clone(),
                context_hash: context_hash(d, models.get(&d.path)),
                ordinal: 0,
            };
            let n = counts.entry(fp.clone()).or_default();
            fp.ordinal = *n;
            *n += 1;
            Observation {
                fingerprint: fp,
                path: d.path.clone(),
                line: d.line,
                source: d.source,
                severity: d.severity.clone(),
                critical: d.critical,
                message: d.message.clone(),
            }
        })
        .collect()
}
