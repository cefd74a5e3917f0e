//! Tokenizer and lightweight structural model of a C translation unit.
//!
//! No preprocessing happens: `#include` is recorded rather than expanded,
//! macros stay identifiers, and both arms of conditional blocks are parsed.

mod lexer;
mod model;
mod parser;

use std::collections::BTreeSet;

use glob::Pattern;
use serde::{Deserialize, Serialize};

pub use lexer::{decode_source, is_keyword, tokenize, DecodeError, LexError, Token, TokenKind, TokenStream};
pub use model::*;
pub use parser::parse_translation_unit;

/// Tokenizes and parses `text` in one step.
pub fn parse_source(path: &str, text: &str) -> SourceModel {
    parse_translation_unit(&tokenize(text), path)
}

#[derive(Debug, thiserror::Error)]
#[error("invalid ISR pattern {pattern:?}: {source}")]
pub struct PatternError {
    pub pattern: String,
    #[source]
    pub source: glob::PatternError,
}

/// How interrupt handlers are recognized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsrConfig {
    /// Glob patterns over function names.
    pub isr_patterns: Vec<String>,
    /// Calls whose bare-identifier arguments name interrupt handlers,
    /// e.g. `pio_handler_set(PIOA, ID, MASK, attr, but_cb)`.
    pub isr_registration_calls: Vec<String>,
}

impl Default for IsrConfig {
    fn default() -> Self {
        IsrConfig {
            isr_patterns: vec!["*_Handler".into(), "*_IRQHandler".into(), "*_callback".into()],
            isr_registration_calls: Vec::new(),
        }
    }
}

impl IsrConfig {
    pub fn validate(&self) -> Result<(), PatternError> {
        self.compiled().map(|_| ())
    }

    fn compiled(&self) -> Result<Vec<Pattern>, PatternError> {
        self.isr_patterns
            .iter()
            .map(|p| Pattern::new(p).map_err(|source| PatternError { pattern: p.clone(), source }))
            .collect()
    }

    pub fn name_matches(&self, name: &str) -> bool {
        // Invalid patterns never match; `validate` reports them at config load.
        self.isr_patterns.iter().filter_map(|p| Pattern::new(p).ok()).any(|p| p.matches(name))
    }
}

/// Names passed as bare arguments to a registration call anywhere in `model`.
pub fn registered_callbacks(model: &SourceModel, cfg: &IsrConfig) -> BTreeSet<String> {
    model
        .functions
        .iter()
        .flat_map(|f| &f.calls)
        .filter(|c| cfg.isr_registration_calls.contains(&c.callee))
        .flat_map(|c| c.ident_args.iter().cloned())
        .collect()
}

/// Functions of `model` that are interrupt handlers: the name matches a
/// configured pattern, or the function is handed to a registration call.
pub fn classify_isr(model: &SourceModel, cfg: &IsrConfig) -> BTreeSet<String> {
    let registered = registered_callbacks(model, cfg);
    let patterns: Vec<Pattern> = cfg.isr_patterns.iter().filter_map(|p| Pattern::new(p).ok()).collect();
    model
        .functions
        .iter()
        .filter(|f| registered.contains(&f.name) || patterns.iter().any(|p| p.matches(&f.name)))
        .map(|f| f.name.clone())
        .collect()
}

#[cfg(test)]
mod tests;
