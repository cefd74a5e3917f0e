//! The six embedded code-quality rules, as pure checks over a [`SourceModel`].

mod catalog;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::lexparse::{classify_isr, registered_callbacks, IsrConfig, PatternError, SourceModel};

pub use catalog::{catalog, lookup, RuleInfo, DEFAULT_CRITICAL, EMBEDDED_RULES, KNOWN_EXTERNAL_RULES};

pub const NO_INCLUDE_GUARD: &str = "noIncludeGuard";
pub const C_IN_HEAD_FILE: &str = "cInHeadFile";
pub const SLOW_ISR: &str = "slowIRS";
pub const NOT_VOLATILE_VAR_ISR: &str = "notVolatileVarIrs";
pub const WRONG_USE_OF_VOLATILE: &str = "wrongUseOfVolatile";
pub const WRONG_USE_GLOBAL_VAR: &str = "wrongUseGlobalVar";
pub const PARSE_ERROR: &str = "parseError";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticSource {
    Embedded,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Diagnostic {
    pub rule_id: String,
    pub path: String,
    pub line: u32,
    /// Identifier the issue is about; may be empty.
    pub symbol: String,
    pub message: String,
    pub source: DiagnosticSource,
    pub severity: String,
    pub critical: bool,
}

impl Diagnostic {
    fn embedded(rule_id: &str, model: &SourceModel, line: u32, symbol: &str, message: String, cfg: &RuleConfig) -> Self {
        Diagnostic {
            rule_id: rule_id.to_string(),
            path: model.path.clone(),
            line,
            symbol: symbol.to_string(),
            message,
            source: DiagnosticSource::Embedded,
            severity: lookup(rule_id).map(|r| r.severity).unwrap_or("style").to_string(),
            critical: cfg.is_critical(rule_id),
        }
    }
}

/// Orders diagnostics by (path, line, rule id), ties broken by the remaining
/// fields so the order is total.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (&a.path, a.line, &a.rule_id, &a.symbol, &a.message, a.source)
            .cmp(&(&b.path, b.line, &b.rule_id, &b.symbol, &b.message, b.source))
    });
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RuleConfig {
    pub slow_call_names: BTreeSet<String>,
    pub isr_patterns: Vec<String>,
    pub isr_registration_calls: Vec<String>,
    pub allow_static_inline_in_headers: bool,
    pub accept_pragma_once_as_guard: bool,
    pub global_var_allowlist: BTreeSet<String>,
    pub critical_rules: BTreeSet<String>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        let isr = IsrConfig::default();
        RuleConfig {
            slow_call_names: ["sleep_ms", "delay_ms", "delay_us", "printf", "sprintf", "snprintf", "scanf"]
                .into_iter()
                .map(String::from)
                .collect(),
            isr_patterns: isr.isr_patterns,
            isr_registration_calls: isr.isr_registration_calls,
            allow_static_inline_in_headers: false,
            accept_pragma_once_as_guard: true,
            global_var_allowlist: BTreeSet::new(),
            critical_rules: DEFAULT_CRITICAL.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl RuleConfig {
    pub fn isr(&self) -> IsrConfig {
        IsrConfig {
            isr_patterns: self.isr_patterns.clone(),
            isr_registration_calls: self.isr_registration_calls.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), PatternError> {
        self.isr().validate()
    }

    pub fn is_critical(&self, rule_id: &str) -> bool {
        self.critical_rules.contains(rule_id)
    }
}

/// Cross-file facts for analyzing one file as part of a source tree.
#[derive(Debug, Clone, Default)]
pub struct TreeIndex {
    pub isrs: BTreeSet<String>,
    /// Per file path: global name → functions in *other* files that access it,
    /// as `(path, function)`.
    foreign: BTreeMap<String, BTreeMap<String, BTreeSet<(String, String)>>>,
}

impl TreeIndex {
    /// Index over a single file; equivalent to analyzing it in isolation.
    pub fn single(model: &SourceModel, cfg: &RuleConfig) -> Self {
        TreeIndex { isrs: classify_isr(model, &cfg.isr()), foreign: BTreeMap::new() }
    }

    pub fn build(models: &[SourceModel], cfg: &RuleConfig) -> Self {
        let isr_cfg = cfg.isr();
        let registered: BTreeSet<String> = models.iter().flat_map(|m| registered_callbacks(m, &isr_cfg)).collect();
        let mut isrs = BTreeSet::new();
        for m in models {
            isrs.extend(classify_isr(m, &isr_cfg));
            isrs.extend(m.functions.iter().filter(|f| registered.contains(&f.name)).map(|f| f.name.clone()));
        }

        let mut foreign: BTreeMap<String, BTreeMap<String, BTreeSet<(String, String)>>> = BTreeMap::new();
        for owner in models {
            for v in owner.global_vars.iter().filter(|v| !v.is_extern) {
                for other in models.iter().filter(|o| o.path != owner.path) {
                    // A file with its own definition of the name refers to that one.
                    if other.global_vars.iter().any(|g| g.name == v.name && !g.is_extern) {
                        continue;
                    }
                    for f in other.functions.iter().filter(|f| f.is_definition && f.touches_nonlocal(&v.name)) {
                        foreign
                            .entry(owner.path.clone())
                            .or_default()
                            .entry(v.name.clone())
                            .or_default()
                            .insert((other.path.clone(), f.name.clone()));
                    }
                }
            }
        }
        TreeIndex { isrs, foreign }
    }

    fn foreign_accessors(&self, path: &str, name: &str) -> impl Iterator<Item = &(String, String)> {
        self.foreign.get(path).and_then(|m| m.get(name)).into_iter().flatten()
    }
}

pub fn check_no_include_guard(model: &SourceModel, cfg: &RuleConfig) -> Vec<Diagnostic> {
    if !model.is_header() {
        return Vec::new();
    }
    let guarded = model.guard.has_ifndef_define_pair || (cfg.accept_pragma_once_as_guard && model.guard.has_pragma_once);
    if guarded {
        return Vec::new();
    }
    vec![Diagnostic::embedded(NO_INCLUDE_GUARD, model, 1, "", "header has no include guard".into(), cfg)]
}

pub fn check_c_in_head_file(model: &SourceModel, cfg: &RuleConfig) -> Vec<Diagnostic> {
    if !model.is_header() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for f in model.functions.iter().filter(|f| f.is_definition) {
        if f.is_static && f.is_inline && cfg.allow_static_inline_in_headers {
            continue;
        }
        let msg = format!("function '{}' is defined in a header file", f.name);
        out.push(Diagnostic::embedded(C_IN_HEAD_FILE, model, f.line, &f.name, msg, cfg));
    }
    for v in model.global_vars.iter().filter(|v| !v.is_extern) {
        let msg = format!("variable '{}' is defined in a header file", v.name);
        out.push(Diagnostic::embedded(C_IN_HEAD_FILE, model, v.line, &v.name, msg, cfg));
    }
    out
}

pub fn check_slow_isr(model: &SourceModel, isrs: &BTreeSet<String>, cfg: &RuleConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for f in model.functions.iter().filter(|f| f.is_definition && isrs.contains(&f.name)) {
        for c in f.calls.iter().filter(|c| cfg.slow_call_names.contains(&c.callee)) {
            let msg = format!("call to '{}' inside interrupt handler '{}'", c.callee, f.name);
            out.push(Diagnostic::embedded(SLOW_ISR, model, c.line, &c.callee, msg, cfg));
        }
        for l in &f.loops {
            let msg = format!("'{}' loop inside interrupt handler '{}'", l.kind.as_str(), f.name);
            out.push(Diagnostic::embedded(SLOW_ISR, model, l.line, l.kind.as_str(), msg, cfg));
        }
    }
    out
}

/// Globals touched by an interrupt handler must be volatile. Reported once
/// per variable, at its declaration.
pub fn check_not_volatile_var_isr(model: &SourceModel, isrs: &BTreeSet<String>) -> Vec<Diagnostic> {
    check_not_volatile_var_isr_in(model, &TreeIndex { isrs: isrs.clone(), ..TreeIndex::default() }, &RuleConfig::default())
}

fn check_not_volatile_var_isr_in(model: &SourceModel, index: &TreeIndex, cfg: &RuleConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for v in &model.global_vars {
        if !seen.insert(v.name.as_str()) {
            continue;
        }
        let decls: Vec<_> = model.global_vars.iter().filter(|g| g.name == v.name).collect();
        if decls.iter().any(|g| g.is_volatile || g.is_const) {
            continue;
        }
        let local_isr = model
            .functions
            .iter()
            .find(|f| f.is_definition && index.isrs.contains(&f.name) && f.touches_nonlocal(&v.name))
            .map(|f| f.name.clone());
        let handler = local_isr.or_else(|| {
            index
                .foreign_accessors(&model.path, &v.name)
                .find(|(_, f)| index.isrs.contains(f))
                .map(|(_, f)| f.clone())
        });
        let Some(handler) = handler else { continue };
        let decl = decls.iter().find(|g| !g.is_extern).unwrap_or(&decls[0]);
        let msg = format!("global '{}' is accessed by interrupt handler '{}' but is not volatile", v.name, handler);
        out.push(Diagnostic::embedded(NOT_VOLATILE_VAR_ISR, model, decl.line, &v.name, msg, cfg));
    }
    out
}

pub fn check_wrong_use_of_volatile(model: &SourceModel, cfg: &RuleConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for f in &model.functions {
        for v in f.params.iter().chain(&f.locals).filter(|v| v.is_volatile) {
            let what = if f.params.contains(v) { "parameter" } else { "local variable" };
            let msg = format!("{what} '{}' in '{}' does not need to be volatile", v.name, f.name);
            out.push(Diagnostic::embedded(WRONG_USE_OF_VOLATILE, model, v.line, &v.name, msg, cfg));
        }
    }
    out
}

/// File-scope variables whose scope could be narrowed: not shared with an
/// interrupt handler and used by at most one function. Headers are left to
/// `cInHeadFile`.
pub fn check_wrong_use_global_var(model: &SourceModel, isrs: &BTreeSet<String>, cfg: &RuleConfig) -> Vec<Diagnostic> {
    check_wrong_use_global_var_in(model, &TreeIndex { isrs: isrs.clone(), ..TreeIndex::default() }, cfg)
}

fn check_wrong_use_global_var_in(model: &SourceModel, index: &TreeIndex, cfg: &RuleConfig) -> Vec<Diagnostic> {
    if model.is_header() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for v in model.global_vars.iter().filter(|v| !v.is_extern && !v.is_const) {
        if cfg.global_var_allowlist.contains(&v.name) || !seen.insert(v.name.as_str()) {
            continue;
        }
        let mut users: BTreeSet<(String, String)> = model
            .functions
            .iter()
            .filter(|f| f.is_definition && f.touches_nonlocal(&v.name))
            .map(|f| (model.path.clone(), f.name.clone()))
            .collect();
        users.extend(index.foreign_accessors(&model.path, &v.name).cloned());
        if users.iter().any(|(_, f)| index.isrs.contains(f)) || users.len() > 1 {
            continue;
        }
        let msg = match users.iter().next() {
            Some((_, f)) => format!("global '{}' is only used in '{}'; its scope can be narrowed", v.name, f),
            None => format!("global '{}' is never used by any function", v.name),
        };
        out.push(Diagnostic::embedded(WRONG_USE_GLOBAL_VAR, model, v.line, &v.name, msg, cfg));
    }
    out
}

pub fn parse_error_diagnostics(model: &SourceModel, cfg: &RuleConfig) -> Vec<Diagnostic> {
    model
        .parse_errors
        .iter()
        .map(|e| Diagnostic::embedded(PARSE_ERROR, model, e.line, "", e.message.clone(), cfg))
        .collect()
}

/// All embedded checks on one file analyzed in isolation.
pub fn run_embedded_rules(model: &SourceModel, cfg: &RuleConfig) -> Vec<Diagnostic> {
    run_embedded_rules_in(model, &TreeIndex::single(model, cfg), cfg)
}

/// All embedded checks on one file of a tree described by `index`.
pub fn run_embedded_rules_in(model: &SourceModel, index: &TreeIndex, cfg: &RuleConfig) -> Vec<Diagnostic> {
    let mut out = parse_error_diagnostics(model, cfg);
    out.extend(check_no_include_guard(model, cfg));
    out.extend(check_c_in_head_file(model, cfg));
    out.extend(check_slow_isr(model, &index.isrs, cfg));
    out.extend(check_not_volatile_var_isr_in(model, index, cfg));
    out.extend(check_wrong_use_of_volatile(model, cfg));
    out.extend(check_wrong_use_global_var_in(model, index, cfg));
    sort_diagnostics(&mut out);
    out
}
