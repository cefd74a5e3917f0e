use serde::Serialize;

use super::DiagnosticSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RuleInfo {
    pub id: &'static str,
    pub source: DiagnosticSource,
    pub severity: &'static str,
    pub critical_default: bool,
    pub description: &'static str,
}

const fn embedded(id: &'static str, severity: &'static str, critical_default: bool, description: &'static str) -> RuleInfo {
    RuleInfo { id, source: DiagnosticSource::Embedded, severity, critical_default, description }
}

const fn external(id: &'static str, severity: &'static str, critical_default: bool, description: &'static str) -> RuleInfo {
    RuleInfo { id, source: DiagnosticSource::External, severity, critical_default, description }
}

pub const DEFAULT_CRITICAL: [&str; 4] = ["zerodivcond", "syntaxError", "uninitvar", "notVolatileVarIrs"];

pub const EMBEDDED_RULES: [RuleInfo; 7] = [
    embedded("noIncludeGuard", "style", false, "Header file is not protected by an include guard."),
    embedded("cInHeadFile", "style", false, "Function or variable defined in a header file."),
    embedded("slowIRS", "performance", false, "Slow call or loop inside an interrupt service routine."),
    embedded("notVolatileVarIrs", "warning", true, "Global accessed by an interrupt service routine is not volatile."),
    embedded("wrongUseOfVolatile", "style", false, "Local variable or parameter declared volatile."),
    embedded("wrongUseGlobalVar", "style", false, "Global variable whose scope could be narrowed to one function."),
    embedded("parseError", "error", false, "Source could not be parsed completely."),
];

/// External analyzer ids with a description. Other ids reported by the
/// analyzer are accepted as they come.
pub const KNOWN_EXTERNAL_RULES: [RuleInfo; 16] = [
    external("syntaxError", "error", true, "Code does not compile."),
    external("zerodivcond", "warning", true, "Possible division by zero."),
    external("uninitvar", "error", true, "Variable used before initialization."),
    external("legacyUninitvar", "error", false, "Variable used before initialization (legacy check)."),
    external("constParameterPointer", "style", false, "Pointer parameter can point to const."),
    external("constVariablePointer", "style", false, "Pointer variable can point to const."),
    external("constVariable", "style", false, "Variable can be const."),
    external("unreadVariable", "style", false, "Variable assigned a value that is never used."),
    external("unusedVariable", "style", false, "Variable is never used."),
    external("unusedStructMember", "style", false, "Struct member is never used."),
    external("variableScope", "style", false, "Scope of the variable can be reduced."),
    external("shadowVariable", "style", false, "Local variable shadows an outer variable."),
    external("invalidPrintfArgType_sint", "warning", false, "printf format expects a different argument type."),
    external("invalidPrintfArgType_uint", "warning", false, "printf format expects a different argument type."),
    external("missingReturn", "error", false, "Function with a return type does not return a value."),
    external("redundantInitialization", "style", false, "Initialized value is overwritten before use."),
];

pub fn catalog() -> Vec<RuleInfo> {
    EMBEDDED_RULES.iter().chain(KNOWN_EXTERNAL_RULES.iter()).copied().collect()
}

pub fn lookup(id: &str) -> Option<RuleInfo> {
    EMBEDDED_RULES.iter().chain(KNOWN_EXTERNAL_RULES.iter()).find(|r| r.id == id).copied()
}
