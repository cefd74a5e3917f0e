use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarScope {
    File,
    Param,
    Local,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarModel {
    pub name: String,
    pub line: u32,
    pub scope: VarScope,
    pub is_volatile: bool,
    pub is_static: bool,
    pub is_extern: bool,
    pub is_const: bool,
    pub initialized_at_decl: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSite {
    pub callee: String,
    pub line: u32,
    /// Arguments that are a bare identifier (or `&identifier`).
    pub ident_args: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopKind {
    For,
    While,
    Do,
}

impl LoopKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LoopKind::For => "for",
            LoopKind::While => "while",
            LoopKind::Do => "do",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopSite {
    pub kind: LoopKind,
    pub line: u32,
}

/// A read or write of a name inside a function body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub name: String,
    pub line: u32,
    /// The name resolved to a parameter or a local in scope at this point.
    pub local: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: u32,
    pub end: u32,
}

impl LineSpan {
    pub fn contains(&self, line: u32) -> bool {
        self.start <= line && line <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionModel {
    pub name: String,
    pub line: u32,
    pub is_definition: bool,
    pub is_static: bool,
    pub is_inline: bool,
    /// Lines of the opening and closing brace.
    pub body: Option<LineSpan>,
    pub params: Vec<VarModel>,
    pub locals: Vec<VarModel>,
    pub calls: Vec<CallSite>,
    pub loops: Vec<LoopSite>,
    pub writes: Vec<Access>,
    pub reads: Vec<Access>,
}

impl FunctionModel {
    pub(crate) fn declaration(name: String, line: u32) -> Self {
        FunctionModel {
            name,
            line,
            is_definition: false,
            is_static: false,
            is_inline: false,
            body: None,
            params: Vec::new(),
            locals: Vec::new(),
            calls: Vec::new(),
            loops: Vec::new(),
            writes: Vec::new(),
            reads: Vec::new(),
        }
    }

    /// Non-local names read or written in the body.
    pub fn nonlocal_accesses(&self) -> impl Iterator<Item = &Access> {
        self.writes.iter().chain(&self.reads).filter(|a| !a.local)
    }

    pub fn touches_nonlocal(&self, name: &str) -> bool {
        self.nonlocal_accesses().any(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Include {
    pub name: String,
    pub line: u32,
    pub system: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardFacts {
    pub has_ifndef_define_pair: bool,
    pub has_pragma_once: bool,
    pub macro_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Directive {
    /// `include`, `ifndef`, `define`, ...; empty for a bare `#`.
    pub name: String,
    pub argument: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    pub line: u32,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub path: String,
    pub includes: Vec<Include>,
    pub guard: GuardFacts,
    pub functions: Vec<FunctionModel>,
    pub global_vars: Vec<VarModel>,
    pub directives: Vec<Directive>,
    pub line_count: u32,
    /// Significant tokens of each non-blank line joined by single spaces;
    /// comment-only and blank lines are absent.
    pub normalized_lines: BTreeMap<u32, String>,
    pub parse_errors: Vec<ParseError>,
}

impl SourceModel {
    pub fn is_header(&self) -> bool {
        self.path.ends_with(".h")
    }

    pub fn function(&self, name: &str) -> Option<&FunctionModel> {
        self.functions.iter().find(|f| f.name == name && f.is_definition)
    }

    pub fn global(&self, name: &str) -> Option<&VarModel> {
        self.global_vars.iter().find(|v| v.name == name)
    }

    /// Function definition whose body contains `line`.
    pub fn enclosing_function(&self, line: u32) -> Option<&FunctionModel> {
        self.functions.iter().find(|f| f.body.is_some_and(|b| b.contains(line)))
    }
}
