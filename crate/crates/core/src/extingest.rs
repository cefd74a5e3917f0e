//! Diagnostics from the external C analyzer (cppcheck), either by running it
//! over a source tree or by reading a saved XML version-2 report.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use crate::rules::{sort_diagnostics, Diagnostic, DiagnosticSource};

pub const PATH_ENV: &str = "EMBERMINE_EXTERNAL_PATH";
pub const DEFAULT_EXECUTABLE: &str = "cppcheck";
pub const BASE_ARGS: [&str; 4] = ["--xml", "--xml-version=2", "--enable=warning,style,performance,portability", "--quiet"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExternalConfig {
    pub path: Option<PathBuf>,
    pub extra_args: Vec<String>,
    pub timeout_s: u64,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        ExternalConfig { path: None, extra_args: Vec::new(), timeout_s: 120 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExternalError {
    #[error("external analyzer unavailable: {0}")]
    AnalyzerUnavailable(String),
    #[error("external analyzer failed ({status}): {output}")]
    AnalyzerFailed { status: String, output: String },
    #[error("external analyzer timed out after {0} s")]
    AnalyzerTimeout(u64),
    #[error("malformed analyzer report at byte {offset}: {message}")]
    ReportParseError { offset: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalEntry {
    pub rule_id: String,
    pub path: String,
    pub line: u32,
    pub severity: String,
    pub message: String,
    pub symbol: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalReport {
    pub tool: String,
    pub version: String,
    pub entries: Vec<ExternalEntry>,
}

impl ExternalReport {
    /// One diagnostic per entry, in (path, line, rule) order.
    pub fn to_diagnostics(&self, critical: &BTreeSet<String>) -> Vec<Diagnostic> {
        let mut out: Vec<Diagnostic> = self
            .entries
            .iter()
            .map(|e| Diagnostic {
                rule_id: e.rule_id.clone(),
                path: e.path.clone(),
                line: e.line,
                symbol: e.symbol.clone(),
                message: e.message.clone(),
                source: DiagnosticSource::External,
                severity: e.severity.clone(),
                critical: critical.contains(&e.rule_id),
            })
            .collect();
        sort_diagnostics(&mut out);
        out
    }
}

fn normalize_path(p: &str) -> String {
    let p = p.replace('\\', "/");
    let mut s = p.as_str();
    while let Some(rest) = s.strip_prefix("./") {
        s = rest;
    }
    s.to_string()
}

fn parse_err(reader: &Reader<&[u8]>, message: impl Into<String>) -> ExternalError {
    ExternalError::ReportParseError { offset: reader.buffer_position(), message: message.into() }
}

fn attr(reader: &Reader<&[u8]>, e: &BytesStart, key: &[u8]) -> Result<Option<String>, ExternalError> {
    for a in e.attributes() {
        let a = a.map_err(|err| parse_err(reader, err.to_string()))?;
        if a.key.as_ref() == key {
            let v = a.unescape_value().map_err(|err| parse_err(reader, err.to_string()))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

/// Parses a cppcheck XML version-2 report. Unknown elements and attributes
/// are ignored; an entry with several locations is placed at the first one.
pub fn parse_external_report(xml: &str) -> Result<ExternalReport, ExternalError> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().check_end_names = true;

    let mut stack: Vec<Vec<u8>> = Vec::new();
    let mut saw_root = false;
    let mut closed_root = false;
    let mut version = String::new();
    let mut entries = Vec::new();
    let mut current: Option<ExternalEntry> = None;
    let mut has_location = false;

    loop {
        let ev = reader.read_event().map_err(|e| parse_err(&reader, e.to_string()))?;
        match ev {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(ev, Event::Empty(_));
                let name = e.name().as_ref().to_vec();
                if closed_root {
                    return Err(parse_err(&reader, "content after </results>"));
                }
                match (stack.last().map(Vec::as_slice), name.as_slice()) {
                    (None, b"results") => {
                        saw_root = true;
                        if let Some(v) = attr(&reader, e, b"version")? {
                            if v != "2" {
                                return Err(parse_err(&reader, format!("unsupported report version {v}")));
                            }
                        }
                    }
                    (None, other) => {
                        return Err(parse_err(&reader, format!("unexpected root <{}>", String::from_utf8_lossy(other))))
                    }
                    (Some(b"results"), b"cppcheck") => version = attr(&reader, e, b"version")?.unwrap_or_default(),
                    (Some(b"errors"), b"error") => {
                        let id = attr(&reader, e, b"id")?.ok_or_else(|| parse_err(&reader, "<error> without id"))?;
                        let entry = ExternalEntry {
                            rule_id: id,
                            path: attr(&reader, e, b"file0")?.map(|p| normalize_path(&p)).unwrap_or_default(),
                            line: 0,
                            severity: attr(&reader, e, b"severity")?.unwrap_or_default(),
                            message: attr(&reader, e, b"msg")?.unwrap_or_default(),
                            symbol: String::new(),
                        };
                        has_location = false;
                        if empty {
                            entries.push(entry);
                        } else {
                            current = Some(entry);
                        }
                    }
                    (Some(b"error"), b"location") if !has_location => {
                        if let Some(cur) = current.as_mut() {
                            has_location = true;
                            if let Some(f) = attr(&reader, e, b"file")? {
                                cur.path = normalize_path(&f);
                            }
                            let line = attr(&reader, e, b"line")?.unwrap_or_default();
                            cur.line = line.parse().map_err(|_| parse_err(&reader, format!("bad line number {line:?}")))?;
                        }
                    }
                    _ => {}
                }
                if !empty {
                    stack.push(name);
                }
            }
            Event::Text(t) => {
                if stack.last().map(Vec::as_slice) == Some(b"symbol".as_slice()) {
                    if let Some(cur) = current.as_mut() {
                        if cur.symbol.is_empty() {
                            cur.symbol = t.unescape().map_err(|e| parse_err(&reader, e.to_string()))?.trim().to_string();
                        }
                    }
                }
            }
            Event::End(_) => {
                let name = stack.pop().ok_or_else(|| parse_err(&reader, "unbalanced end tag"))?;
                match name.as_slice() {
                    b"error" => entries.extend(current.take()),
                    b"results" if stack.is_empty() => closed_root = true,
                    _ => {}
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !saw_root || !closed_root {
        return Err(ExternalError::ReportParseError {
            offset: xml.len() as u64,
            message: "document ended before </results>".into(),
        });
    }
    Ok(ExternalReport { tool: DEFAULT_EXECUTABLE.into(), version, entries })
}

pub fn load_external_report(path: &Path) -> Result<ExternalReport, ExternalError> {
    parse_external_report(&std::fs::read_to_string(path)?)
}

/// Locates the analyzer: configured path, then the environment override,
/// then `cppcheck` on `PATH`.
pub fn discover(cfg: &ExternalConfig) -> Result<PathBuf, ExternalError> {
    if let Some(p) = &cfg.path {
        return if p.is_file() {
            Ok(p.clone())
        } else {
            Err(ExternalError::AnalyzerUnavailable(format!("{} does not exist", p.display())))
        };
    }
    if let Some(p) = std::env::var_os(PATH_ENV).filter(|p| !p.is_empty()) {
        let p = PathBuf::from(p);
        return if p.is_file() {
            Ok(p)
        } else {
            Err(ExternalError::AnalyzerUnavailable(format!("{PATH_ENV}={} does not exist", p.display())))
        };
    }
    std::env::var_os("PATH")
        .iter()
        .flat_map(std::env::split_paths)
        .map(|d| d.join(DEFAULT_EXECUTABLE))
        .find(|p| p.is_file())
        .ok_or_else(|| ExternalError::AnalyzerUnavailable(format!("{DEFAULT_EXECUTABLE} not found on PATH")))
}

/// Version string reported by `<exe> --version`, e.g. `2.22.0`.
pub fn analyzer_version(cfg: &ExternalConfig) -> Result<String, ExternalError> {
    let exe = discover(cfg)?;
    let out = Command::new(&exe)
        .arg("--version")
        .stdin(Stdio::null())
        .output()
        .map_err(|e| ExternalError::AnalyzerUnavailable(format!("{}: {e}", exe.display())))?;
    let text = String::from_utf8_lossy(&out.stdout);
    Ok(text.split_whitespace().nth(1).unwrap_or(text.trim()).to_string())
}

/// C translation units under `tree`, relative and sorted.
pub fn source_files(tree: &Path) -> Vec<String> {
    let mut files: Vec<String> = walkdir::WalkDir::new(tree)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "c"))
        .filter_map(|e| e.path().strip_prefix(tree).ok().map(|p| p.to_string_lossy().replace('\\', "/")))
        .collect();
    files.sort();
    files
}

/// Runs the analyzer over every `.c` file of `tree`. Headers are analyzed
/// through the files that include them.
pub fn run_external_analyzer(tree: &Path, cfg: &ExternalConfig) -> Result<ExternalReport, ExternalError> {
    let exe = discover(cfg)?;
    let files = source_files(tree);
    if files.is_empty() {
        let version = analyzer_version(cfg).unwrap_or_default();
        return Ok(ExternalReport { tool: DEFAULT_EXECUTABLE.into(), version, entries: Vec::new() });
    }

    let scratch = tempfile::tempdir()?;
    let report = scratch.path().join("report.xml");
    let log = scratch.path().join("output.log");
    let mut child = Command::new(&exe)
        .current_dir(tree)
        .args(BASE_ARGS)
        .arg(format!("--output-file={}", report.display()))
        .args(&cfg.extra_args)
        .args(&files)
        .stdin(Stdio::null())
        .stdout(File::create(&log)?)
        .stderr(File::create(&log)?)
        .spawn()
        .map_err(|e| ExternalError::AnalyzerUnavailable(format!("{}: {e}", exe.display())))?;

    let status = match child.wait_timeout(Duration::from_secs(cfg.timeout_s))? {
        Some(s) => s,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(ExternalError::AnalyzerTimeout(cfg.timeout_s));
        }
    };
    let xml = std::fs::read_to_string(&report).unwrap_or_default();
    match parse_external_report(&xml) {
        Ok(mut r) => {
            if r.version.is_empty() {
                r.version = analyzer_version(cfg).unwrap_or_default();
            }
            Ok(r)
        }
        Err(e) if status.success() => Err(e),
        Err(_) => Err(ExternalError::AnalyzerFailed {
            status: status.to_string(),
            output: std::fs::read_to_string(&log).unwrap_or_default(),
        }),
    }
}
