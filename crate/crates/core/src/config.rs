//! The run configuration file (TOML).
//!
//! ```toml
//! [rules]
//! slow_call_names = ["printf", "sleep_ms"]
//! isr_patterns = ["*_isr", "*_IRQHandler"]
//!
//! [external]
//! path = "/usr/bin/cppcheck"
//! timeout_s = 60
//!
//! [authors]
//! map = "authors.txt"
//! template_authors = ["*@staff.example.edu"]
//!
//! [project]
//! start = "2024-02-01"
//! deadline = "2024-03-15T23:59:00Z"
//!
//! [output]
//! dir = "out"
//!
//! [cohort]
//! labs = "labs.csv"
//! grades = "grades.csv"
//!
//! [[cohort.repos]]
//! path = "repos/g01-p1"
//! group_id = "g01"
//! members = ["ana", "ben"]
//! project = "p1"
//! ```
//!
//! Relative paths are resolved against the directory of the file.

use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::extingest::ExternalConfig;
use crate::gitminer::AuthorMap;
use crate::lifecycle::ProjectDates;
use crate::rules::RuleConfig;
use crate::stats::{CohortOptions, GroupMetric, Scope, DEFAULT_CLUSTER_THRESHOLD};

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuthorsConfig {
    /// Mailmap-style file of `canonical [name] <email>` lines.
    pub map: Option<PathBuf>,
    /// Glob patterns over author name or email marking template commits.
    pub template_authors: Vec<String>,
    /// Commits authored before `project.start` count as template commits.
    pub template_before_start: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectConfig {
    /// ISO-8601 date or date-time; dates mean midnight UTC.
    pub start: Option<String>,
    pub deadline: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("embermine-out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRepo {
    pub path: PathBuf,
    /// Output directory name; defaults to the last path component.
    #[serde(default)]
    pub name: Option<String>,
    pub group_id: String,
    #[serde(default)]
    pub members: Vec<String>,
    #[serde(default = "default_project")]
    pub project: String,
    #[serde(default)]
    pub scope: Scope,
    #[serde(default)]
    pub branch: Option<String>,
}

fn default_project() -> String {
    "p1".into()
}

impl ManifestRepo {
    pub fn output_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "repo".into())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CohortConfig {
    pub repos: Vec<ManifestRepo>,
    /// `author_id,assessment_id,occurrence_count`
    pub labs: Option<PathBuf>,
    /// `group_id,grade`
    pub grades: Option<PathBuf>,
    pub metric: GroupMetric,
    pub cluster_threshold: f64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig { repos: Vec::new(), labs: None, grades: None, metric: GroupMetric::Occurrence, cluster_threshold: DEFAULT_CLUSTER_THRESHOLD }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub rules: RuleConfig,
    pub external: ExternalConfig,
    pub authors: AuthorsConfig,
    pub project: ProjectConfig,
    pub output: OutputConfig,
    pub cohort: CohortConfig,
}

pub fn parse_timestamp(text: &str) -> Result<DateTime<Utc>, String> {
    if let Ok(d) = DateTime::parse_from_rfc3339(text) {
        return Ok(d.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
        .map_err(|e| format!("{text:?} is not an ISO-8601 date: {e}"))
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigFileError> {
        toml::from_str(text).map_err(|e| ConfigFileError::Parse { path: origin.to_path_buf(), message: e.to_string() })
    }

    /// Reads, resolves relative paths and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self, ConfigFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Read { path: path.to_path_buf(), source })?;
        let mut cfg = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.external.path, &mut self.authors.map, &mut self.cohort.labs, &mut self.cohort.grades].into_iter().flatten() {
            resolve(base, p);
        }
        resolve(base, &mut self.output.dir);
        for r in &mut self.cohort.repos {
            resolve(base, &mut r.path);
        }
    }

    /// Checks patterns, dates and that referenced input paths exist.
    pub fn validate(&self) -> Result<(), ConfigFileError> {
        self.rules.validate().map_err(|e| ConfigFileError::Invalid(format!("rules: {e}")))?;
        self.project_dates()?;
        for (key, p) in [("external.path", &self.external.path), ("authors.map", &self.authors.map), ("cohort.labs", &self.cohort.labs), ("cohort.grades", &self.cohort.grades)] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(ConfigFileError::Invalid(format!("{key}: {} does not exist", p.display())));
                }
            }
        }
        for r in &self.cohort.repos {
            if !r.path.exists() {
                return Err(ConfigFileError::Invalid(format!("cohort.repos: {} does not exist", r.path.display())));
            }
        }
        if !(0.0..=1.0).contains(&self.cohort.cluster_threshold) {
            return Err(ConfigFileError::Invalid("cohort.cluster_threshold must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn project_dates(&self) -> Result<ProjectDates, ConfigFileError> {
        let parse = |key: &str, v: &Option<String>| -> Result<Option<DateTime<Utc>>, ConfigFileError> {
            v.as_deref().map(parse_timestamp).transpose().map_err(|e| ConfigFileError::Invalid(format!("project.{key}: {e}")))
        };
        let dates = ProjectDates { start: parse("start", &self.project.start)?, deadline: parse("deadline", &self.project.deadline)? };
        if let (Some(s), Some(d)) = (dates.start, dates.deadline) {
            if d <= s {
                return Err(ConfigFileError::Invalid("project.deadline must be after project.start".into()));
            }
        }
        Ok(dates)
    }

    pub fn author_map(&self) -> anyhow::Result<AuthorMap> {
        let map = match &self.authors.map {
            Some(p) => AuthorMap::load(p)?,
            None => AuthorMap::default(),
        };
        let mut map = map.with_template_authors(&self.authors.template_authors)?;
        if self.authors.template_before_start {
            map = map.with_template_before(self.project_dates()?.start);
        }
        Ok(map)
    }

    pub fn cohort_options(&self) -> CohortOptions {
        CohortOptions {
            metric: self.cohort.metric,
            cluster_threshold: self.cohort.cluster_threshold,
            critical_rules: self.rules.critical_rules.clone(),
        }
    }
}
