//! End-to-end runs: checking a working tree, mining a repository's history
//! and aggregating mined repositories into a cohort report.

mod cache;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cache::{cache_key, rule_config_hash, sha256_hex, write_atomic, CacheEntry, DiagnosticCache, CACHE_VERSION};

use crate::config::{ManifestRepo, RunConfig};
use crate::extingest::{self, ExternalConfig, ExternalError, ExternalReport};
use crate::gitminer::{is_c_path, CommitRecord, GitRepo, LocShare, Traversal};
use crate::lexparse::{parse_source, SourceModel};
use crate::lifecycle::{
    attribute, build_timelines, compute_metrics, normalize, observe, read_issues_jsonl, write_issues_jsonl, CommitObservations,
    ExternalStatus, IssueLifecycle, IssueMetrics, TimelineOptions,
};
use crate::rules::{run_embedded_rules_in, sort_diagnostics, Diagnostic, RuleConfig, TreeIndex};
use crate::stats::{cohort_summary, render_markdown, write_figures, CohortReport, LabRow, RepoAnalysis, Scope};

pub const ISSUES_FILE: &str = "issues.jsonl";
pub const METRICS_FILE: &str = "metrics.json";
pub const FAILURES_FILE: &str = "failures.json";
pub const COHORT_DIR: &str = "cohort";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";
pub const CACHE_DIR: &str = ".cache";

/// Parsed models and embedded diagnostics of one source tree.
#[derive(Debug, Clone, Default)]
pub struct TreeAnalysis {
    pub models: BTreeMap<String, SourceModel>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Runs the embedded rules over `(path, text)` pairs forming one tree.
pub fn analyze_sources(files: &[(String, String)], cfg: &RuleConfig) -> TreeAnalysis {
    let models: Vec<SourceModel> = files.iter().map(|(p, t)| parse_source(p, t)).collect();
    let index = TreeIndex::build(&models, cfg);
    let mut diagnostics: Vec<Diagnostic> = models.iter().flat_map(|m| run_embedded_rules_in(m, &index, cfg)).collect();
    sort_diagnostics(&mut diagnostics);
    TreeAnalysis { models: models.into_iter().map(|m| (m.path.clone(), m)).collect(), diagnostics }
}

/// `.c` and `.h` files under `root`, relative with `/` separators, sorted.
pub fn read_tree(root: &Path) -> anyhow::Result<Vec<(String, String)>> {
    if !root.is_dir() {
        bail!("{} is not a directory", root.display());
    }
    let mut out = Vec::new();
    for e in walkdir::WalkDir::new(root).sort_by_file_name() {
        let e = e?;
        if !e.file_type().is_file() {
            continue;
        }
        let rel = e.path().strip_prefix(root)?.to_string_lossy().replace('\\', "/");
        if rel.split('/').any(|c| c.starts_with('.')) || !is_c_path(&rel) {
            continue;
        }
        let bytes = std::fs::read(e.path())?;
        out.push((rel, String::from_utf8_lossy(&bytes).into_owned()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum CheckExternal {
    #[default]
    Disabled,
    Run,
    Report(PathBuf),
}

/// Diagnostics of a working tree, embedded and optionally external, sorted.
pub fn check_tree(root: &Path, cfg: &RunConfig, external: &CheckExternal) -> anyhow::Result<Vec<Diagnostic>> {
    let files = read_tree(root)?;
    let mut diags = analyze_sources(&files, &cfg.rules).diagnostics;
    let report = match external {
        CheckExternal::Disabled => None,
        CheckExternal::Run => Some(extingest::run_external_analyzer(root, &cfg.external)?),
        CheckExternal::Report(p) => Some(extingest::load_external_report(p)?),
    };
    if let Some(r) = report {
        diags.extend(r.to_diagnostics(&cfg.rules.critical_rules));
    }
    sort_diagnostics(&mut diags);
    diags.dedup();
    Ok(diags)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum MineExternal {
    Disabled,
    /// Run the analyzer on every snapshot; degrade to embedded-only if it is missing.
    #[default]
    Run,
    /// Read `<dir>/<commit hash>.xml` per commit instead of running the analyzer.
    Reports(PathBuf),
}

#[derive(Debug, Clone)]
pub struct MineOptions {
    pub name: String,
    pub branch: Option<String>,
    pub gap: usize,
    pub traversal: Traversal,
    pub external: MineExternal,
    /// Artifacts go to `<out_dir>/<name>/`.
    pub out_dir: PathBuf,
}

impl MineOptions {
    pub fn new(name: impl Into<String>, out_dir: impl Into<PathBuf>) -> Self {
        MineOptions {
            name: name.into(),
            branch: None,
            gap: 0,
            traversal: Traversal::FirstParent,
            external: MineExternal::Run,
            out_dir: out_dir.into(),
        }
    }

    pub fn repo_dir(&self) -> PathBuf {
        self.out_dir.join(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FailureRecord {
    pub kind: String,
    pub commit: Option<String>,
    pub index: Option<usize>,
    pub message: String,
}

impl FailureRecord {
    fn external(c: &CommitRecord, e: &ExternalError) -> Self {
        let kind = match e {
            ExternalError::AnalyzerUnavailable(_) => "AnalyzerUnavailable",
            ExternalError::AnalyzerFailed { .. } => "AnalyzerFailed",
            ExternalError::AnalyzerTimeout(_) => "AnalyzerTimeout",
            ExternalError::ReportParseError { .. } => "ReportParseError",
            ExternalError::Io(_) => "Io",
        };
        FailureRecord { kind: kind.into(), commit: Some(c.hash.clone()), index: Some(c.index), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub schema: u32,
    pub repo: String,
    pub branch: Option<String>,
    pub traversal: Traversal,
    pub commit_count: usize,
    pub tip: Option<String>,
    /// `none`, the analyzer version, or `reports`.
    pub external: String,
    pub metrics: IssueMetrics,
    pub loc_share: Option<LocShare>,
}

#[derive(Debug, Clone)]
pub struct MineOutcome {
    pub commits: Vec<CommitRecord>,
    pub per_commit: Vec<CommitObservations>,
    pub lifecycles: Vec<IssueLifecycle>,
    pub metrics: MetricsFile,
    pub failures: Vec<FailureRecord>,
    /// Commits analyzed in this run; the rest came from the cache.
    pub analyzed: usize,
    pub cached: usize,
}

enum ExternalPlan {
    Off,
    Run(ExternalConfig),
    Reports(PathBuf),
}

struct CommitResult {
    obs: CommitObservations,
    failure: Option<FailureRecord>,
    cached: bool,
}

fn analyze_commit(repo: &GitRepo, c: &CommitRecord, cfg: &RunConfig, plan: &ExternalPlan, cache: &DiagnosticCache, rule_hash: &str, analyzer: &str) -> anyhow::Result<CommitResult> {
    let tree = repo.tree_id(&c.hash)?;
    let report_file = match plan {
        ExternalPlan::Reports(dir) => Some(dir.join(format!("{}.xml", c.hash))),
        _ => None,
    };
    let analyzer_tag = match &report_file {
        Some(p) => match std::fs::read(p) {
            Ok(bytes) => format!("report:{}", sha256_hex(&bytes)),
            Err(_) => "report:missing".into(),
        },
        None => analyzer.to_string(),
    };
    let key = cache_key(&tree, rule_hash, &analyzer_tag);
    if let Some(hit) = cache.get(&key) {
        return Ok(CommitResult { obs: CommitObservations { commit: c.clone(), observations: hit.observations, external: hit.external }, failure: None, cached: true });
    }

    let files: Vec<(String, String)> = repo
        .tree_sources(&c.hash)?
        .into_iter()
        .map(|(p, bytes, _)| (p, String::from_utf8_lossy(&bytes).into_owned()))
        .collect();
    let TreeAnalysis { models, mut diagnostics } = analyze_sources(&files, &cfg.rules);

    let external: Option<Result<ExternalReport, ExternalError>> = match plan {
        ExternalPlan::Off => None,
        ExternalPlan::Run(ext) => {
            let dir = tempfile::tempdir()?;
            repo.snapshot(&c.hash, dir.path())?;
            Some(extingest::run_external_analyzer(dir.path(), ext))
        }
        ExternalPlan::Reports(_) => {
            let p = report_file.expect("reports plan has a file");
            Some(if p.is_file() { extingest::load_external_report(&p) } else { Err(ExternalError::AnalyzerUnavailable(format!("no report {}", p.display()))) })
        }
    };
    let (status, failure) = match external {
        None => (ExternalStatus::Disabled, None),
        Some(Ok(report)) => {
            diagnostics.extend(report.to_diagnostics(&cfg.rules.critical_rules));
            (ExternalStatus::Ok, None)
        }
        Some(Err(e)) => (ExternalStatus::Failed(e.to_string()), Some(FailureRecord::external(c, &e))),
    };
    sort_diagnostics(&mut diagnostics);
    diagnostics.dedup();
    let observations = observe(&diagnostics, &models);
    if failure.is_none() {
        cache.put(&key, &CacheEntry { observations: observations.clone(), external: status.clone() })?;
    }
    Ok(CommitResult { obs: CommitObservations { commit: c.clone(), observations, external: status }, failure, cached: false })
}

/// Full sweep of one repository: enumerate, analyze every commit (cached,
/// in parallel), fold into lifecycles, attribute, normalize, and write
/// `issues.jsonl`, `metrics.json` and `failures.json`.
pub fn mine_repo(repo_path: &Path, cfg: &RunConfig, opts: &MineOptions) -> anyhow::Result<MineOutcome> {
    let authors = cfg.author_map()?;
    let dates = cfg.project_dates()?;
    let repo = GitRepo::open(repo_path, authors.clone())?.with_traversal(opts.traversal);
    let commits = repo.enumerate_commits(opts.branch.as_deref())?;

    let mut failures = Vec::new();
    let (plan, analyzer) = match &opts.external {
        MineExternal::Disabled => (ExternalPlan::Off, "none".to_string()),
        MineExternal::Reports(dir) => (ExternalPlan::Reports(dir.clone()), "reports".to_string()),
        MineExternal::Run => match extingest::discover(&cfg.external).and_then(|_| extingest::analyzer_version(&cfg.external)) {
            Ok(v) => (ExternalPlan::Run(cfg.external.clone()), v),
            Err(e) => {
                failures.push(FailureRecord { kind: "AnalyzerUnavailable".into(), commit: None, index: None, message: e.to_string() });
                (ExternalPlan::Off, "none".to_string())
            }
        },
    };

    let cache = DiagnosticCache::new(opts.out_dir.join(CACHE_DIR));
    let rule_hash = rule_config_hash(&cfg.rules);
    let results: Vec<anyhow::Result<CommitResult>> = commits
        .par_iter()
        .map_init(
            || GitRepo::open(repo_path, authors.clone()),
            |r, c| {
                let r = r.as_ref().map_err(|e| anyhow::anyhow!("{e}"))?;
                analyze_commit(r, c, cfg, &plan, &cache, &rule_hash, &analyzer).with_context(|| format!("commit {}", c.hash))
            },
        )
        .collect();
    let mut per_commit = Vec::with_capacity(commits.len());
    let (mut analyzed, mut cached) = (0, 0);
    for r in results {
        let r = r?;
        if r.cached {
            cached += 1;
        } else {
            analyzed += 1;
        }
        failures.extend(r.failure);
        per_commit.push(r.obs);
    }

    let mut lifecycles = build_timelines(&per_commit, TimelineOptions { gap: opts.gap });
    attribute(&mut lifecycles, &commits, &repo);
    normalize(&mut lifecycles, &commits, dates)?;
    let issue_metrics = compute_metrics(&lifecycles, &per_commit);
    let tip = commits.last().map(|c| c.hash.clone());
    let loc_share = match &tip {
        Some(t) => match repo.loc_share(t) {
            Ok(s) => Some(s),
            Err(e) => {
                failures.push(FailureRecord { kind: "LocShare".into(), commit: Some(t.clone()), index: None, message: e.to_string() });
                None
            }
        },
        None => None,
    };
    let metrics = MetricsFile {
        schema: crate::lifecycle::ISSUES_SCHEMA_VERSION,
        repo: opts.name.clone(),
        branch: opts.branch.clone(),
        traversal: opts.traversal,
        commit_count: commits.len(),
        tip,
        external: analyzer,
        metrics: issue_metrics,
        loc_share,
    };

    let dir = opts.repo_dir();
    let mut issues = Vec::new();
    write_issues_jsonl(&mut issues, &lifecycles)?;
    write_atomic(&dir.join(ISSUES_FILE), &issues)?;
    write_atomic(&dir.join(METRICS_FILE), &pretty(&metrics)?)?;
    write_atomic(&dir.join(FAILURES_FILE), &pretty(&failures)?)?;
    Ok(MineOutcome { commits, per_commit, lifecycles, metrics, failures, analyzed, cached })
}

fn pretty<T: Serialize>(v: &T) -> anyhow::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

/// Reads the artifacts of a previously mined repository.
pub fn load_mined(repo_dir: &Path) -> anyhow::Result<(Vec<IssueLifecycle>, MetricsFile)> {
    let issues = std::fs::File::open(repo_dir.join(ISSUES_FILE)).with_context(|| format!("{}", repo_dir.join(ISSUES_FILE).display()))?;
    let lifecycles = read_issues_jsonl(std::io::BufReader::new(issues))?;
    let metrics: MetricsFile = serde_json::from_slice(&std::fs::read(repo_dir.join(METRICS_FILE))?)?;
    Ok((lifecycles, metrics))
}

pub fn load_labs(path: &Path) -> anyhow::Result<Vec<LabRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    rdr.deserialize().map(|r| r.with_context(|| path.display().to_string())).collect()
}

pub fn load_grades(path: &Path) -> anyhow::Result<BTreeMap<String, f64>> {
    #[derive(Deserialize)]
    struct Row {
        group_id: String,
        grade: f64,
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut out = BTreeMap::new();
    for r in rdr.deserialize() {
        let r: Row = r.with_context(|| path.display().to_string())?;
        out.insert(r.group_id, r.grade);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct CohortRunOptions {
    /// Mine every manifest repository first.
    pub mine: bool,
    pub external: MineExternal,
    pub gap: usize,
    pub traversal: Traversal,
}

#[derive(Debug, Clone)]
pub struct CohortOutcome {
    pub report: CohortReport,
    /// Manifest repositories without a mined database, skipped.
    pub missing: Vec<String>,
    pub dir: PathBuf,
}

fn analysis_of(m: &ManifestRepo, lifecycles: Vec<IssueLifecycle>, metrics: MetricsFile) -> RepoAnalysis {
    RepoAnalysis {
        name: m.output_name(),
        group_id: m.group_id.clone(),
        members: m.members.clone(),
        project: m.project.clone(),
        scope: m.scope,
        lifecycles,
        metrics: metrics.metrics,
        loc_share: metrics.loc_share,
        commit_count: metrics.commit_count,
    }
}

/// Builds the cohort report for the configured manifest and writes
/// `report.json`, `report.md` and the figure CSVs to `<out>/cohort/`.
pub fn run_cohort(cfg: &RunConfig, opts: &CohortRunOptions) -> anyhow::Result<CohortOutcome> {
    let manifest = &cfg.cohort.repos;
    if manifest.is_empty() {
        bail!("cohort manifest is empty");
    }
    let out = &cfg.output.dir;
    if opts.mine {
        manifest
            .par_iter()
            .map(|m| {
                let mo = MineOptions {
                    name: m.output_name(),
                    branch: m.branch.clone(),
                    gap: opts.gap,
                    traversal: opts.traversal,
                    external: opts.external.clone(),
                    out_dir: out.clone(),
                };
                mine_repo(&m.path, cfg, &mo).map(|_| ()).with_context(|| format!("mining {}", m.path.display()))
            })
            .collect::<anyhow::Result<Vec<()>>>()?;
    }

    let mut repos = Vec::new();
    let mut missing = Vec::new();
    for m in manifest {
        match load_mined(&out.join(m.output_name())) {
            Ok((lcs, metrics)) => repos.push(analysis_of(m, lcs, metrics)),
            Err(_) => missing.push(m.output_name()),
        }
    }
    if repos.is_empty() {
        bail!("no mined repository found under {} (missing: {})", out.display(), missing.join(", "));
    }
    let labs = cfg.cohort.labs.as_deref().map(load_labs).transpose()?;
    let grades = cfg.cohort.grades.as_deref().map(load_grades).transpose()?;
    let report = cohort_summary(&repos, labs.as_deref(), grades.as_ref(), &cfg.cohort_options());

    let dir = out.join(COHORT_DIR);
    write_atomic(&dir.join(REPORT_JSON), &pretty(&report)?)?;
    write_atomic(&dir.join(REPORT_MD), render_markdown(&report).as_bytes())?;
    let lcs: Vec<(String, IssueLifecycle)> = repos
        .iter()
        .filter(|r| r.scope == Scope::Project)
        .flat_map(|r| r.lifecycles.iter().map(|l| (r.name.clone(), l.clone())))
        .collect();
    write_figures(&dir, &report, &lcs)?;
    Ok(CohortOutcome { report, missing, dir })
}
