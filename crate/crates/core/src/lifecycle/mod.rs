//! Issue identity across commits and the lifecycle of each issue: when it
//! appeared, when it went away, and who was involved.

mod fingerprint;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::gitminer::{CommitRecord, GitMinerError, GitRepo, TEMPLATE};
use crate::rules::{DiagnosticSource, PARSE_ERROR};

pub use fingerprint::{context_hash, fingerprint, observe, Fingerprint, Observation};

pub const UNKNOWN: &str = "UNKNOWN";
pub const ISSUES_SCHEMA_VERSION: u32 = 1;

/// Outcome of the external analyzer on one commit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "lowercase")]
pub enum ExternalStatus {
    Disabled,
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommitObservations {
    pub commit: CommitRecord,
    pub observations: Vec<Observation>,
    pub external: ExternalStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRef {
    pub index: usize,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueLifecycle {
    pub fingerprint: Fingerprint,
    pub source: DiagnosticSource,
    pub severity: String,
    pub critical: bool,
    pub message: String,
    /// Path and line at the introducing commit.
    pub intro_path: String,
    pub intro_line: u32,
    pub introduced_commit: CommitRef,
    pub introduced_by: Option<String>,
    pub fixed_commit: Option<CommitRef>,
    pub fixed_by: Option<String>,
    pub alive_commit_count: Option<usize>,
    pub alive_days: Option<f64>,
    pub present_in: Vec<usize>,
    pub same_fixer: Option<bool>,
    /// The fix commit touched the file that held the issue.
    pub direct_fix: Option<bool>,
    pub norm_intro_commit: f64,
    pub norm_fix_commit: Option<f64>,
    pub norm_intro_day: f64,
    pub norm_fix_day: Option<f64>,
}

impl IssueLifecycle {
    pub fn rule_id(&self) -> &str {
        &self.fingerprint.rule_id
    }

    pub fn is_fixed(&self) -> bool {
        self.fixed_commit.is_some()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineOptions {
    /// Consecutive absent commits tolerated before an issue counts as fixed.
    pub gap: usize,
}

struct Open {
    lc: IssueLifecycle,
    last_path: String,
    absent: usize,
    absent_since: usize,
}

fn identity_path(alias: &BTreeMap<String, String>, path: &str) -> String {
    alias.get(path).cloned().unwrap_or_else(|| path.to_string())
}

/// Folds per-commit observations, in commit order, into lifecycles. An
/// issue is fixed at its first absence (after `gap` tolerated absences);
/// reappearing later starts a new lifecycle. External findings on commits
/// where the analyzer failed are neither present nor absent.
pub fn build_timelines(per_commit: &[CommitObservations], opts: TimelineOptions) -> Vec<IssueLifecycle> {
    let mut alias: BTreeMap<String, String> = BTreeMap::new();
    let mut open: BTreeMap<Fingerprint, Open> = BTreeMap::new();
    let mut done: Vec<IssueLifecycle> = Vec::new();

    for (pos, co) in per_commit.iter().enumerate() {
        let idx = co.commit.index;
        let mut sources: BTreeMap<&str, usize> = BTreeMap::new();
        for (old, _) in &co.commit.renames {
            *sources.entry(old.as_str()).or_default() += 1;
        }
        for (old, new) in &co.commit.renames {
            let id = if sources[old.as_str()] > 1 {
                Path::new(new).file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| new.clone())
            } else {
                identity_path(&alias, old)
            };
            alias.remove(old);
            if id != *new {
                alias.insert(new.clone(), id);
            }
        }

        let mut seen = BTreeSet::new();
        for ob in co.observations.iter().filter(|o| o.fingerprint.rule_id != PARSE_ERROR) {
            let mut fp = ob.fingerprint.clone();
            fp.path = identity_path(&alias, &ob.path);
            if !seen.insert(fp.clone()) {
                continue;
            }
            match open.get_mut(&fp) {
                Some(o) => {
                    o.lc.present_in.push(idx);
                    o.last_path = ob.path.clone();
                    o.absent = 0;
                }
                None => {
                    let lc = IssueLifecycle {
                        fingerprint: fp.clone(),
                        source: ob.source,
                        severity: ob.severity.clone(),
                        critical: ob.critical,
                        message: ob.message.clone(),
                        intro_path: ob.path.clone(),
                        intro_line: ob.line,
                        introduced_commit: CommitRef { index: idx, hash: co.commit.hash.clone() },
                        introduced_by: None,
                        fixed_commit: None,
                        fixed_by: None,
                        alive_commit_count: None,
                        alive_days: None,
                        present_in: vec![idx],
                        same_fixer: None,
                        direct_fix: None,
                        norm_intro_commit: 0.0,
                        norm_fix_commit: None,
                        norm_intro_day: 0.0,
                        norm_fix_day: None,
                    };
                    open.insert(fp, Open { lc, last_path: ob.path.clone(), absent: 0, absent_since: 0 });
                }
            }
        }

        let external_unknown = matches!(co.external, ExternalStatus::Failed(_));
        let mut closed = Vec::new();
        for (fp, o) in open.iter_mut() {
            if seen.contains(fp) || (external_unknown && o.lc.source == DiagnosticSource::External) {
                continue;
            }
            if o.absent == 0 {
                o.absent_since = pos;
            }
            o.absent += 1;
            if o.absent > opts.gap {
                let fix = &per_commit[o.absent_since].commit;
                o.lc.fixed_commit = Some(CommitRef { index: fix.index, hash: fix.hash.clone() });
                o.lc.alive_commit_count = Some(fix.index - o.lc.introduced_commit.index);
                o.lc.direct_fix = Some(fix.changed_paths.contains(&o.last_path));
                closed.push(fp.clone());
            }
        }
        for fp in closed {
            done.push(open.remove(&fp).expect("closed lifecycle was open").lc);
        }
    }
    done.extend(open.into_values().map(|o| o.lc));
    done.sort_by(|a, b| {
        (a.introduced_commit.index, &a.fingerprint).cmp(&(b.introduced_commit.index, &b.fingerprint))
    });
    done
}

/// Who wrote a given line as of a commit.
pub trait Blame {
    fn blame_author(&self, hash: &str, path: &str, line: u32) -> Result<String, GitMinerError>;
}

impl Blame for GitRepo {
    fn blame_author(&self, hash: &str, path: &str, line: u32) -> Result<String, GitMinerError> {
        self.blame_line(hash, path, line).map(|b| b.author_id)
    }
}

/// Fills introducer (blame of the flagged line at the introducing commit),
/// fixer (author of the fix commit), day latency and `same_fixer`. Blame
/// failures give `UNKNOWN`.
pub fn attribute(lifecycles: &mut [IssueLifecycle], commits: &[CommitRecord], blame: &impl Blame) {
    let by_index: BTreeMap<usize, &CommitRecord> = commits.iter().map(|c| (c.index, c)).collect();
    for lc in lifecycles.iter_mut() {
        let intro = blame
            .blame_author(&lc.introduced_commit.hash, &lc.intro_path, lc.intro_line)
            .unwrap_or_else(|_| UNKNOWN.to_string());
        lc.introduced_by = Some(intro.clone());
        if let Some(fix) = &lc.fixed_commit {
            let fixer = by_index.get(&fix.index).map(|c| c.author_id.clone()).unwrap_or_else(|| UNKNOWN.to_string());
            lc.same_fixer = match intro.as_str() {
                UNKNOWN => None,
                TEMPLATE => Some(false),
                _ => Some(fixer != UNKNOWN && fixer == intro),
            };
            lc.fixed_by = Some(fixer);
            if let (Some(a), Some(b)) = (by_index.get(&lc.introduced_commit.index), by_index.get(&fix.index)) {
                lc.alive_days = Some((b.timestamp - a.timestamp) as f64 / 86_400.0);
            }
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("configuration error: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectDates {
    pub start: Option<DateTime<Utc>>,
    pub deadline: Option<DateTime<Utc>>,
}

/// Position of commit `i` among `n`: 0 for the first, 1 for the last.
pub fn norm_commit(i: usize, n: usize) -> f64 {
    if n > 1 {
        i as f64 / (n - 1) as f64
    } else {
        0.0
    }
}

/// Position of `t` in `[start, deadline]`, clamped to `[0, 1]`.
pub fn norm_day(t: i64, start: i64, deadline: i64) -> f64 {
    if deadline <= start {
        return 0.0;
    }
    ((t - start) as f64 / (deadline - start) as f64).clamp(0.0, 1.0)
}

/// Resolves the development window: configured dates, else the first and
/// last commit timestamps.
pub fn project_window(commits: &[CommitRecord], dates: ProjectDates) -> Result<(i64, i64), ConfigError> {
    let first = commits.first().map(|c| c.timestamp).unwrap_or(0);
    let last = commits.last().map(|c| c.timestamp).unwrap_or(0);
    let start = dates.start.map(|d| d.timestamp()).unwrap_or(first);
    let deadline = dates.deadline.map(|d| d.timestamp()).unwrap_or(last);
    if (dates.start.is_some() || dates.deadline.is_some()) && deadline <= start {
        return Err(ConfigError(format!("project deadline ({deadline}) must be after start ({start})")));
    }
    Ok((start, deadline))
}

pub fn normalize(lifecycles: &mut [IssueLifecycle], commits: &[CommitRecord], dates: ProjectDates) -> Result<(), ConfigError> {
    let (start, deadline) = project_window(commits, dates)?;
    let n = commits.len();
    let ts: BTreeMap<usize, i64> = commits.iter().map(|c| (c.index, c.timestamp)).collect();
    let day = |i: usize| norm_day(ts.get(&i).copied().unwrap_or(start), start, deadline);
    for lc in lifecycles.iter_mut() {
        let i = lc.introduced_commit.index;
        lc.norm_intro_commit = norm_commit(i, n);
        lc.norm_intro_day = day(i);
        lc.norm_fix_commit = lc.fixed_commit.as_ref().map(|f| norm_commit(f.index, n));
        lc.norm_fix_day = lc.fixed_commit.as_ref().map(|f| day(f.index));
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleMetrics {
    /// Distinct fingerprints ever seen.
    pub occurrence: u64,
    /// Instances summed over commits.
    pub total: u64,
    /// The same sum taken over lifecycles; always equals `total`.
    pub total_from_lifecycles: u64,
    pub source: Option<DiagnosticSource>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueMetrics {
    pub per_rule: BTreeMap<String, RuleMetrics>,
    pub parse_errors: u64,
}

pub fn compute_metrics(lifecycles: &[IssueLifecycle], per_commit: &[CommitObservations]) -> IssueMetrics {
    let mut m = IssueMetrics::default();
    let mut distinct: BTreeMap<&str, BTreeSet<&Fingerprint>> = BTreeMap::new();
    for lc in lifecycles {
        distinct.entry(lc.rule_id()).or_default().insert(&lc.fingerprint);
        let r = m.per_rule.entry(lc.rule_id().to_string()).or_default();
        r.total_from_lifecycles += lc.present_in.len() as u64;
        r.source = Some(lc.source);
    }
    for (rule, fps) in distinct {
        m.per_rule.get_mut(rule).expect("rule has lifecycles").occurrence = fps.len() as u64;
    }
    for co in per_commit {
        for ob in &co.observations {
            if ob.fingerprint.rule_id == PARSE_ERROR {
                m.parse_errors += 1;
            } else {
                m.per_rule.entry(ob.fingerprint.rule_id.clone()).or_default().total += 1;
            }
        }
    }
    m
}

#[derive(Serialize, Deserialize)]
struct IssueRecord {
    schema: u32,
    #[serde(flatten)]
    lifecycle: IssueLifecycle,
}

pub fn write_issues_jsonl(mut out: impl Write, lifecycles: &[IssueLifecycle]) -> std::io::Result<()> {
    for lc in lifecycles {
        let rec = IssueRecord { schema: ISSUES_SCHEMA_VERSION, lifecycle: lc.clone() };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_issues_jsonl(input: impl BufRead) -> anyhow::Result<Vec<IssueLifecycle>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: IssueRecord = serde_json::from_str(&line).map_err(|e| anyhow::anyhow!("issues line {}: {e}", n + 1))?;
        anyhow::ensure!(rec.schema == ISSUES_SCHEMA_VERSION, "issues line {}: unsupported schema {}", n + 1, rec.schema);
        out.push(rec.lifecycle);
    }
    Ok(out)
}
