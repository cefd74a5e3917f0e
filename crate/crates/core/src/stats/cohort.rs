use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{cluster_of, mann_whitney_u, pearson, summarize, StatsError, Summary, TestResult, DEFAULT_CLUSTER_THRESHOLD};
use crate::gitminer::{LocShare, TEMPLATE};
use crate::lifecycle::{IssueLifecycle, IssueMetrics, UNKNOWN};
use crate::rules::{DiagnosticSource, DEFAULT_CRITICAL};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const MISSING_INPUT: &str = "skipped: missing input";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    #[default]
    Project,
    Lab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupMetric {
    #[default]
    Occurrence,
    Total,
}

/// One mined repository with its cohort metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepoAnalysis {
    pub name: String,
    pub group_id: String,
    pub members: Vec<String>,
    /// Assignment the repository belongs to, e.g. `p1`.
    pub project: String,
    pub scope: Scope,
    pub lifecycles: Vec<IssueLifecycle>,
    pub metrics: IssueMetrics,
    pub loc_share: Option<LocShare>,
    pub commit_count: usize,
}

impl RepoAnalysis {
    pub fn group_value(&self, metric: GroupMetric) -> u64 {
        self.metrics
            .per_rule
            .values()
            .map(|r| match metric {
                GroupMetric::Occurrence => r.occurrence,
                GroupMetric::Total => r.total,
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabRow {
    pub author_id: String,
    pub assessment_id: String,
    pub occurrence_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortOptions {
    pub metric: GroupMetric,
    pub cluster_threshold: f64,
    pub critical_rules: BTreeSet<String>,
}

impl Default for CohortOptions {
    fn default() -> Self {
        CohortOptions {
            metric: GroupMetric::Occurrence,
            cluster_threshold: DEFAULT_CLUSTER_THRESHOLD,
            critical_rules: DEFAULT_CRITICAL.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// A value, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Maybe<T> {
    Value(T),
    Skipped { skipped: String },
}

impl<T> Maybe<T> {
    pub fn skipped(reason: impl Into<String>) -> Self {
        Maybe::Skipped { skipped: reason.into() }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Maybe::Value(v) => Some(v),
            Maybe::Skipped { .. } => None,
        }
    }
}

fn from_stats<T>(r: Result<T, StatsError>) -> Maybe<T> {
    match r {
        Ok(v) => Maybe::Value(v),
        Err(e) => Maybe::skipped(format!("skipped: {e}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRow {
    pub rule_id: String,
    pub source: Option<DiagnosticSource>,
    pub critical: bool,
    pub project_occurrence: u64,
    pub project_total: u64,
    pub lab_occurrence: Option<u64>,
    pub lab_total: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub repo: String,
    pub group_id: String,
    pub project: String,
    pub max_share: Option<f64>,
    pub cluster: Option<u8>,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub name: String,
    pub x: String,
    pub y: String,
    pub n: usize,
    pub r: Maybe<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq1 {
    pub groups: Vec<GroupRow>,
    pub cluster0: Summary,
    pub cluster1: Summary,
    pub cluster_test: Maybe<TestResult>,
    pub correlations: Vec<CorrelationRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyComparison {
    pub same: Summary,
    pub different: Summary,
    pub test: Maybe<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateRow {
    pub repo: String,
    pub rule_id: String,
    pub fixed_by: Option<String>,
    pub alive_commit_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq2 {
    pub fixed: u64,
    pub unfixed: u64,
    pub same_fixer: u64,
    pub different_fixer: u64,
    /// Fixed issues whose introducer could not be determined.
    pub unknown_introducer: u64,
    pub same_fixer_pct: Maybe<f64>,
    pub latency_commits: LatencyComparison,
    pub latency_days: LatencyComparison,
    pub template_issues: Vec<TemplateRow>,
    pub template_fixed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub rule_id: String,
    pub source: DiagnosticSource,
    pub critical: bool,
    pub commits: Summary,
    pub days: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub introduced: Vec<u64>,
    pub fixed: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq3 {
    pub per_rule_latency: Vec<LatencyRow>,
    /// Mean of the per-rule mean commits-to-fix over critical rules.
    pub critical_mean: Maybe<f64>,
    pub non_critical_mean: Maybe<f64>,
    pub critical_pooled: Summary,
    pub non_critical_pooled: Summary,
    pub commit_histogram: Histogram,
    pub day_histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub repos: usize,
    pub lifecycles: usize,
    pub distinct_fingerprints: u64,
    pub occurrence_sum: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub schema_version: u32,
    pub group_metric: GroupMetric,
    pub cluster_threshold: f64,
    pub cluster_rule: String,
    pub mann_whitney: String,
    pub latency: String,
    pub critical_rules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub metadata: ReportMetadata,
    pub totals: Totals,
    pub rules: Vec<RuleRow>,
    pub rq1: Rq1,
    pub rq2: Rq2,
    pub rq3: Rq3,
}

pub const HIST_BINS: usize = 10;

/// Counts of values in `[0, 1]` over equal bins; 1.0 falls in the last bin.
pub fn histogram(values: impl Iterator<Item = f64>) -> Vec<u64> {
    let mut bins = vec![0u64; HIST_BINS];
    for v in values {
        let b = ((v.clamp(0.0, 1.0) * HIST_BINS as f64) as usize).min(HIST_BINS - 1);
        bins[b] += 1;
    }
    bins
}

fn hist_edges() -> Vec<f64> {
    (0..=HIST_BINS).map(|i| i as f64 / HIST_BINS as f64).collect()
}

fn correlation(name: &str, x: &str, y: &str, pairs: Option<Vec<(f64, f64)>>) -> CorrelationRow {
    let (n, r) = match pairs {
        None => (0, Maybe::skipped(MISSING_INPUT)),
        Some(p) => {
            let (xs, ys): (Vec<f64>, Vec<f64>) = p.into_iter().unzip();
            (xs.len(), from_stats(pearson(&xs, &ys)))
        }
    };
    CorrelationRow { name: name.into(), x: x.into(), y: y.into(), n, r }
}

fn is_student(id: &str) -> bool {
    id != TEMPLATE && id != UNKNOWN
}

fn latency_comparison(same: Vec<f64>, different: Vec<f64>) -> LatencyComparison {
    let test = if same.is_empty() || different.is_empty() {
        Maybe::skipped("skipped: needs fixed issues on both sides")
    } else {
        from_stats(mann_whitney_u(&same, &different))
    };
    LatencyComparison { same: summarize(&same), different: summarize(&different), test }
}

/// Aggregates mined repositories into the cohort report.
pub fn cohort_summary(
    repos: &[RepoAnalysis],
    labs: Option<&[LabRow]>,
    grades: Option<&BTreeMap<String, f64>>,
    opts: &CohortOptions,
) -> CohortReport {
    let projects: Vec<&RepoAnalysis> = repos.iter().filter(|r| r.scope == Scope::Project).collect();
    let has_labs = repos.iter().any(|r| r.scope == Scope::Lab);

    // Per-rule counts.
    let mut rules: BTreeMap<String, RuleRow> = BTreeMap::new();
    for r in repos {
        for (id, m) in &r.metrics.per_rule {
            let row = rules.entry(id.clone()).or_insert_with(|| RuleRow {
                rule_id: id.clone(),
                source: None,
                critical: opts.critical_rules.contains(id),
                project_occurrence: 0,
                project_total: 0,
                lab_occurrence: has_labs.then_some(0),
                lab_total: has_labs.then_some(0),
            });
            row.source = row.source.or(m.source);
            match r.scope {
                Scope::Project => {
                    row.project_occurrence += m.occurrence;
                    row.project_total += m.total;
                }
                Scope::Lab => {
                    *row.lab_occurrence.get_or_insert(0) += m.occurrence;
                    *row.lab_total.get_or_insert(0) += m.total;
                }
            }
        }
    }
    let occurrence_sum: u64 = rules.values().map(|r| r.project_occurrence + r.lab_occurrence.unwrap_or(0)).sum();
    let distinct_fingerprints: u64 = repos
        .iter()
        .map(|r| r.lifecycles.iter().map(|l| &l.fingerprint).collect::<BTreeSet<_>>().len() as u64)
        .sum();

    // RQ1: clusters.
    let groups: Vec<GroupRow> = projects
        .iter()
        .map(|r| {
            let max_share = r.loc_share.as_ref().filter(|s| !s.fractions.is_empty()).map(|s| s.fractions.values().copied().fold(0.0, f64::max));
            GroupRow {
                repo: r.name.clone(),
                group_id: r.group_id.clone(),
                project: r.project.clone(),
                max_share,
                cluster: max_share.map(|m| cluster_of(m, opts.cluster_threshold)),
                value: r.group_value(opts.metric),
            }
        })
        .collect();
    let in_cluster = |c: u8| -> Vec<f64> { groups.iter().filter(|g| g.cluster == Some(c)).map(|g| g.value as f64).collect() };
    let (c0, c1) = (in_cluster(0), in_cluster(1));
    let cluster_test = if c0.is_empty() || c1.is_empty() {
        Maybe::skipped("skipped: needs groups in both clusters")
    } else {
        from_stats(mann_whitney_u(&c0, &c1))
    };

    // RQ1: correlations.
    let mut introduced: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    let mut students: BTreeSet<&str> = BTreeSet::new();
    let mut project_ids: BTreeSet<&str> = BTreeSet::new();
    for r in &projects {
        project_ids.insert(r.project.as_str());
        for m in &r.members {
            students.insert(m.as_str());
            introduced.entry((m.as_str(), r.project.as_str())).or_insert(0.0);
        }
        for l in &r.lifecycles {
            if let Some(a) = l.introduced_by.as_deref().filter(|a| is_student(a)) {
                *introduced.entry((a, r.project.as_str())).or_insert(0.0) += 1.0;
            }
        }
    }
    let student_total = |s: &str| -> f64 { introduced.iter().filter(|((a, _), _)| *a == s).map(|(_, v)| v).sum() };
    let lab_sums: Option<BTreeMap<&str, f64>> = labs.map(|rows| {
        let mut m = BTreeMap::new();
        for r in rows {
            *m.entry(r.author_id.as_str()).or_insert(0.0) += r.occurrence_count;
        }
        m
    });

    let mut correlations = Vec::new();
    correlations.push(correlation(
        "lab_vs_project_per_student",
        "lab issues (student)",
        "project issues introduced (student)",
        lab_sums.as_ref().map(|ls| students.iter().filter_map(|s| ls.get(s).map(|l| (*l, student_total(s)))).collect()),
    ));
    let group_issues = |group: &str| -> f64 {
        projects
            .iter()
            .filter(|r| r.group_id == group)
            .flat_map(|r| &r.lifecycles)
            .filter(|l| l.introduced_by.as_deref().is_some_and(|a| is_student(a) && projects.iter().any(|r| r.group_id == group && r.members.iter().any(|m| m == a))))
            .count() as f64
    };
    let group_ids: BTreeSet<&str> = projects.iter().map(|r| r.group_id.as_str()).collect();
    correlations.push(correlation(
        "lab_sum_vs_group_issues",
        "lab issues (sum over members)",
        "project issues introduced (group)",
        lab_sums.as_ref().map(|ls| {
            group_ids
                .iter()
                .filter_map(|g| {
                    let members: BTreeSet<&str> = projects.iter().filter(|r| r.group_id == *g).flat_map(|r| r.members.iter().map(String::as_str)).collect();
                    let vals: Vec<f64> = members.iter().filter_map(|m| ls.get(m).copied()).collect();
                    (!vals.is_empty()).then(|| (vals.iter().sum(), group_issues(g)))
                })
                .collect()
        }),
    ));
    let two_projects: Option<(&str, &str)> = {
        let ids: Vec<&str> = project_ids.iter().copied().collect();
        (ids.len() == 2).then(|| (ids[0], ids[1]))
    };
    correlations.push(correlation(
        "project_vs_project_per_student",
        &format!("issues introduced in {}", two_projects.map(|p| p.0).unwrap_or("first project")),
        &format!("issues introduced in {}", two_projects.map(|p| p.1).unwrap_or("second project")),
        two_projects.map(|(p1, p2)| {
            students
                .iter()
                .filter_map(|s| Some((*introduced.get(&(*s, p1))?, *introduced.get(&(*s, p2))?)))
                .collect()
        }),
    ));
    correlations.push(correlation(
        "grade_vs_group_issues",
        "grade",
        "group issues",
        grades.map(|gs| {
            group_ids
                .iter()
                .filter_map(|g| {
                    let v: u64 = projects.iter().filter(|r| r.group_id == *g).map(|r| r.group_value(opts.metric)).sum();
                    gs.get(*g).map(|grade| (*grade, v as f64))
                })
                .collect()
        }),
    ));
    correlations.push(correlation(
        "loc_share_vs_issues_per_student",
        "share of final LOC",
        "issues introduced",
        Some(
            projects
                .iter()
                .filter_map(|r| r.loc_share.as_ref().map(|s| (r, s)))
                .flat_map(|(r, s)| {
                    r.members.iter().map(move |m| {
                        let n = r.lifecycles.iter().filter(|l| l.introduced_by.as_deref() == Some(m.as_str())).count();
                        (s.fractions.get(m).copied().unwrap_or(0.0), n as f64)
                    })
                })
                .collect(),
        ),
    ));

    // RQ2.
    let all: Vec<(&RepoAnalysis, &IssueLifecycle)> = projects.iter().flat_map(|r| r.lifecycles.iter().map(move |l| (*r, l))).collect();
    let fixed: Vec<&IssueLifecycle> = all.iter().map(|(_, l)| *l).filter(|l| l.is_fixed()).collect();
    let (mut same_c, mut diff_c, mut same_d, mut diff_d) = (vec![], vec![], vec![], vec![]);
    let mut unknown_introducer = 0;
    for l in &fixed {
        let c = l.alive_commit_count.unwrap_or(0) as f64;
        let d = l.alive_days.unwrap_or(0.0);
        match l.same_fixer {
            Some(true) => {
                same_c.push(c);
                same_d.push(d);
            }
            Some(false) => {
                diff_c.push(c);
                diff_d.push(d);
            }
            None => unknown_introducer += 1,
        }
    }
    let decided = same_c.len() + diff_c.len();
    let same_fixer_pct = if decided == 0 {
        Maybe::skipped("undefined: no fixed issues with a known introducer")
    } else {
        Maybe::Value(100.0 * same_c.len() as f64 / decided as f64)
    };
    let template_issues: Vec<TemplateRow> = all
        .iter()
        .filter(|(_, l)| l.introduced_by.as_deref() == Some(TEMPLATE))
        .map(|(r, l)| TemplateRow {
            repo: r.name.clone(),
            rule_id: l.rule_id().to_string(),
            fixed_by: l.fixed_by.clone(),
            alive_commit_count: l.alive_commit_count,
        })
        .collect();
    let rq2 = Rq2 {
        fixed: fixed.len() as u64,
        unfixed: (all.len() - fixed.len()) as u64,
        same_fixer: same_c.len() as u64,
        different_fixer: diff_c.len() as u64,
        unknown_introducer,
        same_fixer_pct,
        template_fixed: template_issues.iter().filter(|t| t.fixed_by.is_some()).count() as u64,
        template_issues,
        latency_commits: latency_comparison(same_c, diff_c),
        latency_days: latency_comparison(same_d, diff_d),
    };

    // RQ3.
    let mut by_rule: BTreeMap<&str, (DiagnosticSource, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for l in &fixed {
        let e = by_rule.entry(l.rule_id()).or_insert((l.source, vec![], vec![]));
        e.1.push(l.alive_commit_count.unwrap_or(0) as f64);
        e.2.push(l.alive_days.unwrap_or(0.0));
    }
    let per_rule_latency: Vec<LatencyRow> = by_rule
        .into_iter()
        .map(|(id, (source, c, d))| LatencyRow {
            rule_id: id.to_string(),
            source,
            critical: opts.critical_rules.contains(id),
            commits: summarize(&c),
            days: summarize(&d),
        })
        .collect();
    let macro_mean = |critical: bool| -> Maybe<f64> {
        let means: Vec<f64> = per_rule_latency.iter().filter(|r| r.critical == critical).filter_map(|r| r.commits.mean).collect();
        summarize(&means).mean.map(Maybe::Value).unwrap_or_else(|| Maybe::skipped("undefined: no fixed issues"))
    };
    let pooled = |critical: bool| -> Summary {
        let v: Vec<f64> = fixed
            .iter()
            .filter(|l| opts.critical_rules.contains(l.rule_id()) == critical)
            .map(|l| l.alive_commit_count.unwrap_or(0) as f64)
            .collect();
        summarize(&v)
    };
    let lcs = || all.iter().map(|(_, l)| *l);
    let rq3 = Rq3 {
        critical_mean: macro_mean(true),
        non_critical_mean: macro_mean(false),
        critical_pooled: pooled(true),
        non_critical_pooled: pooled(false),
        per_rule_latency,
        commit_histogram: Histogram {
            edges: hist_edges(),
            introduced: histogram(lcs().map(|l| l.norm_intro_commit)),
            fixed: histogram(lcs().filter_map(|l| l.norm_fix_commit)),
        },
        day_histogram: Histogram {
            edges: hist_edges(),
            introduced: histogram(lcs().map(|l| l.norm_intro_day)),
            fixed: histogram(lcs().filter_map(|l| l.norm_fix_day)),
        },
    };

    CohortReport {
        metadata: ReportMetadata {
            schema_version: REPORT_SCHEMA_VERSION,
            group_metric: opts.metric,
            cluster_threshold: opts.cluster_threshold,
            cluster_rule: format!("cluster 1 iff the top contributor's LOC share is > {}", opts.cluster_threshold),
            mann_whitney: "two-sided; midranks for ties; exact null distribution when n1+n2 <= 12 without ties, \
                           otherwise normal approximation with tie and continuity correction"
                .into(),
            latency: "fixed issues only; commits = fix index - introduction index; days = author-time difference / 86400".into(),
            critical_rules: opts.critical_rules.iter().cloned().collect(),
        },
        totals: Totals { repos: repos.len(), lifecycles: repos.iter().map(|r| r.lifecycles.len()).sum(), distinct_fingerprints, occurrence_sum },
        rules: rules.into_values().collect(),
        rq1: Rq1 { groups, cluster0: summarize(&c0), cluster1: summarize(&c1), cluster_test, correlations },
        rq2,
        rq3,
    }
}
