use std::fmt::Write as _;
use std::path::Path;

use super::{CohortReport, Maybe, Summary, TestResult};

pub const FIG_FIX_LATENCY: &str = "fig_fix_latency.csv";
pub const FIG_INTRO_REMOVED: &str = "fig_intro_removed.csv";
pub const FIG_DAY_HIST: &str = "fig_day_hist.csv";

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into())
}

fn maybe_num(m: &Maybe<f64>) -> String {
    match m {
        Maybe::Value(v) => format!("{v:.3}"),
        Maybe::Skipped { skipped } => skipped.clone(),
    }
}

fn summary(s: &Summary) -> String {
    format!("n={} mean={} sd={}", s.n, num(s.mean), num(s.sd))
}

fn test(m: &Maybe<TestResult>) -> String {
    match m {
        Maybe::Value(t) => format!("U={:.1} p={:.4} ({:?}, n1={}, n2={})", t.statistic, t.p_value, t.method, t.n1, t.n2),
        Maybe::Skipped { skipped } => skipped.clone(),
    }
}

fn opt_u64(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "n/a".into())
}

/// Human-readable rendering of a cohort report.
pub fn render_markdown(r: &CohortReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Cohort report\n");
    let _ = writeln!(
        s,
        "{} repositories, {} issue lifecycles, group metric `{}`, cluster threshold {}.\n",
        r.totals.repos,
        r.totals.lifecycles,
        match r.metadata.group_metric {
            super::GroupMetric::Occurrence => "occurrence",
            super::GroupMetric::Total => "total",
        },
        r.metadata.cluster_threshold
    );

    let _ = writeln!(s, "## Issues per rule\n");
    let _ = writeln!(s, "| rule | source | critical | project occ. | project total | lab occ. | lab total |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|");
    for row in &r.rules {
        let src = row.source.map(|x| format!("{x:?}").to_lowercase()).unwrap_or_default();
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {} |",
            row.rule_id,
            src,
            if row.critical { "yes" } else { "" },
            row.project_occurrence,
            row.project_total,
            opt_u64(row.lab_occurrence),
            opt_u64(row.lab_total)
        );
    }

    let _ = writeln!(s, "\n## Contribution balance\n");
    let _ = writeln!(s, "| repo | group | project | max share | cluster | issues |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    for g in &r.rq1.groups {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            g.repo,
            g.group_id,
            g.project,
            num(g.max_share),
            g.cluster.map(|c| c.to_string()).unwrap_or_else(|| "n/a".into()),
            g.value
        );
    }
    let _ = writeln!(s, "\n- cluster 0: {}", summary(&r.rq1.cluster0));
    let _ = writeln!(s, "- cluster 1: {}", summary(&r.rq1.cluster1));
    let _ = writeln!(s, "- Mann-Whitney U: {}\n", test(&r.rq1.cluster_test));
    let _ = writeln!(s, "| correlation | n | r |");
    let _ = writeln!(s, "|---|---|---|");
    for c in &r.rq1.correlations {
        let _ = writeln!(s, "| {} vs {} | {} | {} |", c.x, c.y, c.n, maybe_num(&c.r));
    }

    let q = &r.rq2;
    let _ = writeln!(s, "\n## Who fixes\n");
    let _ = writeln!(s, "- fixed: {}, unfixed: {}", q.fixed, q.unfixed);
    let _ = writeln!(
        s,
        "- same fixer: {}, different fixer: {}, unknown introducer: {}",
        q.same_fixer, q.different_fixer, q.unknown_introducer
    );
    let _ = writeln!(s, "- same-fixer share (%): {}", maybe_num(&q.same_fixer_pct));
    let _ = writeln!(
        s,
        "- commits to fix, same: {}; different: {}; {}",
        summary(&q.latency_commits.same),
        summary(&q.latency_commits.different),
        test(&q.latency_commits.test)
    );
    let _ = writeln!(
        s,
        "- days to fix, same: {}; different: {}; {}",
        summary(&q.latency_days.same),
        summary(&q.latency_days.different),
        test(&q.latency_days.test)
    );
    let _ = writeln!(s, "- template issues: {} ({} fixed)", q.template_issues.len(), q.template_fixed);

    let _ = writeln!(s, "\n## Fix latency per rule\n");
    let _ = writeln!(s, "| rule | critical | fixed | commits mean | commits sd | days mean |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    for l in &r.rq3.per_rule_latency {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            l.rule_id,
            if l.critical { "yes" } else { "" },
            l.commits.n,
            num(l.commits.mean),
            num(l.commits.sd),
            num(l.days.mean)
        );
    }
    let _ = writeln!(s, "\n- critical rules, mean of rule means: {}", maybe_num(&r.rq3.critical_mean));
    let _ = writeln!(s, "- other rules, mean of rule means: {}", maybe_num(&r.rq3.non_critical_mean));
    let _ = writeln!(s, "- critical pooled: {}", summary(&r.rq3.critical_pooled));
    let _ = writeln!(s, "- other pooled: {}", summary(&r.rq3.non_critical_pooled));
    s
}

fn write_csv<R: serde::Serialize>(path: &Path, rows: impl IntoIterator<Item = R>, header: &[&str]) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the figure data as CSV files into `dir`.
pub fn write_figures(dir: &Path, r: &CohortReport, lifecycles: &[(String, crate::lifecycle::IssueLifecycle)]) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let fixed = lifecycles.iter().filter(|(_, l)| l.is_fixed());
    write_csv(
        &dir.join(FIG_FIX_LATENCY),
        fixed.map(|(repo, l)| {
            (
                repo.as_str(),
                l.rule_id(),
                r.metadata.critical_rules.iter().any(|c| c == l.rule_id()),
                l.same_fixer.map(|b| b.to_string()).unwrap_or_default(),
                l.alive_commit_count.unwrap_or(0),
                l.alive_days.unwrap_or(0.0),
            )
        }),
        &["repo", "rule", "critical", "same_fixer", "commits", "days"],
    )?;
    write_csv(
        &dir.join(FIG_INTRO_REMOVED),
        lifecycles.iter().map(|(repo, l)| {
            (
                repo.as_str(),
                l.rule_id(),
                l.norm_intro_commit,
                l.norm_fix_commit.map(|v| v.to_string()).unwrap_or_default(),
                l.norm_intro_day,
                l.norm_fix_day.map(|v| v.to_string()).unwrap_or_default(),
            )
        }),
        &["repo", "rule", "intro_commit", "fix_commit", "intro_day", "fix_day"],
    )?;
    let h = &r.rq3.day_histogram;
    write_csv(
        &dir.join(FIG_DAY_HIST),
        (0..h.introduced.len()).map(|i| (h.edges[i], h.edges[i + 1], h.introduced[i], h.fixed[i])),
        &["bin_start", "bin_end", "introduced", "fixed"],
    )?;
    Ok(())
}
