use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use super::*;
use crate::gitminer::{LocShare, TEMPLATE};
use crate::lifecycle::{CommitRef, Fingerprint, IssueLifecycle, IssueMetrics, RuleMetrics};
use crate::rules::DiagnosticSource;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Exact two-sided p by enumerating every split of the pooled ranks.
fn enumerate_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let n1 = a.len();
    let u_of = |mask: u32| -> f64 {
        let mut u = 0.0;
        for i in 0..n {
            if mask & (1 << i) == 0 {
                continue;
            }
            for j in 0..n {
                if mask & (1 << j) != 0 {
                    continue;
                }
                if pooled[i] > pooled[j] {
                    u += 1.0;
                } else if pooled[i] == pooled[j] {
                    u += 0.5;
                }
            }
        }
        u
    };
    let observed = u_of((1u32 << n1) - 1);
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let u = u_of(mask);
        total += 1;
        if u <= observed + 1e-9 {
            le += 1;
        }
        if u >= observed - 1e-9 {
            ge += 1;
        }
    }
    (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
}

fn pearson_closed_form(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

#[test]
fn identical_samples() {
    let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(r.statistic, 4.5);
    assert!(r.p_value >= 0.95);
}

#[test]
fn separated_samples() {
    let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert_eq!(r.method, Method::Exact);
    assert!(close(r.p_value, 0.1, 1e-12));
}

#[test]
fn empty_sample_is_error() {
    assert_eq!(mann_whitney_u(&[], &[1.0]), Err(StatsError::EmptySampleError));
    assert_eq!(mann_whitney_u(&[1.0], &[]), Err(StatsError::EmptySampleError));
}

#[test]
fn method_selection() {
    let small = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
    assert_eq!(small.method, Method::Exact);
    let tied = mann_whitney_u(&[1.0, 2.0], &[2.0, 4.0]).unwrap();
    assert_eq!(tied.method, Method::NormalApproximation);
    let big: Vec<f64> = (0..7).map(f64::from).collect();
    let other: Vec<f64> = (7..13).map(f64::from).collect();
    assert_eq!(mann_whitney_u(&big, &other).unwrap().method, Method::NormalApproximation);
    assert!(mann_whitney_u_with(&[1.0], &[1.0], MethodChoice::Exact).is_err());
}

#[test]
fn all_tied_normal_is_one() {
    let r = mann_whitney_u(&[2.0; 5], &[2.0; 4]).unwrap();
    assert_eq!(r.p_value, 1.0);
}

#[test]
fn large_separated_normal() {
    let a: Vec<f64> = (0..20).map(f64::from).collect();
    let b: Vec<f64> = (20..40).map(f64::from).collect();
    let r = mann_whitney_u(&a, &b).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert!(r.p_value < 1e-6);
}

#[test]
fn midranks_ties() {
    let (r, t) = midranks(&[3.0, 1.0, 3.0, 2.0]);
    assert_eq!(r, vec![3.5, 1.0, 3.5, 2.0]);
    assert_eq!(t, vec![1, 1, 2]);
}

#[test]
fn pearson_examples() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let twice: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    assert!(close(pearson(&x, &twice).unwrap(), 1.0, 1e-12));
    assert!(close(pearson(&x, &neg).unwrap(), -1.0, 1e-12));
    assert!(close(pearson(&x, &[2.0, 1.0, 4.0, 3.0]).unwrap(), 0.6, 1e-12));
    assert!(matches!(pearson(&x, &[1.0; 4]), Err(StatsError::DegenerateInput(_))));
    assert!(matches!(pearson(&x, &[1.0]), Err(StatsError::ShapeError(_))));
    assert!(matches!(pearson(&[1.0], &[1.0]), Err(StatsError::ShapeError(_))));
}

#[test]
fn summaries() {
    assert_eq!(summarize(&[]), Summary { n: 0, mean: None, sd: None });
    assert_eq!(summarize(&[4.0]), Summary { n: 1, mean: Some(4.0), sd: None });
    let s = summarize(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
    assert_eq!(s.mean, Some(5.0));
    assert!(close(s.sd.unwrap(), (32.0f64 / 7.0).sqrt(), 1e-12));
}

fn profile(id: &str, shares: &[(&str, f64)]) -> GroupProfile {
    GroupProfile {
        group_id: id.into(),
        members: shares.iter().map(|(m, _)| m.to_string()).collect(),
        loc_shares: shares.iter().map(|(m, s)| (m.to_string(), *s)).collect(),
        cluster: None,
        issue_occurrence_count: 0,
        issue_total_count: 0,
        lab_counts: None,
        grade: None,
    }
}

#[test]
fn clustering() {
    let out = cluster_groups(
        vec![
            profile("a", &[("x", 0.6), ("y", 0.4)]),
            profile("b", &[("x", 0.85), ("y", 0.15)]),
            profile("c", &[("x", 0.7), ("y", 0.3)]),
        ],
        DEFAULT_CLUSTER_THRESHOLD,
    )
    .unwrap();
    let clusters: Vec<_> = out.iter().map(|p| p.cluster).collect();
    assert_eq!(clusters, vec![Some(0), Some(1), Some(0)]);
    let bad = cluster_groups(vec![profile("d", &[("x", 0.5), ("y", 0.3)])], 0.7);
    assert!(matches!(bad, Err(StatsError::ShareError { .. })));
}

#[test]
fn histogram_bins() {
    assert_eq!(histogram([0.0, 0.05, 0.1, 0.99, 1.0].into_iter()), vec![2, 1, 0, 0, 0, 0, 0, 0, 0, 2]);
}

fn lifecycle(rule: &str, sym: &str, intro: Option<&str>, fixed: Option<(usize, &str)>) -> IssueLifecycle {
    IssueLifecycle {
        fingerprint: Fingerprint { rule_id: rule.into(), path: "a.c".into(), symbol: sym.into(), context_hash: "0".into(), ordinal: 0 },
        source: DiagnosticSource::Embedded,
        severity: "style".into(),
        critical: false,
        message: String::new(),
        intro_path: "a.c".into(),
        intro_line: 1,
        introduced_commit: CommitRef { index: 1, hash: "h1".into() },
        introduced_by: intro.map(String::from),
        fixed_commit: fixed.map(|(i, _)| CommitRef { index: i, hash: format!("h{i}") }),
        fixed_by: fixed.map(|(_, a)| a.to_string()),
        alive_commit_count: fixed.map(|(i, _)| i - 1),
        alive_days: fixed.map(|(i, _)| (i - 1) as f64 / 2.0),
        present_in: vec![1],
        same_fixer: match (intro, fixed) {
            (Some(i), Some((_, f))) if i != crate::lifecycle::UNKNOWN => Some(i == f),
            _ => None,
        },
        direct_fix: None,
        norm_intro_commit: 0.1,
        norm_fix_commit: fixed.map(|_| 0.5),
        norm_intro_day: 0.1,
        norm_fix_day: fixed.map(|_| 1.0),
    }
}

fn repo(name: &str, group: &str, project: &str, scope: Scope, lcs: Vec<IssueLifecycle>, shares: &[(&str, f64)]) -> RepoAnalysis {
    let mut metrics = IssueMetrics::default();
    for l in &lcs {
        let m = metrics.per_rule.entry(l.rule_id().to_string()).or_insert_with(RuleMetrics::default);
        m.occurrence += 1;
        m.total += l.present_in.len() as u64;
        m.total_from_lifecycles = m.total;
        m.source = Some(l.source);
    }
    RepoAnalysis {
        name: name.into(),
        group_id: group.into(),
        members: shares.iter().map(|(m, _)| m.to_string()).collect(),
        project: project.into(),
        scope,
        lifecycles: lcs,
        metrics,
        loc_share: Some(LocShare {
            fractions: shares.iter().map(|(m, s)| (m.to_string(), *s)).collect(),
            lines: BTreeMap::new(),
            template_lines: 0,
        }),
        commit_count: 10,
    }
}

fn cohort_fixture() -> Vec<RepoAnalysis> {
    vec![
        repo(
            "g1",
            "g1",
            "p1",
            Scope::Project,
            vec![
                lifecycle("uninitvar", "x", Some("ann"), Some((3, "ann"))),
                lifecycle("slowIsr", "", Some("bob"), Some((5, "ann"))),
                lifecycle("noIncludeGuard", "", Some(TEMPLATE), None),
            ],
            &[("ann", 0.9), ("bob", 0.1)],
        ),
        repo(
            "g2",
            "g2",
            "p1",
            Scope::Project,
            vec![lifecycle("slowIsr", "", Some("cat"), Some((2, "cat"))), lifecycle("uninitvar", "y", Some("dan"), None)],
            &[("cat", 0.5), ("dan", 0.5)],
        ),
        repo("lab", "labs", "lab", Scope::Lab, vec![lifecycle("slowIsr", "", Some("ann"), None)], &[]),
    ]
}

#[test]
fn cohort_counts_and_clusters() {
    let repos = cohort_fixture();
    let r = cohort_summary(&repos, None, None, &CohortOptions::default());
    assert_eq!(r.totals.occurrence_sum, r.totals.distinct_fingerprints);
    assert_eq!(r.totals.occurrence_sum, 6);
    let slow = r.rules.iter().find(|x| x.rule_id == "slowIsr").unwrap();
    assert_eq!((slow.project_occurrence, slow.lab_occurrence), (2, Some(1)));
    let uninit = r.rules.iter().find(|x| x.rule_id == "uninitvar").unwrap();
    assert!(uninit.critical);
    assert_eq!(uninit.lab_occurrence, Some(0));
    let clusters: Vec<_> = r.rq1.groups.iter().map(|g| (g.repo.as_str(), g.cluster, g.value)).collect();
    assert_eq!(clusters, vec![("g1", Some(1), 3), ("g2", Some(0), 2)]);
    assert!(r.rq1.cluster_test.value().is_some());
    let labs = r.rq1.correlations.iter().find(|c| c.name == "lab_vs_project_per_student").unwrap();
    assert_eq!(labs.r, Maybe::skipped(MISSING_INPUT));
}

#[test]
fn cohort_fixers_and_latency() {
    let r = cohort_summary(&cohort_fixture(), None, None, &CohortOptions::default());
    assert_eq!((r.rq2.fixed, r.rq2.unfixed), (3, 2));
    assert_eq!((r.rq2.same_fixer, r.rq2.different_fixer), (2, 1));
    let pct = *r.rq2.same_fixer_pct.value().unwrap();
    assert!(close(pct, 200.0 / 3.0, 1e-9));
    assert_eq!(r.rq2.template_issues.len(), 1);
    assert_eq!(r.rq2.template_fixed, 0);
    let slow = r.rq3.per_rule_latency.iter().find(|l| l.rule_id == "slowIsr").unwrap();
    assert_eq!(slow.commits.mean, Some(2.5));
    assert!(!slow.critical);
    assert_eq!(r.rq3.critical_mean, Maybe::Value(2.0));
    assert_eq!(r.rq3.non_critical_mean, Maybe::Value(2.5));
    assert_eq!(r.rq3.commit_histogram.introduced.iter().sum::<u64>(), 5);
    assert_eq!(r.rq3.day_histogram.fixed[9], 3);
}

#[test]
fn cohort_without_fixes_is_undefined() {
    let repos = vec![repo("g", "g", "p1", Scope::Project, vec![lifecycle("slowIsr", "", Some("a"), None)], &[("a", 1.0)])];
    let r = cohort_summary(&repos, None, None, &CohortOptions::default());
    assert!(r.rq2.same_fixer_pct.value().is_none());
    assert!(r.rq1.cluster_test.value().is_none());
    assert!(r.rules[0].lab_occurrence.is_none());
    let json = serde_json::to_string(&r).unwrap();
    assert!(!json.contains("NaN"));
}

#[test]
fn cohort_labs_grades_and_projects() {
    let mut repos = cohort_fixture();
    repos.push(repo("g1b", "g1", "p2", Scope::Project, vec![lifecycle("slowIsr", "", Some("bob"), None)], &[("ann", 0.4), ("bob", 0.6)]));
    repos.push(repo("g2b", "g2", "p2", Scope::Project, vec![], &[("cat", 0.5), ("dan", 0.5)]));
    let labs: Vec<LabRow> = [("ann", 1.0), ("bob", 3.0), ("cat", 0.0), ("dan", 2.0)]
        .iter()
        .map(|(a, c)| LabRow { author_id: a.to_string(), assessment_id: "l1".into(), occurrence_count: *c })
        .collect();
    let grades: BTreeMap<String, f64> = [("g1".to_string(), 8.0), ("g2".to_string(), 6.0)].into();
    let r = cohort_summary(&repos, Some(&labs), Some(&grades), &CohortOptions::default());
    let by_name: BTreeMap<&str, &CorrelationRow> = r.rq1.correlations.iter().map(|c| (c.name.as_str(), c)).collect();
    assert_eq!(by_name["lab_vs_project_per_student"].n, 4);
    assert!(by_name["lab_vs_project_per_student"].r.value().is_some());
    assert_eq!(by_name["project_vs_project_per_student"].n, 4);
    assert_eq!(by_name["grade_vs_group_issues"].n, 2);
    assert!(by_name["grade_vs_group_issues"].r.value().is_some());
    assert_eq!(by_name["lab_sum_vs_group_issues"].n, 2);
}

#[test]
fn cohort_is_deterministic_under_input_order() {
    let repos = cohort_fixture();
    let mut rev = repos.clone();
    rev.reverse();
    let a = cohort_summary(&repos, None, None, &CohortOptions::default());
    let b = cohort_summary(&rev, None, None, &CohortOptions::default());
    assert_eq!(a.rules, b.rules);
    assert_eq!(a.rq2, b.rq2);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&a.clone()).unwrap());
}

#[test]
fn markdown_and_figures() {
    let repos = cohort_fixture();
    let r = cohort_summary(&repos, None, None, &CohortOptions::default());
    let md = render_markdown(&r);
    assert!(md.contains("| slowIsr | embedded |  | 2 | 2 | 1 | 1 |"));
    let dir = tempfile::tempdir().unwrap();
    let lcs: Vec<(String, IssueLifecycle)> = repos.iter().flat_map(|r| r.lifecycles.iter().map(|l| (r.name.clone(), l.clone()))).collect();
    write_figures(dir.path(), &r, &lcs).unwrap();
    let lat = std::fs::read_to_string(dir.path().join(FIG_FIX_LATENCY)).unwrap();
    assert_eq!(lat.lines().count(), 4);
    assert!(lat.starts_with("repo,rule,critical,same_fixer,commits,days\n"));
    let hist = std::fs::read_to_string(dir.path().join(FIG_DAY_HIST)).unwrap();
    assert_eq!(hist.lines().count(), 11);
    let intro = std::fs::read_to_string(dir.path().join(FIG_INTRO_REMOVED)).unwrap();
    assert_eq!(intro.lines().count(), 7);
}

#[test]
fn critical_set_is_configurable() {
    let opts = CohortOptions { critical_rules: BTreeSet::from(["slowIsr".to_string()]), ..CohortOptions::default() };
    let r = cohort_summary(&cohort_fixture(), None, None, &opts);
    assert_eq!(r.rq3.critical_mean, Maybe::Value(2.5));
}

fn sample(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0i32..8).prop_map(f64::from), 1..=max_len)
}

fn distinct_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(n1, n2)| {
        Just((0..(n1 + n2) as i32).map(f64::from).collect::<Vec<_>>()).prop_shuffle().prop_map(move |v| (v[..n1].to_vec(), v[n1..].to_vec()))
    })
}

proptest! {
    #[test]
    fn exact_matches_enumeration((a, b) in distinct_pair()) {
        let r = mann_whitney_u_with(&a, &b, MethodChoice::Exact).unwrap();
        prop_assert!(close(r.p_value, enumerate_p(&a, &b), 1e-12));
    }

    #[test]
    fn u_symmetry(a in sample(8), b in sample(8)) {
        let ab = mann_whitney_u(&a, &b).unwrap();
        let ba = mann_whitney_u(&b, &a).unwrap();
        prop_assert!(close(ab.statistic + ba.statistic, (a.len() * b.len()) as f64, 1e-9));
        prop_assert!(close(ab.p_value, ba.p_value, 1e-12));
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
    }

    #[test]
    fn u_rank_invariance(a in sample(8), b in sample(8)) {
        let f = |v: &Vec<f64>| -> Vec<f64> { v.iter().map(|x| x.powi(3) * 2.0 + 5.0).collect() };
        let r1 = mann_whitney_u(&a, &b).unwrap();
        let r2 = mann_whitney_u(&f(&a), &f(&b)).unwrap();
        prop_assert_eq!(r1.statistic, r2.statistic);
        prop_assert!(close(r1.p_value, r2.p_value, 1e-12));
    }

    #[test]
    fn pearson_matches_closed_form(pairs in prop::collection::vec((-50i32..50, -50i32..50), 2..20)) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().map(|(a, b)| (f64::from(*a), f64::from(*b))).unzip();
        if let Ok(r) = pearson(&x, &y) {
            prop_assert!(close(r, pearson_closed_form(&x, &y), 1e-9));
        }
    }

    #[test]
    fn pearson_affine_and_negation(pairs in prop::collection::vec((-50i32..50, -50i32..50), 2..20), s in 1i32..5, t in -10i32..10) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().map(|(a, b)| (f64::from(*a), f64::from(*b))).unzip();
        if let Ok(r) = pearson(&x, &y) {
            let xs: Vec<f64> = x.iter().map(|v| v * f64::from(s) + f64::from(t)).collect();
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            prop_assert!(close(pearson(&xs, &y).unwrap(), r, 1e-9));
            prop_assert!(close(pearson(&x, &neg).unwrap(), -r, 1e-9));
            prop_assert!(r.abs() <= 1.0);
        }
    }
}
