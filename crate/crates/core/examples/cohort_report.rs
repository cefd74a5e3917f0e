//! Mines a synthetic cohort and writes the report and figure data.
//!
//! cargo run --example cohort_report [out-dir]

use std::path::PathBuf;

use embermine::config::{ManifestRepo, RunConfig};
use embermine::pipeline::{run_cohort, CohortRunOptions, MineExternal};
use embermine::scripted::{build_repo, random_scenario, student, ScenarioParams};
use embermine::stats::{render_markdown, Scope};

fn main() -> anyhow::Result<()> {
    let scratch = tempfile::tempdir()?;
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| scratch.path().join("out"));
    let mut cfg = RunConfig::default();
    let params = ScenarioParams { critical_fix_rate: 0.6, ..ScenarioParams::default() };
    for g in 0..6u64 {
        let s = random_scenario(g, &params);
        let path = scratch.path().join(format!("group{g}"));
        build_repo(&path, &s.commits)?;
        cfg.authors.template_authors = vec![s.template_pattern];
        cfg.cohort.repos.push(ManifestRepo {
            path,
            name: None,
            group_id: format!("g{g}"),
            members: (0..3).map(|i| student(i).email).collect(),
            project: "p1".into(),
            scope: Scope::Project,
            branch: None,
        });
    }
    cfg.output.dir = out;
    let res = run_cohort(&cfg, &CohortRunOptions { mine: true, external: MineExternal::Disabled, ..CohortRunOptions::default() })?;
    println!("{}", render_markdown(&res.report));
    println!("written to {}", res.dir.display());
    Ok(())
}
