//! Builds a small scripted history and mines it end to end.

use embermine::config::RunConfig;
use embermine::pipeline::{mine_repo, MineExternal, MineOptions};
use embermine::scripted::{random_scenario, build_repo, ScenarioParams};

fn main() -> anyhow::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let scenario = random_scenario(seed, &ScenarioParams::default());
    let root = tempfile::tempdir()?;
    let repo = root.path().join("repo");
    build_repo(&repo, &scenario.commits)?;

    let mut cfg = RunConfig::default();
    cfg.authors.template_authors = vec![scenario.template_pattern.clone()];
    let opts = MineOptions { external: MineExternal::Disabled, ..MineOptions::new("repo", root.path().join("out")) };
    let res = mine_repo(&repo, &cfg, &opts)?;

    println!("{} commits, {} issues", res.commits.len(), res.lifecycles.len());
    for l in &res.lifecycles {
        let fix = l.fixed_commit.as_ref().map(|f| f.index.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "{:<20} {:<14} intro {} by {:<28} fixed {} by {}",
            l.rule_id(),
            l.intro_path,
            l.introduced_commit.index,
            l.introduced_by.as_deref().unwrap_or("?"),
            fix,
            l.fixed_by.as_deref().unwrap_or("-")
        );
    }
    println!("expected {} issues from the generator", scenario.expected.len());
    for (rule, m) in &res.metrics.metrics.per_rule {
        println!("{rule}: occurrence {} total {}", m.occurrence, m.total);
    }
    Ok(())
}
