//! Parses a saved analyzer report and, if the analyzer is installed, runs it
//! on a temporary tree.
//!
//! cargo run --example external_report [report.xml]

use std::collections::BTreeSet;

use embermine::extingest::{discover, load_external_report, parse_external_report, run_external_analyzer, ExternalConfig};

const SAVED: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<results version="2">
  <cppcheck version="2.22.0"/>
  <errors>
    <error id="zerodivcond" severity="warning" msg="Either the condition 'freq==0' is redundant or there is division by zero at line 2.">
      <location file="tone.c" line="2" column="23"/>
      <location file="tone.c" line="10" column="12"/>
    </error>
    <error id="uninitvar" severity="error" msg="Uninitialized variable: i">
      <location file="tone.c" line="4" column="14"/>
      <symbol>i</symbol>
    </error>
  </errors>
</results>
"#;

fn main() -> anyhow::Result<()> {
    let report = match std::env::args().nth(1) {
        Some(p) => load_external_report(p.as_ref())?,
        None => parse_external_report(SAVED)?,
    };
    let critical: BTreeSet<String> = ["zerodivcond", "uninitvar"].iter().map(|s| s.to_string()).collect();
    println!("{} {}: {} entries", report.tool, report.version, report.entries.len());
    for d in report.to_diagnostics(&critical) {
        println!("  {}:{} {} critical={} {}", d.path, d.line, d.rule_id, d.critical, d.message);
    }

    let cfg = ExternalConfig::default();
    if discover(&cfg).is_err() {
        println!("analyzer not installed; skipping live run");
        return Ok(());
    }
    let tree = tempfile::tempdir()?;
    std::fs::write(tree.path().join("div.c"), "int f(int d) {\n  int q = 10 / d;\n  if (d == 0) return 0;\n  return q;\n}\n")?;
    let live = run_external_analyzer(tree.path(), &cfg)?;
    for e in &live.entries {
        println!("  live: {}:{} {}", e.path, e.line, e.rule_id);
    }
    Ok(())
}
