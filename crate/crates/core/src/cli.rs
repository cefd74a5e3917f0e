//! Command-line front end. `run` returns the process exit status:
//! 0 clean, 1 issues found (or cohort inputs missing), 2 error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{CohortConfig, RunConfig};
use crate::gitminer::Traversal;
use crate::pipeline::{check_tree, mine_repo, run_cohort, CheckExternal, CohortRunOptions, MineExternal, MineOptions};
use crate::rules::catalog;
use crate::rules::Diagnostic;
use crate::stats::GroupMetric;

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_ISSUES: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "embermine", version, about = "Embedded C quality rules and issue lifecycle mining")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long, short = 'c', global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a source tree; exit 0 only if no diagnostics.
    Check {
        path: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Print diagnostics as JSON.
        #[arg(long)]
        json: bool,
        /// Also run the external analyzer.
        #[arg(long)]
        external: bool,
        /// Merge a saved external XML report instead of running the analyzer.
        #[arg(long, value_name = "FILE", conflicts_with = "external")]
        external_report: Option<PathBuf>,
    },
    /// Mine a repository's history into an issue database.
    Mine {
        repo: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mine: MineArgs,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Name of the per-repository output directory.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        branch: Option<String>,
    },
    /// Aggregate mined repositories into the cohort report.
    Cohort {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mine_args: MineArgs,
        /// TOML file with `[[repos]]`, `labs` and `grades` (overrides [cohort]).
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Mine every repository before aggregating.
        #[arg(long)]
        mine: bool,
        /// Exit 0 even if some repositories have no database.
        #[arg(long)]
        allow_partial: bool,
        #[arg(long, value_enum)]
        metric: Option<MetricArg>,
    },
    /// Rule catalog.
    Rules {
        #[command(subcommand)]
        command: RulesCommand,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct MineArgs {
    /// Absent commits tolerated before an issue counts as fixed.
    #[arg(long, default_value_t = 0)]
    pub gap: usize,
    /// Walk every reachable commit instead of first parents only.
    #[arg(long)]
    pub total_order: bool,
    /// Embedded rules only.
    #[arg(long)]
    pub no_external: bool,
    /// Directory of `<commit>.xml` external reports.
    #[arg(long, value_name = "DIR", conflicts_with = "no_external")]
    pub external_reports: Option<PathBuf>,
}

impl MineArgs {
    fn external(&self) -> MineExternal {
        match (&self.external_reports, self.no_external) {
            (Some(d), _) => MineExternal::Reports(d.clone()),
            (None, true) => MineExternal::Disabled,
            (None, false) => MineExternal::Run,
        }
    }

    fn traversal(&self) -> Traversal {
        if self.total_order {
            Traversal::TotalOrder
        } else {
            Traversal::FirstParent
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum MetricArg {
    Occurrence,
    Total,
}

#[derive(Subcommand, Debug)]
pub enum RulesCommand {
    List {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        json: bool,
    },
}

fn load_config(common: &Common) -> anyhow::Result<RunConfig> {
    match &common.config {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn load_manifest(path: &Path) -> anyhow::Result<CohortConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let mut cohort: CohortConfig = toml::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let mut tmp = RunConfig { cohort, ..RunConfig::default() };
    tmp.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    tmp.validate()?;
    cohort = tmp.cohort;
    Ok(cohort)
}

fn format_diagnostic(d: &Diagnostic) -> String {
    let crit = if d.critical { ", critical" } else { "" };
    format!("{}:{}: [{}] ({}{}) {}", d.path, d.line, d.rule_id, d.severity, crit, d.message)
}

fn cmd_check(path: &Path, common: &Common, json: bool, external: bool, report: Option<PathBuf>, out: &mut dyn Write) -> anyhow::Result<i32> {
    let cfg = load_config(common)?;
    let mode = match (report, external || cfg.external.path.is_some()) {
        (Some(r), _) => CheckExternal::Report(r),
        (None, true) => CheckExternal::Run,
        (None, false) => CheckExternal::Disabled,
    };
    let diags = check_tree(path, &cfg, &mode)?;
    if json {
        serde_json::to_writer_pretty(&mut *out, &diags)?;
        writeln!(out)?;
    } else {
        for d in &diags {
            writeln!(out, "{}", format_diagnostic(d))?;
        }
        writeln!(out, "{} diagnostic(s)", diags.len())?;
    }
    Ok(if diags.is_empty() { EXIT_CLEAN } else { EXIT_ISSUES })
}

fn cmd_rules(common: &Common, json: bool, out: &mut dyn Write) -> anyhow::Result<i32> {
    let cfg = load_config(common)?;
    let rows: Vec<serde_json::Value> = catalog()
        .into_iter()
        .map(|r| {
            serde_json::json!({
                "id": r.id,
                "source": r.source,
                "severity": r.severity,
                "critical": cfg.rules.is_critical(r.id),
                "description": r.description,
            })
        })
        .collect();
    if json {
        serde_json::to_writer_pretty(&mut *out, &rows)?;
        writeln!(out)?;
    } else {
        for (r, row) in catalog().into_iter().zip(&rows) {
            let crit = if row["critical"].as_bool() == Some(true) { "critical" } else { "" };
            writeln!(out, "{:<28} {:<9} {:<12} {:<9} {}", r.id, row["source"].as_str().unwrap_or(""), r.severity, crit, r.description)?;
        }
    }
    Ok(EXIT_CLEAN)
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    match cli.command {
        Command::Check { path, common, json, external, external_report } => cmd_check(&path, &common, json, external, external_report, out),
        Command::Rules { command: RulesCommand::List { common, json } } => cmd_rules(&common, json, out),
        Command::Mine { repo, common, mine, out: out_dir, name, branch } => {
            let mut cfg = load_config(&common)?;
            if let Some(o) = out_dir {
                cfg.output.dir = o;
            }
            let name = name.unwrap_or_else(|| {
                std::fs::canonicalize(&repo)
                    .ok()
                    .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                    .unwrap_or_else(|| "repo".into())
            });
            let opts = MineOptions {
                name,
                branch,
                gap: mine.gap,
                traversal: mine.traversal(),
                external: mine.external(),
                out_dir: cfg.output.dir.clone(),
            };
            let res = mine_repo(&repo, &cfg, &opts)?;
            for f in &res.failures {
                writeln!(err, "warning: {}: {}", f.kind, f.message)?;
            }
            let fixed = res.lifecycles.iter().filter(|l| l.is_fixed()).count();
            writeln!(
                out,
                "{}: {} commits, {} issues ({} fixed), {} failure(s), {} analyzed, {} cached -> {}",
                opts.name,
                res.commits.len(),
                res.lifecycles.len(),
                fixed,
                res.failures.len(),
                res.analyzed,
                res.cached,
                opts.repo_dir().display()
            )?;
            Ok(EXIT_CLEAN)
        }
        Command::Cohort { common, mine_args, manifest, out: out_dir, mine, allow_partial, metric } => {
            let mut cfg = load_config(&common)?;
            if let Some(m) = manifest {
                cfg.cohort = load_manifest(&m)?;
            }
            if let Some(o) = out_dir {
                cfg.output.dir = o;
            }
            if let Some(m) = metric {
                cfg.cohort.metric = match m {
                    MetricArg::Occurrence => GroupMetric::Occurrence,
                    MetricArg::Total => GroupMetric::Total,
                };
            }
            let opts = CohortRunOptions { mine, external: mine_args.external(), gap: mine_args.gap, traversal: mine_args.traversal() };
            let res = run_cohort(&cfg, &opts)?;
            for m in &res.missing {
                writeln!(err, "missing issue database: {m}")?;
            }
            writeln!(out, "cohort report: {} repositories -> {}", res.report.totals.repos, res.dir.display())?;
            Ok(if res.missing.is_empty() || allow_partial { EXIT_CLEAN } else { EXIT_ISSUES })
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_CLEAN };
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}
