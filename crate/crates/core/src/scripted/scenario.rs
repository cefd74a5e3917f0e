use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ScriptAuthor, ScriptCommit};
use crate::gitminer::TEMPLATE;

/// Kinds of seeded issue. Each slot file holds one function that can be
/// switched between a clean and a faulty variant by rewriting one line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotKind {
    SlowCall,
    VolatileLocal,
    MissingVolatile,
    NarrowableGlobal,
}

const KINDS: [SlotKind; 4] = [SlotKind::SlowCall, SlotKind::VolatileLocal, SlotKind::MissingVolatile, SlotKind::NarrowableGlobal];

impl SlotKind {
    fn rule_id(self) -> &'static str {
        match self {
            SlotKind::SlowCall => "slowIRS",
            SlotKind::VolatileLocal => "wrongUseOfVolatile",
            SlotKind::MissingVolatile => "notVolatileVarIrs",
            SlotKind::NarrowableGlobal => "wrongUseGlobalVar",
        }
    }

    fn symbol(self, k: usize) -> String {
        match self {
            SlotKind::SlowCall => "printf".into(),
            SlotKind::VolatileLocal => "x".into(),
            SlotKind::MissingVolatile => format!("g{k}"),
            SlotKind::NarrowableGlobal => format!("c{k}"),
        }
    }

    fn render(self, k: usize, faulty: bool) -> String {
        match self {
            SlotKind::SlowCall => {
                let body = if faulty { format!("  printf(\"{k}\");") } else { "  led_toggle();".into() };
                format!("void S{k}_Handler(void) {{\n{body}\n}}\n")
            }
            SlotKind::VolatileLocal => {
                let q = if faulty { "volatile " } else { "" };
                format!("int v{k}(void) {{\n  {q}int x = {k};\n  return x;\n}}\n")
            }
            SlotKind::MissingVolatile => {
                let q = if faulty { "" } else { "volatile " };
                format!("{q}int g{k};\nvoid N{k}_Handler(void) {{\n  g{k} = 1;\n}}\nint r{k}(void) {{\n  return g{k};\n}}\n")
            }
            SlotKind::NarrowableGlobal => {
                let q = if faulty { "" } else { "const " };
                format!("static {q}int c{k} = 1;\nint w{k}(void) {{\n  return c{k};\n}}\n")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedIssue {
    pub rule_id: String,
    pub path: String,
    pub symbol: String,
    pub intro_index: usize,
    pub fix_index: Option<usize>,
    pub introduced_by: String,
    pub fixed_by: Option<String>,
    pub same_fixer: Option<bool>,
    pub alive_commit_count: Option<usize>,
    pub alive_days: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub commits: Vec<ScriptCommit>,
    /// Glob matching the instructor's email.
    pub template_pattern: String,
    pub expected: Vec<ExpectedIssue>,
}

#[derive(Debug, Clone)]
pub struct ScenarioParams {
    pub commits: std::ops::RangeInclusive<usize>,
    pub slots: std::ops::RangeInclusive<usize>,
    pub students: usize,
    /// Probability that a slot starts faulty in the template commit.
    pub template_fault: f64,
    /// Probability that a randomly picked open issue gets fixed rather than
    /// left alone.
    pub fix_bias: f64,
    /// Per-commit probability that each open missing-volatile issue is fixed
    /// before anything else happens.
    pub critical_fix_rate: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams { commits: 6..=14, slots: 2..=5, students: 3, template_fault: 0.3, fix_bias: 0.5, critical_fix_rate: 0.0 }
    }
}

pub fn student(i: usize) -> ScriptAuthor {
    let name = ["alice", "bob", "carol", "dave", "erin"][i % 5];
    ScriptAuthor::new(name, &format!("{name}@students.example.edu"))
}

pub fn instructor() -> ScriptAuthor {
    ScriptAuthor::new("Instructor", "teacher@staff.example.edu")
}

/// A random single-branch history with seeded issues and the lifecycles a
/// correct miner must report for it. Author ids are lowercased emails and
/// `TEMPLATE` for the instructor.
pub fn random_scenario(seed: u64, params: &ScenarioParams) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_commits = rng.gen_range(params.commits.clone()).max(1);
    let n_slots = rng.gen_range(params.slots.clone());
    let kinds: Vec<SlotKind> = (0..n_slots).map(|_| *KINDS.choose(&mut rng).unwrap()).collect();
    let path = |k: usize| format!("src/slot{k}.c");

    let mut faulty = vec![false; n_slots];
    let mut comments = vec![0usize; n_slots];
    let render = |k: usize, faulty: bool, comments: usize| {
        let mut s = "// note\n".repeat(comments);
        s.push_str(&kinds[k].render(k, faulty));
        s
    };

    let mut ts = 1_700_000_000i64;
    let mut commits = Vec::with_capacity(n_commits);
    // Open issue per slot: (intro index, introducer).
    let mut open: Vec<Option<(usize, String)>> = vec![None; n_slots];
    let mut expected = Vec::new();

    let close = |expected: &mut Vec<ExpectedIssue>, k: usize, intro: (usize, String), fix: Option<(usize, String)>, stamps: &[i64]| {
        let (fix_index, fixed_by) = fix.map(|(i, a)| (Some(i), Some(a))).unwrap_or((None, None));
        expected.push(ExpectedIssue {
            rule_id: kinds[k].rule_id().into(),
            path: path(k),
            symbol: kinds[k].symbol(k),
            intro_index: intro.0,
            fix_index,
            same_fixer: fixed_by.as_ref().map(|f| *f == intro.1 && intro.1 != TEMPLATE),
            alive_commit_count: fix_index.map(|f| f - intro.0),
            alive_days: fix_index.map(|f| (stamps[f] - stamps[intro.0]) as f64 / 86_400.0),
            introduced_by: intro.1,
            fixed_by,
        });
    };

    let mut stamps = Vec::with_capacity(n_commits);
    for i in 0..n_commits {
        let author = if i == 0 { instructor() } else { student(rng.gen_range(0..params.students.max(1))) };
        let author_id = if i == 0 { TEMPLATE.to_string() } else { author.email.clone() };
        stamps.push(ts);
        let mut c = ScriptCommit::new(&author, ts, &format!("commit {i}"));
        if i == 0 {
            for k in 0..n_slots {
                faulty[k] = rng.gen_bool(params.template_fault);
                if faulty[k] {
                    open[k] = Some((0, TEMPLATE.to_string()));
                }
                c = c.write(&path(k), &render(k, faulty[k], 0));
            }
            c = c.write("src/main.c", "int main(void) {\n  return 0;\n}\n");
        } else {
            for k in 0..n_slots {
                if kinds[k] == SlotKind::MissingVolatile && faulty[k] && rng.gen_bool(params.critical_fix_rate) {
                    faulty[k] = false;
                    let intro = open[k].take().expect("faulty slot has an open issue");
                    close(&mut expected, k, intro, Some((i, author_id.clone())), &stamps);
                    c = c.write(&path(k), &render(k, false, comments[k]));
                }
            }
            let mut order: Vec<usize> = (0..n_slots).filter(|k| !c.changes.contains_key(&path(*k))).collect();
            order.shuffle(&mut rng);
            let toggles = rng.gen_range(0..=2.min(n_slots));
            for &k in order.iter().take(toggles) {
                if faulty[k] && !rng.gen_bool(params.fix_bias) {
                    continue;
                }
                faulty[k] = !faulty[k];
                if faulty[k] {
                    open[k] = Some((i, author_id.clone()));
                } else {
                    let intro = open[k].take().expect("faulty slot has an open issue");
                    close(&mut expected, k, intro, Some((i, author_id.clone())), &stamps);
                }
                c = c.write(&path(k), &render(k, faulty[k], comments[k]));
            }
            // Filler: shift a slot down with a comment, or touch main.c.
            if rng.gen_bool(0.5) {
                let k = rng.gen_range(0..n_slots);
                if !c.changes.contains_key(&path(k)) {
                    comments[k] += 1;
                    c = c.write(&path(k), &render(k, faulty[k], comments[k]));
                }
            } else {
                c = c.write("src/main.c", &format!("int main(void) {{\n  return {i};\n}}\n"));
            }
        }
        commits.push(c);
        ts += rng.gen_range(600..3 * 86_400);
    }
    for k in 0..n_slots {
        if let Some(intro) = open[k].take() {
            close(&mut expected, k, intro, None, &stamps);
        }
    }
    expected.sort_by(|a, b| (&a.path, a.intro_index).cmp(&(&b.path, b.intro_index)));
    Scenario { commits, template_pattern: "*@staff.example.edu".into(), expected }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = random_scenario(7, &ScenarioParams::default());
        let b = random_scenario(7, &ScenarioParams::default());
        assert_eq!(a.commits, b.commits);
        assert_eq!(a.expected, b.expected);
    }

    #[test]
    fn ground_truth_is_consistent() {
        for seed in 0..50 {
            let s = random_scenario(seed, &ScenarioParams::default());
            for e in &s.expected {
                if let Some(f) = e.fix_index {
                    assert!(f > e.intro_index);
                    assert_eq!(e.alive_commit_count, Some(f - e.intro_index));
                    assert_eq!(e.same_fixer, Some(e.fixed_by.as_deref() == Some(e.introduced_by.as_str()) && e.introduced_by != TEMPLATE));
                } else {
                    assert!(e.same_fixer.is_none() && e.fixed_by.is_none());
                }
            }
        }
    }
}
