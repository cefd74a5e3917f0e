use std::path::Path;

use embermine::gitminer::*;
use embermine::scripted::{build_repo, commit_changes, ScriptAuthor, ScriptCommit};
use git2::{ObjectType, Oid, Repository, Signature, Time};

fn alice() -> ScriptAuthor {
    ScriptAuthor::new("Alice", "Alice@Uni.edu")
}
fn bob() -> ScriptAuthor {
    ScriptAuthor::new("Bob", "bob@uni.edu")
}
fn prof() -> ScriptAuthor {
    ScriptAuthor::new("Prof", "prof@staff.uni.edu")
}

fn lines(prefix: &str, n: usize) -> String {
    (0..n).map(|i| format!("int {prefix}{i};\n")).collect()
}

fn open(dir: &Path) -> GitRepo {
    let authors = AuthorMap::default().with_template_authors(&["*@staff.uni.edu".into()]).unwrap();
    GitRepo::open(dir, authors).unwrap()
}

fn five_commits(dir: &Path) -> Vec<String> {
    let t = 1_700_000_000;
    build_repo(
        dir,
        &[
            ScriptCommit::new(&alice(), t, "init").write("main.c", "int main(void) {\n  return 0;\n}\n"),
            ScriptCommit::new(&bob(), t + 100, "add util").write("util.c", "int a;\nint b;\n").write("README", "x\n"),
            ScriptCommit::new(&alice(), t + 200, "edit").write("util.c", "int a;\nint c;\nint d;\n"),
            ScriptCommit::new(&bob(), t + 300, "docs").write("README", "y\n"),
            ScriptCommit::new(&alice(), t + 400, "drop util").delete("util.c"),
        ],
    )
    .unwrap()
}

#[test]
fn enumerate_five_commits() {
    let dir = tempfile::tempdir().unwrap();
    let hashes = five_commits(dir.path());
    let commits = open(dir.path()).enumerate_commits(None).unwrap();
    assert_eq!(commits.len(), 5);
    assert_eq!(commits.iter().map(|c| c.index).collect::<Vec<_>>(), [0, 1, 2, 3, 4]);
    assert_eq!(commits.iter().map(|c| c.hash.clone()).collect::<Vec<_>>(), hashes);
    assert_eq!(commits[0].author_id, "alice@uni.edu");
    assert_eq!(commits[1].author_id, "bob@uni.edu");
    assert_eq!(commits[1].timestamp, 1_700_000_100);
    assert_eq!(commits[2].message, "edit");
    // C files only: README changes do not count.
    assert_eq!(commits[0].changed_lines, 3);
    assert_eq!(commits[1].changed_lines, 2);
    assert_eq!(commits[2].changed_lines, 3);
    assert_eq!(commits[3].changed_lines, 0);
    assert!(commits[3].changed_paths.is_empty());
    assert_eq!(commits[4].changed_lines, 3);
    assert_eq!(commits[4].changed_paths, ["util.c"]);

    // Deterministic.
    assert_eq!(open(dir.path()).enumerate_commits(None).unwrap(), commits);
}

#[test]
fn single_empty_and_missing() {
    let dir = tempfile::tempdir().unwrap();
    Repository::init(dir.path()).unwrap();
    assert!(open(dir.path()).enumerate_commits(None).unwrap().is_empty());

    build_repo(dir.path(), &[ScriptCommit::new(&alice(), 1, "only").write("a.c", "int x;\n")]).unwrap();
    let commits = open(dir.path()).enumerate_commits(None).unwrap();
    assert_eq!(commits.len(), 1);
    assert_eq!(commits[0].index, 0);

    match open(dir.path()).enumerate_commits(Some("no-such-branch")) {
        Err(e @ GitMinerError::BranchNotFound(_)) => assert!(e.to_string().contains("no-such-branch")),
        other => panic!("{other:?}"),
    }

    let not_repo = tempfile::tempdir().unwrap();
    assert!(matches!(GitRepo::open(not_repo.path(), AuthorMap::default()), Err(GitMinerError::RepoOpenError { .. })));
}

#[test]
fn named_branch() {
    let dir = tempfile::tempdir().unwrap();
    five_commits(dir.path());
    let repo = Repository::open(dir.path()).unwrap();
    let head = repo.head().unwrap().peel_to_commit().unwrap();
    repo.branch("feature", &head.parent(0).unwrap(), false).unwrap();
    assert_eq!(open(dir.path()).enumerate_commits(Some("feature")).unwrap().len(), 4);
}

#[test]
fn snapshot_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let hashes = five_commits(dir.path());
    let g = open(dir.path());

    for (i, h) in hashes.iter().enumerate() {
        let out = tempfile::tempdir().unwrap();
        let manifest = g.snapshot(h, out.path()).unwrap();
        for m in &manifest {
            let oid = Oid::hash_file(ObjectType::Blob, out.path().join(&m.path)).unwrap();
            assert_eq!(oid.to_string(), m.blob);
        }
        let paths: Vec<_> = manifest.iter().map(|m| m.path.as_str()).collect();
        match i {
            0 => assert_eq!(paths, ["main.c"]),
            1..=3 => assert_eq!(paths, ["main.c", "util.c"]),
            _ => assert_eq!(paths, ["main.c"]),
        }
        assert!(!out.path().join("README").exists());
    }
    assert!(matches!(g.snapshot(&"0".repeat(40), dir.path()), Err(GitMinerError::ObjectMissing(_))));
}

#[test]
fn snapshot_without_c_files() {
    let dir = tempfile::tempdir().unwrap();
    let h = build_repo(dir.path(), &[ScriptCommit::new(&alice(), 1, "docs").write("README.md", "hi\n")]).unwrap();
    let out = tempfile::tempdir().unwrap();
    assert!(open(dir.path()).snapshot(&h[0], out.path()).unwrap().is_empty());
}

#[test]
fn blame_attribution() {
    let dir = tempfile::tempdir().unwrap();
    let h = build_repo(
        dir.path(),
        &[
            ScriptCommit::new(&prof(), 10, "template").write("m.c", "int t0;\nint t1;\n"),
            ScriptCommit::new(&alice(), 20, "a").write("m.c", "int t0;\nint t1;\nint a;\n"),
            ScriptCommit::new(&bob(), 30, "b").write("m.c", "int t0;\nint t1;\nint a;\nint b;\n"),
            ScriptCommit::new(&alice(), 40, "a2").write("m.c", "int t0;\nint t1;\nint a2;\nint b;\n"),
            ScriptCommit::new(&alice(), 50, "a3").write("m.c", "int t0;\nint t1;\nint a3;\nint b;\n"),
        ],
    )
    .unwrap();
    let g = open(dir.path());
    assert_eq!(g.blame_line(&h[4], "m.c", 4).unwrap(), BlameResult { author_id: "bob@uni.edu".into(), origin_commit: h[2].clone() });
    assert_eq!(g.blame_line(&h[4], "m.c", 1).unwrap(), BlameResult { author_id: TEMPLATE.into(), origin_commit: h[0].clone() });
    assert_eq!(g.blame_line(&h[4], "m.c", 3).unwrap().origin_commit, h[4]);
    // As of an earlier commit.
    assert_eq!(g.blame_line(&h[2], "m.c", 3).unwrap().origin_commit, h[1]);
    assert!(matches!(g.blame_line(&h[4], "m.c", 5), Err(GitMinerError::BlameRangeError { lines: 4, .. })));
    assert!(matches!(g.blame_line(&h[4], "m.c", 0), Err(GitMinerError::BlameRangeError { .. })));
    assert!(g.blame_line(&h[4], "gone.c", 1).is_err());
}

#[test]
fn loc_share_sixty_forty() {
    let dir = tempfile::tempdir().unwrap();
    let h = build_repo(
        dir.path(),
        &[
            ScriptCommit::new(&alice(), 10, "a").write("a.c", &lines("a", 60)).write("notes.txt", &lines("n", 50)),
            ScriptCommit::new(&bob(), 20, "b").write("inc/b.h", &lines("b", 40)),
        ],
    )
    .unwrap();
    let share = open(dir.path()).loc_share(&h[1]).unwrap();
    assert!((share.fractions["alice@uni.edu"] - 0.6).abs() < 1e-9);
    assert!((share.fractions["bob@uni.edu"] - 0.4).abs() < 1e-9);
    assert!((share.fractions.values().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn loc_share_single_author_and_template() {
    let dir = tempfile::tempdir().unwrap();
    let h = build_repo(
        dir.path(),
        &[
            ScriptCommit::new(&prof(), 10, "template").write("base.c", &lines("t", 30)),
            ScriptCommit::new(&alice(), 20, "a").write("a.c", &lines("a", 7)),
        ],
    )
    .unwrap();
    let g = open(dir.path());
    let share = g.loc_share(&h[1]).unwrap();
    assert_eq!(share.template_lines, 30);
    assert_eq!(share.fractions.len(), 1);
    assert!((share.fractions["alice@uni.edu"] - 1.0).abs() < 1e-12);
    // Only template code: no student shares at all.
    assert!(g.loc_share(&h[0]).unwrap().fractions.is_empty());
}

#[test]
fn author_map_merges_identities() {
    let dir = tempfile::tempdir().unwrap();
    build_repo(
        dir.path(),
        &[
            ScriptCommit::new(&alice(), 10, "a").write("a.c", "int a;\n"),
            ScriptCommit::new(&ScriptAuthor::new("alice", "alice@home.net"), 20, "b").write("b.c", "int b;\n"),
        ],
    )
    .unwrap();
    let map = AuthorMap::parse("alice Alice <alice@uni.edu>\nalice <alice@home.net>\n").unwrap();
    let commits = GitRepo::open(dir.path(), map).unwrap().enumerate_commits(None).unwrap();
    assert!(commits.iter().all(|c| c.author_id == "alice"));
}

#[test]
fn renames_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let body = lines("v", 20);
    build_repo(
        dir.path(),
        &[
            ScriptCommit::new(&alice(), 10, "a").write("old.c", &body),
            ScriptCommit::new(&alice(), 20, "mv").delete("old.c").write("src/new.c", &body),
        ],
    )
    .unwrap();
    let commits = open(dir.path()).enumerate_commits(None).unwrap();
    assert_eq!(commits[1].renames, [("old.c".to_string(), "src/new.c".to_string())]);
}

/// main: c0 - c1 ------ m
///              \      /
/// side:         s1 - s2
#[test]
fn merges_first_parent_and_total_order() {
    let dir = tempfile::tempdir().unwrap();
    build_repo(
        dir.path(),
        &[ScriptCommit::new(&alice(), 10, "c0").write("a.c", "int a;\n"), ScriptCommit::new(&alice(), 20, "c1").write("a.c", "int a1;\n")],
    )
    .unwrap();
    let repo = Repository::open(dir.path()).unwrap();
    let main_ref = repo.head().unwrap().name().unwrap().to_string();
    let c1 = repo.head().unwrap().peel_to_commit().unwrap();
    repo.branch("side", &c1, false).unwrap();
    repo.set_head("refs/heads/side").unwrap();
    repo.checkout_head(Some(git2::build::CheckoutBuilder::new().force())).unwrap();
    commit_changes(&repo, &ScriptCommit::new(&bob(), 30, "s1").write("b.c", "int b;\n")).unwrap();
    let s2 = commit_changes(&repo, &ScriptCommit::new(&bob(), 40, "s2").write("b.c", "int b2;\n")).unwrap();

    let sig = Signature::new("Alice", "alice@uni.edu", &Time::new(50, 0)).unwrap();
    let s2c = repo.find_commit(s2).unwrap();
    repo.commit(Some(&main_ref), &sig, &sig, "merge side", &s2c.tree().unwrap(), &[&c1, &s2c]).unwrap();
    repo.set_head(&main_ref).unwrap();

    let fp = open(dir.path()).enumerate_commits(None).unwrap();
    assert_eq!(fp.iter().map(|c| c.message.as_str()).collect::<Vec<_>>(), ["c0", "c1", "merge side"]);
    assert!(fp[2].is_merge);
    assert_eq!(fp[2].changed_paths, ["b.c"]);

    let all = open(dir.path()).with_traversal(Traversal::TotalOrder).enumerate_commits(None).unwrap();
    assert_eq!(all.iter().map(|c| c.message.as_str()).collect::<Vec<_>>(), ["c0", "c1", "s1", "s2", "merge side"]);
    assert_eq!(all.iter().map(|c| c.index).collect::<Vec<_>>(), [0, 1, 2, 3, 4]);
}
