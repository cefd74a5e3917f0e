//! Builds git repositories from a declarative script, for tests and demos.

mod scenario;

use std::collections::BTreeMap;
use std::path::Path;

use git2::{IndexAddOption, Repository, Signature, Time};

pub use scenario::{instructor, random_scenario, student, ExpectedIssue, Scenario, ScenarioParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptAuthor {
    pub name: String,
    pub email: String,
}

impl ScriptAuthor {
    pub fn new(name: &str, email: &str) -> Self {
        ScriptAuthor { name: name.into(), email: email.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptCommit {
    pub author: ScriptAuthor,
    pub timestamp: i64,
    pub message: String,
    /// Path → new content; `None` deletes the file.
    pub changes: BTreeMap<String, Option<String>>,
}

impl ScriptCommit {
    pub fn new(author: &ScriptAuthor, timestamp: i64, message: &str) -> Self {
        ScriptCommit { author: author.clone(), timestamp, message: message.into(), changes: BTreeMap::new() }
    }

    pub fn write(mut self, path: &str, content: &str) -> Self {
        self.changes.insert(path.into(), Some(content.into()));
        self
    }

    pub fn delete(mut self, path: &str) -> Self {
        self.changes.insert(path.into(), None);
        self
    }
}

/// Creates a repository at `dir` and replays `commits` on its default
/// branch. Returns the commit hashes in order.
pub fn build_repo(dir: &Path, commits: &[ScriptCommit]) -> Result<Vec<String>, git2::Error> {
    let repo = Repository::init(dir)?;
    let mut hashes = Vec::with_capacity(commits.len());
    for c in commits {
        commit_changes(&repo, c)?;
        hashes.push(repo.head()?.target().expect("head points at a commit").to_string());
    }
    Ok(hashes)
}

/// Applies one scripted commit on top of HEAD of an existing work tree.
pub fn commit_changes(repo: &Repository, c: &ScriptCommit) -> Result<git2::Oid, git2::Error> {
    let root = repo.workdir().expect("non-bare repository").to_path_buf();
    let io = |e: std::io::Error| git2::Error::from_str(&e.to_string());
    for (path, content) in &c.changes {
        let full = root.join(path);
        match content {
            Some(text) => {
                if let Some(parent) = full.parent() {
                    std::fs::create_dir_all(parent).map_err(io)?;
                }
                std::fs::write(&full, text).map_err(io)?;
            }
            None => {
                if full.exists() {
                    std::fs::remove_file(&full).map_err(io)?;
                }
            }
        }
    }
    let mut index = repo.index()?;
    index.add_all(["*"], IndexAddOption::DEFAULT, None)?;
    index.update_all(["*"], None)?;
    index.write()?;
    let tree = repo.find_tree(index.write_tree()?)?;
    let sig = Signature::new(&c.author.name, &c.author.email, &Time::new(c.timestamp, 0))?;
    let parent = match repo.head() {
        Ok(h) => Some(h.peel_to_commit()?),
        Err(_) => None,
    };
    let parents: Vec<_> = parent.iter().collect();
    repo.commit(Some("HEAD"), &sig, &sig, &c.message, &tree, &parents)
}
