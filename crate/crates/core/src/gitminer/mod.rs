//! Read-only access to a repository's history: commit enumeration, source
//! snapshots, blame and authorship shares.

mod authors;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use git2::{BlameOptions, Diff, DiffFindOptions, DiffOptions, ObjectType, Oid, Repository, Sort, TreeWalkMode, TreeWalkResult};
use serde::{Deserialize, Serialize};

pub use authors::{AuthorMap, TEMPLATE};

#[derive(Debug, thiserror::Error)]
pub enum GitMinerError {
    #[error("cannot open repository {path}: {message}")]
    RepoOpenError { path: PathBuf, message: String },
    #[error("branch {0:?} not found")]
    BranchNotFound(String),
    #[error("object missing: {0}")]
    ObjectMissing(String),
    #[error("line {line} out of range for {path} ({lines} lines)")]
    BlameRangeError { path: String, line: u32, lines: u32 },
    #[error("author map line {line}: {message}")]
    AuthorMap { line: u32, message: String },
    #[error(transparent)]
    Git(#[from] git2::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Traversal {
    /// Root to tip along first parents; a merge is one event.
    #[default]
    FirstParent,
    /// Every reachable commit, parents before children, ties by time.
    TotalOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub hash: String,
    pub author_id: String,
    /// Author time, UTC seconds, as recorded.
    pub timestamp: i64,
    pub index: usize,
    pub message: String,
    /// Insertions plus deletions in `.c`/`.h` files against the first parent.
    pub changed_lines: u64,
    /// `.c`/`.h` paths touched against the first parent.
    pub changed_paths: Vec<String>,
    /// `(old, new)` `.c`/`.h` renames against the first parent.
    pub renames: Vec<(String, String)>,
    pub is_merge: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    /// Git blob id of the content.
    pub blob: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct LocShare {
    /// Student author → fraction of non-template lines in the final tree.
    pub fractions: BTreeMap<String, f64>,
    pub lines: BTreeMap<String, u64>,
    pub template_lines: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlameResult {
    pub author_id: String,
    pub origin_commit: String,
}

pub fn is_c_path(path: &str) -> bool {
    path.ends_with(".c") || path.ends_with(".h")
}

pub struct GitRepo {
    repo: Repository,
    pub authors: AuthorMap,
    pub traversal: Traversal,
}

impl GitRepo {
    pub fn open(path: &Path, authors: AuthorMap) -> Result<Self, GitMinerError> {
        let repo = Repository::open(path)
            .map_err(|e| GitMinerError::RepoOpenError { path: path.to_path_buf(), message: e.message().to_string() })?;
        Ok(GitRepo { repo, authors, traversal: Traversal::FirstParent })
    }

    pub fn with_traversal(mut self, t: Traversal) -> Self {
        self.traversal = t;
        self
    }

    pub fn repository(&self) -> &Repository {
        &self.repo
    }

    fn tip(&self, branch: Option<&str>) -> Result<Option<Oid>, GitMinerError> {
        match branch {
            None => match self.repo.head() {
                Ok(h) => Ok(h.target()),
                Err(e) if e.code() == git2::ErrorCode::UnbornBranch || e.code() == git2::ErrorCode::NotFound => Ok(None),
                Err(e) => Err(e.into()),
            },
            Some(name) => {
                let found = self
                    .repo
                    .find_branch(name, git2::BranchType::Local)
                    .ok()
                    .and_then(|b| b.get().target())
                    .or_else(|| self.repo.revparse_single(name).ok().and_then(|o| o.peel_to_commit().ok()).map(|c| c.id()));
                found.map(Some).ok_or_else(|| GitMinerError::BranchNotFound(name.to_string()))
            }
        }
    }

    fn oid(&self, hash: &str) -> Result<Oid, GitMinerError> {
        let oid = Oid::from_str(hash).map_err(|_| GitMinerError::ObjectMissing(hash.to_string()))?;
        self.repo.find_commit(oid).map_err(|_| GitMinerError::ObjectMissing(hash.to_string()))?;
        Ok(oid)
    }

    /// History of `branch` (default: HEAD), oldest first.
    pub fn enumerate_commits(&self, branch: Option<&str>) -> Result<Vec<CommitRecord>, GitMinerError> {
        let Some(tip) = self.tip(branch)? else { return Ok(Vec::new()) };
        let mut walk = self.repo.revwalk()?;
        walk.push(tip)?;
        match self.traversal {
            Traversal::FirstParent => {
                walk.simplify_first_parent()?;
                walk.set_sorting(Sort::TOPOLOGICAL | Sort::REVERSE)?;
            }
            Traversal::TotalOrder => walk.set_sorting(Sort::TOPOLOGICAL | Sort::TIME | Sort::REVERSE)?,
        }
        let mut out = Vec::new();
        for (index, oid) in walk.enumerate() {
            let commit = self.repo.find_commit(oid?)?;
            let author = commit.author();
            let timestamp = author.when().seconds();
            let (changed_lines, changed_paths, renames) = self.first_parent_changes(&commit)?;
            out.push(CommitRecord {
                hash: commit.id().to_string(),
                author_id: self.authors.resolve(author.name().unwrap_or(""), author.email().unwrap_or(""), timestamp),
                timestamp,
                index,
                message: commit.message().unwrap_or("").trim_end().to_string(),
                changed_lines,
                changed_paths,
                renames,
                is_merge: commit.parent_count() > 1,
            });
        }
        Ok(out)
    }

    fn diff_to_parent(&self, commit: &git2::Commit) -> Result<Diff<'_>, GitMinerError> {
        let tree = commit.tree()?;
        let parent = if commit.parent_count() > 0 { Some(commit.parent(0)?.tree()?) } else { None };
        let mut opts = DiffOptions::new();
        opts.pathspec("*.c").pathspec("*.h");
        let mut diff = self.repo.diff_tree_to_tree(parent.as_ref(), Some(&tree), Some(&mut opts))?;
        diff.find_similar(Some(DiffFindOptions::new().renames(true)))?;
        Ok(diff)
    }

    fn first_parent_changes(&self, commit: &git2::Commit) -> Result<(u64, Vec<String>, Vec<(String, String)>), GitMinerError> {
        let diff = self.diff_to_parent(commit)?;
        let stats = diff.stats()?;
        let mut paths = Vec::new();
        let mut renames = Vec::new();
        for d in diff.deltas() {
            let old = d.old_file().path().map(|p| p.to_string_lossy().into_owned());
            let new = d.new_file().path().map(|p| p.to_string_lossy().into_owned());
            if d.status() == git2::Delta::Renamed {
                if let (Some(o), Some(n)) = (&old, &new) {
                    renames.push((o.clone(), n.clone()));
                }
            }
            paths.extend(old.into_iter().chain(new).filter(|p| is_c_path(p)));
        }
        paths.sort();
        paths.dedup();
        Ok(((stats.insertions() + stats.deletions()) as u64, paths, renames))
    }

    /// Id of the commit's root tree.
    pub fn tree_id(&self, hash: &str) -> Result<String, GitMinerError> {
        Ok(self.repo.find_commit(self.oid(hash)?)?.tree_id().to_string())
    }

    /// `.c`/`.h` files at `hash` as `(path, content, blob id)`, sorted by path.
    pub fn tree_sources(&self, hash: &str) -> Result<Vec<(String, Vec<u8>, String)>, GitMinerError> {
        let tree = self.repo.find_commit(self.oid(hash)?)?.tree()?;
        let mut blobs = Vec::new();
        tree.walk(TreeWalkMode::PreOrder, |dir, entry| {
            if entry.kind() == Some(ObjectType::Blob) {
                let path = format!("{dir}{}", entry.name().unwrap_or(""));
                if is_c_path(&path) {
                    blobs.push((path, entry.id()));
                }
            }
            TreeWalkResult::Ok
        })?;
        let mut out = Vec::with_capacity(blobs.len());
        for (path, id) in blobs {
            let blob = self.repo.find_blob(id).map_err(|_| GitMinerError::ObjectMissing(id.to_string()))?;
            out.push((path, blob.content().to_vec(), id.to_string()));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }

    /// Writes the `.c`/`.h` files of `hash` below `out_dir`.
    pub fn snapshot(&self, hash: &str, out_dir: &Path) -> Result<Vec<ManifestEntry>, GitMinerError> {
        let mut manifest = Vec::new();
        for (path, content, blob) in self.tree_sources(hash)? {
            let dest = out_dir.join(&path);
            if let Some(parent) = dest.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&dest, content)?;
            manifest.push(ManifestEntry { path, blob });
        }
        Ok(manifest)
    }

    fn blame_opts(&self, newest: Oid) -> BlameOptions {
        let mut opts = BlameOptions::new();
        opts.newest_commit(newest);
        if self.traversal == Traversal::FirstParent {
            opts.first_parent(true);
        }
        opts
    }

    fn author_of(&self, oid: Oid) -> Result<String, GitMinerError> {
        let c = self.repo.find_commit(oid)?;
        let a = c.author();
        Ok(self.authors.resolve(a.name().unwrap_or(""), a.email().unwrap_or(""), a.when().seconds()))
    }

    fn line_count(&self, commit: Oid, path: &str) -> Result<u32, GitMinerError> {
        let tree = self.repo.find_commit(commit)?.tree()?;
        let entry = tree.get_path(Path::new(path)).map_err(|_| GitMinerError::ObjectMissing(format!("{path} at {commit}")))?;
        let blob = self.repo.find_blob(entry.id())?;
        Ok(blob.content().split_inclusive(|b| *b == b'\n').count() as u32)
    }

    /// Author and commit that last touched `line` (1-based) of `path` as of `hash`.
    pub fn blame_line(&self, hash: &str, path: &str, line: u32) -> Result<BlameResult, GitMinerError> {
        let oid = self.oid(hash)?;
        let lines = self.line_count(oid, path)?;
        if line == 0 || line > lines {
            return Err(GitMinerError::BlameRangeError { path: path.to_string(), line, lines });
        }
        let blame = self.repo.blame_file(Path::new(path), Some(&mut self.blame_opts(oid)))?;
        let hunk = blame
            .get_line(line as usize)
            .ok_or_else(|| GitMinerError::BlameRangeError { path: path.to_string(), line, lines })?;
        let origin = hunk.final_commit_id();
        Ok(BlameResult { author_id: self.author_of(origin)?, origin_commit: origin.to_string() })
    }

    /// Share of the final `.c`/`.h` lines at `tip` per student. Template lines
    /// are counted separately and left out of the denominator.
    pub fn loc_share(&self, tip: &str) -> Result<LocShare, GitMinerError> {
        let oid = self.oid(tip)?;
        let mut share = LocShare::default();
        let mut authors: BTreeMap<Oid, String> = BTreeMap::new();
        for (path, _, _) in self.tree_sources(tip)? {
            let blame = self.repo.blame_file(Path::new(&path), Some(&mut self.blame_opts(oid)))?;
            for hunk in blame.iter() {
                let origin = hunk.final_commit_id();
                let author = match authors.get(&origin) {
                    Some(a) => a.clone(),
                    None => {
                        let a = self.author_of(origin)?;
                        authors.insert(origin, a.clone());
                        a
                    }
                };
                let n = hunk.lines_in_hunk() as u64;
                if author == TEMPLATE {
                    share.template_lines += n;
                } else {
                    *share.lines.entry(author).or_default() += n;
                }
            }
        }
        let total: u64 = share.lines.values().sum();
        if total > 0 {
            share.fractions = share.lines.iter().map(|(a, n)| (a.clone(), *n as f64 / total as f64)).collect();
        }
        Ok(share)
    }
}
