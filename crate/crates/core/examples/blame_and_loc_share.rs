//! Blame attribution and authorship shares on a two-student repository.

use embermine::gitminer::{AuthorMap, GitRepo};
use embermine::scripted::{build_repo, ScriptAuthor, ScriptCommit};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let (prof, ana, ben) = (
        ScriptAuthor::new("Prof", "prof@staff.uni.edu"),
        ScriptAuthor::new("Ana", "ana@uni.edu"),
        ScriptAuthor::new("Ben", "ben@uni.edu"),
    );
    let t = 1_700_000_000;
    build_repo(
        dir.path(),
        &[
            ScriptCommit::new(&prof, t, "template").write("board.h", "#ifndef BOARD_H\n#define BOARD_H\n#define LED 25\n#endif\n"),
            ScriptCommit::new(&ana, t + 3600, "main").write("main.c", "#include \"board.h\"\nint main(void) {\n  return 0;\n}\n"),
            ScriptCommit::new(&ben, t + 7200, "uart").write("uart.c", "void uart_init(void) {\n}\n"),
        ],
    )?;

    // Ana also commits from a second address.
    let authors = AuthorMap::parse("ana Ana <ana@uni.edu>\nana Ana <ana.personal@mail.com>\nben Ben <ben@uni.edu>\n")?
        .with_template_authors(&["*@staff.uni.edu".into()])?;
    let repo = GitRepo::open(dir.path(), authors)?;
    let commits = repo.enumerate_commits(None)?;
    let tip = &commits.last().expect("three commits").hash;
    for c in &commits {
        println!("{} {} {}", c.index, &c.hash[..8], c.author_id);
    }
    println!("main.c:3 blamed on {}", repo.blame_line(tip, "main.c", 3)?.author_id);
    println!("board.h:3 blamed on {}", repo.blame_line(tip, "board.h", 3)?.author_id);
    let share = repo.loc_share(tip)?;
    println!("template lines {}", share.template_lines);
    for (a, f) in &share.fractions {
        println!("{a}: {:.3} ({} lines)", f, share.lines[a]);
    }
    Ok(())
}
