use std::path::Path;
use std::process::{Command, Output};

const GOLDEN: &str = include_str!("../fixtures/n28d13.txt");

fn sortnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sortnet")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sorter = write(dir.path(), "s4.txt", "n=4\n[(0,1),(2,3)]\n[(0,2),(1,3)]\n[(1,2)]\n");
    let out = sortnet(&["verify", &sorter]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("SORTS n=4 depth=3 size=5"));

    let broken = write(dir.path(), "b4.txt", "n=4\n[(0,1),(2,3)]\n[(0,2),(1,3)]\n");
    assert_eq!(sortnet(&["verify", &broken]).status.code(), Some(1));

    let garbage = write(dir.path(), "g.txt", "n=4\n[(0,9)]\n");
    assert_eq!(sortnet(&["verify", &garbage]).status.code(), Some(2));
    assert_eq!(sortnet(&["verify", "/nonexistent/net.txt"]).status.code(), Some(2));
    assert_eq!(sortnet(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(sortnet(&["--help"]).status.code(), Some(0));
}

#[test]
fn project_refuses_non_sorters() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write(dir.path(), "b4.txt", "n=4\n[(0,1),(2,3)]\n");
    assert_eq!(sortnet(&["project", &broken]).status.code(), Some(1));
    let sorter = write(dir.path(), "s4.txt", "n=4\n[(0,1),(2,3)]\n[(0,2),(1,3)]\n[(1,2)]\n");
    let out = sortnet(&["project", &sorter]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("SORTS n=3"));
}

#[test]
fn render_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("# region prefix 1-5\n{GOLDEN}");
    let f = write(dir.path(), "g.txt", &text);
    let a = sortnet(&["render", &f]);
    let b = sortnet(&["render", &f]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let ascii = String::from_utf8(a.stdout).unwrap();
    assert_eq!(ascii.lines().filter(|l| l.contains(" -")).count(), 28);
    assert!(ascii.lines().any(|l| l.trim_start().starts_with('^') && l.ends_with("prefix")));

    let svg1 = dir.path().join("a.svg");
    let svg2 = dir.path().join("b.svg");
    for p in [&svg1, &svg2] {
        let out = sortnet(&["render", &f, "--format", "svg", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let svg = std::fs::read_to_string(&svg1).unwrap();
    assert_eq!(svg, std::fs::read_to_string(&svg2).unwrap());
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn enumerate_and_extend_small() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("p8.txt");
    let out = sortnet(&["enumerate", "--n", "8", "--depth", "2", "--out", pool.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&pool).unwrap();
    assert!(text.starts_with("# pool n=8 depth=2 mode=symmetric"));

    // a tampered record is a format error
    let bad = text.replacen("out_size=", "out_size=1", 1);
    let badp = write(dir.path(), "bad.txt", &bad);
    let out = sortnet(&["complete", "--pool", &badp, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn encode_then_solve_round_trip() {
    if sortnet::satcomp::SolverCommand::detect().is_err() {
        eprintln!("no SAT solver; skipped");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "e6.txt", "n=6\n");
    let cnf = dir.path().join("e6.cnf");
    let out = sortnet(&["encode", "--prefix", &empty, "--total-depth", "5", "--out", cnf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let net = dir.path().join("n6.txt");
    let out = sortnet(&["solve", cnf.to_str().unwrap(), "--out", net.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(sortnet(&["verify", net.to_str().unwrap()]).status.code(), Some(0));

    let out = sortnet(&["encode", "--prefix", &empty, "--total-depth", "4", "--out", cnf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(sortnet(&["solve", cnf.to_str().unwrap()]).status.code(), Some(1));
}
