use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name)
}

fn mstc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mstc"))
        .args(args)
        .output()
        .expect("spawn mstc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix(": "))
}

#[test]
fn solve_seven_node() {
    let fig = data("seven-node.mstc");
    let out = mstc(&["solve", "-q", fig.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(field(&text, "status"), Some("Optimal"));
    assert_eq!(field(&text, "cost"), Some("13"));
    assert_eq!(field(&text, "edges"), Some("0 2 3 4 6 9"));
    assert_eq!(field(&text, "time_limit_seconds"), Some("5010"));
}

#[test]
fn solve_json_and_solution_file() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("out.sol");
    let fig = data("seven-node.mstc");
    let out = mstc(&[
        "solve",
        "-q",
        "--json",
        "--solution",
        sol.to_str().unwrap(),
        fig.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "Optimal");
    assert_eq!(v["upper_bound"], 13);
    assert_eq!(v["instance"], "seven-node");
    assert_eq!(
        fs::read_to_string(&sol).unwrap(),
        fs::read_to_string(data("seven-node.sol")).unwrap()
    );

    let check = mstc(&["check", fig.to_str().unwrap(), sol.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0), "{}", stdout(&check));
}

#[test]
fn infeasible_exit_code() {
    let tri = data("triangle-allconf.mstc");
    for cmd in ["solve", "oracle"] {
        let out = mstc(&[cmd, tri.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{cmd}: {}", stdout(&out));
    }
    assert_eq!(
        field(&stdout(&mstc(&["solve", "-q", tri.to_str().unwrap()])), "status"),
        Some("Infeasible")
    );
    // The plain MST relaxation exists; only the greedy finds nothing.
    let b = stdout(&mstc(&["bound", tri.to_str().unwrap()]));
    assert_eq!(field(&b, "lower_bound"), Some("2"));
    assert_eq!(field(&b, "upper_bound"), Some("-"));
}

#[test]
fn time_limit_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("big.mstc");
    let gen = mstc(&[
        "generate",
        "--n",
        "60",
        "--m",
        "700",
        "--p",
        "8000",
        "--seed",
        "3",
        "-o",
        inst.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0), "{}", stderr(&gen));
    let out = mstc(&[
        "solve",
        "-q",
        "--no-warm-start",
        "--time-limit",
        "0.05",
        inst.to_str().unwrap(),
    ]);
    let text = stdout(&out);
    // A lucky instance could close quickly; only a timed-out run must exit 3.
    match field(&text, "status") {
        Some("TimeLimit") => assert_eq!(out.status.code(), Some(3)),
        Some("Optimal") => assert_eq!(out.status.code(), Some(0)),
        Some("Infeasible") => assert_eq!(out.status.code(), Some(2)),
        other => panic!("unexpected status {other:?}"),
    }
}

#[test]
fn check_rejects_bad_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let fig = data("seven-node.mstc");
    let cases = [
        ("wrong-cost", "12\n0\n2\n3\n4\n6\n9\n"),
        ("not-tree", "10\n0\n2\n3\n4\n6\n"),
        // a-c swapped for c-d: still a tree, but c-d conflicts with a-d
        ("conflict", "14\n0\n3\n4\n6\n7\n9\n"),
    ];
    for (name, body) in cases {
        let sol = dir.path().join(name);
        fs::write(&sol, body).unwrap();
        let out = mstc(&["check", fig.to_str().unwrap(), sol.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{name}: {}", stdout(&out));
    }
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mstc");
    fs::write(&bad, "3 2 0\n0 1 4\n1 9 2\n").unwrap();
    let out = mstc(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("bad.mstc:3:"), "{err}");
    assert!(!err.contains("panicked"), "{err}");

    let missing = mstc(&["solve", "/definitely/not/here.mstc"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).starts_with("error: /definitely/not/here.mstc"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(mstc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mstc(&["solve"]).status.code(), Some(1));
    assert_eq!(mstc(&["generate", "--n", "5", "--m", "4"]).status.code(), Some(1));
    assert_eq!(
        mstc(&["generate", "--n", "5", "--m", "2", "--p", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(mstc(&["--help"]).status.code(), Some(0));
}

#[test]
fn generate_is_deterministic() {
    let args = [
        "generate",
        "--n",
        "25",
        "--edge-density",
        "0.2",
        "--conflict-density",
        "0.01",
        "--seed",
        "1",
    ];
    let a = mstc(&args);
    let b = mstc(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("25 60 18\n"));

    let dir = tempfile::tempdir().unwrap();
    let mut with_dir = args.to_vec();
    with_dir.extend(["--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(mstc(&with_dir).status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("25-60-18-1.mstc")).unwrap(), a.stdout);
}

#[test]
fn endpoint_conflicts() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("seven-node-e.mstc");
    let text = fs::read_to_string(data("seven-node.mstc")).unwrap();
    let body: Vec<&str> = text.lines().take(13).collect();
    fs::write(&inst, format!("{}\n1 5 4 6\n0 3 2 3\n1 2 1 4\n", body.join("\n"))).unwrap();
    let out = mstc(&["solve", "-q", "--conflict-format", "endpoints", inst.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(field(&stdout(&out), "cost"), Some("13"));
}

#[test]
fn export_lp_matches_golden() {
    let out = mstc(&["export-lp", data("seven-node.mstc").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), fs::read_to_string(data("seven-node.lp")).unwrap());
    let bad_root = mstc(&["export-lp", "--root", "7", data("seven-node.mstc").to_str().unwrap()]);
    assert_eq!(bad_root.status.code(), Some(1));
}

#[test]
fn oracle_and_bound() {
    let fig = data("seven-node.mstc");
    let o = stdout(&mstc(&["oracle", fig.to_str().unwrap()]));
    assert_eq!(field(&o, "cost"), Some("13"));
    let b = stdout(&mstc(&["bound", fig.to_str().unwrap()]));
    assert_eq!(field(&b, "lower_bound"), Some("13"));
    assert_eq!(field(&b, "upper_bound"), Some("13"));
}

#[test]
fn bench_suite_outputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(data("seven-node.mstc"), dir.path().join("seven-node.mstc")).unwrap();
    fs::copy(data("triangle-allconf.mstc"), dir.path().join("tri.mstc")).unwrap();
    fs::write(dir.path().join("broken.mstc"), "2 1\n").unwrap();
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let reference = dir.path().join("ref.csv");
    fs::write(&reference, "name,bk_lb,bk_ub\nseven-node,12,14\n").unwrap();
    let d = dir.path().to_str().unwrap();

    let out = mstc(&["bench", d, "--reference", reference.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = stdout(&out);
    assert!(
        csv.starts_with("name,n,m,p,status,lb,ub,seconds,dev_lb,dev_ub\n"),
        "{csv}"
    );
    assert_eq!(csv.lines().filter(|l| l.starts_with("seven-node,")).count(), 1);
    assert!(csv.lines().any(|l| l.starts_with("tri,") && l.contains("Infeas")));
    assert!(csv.lines().any(|l| l.starts_with("broken,") && l.contains("Error")));
    assert!(csv.contains("Averages"));
    assert!(stderr(&out).contains("broken"));

    let md = stdout(&mstc(&["bench", d, "--format", "md"]));
    assert!(md.starts_with("| Instance |"), "{md}");
    let json: serde_json::Value = serde_json::from_slice(&mstc(&["bench", d, "--json"]).stdout).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);

    let lp_dir = tempfile::tempdir().unwrap();
    let ex = mstc(&[
        "bench",
        d,
        "--mode",
        "export-lp",
        "--lp-dir",
        lp_dir.path().to_str().unwrap(),
    ]);
    assert_eq!(ex.status.code(), Some(0));
    assert!(lp_dir.path().join("seven-node.lp").exists());

    let heur = stdout(&mstc(&["bench", d, "--mode", "heuristic"]));
    assert!(
        heur.lines()
            .any(|l| l.starts_with("seven-node,") && l.contains("Optimal")),
        "{heur}"
    );
}
