use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lozenge-cooling"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn error_free_start_takes_no_steps() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &["run", "--side", "4", "--init", "errorfree", "--seed", "1"],
        dir.path(),
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains(" T=0 "), "{}", stdout(&o));
}

#[test]
fn run_from_the_top_freezes() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "run",
            "--side",
            "5",
            "--seed",
            "7",
            "--check",
            "--trajectory",
            "t.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(
        out.contains("stop=Frozen") && out.contains("final_energy=0"),
        "{out}"
    );
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(csv.lines().count() > 2);
    assert!(dir.path().join("t.csv.config.json").exists());
}

#[test]
fn missing_seed_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["run", "--side", "4"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = cli(
        &[
            "verify",
            "--suite",
            "lemmas",
            "--side",
            "6",
            "--instances",
            "10",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
}

#[test]
fn exact_counts_the_small_rhombus() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "exact", "--side", "2", "--shape", "rhombus", "--out", "e.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("states=20"), "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("e.csv")).unwrap();
    // per-state rows, then a summary block
    let rows = csv
        .lines()
        .skip(1)
        .take_while(|l| !l.starts_with("n,"))
        .count();
    assert_eq!(rows, 20);
    assert!(csv.contains("\n12,20,3/1,2/1\n"), "{csv}");
    let config: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("e.csv.config.json")).unwrap())
            .unwrap();
    assert_eq!(config["command"]["exact"]["side"], 2);
}

#[test]
fn outputs_are_not_overwritten_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["exact", "--side", "2", "--out", "e.csv"];
    assert!(cli(&args, dir.path()).status.success());
    let o = cli(&args, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(cli(&forced, dir.path()).status.success());
}

#[test]
fn scale_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str| {
        let o = cli(
            &[
                "scale", "--mode", "average", "--sides", "3,4,5", "--trials", "3", "--seed", "11",
                "--out", out,
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("fit:"));
    };
    run("a.csv");
    run("b.csv");
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.summary.csv"), read("b.summary.csv"));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "verify", "--suite", "lattice", "--side", "2", "--shape", "rhombus",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));

    // the unit island already breaks the island drift bound
    let o = cli(&["verify", "--suite", "lemmas", "--side", "2"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let failures: Vec<_> = fs::read_dir(dir.path().join("verify-failures"))
        .unwrap()
        .collect();
    assert!(!failures.is_empty());
    let first = failures[0].as_ref().unwrap().path();
    let text = fs::read_to_string(&first).unwrap();
    assert!(text.starts_with("# check: "));
}

#[test]
fn snapshots_and_failing_instances_render() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &[
            "run",
            "--side",
            "3",
            "--seed",
            "2",
            "--snapshot-every",
            "5",
            "--svg-dir",
            "svg",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("svg/strip.svg").exists());
    assert!(dir.path().join("svg/step_000000000.svg").exists());
    assert!(dir.path().join("svg/config.json").exists());

    // failing instances are single islands, so they have a hull
    let o = cli(
        &[
            "verify",
            "--suite",
            "lemmas",
            "--side",
            "2",
            "--failures-dir",
            "f",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let island = fs::read_dir(dir.path().join("f"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| {
            fs::read_to_string(p)
                .unwrap()
                .starts_with("# check: island drift:")
        })
        .expect("an island-drift counterexample");
    let island = island.to_str().unwrap();
    let o = cli(&["hull", "--in", island, "--out", "h.tiling"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("phi_bar="));
    let o = cli(
        &["render", "--in", "h.tiling", "--out", "h.svg", "--errors"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(dir.path().join("h.svg"))
        .unwrap()
        .contains("<svg"));
}
