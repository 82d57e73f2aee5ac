use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_evcharge"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

#[test]
fn validate_config_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_in(dir.path(), &["validate-config", scenario("city_all_price").to_str().unwrap()]);
    assert!(first.status.success());
    let echoed = dir.path().join("echo.toml");
    std::fs::write(&echoed, &first.stdout).unwrap();
    // the echo names the graph relative to the original file
    let second = run_in(
        dir.path(),
        &["validate-config", echoed.to_str().unwrap(), "--set", &format!("arena.graph_file=\"{}\"", graph_path())],
    );
    assert!(second.status.success(), "{}", String::from_utf8_lossy(&second.stderr));
    let strip = |out: &[u8]| String::from_utf8_lossy(out).lines().filter(|l| !l.starts_with("graph_file")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&first.stdout), strip(&second.stdout));
}

fn graph_path() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_city.graph").display().to_string()
}

#[test]
fn invalid_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[stations]\ncount = 2\npositions = [[0.5, 0.5], [1.5, 0.2]]\n[sim]\nhorizon = 10\n").unwrap();
    let out = run_in(dir.path(), &["validate-config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sim.horizon") || err.contains("stations.positions[1]"), "{err}");

    let out = run_in(dir.path(), &["run", scenario("baseline").to_str().unwrap(), "--set", "weights.alpha=[0.5, 0.6, 0.0]"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_requested_reports_and_ledger_replays() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["run", scenario("closed_loop").to_str().unwrap(), "--runs", "1", "--out", "out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().join("out");
    for f in ["summary.csv", "vehicles.csv", "stations.csv", "participation.csv", "controller.csv"] {
        let text = std::fs::read_to_string(root.join(f)).unwrap();
        assert!(text.starts_with("# evcharge "), "{f} lacks the version header");
        assert!(text.lines().any(|l| !l.starts_with('#')), "{f} has no data");
    }
    let dump = root.join("ledger/run-000.jsonl");
    let replay = run_in(dir.path(), &["replay-ledger", dump.to_str().unwrap()]);
    assert!(replay.status.success());
    assert!(String::from_utf8_lossy(&replay.stdout).contains("ledger OK"));

    // shift one bond return to a different recipient
    let text = std::fs::read_to_string(&dump).unwrap();
    let line = text.lines().position(|l| l.contains("\"return_bond\"")).expect("no bond was returned");
    let tampered: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| if i == line { l.replacen("\"to\":\"v", "\"to\":\"s", 1) } else { l.to_string() })
        .collect();
    let bad = dir.path().join("tampered.jsonl");
    std::fs::write(&bad, tampered.join("\n") + "\n").unwrap();
    let replay = run_in(dir.path(), &["replay-ledger", bad.to_str().unwrap()]);
    assert_eq!(replay.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&replay.stdout).contains("violation"));
}

#[test]
fn report_selection_limits_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["run", scenario("baseline").to_str().unwrap(), "--runs", "1", "--out", "out", "--set", "output.reports=[\"summary\"]"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> =
        std::fs::read_dir(dir.path().join("out")).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert_eq!(names, vec!["summary.csv".to_string()]);
}

#[test]
fn missing_inputs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["replay-ledger", "nope.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run_in(dir.path(), &["validate-config", "nope.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_outputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let file = scenario("baseline");
    let args = ["compare", file.to_str().unwrap(), "--runs", "2", "--seed", "9", "--out", "out"];
    let (oa, ob) = (run_in(a.path(), &args), run_in(b.path(), &args));
    assert!(oa.status.success());
    assert_eq!(oa.stdout, ob.stdout);
    for f in ["compare.csv", "compare_series.csv"] {
        assert_eq!(std::fs::read(a.path().join("out").join(f)).unwrap(), std::fs::read(b.path().join("out").join(f)).unwrap());
    }
    let other = run_in(a.path(), &["compare", file.to_str().unwrap(), "--runs", "2", "--seed", "10"]);
    assert_ne!(oa.stdout, other.stdout);
}
