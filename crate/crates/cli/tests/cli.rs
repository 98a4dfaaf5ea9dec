use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(format!("{name}.json"))
}

fn cmif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmif")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn limits_at_the_accumulation_point() {
    let o = cmif(&["limits", path(&fixture("bennet")), "--at", "1/1", "--side", "up"]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&o);
    assert_eq!(r["results"]["limit"]["text"], "[0, 1]");
    assert_eq!(r["results"]["named"][0][0], "explicit:zero");
    assert_eq!(r["results"]["named"][0][1], "explicit:one");
}

#[test]
fn pattern_search_reports_the_identity() {
    let o = cmif(&["pattern", path(&fixture("tau_example_f")), path(&fixture("tau_example_g"))]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&o);
    assert_eq!(r["status"], "found");
    assert_eq!(r["results"]["tau"]["identity"], true);

    let o = cmif(&["pattern", path(&fixture("tent")), path(&fixture("tent_flipped"))]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(report(&o)["status"], "none");
}

#[test]
fn pattern_check_with_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let tau = dir.path().join("tau.json");
    std::fs::write(
        &tau,
        r#"{"version": 1, "points": {"explicit:zero": "explicit:zero", "explicit:one": "explicit:one", "family:l[1]": "family:r[1]"},
            "families": {"l": {"target": "l", "shift": -1}, "r": {"target": "r", "shift": 1}}}"#,
    )
    .unwrap();
    let (f, g) = (fixture("tau_example_f"), fixture("tau_example_g"));
    let o = cmif(&["pattern", path(&f), path(&g), "--tau", tau.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&o)["results"]["tau"]["identity"], false);

    std::fs::write(&tau, r#"{"version": 1, "points": {}}"#).unwrap();
    let o = cmif(&["pattern", path(&f), path(&g), "--tau", tau.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_exit_codes() {
    let o = cmif(&["validate", path(&fixture("xxxx"))]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&o);
    assert_eq!(r["results"]["closed_graph"]["x"], "1/2");
    for name in ["bennet", "tent", "zigzag", "xxx"] {
        assert_eq!(cmif(&["validate", path(&fixture(name))]).status.code(), Some(0), "{name}");
    }
    assert_eq!(cmif(&["validate", path(&fixture("cond3_fail"))]).status.code(), Some(1));
    assert_eq!(cmif(&["validate", "/no/such/file.json"]).status.code(), Some(2));
    assert_eq!(cmif(&["limits", path(&fixture("tent")), "--at", "x", "--side", "up"]).status.code(), Some(2));
    assert_eq!(cmif(&["limits", path(&fixture("tent")), "--at", "2", "--side", "up"]).status.code(), Some(2));
    assert_eq!(cmif(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn conjugate_approx_transport_render() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("chain.json");
    let csv = dir.path().join("cloud.csv");
    let svg = dir.path().join("g.svg");
    let (f, g) = (fixture("bennet"), fixture("bennet_scaled"));
    let o = cmif(&["conjugate", path(&f), path(&g), "--depth", "3", "--out", chain.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&o)["results"]["maps"], 4);

    let o = cmif(&["approx", path(&f), "--depth", "3", "--resolution", "1/8", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("x1,x2,x3\n"));

    let o = cmif(&["transport", chain.to_str().unwrap(), csv.to_str().unwrap(), path(&g)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    // against the wrong target family of bonding maps
    let o = cmif(&["transport", chain.to_str().unwrap(), csv.to_str().unwrap(), path(&f)]);
    assert_eq!(o.status.code(), Some(1));

    let o = cmif(&["render", path(&fixture("xxxx")), "--out", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&o);
    assert_eq!((r["results"]["lines"].as_u64(), r["results"]["rects"].as_u64()), (Some(1), Some(1)));

    let o = cmif(&["conjugate", path(&fixture("tent")), path(&fixture("tent_flipped")), "--depth", "2"]);
    assert_eq!(o.status.code(), Some(1));
}
