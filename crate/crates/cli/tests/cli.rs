use std::path::Path;
use std::process::{Command, Output};

use rescal_cli::Summary;

fn rescal(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rescal"));
    cmd.args(args).env_remove("RESCAL_THREADS");
    if let Some(t) = threads {
        cmd.env("RESCAL_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_ITEM2: &str = r#"
experiment = "Item2Inequality"
flows = ["TorusItem4", { ConstantTorus = { velocity = [1.0, 0.5] } }]

[ladders]
t = [1.0, 2.0, 3.0]
epsilon = [0.2, 0.4]
delta = [0.1, 0.2]

[resolution]
atoms = 64
"#;

#[test]
fn list_flows_names_every_builtin() {
    let o = rescal(&["list-flows"], None);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for id in ["ConstantTorus", "TorusItem4", "SphereEno", "SphereEnoUnperturbed", "CatMapSuspension", "LinearTorus"] {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id} missing from\n{text}");
    }
}

#[test]
fn census_matches_known_counts() {
    let o = rescal(&["census", "--t-max", "4"], None);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,fixed_points,least_period_orbits,v");
    assert_eq!(&lines[1..], ["1,1,1,1", "2,5,2,3", "3,16,5,8", "4,45,10,18"]);
}

#[test]
fn census_rejects_elliptic_matrices() {
    let o = rescal(&["census", "--matrix", "0,-1,1,0"], None);
    assert_eq!(code(&o), 2);
}

#[test]
fn invalid_configuration_exits_with_2() {
    assert_eq!(code(&rescal(&["run"], None)), 2);
    assert_eq!(code(&rescal(&["run", "Bogus"], None)), 2);
    assert_eq!(code(&rescal(&["run", "Item2Inequality", "--eps", "0,1"], None)), 2);
    assert_eq!(code(&rescal(&["run", "Item2Inequality", "--eps", "x"], None)), 2);
    assert_eq!(code(&rescal(&["run", "Item2Inequality", "--t-max", "-1"], None)), 2);
    assert_eq!(code(&rescal(&["list-flows"], Some("zero"))), 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"Item2Inequality\"\nunknown_key = 1\n");
    assert_eq!(code(&rescal(&["run", "--config", &cfg], None)), 2);
    let cfg = write_config(dir.path(), "experiment = \"Item6GrowthBound\"\nflows = [\"TorusItem4\"]\n");
    assert_eq!(code(&rescal(&["run", "--config", &cfg], None)), 2);
}

#[test]
fn degenerate_measure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"Item1HalfVariational\"\nflows = [{ ConstantTorus = { velocity = [0.0, 0.0] } }]\n[resolution]\natoms = 16\n",
    );
    let out = dir.path().join("out");
    let o = rescal(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_run_writes_outputs_and_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_ITEM2);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let oa = rescal(&["run", "--config", &cfg, "--out", a.to_str().unwrap(), "--seed", "7"], None);
    let ob = rescal(&["run", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "7"], Some("1"));
    assert_eq!(code(&oa), 0, "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(code(&ob), 0);
    for name in ["results.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let csv = std::fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "experiment,flow,t,epsilon,delta,count,slope,verdict");
    assert!(csv.lines().skip(1).all(|l| l.starts_with("Item2Inequality.")));
    let summary: Summary = serde_json::from_str(&std::fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.seed, 7);
    assert!(summary.all_passed);
    assert_eq!(summary.experiments.len(), 1);
}

#[test]
fn overrides_restrict_the_ladders() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_ITEM2);
    let out = dir.path().join("o");
    let o = rescal(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--t-max", "2.5", "--eps", "0.3"], None);
    // Two t values remain, too few for a slope fit.
    assert_eq!(code(&o), 2);
    let o = rescal(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--eps", "0.3"], None);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(3) == Some("0.3")));
}

#[test]
fn probe_r0_reports_a_positive_radius() {
    let o = rescal(&["probe-r0", "--flow", "SphereEno", "--trials", "50"], None);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    let r0: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!(r0 > 0.0);
    assert_eq!(code(&rescal(&["probe-r0", "--flow", "Nope"], None)), 2);
}

#[test]
fn schema_lists_the_serialized_fields() {
    let schema: serde_json::Value = serde_json::from_str(include_str!("../../../docs/summary.schema.json")).unwrap();
    let mut e = rescal_cli::ExperimentSummary::new("LemmaSuite");
    e.check(rescal_cli::Check::at_most("c", 0.0, 1.0));
    e.estimate("F.x", 1.0);
    let value = serde_json::to_value(Summary::new(1, vec![e])).unwrap();
    let keys = |v: &serde_json::Value| {
        let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    };
    let required = |v: &serde_json::Value| {
        let mut k: Vec<String> = v["required"].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect();
        k.sort();
        k
    };
    assert_eq!(keys(&value), required(&schema));
    assert_eq!(keys(&value["experiments"][0]), required(&schema["$defs"]["experiment"]));
    assert_eq!(keys(&value["experiments"][0]["checks"][0]), required(&schema["$defs"]["check"]));
    let names: Vec<&str> = schema["$defs"]["experiment"]["properties"]["experiment"]["enum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap())
        .collect();
    let ids: Vec<&str> = rescal_cli::Experiment::ALL.iter().map(|e| e.id()).collect();
    assert_eq!(names, ids);
}
