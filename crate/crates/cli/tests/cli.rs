use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn psynet(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_psynet"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

/// Relative path to contents of every file below `dir`.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, acc: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, acc);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                acc.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(dir, dir, &mut acc);
    acc
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn gvar5_args(command: &str, out: &Path) -> Vec<String> {
    vec![
        command.into(),
        "--input".into(),
        fixture("gvar5.csv").display().to_string(),
        "--items".into(),
        "x1,x2,x3".into(),
        "-o".into(),
        out.display().to_string(),
    ]
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for command in ["gvar", "mlvar", "gimme", "rqa", "rn", "ggm", "simulate", "idio"] {
        let out = dir.path().join(command);
        let args = gvar5_args(command, &out);
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(&psynet(&args, &[]));
        let first = snapshot(&out);
        assert!(first.contains_key("manifest.json"), "{command}");
        std::fs::remove_dir_all(&out).unwrap();
        // a single worker thread must give the same bytes as the default pool
        ok(&psynet(&args, &[("RAYON_NUM_THREADS", "1")]));
        assert_eq!(first, snapshot(&out), "{command} differs between runs");
    }
}

#[test]
fn manifest_records_input_checksum_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let args = gvar5_args("gvar", &out);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(&psynet(&args, &[]));
    let manifest = json(&out.join("manifest.json"));
    let input = std::fs::read(fixture("gvar5.csv")).unwrap();
    assert_eq!(manifest["input"]["sha256"], hex::encode(Sha256::digest(&input)));
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["command"], "gvar");
    assert_eq!(manifest["config"]["input"]["items"], serde_json::json!(["x1", "x2", "x3"]));
    let outputs = manifest["outputs"].as_object().unwrap();
    assert!(!outputs.is_empty());
    for (name, digest) in outputs {
        let bytes = std::fs::read(out.join(name)).unwrap();
        assert_eq!(digest.as_str().unwrap(), hex::encode(Sha256::digest(&bytes)), "{name}");
    }
}

#[test]
fn unknown_config_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[rqa]\nl_minimum = 3\n").unwrap();
    let out = psynet(&["rqa", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "validation");
    assert!(err["error"]["message"].as_str().unwrap().contains("l_minimum"));
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();

    let missing = psynet(&["rqa", "--input", "/nonexistent/data.csv", "--items", "a", "-o", o], &[]);
    assert_eq!(missing.status.code(), Some(1));

    let bad_column =
        psynet(&["gvar", "--input", fixture("gvar5.csv").to_str().unwrap(), "--items", "x9", "-o", o], &[]);
    assert_eq!(bad_column.status.code(), Some(2));

    let constant = dir.path().join("constant.csv");
    std::fs::write(&constant, "id,day,beep,a\nq,1,1,2\nq,1,2,2\nq,1,3,2\n").unwrap();
    let numeric = psynet(&["rqa", "--input", constant.to_str().unwrap(), "--items", "a", "-o", o], &[]);
    assert_eq!(numeric.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&numeric.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "numeric");
}

#[test]
fn rqa_on_sine_fixture_is_deterministic_dynamics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    ok(&psynet(&["rqa", "--config", fixture("sine.toml").to_str().unwrap(), "-o", out.to_str().unwrap()], &[]));
    let summary = json(&out.join("summary.json"));
    let det = summary[0]["rqa"]["det"].as_f64().unwrap();
    assert!(det > 0.9, "DET {det}");
    let rr = summary[0]["rqa"]["rr"].as_f64().unwrap();
    assert!((rr - 0.1).abs() < 0.02, "RR {rr}");
    let dir0 = summary[0]["dir"].as_str().unwrap();
    let pbm = std::fs::read_to_string(out.join(dir0).join("recurrence.pbm")).unwrap();
    let bits = psynet::export::parse_pbm(&pbm).unwrap();
    let csv = std::fs::read_to_string(out.join(dir0).join("recurrence.csv")).unwrap();
    let from_csv: Vec<Vec<bool>> = csv.lines().map(|l| l.split(',').map(|c| c == "1").collect()).collect();
    assert_eq!(bits, from_csv);
}

#[test]
fn mlvar_on_fixture_emits_three_networks_and_density() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let args = gvar5_args("mlvar", &out);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(&psynet(&args, &[]));
    let density = json(&out.join("density.json"));
    assert_eq!(density.as_array().unwrap().len(), 1);
    assert_eq!(density[0]["n_persons"], 5);
    let group = out.join(density[0]["dir"].as_str().unwrap());
    for name in ["temporal", "contemporaneous", "between"] {
        assert!(group.join(format!("{name}.csv")).is_file(), "{name}");
        assert!(group.join(format!("{name}.graphml")).is_file(), "{name}");
    }
    // the fixture's generating temporal matrix has autoregressive effects of
    // 0.3; the fixed-effect estimate should be near them
    let d = density[0]["temporal"]["diagonal"].as_f64().unwrap();
    assert!((d - 0.3).abs() < 0.1, "{d}");
}

#[test]
fn mlvar_with_group_labels_emits_networks_per_group() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ok(&psynet(
        &["simulate", "--config", &write_cfg(dir.path(), "[simulate]\npersons = 10\n"), "-o", sim.to_str().unwrap()],
        &[],
    ));
    let text = std::fs::read_to_string(sim.join("data.csv")).unwrap();
    let mut lines = text.lines();
    let mut grouped = format!("{},grp\n", lines.next().unwrap());
    for line in lines {
        let id: usize = line.split(',').next().unwrap()[1..].parse().unwrap();
        grouped.push_str(&format!("{line},{}\n", if id.is_multiple_of(2) { "even" } else { "odd" }));
    }
    std::fs::write(dir.path().join("grouped.csv"), grouped).unwrap();
    let cfg =
        write_cfg(dir.path(), "[input]\npath = \"grouped.csv\"\nitems = [\"x1\", \"x2\", \"x3\"]\ngroup = \"grp\"\n");
    let out = dir.path().join("o");
    ok(&psynet(&["mlvar", "--config", &cfg, "-o", out.to_str().unwrap()], &[]));
    let density = json(&out.join("density.json"));
    let groups: Vec<&str> = density.as_array().unwrap().iter().map(|g| g["group"].as_str().unwrap()).collect();
    assert_eq!(groups, ["odd", "even"]);
    let files = snapshot(&out);
    assert_eq!(files.keys().filter(|k| k.ends_with(".graphml")).count(), 6);
}

/// Writes `cfg.toml` into `dir` and returns its path.
fn write_cfg(dir: &Path, text: &str) -> String {
    let path = dir.join("cfg.toml");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn ggm_one_factor_is_saturated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[ggm]\nsource = \"one-factor\"\n").unwrap();
    let out = dir.path().join("o");
    ok(&psynet(&["ggm", "--config", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()], &[]));
    let s = json(&out.join("summary.json"));
    assert_eq!(s["saturation"]["saturated"], true);
    assert!(s["round_trip_error"].as_f64().unwrap() < 1e-10);
    assert!(s["n_obs"].is_null());
}

#[test]
fn ising_and_idio_agree_with_exact_distributions() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.json");
    std::fs::write(
        &params,
        r#"{"mu": [0.2, -0.1, 0.0], "sigma": [[0, 0.5, -0.3], [0.5, 0, 0.4], [-0.3, 0.4, 0]], "coding": "plus-minus"}"#,
    )
    .unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[ising]\nparams = \"params.json\"\ngibbs_samples = 2000\n\n[idio]\np = 3\ntheta = 0.5\nmu = [0.3, 0.0, -0.2]\ndraws = 2000\n").unwrap();
    let out = dir.path().join("ising");
    ok(&psynet(&["ising", "--config", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()], &[]));
    let s = json(&out.join("summary.json"));
    assert!(s["tv_mirt"].as_f64().unwrap() < 1e-6);
    assert!(s["tv_gibbs"].as_f64().unwrap() < 0.1);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["input"]["sha256"], hex::encode(Sha256::digest(std::fs::read(&params).unwrap())));

    let out = dir.path().join("idio");
    ok(&psynet(&["idio", "--config", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()], &[]));
    let s = json(&out.join("summary.json"));
    assert!(s["tv_exact_ising"].as_f64().unwrap() < 1e-10);
    assert!(s["tv_monte_carlo_ising"].as_f64().unwrap() < 0.1);
}

#[test]
fn gimme_and_simulate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "seed = 11\n[simulate]\nmodel = \"usem\"\npersons = 8\nt = 300\ntemporal = [[0.4, 0, 0], [0.4, 0.3, 0], [0, 0, 0.3]]\ncontemporaneous = [[0, 0, 0], [0, 0, 0], [0.5, 0, 0]]\n",
    )
    .unwrap();
    let sim = dir.path().join("sim");
    ok(&psynet(&["simulate", "--config", cfg.to_str().unwrap(), "-o", sim.to_str().unwrap()], &[]));
    let truth = json(&sim.join("truth.json"));
    assert_eq!(truth["persons"].as_array().unwrap().len(), 8);

    let out = dir.path().join("gimme");
    let input = sim.join("data.csv");
    ok(&psynet(
        &["gimme", "--input", input.to_str().unwrap(), "--items", "x1,x2,x3", "-o", out.to_str().unwrap()],
        &[],
    ));
    let result = json(&out.join("result.json"));
    let group: Vec<(String, u64, u64)> = result["group_paths"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p["kind"].as_str().unwrap().to_string(), p["from"].as_u64().unwrap(), p["to"].as_u64().unwrap()))
        .collect();
    assert!(group.contains(&("lagged".into(), 0, 1)), "{group:?}");
    // a single contemporaneous path is fit-equivalent in either direction
    assert!(
        group.contains(&("contemporaneous".into(), 0, 2)) || group.contains(&("contemporaneous".into(), 2, 0)),
        "{group:?}"
    );
    assert!(out.join("group/lagged_structure.csv").is_file());
    assert_eq!(snapshot(&out).keys().filter(|k| k.ends_with("paths.graphml")).count(), 8);
}

#[test]
fn config_subcommand_prints_defaults() {
    let out = psynet(&["config"], &[]);
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 1"));
    assert!(text.contains("[rqa]"));
}
