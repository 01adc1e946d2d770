//! CLI contract: exit codes, config-file merging with provenance, output
//! files, and the per-command wire formats.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_neurips-lab"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("neurips-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn bounds_dispatch_and_exit_codes() {
    // Well-formed request: exit 0 and a JSON report with the constants.
    let out = bin()
        .args(["bounds", "--n", "1", "--d", "2", "--cw", "1", "--cb", "1", "--s", "0.5", "--u", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["report"]["neurips_sample_bound"].as_f64().unwrap() > 0.0);
    assert!(v["report"]["neurips_confidence"]["vacuous"].as_bool().unwrap());

    // Malformed flag: exit 2, no output file.
    let dir = tmp_dir("badflag");
    let target = dir.join("never");
    let out = bin()
        .args(["bounds", "--nonsense", "1"])
        .arg("--out")
        .arg(&target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!target.with_extension("json").exists());

    // Domain violation: exit 2.
    let out = bin()
        .args(["bounds", "--n", "1", "--d", "2", "--cw", "1", "--cb", "1", "--s", "1.5", "--u", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_file_merge_and_provenance() {
    let dir = tmp_dir("config");
    let cfg = dir.join("run.json");

    // Empty file: flags win.
    std::fs::write(&cfg, "").unwrap();
    let out = bin()
        .args(["bounds", "--n", "1", "--d", "2", "--cw", "1", "--cb", "1", "--s", "0.5", "--u", "4"])
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    // File values used where no flag is given; flags override and the echo
    // records both provenance tags.
    std::fs::write(&cfg, r#"{"n": 1, "d": 2, "cw": 1.0, "cb": 1.0, "s": 0.25, "u": 4.0}"#).unwrap();
    let out = bin()
        .args(["bounds", "--s", "0.5"])
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["resolved_config"]["u"]["source"], "config");
    assert_eq!(v["resolved_config"]["s"]["value"], 0.5);
    assert_eq!(
        v["resolved_config"]["s"]["source"]["flag-overriding-config"]["config_value"],
        0.25
    );

    // Unknown field: rejected with exit 2.
    std::fs::write(
        &cfg,
        r#"{"n": 1, "d": 2, "cw": 1.0, "cb": 1.0, "s": 0.25, "u": 4.0, "mystery": 1}"#,
    )
    .unwrap();
    let out = bin().arg("bounds").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mystery"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn outputs_embed_config_seed_and_version() {
    let dir = tmp_dir("embed");
    let out_base = dir.join("radius");
    let out = bin()
        .args(["verify-radius", "--n", "1", "--d", "2", "--cw", "1", "--cb", "1", "--count", "20", "--seed", "9"])
        .arg("--out")
        .arg(&out_base)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_base.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(report["seed"], 9);
    assert_eq!(report["command"], "verify-radius");
    assert!(report["library_version"].as_str().unwrap().contains('.'));
    assert_eq!(report["resolved_config"]["count"]["value"], 20);
    assert_eq!(report["report"]["bound"], 2.0);
    // Wall-clock lives only in the sidecar.
    assert!(!report.to_string().contains("wall_time"));
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_base.with_extension("meta.json")).unwrap(),
    )
    .unwrap();
    assert!(meta["wall_time_ms"].is_u64());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn cover_exports_members_and_metadata() {
    let dir = tmp_dir("cover");
    let out_base = dir.join("net");
    let out = bin()
        .args(["cover", "--n", "1", "--d", "2", "--cw", "1", "--cb", "1", "--epsilon", "1.5"])
        .arg("--out")
        .arg(&out_base)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_base.with_extension("json")).unwrap())
            .unwrap();
    let cardinality = meta["report"]["cardinality"].as_f64().unwrap();
    assert!(cardinality > 1.0);
    assert!(meta["report"]["cardinality_bound"].as_f64().unwrap() >= cardinality);
    let members = std::fs::read_to_string(out_base.with_extension("members.jsonl")).unwrap();
    assert_eq!(members.lines().count() as f64, cardinality);
    for line in members.lines().take(5) {
        let _: neurips_lab::model::NetworkParams = serde_json::from_str(line).unwrap();
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn psi2_command_modes() {
    // Constant: |a| / sqrt(ln 2).
    let out = bin()
        .args(["psi2", "--constant", "1.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let value = v["report"]["value"].as_f64().unwrap();
    assert!((value - 1.0 / (2.0f64.ln()).sqrt()).abs() < 1e-5);

    // Distance between a network file and a scaled copy.
    let dir = tmp_dir("psi2");
    let net = serde_json::json!({"neurons": [{"w": [1.0, 0.0], "b": 0.0, "kappa": 1}]});
    let half = serde_json::json!({"neurons": [{"w": [0.5, 0.0], "b": 0.0, "kappa": 1}]});
    let a_path = dir.join("a.json");
    let b_path = dir.join("b.json");
    std::fs::write(&a_path, net.to_string()).unwrap();
    std::fs::write(&b_path, half.to_string()).unwrap();
    let out = bin()
        .arg("psi2")
        .arg("--network")
        .arg(&a_path)
        .arg("--minus")
        .arg(&b_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let d = v["report"]["value"].as_f64().unwrap();
    // Shared hyperplane: distance is half the unit neuron's psi2 norm.
    let out = bin().arg("psi2").arg("--network").arg(&a_path).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let unit = v["report"]["value"].as_f64().unwrap();
    assert!((d - 0.5 * unit).abs() < 1e-4, "{d} vs half of {unit}");

    // Ambiguous input: exit 2.
    let out = bin()
        .args(["psi2", "--constant", "1.0", "--linear-norm", "2.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn csv_stdout_format() {
    let out = bin()
        .args([
            "verify-net", "--n", "1", "--d", "2", "--cw", "1", "--cb", "1", "--epsilon", "1.8",
            "--probes", "5", "--seed", "2", "--format", "csv",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("probe_id,distance\n"));
    assert_eq!(text.lines().count(), 6);
}
