use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CONFIG: &str = r#"{
  "data": {"source": {"kind": "synthetic_linear", "n": 300, "coefficients": [0.1, 0.3, 0.6], "noise_std": 0.05}},
  "train": {"epochs": 100, "learning_rate": 0.01},
  "rashomon": {"n_retrains": 15}
}"#;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("config.json"), CONFIG).unwrap();
        Workspace { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn out(&self) -> PathBuf {
        self.path("out")
    }

    fn run(&self, args: &[&str]) -> Output {
        self.run_env(args, &[])
    }

    fn run_env(&self, args: &[&str], env: &[(&str, &str)]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_vtf"));
        cmd.arg("--config").arg(self.path("config.json")).arg("--out-dir").arg(self.out()).args(args);
        cmd.env_remove("VTF_SEED");
        for (k, v) in env {
            cmd.env(k, v);
        }
        cmd.output().unwrap()
    }

    fn ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert_eq!(out.status.code(), Some(0), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
        out
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.out().join(name)).unwrap()
    }

    fn explored() -> Self {
        let ws = Workspace::new();
        ws.ok(&["train-base"]);
        ws.ok(&["explore"]);
        ws
    }
}

fn code(out: &Output) -> Option<i32> {
    out.status.code()
}

#[test]
fn train_base_is_byte_reproducible() {
    let a = Workspace::new();
    let b = Workspace::new();
    a.ok(&["train-base"]);
    b.ok(&["train-base"]);
    assert_eq!(a.read("base_model.json"), b.read("base_model.json"));
    assert_eq!(a.read("history.csv"), b.read("history.csv"));
}

#[test]
fn seed_flag_overrides_environment() {
    let flag = Workspace::new();
    let env = Workspace::new();
    let both = Workspace::new();
    flag.ok(&["train-base", "--seed", "5"]);
    assert_eq!(code(&env.run_env(&["train-base"], &[("VTF_SEED", "5")])), Some(0));
    assert_eq!(code(&both.run_env(&["train-base", "--seed", "5"], &[("VTF_SEED", "9")])), Some(0));
    assert_eq!(flag.read("base_model.json"), env.read("base_model.json"));
    assert_eq!(flag.read("base_model.json"), both.read("base_model.json"));
    let default = Workspace::new();
    default.ok(&["train-base"]);
    assert_ne!(flag.read("base_model.json"), default.read("base_model.json"));
}

#[test]
fn explore_reports_every_retrain_and_keeps_base_frozen() {
    let ws = Workspace::new();
    ws.ok(&["train-base"]);
    let before = ws.read("base_model.json");
    let out = ws.ok(&["explore", "--jobs", "2"]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().filter(|l| l.starts_with("retrain ")).count(), 15);
    assert_eq!(ws.read("base_model.json"), before);
    let weights = ws.read("weights.json");
    assert!(weights.contains("\"provenance\""));
    assert!(ws.read("stability.csv").starts_with("# tool_version="));
}

#[test]
fn explore_output_does_not_depend_on_thread_count() {
    let a = Workspace::new();
    let b = Workspace::new();
    for (ws, jobs) in [(&a, "1"), (&b, "3")] {
        ws.ok(&["train-base"]);
        ws.ok(&["explore", "--jobs", jobs]);
    }
    assert_eq!(a.read("weights.json"), b.read("weights.json"));
}

#[test]
fn explain_writes_profile_with_one_bar_per_feature() {
    let ws = Workspace::explored();
    ws.ok(&["explain", "--method", "vtf"]);
    let svg = ws.read("profile_vtf.svg");
    assert!(svg.starts_with("<!-- tool_version="));
    assert_eq!(svg.matches(r#"class="bar""#).count(), 3);
    let csv = ws.read("profile_vtf.csv");
    assert_eq!(csv.lines().nth(1), Some("name,score,rank"));
    assert_eq!(csv.lines().count(), 5);
    let json: serde_json::Value = serde_json::from_str(&ws.read("profile_vtf.json")).unwrap();
    assert_eq!(json["method"], "vtf");
    assert!(json["provenance"]["config_digest"].as_str().unwrap().len() == 64);
}

#[test]
fn cf_writes_its_audit_files() {
    let ws = Workspace::explored();
    let out = ws.run(&["explain", "--method", "cf"]);
    assert!(matches!(code(&out), Some(0) | Some(4)), "{}", String::from_utf8_lossy(&out.stderr));
    if code(&out) == Some(0) {
        let system = ws.read("cf_system.csv");
        assert_eq!(system.lines().nth(1), Some("mu_x1,mu_x2,mu_x3,rhs"));
        // provenance, header, additivity row and one row per accepted retrain
        let weights: serde_json::Value = serde_json::from_str(&ws.read("weights.json")).unwrap();
        let accepted = weights["records"].as_array().unwrap().len();
        assert_eq!(system.lines().count(), 3 + accepted);
        assert!(ws.read("cf_solution.json").contains("\"normalized\""));
        assert!(ws.read("cf_prefix.csv").lines().nth(1).unwrap().starts_with("equations"));
    }
}

#[test]
fn cf_with_fewer_retrains_than_features_is_a_precondition_error() {
    let ws = Workspace::new();
    ws.ok(&["train-base"]);
    ws.ok(&["explore", "--n-retrains", "2"]);
    assert_eq!(code(&ws.run(&["explain", "--method", "cf"])), Some(3));
}

#[test]
fn fisher_needs_a_classification_dataset() {
    let ws = Workspace::new();
    assert_eq!(code(&ws.run(&["explain", "--method", "fisher"])), Some(3));
}

#[test]
fn select_rejects_nonpositive_threshold() {
    let ws = Workspace::explored();
    assert_eq!(code(&ws.run(&["select", "--threshold", "0"])), Some(2));
    assert_eq!(code(&ws.run(&["select", "--threshold=-1"])), Some(2));
}

#[test]
fn select_with_nothing_unimportant_succeeds() {
    let ws = Workspace::explored();
    ws.ok(&["select", "--threshold", "1e9"]);
    let report: serde_json::Value = serde_json::from_str(&ws.read("selection.json")).unwrap();
    assert_eq!(report["unimportant"].as_array().unwrap().len(), 0);
    assert_eq!(report["retained"].as_array().unwrap().len(), 3);
    assert_eq!(report["full_metric"], report["retained_metric"]);
    assert!(report["config"].is_object());
}

#[test]
fn evaluate_includes_external_rankings() {
    let ws = Workspace::explored();
    let external = ws.path("manual.csv");
    fs::write(&external, "name,rank\nx3,1\nx2,2\nx1,3\n").unwrap();
    ws.ok(&["evaluate", "--methods", "vtf,rvtw", "--external", external.to_str().unwrap()]);
    let report: serde_json::Value = serde_json::from_str(&ws.read("evaluation.json")).unwrap();
    let names: Vec<&str> = report["methods"].as_array().unwrap().iter().map(|m| m["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["vtf", "rvtw", "manual"]);
    assert_eq!(ws.read("evaluation.svg").matches(r#"class="series""#).count(), 3);
    assert!(ws.read("evaluation.csv").lines().nth(1) == Some("method,fraction,n_removed,metric"));
}

#[test]
fn report_summarizes_artifacts() {
    let ws = Workspace::explored();
    ws.ok(&["explain", "--method", "rvtw"]);
    ws.ok(&["report"]);
    let md = ws.read("report.md");
    assert!(md.contains("## Exploration") && md.contains("| rvtw |"));
}

#[test]
fn report_without_artifacts_fails() {
    let ws = Workspace::new();
    assert_eq!(code(&ws.run(&["report"])), Some(2));
}

#[test]
fn missing_inputs_are_io_errors() {
    let ws = Workspace::new();
    assert_eq!(code(&ws.run(&["explore"])), Some(2));
    assert_eq!(code(&ws.run(&["--data", "/nonexistent/data.csv", "train-base"])), Some(2));
}

#[test]
fn unwritable_output_directory_is_an_io_error() {
    let ws = Workspace::new();
    let blocker = ws.path("file");
    fs::write(&blocker, "not a directory").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_vtf"))
        .arg("--config")
        .arg(ws.path("config.json"))
        .arg("--out-dir")
        .arg(blocker.join("sub"))
        .arg("train-base")
        .output()
        .unwrap();
    assert_eq!(code(&out), Some(2));
}

#[test]
fn bad_configuration_and_usage_exit_with_two() {
    let ws = Workspace::new();
    fs::write(ws.path("config.json"), r#"{"tarin": {}}"#).unwrap();
    assert_eq!(code(&ws.run(&["train-base"])), Some(2));
    let ws = Workspace::new();
    assert_eq!(code(&ws.run(&["explain", "--method", "nope"])), Some(2));
    assert_eq!(code(&ws.run(&["--jobs", "0", "train-base"])), Some(2));
    assert_eq!(code(&ws.run_env(&["train-base"], &[("VTF_SEED", "abc")])), Some(2));
}

#[test]
fn csv_data_flag_replaces_the_configured_source() {
    let ws = Workspace::new();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/regression.csv");
    ws.ok(&["--data", fixture.to_str().unwrap(), "train-base"]);
    let model: serde_json::Value = serde_json::from_str(&ws.read("base_model.json")).unwrap();
    assert_eq!(model["input_dim"], 3);
}
