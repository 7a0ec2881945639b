//! CLI surface tests: published count tables, exit codes, and flag handling.

use std::path::Path;
use std::process::{Command, Output};

use entclass_core::dataset::MANIFEST_FILENAME;
use entclass_core::transformer::{save_checkpoint, Model, ModelConfig};

fn entclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entclass"))
        .args(args)
        .output()
        .expect("spawn entclass")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn gen_2x2_pretrain_matches_scaled_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data");
    let output = entclass(&[
        "gen", "--dims", "2x2", "--task", "pretrain", "--scale", "1e-3", "--seed", "7", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = std::fs::read_to_string(out.join(MANIFEST_FILENAME)).unwrap();
    assert!(text.contains("group = name=sep count=4000 label=0"));
    assert!(text.contains("group = name=general-ent count=2000 label=1"));
    assert!(text.contains("group = name=werner-ent count=2000 label=1"));
    assert!(text.contains("group = name=max-ent count=2000 label=1"));
}

#[test]
fn gen_2x3_pretrain_has_two_groups_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data");
    let output = entclass(&[
        "gen", "--dims", "2x3", "--task", "pretrain", "--scale", "1e-4", "--seed", "7", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = std::fs::read_to_string(out.join(MANIFEST_FILENAME)).unwrap();
    assert!(text.contains("group = name=sep count=800 label=0"));
    assert!(text.contains("group = name=general-ent count=800 label=1"));
    assert!(!text.contains("werner-ent"));
    assert!(!text.contains("max-ent"));
}

#[test]
fn unknown_group_for_dims_exits_2_naming_the_group() {
    let dir = tempfile::tempdir().unwrap();
    let output = entclass(&[
        "gen",
        "--dims",
        "2x3",
        "--task",
        "pretrain",
        "--scale",
        "1e-4",
        "--groups",
        "werner-ent",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("werner-ent"), "stderr: {stderr}");
}

#[test]
fn bad_scale_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let output = entclass(&[
        "gen", "--dims", "2x2", "--task", "pretrain", "--scale", "0", "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn eval_with_mismatched_dims_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let output = entclass(&[
        "gen", "--dims", "2x2", "--task", "eval", "--scale", "1e-4", "--seed", "3", "--out",
        data.to_str().unwrap(),
    ]);
    assert!(output.status.success());

    // A checkpoint shaped for 3x3 states (81 tokens) against a 2x2 corpus.
    let model = Model::<f32>::init(ModelConfig::desk_default(81), 1).unwrap();
    let checkpoint = dir.path().join("model.qtck");
    save_checkpoint(&model, &checkpoint).unwrap();

    let output = entclass(&[
        "eval",
        "--manifest",
        data.join(MANIFEST_FILENAME).to_str().unwrap(),
        "--checkpoint",
        checkpoint.to_str().unwrap(),
        "--mode",
        "reconstruction",
        "--out",
        dir.path().join("eval").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(5));
}

#[test]
fn missing_manifest_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let model = Model::<f32>::init(ModelConfig::desk_default(16), 1).unwrap();
    let checkpoint = dir.path().join("model.qtck");
    save_checkpoint(&model, &checkpoint).unwrap();
    let output = entclass(&[
        "eval",
        "--manifest",
        dir.path().join("nope/manifest.txt").to_str().unwrap(),
        "--checkpoint",
        checkpoint.to_str().unwrap(),
        "--mode",
        "reconstruction",
        "--out",
        dir.path().join("eval").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn outputs_are_never_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data");
    let args = [
        "gen", "--dims", "2x2", "--task", "eval", "--scale", "1e-4", "--seed", "3", "--out",
        out.to_str().unwrap(),
    ];
    assert!(entclass(&args).status.success());
    // Re-running against the same directory must refuse to clobber.
    let output = entclass(&args);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn show_config_prints_defaults_table() {
    let output = entclass(&["--show-config"]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    assert!(text.contains("embed_dim=64"));
    assert!(text.contains("lr_max=3e-4"));
    assert!(text.contains("xoshiro256++"));
}

#[test]
fn manifest_embeds_tool_version_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data");
    assert!(entclass(&[
        "gen", "--dims", "2x2", "--task", "eval", "--scale", "1e-4", "--seed", "9", "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());
    let text = std::fs::read_to_string(out.join(MANIFEST_FILENAME)).unwrap();
    assert!(text.contains(&format!("tool_version = {}", entclass_core::TOOL_VERSION)));
    assert!(text.contains("master_seed = 9"));
    assert!(text.contains("scale_factor = 1e-4"));
    assert!(text.contains("rng_algorithm = "));
    assert!(Path::new(&out).join("sep-00000.qsts").exists());
}
