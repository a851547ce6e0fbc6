mod common;

use std::path::Path;

use costfuse_core::fusion::{roc_from_scores, gar_at_far, Channel, ScoreSet};
use costfuse_core::pipeline::{
    manifest_path, run_all, run_stage, RunConfig, RunManifest, Stage, VerificationReport, read_json,
};
use costfuse_core::Error;

fn tiny(out: &Path) -> RunConfig {
    let text = format!(
        r#"
seed = 7
out_dir = "{}"

[data]
image_size = 40
color_per_class = 3
shape_per_class = 3
texture_classes = 2
texture_per_class = 3

[dictionary]
signal_size = 4
atoms = 8
epochs = 2

[identity]
subjects = 3
train_per_subject = 2
val_per_subject = 2
test_per_subject = 2

[cost_classifier]
epochs = 50

[backend]
epochs = 20
hidden = [8, 4]
"#,
        out.display()
    );
    RunConfig::from_toml(&text).unwrap()
}

#[test]
fn empty_stage_list_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(&dir.path().join("run"));
    cfg.stages.clear();
    let m = run_all(&cfg).unwrap();
    assert!(m.stages.is_empty());
    assert!(!dir.path().join("run").exists());
}

#[test]
fn missing_score_artifact_names_score_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(&dir.path().join("run"));
    cfg.stages = vec![Stage::EvalVerify];
    let err = run_all(&cfg).unwrap_err();
    match &err {
        Error::MissingDependency { producer, stage, .. } => {
            assert_eq!(producer, "score");
            assert_eq!(stage, "eval-verify");
        }
        other => panic!("unexpected {other}"),
    }
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("run stage `score` first"));
}

#[test]
fn full_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(&dir.path().join("a"));
    let first = run_all(&cfg).unwrap();
    assert_eq!(first.stages.len(), Stage::ALL.len());
    let on_disk: RunManifest = read_json(&manifest_path(&cfg)).unwrap();
    assert_eq!(on_disk.config_hash, cfg.hash());
    assert_eq!(on_disk.stages.len(), Stage::ALL.len());

    // identical config in a second directory
    let mut cfg_b = cfg.clone();
    cfg_b.out_dir = dir.path().join("b");
    let second = run_all(&cfg_b).unwrap();
    for (a, b) in first.stages.iter().zip(&second.stages) {
        assert_eq!(a.artifacts, b.artifacts, "stage {}", a.stage);
    }

    // rerun of one stage in place
    let again = run_stage(&cfg, Stage::LearnDict).unwrap();
    assert_eq!(&again.artifacts, &first.record(Stage::LearnDict).unwrap().artifacts);

    let report: VerificationReport = read_json(&cfg.out_dir.join("eval/verification.json")).unwrap();
    let set = ScoreSet::read_csv(&cfg.out_dir.join("fusion/scores_test.csv"), report.alpha).unwrap();
    let (g, i) = set.split(Channel::Fused);
    assert_eq!(report.channels["fused"].gar_at_1, common::brute_gar_at_far(&g, &i, 0.01));
}

#[test]
fn eval_verify_on_fixture_scores() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(&dir.path().join("run"));
    cfg.stages = vec![Stage::EvalVerify];
    let scores = cfg.out_dir.join("scores");
    std::fs::create_dir_all(&scores).unwrap();
    let mut csv = String::from("path1,path2,dist_cost,dist_supervised,dist_fused,label\n");
    let mut genuine = Vec::new();
    let mut imposter = Vec::new();
    for k in 0..300u64 {
        let v = ((k * 7919) % 1000) as f64 / 1000.0;
        let is_gen = k % 3 == 0;
        let d = if is_gen { v * 0.6 } else { 0.2 + v * 0.8 };
        if is_gen { genuine.push(d) } else { imposter.push(d) }
        let label = if is_gen { "genuine" } else { "imposter" };
        csv.push_str(&format!("a{k},b{k},{d},{d},{d},{label}\n"));
    }
    std::fs::write(scores.join("scores_test.csv"), csv).unwrap();
    std::fs::write(
        scores.join("fusion.json"),
        r#"{"alpha": 0.3, "normalization": "minmax", "distance": "euclidean"}"#,
    )
    .unwrap();
    run_stage(&cfg, Stage::EvalVerify).unwrap();
    let report: VerificationReport = read_json(&cfg.out_dir.join("eval/verification.json")).unwrap();
    for far in [0.01, 0.001] {
        let expected = common::brute_gar_at_far(&genuine, &imposter, far);
        let got = if far == 0.01 { report.channels["fused"].gar_at_1 } else { report.channels["fused"].gar_at_01 };
        assert_eq!(got, expected);
        assert_eq!(gar_at_far(&roc_from_scores(&genuine, &imposter).unwrap(), far), expected);
    }
    assert!(cfg.out_dir.join("eval/roc_fused.csv").exists());
}

#[test]
fn gen_counts_follow_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(&dir.path().join("run"));
    run_stage(&cfg, Stage::Gen).unwrap();
    let data = cfg.out_dir.join("data");
    let color = costfuse_core::synthgen::DatasetManifest::read_csv(&data.join("color_manifest.csv")).unwrap();
    let shape = costfuse_core::synthgen::DatasetManifest::read_csv(&data.join("shape_manifest.csv")).unwrap();
    assert_eq!(color.entries.len(), 10 * 3);
    assert_eq!(shape.entries.len(), 7 * 3);
}

#[test]
fn default_config_generates_full_counts() {
    let cfg = RunConfig::default();
    assert_eq!(cfg.data.color_per_class * 10, 10_000);
    assert_eq!(cfg.data.shape_per_class * 7, 7_000);
}
