mod common;

use std::process::Command;

use common::corpus::{records, write_downstream_dir, Plan};
use common::mock_llm::{deterministic_reply, MockLlm};
use common::pipeline::{docsum, run_chain};
use common::{bin, sha256_file};
use docsum_core::compose::ComposedExample;
use docsum_core::gate_split::SplitManifest;
use docsum_core::jsonl::{read_json, read_jsonl, write_jsonl};
use docsum_core::masking::PretrainLine;
use docsum_core::model::{read_records, read_summary_annotations, write_records};
use serde_json::Value;

fn failing(cwd: &std::path::Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(bin())
        .current_dir(cwd)
        .args(args)
        .env_remove("DOCSUM_LLM_API_KEY")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn filter_report_reconciles() {
    let dir = tempfile::tempdir().unwrap();
    let plan = Plan {
        unique: 200,
        duplicates: 10,
        empties: 4,
        short: 6,
    };
    write_records(&records(&plan, 1), &dir.path().join("in.jsonl")).unwrap();
    let report = docsum(dir.path(), &["filter", "--records", "in.jsonl", "--min-words", "100"], None);
    assert_eq!(report["input_count"], 220);
    assert_eq!(report["removed_duplicates"], 10);
    assert_eq!(report["removed_empty"], 4);
    assert_eq!(report["removed_short"], 6);
    assert_eq!(report["output_count"], 200);
    assert_eq!(read_records(&dir.path().join("out/filtered.jsonl")).unwrap().len(), 200);

    let manifest: Value = read_json(&dir.path().join("out/filter.manifest.json")).unwrap();
    assert_eq!(manifest["command"], "filter");
    assert_eq!(manifest["config"]["filter"]["min_words"], 100);
    assert_eq!(manifest["outputs"]["out/filtered.jsonl"], sha256_file(&dir.path().join("out/filtered.jsonl")));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let plan = Plan {
        unique: 30,
        duplicates: 0,
        empties: 0,
        short: 10,
    };
    write_records(&records(&plan, 2), &dir.path().join("in.jsonl")).unwrap();
    std::fs::write(dir.path().join("docsum.toml"), "seed = 3\n[filter]\nmin_words = 1\nsubset_size = 5\n").unwrap();
    let from_file = docsum(dir.path(), &["--config", "docsum.toml", "filter", "--records", "in.jsonl"], None);
    assert_eq!(from_file["removed_short"], 0);
    assert_eq!(from_file["sampled"], 5);
    let overridden = docsum(
        dir.path(),
        &["--config", "docsum.toml", "filter", "--records", "in.jsonl", "--min-words", "100", "--subset-size", "7"],
        None,
    );
    assert_eq!(overridden["removed_short"], 10);
    assert_eq!(overridden["sampled"], 7);
    let manifest: Value = read_json(&dir.path().join("out/filter.manifest.json")).unwrap();
    assert_eq!(manifest["config"]["seed"], 3);
    assert_eq!(manifest["config"]["filter"]["subset_size"], 7);
}

#[test]
fn unknown_subcommand_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stderr) = failing(dir.path(), &["frobnicate"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("Usage"), "{stderr}");
}

#[test]
fn errors_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stderr) = failing(dir.path(), &["filter", "--records", "missing.jsonl"]);
    assert_eq!(code, 1);
    let err: Value = serde_json::from_str(stderr.trim().lines().last().unwrap()).unwrap();
    assert_eq!(err["error"], "io");

    std::fs::create_dir(dir.path().join("empty")).unwrap();
    let (code, stderr) = failing(dir.path(), &["ingest", "--src", "empty"]);
    assert_eq!(code, 1);
    let err: Value = serde_json::from_str(stderr.trim().lines().last().unwrap()).unwrap();
    assert_eq!(err["error"], "no_documents");
    assert!(err["message"].as_str().unwrap().contains("no documents found"));

    write_records(&records(&Plan { unique: 3, duplicates: 0, empties: 0, short: 0 }, 3), &dir.path().join("r.jsonl")).unwrap();
    let (code, stderr) = failing(dir.path(), &["annotate", "--records", "r.jsonl", "--task", "summary"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("missing_api_key"), "{stderr}");

    let (code, stderr) = failing(dir.path(), &["split", "--input", "r.jsonl", "--ratios", "0.5,0.5,0.5"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("\"config\""), "{stderr}");
}

#[test]
fn eval_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let pred = |id: &str, s: &str| serde_json::json!({"doc_id": id, "summary": s});
    write_jsonl([pred("a", "the cat"), pred("b", "a c b d")], &dir.path().join("pred.jsonl")).unwrap();
    write_jsonl([pred("a", "the cat sat"), pred("b", "a b c d")], &dir.path().join("ref.jsonl")).unwrap();
    let summary = docsum(
        dir.path(),
        &["eval", "--predictions", "pred.jsonl", "--references", "ref.jsonl", "--metrics", "rouge,bertscore", "--provider", "hashed"],
        None,
    );
    assert_eq!(summary["documents"], 2);
    let report: Value = read_json(&dir.path().join("out/metrics.json")).unwrap();
    assert!((report["per_doc"]["a"]["r1"].as_f64().unwrap() - 0.8).abs() < 1e-9);
    assert!((report["per_doc"]["b"]["rl"].as_f64().unwrap() - 0.75).abs() < 1e-9);
    assert!(report["per_doc"]["b"]["bs_f1"].as_f64().unwrap() > 0.99);

    let plan = Plan { unique: 10, duplicates: 0, empties: 0, short: 0 };
    write_records(&records(&plan, 4), &dir.path().join("r.jsonl")).unwrap();
    docsum(dir.path(), &["vocab", "--records", "r.jsonl"], None);
    let stats = docsum(dir.path(), &["stats", "--records", "r.jsonl", "--vocab", "out/vocab.txt"], None);
    assert_eq!(stats.as_object().unwrap().len(), 5);
}

#[test]
fn full_chain_is_reproducible() {
    let server = MockLlm::start(|prompt, _| deterministic_reply(prompt));
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    write_downstream_dir(&first.path().join("corpus"), 50, 11);
    write_downstream_dir(&second.path().join("corpus"), 50, 11);

    let (steps, digests_a) = run_chain(first.path(), &server.base_url());
    let calls_after_first = server.calls();
    let (_, digests_b) = run_chain(second.path(), &server.base_url());
    assert_eq!(digests_a, digests_b);
    assert_eq!(server.calls(), 2 * calls_after_first);

    let filtered = steps["filter"]["output_count"].as_u64().unwrap() as usize;
    assert!(filtered > 0 && filtered < 50);
    assert_eq!(steps["annotate_summary"]["annotated"], filtered);

    let out = first.path().join("out");
    let gated = read_summary_annotations(&out.join("gated.jsonl")).unwrap();
    assert!(gated.iter().all(|s| s.score > 0.9));
    assert_eq!(steps["gate"]["kept"].as_u64().unwrap() as usize, gated.len());

    let composed: Vec<ComposedExample> = read_jsonl(&out.join("composed.jsonl")).unwrap();
    assert_eq!(composed.len(), gated.len());
    for c in &composed {
        assert!(c.input_text.starts_with("Question: What does the page begin with? Answer: It begins with "));
        assert!(c.input_token_count.unwrap() <= 512);
        assert!(c.target_summary.is_some());
    }

    let masked: Vec<PretrainLine> = read_jsonl(&out.join("masked.jsonl")).unwrap();
    assert_eq!(masked.len(), composed.len());
    for m in &masked {
        assert!(m.pair.original.len() <= 512);
        assert_eq!(m.pair.reconstruct(), m.pair.original);
    }

    let split: SplitManifest = read_json(&out.join("split.json")).unwrap();
    assert_eq!(split.train_ids.len() + split.val_ids.len() + split.test_ids.len(), gated.len());
}
