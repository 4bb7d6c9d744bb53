//! Drives the `docsum` binary through the full chain in one working
//! directory, using relative paths so two runs are comparable byte for byte.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

use super::{bin, sha256_file};

pub fn docsum(cwd: &Path, args: &[&str], base_url: Option<&str>) -> Value {
    let mut cmd = Command::new(bin());
    cmd.current_dir(cwd).args(args).env("RUST_LOG", "error");
    if base_url.is_some() {
        cmd.env("DOCSUM_LLM_API_KEY", "test-key");
    }
    let out = cmd.output().expect("spawn docsum");
    assert!(
        out.status.success(),
        "docsum {args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stderr),
        String::from_utf8_lossy(&out.stdout)
    );
    serde_json::from_slice(&out.stdout).expect("summary JSON on stdout")
}

pub const OUTPUTS: &[&str] = &[
    "out/records.jsonl",
    "out/filtered.jsonl",
    "out/vocab.txt",
    "out/summaries.jsonl",
    "out/gated.jsonl",
    "out/qa.jsonl",
    "out/composed.jsonl",
    "out/masked.jsonl",
    "out/split.json",
    "out/ingest.manifest.json",
    "out/filter.manifest.json",
    "out/vocab.manifest.json",
    "out/annotate.manifest.json",
    "out/gate.manifest.json",
    "out/compose.manifest.json",
    "out/mask.manifest.json",
    "out/split.manifest.json",
];

/// Runs ingest, filter, vocab, annotate (summaries, then QA), gate, compose,
/// mask and split over the corpus in `workdir/corpus`. Returns each step's
/// stdout summary and a digest per output file.
pub fn run_chain(workdir: &Path, base_url: &str) -> (BTreeMap<&'static str, Value>, BTreeMap<String, String>) {
    let corpus = "corpus";
    let mut steps = BTreeMap::new();
    let seed = ["--seed", "7"];
    let run = |args: &[&str], llm: bool| {
        let mut full: Vec<&str> = args.to_vec();
        full.extend_from_slice(&seed);
        docsum(workdir, &full, llm.then_some(base_url))
    };
    steps.insert("ingest", run(&["ingest", "--src", corpus, "--layout", "downstream"], false));
    steps.insert("filter", run(&["filter", "--records", "out/records.jsonl", "--min-words", "100"], false));
    steps.insert("vocab", run(&["vocab", "--records", "out/filtered.jsonl", "--max-size", "5000"], false));
    let llm_flags = ["--base-url", base_url, "--model", "mock-instruct", "--cache-dir", "cache", "--parallelism", "4"];
    let mut summary_args = vec!["annotate", "--records", "out/filtered.jsonl", "--task", "summary"];
    summary_args.extend_from_slice(&llm_flags);
    steps.insert("annotate_summary", run(&summary_args, true));
    steps.insert("gate", run(&["gate", "--input", "out/summaries.jsonl", "--kind", "summary"], false));
    let mut qa_args = vec!["annotate", "--records", "out/filtered.jsonl", "--task", "qa"];
    qa_args.extend_from_slice(&llm_flags);
    steps.insert("annotate_qa", run(&qa_args, true));
    steps.insert(
        "compose",
        run(
            &[
                "compose", "--records", "out/filtered.jsonl", "--vocab", "out/vocab.txt", "--format", "d", "--qa",
                "out/qa.jsonl", "--summaries", "out/gated.jsonl",
            ],
            false,
        ),
    );
    steps.insert(
        "mask",
        run(&["mask", "--composed", "out/composed.jsonl", "--vocab", "out/vocab.txt", "--mask-document-only"], false),
    );
    steps.insert("split", run(&["split", "--input", "out/gated.jsonl"], false));

    let digests = OUTPUTS
        .iter()
        .map(|rel| (rel.to_string(), sha256_file(&workdir.join(rel))))
        .collect();
    (steps, digests)
}
