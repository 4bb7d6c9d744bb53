use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use docsum_core::annotate::{annotate_corpus, HttpChatClient, ResponseCache, Task, TaskInput};
use docsum_core::compose::{compose_input, truncate_to_budget, ComposedExample, InputFormat};
use docsum_core::config::PipelineConfig;
use docsum_core::filter::{run_filters, sample_subset};
use docsum_core::gate_split::{confidence_gate, split_dataset, split_stratified};
use docsum_core::ingest::{category_token_stats, ingest_directory, LabelAliasTable, Layout};
use docsum_core::jsonl::{read_jsonl, write_json, write_jsonl};
use docsum_core::masking::{emit_pretrain_set, PretrainSource};
use docsum_core::metrics::{evaluate_corpus, EmbeddingProvider, HashedEmbedder, ProviderKind, RemoteEmbedder};
use docsum_core::model::{read_qa_annotations, read_records, read_summary_annotations, write_records, QaAnnotation};
use docsum_core::tokenizer::{build_vocab, Vocabulary};
use docsum_core::{Error, Result};

#[derive(Parser)]
#[command(name = "docsum", version, about = "Summarization dataset pipeline for OCR'd administrative documents")]
struct Cli {
    /// TOML pipeline config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for default outputs and run manifests.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a corpus directory into DocumentRecord JSONL.
    Ingest(IngestArgs),
    /// Build the word-level vocabulary file.
    Vocab(VocabArgs),
    /// Drop duplicate, empty and short pages; optionally sample a subset.
    Filter(FilterArgs),
    /// Seeded uniform subset.
    Sample(SampleArgs),
    /// Annotate records through a chat-completions endpoint.
    Annotate(AnnotateArgs),
    /// Keep annotations scoring above the confidence threshold.
    Gate(GateArgs),
    /// Seeded train/validation/test split manifest.
    Split(SplitArgs),
    /// Compose model inputs in format a, b, c or d.
    Compose(ComposeArgs),
    /// Emit masked pre-training pairs.
    Mask(MaskArgs),
    /// ROUGE and BERTScore of predictions against references.
    Eval(EvalArgs),
    /// Mean token count per category.
    Stats(StatsArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long, value_enum)]
    layout: Option<LayoutArg>,
    /// alias<TAB>canonical table.
    #[arg(long)]
    aliases: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Pretrain,
    Downstream,
}

#[derive(Args)]
struct VocabArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    max_size: Option<usize>,
    #[arg(long)]
    min_freq: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    min_words: Option<usize>,
    #[arg(long)]
    subset_size: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Qa,
    Summary,
    QaScore,
}

#[derive(Args)]
struct AnnotateArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long, value_enum)]
    task: TaskArg,
    /// Question-answer pairs to score (qa-score task).
    #[arg(long)]
    qa: Option<PathBuf>,
    /// doc_id<TAB>key table for the optional key line.
    #[arg(long)]
    keys: Option<PathBuf>,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    failures: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Qa,
    Summary,
}

#[derive(Args)]
struct GateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "summary")]
    kind: KindArg,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dropped: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    /// Any JSONL with a doc_id field (and canonical_label when stratifying).
    #[arg(long)]
    input: PathBuf,
    /// Three comma-separated fractions.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    #[arg(long)]
    stratify_by_label: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ComposeArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    format: Option<InputFormat>,
    /// Question-answer pairs for formats b, c and d.
    #[arg(long)]
    qa: Option<PathBuf>,
    /// Gold summaries; pages without one are skipped.
    #[arg(long)]
    summaries: Option<PathBuf>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MaskArgs {
    /// DocumentRecord JSONL.
    #[arg(long, conflicts_with = "composed", required_unless_present = "composed")]
    records: Option<PathBuf>,
    /// ComposedExample JSONL.
    #[arg(long)]
    composed: Option<PathBuf>,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    rate: Option<f64>,
    /// Leave the question/answer prefix of composed inputs unmasked.
    #[arg(long)]
    mask_document_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    references: PathBuf,
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    #[arg(long)]
    provider: Option<ProviderKind>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Run record written next to the outputs: the effective configuration and
/// content digests of every file read or written.
#[derive(Serialize)]
struct Manifest {
    command: &'static str,
    config: PipelineConfig,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    summary: Value,
}

struct Run {
    config: PipelineConfig,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Run {
    fn out_path(&self, explicit: &Option<PathBuf>, default_name: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.config.out_dir.join(default_name))
    }

    fn input(&mut self, path: &Path) -> PathBuf {
        self.inputs.push(path.to_path_buf());
        path.to_path_buf()
    }

    fn output(&mut self, path: PathBuf) -> PathBuf {
        self.outputs.push(path.clone());
        path
    }
}

fn file_digest(path: &Path) -> Result<String> {
    if path.is_dir() {
        return Ok("directory".into());
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn digests(paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), file_digest(p)?)))
        .collect()
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

fn load_keys(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut keys = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, key) = line.split_once('\t').ok_or_else(|| Error::MalformedLine {
            path: path.to_path_buf(),
            line: i + 1,
            message: "expected doc_id<TAB>key".into(),
        })?;
        keys.insert(id.trim().to_string(), key.trim().to_string());
    }
    Ok(keys)
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = cli.out_dir {
        config.out_dir = dir;
    }
    let mut run = Run {
        config,
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    if let Some(path) = &cli.config {
        run.input(path);
    }

    let (name, summary) = match cli.command {
        Command::Ingest(a) => ("ingest", ingest(&mut run, a)?),
        Command::Vocab(a) => ("vocab", vocab(&mut run, a)?),
        Command::Filter(a) => ("filter", filter(&mut run, a)?),
        Command::Sample(a) => ("sample", sample(&mut run, a)?),
        Command::Annotate(a) => ("annotate", annotate(&mut run, a)?),
        Command::Gate(a) => ("gate", gate(&mut run, a)?),
        Command::Split(a) => ("split", split(&mut run, a)?),
        Command::Compose(a) => ("compose", compose(&mut run, a)?),
        Command::Mask(a) => ("mask", mask(&mut run, a)?),
        Command::Eval(a) => ("eval", eval(&mut run, a)?),
        Command::Stats(a) => ("stats", stats(&mut run, a)?),
    };

    let manifest = Manifest {
        command: name,
        inputs: digests(&run.inputs)?,
        outputs: digests(&run.outputs)?,
        config: run.config.clone(),
        summary: summary.clone(),
    };
    let manifest_path = run.config.out_dir.join(format!("{name}.manifest.json"));
    ensure_parent(&manifest_path)?;
    write_json(&manifest, &manifest_path)?;
    print_json(&summary)
}

fn validated(run: &Run) -> Result<()> {
    run.config.validate()
}

fn ingest(run: &mut Run, a: IngestArgs) -> Result<Value> {
    if let Some(layout) = a.layout {
        run.config.ingest.layout = match layout {
            LayoutArg::Pretrain => Layout::Pretrain,
            LayoutArg::Downstream => Layout::Downstream,
        };
    }
    if a.aliases.is_some() {
        run.config.ingest.aliases = a.aliases;
    }
    validated(run)?;
    let aliases = match run.config.ingest.aliases.clone() {
        Some(path) => LabelAliasTable::load(&run.input(&path))?,
        None => LabelAliasTable::starter(),
    };
    let src = run.input(&a.src);
    let (records, report) = ingest_directory(&src, run.config.ingest.layout, &aliases)?;
    let out = run.out_path(&a.out, "records.jsonl");
    ensure_parent(&out)?;
    write_records(&records, &run.output(out))?;
    Ok(serde_json::to_value(report).expect("report serializes"))
}

fn vocab(run: &mut Run, a: VocabArgs) -> Result<Value> {
    if let Some(v) = a.max_size {
        run.config.vocab.max_size = v;
    }
    if let Some(v) = a.min_freq {
        run.config.vocab.min_freq = v;
    }
    validated(run)?;
    let records = read_records(&run.input(&a.records))?;
    let vocab = build_vocab(
        records.iter().map(|r| r.ocr_text.as_str()),
        run.config.vocab.max_size,
        run.config.vocab.min_freq,
    )?;
    let out = run.out_path(&a.out, "vocab.txt");
    ensure_parent(&out)?;
    vocab.save(&run.output(out))?;
    Ok(json!({"size": vocab.size()}))
}

fn filter(run: &mut Run, a: FilterArgs) -> Result<Value> {
    if let Some(v) = a.min_words {
        run.config.filter.min_words = v;
    }
    if a.subset_size.is_some() {
        run.config.filter.subset_size = a.subset_size;
    }
    validated(run)?;
    let records = read_records(&run.input(&a.records))?;
    let (mut kept, report) = run_filters(records, run.config.filter.min_words);
    if let Some(k) = run.config.filter.subset_size {
        kept = sample_subset(&kept, k, run.config.seed)?;
    }
    let out = run.out_path(&a.out, "filtered.jsonl");
    ensure_parent(&out)?;
    write_records(&kept, &run.output(out))?;
    let mut summary = serde_json::to_value(report).expect("report serializes");
    if run.config.filter.subset_size.is_some() {
        summary["sampled"] = json!(kept.len());
    }
    Ok(summary)
}

fn sample(run: &mut Run, a: SampleArgs) -> Result<Value> {
    validated(run)?;
    let records = read_records(&run.input(&a.records))?;
    let picked = sample_subset(&records, a.k, run.config.seed)?;
    let out = run.out_path(&a.out, "sample.jsonl");
    ensure_parent(&out)?;
    write_records(&picked, &run.output(out))?;
    Ok(json!({"input_count": records.len(), "output_count": picked.len()}))
}

fn annotate(run: &mut Run, a: AnnotateArgs) -> Result<Value> {
    let llm = &mut run.config.annotate.llm;
    if let Some(v) = a.base_url {
        llm.base_url = v;
    }
    if let Some(v) = a.model {
        llm.model_name = v;
    }
    if let Some(v) = a.parallelism {
        llm.parallelism = v;
    }
    if let Some(v) = a.max_retries {
        llm.max_retries = v;
    }
    if let Some(v) = a.temperature {
        llm.temperature = v;
    }
    if let Some(v) = a.cache_dir {
        run.config.annotate.cache_dir = v;
    }
    validated(run)?;

    let records = read_records(&run.input(&a.records))?;
    let keys = match &a.keys {
        Some(path) => load_keys(&run.input(path))?,
        None => HashMap::new(),
    };
    let pairs: Vec<QaAnnotation> = match (&a.task, &a.qa) {
        (TaskArg::QaScore, Some(path)) => read_qa_annotations(&run.input(path))?,
        (TaskArg::QaScore, None) => {
            return Err(Error::InvalidArgument("--task qa-score needs --qa".into()));
        }
        _ => Vec::new(),
    };
    let (input, task) = match a.task {
        TaskArg::Qa => (TaskInput::Qa { keys: &keys }, Task::Qa),
        TaskArg::Summary => (TaskInput::Summary, Task::Summary),
        TaskArg::QaScore => (TaskInput::QaScore { pairs: &pairs }, Task::QaScore),
    };

    let client = HttpChatClient::new(run.config.annotate.llm.clone().with_env_key())?;
    let cache = ResponseCache::open(&run.config.annotate.cache_dir)?;
    let result = annotate_corpus(&records, input, &client, &cache, run.config.annotate.llm.parallelism)?;

    let default_name = match task {
        Task::Qa => "qa.jsonl",
        Task::Summary => "summaries.jsonl",
        Task::QaScore => "qa_scored.jsonl",
    };
    let out = run.out_path(&a.out, default_name);
    ensure_parent(&out)?;
    let out = run.output(out);
    match task {
        Task::Summary => write_jsonl(&result.summaries, &out)?,
        _ => write_jsonl(&result.qa, &out)?,
    };
    let failures = run.out_path(&a.failures, &format!("{}_failures.jsonl", default_name.trim_end_matches(".jsonl")));
    ensure_parent(&failures)?;
    write_jsonl(&result.failures, &run.output(failures))?;
    for f in &result.failures {
        log::warn!("annotation failed for {}: {}", f.doc_id, f.reason);
    }
    Ok(serde_json::to_value(result.summary()).expect("summary serializes"))
}

fn gate(run: &mut Run, a: GateArgs) -> Result<Value> {
    if let Some(t) = a.threshold {
        run.config.gate.threshold = t;
    }
    validated(run)?;
    let input = run.input(&a.input);
    let threshold = run.config.gate.threshold;
    let out = run.out_path(&a.out, "gated.jsonl");
    let dropped_path = run.out_path(&a.dropped, "gate_dropped.jsonl");
    ensure_parent(&out)?;
    ensure_parent(&dropped_path)?;
    let (kept, dropped) = match a.kind {
        KindArg::Summary => {
            let (k, d) = confidence_gate(&read_summary_annotations(&input)?, threshold)?;
            write_jsonl(&k, &out)?;
            write_jsonl(&d, &dropped_path)?;
            (k.len(), d.len())
        }
        KindArg::Qa => {
            let (k, d) = confidence_gate(&read_qa_annotations(&input)?, threshold)?;
            write_jsonl(&k, &out)?;
            write_jsonl(&d, &dropped_path)?;
            (k.len(), d.len())
        }
    };
    run.output(out);
    run.output(dropped_path);
    Ok(json!({"threshold": threshold, "kept": kept, "dropped": dropped}))
}

fn split(run: &mut Run, a: SplitArgs) -> Result<Value> {
    if let Some(r) = a.ratios {
        run.config.split.ratios = r
            .try_into()
            .map_err(|r: Vec<f64>| Error::InvalidArgument(format!("--ratios needs 3 values, got {}", r.len())))?;
    }
    if a.stratify_by_label {
        run.config.split.stratify_by_label = true;
    }
    validated(run)?;
    let input = run.input(&a.input);
    let rows: Vec<Value> = read_jsonl(&input)?;
    let field = |row: &Value, line: usize, name: &str| -> Result<String> {
        row.get(name)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| Error::MalformedLine {
                path: input.clone(),
                line,
                message: format!("missing string field `{name}`"),
            })
    };
    let seed = run.config.seed;
    let ratios = run.config.split.ratios;
    let manifest = if run.config.split.stratify_by_label {
        let labeled = rows
            .iter()
            .enumerate()
            .map(|(i, r)| Ok((field(r, i + 1, "doc_id")?, field(r, i + 1, "canonical_label")?)))
            .collect::<Result<Vec<_>>>()?;
        split_stratified(&labeled, seed, ratios)?
    } else {
        let ids = rows
            .iter()
            .enumerate()
            .map(|(i, r)| field(r, i + 1, "doc_id"))
            .collect::<Result<Vec<_>>>()?;
        split_dataset(&ids, seed, ratios)?
    };
    let out = run.out_path(&a.out, "split.json");
    ensure_parent(&out)?;
    write_json(&manifest, &run.output(out))?;
    Ok(json!({
        "train": manifest.train_ids.len(),
        "val": manifest.val_ids.len(),
        "test": manifest.test_ids.len(),
    }))
}

fn compose(run: &mut Run, a: ComposeArgs) -> Result<Value> {
    if let Some(f) = a.format {
        run.config.compose.format = f;
    }
    if let Some(b) = a.budget {
        run.config.compose.budget = b;
    }
    validated(run)?;
    let format = run.config.compose.format;
    let budget = run.config.compose.budget;
    let records = read_records(&run.input(&a.records))?;
    let vocab = Vocabulary::load(&run.input(&a.vocab))?;
    let qa: HashMap<String, QaAnnotation> = match &a.qa {
        Some(path) => read_qa_annotations(&run.input(path))?
            .into_iter()
            .map(|q| (q.doc_id.clone(), q))
            .collect(),
        None => HashMap::new(),
    };
    let summaries: Option<HashMap<String, String>> = match &a.summaries {
        Some(path) => Some(
            read_summary_annotations(&run.input(path))?
                .into_iter()
                .map(|s| (s.doc_id, s.summary))
                .collect(),
        ),
        None => None,
    };

    let mut composed: Vec<ComposedExample> = Vec::new();
    let mut missing_target = 0usize;
    let mut missing_qa = 0usize;
    for record in &records {
        let target = match &summaries {
            Some(map) => match map.get(&record.doc_id) {
                Some(s) => Some(s.clone()),
                None => {
                    missing_target += 1;
                    continue;
                }
            },
            None => None,
        };
        let pair = qa.get(&record.doc_id);
        if format.needs_qa() && pair.is_none() {
            missing_qa += 1;
            continue;
        }
        let mut example = truncate_to_budget(&compose_input(record, pair, format)?, &vocab, budget)?;
        example.target_summary = target;
        composed.push(example);
    }
    let out = run.out_path(&a.out, "composed.jsonl");
    ensure_parent(&out)?;
    write_jsonl(&composed, &run.output(out))?;
    Ok(json!({
        "format": format.to_string(),
        "composed": composed.len(),
        "skipped_missing_target": missing_target,
        "skipped_missing_qa": missing_qa,
    }))
}

fn mask(run: &mut Run, a: MaskArgs) -> Result<Value> {
    if let Some(r) = a.rate {
        run.config.mask.rate = r;
    }
    if a.mask_document_only {
        run.config.mask.mask_document_only = true;
    }
    validated(run)?;
    let vocab = Vocabulary::load(&run.input(&a.vocab))?;
    let rate = run.config.mask.rate;
    let out = run.out_path(&a.out, "masked.jsonl");
    ensure_parent(&out)?;
    let count = match (&a.records, &a.composed) {
        (Some(path), _) => {
            let records = read_records(&run.input(path))?;
            let sources: Vec<PretrainSource> = records
                .iter()
                .map(|r| PretrainSource {
                    doc_id: &r.doc_id,
                    text: &r.ocr_text,
                    protected_tokens: 0,
                })
                .collect();
            emit_pretrain_set(&sources, &vocab, rate, run.config.seed, &out)?
        }
        (None, Some(path)) => {
            let examples: Vec<ComposedExample> = read_jsonl(&run.input(path))?;
            let document_only = run.config.mask.mask_document_only;
            let sources: Vec<PretrainSource> = examples
                .iter()
                .map(|e| PretrainSource {
                    doc_id: &e.doc_id,
                    text: &e.input_text,
                    protected_tokens: if document_only { vocab.token_count(e.prefix()) } else { 0 },
                })
                .collect();
            emit_pretrain_set(&sources, &vocab, rate, run.config.seed, &out)?
        }
        (None, None) => return Err(Error::InvalidArgument("--records or --composed is required".into())),
    };
    run.output(out);
    Ok(json!({"pairs": count, "rate": rate}))
}

fn eval(run: &mut Run, a: EvalArgs) -> Result<Value> {
    if let Some(m) = a.metrics {
        run.config.eval.metrics = m;
    }
    if let Some(p) = a.provider {
        run.config.eval.provider = p;
    }
    validated(run)?;
    let cfg = run.config.eval.clone();
    let with_bertscore = cfg.metrics.iter().any(|m| m == "bertscore");
    let provider: Option<Box<dyn EmbeddingProvider>> = match (with_bertscore, cfg.provider) {
        (false, _) => None,
        (true, ProviderKind::Hashed) => Some(Box::new(HashedEmbedder::new(cfg.embedding_dim, run.config.seed))),
        (true, ProviderKind::Remote) => {
            let llm = run.config.annotate.llm.clone().with_env_key();
            Some(Box::new(RemoteEmbedder::new(
                &cfg.embedding_base_url,
                &cfg.embedding_model,
                llm.api_key.clone(),
                cfg.embedding_dim,
                llm.retry_policy(),
                llm.timeout_secs,
            )))
        }
    };
    let predictions = run.input(&a.predictions);
    let references = run.input(&a.references);
    let report = evaluate_corpus(&predictions, &references, provider.as_deref())?;
    let out = run.out_path(&a.out, "metrics.json");
    ensure_parent(&out)?;
    write_json(&report, &run.output(out))?;
    Ok(json!({"documents": report.per_doc.len(), "corpus_mean": report.corpus_mean}))
}

fn stats(run: &mut Run, a: StatsArgs) -> Result<Value> {
    validated(run)?;
    let records = read_records(&run.input(&a.records))?;
    let vocab = Vocabulary::load(&run.input(&a.vocab))?;
    let table = category_token_stats(&records, &vocab);
    let out = run.out_path(&a.out, "stats.json");
    ensure_parent(&out)?;
    write_json(&table, &run.output(out))?;
    Ok(serde_json::to_value(&table).expect("stats serialize"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::FAILURE
        }
    }
}
