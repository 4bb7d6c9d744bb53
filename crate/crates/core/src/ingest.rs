//! Corpus directory ingestion and label cleanup.
//!
//! Two layouts are understood:
//!
//! * `pretrain`: `<id>.txt` holds the OCR text and a sidecar `<id>.labels`
//!   lists one raw label per line. A page may carry several labels.
//! * `downstream`: `<category>/<id>.txt`, one category per page.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DocumentRecord, Source};
use crate::tokenizer::Vocabulary;

const STARTER_ALIASES: &str = include_str!("../data/aliases.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Pretrain,
    Downstream,
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pretrain" => Ok(Layout::Pretrain),
            "downstream" => Ok(Layout::Downstream),
            other => Err(Error::InvalidArgument(format!("unknown layout `{other}`"))),
        }
    }
}

/// Case-insensitive alias → canonical label mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelAliasTable {
    map: HashMap<String, String>,
    canonical: BTreeSet<String>,
}

fn clean(label: &str) -> String {
    label.trim().to_lowercase()
}

impl LabelAliasTable {
    /// Parses `alias<TAB>canonical` lines. Blank lines and `#` comments are
    /// ignored.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (alias, canonical) = line.split_once('\t').ok_or_else(|| {
                Error::Config(format!("alias table line {}: expected alias<TAB>canonical", idx + 1))
            })?;
            pairs.push((clean(alias), clean(canonical)));
        }
        Self::from_pairs(pairs)
    }

    pub fn from_pairs<I, A, C>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, C)>,
        A: AsRef<str>,
        C: AsRef<str>,
    {
        let mut table = LabelAliasTable::default();
        let pairs: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(a, c)| (clean(a.as_ref()), clean(c.as_ref())))
            .collect();
        for (_, canonical) in &pairs {
            table.canonical.insert(canonical.clone());
            table.map.insert(canonical.clone(), canonical.clone());
        }
        for (alias, canonical) in pairs {
            if table.canonical.contains(&alias) && alias != canonical {
                return Err(Error::Config(format!(
                    "`{alias}` is canonical but also aliased to `{canonical}`"
                )));
            }
            if let Some(prev) = table.map.insert(alias.clone(), canonical.clone()) {
                if prev != canonical {
                    return Err(Error::Config(format!(
                        "alias `{alias}` maps to both `{prev}` and `{canonical}`"
                    )));
                }
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text)
    }

    /// The alias table shipped with the crate.
    pub fn starter() -> Self {
        Self::from_tsv(STARTER_ALIASES).expect("bundled alias table is valid")
    }

    pub fn canonical_set(&self) -> &BTreeSet<String> {
        &self.canonical
    }

    /// Maps a raw label, returning `None` when it is not in the table.
    pub fn lookup(&self, raw: &str) -> Option<&str> {
        self.map.get(&clean(raw)).map(String::as_str)
    }
}

/// Lowercases, trims and alias-maps a raw label. Unknown labels pass through
/// in cleaned form.
pub fn normalize_label(raw: &str, aliases: &LabelAliasTable) -> String {
    match aliases.lookup(raw) {
        Some(canonical) => canonical.to_string(),
        None => {
            let cleaned = clean(raw);
            log::warn!("unknown label `{cleaned}` passed through");
            cleaned
        }
    }
}

/// Picks the candidate with the highest corpus-wide frequency, breaking ties
/// lexicographically.
pub fn resolve_primary_label(
    candidates: &BTreeSet<String>,
    frequencies: &HashMap<String, usize>,
) -> Result<String> {
    candidates
        .iter()
        .map(|label| (frequencies.get(label).copied().unwrap_or(0), label))
        // BTreeSet iterates ascending, so keep the first of equal counts.
        .fold(None::<(usize, &String)>, |best, cur| match best {
            Some(b) if b.0 >= cur.0 => Some(b),
            _ => Some(cur),
        })
        .map(|(_, label)| label.clone())
        .ok_or_else(|| Error::InvalidArgument("empty label candidate set".into()))
}

/// Counts, per canonical label, how many documents carry it.
pub fn label_frequencies<'a, I>(candidate_sets: I) -> HashMap<String, usize>
where
    I: IntoIterator<Item = &'a BTreeSet<String>>,
{
    let mut freq = HashMap::new();
    for set in candidate_sets {
        for label in set {
            *freq.entry(label.clone()).or_default() += 1;
        }
    }
    freq
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedEntry {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub documents: usize,
    pub skipped: Vec<SkippedEntry>,
    pub unknown_labels: BTreeSet<String>,
}

struct RawDoc {
    doc_id: String,
    text: String,
    raw_labels: Vec<String>,
}

fn collect_text_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_text_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "txt") {
            out.push(path);
        }
    }
    Ok(())
}

fn relative_id(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path).with_extension("");
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn read_text(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(String::from_utf8(bytes).unwrap_or_else(|e| String::from_utf8_lossy(e.as_bytes()).into_owned()))
}

fn load_one(root: &Path, path: &Path, layout: Layout) -> std::result::Result<RawDoc, String> {
    let text = read_text(path).map_err(|e| format!("unreadable text: {e}"))?;
    let doc_id = relative_id(root, path);
    let raw_labels = match layout {
        Layout::Pretrain => {
            let sidecar = path.with_extension("labels");
            let labels = std::fs::read_to_string(&sidecar)
                .map_err(|e| format!("unreadable sidecar {}: {e}", sidecar.display()))?;
            labels
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect::<Vec<_>>()
        }
        Layout::Downstream => {
            let rel = path.strip_prefix(root).unwrap_or(path);
            let mut comps = rel.components();
            match (comps.next(), comps.next()) {
                (Some(cat), Some(_)) => vec![cat.as_os_str().to_string_lossy().into_owned()],
                _ => return Err("not inside a category directory".into()),
            }
        }
    };
    if raw_labels.is_empty() {
        return Err("no labels".into());
    }
    Ok(RawDoc {
        doc_id,
        text,
        raw_labels,
    })
}

/// Reads a corpus directory into records sorted by `doc_id`.
///
/// Label resolution runs in two passes: canonical candidate sets are built for
/// every page first, then each multi-label page gets the candidate that is most
/// frequent across the whole corpus.
pub fn ingest_directory(
    src: &Path,
    layout: Layout,
    aliases: &LabelAliasTable,
) -> Result<(Vec<DocumentRecord>, IngestReport)> {
    let mut paths = Vec::new();
    collect_text_files(src, &mut paths).map_err(|e| Error::io(src, e))?;
    paths.sort();

    let loaded: Vec<(PathBuf, std::result::Result<RawDoc, String>)> = paths
        .par_iter()
        .map(|p| (p.clone(), load_one(src, p, layout)))
        .collect();

    let mut report = IngestReport::default();
    let mut docs = Vec::with_capacity(loaded.len());
    for (path, res) in loaded {
        match res {
            Ok(doc) => docs.push(doc),
            Err(reason) => {
                log::warn!("skipping {}: {reason}", path.display());
                report.skipped.push(SkippedEntry { path, reason });
            }
        }
    }
    if docs.is_empty() {
        return Err(Error::NoDocuments(src.to_path_buf()));
    }

    let candidate_sets: Vec<BTreeSet<String>> = docs
        .iter()
        .map(|d| {
            d.raw_labels
                .iter()
                .map(|raw| {
                    if aliases.lookup(raw).is_none() {
                        report.unknown_labels.insert(clean(raw));
                    }
                    normalize_label(raw, aliases)
                })
                .collect()
        })
        .collect();
    let freq = label_frequencies(&candidate_sets);

    let source = match layout {
        Layout::Pretrain => Source::PretrainCorpus,
        Layout::Downstream => Source::DownstreamCorpus,
    };
    let mut records = Vec::with_capacity(docs.len());
    for (doc, candidates) in docs.into_iter().zip(&candidate_sets) {
        let label = resolve_primary_label(candidates, &freq)?;
        records.push(DocumentRecord::new(doc.doc_id, doc.text, doc.raw_labels, source).with_label(label));
    }
    records.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    if let Some(w) = records.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
        return Err(Error::DuplicateId(w[0].doc_id.clone()));
    }
    report.documents = records.len();
    Ok((records, report))
}

/// Mean token count per canonical label, rounded to one decimal.
pub fn category_token_stats(records: &[DocumentRecord], vocab: &Vocabulary) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for record in records {
        if let Some(label) = &record.canonical_label {
            let entry = sums.entry(label.clone()).or_default();
            entry.0 += vocab.token_count(&record.ocr_text);
            entry.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(label, (total, n))| {
            let mean = total as f64 / n as f64;
            (label, (mean * 10.0).round() / 10.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::build_vocab;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn starter_table_maps_telex_variants() {
        let t = LabelAliasTable::starter();
        assert_eq!(normalize_label("tele", &t), "telex");
        assert_eq!(normalize_label("tlx", &t), "telex");
        assert_eq!(normalize_label("telex", &t), "telex");
        assert_eq!(normalize_label("  TeLe ", &t), "telex");
        assert!(t.canonical_set().contains("telex"));
    }

    #[test]
    fn unknown_label_passes_through_cleaned() {
        let t = LabelAliasTable::starter();
        assert_eq!(t.lookup("FOO "), None);
        assert_eq!(normalize_label("FOO ", &t), "foo");
    }

    #[test]
    fn conflicting_aliases_rejected() {
        assert!(LabelAliasTable::from_pairs([("a", "x"), ("a", "y")]).is_err());
        assert!(LabelAliasTable::from_pairs([("x", "y"), ("q", "x")]).is_err());
        assert!(LabelAliasTable::from_tsv("no tab here").is_err());
    }

    #[test]
    fn resolve_singleton_and_ties() {
        let freq = HashMap::new();
        assert_eq!(resolve_primary_label(&set(&["note"]), &freq).unwrap(), "note");
        let mut freq = HashMap::new();
        freq.insert("a".to_string(), 3);
        freq.insert("b".to_string(), 3);
        assert_eq!(resolve_primary_label(&set(&["b", "a"]), &freq).unwrap(), "a");
        assert!(resolve_primary_label(&BTreeSet::new(), &freq).is_err());
    }

    #[test]
    fn resolve_prefers_corpus_frequency() {
        // Frequency oracle over a synthetic corpus: telex on 3 pages, note on 2.
        let corpus = [
            set(&["telex"]),
            set(&["telex", "note"]),
            set(&["telex"]),
            set(&["note"]),
        ];
        let freq = label_frequencies(&corpus);
        assert_eq!(freq["telex"], 3);
        assert_eq!(freq["note"], 2);
        assert_eq!(resolve_primary_label(&corpus[1], &freq).unwrap(), "telex");
    }

    #[test]
    fn token_stats_mean_and_empty() {
        let vocab = build_vocab(["x"], 10, 1).unwrap();
        let ten = ["w"; 10].join(" ");
        let twenty = vec!["w"; 20].join(" ");
        let recs = vec![
            DocumentRecord::new("a", ten, vec![], Source::DownstreamCorpus).with_label("memo"),
            DocumentRecord::new("b", twenty, vec![], Source::DownstreamCorpus).with_label("memo"),
            DocumentRecord::new("c", "unlabeled", vec![], Source::DownstreamCorpus),
        ];
        let stats = category_token_stats(&recs, &vocab);
        assert_eq!(stats.len(), 1);
        assert_eq!(stats["memo"], 15.0);
        assert!(category_token_stats(&[], &vocab).is_empty());
    }

    #[test]
    fn token_stats_match_independent_recount() {
        // Oracle: count alnum-run starts and punctuation chars by hand.
        fn recount(text: &str) -> usize {
            let mut n = 0;
            let mut in_word = false;
            for c in text.chars() {
                if c.is_alphanumeric() {
                    if !in_word {
                        n += 1;
                    }
                    in_word = true;
                } else {
                    in_word = false;
                    if !c.is_whitespace() {
                        n += 1;
                    }
                }
            }
            n
        }
        let texts = [
            ("letter", "Dear Sir, thank you."),
            ("letter", "Regards -- J. Smith"),
            ("memo", "TO: all FROM: HR"),
            ("memo", "meeting @ 10:30"),
            ("memo", "ok"),
            ("budget", "Total: $1,200.00 (est.)"),
        ];
        let vocab = build_vocab(texts.iter().map(|t| t.1), 100, 1).unwrap();
        let recs: Vec<_> = texts
            .iter()
            .enumerate()
            .map(|(i, (l, t))| {
                DocumentRecord::new(i.to_string(), *t, vec![], Source::DownstreamCorpus).with_label(*l)
            })
            .collect();
        let stats = category_token_stats(&recs, &vocab);
        let mut expected: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for (l, t) in texts {
            let e = expected.entry(l.to_string()).or_default();
            e.0 += recount(t);
            e.1 += 1;
        }
        for (label, (total, n)) in expected {
            let mean = ((total as f64 / n as f64) * 10.0).round() / 10.0;
            assert_eq!(stats[&label], mean, "label {label}");
        }
    }

    fn write(path: &Path, body: &str) {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, body).unwrap();
    }

    #[test]
    fn empty_directory_errors() {
        let dir = tempfile::tempdir().unwrap();
        let err = ingest_directory(dir.path(), Layout::Downstream, &LabelAliasTable::starter()).unwrap_err();
        assert!(matches!(err, Error::NoDocuments(_)));
        assert!(err.to_string().contains("no documents found"));
    }

    #[test]
    fn downstream_layout_uses_directory_category() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("email/0001.txt"), "From: a To: b");
        write(&dir.path().join("memo/0002.txt"), "Memo text");
        write(&dir.path().join("stray.txt"), "not in a category");
        let (recs, report) =
            ingest_directory(dir.path(), Layout::Downstream, &LabelAliasTable::starter()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].doc_id, "email/0001");
        assert_eq!(recs[0].canonical_label.as_deref(), Some("email"));
        assert_eq!(recs[0].raw_labels, vec!["email"]);
        assert_eq!(recs[0].source, Source::DownstreamCorpus);
        assert_eq!(report.skipped.len(), 1);
    }

    #[test]
    fn pretrain_layout_resolves_multi_labels() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        write(&root.join("a.txt"), "page a");
        write(&root.join("a.labels"), "tlx\nnote\n");
        write(&root.join("b.txt"), "page b");
        write(&root.join("b.labels"), "telex\n");
        write(&root.join("c.txt"), "page c");
        write(&root.join("c.labels"), "Tele\n");
        write(&root.join("d.txt"), "no sidecar");
        let (recs, report) = ingest_directory(root, Layout::Pretrain, &LabelAliasTable::starter()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].raw_labels, vec!["tlx", "note"]);
        assert_eq!(recs[0].canonical_label.as_deref(), Some("telex"));
        assert_eq!(report.skipped.len(), 1);
        let again = ingest_directory(root, Layout::Pretrain, &LabelAliasTable::starter()).unwrap().0;
        assert_eq!(again, recs);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in "[ A-Za-z\\-]{0,12}") {
            let t = LabelAliasTable::starter();
            let once = normalize_label(&raw, &t);
            prop_assert_eq!(normalize_label(&once, &t), once);
        }
    }
}
