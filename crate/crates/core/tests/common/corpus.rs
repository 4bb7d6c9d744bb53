//! Synthetic OCR-like corpora with planted duplicates, empties and short
//! pages.

use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use docsum_core::model::{DocumentRecord, Source};

const WORDS: &[&str] = &[
    "memo", "budget", "invoice", "total", "program", "catalogue", "direct", "mail", "meeting", "subject",
    "corporation", "research", "report", "date", "sender", "recipient", "fax", "telex", "tobacco", "sales",
    "1989", "1979", "dr", "lane", "regional", "larvicide", "conference", "room", "holiday", "mailing", "pos",
    "number", "assignment", "offensive", "page", "copy", "reference", "account", "payment", "amount",
];

pub const CATEGORIES: &[&str] = &["memo", "letter", "email", "budget", "invoice"];

pub fn page(rng: &mut ChaCha8Rng, words: usize) -> String {
    let mut out = Vec::with_capacity(words);
    for i in 0..words {
        let w = *WORDS.choose(rng).unwrap();
        if rng.random_bool(0.05) {
            out.push(format!("{w}{}", ["l", "1", "rn"].choose(rng).unwrap()));
        } else {
            out.push(w.to_string());
        }
        if i % 13 == 12 {
            out.last_mut().unwrap().push('.');
        }
    }
    out.join(" ")
}

/// Plan for a synthetic corpus: `unique` distinct long pages plus planted
/// problem pages.
pub struct Plan {
    pub unique: usize,
    pub duplicates: usize,
    pub empties: usize,
    pub short: usize,
}

/// Records laid out so that every planted duplicate sorts after its
/// original.
pub fn records(plan: &Plan, seed: u64) -> Vec<DocumentRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut originals = Vec::new();
    for i in 0..plan.unique {
        let n = rng.random_range(100..220);
        let text = page(&mut rng, n);
        originals.push(text.clone());
        let label = CATEGORIES[i % CATEGORIES.len()];
        out.push(DocumentRecord::new(format!("a{i:05}"), text, vec![label.into()], Source::DownstreamCorpus).with_label(label));
    }
    for i in 0..plan.duplicates {
        // Same content with different case and spacing.
        let text = originals[i % originals.len()].to_uppercase().replace(' ', "  ");
        out.push(DocumentRecord::new(format!("b{i:05}"), text, vec!["memo".into()], Source::DownstreamCorpus).with_label("memo"));
    }
    for i in 0..plan.empties {
        let text = if i % 2 == 0 { String::new() } else { " \n\t ".to_string() };
        out.push(DocumentRecord::new(format!("c{i:05}"), text, vec!["memo".into()], Source::DownstreamCorpus).with_label("memo"));
    }
    for i in 0..plan.short {
        let n = rng.random_range(1..100);
        let text = format!("short{i} {}", page(&mut rng, n - 1));
        out.push(DocumentRecord::new(format!("d{i:05}"), text.trim().to_string(), vec!["note".into()], Source::DownstreamCorpus).with_label("note"));
    }
    out
}

/// Writes a downstream-layout directory: `<category>/<id>.txt`.
pub fn write_downstream_dir(root: &Path, docs: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..docs {
        let category = CATEGORIES[i % CATEGORIES.len()];
        let dir = root.join(category);
        std::fs::create_dir_all(&dir).unwrap();
        let text = if i % 17 == 16 {
            page(&mut rng, 30)
        } else {
            let n = rng.random_range(110..400);
            page(&mut rng, n)
        };
        std::fs::write(dir.join(format!("{i:04}.txt")), text).unwrap();
    }
}
