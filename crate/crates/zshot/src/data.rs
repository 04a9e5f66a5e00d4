//! Corpus ingestion, vocabulary construction, domain registry and the
//! deterministic sampling utilities the experiments are built on.
//!
//! Corpus files are UTF-8 JSONL, one record per line:
//! `{"id": "...", "source": ["tok", ...], "target": ["tok", ...], "domain": "name"}`.
//! Targets are normalized to end with the reserved `<eos>` token on load.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const EOS_TOKEN: &str = "<eos>";

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate example id `{0}`")]
    DuplicateId(String),
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("domain `{domain}` has {available} examples, {requested} requested")]
    NotEnoughExamples { domain: String, requested: usize, available: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Index of one registered domain, in `[0, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskId(pub usize);

impl TaskId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Stable name <-> index mapping for the K domains of a run.
///
/// Indices are assigned in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainRegistry {
    names: Vec<String>,
}

impl DomainRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, task: TaskId) -> &str {
        &self.names[task.0]
    }

    pub fn get(&self, name: &str) -> Option<TaskId> {
        self.names.iter().position(|n| n == name).map(TaskId)
    }

    pub fn resolve(&self, name: &str) -> Result<TaskId, DataError> {
        self.get(name).ok_or_else(|| DataError::UnknownDomain(name.to_string()))
    }

    pub fn register(&mut self, name: &str) -> TaskId {
        if let Some(t) = self.get(name) {
            return t;
        }
        self.names.push(name.to_string());
        TaskId(self.names.len() - 1)
    }
}

/// One training or test triple: source tokens, target tokens, domain label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub id: String,
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub domain: TaskId,
}

/// Examples of exactly one domain.
#[derive(Debug, Clone)]
pub struct DomainBatch {
    pub domain: TaskId,
    pub examples: Vec<Example>,
}

impl DomainBatch {
    pub fn new(domain: TaskId, examples: Vec<Example>) -> Result<Self, DataError> {
        if let Some(bad) = examples.iter().find(|e| e.domain != domain) {
            return Err(DataError::Argument(format!(
                "example `{}` belongs to domain {} not {}",
                bad.id,
                bad.domain.index(),
                domain.index()
            )));
        }
        Ok(DomainBatch { domain, examples })
    }

    /// All examples of `domain` in corpus order.
    pub fn from_examples(domain: TaskId, examples: &[Example]) -> Self {
        DomainBatch {
            domain,
            examples: examples.iter().filter(|e| e.domain == domain).cloned().collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    id: String,
    source: Vec<String>,
    target: Vec<String>,
    domain: String,
}

/// Loaded corpus plus the registry built while reading it.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub examples: Vec<Example>,
    pub registry: DomainRegistry,
}

impl Corpus {
    pub fn domain_examples(&self, domain: TaskId) -> Vec<Example> {
        self.examples.iter().filter(|e| e.domain == domain).cloned().collect()
    }
}

fn parse_line(
    line: &str,
    line_no: usize,
    registry: &mut DomainRegistry,
    strict: bool,
    seen: &mut HashSet<String>,
) -> Result<Example, DataError> {
    let raw: RawRecord = serde_json::from_str(line)
        .map_err(|e| DataError::Parse { line: line_no, msg: e.to_string() })?;
    if raw.source.is_empty() {
        return Err(DataError::Parse { line: line_no, msg: "empty source".into() });
    }
    if raw.target.is_empty() {
        return Err(DataError::Parse { line: line_no, msg: "empty target".into() });
    }
    if !seen.insert(raw.id.clone()) {
        return Err(DataError::DuplicateId(raw.id));
    }
    let domain = if strict {
        registry.resolve(&raw.domain)?
    } else {
        registry.register(&raw.domain)
    };
    let mut target = raw.target;
    if target.last().map(String::as_str) != Some(EOS_TOKEN) {
        target.push(EOS_TOKEN.to_string());
    }
    Ok(Example { id: raw.id, source: raw.source, target, domain })
}

/// Loads a JSONL corpus, registering domains in order of first appearance.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, DataError> {
    let mut registry = DomainRegistry::new();
    let examples = load_lines(path, &mut registry, false)?;
    Ok(Corpus { examples, registry })
}

/// Loads a corpus against a fixed registry; unseen domain names are errors.
pub fn load_corpus_with(
    path: impl AsRef<Path>,
    registry: &DomainRegistry,
) -> Result<Vec<Example>, DataError> {
    let mut reg = registry.clone();
    load_lines(path, &mut reg, true)
}

fn load_lines(
    path: impl AsRef<Path>,
    registry: &mut DomainRegistry,
    strict: bool,
) -> Result<Vec<Example>, DataError> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line(&line, i + 1, registry, strict, &mut seen)?);
    }
    Ok(out)
}

/// Writes examples in the canonical JSONL format (compact JSON, field order
/// id/source/target/domain, trailing newline per record).
pub fn write_corpus(
    path: impl AsRef<Path>,
    examples: &[Example],
    registry: &DomainRegistry,
) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path)
        .map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
    let mut w = BufWriter::new(file);
    for e in examples {
        let raw = RawRecord {
            id: e.id.clone(),
            source: e.source.clone(),
            target: e.target.clone(),
            domain: registry.name(e.domain).to_string(),
        };
        let line = serde_json::to_string(&raw).expect("record serialization cannot fail");
        writeln!(w, "{line}").map_err(|e| DataError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    w.flush().map_err(|e| DataError::Io { path: path.display().to_string(), source: e })
}

/// Token <-> index map with reserved entries and a copy-position block.
///
/// Indices `[0, size)` are vocabulary entries (`<pad>`, `<unk>`, `<eos>`
/// first); indices `[size, size + max_source_len)` address source positions
/// for the copy mechanism and never collide with vocabulary indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabData", into = "VocabData")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    max_source_len: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabData {
    tokens: Vec<String>,
    max_source_len: usize,
}

impl From<VocabData> for Vocab {
    fn from(data: VocabData) -> Self {
        Vocab::from_tokens(data.tokens, data.max_source_len)
    }
}

impl From<Vocab> for VocabData {
    fn from(v: Vocab) -> Self {
        VocabData { tokens: v.tokens, max_source_len: v.max_source_len }
    }
}

impl Vocab {
    pub const PAD: usize = 0;
    pub const UNK: usize = 1;
    pub const EOS: usize = 2;

    fn from_tokens(tokens: Vec<String>, max_source_len: usize) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab { tokens, index, max_source_len }
    }

    /// Number of vocabulary entries, reserved ones included, copy block
    /// excluded.
    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn max_source_len(&self) -> usize {
        self.max_source_len
    }

    /// First copy-position index.
    pub fn copy_base(&self) -> usize {
        self.tokens.len()
    }

    pub fn total_indices(&self) -> usize {
        self.tokens.len() + self.max_source_len
    }

    /// Vocabulary index for a token, `UNK` when absent.
    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(Self::UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn is_copy_index(&self, idx: usize) -> bool {
        idx >= self.copy_base() && idx < self.total_indices()
    }
}

/// Builds a vocabulary over source and target tokens with count >=
/// `min_count`. Index assignment is deterministic: count descending, then
/// token lexicographic.
pub fn build_vocab(examples: &[Example], min_count: usize) -> Result<Vocab, DataError> {
    if min_count < 1 {
        return Err(DataError::Argument(format!("min_count must be >= 1, got {min_count}")));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut max_source_len = 0;
    for e in examples {
        max_source_len = max_source_len.max(e.source.len());
        for tok in e.source.iter().chain(&e.target) {
            if tok == PAD_TOKEN || tok == UNK_TOKEN || tok == EOS_TOKEN {
                continue;
            }
            *counts.entry(tok.as_str()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> =
        counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string(), EOS_TOKEN.to_string()];
    tokens.extend(ranked.into_iter().map(|(t, _)| t.to_string()));
    Ok(Vocab::from_tokens(tokens, max_source_len))
}

/// Extends the copy block so sources up to `len` tokens are addressable
/// (used when evaluation sources are longer than anything in training).
pub fn widen_copy_block(vocab: &mut Vocab, len: usize) {
    vocab.max_source_len = vocab.max_source_len.max(len);
}

fn domain_rng(seed: u64, domain: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (domain as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Draws nested per-domain subsets of the requested sizes.
///
/// The size-`s` subset of every domain is a prefix of the size-`s'` subset
/// for `s <= s'`, so learning curves are monotone in data rather than
/// resampled. Deterministic given the seed.
pub fn sample_subsets(
    examples: &[Example],
    registry: &DomainRegistry,
    sizes: &[usize],
    seed: u64,
) -> Result<BTreeMap<usize, Vec<Example>>, DataError> {
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(DataError::Argument("sizes must be sorted ascending".into()));
    }
    let mut per_domain: Vec<Vec<&Example>> = vec![Vec::new(); registry.len()];
    for e in examples {
        per_domain[e.domain.index()].push(e);
    }
    for order in per_domain.iter_mut() {
        let domain = order.first().map(|e| e.domain.index()).unwrap_or(0);
        let mut rng = domain_rng(seed, domain);
        order.shuffle(&mut rng);
    }
    let mut out = BTreeMap::new();
    for &size in sizes {
        let mut subset = Vec::new();
        for (d, order) in per_domain.iter().enumerate() {
            if order.len() < size {
                return Err(DataError::NotEnoughExamples {
                    domain: registry.names()[d].clone(),
                    requested: size,
                    available: order.len(),
                });
            }
            subset.extend(order[..size].iter().map(|&e| e.clone()));
        }
        out.insert(size, subset);
    }
    Ok(out)
}

/// Relabels `ceil(fraction * |from|)` uniformly chosen examples of domain
/// `from` as domain `to`. Returns the modified corpus and the ground-truth
/// set of flipped ids.
pub fn flip_labels(
    examples: &[Example],
    from: TaskId,
    to: TaskId,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<Example>, BTreeSet<String>), DataError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DataError::Argument(format!("fraction must be in (0, 1], got {fraction}")));
    }
    if from == to {
        return Err(DataError::Argument("from and to domains must differ".into()));
    }
    let candidates: Vec<usize> = examples
        .iter()
        .enumerate()
        .filter(|(_, e)| e.domain == from)
        .map(|(i, _)| i)
        .collect();
    if candidates.is_empty() {
        return Err(DataError::Argument(format!(
            "no examples in source domain {}",
            from.index()
        )));
    }
    let n_flip = (fraction * candidates.len() as f64).ceil() as usize;
    let mut order = candidates;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let chosen: BTreeSet<usize> = order.into_iter().take(n_flip).collect();

    let mut out = examples.to_vec();
    let mut flipped = BTreeSet::new();
    for &i in &chosen {
        out[i].domain = to;
        flipped.insert(out[i].id.clone());
    }
    Ok((out, flipped))
}

/// Ground-truth record of one flipped example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipRecord {
    pub id: String,
    pub original_domain: String,
    pub flipped_domain: String,
}

pub fn write_flip_manifest(
    path: impl AsRef<Path>,
    records: &[FlipRecord],
) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path)
        .map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("flip record serialization cannot fail");
        writeln!(w, "{line}")
            .map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
    }
    w.flush().map_err(|e| DataError::Io { path: path.display().to_string(), source: e })
}

pub fn read_flip_manifest(path: impl AsRef<Path>) -> Result<Vec<FlipRecord>, DataError> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| DataError::Parse { line: i + 1, msg: e.to_string() })?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    fn ex(id: &str, source: &[&str], target: &[&str], domain: usize) -> Example {
        let mut target: Vec<String> = target.iter().map(|s| s.to_string()).collect();
        if target.last().map(String::as_str) != Some(EOS_TOKEN) {
            target.push(EOS_TOKEN.into());
        }
        Example {
            id: id.into(),
            source: source.iter().map(|s| s.to_string()).collect(),
            target,
            domain: TaskId(domain),
        }
    }

    #[test]
    fn load_registers_domains_in_order() {
        let f = write_lines(&[
            r#"{"id":"a","source":["x"],"target":["y","<eos>"],"domain":"calendar"}"#,
            r#"{"id":"b","source":["z"],"target":["w","<eos>"],"domain":"atis"}"#,
        ]);
        let corpus = load_corpus(f.path()).unwrap();
        assert_eq!(corpus.examples.len(), 2);
        assert_eq!(corpus.registry.len(), 2);
        assert_eq!(corpus.registry.name(TaskId(0)), "calendar");
        assert_eq!(corpus.registry.name(TaskId(1)), "atis");
    }

    #[test]
    fn empty_file_is_valid_with_zero_domains() {
        let f = write_lines(&[]);
        let corpus = load_corpus(f.path()).unwrap();
        assert!(corpus.examples.is_empty());
        assert_eq!(corpus.registry.len(), 0);
    }

    #[test]
    fn missing_target_is_a_parse_error_with_line_number() {
        let f = write_lines(&[
            r#"{"id":"a","source":["x"],"target":["y"],"domain":"d"}"#,
            r#"{"id":"b","source":["x"],"domain":"d"}"#,
        ]);
        match load_corpus(f.path()) {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let f = write_lines(&[
            r#"{"id":"a","source":["x"],"target":["y"],"domain":"d"}"#,
            r#"{"id":"a","source":["x"],"target":["y"],"domain":"d"}"#,
        ]);
        assert!(matches!(load_corpus(f.path()), Err(DataError::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn strict_load_rejects_unknown_domain() {
        let f = write_lines(&[r#"{"id":"a","source":["x"],"target":["y"],"domain":"new"}"#]);
        let mut registry = DomainRegistry::new();
        registry.register("old");
        match load_corpus_with(f.path(), &registry) {
            Err(DataError::UnknownDomain(d)) => assert_eq!(d, "new"),
            other => panic!("expected unknown-domain error, got {other:?}"),
        }
    }

    #[test]
    fn eos_is_appended_when_missing() {
        let f = write_lines(&[r#"{"id":"a","source":["x"],"target":["y"],"domain":"d"}"#]);
        let corpus = load_corpus(f.path()).unwrap();
        assert_eq!(corpus.examples[0].target, vec!["y".to_string(), EOS_TOKEN.to_string()]);
    }

    #[test]
    fn round_trip_is_byte_identical_for_canonical_files() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("c1.jsonl");
        let p2 = dir.path().join("c2.jsonl");
        let examples =
            vec![ex("a", &["list", "all"], &["(", "list", ")"], 0), ex("b", &["x"], &["y"], 1)];
        let mut registry = DomainRegistry::new();
        registry.register("calendar");
        registry.register("atis");
        write_corpus(&p1, &examples, &registry).unwrap();
        let loaded = load_corpus(&p1).unwrap();
        write_corpus(&p2, &loaded.examples, &loaded.registry).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn vocab_respects_min_count() {
        let examples = vec![ex("1", &["a", "a", "a"], &["b"], 0)];
        let vocab = build_vocab(&examples, 2).unwrap();
        assert!(vocab.contains("a"));
        assert!(!vocab.contains("b"));
        assert_eq!(vocab.lookup("b"), Vocab::UNK);
    }

    #[test]
    fn vocab_keeps_union_and_breaks_ties_lexicographically() {
        let examples = vec![ex("1", &["b", "b"], &["a", "a"], 0), ex("2", &["src"], &["tgt"], 0)];
        let vocab = build_vocab(&examples, 1).unwrap();
        assert!(vocab.contains("src") && vocab.contains("tgt"));
        // a and b both have count 2: a first
        assert_eq!(vocab.lookup("a"), 3);
        assert_eq!(vocab.lookup("b"), 4);
        // reserved entries occupy 0..3
        assert_eq!(vocab.lookup(PAD_TOKEN), Vocab::PAD);
        assert_eq!(vocab.lookup(EOS_TOKEN), Vocab::EOS);
    }

    #[test]
    fn copy_indices_do_not_collide() {
        let examples = vec![ex("1", &["a", "b", "c"], &["a"], 0)];
        let vocab = build_vocab(&examples, 1).unwrap();
        assert_eq!(vocab.max_source_len(), 3);
        assert_eq!(vocab.copy_base(), vocab.size());
        assert!(vocab.is_copy_index(vocab.size()));
        assert!(!vocab.is_copy_index(vocab.size() - 1));
    }

    fn numbered_examples(n: usize, domain: usize) -> Vec<Example> {
        (0..n).map(|i| ex(&format!("d{domain}-{i}"), &["s"], &["t"], domain)).collect()
    }

    #[test]
    fn subsets_nest_and_are_deterministic() {
        let mut registry = DomainRegistry::new();
        registry.register("a");
        registry.register("b");
        let mut examples = numbered_examples(10, 0);
        examples.extend(numbered_examples(10, 1));

        let s1 = sample_subsets(&examples, &registry, &[2, 4], 7).unwrap();
        let s2 = sample_subsets(&examples, &registry, &[2, 4], 7).unwrap();
        assert_eq!(s1, s2);

        let ids2: BTreeSet<&str> = s1[&2].iter().map(|e| e.id.as_str()).collect();
        let ids4: BTreeSet<&str> = s1[&4].iter().map(|e| e.id.as_str()).collect();
        assert!(ids2.is_subset(&ids4));
        assert_eq!(s1[&2].len(), 4); // 2 per domain
        assert_eq!(s1[&4].len(), 8);
    }

    #[test]
    fn full_ladder_of_nested_subsets() {
        let mut registry = DomainRegistry::new();
        registry.register("a");
        let examples = numbered_examples(100, 0);
        let sizes: Vec<usize> = (1..=10).map(|k| k * 10).collect();
        let subsets = sample_subsets(&examples, &registry, &sizes, 3).unwrap();
        assert_eq!(subsets.len(), 10);
        let mut prev: Option<BTreeSet<String>> = None;
        for (_, subset) in subsets {
            let ids: BTreeSet<String> = subset.iter().map(|e| e.id.clone()).collect();
            if let Some(p) = &prev {
                assert!(p.is_subset(&ids));
            }
            prev = Some(ids);
        }
    }

    #[test]
    fn oversized_subset_request_names_the_domain() {
        let mut registry = DomainRegistry::new();
        registry.register("tiny");
        let examples = numbered_examples(3, 0);
        match sample_subsets(&examples, &registry, &[5], 0) {
            Err(DataError::NotEnoughExamples { domain, .. }) => assert_eq!(domain, "tiny"),
            other => panic!("expected size error, got {other:?}"),
        }
    }

    #[test]
    fn flip_labels_ceiling_and_ground_truth() {
        let examples = numbered_examples(100, 0)
            .into_iter()
            .chain(numbered_examples(5, 1))
            .collect::<Vec<_>>();
        let (flipped, ids) = flip_labels(&examples, TaskId(0), TaskId(1), 0.05, 11).unwrap();
        assert_eq!(ids.len(), 5);
        let relabeled: BTreeSet<&str> = flipped
            .iter()
            .zip(&examples)
            .filter(|(f, o)| f.domain != o.domain)
            .map(|(f, _)| f.id.as_str())
            .collect();
        assert_eq!(relabeled, ids.iter().map(String::as_str).collect());
        // sources/targets untouched
        for (f, o) in flipped.iter().zip(&examples) {
            assert_eq!(f.source, o.source);
            assert_eq!(f.target, o.target);
        }
    }

    #[test]
    fn flip_all_relabels_every_source_example() {
        let examples: Vec<Example> =
            numbered_examples(4, 0).into_iter().chain(numbered_examples(2, 1)).collect();
        let (flipped, ids) = flip_labels(&examples, TaskId(0), TaskId(1), 1.0, 0).unwrap();
        assert_eq!(ids.len(), 4);
        assert!(flipped.iter().all(|e| e.domain == TaskId(1)));
    }

    #[test]
    fn flip_requires_source_examples_and_valid_fraction() {
        let examples = numbered_examples(4, 0);
        assert!(flip_labels(&examples, TaskId(1), TaskId(0), 0.5, 0).is_err());
        assert!(flip_labels(&examples, TaskId(0), TaskId(1), 0.0, 0).is_err());
        assert!(flip_labels(&examples, TaskId(0), TaskId(0), 0.5, 0).is_err());
    }

    #[test]
    fn flip_manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("flips.jsonl");
        let records = vec![FlipRecord {
            id: "x".into(),
            original_domain: "atis".into(),
            flipped_domain: "calendar".into(),
        }];
        write_flip_manifest(&p, &records).unwrap();
        assert_eq!(read_flip_manifest(&p).unwrap(), records);
    }
}
