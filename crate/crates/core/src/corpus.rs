//! Corpus ingestion: streams a sentence-per-line text file into an indexed
//! vocabulary with sentence-level document frequencies.
//!
//! The unit of counting is sentence presence: `sentence_freq` is the number
//! of distinct sentences a word occurs in, which is the margin the
//! co-occurrence contingency tables are built from. `token_freq` is kept as
//! metadata only.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tsv;

pub type WordId = u32;

/// How a leading `ID<TAB>sentence` column is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdColumn {
    /// Strip a leading numeric field when one is present.
    Auto,
    /// Require and strip the leading field; lines without a tab count as malformed.
    Always,
    /// Treat the whole line as sentence text.
    Never,
}

#[derive(Debug, Clone)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub id_column: IdColumn,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: false,
            strip_punctuation: false,
            id_column: IdColumn::Auto,
        }
    }
}

/// Splits one line into tokens. Returns `None` when the line is structurally
/// malformed under the config (`IdColumn::Always` with no tab).
pub fn tokenize(line: &str, cfg: &TokenizerConfig) -> Option<Vec<String>> {
    let body = match cfg.id_column {
        IdColumn::Never => line,
        IdColumn::Auto => match line.split_once('\t') {
            Some((id, rest)) if !id.is_empty() && id.bytes().all(|b| b.is_ascii_digit()) => rest,
            _ => line,
        },
        IdColumn::Always => match line.split_once('\t') {
            Some((_, rest)) => rest,
            None => return None,
        },
    };
    let mut tokens = Vec::new();
    for raw in body.split_whitespace() {
        let tok = if cfg.strip_punctuation {
            raw.trim_matches(|c: char| !c.is_alphanumeric())
        } else {
            raw
        };
        if tok.is_empty() {
            continue;
        }
        tokens.push(if cfg.lowercase { tok.to_lowercase() } else { tok.to_string() });
    }
    Some(tokens)
}

/// One tokenized sentence with its ingestion-order ordinal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceRecord {
    pub sentence_id: u64,
    pub tokens: Vec<String>,
}

/// Sequential reader yielding tokenized sentences with strictly increasing
/// ids. Malformed and empty lines are skipped and tallied.
pub struct SentenceReader<R: BufRead> {
    reader: R,
    cfg: TokenizerConfig,
    next_id: u64,
    pub diagnostics: IngestDiagnostics,
    buf: Vec<u8>,
}

impl<R: BufRead> SentenceReader<R> {
    pub fn new(reader: R, cfg: TokenizerConfig) -> Self {
        SentenceReader {
            reader,
            cfg,
            next_id: 0,
            diagnostics: IngestDiagnostics::default(),
            buf: Vec::new(),
        }
    }
}

impl<R: BufRead> Iterator for SentenceReader<R> {
    type Item = Result<SentenceRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            match tokenize_raw(&self.buf, &self.cfg) {
                LineOutcome::Sentence(tokens) => {
                    let id = self.next_id;
                    self.next_id += 1;
                    return Some(Ok(SentenceRecord { sentence_id: id, tokens }));
                }
                LineOutcome::Empty => self.diagnostics.empty_lines += 1,
                LineOutcome::Malformed => self.diagnostics.malformed_lines += 1,
            }
        }
    }
}

enum LineOutcome {
    Sentence(Vec<String>),
    Empty,
    Malformed,
}

fn tokenize_raw(raw: &[u8], cfg: &TokenizerConfig) -> LineOutcome {
    let mut raw = raw;
    if raw.last() == Some(&b'\n') {
        raw = &raw[..raw.len() - 1];
    }
    if raw.last() == Some(&b'\r') {
        raw = &raw[..raw.len() - 1];
    }
    let line = match std::str::from_utf8(raw) {
        Ok(s) => s,
        Err(_) => return LineOutcome::Malformed,
    };
    match tokenize(line, cfg) {
        None => LineOutcome::Malformed,
        Some(tokens) if tokens.is_empty() => LineOutcome::Empty,
        Some(tokens) => LineOutcome::Sentence(tokens),
    }
}

/// Per-line problems tallied during ingestion instead of aborting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestDiagnostics {
    pub malformed_lines: u64,
    pub empty_lines: u64,
}

impl IngestDiagnostics {
    fn merge(&mut self, other: &IngestDiagnostics) {
        self.malformed_lines += other.malformed_lines;
        self.empty_lines += other.empty_lines;
    }
}

/// Raw per-shard counts. Merging is associative and commutative, so any
/// partition of the corpus lines produces identical totals.
#[derive(Debug, Default)]
pub struct ShardCounts {
    pub n_sentences: u64,
    /// word -> (sentence_freq, token_freq)
    pub words: HashMap<String, (u64, u64)>,
    pub diagnostics: IngestDiagnostics,
}

impl ShardCounts {
    pub fn count_line(&mut self, raw: &[u8], cfg: &TokenizerConfig) {
        match tokenize_raw(raw, cfg) {
            LineOutcome::Malformed => self.diagnostics.malformed_lines += 1,
            LineOutcome::Empty => self.diagnostics.empty_lines += 1,
            LineOutcome::Sentence(tokens) => self.count_sentence(&tokens),
        }
    }

    pub fn count_sentence(&mut self, tokens: &[String]) {
        if tokens.is_empty() {
            self.diagnostics.empty_lines += 1;
            return;
        }
        self.n_sentences += 1;
        let mut seen: HashSet<&str> = HashSet::with_capacity(tokens.len());
        for tok in tokens {
            let entry = self.words.entry(tok.clone()).or_insert((0, 0));
            entry.1 += 1;
            if seen.insert(tok.as_str()) {
                entry.0 += 1;
            }
        }
    }

    pub fn merge(mut self, other: ShardCounts) -> ShardCounts {
        // Fold the smaller map into the larger one.
        let (mut big, small) = if self.words.len() >= other.words.len() {
            self.diagnostics.merge(&other.diagnostics);
            self.n_sentences += other.n_sentences;
            (self, other)
        } else {
            let mut o = other;
            o.diagnostics.merge(&self.diagnostics);
            o.n_sentences += self.n_sentences;
            (o, self)
        };
        for (word, (sf, tf)) in small.words {
            let entry = big.words.entry(word).or_insert((0, 0));
            entry.0 += sf;
            entry.1 += tf;
        }
        big
    }
}

/// Reads raw lines in batches and folds them through `shard_fold`, splitting
/// each batch across `threads` workers. Counts are merge-invariant, so the
/// result is identical for any thread count.
pub(crate) fn fold_line_shards<R, S, F>(
    mut reader: R,
    threads: usize,
    init: impl Fn() -> S + Sync,
    shard_fold: F,
    merge: impl Fn(S, S) -> S + Sync,
) -> Result<S>
where
    R: BufRead,
    S: Send,
    F: Fn(&[Vec<u8>]) -> S + Sync,
{
    const BATCH_LINES: usize = 16_384;
    let threads = threads.max(1);
    let pool = if threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    let mut acc = init();
    let mut batch: Vec<Vec<u8>> = Vec::with_capacity(BATCH_LINES);
    loop {
        let mut line = Vec::new();
        let n = reader.read_until(b'\n', &mut line)?;
        if n > 0 {
            batch.push(line);
        }
        let end = n == 0;
        if batch.len() >= BATCH_LINES || (end && !batch.is_empty()) {
            let folded = match &pool {
                None => shard_fold(&batch),
                Some(pool) => {
                    let chunk = batch.len().div_ceil(threads);
                    pool.install(|| {
                        batch
                            .par_chunks(chunk)
                            .map(&shard_fold)
                            .reduce_with(&merge)
                            .unwrap_or_else(&init)
                    })
                }
            };
            acc = merge(acc, folded);
            batch.clear();
        }
        if end {
            break;
        }
    }
    Ok(acc)
}

/// Which frequency the Leipzig-style class is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreqBasis {
    Sentence,
    Token,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VocabEntry {
    pub word: String,
    /// Number of distinct sentences containing the word.
    pub sentence_freq: u64,
    /// Total occurrence count.
    pub token_freq: u64,
    /// 1-based rank by sentence frequency descending, ties lexicographic.
    pub freq_rank: u32,
    /// round(log2(f_max / freq)), 0 for the most frequent word.
    pub freq_class: u32,
}

#[derive(Debug)]
pub struct CorpusIndex {
    n_sentences: u64,
    f_max: u64,
    freq_basis: FreqBasis,
    entries: Vec<VocabEntry>,
    by_word: HashMap<String, WordId>,
    diagnostics: IngestDiagnostics,
}

/// Leipzig-style frequency class: the most frequent word is about
/// 2^class times more frequent than the given word. Rounding is
/// half-away-from-zero.
pub fn frequency_class_of(f_max: u64, freq: u64) -> u32 {
    debug_assert!(freq >= 1 && freq <= f_max);
    (f_max as f64 / freq as f64).log2().round() as u32
}

impl CorpusIndex {
    /// Finalizes merged shard counts into an immutable index.
    pub fn from_counts(counts: ShardCounts, freq_basis: FreqBasis) -> Result<CorpusIndex> {
        if counts.n_sentences == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut items: Vec<(String, u64, u64)> = counts
            .words
            .into_iter()
            .map(|(w, (sf, tf))| (w, sf, tf))
            .collect();
        items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let f_max = items[0].1;
        let class_max = match freq_basis {
            FreqBasis::Sentence => f_max,
            FreqBasis::Token => items.iter().map(|it| it.2).max().unwrap_or(1),
        };
        let mut entries = Vec::with_capacity(items.len());
        let mut by_word = HashMap::with_capacity(items.len());
        for (rank0, (word, sf, tf)) in items.into_iter().enumerate() {
            let class_freq = match freq_basis {
                FreqBasis::Sentence => sf,
                FreqBasis::Token => tf,
            };
            by_word.insert(word.clone(), rank0 as WordId);
            entries.push(VocabEntry {
                word,
                sentence_freq: sf,
                token_freq: tf,
                freq_rank: rank0 as u32 + 1,
                freq_class: frequency_class_of(class_max, class_freq),
            });
        }
        Ok(CorpusIndex {
            n_sentences: counts.n_sentences,
            f_max,
            freq_basis,
            entries,
            by_word,
            diagnostics: counts.diagnostics,
        })
    }

    pub fn n_sentences(&self) -> u64 {
        self.n_sentences
    }

    pub fn f_max(&self) -> u64 {
        self.f_max
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn diagnostics(&self) -> IngestDiagnostics {
        self.diagnostics
    }

    pub fn freq_basis(&self) -> FreqBasis {
        self.freq_basis
    }

    pub fn id_of(&self, word: &str) -> Option<WordId> {
        self.by_word.get(word).copied()
    }

    pub fn entry(&self, word: &str) -> Option<&VocabEntry> {
        self.id_of(word).map(|id| &self.entries[id as usize])
    }

    pub fn entry_by_id(&self, id: WordId) -> &VocabEntry {
        &self.entries[id as usize]
    }

    pub fn word_of(&self, id: WordId) -> &str {
        &self.entries[id as usize].word
    }

    /// Entries in rank order (most frequent first).
    pub fn iter(&self) -> impl Iterator<Item = &VocabEntry> {
        self.entries.iter()
    }

    pub fn frequency_class(&self, word: &str) -> Result<u32> {
        self.entry(word)
            .map(|e| e.freq_class)
            .ok_or_else(|| Error::UnknownWord(word.to_string()))
    }

    /// The `k` highest-sentence-frequency words, ties lexicographic. Asking
    /// for more words than exist returns all of them.
    pub fn top_frequent(&self, k: usize) -> Vec<&str> {
        self.entries
            .iter()
            .take(k)
            .map(|e| e.word.as_str())
            .collect()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        let basis = match self.freq_basis {
            FreqBasis::Sentence => "sentence",
            FreqBasis::Token => "token",
        };
        writeln!(
            w,
            "#n_sentences={}\tf_max={}\tfreq_basis={}\tmalformed_lines={}\tempty_lines={}",
            self.n_sentences,
            self.f_max,
            basis,
            self.diagnostics.malformed_lines,
            self.diagnostics.empty_lines
        )?;
        for e in &self.entries {
            tsv::check_no_tab(&e.word, "word")?;
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                e.word, e.sentence_freq, e.token_freq, e.freq_rank, e.freq_class
            )?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<CorpusIndex> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("index file is empty".into()))??;
        if !header.starts_with('#') {
            return Err(Error::Format("index file missing # header line".into()));
        }
        let mut n_sentences = None;
        let mut f_max = None;
        let mut freq_basis = FreqBasis::Sentence;
        let mut diagnostics = IngestDiagnostics::default();
        for (k, v) in tsv::header_pairs(&header) {
            match k {
                "n_sentences" => n_sentences = Some(tsv::parse_col(v, "n_sentences", 1)?),
                "f_max" => f_max = Some(tsv::parse_col(v, "f_max", 1)?),
                "freq_basis" => {
                    freq_basis = match v {
                        "sentence" => FreqBasis::Sentence,
                        "token" => FreqBasis::Token,
                        other => {
                            return Err(Error::Format(format!("unknown freq_basis {other:?}")))
                        }
                    }
                }
                "malformed_lines" => {
                    diagnostics.malformed_lines = tsv::parse_col(v, "malformed_lines", 1)?
                }
                "empty_lines" => diagnostics.empty_lines = tsv::parse_col(v, "empty_lines", 1)?,
                _ => {}
            }
        }
        let n_sentences: u64 =
            n_sentences.ok_or_else(|| Error::Format("index header missing n_sentences".into()))?;
        let f_max: u64 =
            f_max.ok_or_else(|| Error::Format("index header missing f_max".into()))?;

        let mut entries = Vec::new();
        let mut by_word = HashMap::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line_no = i + 2;
            if line.is_empty() {
                continue;
            }
            let f = tsv::fields_exact(&line, 5, line_no)?;
            let entry = VocabEntry {
                word: f[0].to_string(),
                sentence_freq: tsv::parse_col(f[1], "sentence_freq", line_no)?,
                token_freq: tsv::parse_col(f[2], "token_freq", line_no)?,
                freq_rank: tsv::parse_col(f[3], "freq_rank", line_no)?,
                freq_class: tsv::parse_col(f[4], "freq_class", line_no)?,
            };
            if entry.freq_rank as usize != entries.len() + 1 {
                return Err(Error::Format(format!(
                    "line {line_no}: freq_rank {} out of order",
                    entry.freq_rank
                )));
            }
            if entry.sentence_freq == 0 || entry.sentence_freq > n_sentences {
                return Err(Error::Format(format!(
                    "line {line_no}: sentence_freq {} outside 1..={n_sentences}",
                    entry.sentence_freq
                )));
            }
            if by_word.insert(entry.word.clone(), entries.len() as WordId).is_some() {
                return Err(Error::Format(format!(
                    "line {line_no}: duplicate word {:?}",
                    entry.word
                )));
            }
            entries.push(entry);
        }
        if entries.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if entries[0].sentence_freq != f_max {
            return Err(Error::Format(
                "index header f_max disagrees with first entry".into(),
            ));
        }
        Ok(CorpusIndex {
            n_sentences,
            f_max,
            freq_basis,
            entries,
            by_word,
            diagnostics,
        })
    }
}

/// Builds a [`CorpusIndex`] from a sentence-per-line stream.
pub fn ingest<R: BufRead>(reader: R, cfg: &TokenizerConfig) -> Result<CorpusIndex> {
    ingest_with_threads(reader, cfg, FreqBasis::Sentence, 1)
}

pub fn ingest_with_threads<R: BufRead>(
    reader: R,
    cfg: &TokenizerConfig,
    freq_basis: FreqBasis,
    threads: usize,
) -> Result<CorpusIndex> {
    let counts = fold_line_shards(
        reader,
        threads,
        ShardCounts::default,
        |lines| {
            let mut shard = ShardCounts::default();
            for line in lines {
                shard.count_line(line, cfg);
            }
            shard
        },
        ShardCounts::merge,
    )?;
    CorpusIndex::from_counts(counts, freq_basis)
}
