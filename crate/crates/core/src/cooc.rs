//! Within-sentence word-pair co-occurrence counts and the Dunning
//! log-likelihood association statistic.
//!
//! A pair is counted at most once per sentence, so the 2x2 contingency
//! table partitions the sentence set exactly: sentences with both words,
//! with either one alone, and with neither.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::corpus::{self, CorpusIndex, TokenizerConfig, WordId};
use crate::error::{Error, Result};
use crate::tsv;

#[derive(Debug, Clone, Copy)]
pub struct PairCountConfig {
    /// Words below this sentence frequency are not paired. Hapax pairs
    /// cannot reach significance, so the default keeps the map bounded.
    pub min_sentence_freq: u64,
}

impl Default for PairCountConfig {
    fn default() -> Self {
        PairCountConfig { min_sentence_freq: 2 }
    }
}

/// Sparse unordered-pair sentence co-occurrence counts over an index.
#[derive(Debug)]
pub struct PairStats {
    index: Arc<CorpusIndex>,
    counts: HashMap<(WordId, WordId), u64>,
    min_sentence_freq: u64,
}

#[derive(Debug, Default)]
struct PairShard {
    counts: HashMap<(WordId, WordId), u64>,
}

impl PairShard {
    fn merge(self, other: PairShard) -> PairShard {
        let (mut big, small) = if self.counts.len() >= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        for (k, v) in small.counts {
            *big.counts.entry(k).or_insert(0) += v;
        }
        big
    }
}

/// Counts within-sentence co-occurrence for every retained unordered pair.
/// The stream must be the corpus the index was built from, tokenized the
/// same way.
pub fn count_pairs<R: BufRead>(
    reader: R,
    index: Arc<CorpusIndex>,
    tokenizer: &TokenizerConfig,
    cfg: &PairCountConfig,
    threads: usize,
) -> Result<PairStats> {
    let min_sf = cfg.min_sentence_freq;
    let idx = &index;
    let shard = corpus::fold_line_shards(
        reader,
        threads,
        PairShard::default,
        |lines| {
            let mut shard = PairShard::default();
            let mut ids: Vec<WordId> = Vec::new();
            for raw in lines {
                let mut raw = raw.as_slice();
                if raw.last() == Some(&b'\n') {
                    raw = &raw[..raw.len() - 1];
                }
                if raw.last() == Some(&b'\r') {
                    raw = &raw[..raw.len() - 1];
                }
                let Ok(line) = std::str::from_utf8(raw) else { continue };
                let Some(tokens) = corpus::tokenize(line, tokenizer) else { continue };
                ids.clear();
                for tok in &tokens {
                    if let Some(id) = idx.id_of(tok) {
                        if idx.entry_by_id(id).sentence_freq >= min_sf {
                            ids.push(id);
                        }
                    }
                }
                ids.sort_unstable();
                ids.dedup();
                for i in 0..ids.len() {
                    for j in i + 1..ids.len() {
                        *shard.counts.entry((ids[i], ids[j])).or_insert(0) += 1;
                    }
                }
            }
            shard
        },
        PairShard::merge,
    )?;
    Ok(PairStats {
        index,
        counts: shard.counts,
        min_sentence_freq: min_sf,
    })
}

impl PairStats {
    pub fn new(index: Arc<CorpusIndex>, min_sentence_freq: u64) -> PairStats {
        PairStats {
            index,
            counts: HashMap::new(),
            min_sentence_freq,
        }
    }

    pub fn index(&self) -> &Arc<CorpusIndex> {
        &self.index
    }

    pub fn min_sentence_freq(&self) -> u64 {
        self.min_sentence_freq
    }

    pub fn n_pairs(&self) -> usize {
        self.counts.len()
    }

    pub fn insert_count(&mut self, a: WordId, b: WordId, count: u64) {
        debug_assert_ne!(a, b);
        let key = if a < b { (a, b) } else { (b, a) };
        *self.counts.entry(key).or_insert(0) += count;
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(WordId, WordId), &u64)> {
        self.counts.iter()
    }

    pub fn count_ids(&self, a: WordId, b: WordId) -> u64 {
        if a == b {
            return self.index.entry_by_id(a).sentence_freq;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        self.counts.get(&key).copied().unwrap_or(0)
    }

    /// Sentences containing both words. Symmetric; a pair never sharing a
    /// sentence yields 0.
    pub fn count(&self, a: &str, b: &str) -> Result<u64> {
        let ia = self.require(a)?;
        let ib = self.require(b)?;
        Ok(self.count_ids(ia, ib))
    }

    fn require(&self, word: &str) -> Result<WordId> {
        self.index
            .id_of(word)
            .ok_or_else(|| Error::UnknownWord(word.to_string()))
    }

    /// 2x2 sentence contingency table for (a, b), oriented so the `a`
    /// margin is the first row.
    pub fn contingency(&self, a: &str, b: &str) -> Result<ContingencyTable> {
        let ia = self.require(a)?;
        let ib = self.require(b)?;
        self.contingency_ids(ia, ib)
    }

    pub fn contingency_ids(&self, a: WordId, b: WordId) -> Result<ContingencyTable> {
        let n = self.index.n_sentences();
        let sf_a = self.index.entry_by_id(a).sentence_freq;
        let sf_b = self.index.entry_by_id(b).sentence_freq;
        let k11 = self.count_ids(a, b);
        let k12 = sf_a.checked_sub(k11);
        let k21 = sf_b.checked_sub(k11);
        let (Some(k12), Some(k21)) = (k12, k21) else {
            return Err(Error::Format(format!(
                "pair count exceeds a margin for ({}, {})",
                self.index.word_of(a),
                self.index.word_of(b)
            )));
        };
        let used = k11 + k12 + k21;
        if used > n {
            return Err(Error::Format(format!(
                "margins exceed sentence count for ({}, {})",
                self.index.word_of(a),
                self.index.word_of(b)
            )));
        }
        Ok(ContingencyTable {
            k11,
            k12,
            k21,
            k22: n - used,
        })
    }
}

/// Sentence-partition counts for an unordered word pair:
/// both words / first only / second only / neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContingencyTable {
    pub k11: u64,
    pub k12: u64,
    pub k21: u64,
    pub k22: u64,
}

impl ContingencyTable {
    pub fn n(&self) -> u64 {
        self.k11 + self.k12 + self.k21 + self.k22
    }

    /// Co-occurrence count expected under independence.
    pub fn expected_k11(&self) -> f64 {
        let row = (self.k11 + self.k12) as f64;
        let col = (self.k11 + self.k21) as f64;
        row * col / self.n() as f64
    }
}

/// Dunning log-likelihood statistic G2 = 2 * sum k_ij ln(k_ij / E_ij) with
/// E_ij the independence expectation and 0 * ln(0/E) = 0. Tiny negative
/// rounding residue is clamped to zero.
pub fn log_likelihood(t: &ContingencyTable) -> Result<f64> {
    let n = t.n();
    if n == 0 {
        return Err(Error::DegenerateTable);
    }
    let n = n as f64;
    let rows = [(t.k11 + t.k12) as f64, (t.k21 + t.k22) as f64];
    let cols = [(t.k11 + t.k21) as f64, (t.k12 + t.k22) as f64];
    let cells = [[t.k11, t.k12], [t.k21, t.k22]];
    let mut sum = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let k = cells[i][j] as f64;
            if k > 0.0 {
                let expected = rows[i] * cols[j] / n;
                sum += k * (k / expected).ln();
            }
        }
    }
    let g2 = 2.0 * sum;
    if g2 < 0.0 && g2 > -1e-9 {
        Ok(0.0)
    } else {
        Ok(g2)
    }
}

#[derive(Debug, Clone)]
pub struct AsConfig {
    /// Significance threshold on G2; the default is the chi-squared
    /// df=1 critical value at p < .05.
    pub threshold: f64,
    /// Base of the log transform applied to significant G2 values.
    pub log_base: f64,
}

impl Default for AsConfig {
    fn default() -> Self {
        AsConfig {
            threshold: 3.841,
            log_base: 10.0,
        }
    }
}

/// Association verdict for an unordered pair. `as_value` is the
/// log-transformed G2 when the pair co-occurs significantly more often
/// than expected, and exactly 0 otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationRecord {
    pub word_a: String,
    pub word_b: String,
    pub k11: u64,
    pub g2: f64,
    pub as_value: f64,
    /// Observed co-occurrence above the independence expectation.
    pub above_expected: bool,
}

/// Statistic bundle for one table: G2, the gated association strength,
/// and the direction flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationScore {
    pub g2: f64,
    pub as_value: f64,
    pub above_expected: bool,
}

/// Applies the significance gate to a contingency table: AS is the
/// log-transformed G2 when the statistic clears the threshold and the
/// observed joint count exceeds its expectation, otherwise exactly 0.
pub fn score_table(table: &ContingencyTable, cfg: &AsConfig) -> Result<AssociationScore> {
    let g2 = log_likelihood(table)?;
    let above_expected = (table.k11 as f64) > table.expected_k11();
    Ok(AssociationScore {
        g2,
        as_value: as_value_from(g2, above_expected, cfg),
        above_expected,
    })
}

pub(crate) fn as_value_from(g2: f64, above_expected: bool, cfg: &AsConfig) -> f64 {
    if g2 >= cfg.threshold && above_expected {
        // dedicated implementations are exact for the common bases
        if cfg.log_base == 10.0 {
            g2.log10()
        } else if cfg.log_base == std::f64::consts::E {
            g2.ln()
        } else {
            g2.log(cfg.log_base)
        }
    } else {
        0.0
    }
}

/// Computes G2 and the gated association strength for a pair. The table is
/// always evaluated in a canonical orientation, so the result is exactly
/// symmetric in the two words.
pub fn association_strength(
    a: &str,
    b: &str,
    stats: &PairStats,
    cfg: &AsConfig,
) -> Result<AssociationRecord> {
    let ia = stats.require(a)?;
    let ib = stats.require(b)?;
    association_strength_ids(ia, ib, stats, cfg)
}

pub fn association_strength_ids(
    a: WordId,
    b: WordId,
    stats: &PairStats,
    cfg: &AsConfig,
) -> Result<AssociationRecord> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let table = stats.contingency_ids(lo, hi)?;
    let score = score_table(&table, cfg)?;
    let wa = stats.index.word_of(lo);
    let wb = stats.index.word_of(hi);
    let (word_a, word_b) = if wa <= wb { (wa, wb) } else { (wb, wa) };
    Ok(AssociationRecord {
        word_a: word_a.to_string(),
        word_b: word_b.to_string(),
        k11: table.k11,
        g2: score.g2,
        as_value: score.as_value,
        above_expected: score.above_expected,
    })
}

/// Writes every counted pair as `word_a word_b k11 g2 as_value`, rows in
/// pair-lexicographic order.
pub fn write_pairs_tsv<W: Write>(stats: &PairStats, cfg: &AsConfig, mut w: W) -> Result<()> {
    writeln!(
        w,
        "#pairs\tn_sentences={}\tmin_sentence_freq={}",
        stats.index.n_sentences(),
        stats.min_sentence_freq
    )?;
    let mut rows = Vec::with_capacity(stats.counts.len());
    for &(ia, ib) in stats.counts.keys() {
        let rec = association_strength_ids(ia, ib, stats, cfg)?;
        rows.push(rec);
    }
    rows.sort_by(|a, b| a.word_a.cmp(&b.word_a).then_with(|| a.word_b.cmp(&b.word_b)));
    for r in rows {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            r.word_a,
            r.word_b,
            r.k11,
            tsv::fmt_f64(r.g2),
            tsv::fmt_f64(r.as_value)
        )?;
    }
    Ok(())
}

/// Rebuilds pair counts from a pairs TSV. Only `k11` is read back;
/// statistics are recomputed from the index margins.
pub fn read_pairs_tsv<R: BufRead>(reader: R, index: Arc<CorpusIndex>) -> Result<PairStats> {
    let mut min_sf = PairCountConfig::default().min_sentence_freq;
    let mut stats = PairStats::new(Arc::clone(&index), min_sf);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            for (k, v) in tsv::header_pairs(&line) {
                if k == "min_sentence_freq" {
                    min_sf = tsv::parse_col(v, "min_sentence_freq", line_no)?;
                }
            }
            continue;
        }
        let f = tsv::fields_exact(&line, 5, line_no)?;
        let ia = index
            .id_of(f[0])
            .ok_or_else(|| Error::UnknownWord(f[0].to_string()))?;
        let ib = index
            .id_of(f[1])
            .ok_or_else(|| Error::UnknownWord(f[1].to_string()))?;
        if ia == ib {
            return Err(Error::Format(format!("line {line_no}: self-pair {:?}", f[0])));
        }
        let k11: u64 = tsv::parse_col(f[2], "k11", line_no)?;
        stats.insert_count(ia, ib, k11);
    }
    stats.min_sentence_freq = min_sf;
    Ok(stats)
}
