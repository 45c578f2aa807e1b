//! Ranked associate sets and the common-associates (CA) overlap count.
//!
//! An associate set holds the words with the largest association strength
//! to a cue, capped at a configurable size, with the corpus's most
//! frequent words excluded from the feature space. The CA of a word pair
//! is the plain intersection count of the two sets' members.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::cooc::{association_strength_ids, AsConfig, PairStats};
use crate::corpus::{CorpusIndex, WordId};
use crate::error::{Error, Result};
use crate::tsv;

#[derive(Debug, Clone)]
pub struct AssociateConfig {
    /// Maximum associates retained per cue.
    pub cap: usize,
    /// Size of the default most-frequent-words stoplist.
    pub stoplist_size: usize,
    /// Apply the stoplist after truncating to `cap` instead of before.
    /// The default fills every slot with a non-stoplist word.
    pub stoplist_after_cap: bool,
    pub as_config: AsConfig,
}

impl Default for AssociateConfig {
    fn default() -> Self {
        AssociateConfig {
            cap: 1000,
            stoplist_size: 100,
            stoplist_after_cap: false,
            as_config: AsConfig::default(),
        }
    }
}

/// The corpus's `size` most frequent words.
pub fn default_stoplist(index: &CorpusIndex, size: usize) -> HashSet<String> {
    index
        .top_frequent(size)
        .into_iter()
        .map(|w| w.to_string())
        .collect()
}

/// Associates of one cue, ordered by association strength descending with
/// lexicographic tie-breaking. Never contains the cue, a stoplist word, or
/// an entry with zero association strength.
#[derive(Debug, Clone)]
pub struct AssociateSet {
    cue: String,
    entries: Vec<(String, f64)>,
    members: HashSet<String>,
}

impl AssociateSet {
    pub fn cue(&self) -> &str {
        &self.cue
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.members.contains(word)
    }

    fn from_entries(cue: String, entries: Vec<(String, f64)>) -> AssociateSet {
        let members = entries.iter().map(|(w, _)| w.clone()).collect();
        AssociateSet { cue, entries, members }
    }
}

fn associates_from_candidates(
    cue: &str,
    mut candidates: Vec<(String, f64)>,
    stoplist: &HashSet<String>,
    cfg: &AssociateConfig,
) -> AssociateSet {
    candidates.retain(|(_, as_value)| *as_value > 0.0);
    if !cfg.stoplist_after_cap {
        candidates.retain(|(w, _)| !stoplist.contains(w));
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    candidates.truncate(cfg.cap);
    if cfg.stoplist_after_cap {
        candidates.retain(|(w, _)| !stoplist.contains(w));
    }
    AssociateSet::from_entries(cue.to_string(), candidates)
}

fn candidates_for(
    cue_id: WordId,
    neighbor_ids: &[WordId],
    stats: &PairStats,
    cfg: &AssociateConfig,
) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for &other in neighbor_ids {
        let rec = association_strength_ids(cue_id, other, stats, &cfg.as_config)?;
        if rec.as_value > 0.0 {
            out.push((stats.index().word_of(other).to_string(), rec.as_value));
        }
    }
    Ok(out)
}

/// Builds the associate set of one cue by scanning the pair counts.
pub fn build_associates(
    cue: &str,
    stats: &PairStats,
    stoplist: &HashSet<String>,
    cfg: &AssociateConfig,
) -> Result<AssociateSet> {
    let cue_id = stats
        .index()
        .id_of(cue)
        .ok_or_else(|| Error::UnknownWord(cue.to_string()))?;
    let mut neighbors = Vec::new();
    for (&(a, b), _) in stats.iter() {
        if a == cue_id {
            neighbors.push(b);
        } else if b == cue_id {
            neighbors.push(a);
        }
    }
    let candidates = candidates_for(cue_id, &neighbors, stats, cfg)?;
    Ok(associates_from_candidates(cue, candidates, stoplist, cfg))
}

/// Write-once store of associate sets, read concurrently afterwards.
#[derive(Debug, Default)]
pub struct AssociateStore {
    sets: BTreeMap<String, AssociateSet>,
}

impl AssociateStore {
    /// Builds sets for the given cues (every vocabulary word when `None`)
    /// in a single pass over the pair counts.
    pub fn build(
        stats: &PairStats,
        cues: Option<&[String]>,
        stoplist: &HashSet<String>,
        cfg: &AssociateConfig,
    ) -> Result<AssociateStore> {
        let index = stats.index();
        let cue_ids: Vec<WordId> = match cues {
            Some(words) => {
                let mut ids = Vec::with_capacity(words.len());
                for w in words {
                    ids.push(
                        index
                            .id_of(w)
                            .ok_or_else(|| Error::UnknownWord(w.clone()))?,
                    );
                }
                ids.sort_unstable();
                ids.dedup();
                ids
            }
            None => (0..index.len() as WordId).collect(),
        };
        let wanted: HashSet<WordId> = cue_ids.iter().copied().collect();
        let mut adjacency: BTreeMap<WordId, Vec<WordId>> = BTreeMap::new();
        for (&(a, b), _) in stats.iter() {
            if wanted.contains(&a) {
                adjacency.entry(a).or_default().push(b);
            }
            if wanted.contains(&b) {
                adjacency.entry(b).or_default().push(a);
            }
        }
        let empty: Vec<WordId> = Vec::new();
        let sets: Result<Vec<AssociateSet>> = cue_ids
            .par_iter()
            .map(|&cue_id| {
                let neighbors = adjacency.get(&cue_id).unwrap_or(&empty);
                let cue = index.word_of(cue_id);
                let candidates = candidates_for(cue_id, neighbors, stats, cfg)?;
                Ok(associates_from_candidates(cue, candidates, stoplist, cfg))
            })
            .collect();
        let mut store = AssociateStore::default();
        for set in sets? {
            store.insert(set);
        }
        Ok(store)
    }

    pub fn insert(&mut self, set: AssociateSet) {
        self.sets.insert(set.cue.clone(), set);
    }

    pub fn get(&self, cue: &str) -> Option<&AssociateSet> {
        self.sets.get(cue)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AssociateSet> {
        self.sets.values()
    }
}

/// CA band thresholds. High means strictly more than `high`, Low strictly
/// fewer than `low`.
#[derive(Debug, Clone, Copy)]
pub struct CaBands {
    pub high: u64,
    pub low: u64,
}

impl Default for CaBands {
    fn default() -> Self {
        CaBands { high: 60, low: 15 }
    }
}

impl CaBands {
    pub fn classify(&self, ca: u64) -> Band {
        if ca > self.high {
            Band::High
        } else if ca < self.low {
            Band::Low
        } else {
            Band::Mid
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    High,
    Low,
    Mid,
}

impl Band {
    pub fn as_str(&self) -> &'static str {
        match self {
            Band::High => "high",
            Band::Low => "low",
            Band::Mid => "mid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapResult {
    pub word_a: String,
    pub word_b: String,
    pub ca_count: u64,
    pub band: Band,
}

/// Counts the members shared by the two words' associate sets. Association
/// strengths are ignored; only membership matters.
pub fn common_associates(
    w1: &str,
    w2: &str,
    store: &AssociateStore,
    bands: &CaBands,
) -> Result<OverlapResult> {
    let s1 = store
        .get(w1)
        .ok_or_else(|| Error::MissingCue(w1.to_string()))?;
    let s2 = store
        .get(w2)
        .ok_or_else(|| Error::MissingCue(w2.to_string()))?;
    let ca_count = if w1 == w2 {
        s1.len() as u64
    } else {
        let (small, big) = if s1.len() <= s2.len() { (s1, s2) } else { (s2, s1) };
        small
            .entries
            .iter()
            .filter(|(w, _)| big.contains(w))
            .count() as u64
    };
    let (word_a, word_b) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
    Ok(OverlapResult {
        word_a: word_a.to_string(),
        word_b: word_b.to_string(),
        ca_count,
        band: bands.classify(ca_count),
    })
}

/// Element-wise [`common_associates`] over a pair list; per-pair errors are
/// collected rather than aborting the batch.
pub fn batch_ca(
    pairs: &[(String, String)],
    store: &AssociateStore,
    bands: &CaBands,
) -> Vec<Result<OverlapResult>> {
    pairs
        .iter()
        .map(|(a, b)| common_associates(a, b, store, bands))
        .collect()
}

/// One row per associate: `cue rank associate as_value`.
pub fn write_associates_tsv<W: Write>(store: &AssociateStore, mut w: W) -> Result<()> {
    writeln!(w, "#associates\tcues={}", store.len())?;
    for set in store.iter() {
        tsv::check_no_tab(&set.cue, "cue")?;
        for (rank0, (word, as_value)) in set.entries.iter().enumerate() {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                set.cue,
                rank0 + 1,
                word,
                tsv::fmt_f64(*as_value)
            )?;
        }
    }
    Ok(())
}

/// CA report rows in input order: `word_a word_b ca_count band`.
pub fn write_ca_tsv<W: Write>(results: &[OverlapResult], mut w: W) -> Result<()> {
    writeln!(w, "#ca")?;
    for r in results {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            r.word_a,
            r.word_b,
            r.ca_count,
            r.band.as_str()
        )?;
    }
    Ok(())
}

/// Reads a word-pair query list: `word_a word_b` per line.
pub fn read_pair_list<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = tsv::fields_exact(&line, 2, i + 1)?;
        out.push((f[0].to_string(), f[1].to_string()));
    }
    Ok(out)
}
