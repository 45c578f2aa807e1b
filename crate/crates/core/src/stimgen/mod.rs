//! Stimulus-set construction: annotating candidate sentence frames with
//! the manipulated and controlled variables, assigning them to the 2x2
//! overlap design, searching for a balanced item set, and
//! pseudorandomizing presentation lists.

mod lists;
mod select;

pub use lists::{randomize_lists, randomize_lists_ids, write_list_tsv, ListConfig, ListEntry};
pub use select::{select_set, SelectConfig};

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::assoc::{common_associates, AssociateStore, Band, CaBands};
use crate::cooc::{association_strength, AsConfig, PairStats};
use crate::corpus::{CorpusIndex, TokenizerConfig};
use crate::error::{Error, Result};
use crate::lexstats::{profile, LexProfile, Lexicon};
use crate::tsv;

/// The four design cells crossing verb-noun and adjective-noun overlap
/// bands (first letter = verb factor, second = adjective factor).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellLabel {
    HH,
    HL,
    LH,
    LL,
}

impl CellLabel {
    pub const ALL: [CellLabel; 4] = [CellLabel::HH, CellLabel::HL, CellLabel::LH, CellLabel::LL];

    pub fn verb_high(self) -> bool {
        matches!(self, CellLabel::HH | CellLabel::HL)
    }

    pub fn adjective_high(self) -> bool {
        matches!(self, CellLabel::HH | CellLabel::LH)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CellLabel::HH => "HH",
            CellLabel::HL => "HL",
            CellLabel::LH => "LH",
            CellLabel::LL => "LL",
        }
    }

    pub fn parse(s: &str) -> Option<CellLabel> {
        CellLabel::ALL.iter().copied().find(|l| l.as_str() == s)
    }

    fn from_bands(verb: Band, adjective: Band) -> Option<CellLabel> {
        match (verb, adjective) {
            (Band::High, Band::High) => Some(CellLabel::HH),
            (Band::High, Band::Low) => Some(CellLabel::HL),
            (Band::Low, Band::High) => Some(CellLabel::LH),
            (Band::Low, Band::Low) => Some(CellLabel::LL),
            _ => None,
        }
    }
}

/// Unannotated sentence frame with slot indices into its token sequence.
#[derive(Debug, Clone)]
pub struct RawItem {
    pub item_id: String,
    pub tokens: Vec<String>,
    pub verb_idx: usize,
    pub adjective_idx: usize,
    pub noun_idx: usize,
    pub closed_class_idx: [usize; 3],
}

impl RawItem {
    /// Slot ordering is always required. `strict` additionally pins the
    /// canonical frame (verb 1, adjective 3, noun 4, closed-class 5-7)
    /// and the sentence length envelope (69-72 characters, 9-14 words).
    pub fn validate_frame(&self, strict: bool) -> Result<()> {
        let [c1, c2, c3] = self.closed_class_idx;
        let ordered = self.verb_idx < self.adjective_idx
            && self.adjective_idx < self.noun_idx
            && self.noun_idx < c1
            && c1 < c2
            && c2 < c3;
        if !ordered {
            return Err(Error::InvalidInput(format!(
                "item {}: slot indices must be strictly increasing verb < adjective < noun < closed-class",
                self.item_id
            )));
        }
        if c3 >= self.tokens.len() {
            return Err(Error::InvalidInput(format!(
                "item {}: slot index {} beyond sentence of {} tokens",
                self.item_id,
                c3,
                self.tokens.len()
            )));
        }
        if strict {
            if (self.verb_idx, self.adjective_idx, self.noun_idx) != (1, 3, 4)
                || self.closed_class_idx != [5, 6, 7]
            {
                return Err(Error::InvalidInput(format!(
                    "item {}: frame must be pronoun-verb-article-adjective-noun with three closed-class words after the noun",
                    self.item_id
                )));
            }
            let n_words = self.tokens.len();
            if !(9..=14).contains(&n_words) {
                return Err(Error::InvalidInput(format!(
                    "item {}: {} words, expected 9-14",
                    self.item_id, n_words
                )));
            }
            let n_chars = self.sentence().chars().count();
            if !(69..=72).contains(&n_chars) {
                return Err(Error::InvalidInput(format!(
                    "item {}: {} characters, expected 69-72",
                    self.item_id, n_chars
                )));
            }
        }
        Ok(())
    }

    pub fn sentence(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Length and frequency class of a post-target closed-class word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CcProfile {
    pub length: usize,
    pub freq_class: u32,
}

/// All manipulated and controlled variables of one item.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub ca_verb_noun: u64,
    pub ca_adjective_noun: u64,
    pub ca_verb_adjective: u64,
    pub as_verb_noun: f64,
    pub as_adjective_noun: f64,
    pub as_verb_adjective: f64,
    pub verb: LexProfile,
    pub adjective: LexProfile,
    pub noun: LexProfile,
    pub closed_class: [CcProfile; 3],
}

#[derive(Debug, Clone)]
pub struct StimulusItem {
    pub item_id: String,
    pub tokens: Vec<String>,
    pub verb_idx: usize,
    pub adjective_idx: usize,
    pub noun_idx: usize,
    pub closed_class_idx: [usize; 3],
    pub features: FeatureVector,
    pub comma_after_target: bool,
}

impl StimulusItem {
    pub fn sentence(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Everything `annotate` needs to resolve slot words against the corpus.
pub struct AnnotationContext<'a> {
    pub index: &'a CorpusIndex,
    pub stats: &'a PairStats,
    pub store: &'a AssociateStore,
    pub lexicon: &'a Lexicon,
    pub bands: CaBands,
    pub as_config: AsConfig,
    pub tokenizer: TokenizerConfig,
}

/// Edge punctuation is trimmed from slot tokens before corpus lookups;
/// case folding follows the tokenizer the index was built with.
pub fn normalize_slot_word(token: &str, tokenizer: &TokenizerConfig) -> String {
    let t = token.trim_matches(|c: char| !c.is_alphanumeric());
    if tokenizer.lowercase {
        t.to_lowercase()
    } else {
        t.to_string()
    }
}

impl<'a> AnnotationContext<'a> {
    fn slot_word(&self, raw: &RawItem, idx: usize, slot: &'static str) -> Result<String> {
        let token = raw.tokens.get(idx).ok_or_else(|| Error::Annotation {
            slot,
            word: String::new(),
            reason: format!("slot index {idx} beyond sentence"),
        })?;
        let word = normalize_slot_word(token, &self.tokenizer);
        if word.is_empty() {
            return Err(Error::Annotation {
                slot,
                word: token.clone(),
                reason: "token empty after trimming punctuation".into(),
            });
        }
        Ok(word)
    }

    fn slot_as(&self, a: &str, b: &str, slot: &'static str) -> Result<f64> {
        association_strength(a, b, self.stats, &self.as_config)
            .map(|rec| rec.as_value)
            .map_err(|e| annotation_err(slot, a, e))
    }

    fn slot_ca(&self, a: &str, b: &str, slot: &'static str) -> Result<u64> {
        common_associates(a, b, self.store, &self.bands)
            .map(|r| r.ca_count)
            .map_err(|e| annotation_err(slot, a, e))
    }

    fn slot_profile(&self, word: &str, slot: &'static str) -> Result<LexProfile> {
        profile(word, self.index, self.lexicon).map_err(|e| annotation_err(slot, word, e))
    }

    fn cc_profile(&self, word: &str, slot: &'static str) -> Result<CcProfile> {
        let freq_class = self
            .index
            .frequency_class(word)
            .map_err(|e| annotation_err(slot, word, e))?;
        Ok(CcProfile { length: word.chars().count(), freq_class })
    }
}

fn annotation_err(slot: &'static str, word: &str, source: Error) -> Error {
    Error::Annotation {
        slot,
        word: word.to_string(),
        reason: source.to_string(),
    }
}

/// Computes the complete feature vector of a candidate frame. Any slot
/// word missing from the corpus fails with the slot named.
pub fn annotate(raw: &RawItem, ctx: &AnnotationContext) -> Result<StimulusItem> {
    raw.validate_frame(false)?;
    let verb = ctx.slot_word(raw, raw.verb_idx, "verb")?;
    let adjective = ctx.slot_word(raw, raw.adjective_idx, "adjective")?;
    let noun = ctx.slot_word(raw, raw.noun_idx, "noun")?;
    let [c1, c2, c3] = raw.closed_class_idx;
    let cc_words = [
        ctx.slot_word(raw, c1, "closed_class_1")?,
        ctx.slot_word(raw, c2, "closed_class_2")?,
        ctx.slot_word(raw, c3, "closed_class_3")?,
    ];

    let features = FeatureVector {
        ca_verb_noun: ctx.slot_ca(&verb, &noun, "verb")?,
        ca_adjective_noun: ctx.slot_ca(&adjective, &noun, "adjective")?,
        ca_verb_adjective: ctx.slot_ca(&verb, &adjective, "verb")?,
        as_verb_noun: ctx.slot_as(&verb, &noun, "verb")?,
        as_adjective_noun: ctx.slot_as(&adjective, &noun, "adjective")?,
        as_verb_adjective: ctx.slot_as(&verb, &adjective, "verb")?,
        verb: ctx.slot_profile(&verb, "verb")?,
        adjective: ctx.slot_profile(&adjective, "adjective")?,
        noun: ctx.slot_profile(&noun, "noun")?,
        closed_class: [
            ctx.cc_profile(&cc_words[0], "closed_class_1")?,
            ctx.cc_profile(&cc_words[1], "closed_class_2")?,
            ctx.cc_profile(&cc_words[2], "closed_class_3")?,
        ],
    };
    let comma_after_target = raw.tokens[raw.noun_idx].ends_with(',')
        || raw.tokens.get(raw.noun_idx + 1).map(String::as_str) == Some(",");
    Ok(StimulusItem {
        item_id: raw.item_id.clone(),
        tokens: raw.tokens.clone(),
        verb_idx: raw.verb_idx,
        adjective_idx: raw.adjective_idx,
        noun_idx: raw.noun_idx,
        closed_class_idx: raw.closed_class_idx,
        features,
        comma_after_target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    VerbNounMid,
    AdjectiveNounMid,
    PrimeAssociation,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::VerbNounMid => "verb_noun_mid",
            RejectReason::AdjectiveNounMid => "adjective_noun_mid",
            RejectReason::PrimeAssociation => "prime_association",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    Cell(CellLabel),
    Rejected(RejectReason),
}

/// Places an annotated item into its design cell, or rejects it when
/// either overlap count falls in the mid band or the primes themselves are
/// directly associated beyond `max_prime_as`.
pub fn assign_condition(item: &StimulusItem, bands: &CaBands, max_prime_as: f64) -> Assignment {
    let verb_band = bands.classify(item.features.ca_verb_noun);
    let adj_band = bands.classify(item.features.ca_adjective_noun);
    if verb_band == Band::Mid {
        return Assignment::Rejected(RejectReason::VerbNounMid);
    }
    if adj_band == Band::Mid {
        return Assignment::Rejected(RejectReason::AdjectiveNounMid);
    }
    if item.features.as_verb_adjective > max_prime_as {
        return Assignment::Rejected(RejectReason::PrimeAssociation);
    }
    Assignment::Cell(CellLabel::from_bands(verb_band, adj_band).expect("bands are high or low"))
}

/// One-way between-groups F statistic. Conventions: equal group means give
/// F = 0; zero within-group variance with distinct means gives +infinity.
pub fn anova_f(groups: &[&[f64]]) -> Result<f64> {
    if groups.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 groups, got {}",
            groups.len()
        )));
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(Error::InsufficientData("empty group".into()));
    }
    let k = groups.len();
    let n_total: usize = groups.iter().map(|g| g.len()).sum();
    let means: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().sum::<f64>() / g.len() as f64)
        .collect();
    let all_equal = means.windows(2).all(|w| w[0] == w[1]);
    if all_equal {
        return Ok(0.0);
    }
    let grand: f64 = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n_total as f64;
    let ss_between: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.len() as f64 * (m - grand).powi(2))
        .sum();
    let ss_within: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.iter().map(|v| (v - m).powi(2)).sum::<f64>())
        .sum();
    if ss_between <= 0.0 {
        return Ok(0.0);
    }
    if ss_within <= 0.0 || n_total == k {
        return Ok(f64::INFINITY);
    }
    let ms_between = ss_between / (k - 1) as f64;
    let ms_within = ss_within / (n_total - k) as f64;
    Ok(ms_between / ms_within)
}

/// One balanced control variable: name plus extractor.
pub struct Control {
    pub name: &'static str,
    pub extract: fn(&StimulusItem) -> f64,
}

/// The variables the selection must keep below the F criterion: prime and
/// prime-target association strengths, prime-prime overlap, and length /
/// frequency-class / neighborhood profiles of the open-class slots plus
/// length and frequency class of the three closed-class words.
pub const CONTROLS: [Control; 19] = [
    Control { name: "as_verb_noun", extract: |i| i.features.as_verb_noun },
    Control { name: "as_adjective_noun", extract: |i| i.features.as_adjective_noun },
    Control { name: "as_verb_adjective", extract: |i| i.features.as_verb_adjective },
    Control { name: "ca_verb_adjective", extract: |i| i.features.ca_verb_adjective as f64 },
    Control { name: "verb_length", extract: |i| i.features.verb.length as f64 },
    Control { name: "verb_freq_class", extract: |i| i.features.verb.freq_class as f64 },
    Control { name: "verb_on", extract: |i| i.features.verb.on_count as f64 },
    Control { name: "adjective_length", extract: |i| i.features.adjective.length as f64 },
    Control { name: "adjective_freq_class", extract: |i| i.features.adjective.freq_class as f64 },
    Control { name: "adjective_on", extract: |i| i.features.adjective.on_count as f64 },
    Control { name: "noun_length", extract: |i| i.features.noun.length as f64 },
    Control { name: "noun_freq_class", extract: |i| i.features.noun.freq_class as f64 },
    Control { name: "noun_on", extract: |i| i.features.noun.on_count as f64 },
    Control { name: "cc1_length", extract: |i| i.features.closed_class[0].length as f64 },
    Control { name: "cc1_freq_class", extract: |i| i.features.closed_class[0].freq_class as f64 },
    Control { name: "cc2_length", extract: |i| i.features.closed_class[1].length as f64 },
    Control { name: "cc2_freq_class", extract: |i| i.features.closed_class[1].freq_class as f64 },
    Control { name: "cc3_length", extract: |i| i.features.closed_class[2].length as f64 },
    Control { name: "cc3_freq_class", extract: |i| i.features.closed_class[2].freq_class as f64 },
];

/// The two manipulated variables reported alongside the controls.
pub const MANIPULATED: [Control; 2] = [
    Control { name: "ca_verb_noun", extract: |i| i.features.ca_verb_noun as f64 },
    Control { name: "ca_adjective_noun", extract: |i| i.features.ca_adjective_noun as f64 },
];

/// Labeled candidates grouped by design cell.
#[derive(Debug, Default)]
pub struct CandidatePool {
    cells: BTreeMap<CellLabel, Vec<StimulusItem>>,
}

impl CandidatePool {
    pub fn new() -> CandidatePool {
        CandidatePool::default()
    }

    pub fn push(&mut self, label: CellLabel, item: StimulusItem) {
        self.cells.entry(label).or_default().push(item);
    }

    pub fn from_labeled(items: impl IntoIterator<Item = (CellLabel, StimulusItem)>) -> CandidatePool {
        let mut pool = CandidatePool::new();
        for (label, item) in items {
            pool.push(label, item);
        }
        pool
    }

    pub fn cell(&self, label: CellLabel) -> &[StimulusItem] {
        self.cells.get(&label).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// A selected item set, `n_per_cell` items in each design cell.
#[derive(Debug, Clone, Default)]
pub struct StimulusSet {
    cells: BTreeMap<CellLabel, Vec<StimulusItem>>,
}

impl StimulusSet {
    pub fn new(cells: BTreeMap<CellLabel, Vec<StimulusItem>>) -> StimulusSet {
        StimulusSet { cells }
    }

    pub fn cell(&self, label: CellLabel) -> &[StimulusItem] {
        self.cells.get(&label).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (CellLabel, &[StimulusItem])> {
        self.cells.iter().map(|(l, v)| (*l, v.as_slice()))
    }

    pub fn ids_by_cell(&self) -> BTreeMap<CellLabel, Vec<String>> {
        self.cells
            .iter()
            .map(|(l, v)| (*l, v.iter().map(|i| i.item_id.clone()).collect()))
            .collect()
    }

    pub fn n_items(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone)]
pub struct BalanceRow {
    pub variable: &'static str,
    pub manipulated: bool,
    pub cells: [CellStats; 4],
    pub f: f64,
}

/// Table of per-cell means/SDs and F statistics. `pass` holds when every
/// control variable (manipulated rows excluded) stays below the threshold.
#[derive(Debug, Clone)]
pub struct BalanceReport {
    pub rows: Vec<BalanceRow>,
    pub pass: bool,
    pub offending: Vec<&'static str>,
    pub f_threshold: f64,
}

fn cell_stats(values: &[f64]) -> CellStats {
    let n = values.len();
    if n == 0 {
        return CellStats { n, mean: f64::NAN, sd: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n >= 2 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    CellStats { n, mean, sd }
}

/// Recomputes the balance table of a set from scratch.
pub fn balance_report(set: &StimulusSet, f_threshold: f64) -> Result<BalanceReport> {
    let mut rows = Vec::with_capacity(MANIPULATED.len() + CONTROLS.len());
    let mut offending = Vec::new();
    for (control, manipulated) in MANIPULATED
        .iter()
        .map(|c| (c, true))
        .chain(CONTROLS.iter().map(|c| (c, false)))
    {
        let per_cell: Vec<Vec<f64>> = CellLabel::ALL
            .iter()
            .map(|&l| set.cell(l).iter().map(control.extract).collect())
            .collect();
        let groups: Vec<&[f64]> = per_cell.iter().map(Vec::as_slice).collect();
        let f = anova_f(&groups)?;
        let cells = [
            cell_stats(&per_cell[0]),
            cell_stats(&per_cell[1]),
            cell_stats(&per_cell[2]),
            cell_stats(&per_cell[3]),
        ];
        if !manipulated && f >= f_threshold {
            offending.push(control.name);
        }
        rows.push(BalanceRow { variable: control.name, manipulated, cells, f });
    }
    Ok(BalanceReport {
        rows,
        pass: offending.is_empty(),
        offending,
        f_threshold,
    })
}

/// Reads a candidate pool:
/// `item_id sentence verb_idx adjective_idx noun_idx cc1_idx cc2_idx cc3_idx`.
pub fn read_candidates_tsv<R: BufRead>(reader: R) -> Result<Vec<RawItem>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = tsv::fields_exact(&line, 8, line_no)?;
        let item = RawItem {
            item_id: f[0].to_string(),
            tokens: f[1].split_whitespace().map(str::to_string).collect(),
            verb_idx: tsv::parse_col(f[2], "verb_idx", line_no)?,
            adjective_idx: tsv::parse_col(f[3], "adjective_idx", line_no)?,
            noun_idx: tsv::parse_col(f[4], "noun_idx", line_no)?,
            closed_class_idx: [
                tsv::parse_col(f[5], "cc1_idx", line_no)?,
                tsv::parse_col(f[6], "cc2_idx", line_no)?,
                tsv::parse_col(f[7], "cc3_idx", line_no)?,
            ],
        };
        out.push(item);
    }
    Ok(out)
}

/// Selected-set rows: condition, item id, sentence, the full feature
/// vector, comma flag.
pub fn write_set_tsv<W: Write>(set: &StimulusSet, mut w: W) -> Result<()> {
    writeln!(w, "#stimulus_set\tn_items={}", set.n_items())?;
    for (label, items) in set.iter() {
        for item in items {
            tsv::check_no_tab(&item.item_id, "item_id")?;
            let ft = &item.features;
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                label.as_str(),
                item.item_id,
                item.sentence(),
                ft.ca_verb_noun,
                ft.ca_adjective_noun,
                ft.ca_verb_adjective,
                tsv::fmt_f64(ft.as_verb_noun),
                tsv::fmt_f64(ft.as_adjective_noun),
                tsv::fmt_f64(ft.as_verb_adjective),
                ft.verb.length,
                ft.verb.freq_class,
                ft.verb.on_count,
                ft.adjective.length,
                ft.adjective.freq_class,
                ft.adjective.on_count,
                ft.noun.length,
                ft.noun.freq_class,
                ft.noun.on_count,
                ft.closed_class[0].length,
                ft.closed_class[0].freq_class,
                ft.closed_class[1].length,
                ft.closed_class[1].freq_class,
                ft.closed_class[2].length,
                ft.closed_class[2].freq_class,
                if item.comma_after_target { 1 } else { 0 },
            )?;
        }
    }
    Ok(())
}

/// Reads back just the cell membership of a set file (for list building).
pub fn read_set_ids_tsv<R: BufRead>(reader: R) -> Result<BTreeMap<CellLabel, Vec<String>>> {
    let mut out: BTreeMap<CellLabel, Vec<String>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = tsv::fields_exact(&line, 25, line_no)?;
        let label = CellLabel::parse(f[0]).ok_or_else(|| {
            Error::Format(format!("line {line_no}: unknown condition {:?}", f[0]))
        })?;
        out.entry(label).or_default().push(f[1].to_string());
    }
    Ok(out)
}

/// Balance table rows:
/// `variable manipulated hh_mean hh_sd hl_mean hl_sd lh_mean lh_sd ll_mean ll_sd f`.
pub fn write_balance_tsv<W: Write>(report: &BalanceReport, mut w: W) -> Result<()> {
    writeln!(
        w,
        "#balance\tpass={}\tf_threshold={}\toffending={}",
        report.pass,
        tsv::fmt_f64(report.f_threshold),
        report.offending.join(",")
    )?;
    for row in &report.rows {
        write!(w, "{}\t{}", row.variable, if row.manipulated { 1 } else { 0 })?;
        for c in &row.cells {
            write!(w, "\t{}\t{}", tsv::fmt_f64(c.mean), tsv::fmt_f64(c.sd))?;
        }
        writeln!(w, "\t{}", tsv::fmt_f64(row.f))?;
    }
    Ok(())
}

/// Filler item ids, one per line (`item_id` or `item_id<TAB>sentence`).
pub fn read_fillers_tsv<R: BufRead>(reader: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let id = line.split('\t').next().unwrap_or("");
        if id.is_empty() {
            return Err(Error::Format(format!("line {}: empty filler id", i + 1)));
        }
        out.push(id.to_string());
    }
    Ok(out)
}


#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn anova_identical_groups_is_zero() {
        let g = [1.0, 2.0, 3.0];
        assert_eq!(anova_f(&[&g, &g, &g, &g]).unwrap(), 0.0);
    }

    #[test]
    fn anova_equal_means_is_zero() {
        let g = [1.0, 2.0];
        assert_eq!(anova_f(&[&g, &g, &g, &g]).unwrap(), 0.0);
    }

    #[test]
    fn anova_hand_computed_f() {
        // SSB = 6 (df 3), SSW = 20 (df 8) -> F = 2 / 2.5 = 0.8
        let f = anova_f(&[
            &[1.0, 2.0, 3.0],
            &[2.0, 3.0, 4.0],
            &[1.0, 3.0, 5.0],
            &[2.0, 4.0, 6.0],
        ])
        .unwrap();
        assert_relative_eq!(f, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn anova_zero_within_variance_is_infinite() {
        let f = anova_f(&[&[1.0, 1.0], &[2.0, 2.0]]).unwrap();
        assert_eq!(f, f64::INFINITY);
    }

    #[test]
    fn anova_single_value_groups_use_conventions() {
        assert_eq!(anova_f(&[&[5.0], &[5.0], &[5.0], &[5.0]]).unwrap(), 0.0);
        assert_eq!(anova_f(&[&[1.0], &[2.0], &[3.0], &[4.0]]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn anova_rejects_degenerate_inputs() {
        assert!(anova_f(&[&[1.0, 2.0]]).is_err());
        assert!(anova_f(&[&[1.0], &[]]).is_err());
    }

    #[test]
    fn assignment_follows_band_combinations() {
        let controls = [0.0; 19];
        let hh = test_support::synthetic_item("i1", 78, 86, &controls, false);
        let ll = test_support::synthetic_item("i2", 10, 11, &controls, false);
        let mid = test_support::synthetic_item("i3", 30, 90, &controls, false);
        let bands = CaBands::default();
        assert_eq!(assign_condition(&hh, &bands, 0.0), Assignment::Cell(CellLabel::HH));
        assert_eq!(assign_condition(&ll, &bands, 0.0), Assignment::Cell(CellLabel::LL));
        assert_eq!(
            assign_condition(&mid, &bands, 0.0),
            Assignment::Rejected(RejectReason::VerbNounMid)
        );
    }

    #[test]
    fn prime_association_rejected_by_default_tolerance() {
        let mut controls = [0.0; 19];
        controls[2] = 0.8; // as_verb_adjective
        let item = test_support::synthetic_item("i1", 78, 86, &controls, false);
        let bands = CaBands::default();
        assert_eq!(
            assign_condition(&item, &bands, 0.0),
            Assignment::Rejected(RejectReason::PrimeAssociation)
        );
        assert_eq!(assign_condition(&item, &bands, 1.0), Assignment::Cell(CellLabel::HH));
    }

    #[test]
    fn frame_validation_enforces_slot_order() {
        let raw = RawItem {
            item_id: "x".into(),
            tokens: "p v a j n c1 c2 c3 x".split(' ').map(str::to_string).collect(),
            verb_idx: 3,
            adjective_idx: 1,
            noun_idx: 4,
            closed_class_idx: [5, 6, 7],
        };
        assert!(raw.validate_frame(false).is_err());
    }

    #[test]
    fn strict_frame_checks_length_envelope() {
        let raw = RawItem {
            item_id: "x".into(),
            tokens: "p v a j n c1 c2 c3 x".split(' ').map(str::to_string).collect(),
            verb_idx: 1,
            adjective_idx: 3,
            noun_idx: 4,
            closed_class_idx: [5, 6, 7],
        };
        assert!(raw.validate_frame(false).is_ok());
        // 9 words but far fewer than 69 characters
        assert!(raw.validate_frame(true).is_err());
    }

}
