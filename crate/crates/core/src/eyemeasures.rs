//! Reduction of raw fixation logs to per-trial reading-time measures:
//! single fixation duration (SFD), first fixation duration (FFD), gaze
//! duration (GD), total viewing duration (TVD) and go-past duration (GPD),
//! with trial validation, duration cutoffs and outlier trimming.
//!
//! Conventions:
//! - Only right-eye fixations enter the measures.
//! - The first pass is the first contiguous run of target fixations that
//!   occurs before any fixation on a region to the right of the target.
//! - The go-past span runs from the first target entry to the first
//!   fixation strictly right of the target, regressions and target
//!   refixations included. Without such a fixation the span reaches the
//!   end of the trial and is flagged open-ended.
//! - TVD sums target fixations only, over the whole trial.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tsv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eye {
    Left,
    Right,
}

impl Eye {
    pub fn parse(s: &str) -> Option<Eye> {
        match s {
            "R" | "r" | "right" | "Right" | "RIGHT" => Some(Eye::Right),
            "L" | "l" | "left" | "Left" | "LEFT" => Some(Eye::Left),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Eye::Left => "L",
            Eye::Right => "R",
        }
    }
}

/// One fixation. `word_index` is the 0-based interest-area index within
/// the sentence; `None` marks an off-text fixation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixationEvent {
    pub onset_ms: f64,
    pub duration_ms: f64,
    pub word_index: Option<usize>,
    pub eye: Eye,
}

/// Word-index geometry of the regions the analysis cares about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionMap {
    pub prime1: usize,
    pub prime2: usize,
    pub target: usize,
}

impl RegionMap {
    /// The canonical sentence frame: verb at 1, adjective at 3, noun at 4.
    pub fn default_frame() -> RegionMap {
        RegionMap { prime1: 1, prime2: 3, target: 4 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.prime1 < self.prime2 && self.prime2 < self.target {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "region order must be prime1 < prime2 < target, got {} {} {}",
                self.prime1, self.prime2, self.target
            )))
        }
    }

    pub fn role(&self, word_index: usize) -> Region {
        if word_index == self.prime1 {
            Region::Prime1
        } else if word_index == self.prime2 {
            Region::Prime2
        } else if word_index == self.target {
            Region::Target
        } else {
            Region::Other
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Prime1,
    Prime2,
    Target,
    Other,
}

#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub subject_id: String,
    pub item_id: String,
    pub condition: String,
    pub fixations: Vec<FixationEvent>,
    pub regions: RegionMap,
}

impl TrialRecord {
    fn key(&self) -> String {
        format!("{}/{}", self.subject_id, self.item_id)
    }

    /// Onsets must be non-decreasing and fixations non-overlapping per eye;
    /// durations must be positive.
    pub fn validate_structure(&self) -> Result<()> {
        let structural = |reason: String| Error::Structural { trial: self.key(), reason };
        let mut last_end: BTreeMap<&'static str, f64> = BTreeMap::new();
        let mut last_onset = f64::NEG_INFINITY;
        for f in &self.fixations {
            if f.duration_ms <= 0.0 {
                return Err(structural(format!("non-positive duration {}", f.duration_ms)));
            }
            if f.onset_ms < last_onset {
                return Err(structural("fixation onsets out of order".into()));
            }
            last_onset = f.onset_ms;
            let eye = f.eye.as_str();
            if let Some(&end) = last_end.get(eye) {
                if f.onset_ms < end {
                    return Err(structural(format!("overlapping fixations for eye {eye}")));
                }
            }
            last_end.insert(eye, f.onset_ms + f.duration_ms);
        }
        self.regions.validate()
    }

    /// Copy with fixations shorter than `min_ms` removed (strict <).
    pub fn filter_min_duration(&self, min_ms: f64) -> TrialRecord {
        let mut t = self.clone();
        t.fixations.retain(|f| f.duration_ms >= min_ms);
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExclusionReason {
    WrongEye,
    TargetSkipped,
    PrimeSkipped,
}

impl ExclusionReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExclusionReason::WrongEye => "wrong_eye",
            ExclusionReason::TargetSkipped => "target_skipped",
            ExclusionReason::PrimeSkipped => "prime_skipped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialValidity {
    pub valid: bool,
    pub reason: Option<ExclusionReason>,
}

/// A trial enters the analysis only if right-eye data exist, the target was
/// fixated, and both primes were fixated before the first target fixation.
pub fn validate_trial(trial: &TrialRecord) -> Result<TrialValidity> {
    trial.validate_structure()?;
    let right: Vec<&FixationEvent> = trial
        .fixations
        .iter()
        .filter(|f| f.eye == Eye::Right)
        .collect();
    let invalid = |reason| Ok(TrialValidity { valid: false, reason: Some(reason) });
    if right.is_empty() {
        return invalid(ExclusionReason::WrongEye);
    }
    let target = trial.regions.target;
    let Some(first_target) = right.iter().find(|f| f.word_index == Some(target)) else {
        return invalid(ExclusionReason::TargetSkipped);
    };
    let fixated_before = |region: usize| {
        right
            .iter()
            .any(|f| f.word_index == Some(region) && f.onset_ms < first_target.onset_ms)
    };
    if !fixated_before(trial.regions.prime1) || !fixated_before(trial.regions.prime2) {
        return invalid(ExclusionReason::PrimeSkipped);
    }
    Ok(TrialValidity { valid: true, reason: None })
}

/// Reading-time measures for one trial. Absent fields are undefined for
/// the trial (e.g. no single fixation, or no first pass).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeasureSet {
    pub ffd: Option<f64>,
    pub sfd: Option<f64>,
    pub gd: Option<f64>,
    pub tvd: Option<f64>,
    pub gpd: Option<f64>,
    /// Target never fixated.
    pub skip: bool,
    /// Go-past span reached the end of the trial without a fixation right
    /// of the target.
    pub gpd_open_ended: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Sfd,
    Ffd,
    Gd,
    Tvd,
    Gpd,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 5] = [
        MeasureKind::Sfd,
        MeasureKind::Ffd,
        MeasureKind::Gd,
        MeasureKind::Tvd,
        MeasureKind::Gpd,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MeasureKind::Sfd => "sfd",
            MeasureKind::Ffd => "ffd",
            MeasureKind::Gd => "gd",
            MeasureKind::Tvd => "tvd",
            MeasureKind::Gpd => "gpd",
        }
    }

    pub fn parse(s: &str) -> Option<MeasureKind> {
        MeasureKind::ALL.iter().copied().find(|m| m.as_str() == s)
    }
}

impl MeasureSet {
    pub fn get(&self, kind: MeasureKind) -> Option<f64> {
        match kind {
            MeasureKind::Sfd => self.sfd,
            MeasureKind::Ffd => self.ffd,
            MeasureKind::Gd => self.gd,
            MeasureKind::Tvd => self.tvd,
            MeasureKind::Gpd => self.gpd,
        }
    }

    fn set(&mut self, kind: MeasureKind, v: Option<f64>) {
        match kind {
            MeasureKind::Sfd => self.sfd = v,
            MeasureKind::Ffd => self.ffd = v,
            MeasureKind::Gd => self.gd = v,
            MeasureKind::Tvd => self.tvd = v,
            MeasureKind::Gpd => self.gpd = v,
        }
    }
}

/// Derives the measure set from a trial whose sub-threshold fixations have
/// already been removed.
pub fn compute_measures(trial: &TrialRecord) -> Result<MeasureSet> {
    trial.validate_structure()?;
    if trial.fixations.is_empty() {
        return Err(Error::Structural {
            trial: trial.key(),
            reason: "empty fixation list".into(),
        });
    }
    let target = trial.regions.target;
    let right: Vec<&FixationEvent> = trial
        .fixations
        .iter()
        .filter(|f| f.eye == Eye::Right)
        .collect();

    let mut m = MeasureSet::default();

    let on_target = |f: &FixationEvent| f.word_index == Some(target);
    let right_of_target = |f: &FixationEvent| matches!(f.word_index, Some(w) if w > target);

    let tvd: f64 = right.iter().filter(|f| on_target(f)).map(|f| f.duration_ms).sum();
    let first_entry = right.iter().position(|f| on_target(f));
    let Some(t0) = first_entry else {
        m.skip = true;
        return Ok(m);
    };
    m.tvd = Some(tvd);

    let first_rightward_any = right.iter().position(|f| right_of_target(f));
    let has_first_pass = first_rightward_any.is_none_or(|r| t0 < r);
    if has_first_pass {
        // contiguous first-pass run on the target
        let mut run_end = t0;
        while run_end < right.len() && on_target(right[run_end]) {
            run_end += 1;
        }
        let run = &right[t0..run_end];
        m.ffd = Some(run[0].duration_ms);
        m.gd = Some(run.iter().map(|f| f.duration_ms).sum());
        if run.len() == 1 {
            m.sfd = m.ffd;
        }
        let span_end = right[t0..].iter().position(|f| right_of_target(f));
        let gpd_slice = match span_end {
            Some(off) => &right[t0..t0 + off],
            None => {
                m.gpd_open_ended = true;
                &right[t0..]
            }
        };
        m.gpd = Some(gpd_slice.iter().map(|f| f.duration_ms).sum());
    }
    Ok(m)
}

/// Upper duration cutoffs per measure; values strictly above are dropped.
#[derive(Debug, Clone, Copy)]
pub struct CutoffConfig {
    pub sfd_ffd_max: f64,
    pub gd_max: f64,
    pub gpd_tvd_max: f64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        CutoffConfig {
            sfd_ffd_max: 800.0,
            gd_max: 1000.0,
            gpd_tvd_max: 1500.0,
        }
    }
}

impl CutoffConfig {
    pub fn max_for(&self, kind: MeasureKind) -> f64 {
        match kind {
            MeasureKind::Sfd | MeasureKind::Ffd => self.sfd_ffd_max,
            MeasureKind::Gd => self.gd_max,
            MeasureKind::Tvd | MeasureKind::Gpd => self.gpd_tvd_max,
        }
    }
}

/// Applies the per-measure cutoffs independently; a trial may lose one
/// measure and keep the others. Idempotent.
pub fn apply_cutoffs(m: &MeasureSet, cfg: &CutoffConfig) -> (MeasureSet, Vec<MeasureKind>) {
    let mut out = *m;
    let mut dropped = Vec::new();
    for kind in MeasureKind::ALL {
        if let Some(v) = out.get(kind) {
            if v > cfg.max_for(kind) {
                out.set(kind, None);
                dropped.push(kind);
            }
        }
    }
    (out, dropped)
}

/// Outcome of [`trim_outliers`]: a retain mask aligned with the input plus
/// the pooled residual standard deviation actually used.
#[derive(Debug, Clone)]
pub struct TrimResult {
    pub retained: Vec<bool>,
    pub residual_sd: f64,
    pub removed: Vec<usize>,
    /// Groups with fewer than 3 values, passed through untrimmed.
    pub untrimmed_groups: Vec<String>,
}

/// Removes values whose residual from their group mean exceeds `k` pooled
/// residual standard deviations (strict). Input values are expected on the
/// log scale. Single pass; groups smaller than 3 pass through untrimmed
/// and do not contribute residuals.
pub fn trim_outliers(values: &[(String, f64)], k: f64) -> TrimResult {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (g, _)) in values.iter().enumerate() {
        groups.entry(g.as_str()).or_default().push(i);
    }
    let mut untrimmed_groups = Vec::new();
    let mut residuals: Vec<(usize, f64)> = Vec::new();
    for (g, idxs) in &groups {
        if idxs.len() < 3 {
            untrimmed_groups.push((*g).to_string());
            continue;
        }
        let mean = idxs.iter().map(|&i| values[i].1).sum::<f64>() / idxs.len() as f64;
        for &i in idxs {
            residuals.push((i, values[i].1 - mean));
        }
    }
    let mut retained = vec![true; values.len()];
    let n = residuals.len();
    let sd = if n >= 2 {
        let mean_r = residuals.iter().map(|(_, r)| r).sum::<f64>() / n as f64;
        let var = residuals
            .iter()
            .map(|(_, r)| (r - mean_r).powi(2))
            .sum::<f64>()
            / (n as f64 - 1.0);
        var.sqrt()
    } else {
        0.0
    };
    let mut removed = Vec::new();
    if sd > 0.0 {
        for (i, r) in &residuals {
            if r.abs() > k * sd {
                retained[*i] = false;
                removed.push(*i);
            }
        }
    }
    removed.sort_unstable();
    TrimResult { retained, residual_sd: sd, removed, untrimmed_groups }
}

#[derive(Debug, Clone)]
pub struct TrialMeasures {
    pub subject_id: String,
    pub item_id: String,
    pub condition: String,
    pub set: MeasureSet,
    pub excluded: Option<ExclusionReason>,
    pub cutoff_dropped: Vec<MeasureKind>,
}

#[derive(Debug, Clone, Copy)]
pub struct ReduceConfig {
    /// Fixations shorter than this are removed before anything else.
    pub min_fixation_ms: f64,
    pub cutoffs: CutoffConfig,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        ReduceConfig {
            min_fixation_ms: 70.0,
            cutoffs: CutoffConfig::default(),
        }
    }
}

/// Full per-trial reduction: minimum-duration filter, validity check,
/// measure computation, cutoffs.
pub fn reduce_trial(trial: &TrialRecord, cfg: &ReduceConfig) -> Result<TrialMeasures> {
    let filtered = trial.filter_min_duration(cfg.min_fixation_ms);
    let validity = validate_trial(&filtered)?;
    if !validity.valid {
        return Ok(TrialMeasures {
            subject_id: trial.subject_id.clone(),
            item_id: trial.item_id.clone(),
            condition: trial.condition.clone(),
            set: MeasureSet::default(),
            excluded: validity.reason,
            cutoff_dropped: Vec::new(),
        });
    }
    let set = compute_measures(&filtered)?;
    let (set, dropped) = apply_cutoffs(&set, &cfg.cutoffs);
    Ok(TrialMeasures {
        subject_id: trial.subject_id.clone(),
        item_id: trial.item_id.clone(),
        condition: trial.condition.clone(),
        set,
        excluded: None,
        cutoff_dropped: dropped,
    })
}

pub fn reduce_trials(trials: &[TrialRecord], cfg: &ReduceConfig) -> Result<Vec<TrialMeasures>> {
    trials.par_iter().map(|t| reduce_trial(t, cfg)).collect()
}

/// Reads a fixation log with columns
/// `subject_id item_id condition word_index onset_ms duration_ms eye`
/// (word_index `-1` or `NA` marks off-text). Trials are grouped by
/// (subject, item) and returned in key order. Region geometry comes from
/// `regions` keyed by item id, falling back to the canonical frame.
pub fn read_fixations_tsv<R: BufRead>(
    reader: R,
    regions: &BTreeMap<String, RegionMap>,
) -> Result<Vec<TrialRecord>> {
    let mut trials: BTreeMap<(String, String), TrialRecord> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = tsv::fields_exact(&line, 7, line_no)?;
        let word_index = match f[3] {
            "-1" | "NA" => None,
            s => Some(tsv::parse_col::<usize>(s, "word_index", line_no)?),
        };
        let eye = Eye::parse(f[6]).ok_or_else(|| {
            Error::Format(format!("line {line_no}: unknown eye {:?}", f[6]))
        })?;
        let event = FixationEvent {
            onset_ms: tsv::parse_col_f64(f[4], "onset_ms", line_no)?,
            duration_ms: tsv::parse_col_f64(f[5], "duration_ms", line_no)?,
            word_index,
            eye,
        };
        let key = (f[0].to_string(), f[1].to_string());
        let trial = trials.entry(key).or_insert_with(|| TrialRecord {
            subject_id: f[0].to_string(),
            item_id: f[1].to_string(),
            condition: f[2].to_string(),
            fixations: Vec::new(),
            regions: regions
                .get(f[1])
                .copied()
                .unwrap_or_else(RegionMap::default_frame),
        });
        if trial.condition != f[2] {
            return Err(Error::Format(format!(
                "line {line_no}: conflicting condition {:?} for trial {}/{}",
                f[2], trial.subject_id, trial.item_id
            )));
        }
        trial.fixations.push(event);
    }
    Ok(trials.into_values().collect())
}

/// Optional region-geometry sidecar: `item_id prime1 prime2 target`.
pub fn read_regions_tsv<R: BufRead>(reader: R) -> Result<BTreeMap<String, RegionMap>> {
    let mut out = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = tsv::fields_exact(&line, 4, line_no)?;
        let map = RegionMap {
            prime1: tsv::parse_col(f[1], "prime1", line_no)?,
            prime2: tsv::parse_col(f[2], "prime2", line_no)?,
            target: tsv::parse_col(f[3], "target", line_no)?,
        };
        map.validate()?;
        out.insert(f[0].to_string(), map);
    }
    Ok(out)
}

/// One row per trial per measure:
/// `subject_id item_id condition measure value note`. `value` is `NA` when
/// the measure is absent; `note` carries the exclusion reason, `cutoff`,
/// `absent`, or `open_ended`.
pub fn write_measures_tsv<W: Write>(rows: &[TrialMeasures], mut w: W) -> Result<()> {
    writeln!(w, "#measures")?;
    for t in rows {
        for kind in MeasureKind::ALL {
            let (value, note) = match (t.set.get(kind), &t.excluded) {
                (_, Some(reason)) => ("NA".to_string(), reason.as_str().to_string()),
                (Some(v), None) => {
                    let note = if kind == MeasureKind::Gpd && t.set.gpd_open_ended {
                        "open_ended"
                    } else {
                        ""
                    };
                    (tsv::fmt_f64(v), note.to_string())
                }
                (None, None) => {
                    let note = if t.cutoff_dropped.contains(&kind) { "cutoff" } else { "absent" };
                    ("NA".to_string(), note.to_string())
                }
            };
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}",
                t.subject_id,
                t.item_id,
                t.condition,
                kind.as_str(),
                value,
                note
            )?;
        }
    }
    Ok(())
}

/// Present measure values parsed back from a measures TSV, keyed by
/// measure kind: (subject, item, condition, value).
pub type MeasureRows = BTreeMap<&'static str, Vec<(String, String, String, f64)>>;

pub fn read_measures_tsv<R: BufRead>(reader: R) -> Result<MeasureRows> {
    let mut out: MeasureRows = BTreeMap::new();
    for kind in MeasureKind::ALL {
        out.insert(kind.as_str(), Vec::new());
    }
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = tsv::fields_exact(&line, 6, line_no)?;
        let kind = MeasureKind::parse(f[3])
            .ok_or_else(|| Error::Format(format!("line {line_no}: unknown measure {:?}", f[3])))?;
        if f[4] == "NA" {
            continue;
        }
        let value = tsv::parse_col_f64(f[4], "value", line_no)?;
        out.get_mut(kind.as_str()).unwrap().push((
            f[0].to_string(),
            f[1].to_string(),
            f[2].to_string(),
            value,
        ));
    }
    Ok(out)
}
