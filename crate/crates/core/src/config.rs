//! Flat key=value pipeline configuration. Every value can be overridden
//! by a config file, `COOCSEM_*` environment variables, or command-line
//! flags (flags win).

use std::collections::BTreeMap;

use crate::assoc::{AssociateConfig, CaBands};
use crate::cooc::{AsConfig, PairCountConfig};
use crate::corpus::{FreqBasis, IdColumn, TokenizerConfig};
use crate::error::{Error, Result};
use crate::eyemeasures::{CutoffConfig, ReduceConfig};
use crate::stimgen::{ListConfig, SelectConfig};
use crate::tsv;

pub const ENV_PREFIX: &str = "COOCSEM_";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: String,
    pub out_dir: String,
    pub threads: usize,

    pub tokenizer_lowercase: bool,
    pub tokenizer_strip_punctuation: bool,
    pub tokenizer_id_column: IdColumn,
    pub freq_class_basis: FreqBasis,

    pub pairs_min_sentence_freq: u64,
    pub as_threshold: f64,
    pub as_log_base: f64,

    pub associates_cap: usize,
    pub associates_stoplist_size: usize,
    pub associates_stoplist_after_cap: bool,
    pub ca_high: u64,
    pub ca_low: u64,

    pub lexicon_min_sentence_freq: u64,
    pub lexicon_case_sensitive: bool,

    pub stimgen_n_per_cell: usize,
    pub stimgen_max_iters: u64,
    pub stimgen_restarts: u32,
    pub stimgen_comma_balance: bool,
    pub stimgen_max_prime_as: f64,
    pub stimgen_strict_frames: bool,
    pub lists_max_attempts: u32,

    pub measures_min_fixation_ms: f64,
    pub cutoff_sfd_ffd: f64,
    pub cutoff_gd: f64,
    pub cutoff_gpd_tvd: f64,
    pub trim_k: f64,

    pub seed_select: u64,
    pub seed_lists: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: String::new(),
            out_dir: ".".into(),
            threads: 1,
            tokenizer_lowercase: false,
            tokenizer_strip_punctuation: false,
            tokenizer_id_column: IdColumn::Auto,
            freq_class_basis: FreqBasis::Sentence,
            pairs_min_sentence_freq: 2,
            as_threshold: 3.841,
            as_log_base: 10.0,
            associates_cap: 1000,
            associates_stoplist_size: 100,
            associates_stoplist_after_cap: false,
            ca_high: 60,
            ca_low: 15,
            lexicon_min_sentence_freq: 1,
            lexicon_case_sensitive: true,
            stimgen_n_per_cell: 40,
            stimgen_max_iters: 20_000,
            stimgen_restarts: 8,
            stimgen_comma_balance: false,
            stimgen_max_prime_as: 0.0,
            stimgen_strict_frames: false,
            lists_max_attempts: 1000,
            measures_min_fixation_ms: 70.0,
            cutoff_sfd_ffd: 800.0,
            cutoff_gd: 1000.0,
            cutoff_gpd_tvd: 1500.0,
            trim_k: 2.5,
            seed_select: 1,
            seed_lists: 1,
        }
    }
}

fn parse_bool(v: &str, key: &str) -> Result<bool> {
    match v {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true/false, got {v:?}"))),
    }
}

impl PipelineConfig {
    /// All keys with their serialized values, sorted.
    pub fn entries(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("corpus", self.corpus.clone());
        m.insert("out_dir", self.out_dir.clone());
        m.insert("threads", self.threads.to_string());
        m.insert("tokenizer_lowercase", self.tokenizer_lowercase.to_string());
        m.insert(
            "tokenizer_strip_punctuation",
            self.tokenizer_strip_punctuation.to_string(),
        );
        m.insert(
            "tokenizer_id_column",
            match self.tokenizer_id_column {
                IdColumn::Auto => "auto".into(),
                IdColumn::Always => "always".into(),
                IdColumn::Never => "never".into(),
            },
        );
        m.insert(
            "freq_class_basis",
            match self.freq_class_basis {
                FreqBasis::Sentence => "sentence".into(),
                FreqBasis::Token => "token".into(),
            },
        );
        m.insert(
            "pairs_min_sentence_freq",
            self.pairs_min_sentence_freq.to_string(),
        );
        m.insert("as_threshold", tsv::fmt_f64(self.as_threshold));
        m.insert("as_log_base", tsv::fmt_f64(self.as_log_base));
        m.insert("associates_cap", self.associates_cap.to_string());
        m.insert(
            "associates_stoplist_size",
            self.associates_stoplist_size.to_string(),
        );
        m.insert(
            "associates_stoplist_after_cap",
            self.associates_stoplist_after_cap.to_string(),
        );
        m.insert("ca_high", self.ca_high.to_string());
        m.insert("ca_low", self.ca_low.to_string());
        m.insert(
            "lexicon_min_sentence_freq",
            self.lexicon_min_sentence_freq.to_string(),
        );
        m.insert(
            "lexicon_case_sensitive",
            self.lexicon_case_sensitive.to_string(),
        );
        m.insert("stimgen_n_per_cell", self.stimgen_n_per_cell.to_string());
        m.insert("stimgen_max_iters", self.stimgen_max_iters.to_string());
        m.insert("stimgen_restarts", self.stimgen_restarts.to_string());
        m.insert(
            "stimgen_comma_balance",
            self.stimgen_comma_balance.to_string(),
        );
        m.insert("stimgen_max_prime_as", tsv::fmt_f64(self.stimgen_max_prime_as));
        m.insert(
            "stimgen_strict_frames",
            self.stimgen_strict_frames.to_string(),
        );
        m.insert("lists_max_attempts", self.lists_max_attempts.to_string());
        m.insert(
            "measures_min_fixation_ms",
            tsv::fmt_f64(self.measures_min_fixation_ms),
        );
        m.insert("cutoff_sfd_ffd", tsv::fmt_f64(self.cutoff_sfd_ffd));
        m.insert("cutoff_gd", tsv::fmt_f64(self.cutoff_gd));
        m.insert("cutoff_gpd_tvd", tsv::fmt_f64(self.cutoff_gpd_tvd));
        m.insert("trim_k", tsv::fmt_f64(self.trim_k));
        m.insert("seed_select", self.seed_select.to_string());
        m.insert("seed_lists", self.seed_lists.to_string());
        m
    }

    /// Sets one key and immediately re-validates the whole config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.set_unchecked(key, value)?;
        self.validate()
    }

    /// Sets one key without cross-field validation, so that batched
    /// overrides may pass through transiently inconsistent states (e.g.
    /// lowering both CA bands). Callers validate once at the end.
    pub fn set_unchecked(&mut self, key: &str, value: &str) -> Result<()> {
        let bad_num = |k: &str, v: &str| Error::Config(format!("{k}: cannot parse {v:?}"));
        match key {
            "corpus" => self.corpus = value.to_string(),
            "out_dir" => self.out_dir = value.to_string(),
            "threads" => self.threads = value.parse().map_err(|_| bad_num(key, value))?,
            "tokenizer_lowercase" => self.tokenizer_lowercase = parse_bool(value, key)?,
            "tokenizer_strip_punctuation" => {
                self.tokenizer_strip_punctuation = parse_bool(value, key)?
            }
            "tokenizer_id_column" => {
                self.tokenizer_id_column = match value {
                    "auto" => IdColumn::Auto,
                    "always" => IdColumn::Always,
                    "never" => IdColumn::Never,
                    _ => {
                        return Err(Error::Config(format!(
                            "tokenizer_id_column: expected auto|always|never, got {value:?}"
                        )))
                    }
                }
            }
            "freq_class_basis" => {
                self.freq_class_basis = match value {
                    "sentence" => FreqBasis::Sentence,
                    "token" => FreqBasis::Token,
                    _ => {
                        return Err(Error::Config(format!(
                            "freq_class_basis: expected sentence|token, got {value:?}"
                        )))
                    }
                }
            }
            "pairs_min_sentence_freq" => {
                self.pairs_min_sentence_freq = value.parse().map_err(|_| bad_num(key, value))?
            }
            "as_threshold" => {
                self.as_threshold = tsv::parse_f64(value).map_err(|_| bad_num(key, value))?
            }
            "as_log_base" => {
                self.as_log_base = tsv::parse_f64(value).map_err(|_| bad_num(key, value))?
            }
            "associates_cap" => {
                self.associates_cap = value.parse().map_err(|_| bad_num(key, value))?
            }
            "associates_stoplist_size" => {
                self.associates_stoplist_size = value.parse().map_err(|_| bad_num(key, value))?
            }
            "associates_stoplist_after_cap" => {
                self.associates_stoplist_after_cap = parse_bool(value, key)?
            }
            "ca_high" => self.ca_high = value.parse().map_err(|_| bad_num(key, value))?,
            "ca_low" => self.ca_low = value.parse().map_err(|_| bad_num(key, value))?,
            "lexicon_min_sentence_freq" => {
                self.lexicon_min_sentence_freq = value.parse().map_err(|_| bad_num(key, value))?
            }
            "lexicon_case_sensitive" => self.lexicon_case_sensitive = parse_bool(value, key)?,
            "stimgen_n_per_cell" => {
                self.stimgen_n_per_cell = value.parse().map_err(|_| bad_num(key, value))?
            }
            "stimgen_max_iters" => {
                self.stimgen_max_iters = value.parse().map_err(|_| bad_num(key, value))?
            }
            "stimgen_restarts" => {
                self.stimgen_restarts = value.parse().map_err(|_| bad_num(key, value))?
            }
            "stimgen_comma_balance" => self.stimgen_comma_balance = parse_bool(value, key)?,
            "stimgen_max_prime_as" => {
                self.stimgen_max_prime_as = tsv::parse_f64(value).map_err(|_| bad_num(key, value))?
            }
            "stimgen_strict_frames" => self.stimgen_strict_frames = parse_bool(value, key)?,
            "lists_max_attempts" => {
                self.lists_max_attempts = value.parse().map_err(|_| bad_num(key, value))?
            }
            "measures_min_fixation_ms" => {
                self.measures_min_fixation_ms =
                    tsv::parse_f64(value).map_err(|_| bad_num(key, value))?
            }
            "cutoff_sfd_ffd" => {
                self.cutoff_sfd_ffd = tsv::parse_f64(value).map_err(|_| bad_num(key, value))?
            }
            "cutoff_gd" => {
                self.cutoff_gd = tsv::parse_f64(value).map_err(|_| bad_num(key, value))?
            }
            "cutoff_gpd_tvd" => {
                self.cutoff_gpd_tvd = tsv::parse_f64(value).map_err(|_| bad_num(key, value))?
            }
            "trim_k" => self.trim_k = tsv::parse_f64(value).map_err(|_| bad_num(key, value))?,
            "seed_select" => self.seed_select = value.parse().map_err(|_| bad_num(key, value))?,
            "seed_lists" => self.seed_lists = value.parse().map_err(|_| bad_num(key, value))?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.ca_high < self.ca_low {
            return Err(Error::Config(format!(
                "ca_high ({}) must be >= ca_low ({})",
                self.ca_high, self.ca_low
            )));
        }
        if self.as_log_base <= 1.0 {
            return Err(Error::Config("as_log_base must exceed 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be positive".into()));
        }
        if self.trim_k <= 0.0 {
            return Err(Error::Config("trim_k must be positive".into()));
        }
        if self.measures_min_fixation_ms < 0.0 {
            return Err(Error::Config("measures_min_fixation_ms must be non-negative".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Parses `key=value` lines; blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected key=value, got {line:?}",
                    i + 1
                )));
            };
            self.set_unchecked(key.trim(), value.trim())?;
        }
        self.validate()
    }

    /// Applies `COOCSEM_<KEY>` overrides from an environment snapshot.
    pub fn apply_env(&mut self, vars: impl Iterator<Item = (String, String)>) -> Result<()> {
        let known: Vec<&'static str> = self.entries().keys().copied().collect();
        for (name, value) in vars {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
            let key = rest.to_lowercase();
            if known.contains(&key.as_str()) {
                self.set_unchecked(&key, &value)?;
            } else {
                return Err(Error::Config(format!("unknown env override {name}")));
            }
        }
        self.validate()
    }

    pub fn tokenizer_config(&self) -> TokenizerConfig {
        TokenizerConfig {
            lowercase: self.tokenizer_lowercase,
            strip_punctuation: self.tokenizer_strip_punctuation,
            id_column: self.tokenizer_id_column,
        }
    }

    pub fn as_config(&self) -> AsConfig {
        AsConfig { threshold: self.as_threshold, log_base: self.as_log_base }
    }

    pub fn pair_count_config(&self) -> PairCountConfig {
        PairCountConfig { min_sentence_freq: self.pairs_min_sentence_freq }
    }

    pub fn associate_config(&self) -> AssociateConfig {
        AssociateConfig {
            cap: self.associates_cap,
            stoplist_size: self.associates_stoplist_size,
            stoplist_after_cap: self.associates_stoplist_after_cap,
            as_config: self.as_config(),
        }
    }

    pub fn ca_bands(&self) -> CaBands {
        CaBands { high: self.ca_high, low: self.ca_low }
    }

    pub fn select_config(&self) -> SelectConfig {
        SelectConfig {
            n_per_cell: self.stimgen_n_per_cell,
            max_iters: self.stimgen_max_iters,
            restarts: self.stimgen_restarts,
            seed: self.seed_select,
            f_threshold: 1.0,
            comma_balance: self.stimgen_comma_balance,
        }
    }

    pub fn list_config(&self) -> ListConfig {
        ListConfig {
            seed: self.seed_lists,
            max_attempts: self.lists_max_attempts,
            max_run: 2,
        }
    }

    pub fn reduce_config(&self) -> ReduceConfig {
        ReduceConfig {
            min_fixation_ms: self.measures_min_fixation_ms,
            cutoffs: CutoffConfig {
                sfd_ffd_max: self.cutoff_sfd_ffd,
                gd_max: self.cutoff_gd,
                gpd_tvd_max: self.cutoff_gpd_tvd,
            },
        }
    }
}
