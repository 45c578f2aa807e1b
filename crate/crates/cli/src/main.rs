//! `coocsem` — pipeline driver: index -> pairs -> associates -> ca ->
//! stimgen -> lists -> measures -> analyze -> report.
//!
//! Configuration precedence: built-in defaults, then `--config` file, then
//! `COOCSEM_*` environment variables, then command-line flags.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use coocsem::analysis::{
    analyze_measure, write_diagnostics_tsv, write_table3_tsv, write_table4_tsv, MeasureAnalysis,
};
use coocsem::assoc::{
    batch_ca, default_stoplist, read_pair_list, write_associates_tsv, write_ca_tsv, AssociateStore,
};
use coocsem::cooc::{count_pairs, read_pairs_tsv, write_pairs_tsv, PairStats};
use coocsem::corpus::{ingest_with_threads, CorpusIndex};
use coocsem::error::Error;
use coocsem::eyemeasures::{
    read_fixations_tsv, read_measures_tsv, read_regions_tsv, reduce_trials, write_measures_tsv,
    MeasureKind,
};
use coocsem::lexstats::Lexicon;
use coocsem::stimgen::{
    annotate, assign_condition, randomize_lists_ids, read_candidates_tsv, read_fillers_tsv,
    read_set_ids_tsv, select_set, write_balance_tsv, write_list_tsv, write_set_tsv,
    AnnotationContext, Assignment, CandidatePool,
};
use coocsem::PipelineConfig;

#[derive(Parser)]
#[command(name = "coocsem", version, about = "Sentence co-occurrence statistics and reading-experiment toolkit")]
struct Cli {
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for ingestion and pair counting
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the vocabulary index from a sentence-per-line corpus
    Index {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        lowercase: bool,
        #[arg(long)]
        strip_punctuation: bool,
        /// auto | always | never
        #[arg(long)]
        id_column: Option<String>,
        /// sentence | token
        #[arg(long)]
        freq_class_basis: Option<String>,
    },
    /// Count within-sentence pair co-occurrence and score it
    Pairs {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        min_sentence_freq: Option<u64>,
        #[arg(long)]
        lowercase: bool,
        #[arg(long)]
        strip_punctuation: bool,
        #[arg(long)]
        id_column: Option<String>,
    },
    /// Rank each cue's associates by association strength
    Associates {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// File with one cue per line; omitted = all vocabulary words
        #[arg(long)]
        cues: Option<PathBuf>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        stoplist_size: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        log_base: Option<f64>,
        #[arg(long)]
        stoplist_after_cap: bool,
    },
    /// Count common associates for a list of word pairs
    Ca {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        /// TSV with word_a and word_b columns
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        high: Option<u64>,
        #[arg(long)]
        low: Option<u64>,
    },
    /// Annotate candidates, assign design cells, select a balanced set
    Stimgen {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        out_set: PathBuf,
        #[arg(long)]
        out_report: PathBuf,
        #[arg(long)]
        n_per_cell: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_iters: Option<u64>,
        #[arg(long)]
        restarts: Option<u32>,
        #[arg(long)]
        comma_balance: bool,
        #[arg(long)]
        max_prime_as: Option<f64>,
        /// Enforce the canonical frame and sentence length envelope
        #[arg(long)]
        strict_frames: bool,
    },
    /// Pseudorandomize a selected set into two presentation lists
    Lists {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        fillers: Option<PathBuf>,
        #[arg(long)]
        out_list1: PathBuf,
        #[arg(long)]
        out_list2: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_attempts: Option<u32>,
    },
    /// Reduce a fixation log to per-trial reading measures
    Measures {
        #[arg(long)]
        fixations: PathBuf,
        /// Optional region geometry per item: item_id prime1 prime2 target
        #[arg(long)]
        regions: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        min_fixation_ms: Option<f64>,
        #[arg(long)]
        sfd_ffd_cutoff: Option<f64>,
        #[arg(long)]
        gd_cutoff: Option<f64>,
        #[arg(long)]
        gpd_tvd_cutoff: Option<f64>,
    },
    /// Trim, summarize and fit contrasts on reduced measures
    Analyze {
        #[arg(long)]
        measures: PathBuf,
        #[arg(long)]
        out_table3: PathBuf,
        #[arg(long)]
        out_table4: PathBuf,
        #[arg(long)]
        out_diagnostics: Option<PathBuf>,
        #[arg(long)]
        trim_k: Option<f64>,
    },
    /// Concatenate balance/summary/coefficient tables into one report
    Report {
        #[arg(long)]
        balance: Option<PathBuf>,
        #[arg(long)]
        table3: Option<PathBuf>,
        #[arg(long)]
        table4: Option<PathBuf>,
        /// Output path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn error_category(e: &Error) -> (&'static str, i32) {
    match e {
        Error::Io(_) => ("io", 3),
        Error::Config(_) => ("config", 4),
        Error::Infeasible(_) => ("infeasible", 5),
        Error::Format(_)
        | Error::UnknownWord(_)
        | Error::MissingCue(_)
        | Error::InvalidInput(_)
        | Error::Annotation { .. }
        | Error::Structural { .. }
        | Error::EmptyCorpus => ("data", 6),
        Error::InsufficientData(_) | Error::DegenerateTable | Error::SingularDesign => {
            ("stats", 7)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        let (category, code) = error_category(&e);
        let message = e.to_string().replace('\n', " ");
        eprintln!("error: {category}: {message}");
        std::process::exit(code);
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &cli.config {
        let mut text = String::new();
        open(path)?.read_to_string(&mut text)?;
        cfg.merge_text(&text)?;
    }
    cfg.apply_env(std::env::vars())?;
    if let Some(threads) = cli.threads {
        cfg.set_unchecked("threads", &threads.to_string())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn required_corpus(cfg: &PipelineConfig, flag: Option<PathBuf>) -> Result<PathBuf, Error> {
    match flag {
        Some(p) => Ok(p),
        None if !cfg.corpus.is_empty() => Ok(PathBuf::from(&cfg.corpus)),
        None => Err(Error::Config("corpus path required (--corpus or config)".into())),
    }
}

fn load_index(path: &Path) -> Result<Arc<CorpusIndex>, Error> {
    Ok(Arc::new(CorpusIndex::read_tsv(open(path)?)?))
}

fn load_pair_stats(pairs: &Path, index: &Arc<CorpusIndex>) -> Result<PairStats, Error> {
    read_pairs_tsv(open(pairs)?, Arc::clone(index))
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Index {
            corpus,
            out,
            lowercase,
            strip_punctuation,
            id_column,
            freq_class_basis,
        } => {
            if lowercase {
                cfg.set_unchecked("tokenizer_lowercase", "true")?;
            }
            if strip_punctuation {
                cfg.set_unchecked("tokenizer_strip_punctuation", "true")?;
            }
            if let Some(v) = id_column {
                cfg.set_unchecked("tokenizer_id_column", &v)?;
            }
            if let Some(v) = freq_class_basis {
                cfg.set_unchecked("freq_class_basis", &v)?;
            }
            cfg.validate()?;
            let corpus = required_corpus(&cfg, corpus)?;
            let index = ingest_with_threads(
                open(&corpus)?,
                &cfg.tokenizer_config(),
                cfg.freq_class_basis,
                cfg.threads,
            )?;
            index.write_tsv(create(&out)?)?;
            Ok(())
        }
        Command::Pairs {
            corpus,
            index,
            out,
            min_sentence_freq,
            lowercase,
            strip_punctuation,
            id_column,
        } => {
            if lowercase {
                cfg.set_unchecked("tokenizer_lowercase", "true")?;
            }
            if strip_punctuation {
                cfg.set_unchecked("tokenizer_strip_punctuation", "true")?;
            }
            if let Some(v) = id_column {
                cfg.set_unchecked("tokenizer_id_column", &v)?;
            }
            if let Some(v) = min_sentence_freq {
                cfg.set_unchecked("pairs_min_sentence_freq", &v.to_string())?;
            }
            cfg.validate()?;
            let corpus = required_corpus(&cfg, corpus)?;
            let index = load_index(&index)?;
            let stats = count_pairs(
                open(&corpus)?,
                index,
                &cfg.tokenizer_config(),
                &cfg.pair_count_config(),
                cfg.threads,
            )?;
            write_pairs_tsv(&stats, &cfg.as_config(), create(&out)?)?;
            Ok(())
        }
        Command::Associates {
            index,
            pairs,
            out,
            cues,
            cap,
            stoplist_size,
            threshold,
            log_base,
            stoplist_after_cap,
        } => {
            if let Some(v) = cap {
                cfg.set_unchecked("associates_cap", &v.to_string())?;
            }
            if let Some(v) = stoplist_size {
                cfg.set_unchecked("associates_stoplist_size", &v.to_string())?;
            }
            if let Some(v) = threshold {
                cfg.set_unchecked("as_threshold", &v.to_string())?;
            }
            if let Some(v) = log_base {
                cfg.set_unchecked("as_log_base", &v.to_string())?;
            }
            if stoplist_after_cap {
                cfg.set_unchecked("associates_stoplist_after_cap", "true")?;
            }
            cfg.validate()?;
            let index = load_index(&index)?;
            let stats = load_pair_stats(&pairs, &index)?;
            let cue_list: Option<Vec<String>> = match cues {
                None => None,
                Some(path) => Some(read_lines(&path)?),
            };
            let stoplist = default_stoplist(&index, cfg.associates_stoplist_size);
            let store = AssociateStore::build(
                &stats,
                cue_list.as_deref(),
                &stoplist,
                &cfg.associate_config(),
            )?;
            write_associates_tsv(&store, create(&out)?)?;
            Ok(())
        }
        Command::Ca { index, pairs, query, out, high, low } => {
            if let Some(v) = high {
                cfg.set_unchecked("ca_high", &v.to_string())?;
            }
            if let Some(v) = low {
                cfg.set_unchecked("ca_low", &v.to_string())?;
            }
            cfg.validate()?;
            let index = load_index(&index)?;
            let stats = load_pair_stats(&pairs, &index)?;
            let query_pairs = read_pair_list(open(&query)?)?;
            let mut cues: Vec<String> = query_pairs
                .iter()
                .flat_map(|(a, b)| [a.clone(), b.clone()])
                .collect();
            cues.sort_unstable();
            cues.dedup();
            let stoplist = default_stoplist(&index, cfg.associates_stoplist_size);
            let store =
                AssociateStore::build(&stats, Some(&cues), &stoplist, &cfg.associate_config())?;
            let results: Result<Vec<_>, Error> =
                batch_ca(&query_pairs, &store, &cfg.ca_bands()).into_iter().collect();
            write_ca_tsv(&results?, create(&out)?)?;
            Ok(())
        }
        Command::Stimgen {
            index,
            pairs,
            candidates,
            out_set,
            out_report,
            n_per_cell,
            seed,
            max_iters,
            restarts,
            comma_balance,
            max_prime_as,
            strict_frames,
        } => {
            if let Some(v) = n_per_cell {
                cfg.set_unchecked("stimgen_n_per_cell", &v.to_string())?;
            }
            if let Some(v) = seed {
                cfg.set_unchecked("seed_select", &v.to_string())?;
            }
            if let Some(v) = max_iters {
                cfg.set_unchecked("stimgen_max_iters", &v.to_string())?;
            }
            if let Some(v) = restarts {
                cfg.set_unchecked("stimgen_restarts", &v.to_string())?;
            }
            if comma_balance {
                cfg.set_unchecked("stimgen_comma_balance", "true")?;
            }
            if let Some(v) = max_prime_as {
                cfg.set_unchecked("stimgen_max_prime_as", &v.to_string())?;
            }
            if strict_frames {
                cfg.set_unchecked("stimgen_strict_frames", "true")?;
            }
            cfg.validate()?;
            let index = load_index(&index)?;
            let stats = load_pair_stats(&pairs, &index)?;
            let raw_items = read_candidates_tsv(open(&candidates)?)?;

            // associate sets for every slot word that resolves in the corpus
            let tok = cfg.tokenizer_config();
            let mut cues = Vec::new();
            for raw in &raw_items {
                raw.validate_frame(cfg.stimgen_strict_frames)?;
                for idx in [raw.verb_idx, raw.adjective_idx, raw.noun_idx] {
                    let w = coocsem::stimgen::normalize_slot_word(&raw.tokens[idx], &tok);
                    if index.id_of(&w).is_some() {
                        cues.push(w);
                    }
                }
            }
            cues.sort_unstable();
            cues.dedup();
            let stoplist = default_stoplist(&index, cfg.associates_stoplist_size);
            let store =
                AssociateStore::build(&stats, Some(&cues), &stoplist, &cfg.associate_config())?;
            let lexicon = Lexicon::from_index(
                &index,
                cfg.lexicon_min_sentence_freq,
                cfg.lexicon_case_sensitive,
            );
            let ctx = AnnotationContext {
                index: &index,
                stats: &stats,
                store: &store,
                lexicon: &lexicon,
                bands: cfg.ca_bands(),
                as_config: cfg.as_config(),
                tokenizer: tok.clone(),
            };
            let mut pool = CandidatePool::new();
            let mut rejected = 0usize;
            for raw in &raw_items {
                let item = annotate(raw, &ctx)?;
                match assign_condition(&item, &cfg.ca_bands(), cfg.stimgen_max_prime_as) {
                    Assignment::Cell(label) => pool.push(label, item),
                    Assignment::Rejected(_) => rejected += 1,
                }
            }
            let (set, report) = select_set(&pool, &cfg.select_config())?;
            write_set_tsv(&set, create(&out_set)?)?;
            write_balance_tsv(&report, create(&out_report)?)?;
            eprintln!(
                "stimgen: {} candidates, {} rejected, pass={}, offending=[{}]",
                raw_items.len(),
                rejected,
                report.pass,
                report.offending.join(",")
            );
            Ok(())
        }
        Command::Lists { set, fillers, out_list1, out_list2, seed, max_attempts } => {
            if let Some(v) = seed {
                cfg.set_unchecked("seed_lists", &v.to_string())?;
            }
            if let Some(v) = max_attempts {
                cfg.set_unchecked("lists_max_attempts", &v.to_string())?;
            }
            cfg.validate()?;
            let cells = read_set_ids_tsv(open(&set)?)?;
            let filler_ids = match fillers {
                Some(path) => read_fillers_tsv(open(&path)?)?,
                None => Vec::new(),
            };
            let lists = randomize_lists_ids(&cells, &filler_ids, &cfg.list_config())?;
            write_list_tsv(&lists[0], 1, create(&out_list1)?)?;
            write_list_tsv(&lists[1], 2, create(&out_list2)?)?;
            Ok(())
        }
        Command::Measures {
            fixations,
            regions,
            out,
            min_fixation_ms,
            sfd_ffd_cutoff,
            gd_cutoff,
            gpd_tvd_cutoff,
        } => {
            if let Some(v) = min_fixation_ms {
                cfg.set_unchecked("measures_min_fixation_ms", &v.to_string())?;
            }
            if let Some(v) = sfd_ffd_cutoff {
                cfg.set_unchecked("cutoff_sfd_ffd", &v.to_string())?;
            }
            if let Some(v) = gd_cutoff {
                cfg.set_unchecked("cutoff_gd", &v.to_string())?;
            }
            if let Some(v) = gpd_tvd_cutoff {
                cfg.set_unchecked("cutoff_gpd_tvd", &v.to_string())?;
            }
            cfg.validate()?;
            let region_map = match regions {
                Some(path) => read_regions_tsv(open(&path)?)?,
                None => BTreeMap::new(),
            };
            let trials = read_fixations_tsv(open(&fixations)?, &region_map)?;
            let rows = reduce_trials(&trials, &cfg.reduce_config())?;
            write_measures_tsv(&rows, create(&out)?)?;
            Ok(())
        }
        Command::Analyze { measures, out_table3, out_table4, out_diagnostics, trim_k } => {
            if let Some(v) = trim_k {
                cfg.set_unchecked("trim_k", &v.to_string())?;
            }
            cfg.validate()?;
            let table = read_measures_tsv(open(&measures)?)?;
            let mut analyses: Vec<MeasureAnalysis> = Vec::new();
            for kind in MeasureKind::ALL {
                let rows = &table[kind.as_str()];
                if rows.is_empty() {
                    continue;
                }
                analyses.push(analyze_measure(kind.as_str(), rows, cfg.trim_k)?);
            }
            write_table3_tsv(&analyses, create(&out_table3)?)?;
            write_table4_tsv(&analyses, create(&out_table4)?)?;
            if let Some(path) = out_diagnostics {
                write_diagnostics_tsv(&analyses, create(&path)?)?;
            }
            Ok(())
        }
        Command::Report { balance, table3, table4, out } => {
            let mut sections: Vec<(String, String)> = Vec::new();
            for (name, path) in [
                ("balance", balance),
                ("table3", table3),
                ("table4", table4),
            ] {
                if let Some(path) = path {
                    let mut text = String::new();
                    open(&path)?.read_to_string(&mut text)?;
                    sections.push((name.to_string(), text));
                }
            }
            if sections.is_empty() {
                return Err(Error::Config(
                    "report needs at least one of --balance/--table3/--table4".into(),
                ));
            }
            let mut body = String::new();
            for (name, text) in sections {
                body.push_str(&format!("## {name}\n"));
                body.push_str(&text);
                if !text.ends_with('\n') {
                    body.push('\n');
                }
            }
            match out {
                Some(path) => create(&path)?.write_all(body.as_bytes())?,
                None => std::io::stdout().write_all(body.as_bytes())?,
            }
            Ok(())
        }
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, Error> {
    let mut out = Vec::new();
    for line in open(path)?.lines() {
        let line = line?;
        if !line.is_empty() && !line.starts_with('#') {
            out.push(line);
        }
    }
    Ok(out)
}
