//! Independent-oracle checks: every derived value is recomputed by a
//! second route (naive recounts, exhaustive enumeration, brute force)
//! before being trusted.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Cursor;
use std::sync::Arc;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coocsem::assoc::{
    batch_ca, build_associates, common_associates, default_stoplist, AssociateConfig,
    AssociateStore, CaBands,
};
use coocsem::cooc::{
    association_strength, count_pairs, log_likelihood, ContingencyTable, PairCountConfig,
    PairStats,
};
use coocsem::corpus::{ingest, CorpusIndex, TokenizerConfig};
use coocsem::lexstats::{profile, Lexicon};

/// Fixed Zipf-ish sampler over a synthetic vocabulary.
fn zipf_corpus(n_sentences: usize, vocab: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..vocab).map(|r| 1.0 / (r as f64 + 1.0)).collect();
    let dist = WeightedIndex::new(&weights).unwrap();
    let mut text = String::new();
    for _ in 0..n_sentences {
        let len = rng.random_range(3..=9);
        for i in 0..len {
            if i > 0 {
                text.push(' ');
            }
            text.push_str(&format!("w{:03}", dist.sample(&mut rng)));
        }
        text.push('\n');
    }
    text
}

fn build(text: &str, min_sf: u64) -> (Arc<CorpusIndex>, PairStats) {
    let cfg = TokenizerConfig::default();
    let index = Arc::new(ingest(Cursor::new(text), &cfg).unwrap());
    let stats = count_pairs(
        Cursor::new(text),
        Arc::clone(&index),
        &cfg,
        &PairCountConfig { min_sentence_freq: min_sf },
        1,
    )
    .unwrap();
    (index, stats)
}

#[test]
fn zipf_frequencies_match_naive_recount() {
    let text = zipf_corpus(10_000, 120, 17);
    let index = ingest(Cursor::new(&text), &TokenizerConfig::default()).unwrap();

    // oracle: single-threaded recount with plain maps
    let mut sentence_freq: HashMap<&str, u64> = HashMap::new();
    let mut token_freq: HashMap<&str, u64> = HashMap::new();
    let mut n_sentences = 0u64;
    for line in text.lines() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        n_sentences += 1;
        let mut seen = HashSet::new();
        for t in tokens {
            *token_freq.entry(t).or_insert(0) += 1;
            if seen.insert(t) {
                *sentence_freq.entry(t).or_insert(0) += 1;
            }
        }
    }
    assert_eq!(index.n_sentences(), n_sentences);
    assert_eq!(index.len(), sentence_freq.len());
    for e in index.iter() {
        assert_eq!(e.sentence_freq, sentence_freq[e.word.as_str()], "{}", e.word);
        assert_eq!(e.token_freq, token_freq[e.word.as_str()], "{}", e.word);
    }
}

#[test]
fn top_frequent_matches_full_sort_oracle() {
    let text = zipf_corpus(10_000, 120, 17);
    let index = ingest(Cursor::new(&text), &TokenizerConfig::default()).unwrap();
    let mut oracle: Vec<(&str, u64)> = index
        .iter()
        .map(|e| (e.word.as_str(), e.sentence_freq))
        .collect();
    oracle.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let expected: Vec<&str> = oracle.iter().take(100).map(|(w, _)| *w).collect();
    assert_eq!(index.top_frequent(100), expected);
}

#[test]
fn pair_counts_match_nested_loop_recount() {
    let text = zipf_corpus(2_000, 60, 23);
    let (_, stats) = build(&text, 1);

    // oracle: per sentence, nested loop over the deduplicated token set
    let mut oracle: HashMap<(String, String), u64> = HashMap::new();
    for line in text.lines() {
        let mut tokens: Vec<&str> = line.split_whitespace().collect();
        tokens.sort_unstable();
        tokens.dedup();
        for i in 0..tokens.len() {
            for j in 0..tokens.len() {
                if tokens[i] < tokens[j] {
                    *oracle
                        .entry((tokens[i].to_string(), tokens[j].to_string()))
                        .or_insert(0) += 1;
                }
            }
        }
    }
    let mut n_checked = 0;
    for ((a, b), &expected) in &oracle {
        assert_eq!(stats.count(a, b).unwrap(), expected, "({a}, {b})");
        n_checked += 1;
    }
    assert_eq!(stats.n_pairs(), n_checked);
}

/// Entropy-form evaluation of the Dunning statistic:
/// 2 * (sum k ln k - sum row ln row - sum col ln col + n ln n).
fn g2_entropy_form(t: &ContingencyTable) -> f64 {
    fn xlnx(v: u64) -> f64 {
        if v == 0 {
            0.0
        } else {
            let v = v as f64;
            v * v.ln()
        }
    }
    let cells = xlnx(t.k11) + xlnx(t.k12) + xlnx(t.k21) + xlnx(t.k22);
    let rows = xlnx(t.k11 + t.k12) + xlnx(t.k21 + t.k22);
    let cols = xlnx(t.k11 + t.k21) + xlnx(t.k12 + t.k22);
    2.0 * (cells - rows - cols + xlnx(t.n()))
}

#[test]
fn g2_agrees_with_entropy_form_on_small_tables() {
    for n in 1..=14u64 {
        for k11 in 0..=n {
            for k12 in 0..=(n - k11) {
                for k21 in 0..=(n - k11 - k12) {
                    let t = ContingencyTable { k11, k12, k21, k22: n - k11 - k12 - k21 };
                    let a = log_likelihood(&t).unwrap();
                    let b = g2_entropy_form(&t).max(0.0);
                    let scale = a.abs().max(b.abs()).max(1.0);
                    assert!(
                        (a - b).abs() / scale < 1e-9,
                        "{t:?}: expected-counts {a} vs entropy {b}"
                    );
                }
            }
        }
    }
}

#[test]
fn as_magnitude_for_moderate_g2_sits_in_reported_band() {
    // find a table with g2 near 17; log10 puts AS near 1.23
    let mut best: Option<(ContingencyTable, f64)> = None;
    for k11 in 1..=20u64 {
        for k12 in 0..=30 {
            for k21 in 0..=30 {
                for k22 in [100u64, 300, 500] {
                    let t = ContingencyTable { k11, k12, k21, k22 };
                    let g2 = log_likelihood(&t).unwrap();
                    if (g2 - 17.0).abs() < best.as_ref().map_or(0.5, |(_, d)| *d)
                        && (t.k11 as f64) > t.expected_k11()
                    {
                        best = Some((t, (g2 - 17.0).abs()));
                    }
                }
            }
        }
    }
    let (t, _) = best.expect("a table with g2 near 17 exists");
    let g2 = log_likelihood(&t).unwrap();
    let as_value = g2.log10();
    assert!((1.20..=1.26).contains(&as_value), "as = {as_value}");
}

/// Corpus where cue q significantly co-occurs with exactly three
/// non-stoplist words (x, y, z) and one stoplisted word.
#[test]
fn associates_match_exhaustive_full_vocab_oracle() {
    let mut text = String::new();
    for _ in 0..10 {
        text.push_str("q x y\nq z stop\n");
    }
    for i in 0..300 {
        text.push_str(&format!("stop n{}\n", i % 40));
    }
    let (index, stats) = build(&text, 1);
    let stoplist: HashSet<String> = ["stop".to_string()].into();
    let cfg = AssociateConfig::default();
    let set = build_associates("q", &stats, &stoplist, &cfg).unwrap();

    // oracle: association strength against every vocabulary word
    let mut oracle: Vec<(String, f64)> = Vec::new();
    for entry in index.iter() {
        let w = entry.word.as_str();
        if w == "q" || stoplist.contains(w) {
            continue;
        }
        let rec = association_strength("q", w, &stats, &cfg.as_config).unwrap();
        if rec.as_value > 0.0 {
            oracle.push((w.to_string(), rec.as_value));
        }
    }
    oracle.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    oracle.truncate(cfg.cap);
    assert_eq!(set.entries(), oracle.as_slice());
    let members: HashSet<&str> = set.entries().iter().map(|(w, _)| w.as_str()).collect();
    assert_eq!(members, ["x", "y", "z"].into());
}

#[test]
fn cap_keeps_the_largest_as_values_after_stoplisting() {
    // 30 planted associates with graded strength, cap at 20
    let mut text = String::new();
    for i in 0..30 {
        let reps = if i < 15 { 4 } else { 3 };
        for _ in 0..reps {
            text.push_str(&format!("q a{i:02}\n"));
        }
    }
    for i in 0..400 {
        text.push_str(&format!("n{} m{}\n", i % 25, (i * 3) % 31));
    }
    let (_, stats) = build(&text, 1);
    let cfg = AssociateConfig { cap: 20, ..AssociateConfig::default() };
    let set = build_associates("q", &stats, &HashSet::new(), &cfg).unwrap();
    assert_eq!(set.len(), 20);
    // oracle: full sort of all candidates
    let all = build_associates("q", &stats, &HashSet::new(), &AssociateConfig::default()).unwrap();
    assert_eq!(all.len(), 30);
    let expected: Vec<(String, f64)> = all.entries()[..20].to_vec();
    assert_eq!(set.entries(), expected.as_slice());
}

/// Synthetic corpus with planted topic clusters for overlap checks.
fn clustered_corpus(n_sentences: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_topics = 24;
    let words_per_topic = 12;
    let mut text = String::new();
    for _ in 0..n_sentences {
        let topic = rng.random_range(0..n_topics);
        let len = rng.random_range(4..=8);
        for i in 0..len {
            if i > 0 {
                text.push(' ');
            }
            // mostly topic words, sometimes a global word
            if rng.random_range(0..10) < 8 {
                let w = rng.random_range(0..words_per_topic);
                text.push_str(&format!("t{topic:02}w{w:02}"));
            } else {
                text.push_str(&format!("g{:02}", rng.random_range(0..20)));
            }
        }
        text.push('\n');
    }
    text
}

#[test]
fn common_associates_match_full_vocab_intersection_oracle() {
    let text = clustered_corpus(3_000, 5);
    let (index, stats) = build(&text, 2);
    let cfg = AssociateConfig::default();
    let stoplist = default_stoplist(&index, 20);
    let store = AssociateStore::build(&stats, None, &stoplist, &cfg).unwrap();
    let bands = CaBands::default();

    let words: Vec<String> = index.iter().map(|e| e.word.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let a = &words[rng.random_range(0..words.len())];
        let b = &words[rng.random_range(0..words.len())];
        let got = common_associates(a, b, &store, &bands).unwrap();
        // oracle: scan the entire vocabulary for joint membership
        let sa = store.get(a).unwrap();
        let sb = store.get(b).unwrap();
        let expected = if a == b {
            sa.len() as u64
        } else {
            words
                .iter()
                .filter(|w| sa.contains(w) && sb.contains(w))
                .count() as u64
        };
        assert_eq!(got.ca_count, expected, "({a}, {b})");
        assert_eq!(got.band, bands.classify(expected));
    }
}

#[test]
fn batch_ca_equals_sequential_oracle() {
    let text = clustered_corpus(1_500, 9);
    let (index, stats) = build(&text, 2);
    let store = AssociateStore::build(
        &stats,
        None,
        &default_stoplist(&index, 10),
        &AssociateConfig::default(),
    )
    .unwrap();
    let bands = CaBands::default();
    let words: Vec<String> = index.iter().map(|e| e.word.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pairs: Vec<(String, String)> = (0..10_000)
        .map(|_| {
            (
                words[rng.random_range(0..words.len())].clone(),
                words[rng.random_range(0..words.len())].clone(),
            )
        })
        .collect();
    let batched = batch_ca(&pairs, &store, &bands);
    assert_eq!(batched.len(), pairs.len());
    for ((a, b), got) in pairs.iter().zip(&batched) {
        let expected = common_associates(a, b, &store, &bands).unwrap();
        assert_eq!(got.as_ref().unwrap(), &expected);
    }
}

#[test]
fn pair_engineered_to_share_61_associates_lands_in_high_band() {
    // q1 carries features 0..70, q2 carries 9..84; the shared block is
    // 9..70 = 61 features
    let mut text = String::new();
    for i in 0..70 {
        for _ in 0..3 {
            text.push_str(&format!("q1 f{i:02}\n"));
        }
    }
    for i in 9..84 {
        for _ in 0..3 {
            text.push_str(&format!("q2 f{i:02}\n"));
        }
    }
    for i in 0..3000 {
        text.push_str(&format!("n{:03} m{:03}\n", i % 120, (i * 13) % 131));
    }
    let (index, stats) = build(&text, 2);
    let store = AssociateStore::build(
        &stats,
        Some(&["q1".to_string(), "q2".to_string()]),
        &HashSet::new(),
        &AssociateConfig::default(),
    )
    .unwrap();
    assert_eq!(store.get("q1").unwrap().len(), 70);
    assert_eq!(store.get("q2").unwrap().len(), 75);
    let r = common_associates("q1", "q2", &store, &CaBands::default()).unwrap();
    // oracle: brute-force intersection over the vocabulary
    let s1 = store.get("q1").unwrap();
    let s2 = store.get("q2").unwrap();
    let brute = index
        .iter()
        .filter(|e| s1.contains(&e.word) && s2.contains(&e.word))
        .count() as u64;
    assert_eq!(r.ca_count, brute);
    assert_eq!(r.ca_count, 61);
    assert_eq!(r.band, coocsem::assoc::Band::High);
}

#[test]
fn orthographic_neighbors_match_pairwise_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let alphabet = ['a', 'b', 'c', 'd', 'e', 'f'];
    let words: Vec<String> = (0..300)
        .map(|_| {
            let len = rng.random_range(3..=6);
            (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
        })
        .collect();
    let unique: Vec<String> = {
        let set: std::collections::BTreeSet<String> = words.iter().cloned().collect();
        set.into_iter().collect()
    };
    let lex = Lexicon::from_words(unique.iter(), true);

    let mut brute: BTreeMap<&str, u64> = BTreeMap::new();
    for a in &unique {
        let mut count = 0;
        for b in &unique {
            if a == b || a.len() != b.len() {
                continue;
            }
            let diff = a.bytes().zip(b.bytes()).filter(|(x, y)| x != y).count();
            if diff == 1 {
                count += 1;
            }
        }
        brute.insert(a.as_str(), count);
    }
    for w in &unique {
        assert_eq!(lex.orthographic_neighbors(w).unwrap(), brute[w.as_str()], "{w}");
    }
}

#[test]
fn profile_composes_the_individual_operations() {
    let text = zipf_corpus(500, 40, 7);
    let (index, _) = build(&text, 1);
    let lex = Lexicon::from_index(&index, 1, true);
    for e in index.iter().take(20) {
        let p = profile(&e.word, &index, &lex).unwrap();
        assert_eq!(p.length, e.word.chars().count());
        assert_eq!(p.on_count, lex.orthographic_neighbors(&e.word).unwrap());
        assert_eq!(p.freq_class, index.frequency_class(&e.word).unwrap());
    }
}
