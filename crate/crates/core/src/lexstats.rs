//! Lexical control variables: word length and orthographic neighborhood
//! size (same length, exactly one substituted character).

use std::collections::BTreeSet;
use std::io::Write;

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::tsv;

/// Length-bucketed lexicon for neighbor queries. Characters are Unicode
/// scalar values, so umlauts count as single characters.
#[derive(Debug)]
pub struct Lexicon {
    by_len: std::collections::HashMap<usize, Vec<Box<[char]>>>,
    case_sensitive: bool,
}

impl Lexicon {
    pub fn from_words<I, S>(words: I, case_sensitive: bool) -> Lexicon
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        // BTreeSet dedups case-folded collisions deterministically
        let mut folded: BTreeSet<String> = BTreeSet::new();
        for w in words {
            let w = w.as_ref();
            folded.insert(if case_sensitive { w.to_string() } else { w.to_lowercase() });
        }
        let mut by_len: std::collections::HashMap<usize, Vec<Box<[char]>>> =
            std::collections::HashMap::new();
        for w in folded {
            let chars: Box<[char]> = w.chars().collect();
            by_len.entry(chars.len()).or_default().push(chars);
        }
        Lexicon { by_len, case_sensitive }
    }

    /// Lexicon of all index words at or above a sentence-frequency floor.
    pub fn from_index(index: &CorpusIndex, min_sentence_freq: u64, case_sensitive: bool) -> Lexicon {
        Lexicon::from_words(
            index
                .iter()
                .filter(|e| e.sentence_freq >= min_sentence_freq)
                .map(|e| e.word.as_str()),
            case_sensitive,
        )
    }

    pub fn len(&self) -> usize {
        self.by_len.values().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_len.is_empty()
    }

    /// Coltheart-style neighborhood count: lexicon words of identical
    /// character length differing in exactly one position. The word itself
    /// is never a neighbor.
    pub fn orthographic_neighbors(&self, word: &str) -> Result<u64> {
        if word.is_empty() {
            return Err(Error::InvalidInput("empty word has no neighborhood".into()));
        }
        let query: Vec<char> = if self.case_sensitive {
            word.chars().collect()
        } else {
            word.to_lowercase().chars().collect()
        };
        let Some(bucket) = self.by_len.get(&query.len()) else {
            return Ok(0);
        };
        let mut count = 0u64;
        for cand in bucket {
            let mut diff = 0;
            for (a, b) in query.iter().zip(cand.iter()) {
                if a != b {
                    diff += 1;
                    if diff > 1 {
                        break;
                    }
                }
            }
            if diff == 1 {
                count += 1;
            }
        }
        Ok(count)
    }
}

/// The per-word control bundle: length, neighborhood size, frequency class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexProfile {
    pub word: String,
    pub length: usize,
    pub on_count: u64,
    pub freq_class: u32,
}

pub fn profile(word: &str, index: &CorpusIndex, lexicon: &Lexicon) -> Result<LexProfile> {
    let freq_class = index.frequency_class(word)?;
    Ok(LexProfile {
        word: word.to_string(),
        length: word.chars().count(),
        on_count: lexicon.orthographic_neighbors(word)?,
        freq_class,
    })
}

pub fn write_profiles_tsv<W: Write>(
    words: &[String],
    index: &CorpusIndex,
    lexicon: &Lexicon,
    mut w: W,
) -> Result<()> {
    writeln!(w, "#lexstats")?;
    for word in words {
        tsv::check_no_tab(word, "word")?;
        let p = profile(word, index, lexicon)?;
        writeln!(w, "{}\t{}\t{}\t{}", p.word, p.length, p.on_count, p.freq_class)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest, TokenizerConfig};
    use std::io::Cursor;

    #[test]
    fn single_substitution_neighbors() {
        let lex = Lexicon::from_words(["hand", "band", "hund"], true);
        assert_eq!(lex.orthographic_neighbors("hand").unwrap(), 2);
        assert_eq!(lex.orthographic_neighbors("band").unwrap(), 1);
    }

    #[test]
    fn word_itself_is_not_a_neighbor() {
        let lex = Lexicon::from_words(["selbst"], true);
        assert_eq!(lex.orthographic_neighbors("selbst").unwrap(), 0);
    }

    #[test]
    fn different_lengths_are_never_neighbors() {
        let lex = Lexicon::from_words(["hands", "han"], true);
        assert_eq!(lex.orthographic_neighbors("hand").unwrap(), 0);
    }

    #[test]
    fn umlauts_are_single_characters() {
        let lex = Lexicon::from_words(["Bär", "Bar"], true);
        assert_eq!(lex.orthographic_neighbors("Bür").unwrap(), 2);
    }

    #[test]
    fn case_folding_is_optional() {
        // case-sensitive: "hand" differs from "Hund" in two positions
        let strict = Lexicon::from_words(["Hund"], true);
        assert_eq!(strict.orthographic_neighbors("hand").unwrap(), 0);
        assert_eq!(strict.orthographic_neighbors("Hand").unwrap(), 1);
        // folded: "hand" vs "hund" differ in one
        let folded = Lexicon::from_words(["Hund"], false);
        assert_eq!(folded.orthographic_neighbors("hand").unwrap(), 1);
        // folding makes the word its own (excluded) entry
        assert_eq!(folded.orthographic_neighbors("hund").unwrap(), 0);
    }

    #[test]
    fn empty_word_is_invalid() {
        let lex = Lexicon::from_words(["a"], true);
        assert!(matches!(
            lex.orthographic_neighbors(""),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn neighborhood_is_symmetric() {
        let words = ["kalt", "halt", "kest", "kalb", "welt"];
        for a in words {
            for b in words {
                if a == b {
                    continue;
                }
                let a_sees_b = Lexicon::from_words([b], true)
                    .orthographic_neighbors(a)
                    .unwrap();
                let b_sees_a = Lexicon::from_words([a], true)
                    .orthographic_neighbors(b)
                    .unwrap();
                assert_eq!(a_sees_b, b_sees_a);
            }
        }
    }

    #[test]
    fn profile_bundles_the_single_purpose_calls() {
        let idx = ingest(
            Cursor::new("der hund lief\nder hand\nder\n"),
            &TokenizerConfig::default(),
        )
        .unwrap();
        let lex = Lexicon::from_index(&idx, 1, true);
        let p = profile("hund", &idx, &lex).unwrap();
        assert_eq!(p.length, 4);
        assert_eq!(p.on_count, lex.orthographic_neighbors("hund").unwrap());
        assert_eq!(p.freq_class, idx.frequency_class("hund").unwrap());
        assert_eq!(profile("der", &idx, &lex).unwrap().freq_class, 0);
        assert_eq!(profile("der", &idx, &lex).unwrap().length, 3);
        assert!(matches!(
            profile("zzz", &idx, &lex),
            Err(Error::UnknownWord(_))
        ));
    }
}
