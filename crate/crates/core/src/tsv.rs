//! Small helpers shared by the TSV readers and writers.
//!
//! All artifact files are tab-separated, UTF-8, `\n` line endings, no
//! quoting. Lines starting with `#` carry file-level metadata. Fields may
//! not contain literal tabs; rows with an unexpected column count are
//! rejected at ingestion.

use std::str::FromStr;

use crate::error::{Error, Result};

/// Shortest round-trip formatting for floats, so written values parse back
/// to the identical bit pattern.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

pub fn parse_f64(s: &str) -> std::result::Result<f64, std::num::ParseFloatError> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse(),
    }
}

pub(crate) fn check_no_tab(field: &str, what: &str) -> Result<()> {
    if field.contains('\t') {
        return Err(Error::Format(format!("{what} contains a literal tab: {field:?}")));
    }
    Ok(())
}

/// Splits a data line and checks the column count.
pub(crate) fn fields_exact(line: &str, n: usize, line_no: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != n {
        return Err(Error::Format(format!(
            "line {line_no}: expected {n} tab-separated fields, found {}",
            fields.len()
        )));
    }
    Ok(fields)
}

pub(crate) fn parse_col<T: FromStr>(s: &str, col: &str, line_no: usize) -> Result<T> {
    s.parse().map_err(|_| {
        Error::Format(format!("line {line_no}: cannot parse {col} from {s:?}"))
    })
}

pub(crate) fn parse_col_f64(s: &str, col: &str, line_no: usize) -> Result<f64> {
    parse_f64(s).map_err(|_| {
        Error::Format(format!("line {line_no}: cannot parse {col} from {s:?}"))
    })
}

/// Parses `key=value` pairs from a `#` metadata line.
pub(crate) fn header_pairs(line: &str) -> Vec<(&str, &str)> {
    line.trim_start_matches('#')
        .split('\t')
        .filter_map(|part| part.split_once('='))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip() {
        for v in [0.0, 1.23, 27.725887222397812, 3.841, -0.04, 1e-12] {
            assert_eq!(parse_f64(&fmt_f64(v)).unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(parse_f64("inf").unwrap(), f64::INFINITY);
    }

    #[test]
    fn rejects_wrong_column_count() {
        assert!(fields_exact("a\tb", 3, 1).is_err());
        assert!(fields_exact("a\tb\tc", 3, 1).is_ok());
    }

    #[test]
    fn header_pairs_parse() {
        let pairs = header_pairs("#n_sentences=3\tf_max=2");
        assert_eq!(pairs, vec![("n_sentences", "3"), ("f_max", "2")]);
    }
}
