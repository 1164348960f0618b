//! Plain-text formats.
//!
//! * Matrix: first line `n`, then `n` lines of `n` whitespace-separated decimals.
//! * Vector: one real per line.
//! * Key-value: `key = value` lines, `#` comments, list values comma separated.
//!   Used for measurement-map headers and benchmark specs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::symcore::{asymmetry, SymMatrix};

/// Asymmetry above which [`read_matrix`] logs a warning before symmetrizing.
pub const ASYMMETRY_WARN: f64 = 1e-9;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses the matrix text format and symmetrizes the result. Returns the
/// matrix together with the largest asymmetry seen in the input.
pub fn read_matrix(text: &str) -> Result<(SymMatrix, f64)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (first_no, first) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let n: usize = first
        .parse()
        .map_err(|_| parse_err(first_no, format!("expected dimension, found `{first}`")))?;
    if n == 0 {
        return Err(parse_err(first_no, "dimension must be positive"));
    }
    let mut data = DMatrix::zeros(n, n);
    for i in 0..n {
        let (no, line) = lines
            .next()
            .ok_or_else(|| parse_err(first_no + i + 1, format!("missing row {} of {n}", i + 1)))?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != n {
            return Err(parse_err(no, format!("expected {n} values, found {}", vals.len())));
        }
        for (j, v) in vals.iter().enumerate() {
            let x: f64 = v
                .parse()
                .map_err(|_| parse_err(no, format!("invalid number `{v}`")))?;
            if !x.is_finite() {
                return Err(parse_err(no, format!("non-finite value `{v}`")));
            }
            data[(i, j)] = x;
        }
    }
    if let Some((no, extra)) = lines.next() {
        return Err(parse_err(no, format!("unexpected trailing content `{extra}`")));
    }
    let asym = asymmetry(&data);
    if asym > ASYMMETRY_WARN {
        log::warn!("input matrix asymmetric by {asym:e}; symmetrizing");
    }
    Ok((SymMatrix::symmetrize(data), asym))
}

pub fn write_matrix(m: &SymMatrix) -> String {
    m.to_string()
}

/// One real per non-empty line.
pub fn read_vector(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            let v = l.trim();
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(k + 1, format!("invalid number `{v}`")))
        })
        .collect()
}

pub fn write_vector(v: &[f64]) -> String {
    let mut out = String::new();
    for x in v {
        let _ = writeln!(out, "{x}");
    }
    out
}

/// Ordered `key = value` records with their source line numbers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(k + 1, format!("expected `key = value`, found `{line}`")))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(parse_err(k + 1, "empty key"));
            }
            if entries
                .insert(key.clone(), (k + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(parse_err(k + 1, format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { entries })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.0)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.1.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| parse_err(0, format!("missing required key `{key}`")))
    }

    /// Rejects keys outside `allowed`.
    pub fn check_known(&self, allowed: &[&str]) -> Result<()> {
        for (key, (line, _)) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(parse_err(*line, format!("unknown key `{key}`")));
            }
        }
        Ok(())
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| parse_err(*line, format!("invalid value `{v}` for `{key}`"))),
        }
    }

    pub fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    item.parse().map_err(|_| {
                        parse_err(*line, format!("invalid list item `{item}` for `{key}`"))
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_and_symmetrize() {
        let (m, asym) = read_matrix("2\n1 2\n0 1\n").unwrap();
        assert_eq!(asym, 2.0);
        assert_eq!(m.get(0, 1), 1.0);
        let text = write_matrix(&m);
        let (back, asym) = read_matrix(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(asym, 0.0);
    }

    #[test]
    fn matrix_errors_name_the_line() {
        let err = read_matrix("3\n1 0 0\n0 1\n0 0 1\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                msg: "expected 3 values, found 2".into()
            }
        );
        let err = read_matrix("2\n1 x\n0 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(matches!(read_matrix("two\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_matrix("2\n1 0\n"), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn key_values() {
        let kv = KeyValues::parse("# header\nn = 10, 20\nalgo = head-tail # trailing\n\n").unwrap();
        assert_eq!(kv.get("algo"), Some("head-tail"));
        assert_eq!(kv.parse_list::<usize>("n").unwrap(), Some(vec![10, 20]));
        assert_eq!(kv.line_of("algo"), 3);
        assert!(kv.check_known(&["n"]).is_err());
        assert!(KeyValues::parse("a = 1\na = 2\n").is_err());
        assert!(KeyValues::parse("novalue\n").is_err());
    }

    #[test]
    fn vectors() {
        assert_eq!(read_vector("1\n-2.5\n\n3e-2\n").unwrap(), vec![1.0, -2.5, 0.03]);
        assert!(matches!(read_vector("1\nfoo\n"), Err(Error::Parse { line: 2, .. })));
        assert_eq!(read_vector(&write_vector(&[0.1, -7.0])).unwrap(), vec![0.1, -7.0]);
    }
}
