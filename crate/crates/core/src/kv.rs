//! Line-oriented `key = value` text used for manifests, generator specs,
//! hyperparameter grids and run configuration.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KvError {
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("key `{key}`: cannot parse {value:?}")]
    Value { key: String, value: String },
    #[error("key `{0}` given more than once")]
    Duplicate(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Ordered list of entries; keys may repeat (e.g. `cover`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvFile {
    entries: Vec<(String, String)>,
}

impl KvFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| KvError::Syntax {
                line: n + 1,
                text: raw.to_string(),
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(KvError::Syntax { line: n + 1, text: raw.to_string() });
            }
            entries.push((key.to_string(), v.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self, KvError> {
        let text = std::fs::read_to_string(path).map_err(|source| KvError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Replace every entry for `key` with a single one.
    pub fn set(&mut self, key: &str, value: impl fmt::Display) {
        self.entries.retain(|(k, _)| k != key);
        self.push(key, value);
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.iter().any(|(k, _)| k == key)
    }

    pub fn get_all<'a, 'k>(&'a self, key: &'k str) -> impl Iterator<Item = &'a str> + use<'a, 'k> {
        self.entries.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Single value for `key`; repeated keys are an error.
    pub fn get(&self, key: &str) -> Result<Option<&str>, KvError> {
        let mut it = self.get_all(key);
        let first = it.next();
        if it.next().is_some() {
            return Err(KvError::Duplicate(key.to_string()));
        }
        Ok(first)
    }

    pub fn require(&self, key: &str) -> Result<&str, KvError> {
        self.get(key)?.ok_or_else(|| KvError::Missing(key.to_string()))
    }

    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>, KvError> {
        match self.get(key)? {
            None => Ok(None),
            Some(v) => parse_token(key, v).map(Some),
        }
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, KvError> {
        Ok(self.parse_value(key)?.unwrap_or(default))
    }

    /// Whitespace- or comma-separated list.
    pub fn parse_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, KvError> {
        match self.get(key)? {
            None => Ok(None),
            Some(v) => split_list(v).map(|t| parse_token(key, t)).collect::<Result<_, _>>().map(Some),
        }
    }

    /// Overlay `other` on top of `self`: keys present in `other` win.
    pub fn overlay(&mut self, other: &KvFile) {
        let mut replaced: Vec<&str> = Vec::new();
        for (k, _) in &other.entries {
            if !replaced.contains(&k.as_str()) {
                self.entries.retain(|(mine, _)| mine != k);
                replaced.push(k);
            }
        }
        self.entries.extend(other.entries.iter().cloned());
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

pub fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty())
}

fn parse_token<T: FromStr>(key: &str, v: &str) -> Result<T, KvError> {
    v.parse().map_err(|_| KvError::Value { key: key.to_string(), value: v.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_repeated_keys_and_comments() {
        let kv = KvFile::parse("# header\nclasses = 3\ncover = a.asc\n\ncover = b.asc\n").unwrap();
        assert_eq!(kv.parse_value::<usize>("classes").unwrap(), Some(3));
        assert_eq!(kv.get_all("cover").collect::<Vec<_>>(), vec!["a.asc", "b.asc"]);
        assert!(matches!(kv.get("cover"), Err(KvError::Duplicate(_))));
    }

    #[test]
    fn rejects_line_without_equals() {
        assert!(matches!(KvFile::parse("oops"), Err(KvError::Syntax { line: 1, .. })));
    }

    #[test]
    fn lists_and_overlay() {
        let mut base = KvFile::parse("sizes = 1 2 3\neps = 0.1, 10").unwrap();
        assert_eq!(base.parse_list::<f64>("eps").unwrap(), Some(vec![0.1, 10.0]));
        base.overlay(&KvFile::parse("sizes = 4").unwrap());
        assert_eq!(base.parse_list::<usize>("sizes").unwrap(), Some(vec![4]));
    }
}
