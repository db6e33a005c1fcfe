//! Plain-text report bodies: ordered `key: value` lines and delimited tables.

use std::fmt;

/// Version tag written as the first line of every report.
pub const REPORT_SCHEMA: &str = "ebicert-report/1";

/// Ordered `key: value` pairs. Keys are unique; pushing a duplicate panics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        let key = key.into();
        assert!(self.get(&key).is_none(), "duplicate report key `{key}`");
        self.entries.push((key, value.to_string()));
    }

    pub fn extend(&mut self, other: KeyValues) {
        for (k, v) in other.entries {
            self.push(k, v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses lines written by [`fmt::Display`]; blank lines end the block.
    pub fn parse(text: &str) -> Self {
        let mut kv = Self::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                break;
            }
            if let Some((k, v)) = line.split_once(": ") {
                kv.entries.push((k.to_string(), v.to_string()));
            }
        }
        kv
    }
}

impl fmt::Display for KeyValues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}: {v}")?;
        }
        Ok(())
    }
}

/// A comma-delimited table with a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_round_trip() {
        let mut kv = KeyValues::new();
        kv.push("a", 1.5);
        kv.push("b.c", true);
        let parsed = KeyValues::parse(&kv.to_string());
        assert_eq!(parsed, kv);
        assert_eq!(parsed.get("b.c"), Some("true"));
    }

    #[test]
    #[should_panic(expected = "duplicate")]
    fn duplicate_keys_panic() {
        let mut kv = KeyValues::new();
        kv.push("a", 1);
        kv.push("a", 2);
    }
}
