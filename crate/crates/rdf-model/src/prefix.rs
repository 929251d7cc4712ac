use std::collections::BTreeMap;

use thiserror::Error;

use crate::term::Uri;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PrefixError {
    #[error("invalid prefix label {0:?}: labels are [A-Za-z][A-Za-z0-9-]*")]
    InvalidLabel(String),
    #[error("prefix label {0:?} already bound to a different namespace")]
    DuplicateLabel(String),
    #[error("malformed prefix line {line}: expected `label<TAB or space>namespace`")]
    MalformedLine { line: usize },
}

/// Bidirectional namespace prefix table.
///
/// Compression rewrites a full URI whose head matches a registered namespace
/// into `label_localname`; expansion reverses it. Labels never contain an
/// underscore, so the first underscore in a compacted name separates the
/// label from the local part.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrefixTable {
    by_label: BTreeMap<String, String>,
}

fn label_ok(label: &str) -> bool {
    let mut chars = label.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '-')
}

impl PrefixTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, label: &str, namespace: &str) -> Result<(), PrefixError> {
        if !label_ok(label) {
            return Err(PrefixError::InvalidLabel(label.to_string()));
        }
        if let Some(existing) = self.by_label.get(label) {
            if existing != namespace {
                return Err(PrefixError::DuplicateLabel(label.to_string()));
            }
            return Ok(());
        }
        self.by_label.insert(label.to_string(), namespace.to_string());
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.by_label.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.by_label.iter().map(|(l, n)| (l.as_str(), n.as_str()))
    }

    pub fn namespace(&self, label: &str) -> Option<&str> {
        self.by_label.get(label).map(|n| n.as_str())
    }

    /// Parse a sidecar file of `label namespace` lines (whitespace separated,
    /// `#` comments and blank lines skipped).
    pub fn parse(text: &str) -> Result<Self, PrefixError> {
        let mut table = PrefixTable::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (label, ns) = match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(n), None) => (l, n),
                _ => return Err(PrefixError::MalformedLine { line: idx + 1 }),
            };
            table.add(label, ns)?;
        }
        Ok(table)
    }

    /// Compact a full URI against the table. The longest matching namespace
    /// wins; ties cannot happen because namespaces are distinct strings. A
    /// URI with no matching namespace, or with an empty local part, is
    /// returned unchanged.
    pub fn compress_uri(&self, uri: &str) -> String {
        let mut best: Option<(&str, &str)> = None;
        for (label, ns) in &self.by_label {
            if let Some(local) = uri.strip_prefix(ns.as_str()) {
                if local.is_empty() {
                    continue;
                }
                match best {
                    Some((_, bns)) if bns.len() >= ns.len() => {}
                    _ => best = Some((label, ns)),
                }
            }
        }
        match best {
            Some((label, ns)) => format!("{}_{}", label, &uri[ns.len()..]),
            None => uri.to_string(),
        }
    }

    /// Rewrite a URI term in place, filling its compact form.
    pub fn compress(&self, uri: &mut Uri) {
        uri.compact = self.compress_uri(&uri.full);
    }

    /// Expand a compacted `label_local` name back to the full URI. Returns
    /// `None` when the input does not look like a compacted name (no
    /// underscore, unregistered label, or URI punctuation before the split).
    pub fn expand(&self, compact: &str) -> Option<String> {
        let split = compact.find('_')?;
        let (label, rest) = (&compact[..split], &compact[split + 1..]);
        if label.contains([':', '/']) || rest.is_empty() {
            return None;
        }
        let ns = self.by_label.get(label)?;
        Some(format!("{}{}", ns, rest))
    }

    /// Expand when possible, otherwise hand back the input.
    pub fn expand_or_self(&self, compact: &str) -> String {
        self.expand(compact).unwrap_or_else(|| compact.to_string())
    }

    /// Colon-joined rendering of a compacted name (`foaf_age` to `foaf:age`)
    /// for query text output. Non-compacted names pass through unchanged.
    pub fn colon_form(&self, compact: &str) -> String {
        match compact.find('_') {
            Some(split) if self.by_label.contains_key(&compact[..split]) => {
                format!("{}:{}", &compact[..split], &compact[split + 1..])
            }
            _ => compact.to_string(),
        }
    }
}
