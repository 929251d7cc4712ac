use std::fmt;

/// A URI reference, carrying both the full form and the compacted
/// `prefix_localname` form. Until compression runs the two are identical.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Uri {
    pub full: String,
    pub compact: String,
}

impl Uri {
    pub fn new(full: impl Into<String>) -> Self {
        let full = full.into();
        Uri {
            compact: full.clone(),
            full,
        }
    }

    pub fn with_compact(full: impl Into<String>, compact: impl Into<String>) -> Self {
        Uri {
            full: full.into(),
            compact: compact.into(),
        }
    }

    /// True if compression actually shortened this URI into `prefix_local`.
    pub fn is_compacted(&self) -> bool {
        self.compact != self.full
    }
}

/// A literal as written in the source syntax: lexical form plus an optional
/// datatype URI or language tag (at most one of the two).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub lexical: String,
    pub datatype: Option<String>,
    pub lang: Option<String>,
}

impl Literal {
    pub fn plain(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: None,
            lang: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: Some(datatype.into()),
            lang: None,
        }
    }

    pub fn tagged(lexical: impl Into<String>, lang: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: None,
            lang: Some(lang.into()),
        }
    }
}

/// A term as it appears in data or in a query pattern. Data triples only use
/// the `Uri` and `Literal` variants; variables and `%name%` template
/// constants occur in query patterns.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Uri(Uri),
    Literal(Literal),
    Variable(String),
    Placeholder(String),
}

impl Term {
    pub fn uri(full: impl Into<String>) -> Self {
        Term::Uri(Uri::new(full))
    }

    pub fn as_variable(&self) -> Option<&str> {
        match self {
            Term::Variable(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        !matches!(self, Term::Variable(_))
    }
}

/// One RDF statement. Subject and predicate are URIs; the object is a URI or
/// a literal (never a variable).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: Uri,
    pub predicate: Uri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Uri, predicate: Uri, object: Term) -> Self {
        debug_assert!(object.is_constant());
        Triple {
            subject,
            predicate,
            object,
        }
    }
}

fn escape_literal(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        escape_literal(&self.lexical, &mut s);
        write!(f, "\"{}\"", s)?;
        if let Some(dt) = &self.datatype {
            write!(f, "^^<{}>", dt)?;
        } else if let Some(lang) = &self.lang {
            write!(f, "@{}", lang)?;
        }
        Ok(())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Uri(u) => write!(f, "<{}>", u.full),
            Term::Literal(l) => write!(f, "{}", l),
            Term::Variable(v) => write!(f, "?{}", v),
            Term::Placeholder(p) => write!(f, "%{}%", p),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<{}> <{}> {} .",
            self.subject.full, self.predicate.full, self.object
        )
    }
}
