use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::term::{Literal, Term};

const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

/// Column type of a predicate, inferred from the typed literals observed
/// under it during loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimType {
    Str,
    Integer,
    Double,
    Decimal,
    Boolean,
    Date,
}

impl PrimType {
    pub fn name(self) -> &'static str {
        match self {
            PrimType::Str => "string",
            PrimType::Integer => "integer",
            PrimType::Double => "double",
            PrimType::Decimal => "decimal",
            PrimType::Boolean => "boolean",
            PrimType::Date => "date",
        }
    }
}

/// A cell value. Numeric variants keep the original lexical form alongside
/// the parsed number so that rendering a value back out is always lossless.
#[derive(Debug, Clone, PartialEq)]
pub enum PrimitiveValue {
    Str(String),
    Integer(i64),
    Double { lexical: String, value: f64 },
    Decimal { lexical: String, value: f64 },
    Boolean(bool),
    Date(String),
}

impl PrimitiveValue {
    pub fn prim_type(&self) -> PrimType {
        match self {
            PrimitiveValue::Str(_) => PrimType::Str,
            PrimitiveValue::Integer(_) => PrimType::Integer,
            PrimitiveValue::Double { .. } => PrimType::Double,
            PrimitiveValue::Decimal { .. } => PrimType::Decimal,
            PrimitiveValue::Boolean(_) => PrimType::Boolean,
            PrimitiveValue::Date(_) => PrimType::Date,
        }
    }

    /// Canonical text form: for every variant this reproduces the lexical
    /// form the value was built from.
    pub fn canonical(&self) -> String {
        match self {
            PrimitiveValue::Str(s) => s.clone(),
            PrimitiveValue::Integer(i) => i.to_string(),
            PrimitiveValue::Double { lexical, .. } => lexical.clone(),
            PrimitiveValue::Decimal { lexical, .. } => lexical.clone(),
            PrimitiveValue::Boolean(b) => if *b { "true" } else { "false" }.to_string(),
            PrimitiveValue::Date(d) => d.clone(),
        }
    }

    /// Single-character type tag used by the wire encoding.
    fn tag(&self) -> char {
        match self {
            PrimitiveValue::Str(_) => 's',
            PrimitiveValue::Integer(_) => 'i',
            PrimitiveValue::Double { .. } => 'd',
            PrimitiveValue::Decimal { .. } => 'c',
            PrimitiveValue::Boolean(_) => 'b',
            PrimitiveValue::Date(_) => 't',
        }
    }

    /// Self-describing string encoding: a tag character followed by the
    /// canonical form. Every variant decodes back losslessly.
    pub fn encode(&self) -> String {
        format!("{}{}", self.tag(), self.canonical())
    }

    pub fn decode(encoded: &str) -> Option<PrimitiveValue> {
        let tag = encoded.chars().next()?;
        let rest = &encoded[tag.len_utf8()..];
        match tag {
            's' => Some(PrimitiveValue::Str(rest.to_string())),
            'i' => rest.parse::<i64>().ok().map(PrimitiveValue::Integer),
            'd' => rest.parse::<f64>().ok().map(|value| PrimitiveValue::Double {
                lexical: rest.to_string(),
                value,
            }),
            'c' => rest.parse::<f64>().ok().map(|value| PrimitiveValue::Decimal {
                lexical: rest.to_string(),
                value,
            }),
            'b' => match rest {
                "true" => Some(PrimitiveValue::Boolean(true)),
                "false" => Some(PrimitiveValue::Boolean(false)),
                _ => None,
            },
            't' => valid_date(rest).then(|| PrimitiveValue::Date(rest.to_string())),
            _ => None,
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match self {
            PrimitiveValue::Integer(i) => Some(*i as f64),
            PrimitiveValue::Double { value, .. } => Some(*value),
            PrimitiveValue::Decimal { value, .. } => Some(*value),
            PrimitiveValue::Str(s) => s.parse::<f64>().ok(),
            _ => None,
        }
    }
}

pub(crate) fn valid_date(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return false;
    }
    if !b
        .iter()
        .enumerate()
        .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit())
    {
        return false;
    }
    let month: u32 = s[5..7].parse().unwrap_or(0);
    let day: u32 = s[8..10].parse().unwrap_or(0);
    (1..=12).contains(&month) && (1..=31).contains(&day)
}

fn integer_datatype(local: &str) -> bool {
    matches!(
        local,
        "integer"
            | "int"
            | "long"
            | "short"
            | "byte"
            | "nonNegativeInteger"
            | "nonPositiveInteger"
            | "positiveInteger"
            | "negativeInteger"
            | "unsignedLong"
            | "unsignedInt"
            | "unsignedShort"
            | "unsignedByte"
    )
}

/// Infer the primitive value and column type for a literal.
///
/// A literal whose lexical form does not losslessly fit its declared type
/// falls back to a string carrying the lexical form verbatim, and the
/// returned warning says why. Language-tagged literals become strings of the
/// form `lexical@tag`. Unknown datatypes become strings silently.
pub fn infer_primitive(lit: &Literal) -> (PrimitiveValue, PrimType, Option<String>) {
    if let Some(lang) = &lit.lang {
        let merged = format!("{}@{}", lit.lexical, lang);
        return (PrimitiveValue::Str(merged), PrimType::Str, None);
    }
    let datatype = match &lit.datatype {
        None => return (PrimitiveValue::Str(lit.lexical.clone()), PrimType::Str, None),
        Some(dt) => dt.as_str(),
    };
    let local = match datatype.strip_prefix(XSD) {
        Some(local) => local,
        None => {
            return (PrimitiveValue::Str(lit.lexical.clone()), PrimType::Str, None);
        }
    };
    let lex = lit.lexical.as_str();
    let fallback = |why: &str| {
        (
            PrimitiveValue::Str(lex.to_string()),
            PrimType::Str,
            Some(format!("literal {:?} does not fit xsd:{}: {}", lex, local, why)),
        )
    };
    if integer_datatype(local) {
        return match lex.parse::<i64>() {
            Ok(i) if i.to_string() == lex => (PrimitiveValue::Integer(i), PrimType::Integer, None),
            Ok(_) => fallback("non-canonical integer form"),
            Err(_) => fallback("not an integer"),
        };
    }
    match local {
        "double" | "float" => match lex.parse::<f64>() {
            Ok(value) => (
                PrimitiveValue::Double {
                    lexical: lex.to_string(),
                    value,
                },
                PrimType::Double,
                None,
            ),
            Err(_) => fallback("not a floating point number"),
        },
        "decimal" => match lex.parse::<f64>() {
            Ok(value) => (
                PrimitiveValue::Decimal {
                    lexical: lex.to_string(),
                    value,
                },
                PrimType::Decimal,
                None,
            ),
            Err(_) => fallback("not a decimal number"),
        },
        "boolean" => match lex {
            "true" => (PrimitiveValue::Boolean(true), PrimType::Boolean, None),
            "false" => (PrimitiveValue::Boolean(false), PrimType::Boolean, None),
            _ => fallback("expected true or false"),
        },
        "date" => {
            if valid_date(lex) {
                (PrimitiveValue::Date(lex.to_string()), PrimType::Date, None)
            } else {
                fallback("expected YYYY-MM-DD")
            }
        }
        _ => (PrimitiveValue::Str(lex.to_string()), PrimType::Str, None),
    }
}

/// Compare two values under a column type. Numeric columns compare
/// numerically (strings that fail to parse fall back to canonical text
/// order), everything else compares by canonical text. The ordering is
/// total, so sorts built on it are deterministic.
pub fn typed_compare(a: &PrimitiveValue, b: &PrimitiveValue, ty: PrimType) -> Ordering {
    match ty {
        PrimType::Integer | PrimType::Double | PrimType::Decimal => {
            if let (PrimitiveValue::Integer(x), PrimitiveValue::Integer(y)) = (a, b) {
                return x.cmp(y);
            }
            match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => x.total_cmp(&y),
                _ => a.canonical().cmp(&b.canonical()),
            }
        }
        PrimType::Boolean | PrimType::Str | PrimType::Date => a.canonical().cmp(&b.canonical()),
    }
}

pub fn typed_equal(a: &PrimitiveValue, b: &PrimitiveValue, ty: PrimType) -> bool {
    typed_compare(a, b, ty) == Ordering::Equal
}

/// Convert a constant query term into a value comparable against cells of a
/// column with the given type. Constants that fail to parse under the column
/// type are kept as strings, which matches how mistyped data cells are
/// stored.
pub fn coerce_constant(term: &Term, ty: PrimType) -> PrimitiveValue {
    match term {
        Term::Uri(u) => PrimitiveValue::Str(u.compact.clone()),
        Term::Placeholder(name) => PrimitiveValue::Str(format!("%{}%", name)),
        Term::Variable(v) => {
            debug_assert!(false, "variable {:?} used as constant", v);
            PrimitiveValue::Str(v.clone())
        }
        Term::Literal(lit) => {
            if lit.lang.is_some() {
                let (v, _, _) = infer_primitive(lit);
                return v;
            }
            let lex = lit.lexical.as_str();
            match ty {
                PrimType::Integer => lex
                    .parse::<i64>()
                    .map(PrimitiveValue::Integer)
                    .unwrap_or_else(|_| PrimitiveValue::Str(lex.to_string())),
                PrimType::Double => lex
                    .parse::<f64>()
                    .map(|value| PrimitiveValue::Double {
                        lexical: lex.to_string(),
                        value,
                    })
                    .unwrap_or_else(|_| PrimitiveValue::Str(lex.to_string())),
                PrimType::Decimal => lex
                    .parse::<f64>()
                    .map(|value| PrimitiveValue::Decimal {
                        lexical: lex.to_string(),
                        value,
                    })
                    .unwrap_or_else(|_| PrimitiveValue::Str(lex.to_string())),
                PrimType::Boolean => match lex {
                    "true" => PrimitiveValue::Boolean(true),
                    "false" => PrimitiveValue::Boolean(false),
                    _ => PrimitiveValue::Str(lex.to_string()),
                },
                PrimType::Date => {
                    if valid_date(lex) {
                        PrimitiveValue::Date(lex.to_string())
                    } else {
                        PrimitiveValue::Str(lex.to_string())
                    }
                }
                PrimType::Str => PrimitiveValue::Str(lex.to_string()),
            }
        }
    }
}

/// Predicate column types observed during loading. The first observation
/// fixes a column's type; any conflicting observation demotes the column to
/// string for good.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateTypeMap {
    types: BTreeMap<String, PrimType>,
}

impl PredicateTypeMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record one observation. Returns true when this observation demoted an
    /// already-typed column to string.
    pub fn observe(&mut self, predicate: &str, ty: PrimType) -> bool {
        match self.types.get_mut(predicate) {
            None => {
                self.types.insert(predicate.to_string(), ty);
                false
            }
            Some(existing) if *existing == ty => false,
            Some(existing) if *existing == PrimType::Str => false,
            Some(existing) => {
                *existing = PrimType::Str;
                true
            }
        }
    }

    pub fn get(&self, predicate: &str) -> Option<PrimType> {
        self.types.get(predicate).copied()
    }

    /// Effective column type; unobserved predicates behave as strings.
    pub fn column_type(&self, predicate: &str) -> PrimType {
        self.get(predicate).unwrap_or(PrimType::Str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, PrimType)> {
        self.types.iter().map(|(p, t)| (p.as_str(), *t))
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}
