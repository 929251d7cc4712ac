//! Parser for the SPARQL subset handled by the query layer: SELECT and
//! DESCRIBE forms, nested OPTIONAL groups, one two-branch UNION per group,
//! FILTER with a single comparison, regex or bound predicate, ORDER BY,
//! LIMIT and the DISTINCT/REDUCED modifiers.

mod ast;
mod parse;

pub use ast::{
    CompareOp, Filter, GraphPattern, QueryForm, SortOrder, SparqlQuery, TriplePattern,
};
pub use parse::parse_sparql;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SparqlError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported construct at line {line}, column {column}: {construct}")]
    Unsupported {
        line: usize,
        column: usize,
        construct: String,
    },
    #[error("variable ?{variable} in {place} is not bound by any triple pattern")]
    Unbound {
        variable: String,
        place: &'static str,
    },
    #[error(transparent)]
    Prefix(#[from] rdf_model::PrefixError),
}
