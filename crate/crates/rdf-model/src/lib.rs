//! Core RDF data model shared by the loader, the store, and the query stack.
//!
//! Provides terms and triples, an N-Triples line parser, namespace prefix
//! compression with round-trip expansion, and inference of primitive column
//! types from typed literals.

mod ntriples;
mod prefix;
mod term;
mod value;

pub use ntriples::{parse_ntriples, parse_ntriples_line, NtriplesError, NtriplesErrorKind};
pub use prefix::{PrefixError, PrefixTable};
pub use term::{Literal, Term, Triple, Uri};
pub use value::{
    coerce_constant, infer_primitive, typed_compare, typed_equal, PredicateTypeMap, PrimType,
    PrimitiveValue,
};
