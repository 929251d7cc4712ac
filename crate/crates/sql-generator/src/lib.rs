//! Renders a planned query as SQL text: a SELECT list over view columns, a
//! left-deep FROM clause whose ON conditions absorb the equality selections,
//! and a WHERE clause holding everything else. The text names columns in
//! `prefix:local` style; the attached view table maps them back to storage
//! columns.

mod emit;
mod like;

pub use emit::{generate_sql, SqlQueryText};
pub use like::{translate_regex, LikePattern};
