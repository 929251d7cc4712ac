use std::fmt;

use rdf_model::{PrefixTable, Term};

/// One `subject predicate object` pattern. The predicate may be a variable
/// syntactically; the planner rejects variable predicates later.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

/// One brace-delimited group: its required patterns and filters, nested
/// OPTIONAL groups, and UNION pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GraphPattern {
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<Filter>,
    pub optionals: Vec<GraphPattern>,
    pub unions: Vec<(GraphPattern, GraphPattern)>,
}

impl GraphPattern {
    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
            && self.filters.is_empty()
            && self.optionals.is_empty()
            && self.unions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl CompareOp {
    pub fn token(&self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
            CompareOp::Le => "<=",
            CompareOp::Ge => ">=",
        }
    }
}

/// A FILTER holds exactly one predicate; conjunctions are unsupported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Filter {
    Comparison {
        variable: String,
        op: CompareOp,
        constant: Term,
    },
    Regex {
        variable: String,
        pattern: String,
        flags: String,
    },
    Bound {
        variable: String,
    },
}

impl Filter {
    pub fn variable(&self) -> &str {
        match self {
            Filter::Comparison { variable, .. } => variable,
            Filter::Regex { variable, .. } => variable,
            Filter::Bound { variable } => variable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryForm {
    Select,
    Describe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortOrder {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparqlQuery {
    pub form: QueryForm,
    /// SELECT projection, in declaration order. Empty for DESCRIBE.
    pub projected: Vec<String>,
    /// The described variable or constant. None for SELECT.
    pub describe_target: Option<Term>,
    pub distinct: bool,
    pub reduced: bool,
    pub root: GraphPattern,
    pub order_by: Vec<(String, SortOrder)>,
    pub limit: Option<u64>,
    pub prefixes: PrefixTable,
}

fn escape_quoted(s: &str, out: &mut String) {
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

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Filter::Comparison {
                variable,
                op,
                constant,
            } => write!(f, "FILTER (?{} {} {})", variable, op.token(), constant),
            Filter::Regex {
                variable,
                pattern,
                flags,
            } => {
                let mut p = String::new();
                escape_quoted(pattern, &mut p);
                if flags.is_empty() {
                    write!(f, "FILTER regex(?{}, \"{}\")", variable, p)
                } else {
                    write!(f, "FILTER regex(?{}, \"{}\", \"{}\")", variable, p, flags)
                }
            }
            Filter::Bound { variable } => write!(f, "FILTER bound(?{})", variable),
        }
    }
}

fn write_group(f: &mut fmt::Formatter<'_>, group: &GraphPattern, indent: usize) -> fmt::Result {
    let pad = "  ".repeat(indent);
    for p in &group.patterns {
        writeln!(f, "{}{} {} {} .", pad, p.subject, p.predicate, p.object)?;
    }
    for filter in &group.filters {
        writeln!(f, "{}{}", pad, filter)?;
    }
    for optional in &group.optionals {
        writeln!(f, "{}OPTIONAL {{", pad)?;
        write_group(f, optional, indent + 1)?;
        writeln!(f, "{}}}", pad)?;
    }
    for (left, right) in &group.unions {
        writeln!(f, "{}{{", pad)?;
        write_group(f, left, indent + 1)?;
        writeln!(f, "{}}} UNION {{", pad)?;
        write_group(f, right, indent + 1)?;
        writeln!(f, "{}}}", pad)?;
    }
    Ok(())
}

impl fmt::Display for SparqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (label, ns) in self.prefixes.iter() {
            writeln!(f, "PREFIX {}: <{}>", label, ns)?;
        }
        if !self.prefixes.is_empty() {
            writeln!(f)?;
        }
        match self.form {
            QueryForm::Select => {
                write!(f, "SELECT")?;
                if self.distinct {
                    write!(f, " DISTINCT")?;
                } else if self.reduced {
                    write!(f, " REDUCED")?;
                }
                for v in &self.projected {
                    write!(f, " ?{}", v)?;
                }
                writeln!(f)?;
            }
            QueryForm::Describe => {
                let target = self.describe_target.as_ref().expect("describe target");
                writeln!(f, "DESCRIBE {}", target)?;
            }
        }
        if !self.root.is_empty() {
            writeln!(f, "WHERE {{")?;
            write_group(f, &self.root, 1)?;
            writeln!(f, "}}")?;
        }
        if !self.order_by.is_empty() {
            write!(f, "ORDER BY")?;
            for (v, order) in &self.order_by {
                match order {
                    SortOrder::Asc => write!(f, " ?{}", v)?,
                    SortOrder::Desc => write!(f, " DESC(?{})", v)?,
                }
            }
            writeln!(f)?;
        }
        if let Some(n) = self.limit {
            writeln!(f, "LIMIT {}", n)?;
        }
        Ok(())
    }
}
