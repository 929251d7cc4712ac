use rdf_model::{Literal, PrefixTable, Term, Uri};
use std::collections::BTreeSet;

use crate::ast::{
    CompareOp, Filter, GraphPattern, QueryForm, SortOrder, SparqlQuery, TriplePattern,
};
use crate::SparqlError;

const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

/// Parse one SPARQL query. PREFIX declarations are collected into the query's
/// prefix table and every URI in the query is compacted against it.
pub fn parse_sparql(text: &str) -> Result<SparqlQuery, SparqlError> {
    Parser { s: text, pos: 0 }.parse()
}

struct Parser<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn line_col(&self, pos: usize) -> (usize, usize) {
        let before = &self.s[..pos.min(self.s.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map_or(pos + 1, |nl| pos - nl);
        (line, column)
    }

    fn syntax(&self, message: impl Into<String>) -> SparqlError {
        let (line, column) = self.line_col(self.pos);
        SparqlError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn unsupported(&self, construct: impl Into<String>) -> SparqlError {
        let (line, column) = self.line_col(self.pos);
        SparqlError::Unsupported {
            line,
            column,
            construct: construct.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.s[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat_char(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect_char(&mut self, c: char) -> Result<(), SparqlError> {
        if self.eat_char(c) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected '{}'", c)))
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    /// True when the case-insensitive keyword starts here and ends at a word
    /// boundary.
    fn peek_keyword(&self, kw: &str) -> bool {
        let rest = &self.s[self.pos..];
        if rest.len() < kw.len() || !rest.is_char_boundary(kw.len()) {
            return false;
        }
        if !rest[..kw.len()].eq_ignore_ascii_case(kw) {
            return false;
        }
        !rest[kw.len()..]
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SparqlError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected {}", kw)))
        }
    }

    fn take_while(&mut self, test: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&test) {
            self.bump();
        }
        &self.s[start..self.pos]
    }

    fn parse_var(&mut self) -> Result<String, SparqlError> {
        self.expect_char('?')?;
        let name = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
        if name.is_empty() {
            return Err(self.syntax("expected a variable name after '?'"));
        }
        Ok(name.to_string())
    }

    fn parse_placeholder(&mut self) -> Result<Term, SparqlError> {
        self.expect_char('%')?;
        let name = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
        if name.is_empty() {
            return Err(self.syntax("expected a placeholder name after '%'"));
        }
        self.expect_char('%')?;
        Ok(Term::Placeholder(name.to_string()))
    }

    fn parse_uri_body(&mut self) -> Result<String, SparqlError> {
        self.expect_char('<')?;
        let body = self.take_while(|c| c != '>' && c != '<' && c > ' ');
        let body = body.to_string();
        if !self.eat_char('>') {
            return Err(self.syntax("unterminated URI reference"));
        }
        if body.is_empty() {
            return Err(self.syntax("empty URI reference"));
        }
        Ok(body)
    }

    fn parse_quoted(&mut self) -> Result<String, SparqlError> {
        self.expect_char('"')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(self.syntax("unterminated string literal")),
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some('r') => out.push('\r'),
                    Some('t') => out.push('\t'),
                    Some('u') => out.push(self.parse_hex_escape(4)?),
                    Some('U') => out.push(self.parse_hex_escape(8)?),
                    _ => return Err(self.syntax("unknown escape sequence")),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn parse_hex_escape(&mut self, len: usize) -> Result<char, SparqlError> {
        let mut code = 0u32;
        for _ in 0..len {
            let c = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| self.syntax("bad unicode escape"))?;
            code = code * 16 + c;
        }
        char::from_u32(code).ok_or_else(|| self.syntax("escape is not a valid character"))
    }

    fn parse_pname_label(&mut self) -> Result<&'a str, SparqlError> {
        if !self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            return Err(self.syntax("expected a prefix label"));
        }
        Ok(self.take_while(|c| c.is_ascii_alphanumeric() || c == '-'))
    }

    /// Local part of a prefixed name. A dot is consumed only when another
    /// name character follows, so the triple terminator stays untouched.
    fn parse_pname_local(&mut self) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                out.push(c);
                self.bump();
            } else if c == '.' {
                let mut ahead = self.s[self.pos..].chars();
                ahead.next();
                match ahead.next() {
                    Some(n) if n.is_ascii_alphanumeric() || n == '_' || n == '-' => {
                        out.push('.');
                        self.bump();
                    }
                    _ => break,
                }
            } else {
                break;
            }
        }
        out
    }

    fn parse_number(&mut self) -> Result<Term, SparqlError> {
        let start = self.pos;
        self.eat_char('+');
        self.eat_char('-');
        let digits = self.take_while(|c| c.is_ascii_digit());
        if digits.is_empty() {
            return Err(self.syntax("expected a number"));
        }
        let mut decimal = false;
        if self.peek() == Some('.') && self.s[self.pos + 1..].starts_with(|c: char| c.is_ascii_digit())
        {
            decimal = true;
            self.bump();
            self.take_while(|c| c.is_ascii_digit());
        }
        let mut exponent = false;
        if matches!(self.peek(), Some('e') | Some('E')) {
            exponent = true;
            self.bump();
            self.eat_char('+');
            self.eat_char('-');
            if self.take_while(|c| c.is_ascii_digit()).is_empty() {
                return Err(self.syntax("expected exponent digits"));
            }
        }
        let lexical = self.s[start..self.pos].to_string();
        let datatype = if exponent {
            format!("{}double", XSD)
        } else if decimal {
            format!("{}decimal", XSD)
        } else {
            format!("{}integer", XSD)
        };
        Ok(Term::Literal(Literal::typed(lexical, datatype)))
    }

    fn parse_uri_term(&mut self, prefixes: &PrefixTable) -> Result<Term, SparqlError> {
        let body = self.parse_uri_body()?;
        let mut uri = Uri::new(body);
        prefixes.compress(&mut uri);
        Ok(Term::Uri(uri))
    }

    fn parse_prefixed_name(&mut self, prefixes: &PrefixTable) -> Result<Term, SparqlError> {
        let at = self.pos;
        let label = self.parse_pname_label()?;
        if !self.eat_char(':') {
            self.pos = at;
            return Err(self.syntax("expected ':' in prefixed name"));
        }
        let local = self.parse_pname_local();
        if local.is_empty() {
            return Err(self.syntax("expected a local name after ':'"));
        }
        let Some(ns) = prefixes.namespace(label) else {
            self.pos = at;
            return Err(self.syntax(format!("unknown prefix {}:", label)));
        };
        let mut uri = Uri::new(format!("{}{}", ns, local));
        prefixes.compress(&mut uri);
        Ok(Term::Uri(uri))
    }

    fn parse_literal_term(&mut self, prefixes: &PrefixTable) -> Result<Term, SparqlError> {
        let lexical = self.parse_quoted()?;
        if self.eat_char('^') {
            self.expect_char('^')?;
            let datatype = if self.peek() == Some('<') {
                self.parse_uri_body()?
            } else {
                match self.parse_prefixed_name(prefixes)? {
                    Term::Uri(u) => u.full,
                    _ => unreachable!(),
                }
            };
            return Ok(Term::Literal(Literal::typed(lexical, datatype)));
        }
        if self.eat_char('@') {
            let tag = self.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
            if tag.is_empty() {
                return Err(self.syntax("expected a language tag after '@'"));
            }
            return Ok(Term::Literal(Literal::tagged(lexical, tag)));
        }
        Ok(Term::Literal(Literal::plain(lexical)))
    }

    fn parse_term(&mut self, prefixes: &PrefixTable) -> Result<Term, SparqlError> {
        self.skip_trivia();
        match self.peek() {
            Some('?') => Ok(Term::Variable(self.parse_var()?)),
            Some('%') => self.parse_placeholder(),
            Some('<') => self.parse_uri_term(prefixes),
            Some('"') => self.parse_literal_term(prefixes),
            Some(c) if c.is_ascii_digit() || c == '+' || c == '-' => self.parse_number(),
            Some(_) if self.peek_keyword("true") => {
                self.eat_keyword("true");
                Ok(Term::Literal(Literal::typed(
                    "true",
                    format!("{}boolean", XSD),
                )))
            }
            Some(_) if self.peek_keyword("false") => {
                self.eat_keyword("false");
                Ok(Term::Literal(Literal::typed(
                    "false",
                    format!("{}boolean", XSD),
                )))
            }
            Some(c) if c.is_ascii_alphabetic() => self.parse_prefixed_name(prefixes),
            _ => Err(self.syntax("expected a term")),
        }
    }

    fn parse_compare_op(&mut self) -> Result<CompareOp, SparqlError> {
        match self.bump() {
            Some('=') => Ok(CompareOp::Eq),
            Some('!') => {
                self.expect_char('=')?;
                Ok(CompareOp::Ne)
            }
            Some('<') => Ok(if self.eat_char('=') {
                CompareOp::Le
            } else {
                CompareOp::Lt
            }),
            Some('>') => Ok(if self.eat_char('=') {
                CompareOp::Ge
            } else {
                CompareOp::Gt
            }),
            _ => Err(self.syntax("expected a comparison operator")),
        }
    }

    fn parse_filter_expr(&mut self, prefixes: &PrefixTable) -> Result<Filter, SparqlError> {
        self.skip_trivia();
        if self.peek() == Some('!') {
            return Err(self.unsupported("negation in FILTER"));
        }
        if self.peek_keyword("regex") {
            self.eat_keyword("regex");
            self.skip_trivia();
            self.expect_char('(')?;
            self.skip_trivia();
            let variable = self.parse_var()?;
            self.skip_trivia();
            self.expect_char(',')?;
            self.skip_trivia();
            let pattern = self.parse_quoted()?;
            self.skip_trivia();
            let flags = if self.eat_char(',') {
                self.skip_trivia();
                self.parse_quoted()?
            } else {
                String::new()
            };
            self.skip_trivia();
            self.expect_char(')')?;
            return Ok(Filter::Regex {
                variable,
                pattern,
                flags,
            });
        }
        if self.peek_keyword("bound") {
            self.eat_keyword("bound");
            self.skip_trivia();
            self.expect_char('(')?;
            self.skip_trivia();
            let variable = self.parse_var()?;
            self.skip_trivia();
            self.expect_char(')')?;
            return Ok(Filter::Bound { variable });
        }
        if self.peek() == Some('?') {
            let variable = self.parse_var()?;
            self.skip_trivia();
            let op = self.parse_compare_op()?;
            self.skip_trivia();
            if self.peek() == Some('?') {
                return Err(self.unsupported("variable-to-variable comparison in FILTER"));
            }
            let constant = self.parse_term(prefixes)?;
            return Ok(Filter::Comparison {
                variable,
                op,
                constant,
            });
        }
        Err(self.syntax("expected a filter expression"))
    }

    fn parse_filter(&mut self, prefixes: &PrefixTable) -> Result<Filter, SparqlError> {
        self.skip_trivia();
        if self.eat_char('(') {
            let filter = self.parse_filter_expr(prefixes)?;
            self.skip_trivia();
            if matches!(self.peek(), Some('&') | Some('|')) {
                return Err(self.unsupported("logical operators in FILTER"));
            }
            self.expect_char(')')?;
            Ok(filter)
        } else {
            self.parse_filter_expr(prefixes)
        }
    }

    fn parse_triple(&mut self, prefixes: &PrefixTable) -> Result<TriplePattern, SparqlError> {
        let subject = self.parse_term(prefixes)?;
        if matches!(subject, Term::Literal(_)) {
            return Err(self.syntax("a literal cannot be the subject of a pattern"));
        }
        let predicate = self.parse_term(prefixes)?;
        if !matches!(predicate, Term::Uri(_) | Term::Variable(_)) {
            return Err(self.syntax("the predicate must be a URI or a variable"));
        }
        if matches!(self.peek(), Some('/') | Some('^') | Some('+') | Some('*')) {
            return Err(self.unsupported("property paths"));
        }
        let object = self.parse_term(prefixes)?;
        self.skip_trivia();
        self.eat_char('.');
        Ok(TriplePattern {
            subject,
            predicate,
            object,
        })
    }

    fn parse_group(&mut self, prefixes: &PrefixTable) -> Result<GraphPattern, SparqlError> {
        let mut group = GraphPattern::default();
        loop {
            self.skip_trivia();
            match self.peek() {
                None => return Err(self.syntax("unexpected end of input, expected '}'")),
                Some('}') => {
                    self.bump();
                    return Ok(group);
                }
                Some('{') => {
                    self.bump();
                    let left = self.parse_group(prefixes)?;
                    self.skip_trivia();
                    self.expect_keyword("UNION")?;
                    self.skip_trivia();
                    self.expect_char('{')?;
                    let right = self.parse_group(prefixes)?;
                    self.skip_trivia();
                    if self.peek_keyword("UNION") {
                        return Err(self.unsupported("UNION chains of three or more branches"));
                    }
                    group.unions.push((left, right));
                }
                _ if self.peek_keyword("OPTIONAL") => {
                    self.eat_keyword("OPTIONAL");
                    self.skip_trivia();
                    self.expect_char('{')?;
                    group.optionals.push(self.parse_group(prefixes)?);
                }
                _ if self.peek_keyword("FILTER") => {
                    self.eat_keyword("FILTER");
                    group.filters.push(self.parse_filter(prefixes)?);
                }
                _ if self.peek_keyword("GRAPH") => return Err(self.unsupported("GRAPH")),
                _ if self.peek_keyword("MINUS") => return Err(self.unsupported("MINUS")),
                _ if self.peek_keyword("SERVICE") => return Err(self.unsupported("SERVICE")),
                _ if self.peek_keyword("BIND") => return Err(self.unsupported("BIND")),
                _ if self.peek_keyword("VALUES") => return Err(self.unsupported("VALUES")),
                _ => group.patterns.push(self.parse_triple(prefixes)?),
            }
        }
    }

    fn parse(mut self) -> Result<SparqlQuery, SparqlError> {
        let mut prefixes = PrefixTable::default();
        self.skip_trivia();
        while self.eat_keyword("PREFIX") {
            self.skip_trivia();
            let label = self.parse_pname_label()?.to_string();
            self.expect_char(':')?;
            self.skip_trivia();
            let ns = self.parse_uri_body()?;
            prefixes.add(&label, &ns)?;
            self.skip_trivia();
        }

        for construct in ["ASK", "CONSTRUCT", "INSERT", "DELETE"] {
            if self.peek_keyword(construct) {
                return Err(self.unsupported(construct));
            }
        }

        let query = if self.eat_keyword("SELECT") {
            self.skip_trivia();
            let distinct = self.eat_keyword("DISTINCT");
            self.skip_trivia();
            let reduced = !distinct && self.eat_keyword("REDUCED");
            if self.peek() == Some('*') {
                return Err(self.unsupported("SELECT *"));
            }
            let mut projected = Vec::new();
            loop {
                self.skip_trivia();
                if self.peek() == Some('?') {
                    projected.push(self.parse_var()?);
                    self.skip_trivia();
                    self.eat_char(',');
                } else {
                    break;
                }
            }
            if projected.is_empty() {
                return Err(self.syntax("SELECT needs at least one variable"));
            }
            self.expect_keyword("WHERE")?;
            self.skip_trivia();
            self.expect_char('{')?;
            let root = self.parse_group(&prefixes)?;
            SparqlQuery {
                form: QueryForm::Select,
                projected,
                describe_target: None,
                distinct,
                reduced,
                root,
                order_by: Vec::new(),
                limit: None,
                prefixes: PrefixTable::default(),
            }
        } else if self.eat_keyword("DESCRIBE") {
            let target = self.parse_term(&prefixes)?;
            if matches!(target, Term::Literal(_)) {
                return Err(self.syntax("cannot DESCRIBE a literal"));
            }
            self.skip_trivia();
            let root = if self.eat_keyword("WHERE") {
                self.skip_trivia();
                self.expect_char('{')?;
                self.parse_group(&prefixes)?
            } else {
                GraphPattern::default()
            };
            SparqlQuery {
                form: QueryForm::Describe,
                projected: Vec::new(),
                describe_target: Some(target),
                distinct: false,
                reduced: false,
                root,
                order_by: Vec::new(),
                limit: None,
                prefixes: PrefixTable::default(),
            }
        } else {
            return Err(self.syntax("expected SELECT or DESCRIBE"));
        };
        let mut query = query;

        self.skip_trivia();
        if self.eat_keyword("ORDER") {
            self.skip_trivia();
            self.expect_keyword("BY")?;
            loop {
                self.skip_trivia();
                if self.eat_keyword("ASC") {
                    self.skip_trivia();
                    self.expect_char('(')?;
                    self.skip_trivia();
                    let v = self.parse_var()?;
                    self.skip_trivia();
                    self.expect_char(')')?;
                    query.order_by.push((v, SortOrder::Asc));
                } else if self.eat_keyword("DESC") {
                    self.skip_trivia();
                    self.expect_char('(')?;
                    self.skip_trivia();
                    let v = self.parse_var()?;
                    self.skip_trivia();
                    self.expect_char(')')?;
                    query.order_by.push((v, SortOrder::Desc));
                } else if self.peek() == Some('?') {
                    query.order_by.push((self.parse_var()?, SortOrder::Asc));
                } else {
                    break;
                }
            }
            if query.order_by.is_empty() {
                return Err(self.syntax("ORDER BY needs at least one sort key"));
            }
        }

        self.skip_trivia();
        if self.eat_keyword("LIMIT") {
            self.skip_trivia();
            let digits = self.take_while(|c| c.is_ascii_digit());
            if digits.is_empty() {
                return Err(self.syntax("expected a count after LIMIT"));
            }
            query.limit = Some(digits.parse().expect("checked digits"));
        }
        self.skip_trivia();
        if self.peek_keyword("OFFSET") {
            return Err(self.unsupported("OFFSET"));
        }
        if self.pos < self.s.len() {
            return Err(self.syntax("unexpected text after the query"));
        }

        query.prefixes = prefixes;
        validate(&self, &query)?;
        Ok(query)
    }
}

fn collect_pattern_vars(group: &GraphPattern, out: &mut BTreeSet<String>) {
    for p in &group.patterns {
        for term in [&p.subject, &p.predicate, &p.object] {
            if let Term::Variable(v) = term {
                out.insert(v.clone());
            }
        }
    }
    for optional in &group.optionals {
        collect_pattern_vars(optional, out);
    }
    for (left, right) in &group.unions {
        collect_pattern_vars(left, out);
        collect_pattern_vars(right, out);
    }
}

fn own_pattern_vars(group: &GraphPattern, out: &mut BTreeSet<String>) {
    for p in &group.patterns {
        for term in [&p.subject, &p.predicate, &p.object] {
            if let Term::Variable(v) = term {
                out.insert(v.clone());
            }
        }
    }
}

/// Filters may only reference variables bound by a pattern in their own
/// group, an enclosing one, or an OPTIONAL nested inside their group; the
/// last case is how a filter tests whether an optional match happened.
fn check_filter_scope(group: &GraphPattern, inherited: &BTreeSet<String>) -> Result<(), SparqlError> {
    let mut scope = inherited.clone();
    own_pattern_vars(group, &mut scope);
    for optional in &group.optionals {
        collect_pattern_vars(optional, &mut scope);
    }
    for filter in &group.filters {
        if !scope.contains(filter.variable()) {
            return Err(SparqlError::Unbound {
                variable: filter.variable().to_string(),
                place: "FILTER",
            });
        }
    }
    for optional in &group.optionals {
        check_filter_scope(optional, &scope)?;
    }
    for (left, right) in &group.unions {
        check_filter_scope(left, &scope)?;
        check_filter_scope(right, &scope)?;
    }
    Ok(())
}

fn validate(parser: &Parser, query: &SparqlQuery) -> Result<(), SparqlError> {
    let mut bound = BTreeSet::new();
    collect_pattern_vars(&query.root, &mut bound);
    for v in &query.projected {
        if !bound.contains(v) {
            return Err(SparqlError::Unbound {
                variable: v.clone(),
                place: "the SELECT list",
            });
        }
    }
    if let Some(Term::Variable(v)) = &query.describe_target {
        if !bound.contains(v) {
            return Err(SparqlError::Unbound {
                variable: v.clone(),
                place: "DESCRIBE",
            });
        }
    }
    for (v, _) in &query.order_by {
        if !bound.contains(v) {
            return Err(SparqlError::Unbound {
                variable: v.clone(),
                place: "ORDER BY",
            });
        }
    }
    let _ = parser;
    check_filter_scope(&query.root, &BTreeSet::new())
}
