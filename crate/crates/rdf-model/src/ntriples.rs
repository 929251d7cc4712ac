use thiserror::Error;

use crate::term::{Literal, Term, Triple, Uri};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NtriplesErrorKind {
    Expected(&'static str),
    UnterminatedUri,
    UnterminatedLiteral,
    BadEscape,
    InvalidUriChar,
    InvalidLiteralChar,
    BlankNode,
    TrailingGarbage,
}

impl NtriplesErrorKind {
    fn message(self) -> &'static str {
        match self {
            NtriplesErrorKind::Expected(what) => what,
            NtriplesErrorKind::UnterminatedUri => "unterminated URI, missing '>'",
            NtriplesErrorKind::UnterminatedLiteral => "unterminated literal, missing '\"'",
            NtriplesErrorKind::BadEscape => "invalid escape sequence",
            NtriplesErrorKind::InvalidUriChar => "control character or space inside URI",
            NtriplesErrorKind::InvalidLiteralChar => "unescaped control character in literal",
            NtriplesErrorKind::BlankNode => "blank nodes are not supported",
            NtriplesErrorKind::TrailingGarbage => "unexpected text after terminating '.'",
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("line {line}, offset {offset}: {}", kind.message())]
pub struct NtriplesError {
    /// 1-based line number; 0 when parsing a bare line outside a document.
    pub line: usize,
    /// Byte offset within the line where the problem was found.
    pub offset: usize,
    pub kind: NtriplesErrorKind,
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.s[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ') | Some('\t')) {
            self.pos += 1;
        }
    }

    fn err(&self, kind: NtriplesErrorKind) -> NtriplesError {
        NtriplesError {
            line: 0,
            offset: self.pos,
            kind,
        }
    }

    fn err_at(&self, offset: usize, kind: NtriplesErrorKind) -> NtriplesError {
        NtriplesError {
            line: 0,
            offset,
            kind,
        }
    }

    fn parse_uri(&mut self) -> Result<Uri, NtriplesError> {
        let open = self.pos;
        if self.bump() != Some('<') {
            return Err(self.err_at(open, NtriplesErrorKind::Expected("expected '<'")));
        }
        let start = self.pos;
        loop {
            let at = self.pos;
            match self.bump() {
                None => return Err(self.err_at(open, NtriplesErrorKind::UnterminatedUri)),
                Some('>') => return Ok(Uri::new(&self.s[start..at])),
                Some(c) if c <= ' ' || c == '<' || c == '"' || c == '\\' => {
                    return Err(self.err_at(at, NtriplesErrorKind::InvalidUriChar));
                }
                Some(_) => {}
            }
        }
    }

    fn parse_hex_escape(&mut self, digits: usize) -> Result<char, NtriplesError> {
        let start = self.pos;
        let mut code: u32 = 0;
        for _ in 0..digits {
            let at = self.pos;
            let c = self
                .bump()
                .ok_or_else(|| self.err_at(start, NtriplesErrorKind::BadEscape))?;
            let d = c
                .to_digit(16)
                .ok_or_else(|| self.err_at(at, NtriplesErrorKind::BadEscape))?;
            code = code * 16 + d;
        }
        match char::from_u32(code) {
            Some(c) if c != '\0' => Ok(c),
            _ => Err(self.err_at(start, NtriplesErrorKind::BadEscape)),
        }
    }

    fn parse_literal(&mut self) -> Result<Literal, NtriplesError> {
        let open = self.pos;
        if self.bump() != Some('"') {
            return Err(self.err_at(open, NtriplesErrorKind::Expected("expected '\"'")));
        }
        let mut lexical = String::new();
        loop {
            let at = self.pos;
            match self.bump() {
                None => return Err(self.err_at(open, NtriplesErrorKind::UnterminatedLiteral)),
                Some('"') => break,
                Some('\\') => {
                    let esc = self
                        .bump()
                        .ok_or_else(|| self.err_at(at, NtriplesErrorKind::BadEscape))?;
                    match esc {
                        '"' => lexical.push('"'),
                        '\\' => lexical.push('\\'),
                        'n' => lexical.push('\n'),
                        'r' => lexical.push('\r'),
                        't' => lexical.push('\t'),
                        'u' => lexical.push(self.parse_hex_escape(4)?),
                        'U' => lexical.push(self.parse_hex_escape(8)?),
                        _ => return Err(self.err_at(at, NtriplesErrorKind::BadEscape)),
                    }
                }
                Some(c) if c < ' ' => {
                    return Err(self.err_at(at, NtriplesErrorKind::InvalidLiteralChar));
                }
                Some(c) => lexical.push(c),
            }
        }
        match self.peek() {
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') {
                    return Err(self.err(NtriplesErrorKind::Expected("expected '^^'")));
                }
                let dt = self.parse_uri()?;
                Ok(Literal::typed(lexical, dt.full))
            }
            Some('@') => {
                self.bump();
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                    self.bump();
                }
                if self.pos == start {
                    return Err(self.err_at(start, NtriplesErrorKind::Expected("expected language tag")));
                }
                Ok(Literal::tagged(lexical, &self.s[start..self.pos]))
            }
            _ => Ok(Literal::plain(lexical)),
        }
    }
}

/// Parse a single N-Triples line. Blank lines and `#` comment lines yield
/// `Ok(None)`. Errors carry the byte offset within the line; the document
/// parser fills in the line number.
pub fn parse_ntriples_line(line: &str) -> Result<Option<Triple>, NtriplesError> {
    let mut cur = Cursor { s: line, pos: 0 };
    cur.skip_ws();
    match cur.peek() {
        None | Some('#') => return Ok(None),
        Some('_') => return Err(cur.err(NtriplesErrorKind::BlankNode)),
        _ => {}
    }
    let subject = cur.parse_uri()?;
    cur.skip_ws();
    let predicate = cur.parse_uri()?;
    cur.skip_ws();
    let object = match cur.peek() {
        Some('<') => Term::Uri(cur.parse_uri()?),
        Some('"') => Term::Literal(cur.parse_literal()?),
        Some('_') => return Err(cur.err(NtriplesErrorKind::BlankNode)),
        _ => return Err(cur.err(NtriplesErrorKind::Expected("expected URI or literal object"))),
    };
    cur.skip_ws();
    if cur.bump() != Some('.') {
        return Err(cur.err_at(
            cur.pos.saturating_sub(1),
            NtriplesErrorKind::Expected("expected terminating '.'"),
        ));
    }
    cur.skip_ws();
    match cur.peek() {
        None | Some('#') => Ok(Some(Triple::new(subject, predicate, object))),
        Some(_) => Err(cur.err(NtriplesErrorKind::TrailingGarbage)),
    }
}

/// Parse a whole N-Triples document. The first malformed line aborts the
/// parse with its 1-based line number.
pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>, NtriplesError> {
    let mut triples = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        match parse_ntriples_line(line) {
            Ok(Some(t)) => triples.push(t),
            Ok(None) => {}
            Err(mut e) => {
                e.line = idx + 1;
                return Err(e);
            }
        }
    }
    Ok(triples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_uri_objects() {
        let t = parse_ntriples_line(
            "<http://example.org/alice> <http://xmlns.com/foaf/0.1/knows> <http://example.org/bob> .",
        )
        .unwrap()
        .unwrap();
        assert_eq!(t.subject.full, "http://example.org/alice");
        assert_eq!(t.predicate.full, "http://xmlns.com/foaf/0.1/knows");
        assert_eq!(t.object, Term::uri("http://example.org/bob"));
    }

    #[test]
    fn parses_typed_and_tagged_literals() {
        let t = parse_ntriples_line(
            "<http://e/s> <http://e/age> \"6\"^^<http://www.w3.org/2001/XMLSchema#integer> .",
        )
        .unwrap()
        .unwrap();
        assert_eq!(
            t.object,
            Term::Literal(Literal::typed("6", "http://www.w3.org/2001/XMLSchema#integer"))
        );

        let t = parse_ntriples_line("<http://e/s> <http://e/name> \"Wien\"@de .")
            .unwrap()
            .unwrap();
        assert_eq!(t.object, Term::Literal(Literal::tagged("Wien", "de")));
    }

    #[test]
    fn unescapes_literal_content() {
        let t = parse_ntriples_line(
            r#"<http://e/s> <http://e/p> "line\nbreak \"q\" \\ café" ."#,
        )
        .unwrap()
        .unwrap();
        match t.object {
            Term::Literal(l) => assert_eq!(l.lexical, "line\nbreak \"q\" \\ café"),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn display_round_trips() {
        let line = r#"<http://e/s> <http://e/p> "a\tb\"c\\d" ."#;
        let t = parse_ntriples_line(line).unwrap().unwrap();
        let again = parse_ntriples_line(&t.to_string()).unwrap().unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn skips_blanks_and_comments() {
        let doc = "# header\n\n<http://e/s> <http://e/p> \"v\" . # trailing\n";
        let triples = parse_ntriples(doc).unwrap();
        assert_eq!(triples.len(), 1);
    }

    #[test]
    fn blank_nodes_are_rejected() {
        let e = parse_ntriples_line("_:a <http://e/p> <http://e/o> .").unwrap_err();
        assert_eq!(e.kind, NtriplesErrorKind::BlankNode);
        let e = parse_ntriples_line("<http://e/s> <http://e/p> _:o .").unwrap_err();
        assert_eq!(e.kind, NtriplesErrorKind::BlankNode);
    }

    #[test]
    fn errors_carry_offsets_and_line_numbers() {
        let e = parse_ntriples_line("<http://e/s> <http://e/p").unwrap_err();
        assert_eq!(e.kind, NtriplesErrorKind::UnterminatedUri);
        assert_eq!(e.offset, 13);

        let doc = "<http://e/s> <http://e/p> \"v\" .\nnot a triple\n";
        let e = parse_ntriples(doc).unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn rejects_garbage_and_missing_dot() {
        let e = parse_ntriples_line("<http://e/s> <http://e/p> \"v\"").unwrap_err();
        assert!(matches!(e.kind, NtriplesErrorKind::Expected(_)));
        let e = parse_ntriples_line("<http://e/s> <http://e/p> \"v\" . extra").unwrap_err();
        assert_eq!(e.kind, NtriplesErrorKind::TrailingGarbage);
    }

    #[test]
    fn rejects_control_characters() {
        let e = parse_ntriples_line("<http://e/a b> <http://e/p> \"v\" .").unwrap_err();
        assert_eq!(e.kind, NtriplesErrorKind::InvalidUriChar);
        let e = parse_ntriples_line("<http://e/s> <http://e/p> \"a\u{1}b\" .").unwrap_err();
        assert_eq!(e.kind, NtriplesErrorKind::InvalidLiteralChar);
        let e = parse_ntriples_line("<http://e/s> <http://e/p> \"a\\u0000b\" .").unwrap_err();
        assert_eq!(e.kind, NtriplesErrorKind::BadEscape);
    }
}
