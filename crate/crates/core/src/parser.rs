// Copyright 2026 The reoptdb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Parser for conjunctive `SELECT COUNT(*)` queries.
//!
//! ```text
//! query     := SELECT COUNT ( * ) FROM relation ( , relation )*
//!              [ WHERE predicate ( AND predicate )* ] [ ; ]
//! relation  := ident [ [AS] ident ]
//! predicate := column = integer | column = column
//! column    := ident . ident
//! ```
//!
//! Keywords are case-insensitive; identifiers are case-sensitive.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::query::{ColumnRef, JoinPredicate, QuerySpec, RelationRef, Selection};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected character `{token}` at position {position}")]
    Lexical { position: usize, token: String },

    #[error("expected {expected} at position {position}, found `{found}`")]
    Unexpected {
        position: usize,
        expected: String,
        found: String,
    },

    #[error("expected {expected}, found end of input")]
    UnexpectedEnd { expected: String },

    #[error("`{0}` is not listed in FROM")]
    UnknownRelation(String),

    #[error("only `=` predicates are supported, found `{operator}` at position {position}")]
    NonEquality { position: usize, operator: String },

    #[error("disjunctions are not supported (OR at position {position}); only AND-connected predicates are accepted")]
    Disjunction { position: usize },

    #[error("integer literal `{literal}` at position {position} is out of range")]
    IntegerRange { position: usize, literal: String },

    #[error("invalid query: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(String),
    Comma,
    Dot,
    LParen,
    RParen,
    Star,
    Semi,
    Eq,
    Cmp(String),
}

impl Tok {
    fn text(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Int(s) | Tok::Cmp(s) => s.clone(),
            Tok::Comma => ",".into(),
            Tok::Dot => ".".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Star => "*".into(),
            Tok::Semi => ";".into(),
            Tok::Eq => "=".into(),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self, Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }
}

const KEYWORDS: [&str; 7] = ["SELECT", "COUNT", "FROM", "WHERE", "AND", "OR", "AS"];

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '*' => Some(Tok::Star),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(t) = single {
            out.push((pos, t));
            i += 1;
            continue;
        }
        if matches!(c, '=' | '<' | '>' | '!') {
            let next = chars.get(i + 1).map(|&(_, c)| c);
            let op: String = match (c, next) {
                ('<', Some('=' | '>')) | ('>', Some('=')) | ('!', Some('=')) => {
                    i += 2;
                    [c, next.unwrap()].iter().collect()
                }
                ('!', _) => {
                    return Err(ParseError::Lexical {
                        position: pos,
                        token: c.to_string(),
                    })
                }
                _ => {
                    i += 1;
                    c.to_string()
                }
            };
            out.push((pos, if op == "=" { Tok::Eq } else { Tok::Cmp(op) }));
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || (c == '-' && chars.get(i + 1).is_some_and(|&(_, d)| d.is_ascii_digit()));
        if starts_number {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            let s: String = chars[i..j].iter().map(|&(_, c)| c).collect();
            out.push((pos, Tok::Int(s)));
            i = j;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i + 1;
            while j < chars.len() && (chars[j].1.is_ascii_alphanumeric() || chars[j].1 == '_') {
                j += 1;
            }
            let s: String = chars[i..j].iter().map(|&(_, c)| c).collect();
            out.push((pos, Tok::Ident(s)));
            i = j;
            continue;
        }
        return Err(ParseError::Lexical {
            position: pos,
            token: c.to_string(),
        });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(usize, Tok)> {
        self.toks.get(self.at)
    }

    fn next(&mut self, expected: &str) -> Result<(usize, Tok), ParseError> {
        let t = self.toks.get(self.at).cloned().ok_or_else(|| ParseError::UnexpectedEnd {
            expected: expected.to_string(),
        })?;
        self.at += 1;
        Ok(t)
    }

    fn unexpected(pos: usize, expected: &str, tok: &Tok) -> ParseError {
        match tok {
            Tok::Cmp(op) => ParseError::NonEquality {
                position: pos,
                operator: op.clone(),
            },
            t if t.is_keyword("OR") => ParseError::Disjunction { position: pos },
            t => ParseError::Unexpected {
                position: pos,
                expected: expected.to_string(),
                found: t.text(),
            },
        }
    }

    fn expect(&mut self, want: &Tok, expected: &str) -> Result<(), ParseError> {
        let (pos, t) = self.next(expected)?;
        if t == *want {
            Ok(())
        } else {
            Err(Self::unexpected(pos, expected, &t))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let (pos, t) = self.next(kw)?;
        if t.is_keyword(kw) {
            Ok(())
        } else {
            Err(Self::unexpected(pos, kw, &t))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, ParseError> {
        let (pos, t) = self.next(expected)?;
        match t {
            Tok::Ident(s) if !KEYWORDS.iter().any(|k| s.eq_ignore_ascii_case(k)) => Ok(s),
            t => Err(Self::unexpected(pos, expected, &t)),
        }
    }

    fn column(&mut self) -> Result<ColumnRef, ParseError> {
        let rel = self.ident("a relation name")?;
        self.expect(&Tok::Dot, "`.`")?;
        let col = self.ident("a column name")?;
        Ok(ColumnRef::new(rel, col))
    }

    fn at_keyword(&self, kw: &str) -> bool {
        self.peek().is_some_and(|(_, t)| t.is_keyword(kw))
    }
}

/// Parses query text into its canonical [`QuerySpec`].
pub fn parse(text: &str) -> Result<QuerySpec, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    p.keyword("SELECT")?;
    p.keyword("COUNT")?;
    p.expect(&Tok::LParen, "`(`")?;
    p.expect(&Tok::Star, "`*`")?;
    p.expect(&Tok::RParen, "`)`")?;
    p.keyword("FROM")?;

    let mut relations = Vec::new();
    loop {
        let name = p.ident("a relation name")?;
        let alias = if p.at_keyword("AS") {
            p.at += 1;
            Some(p.ident("an alias")?)
        } else {
            match p.peek() {
                Some((_, Tok::Ident(s))) if !KEYWORDS.iter().any(|k| s.eq_ignore_ascii_case(k)) => {
                    let s = s.clone();
                    p.at += 1;
                    Some(s)
                }
                _ => None,
            }
        };
        relations.push(match alias {
            Some(a) => RelationRef::aliased(name, a),
            None => RelationRef::new(name),
        });
        if matches!(p.peek(), Some((_, Tok::Comma))) {
            p.at += 1;
        } else {
            break;
        }
    }

    let mut selections = Vec::new();
    let mut joins = Vec::new();
    if p.at_keyword("WHERE") {
        p.at += 1;
        loop {
            let left = p.column()?;
            p.expect(&Tok::Eq, "`=`")?;
            let (pos, t) = p.next("an integer or a column")?;
            match t {
                Tok::Int(s) => {
                    let value = s.parse::<i64>().map_err(|_| ParseError::IntegerRange {
                        position: pos,
                        literal: s.clone(),
                    })?;
                    selections.push(Selection { column: left, value });
                }
                Tok::Ident(_) => {
                    p.at -= 1;
                    let right = p.column()?;
                    joins.push(JoinPredicate { left, right });
                }
                t => return Err(Parser::unexpected(pos, "an integer or a column", &t)),
            }
            if p.at_keyword("AND") {
                p.at += 1;
            } else {
                break;
            }
        }
    }
    if matches!(p.peek(), Some((_, Tok::Semi))) {
        p.at += 1;
    }
    if let Some((pos, t)) = p.peek() {
        return Err(Parser::unexpected(*pos, "end of query", t));
    }

    for c in selections
        .iter()
        .map(|s| &s.column)
        .chain(joins.iter().flat_map(|j| [&j.left, &j.right]))
    {
        if !relations.iter().any(|r| r.alias == c.relation) {
            return Err(ParseError::UnknownRelation(c.relation.clone()));
        }
    }
    QuerySpec::new(relations, selections, joins).map_err(|e| match e {
        Error::UnknownRelation(r) => ParseError::UnknownRelation(r),
        other => ParseError::Invalid(format!("{other}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic() {
        let q = parse("SELECT COUNT(*) FROM R1, R2 WHERE R1.A1 = 0 AND R1.B1 = R2.B2").unwrap();
        assert_eq!(q.relations().len(), 2);
        assert_eq!(q.selections().len(), 1);
        assert_eq!(q.joins().len(), 1);
    }

    #[test]
    fn keywords_ignore_case_and_aliases() {
        let q = parse("select count(*) from R1 as x, R2 y where x.A1 = -3 and x.B1 = y.B2;").unwrap();
        assert_eq!(q.relations()[0].alias, "x");
        assert_eq!(q.relations()[1].alias, "y");
        assert_eq!(q.selections()[0].value, -3);
        let no_where = parse("SELECT COUNT(*) FROM R1").unwrap();
        assert!(no_where.selections().is_empty());
    }

    #[test]
    fn rejects_non_equality() {
        assert!(matches!(
            parse("SELECT COUNT(*) FROM R1 WHERE R1.A1 > 0"),
            Err(ParseError::NonEquality { operator, .. }) if operator == ">"
        ));
        assert!(matches!(
            parse("SELECT COUNT(*) FROM R1 WHERE R1.A1 <> 0"),
            Err(ParseError::NonEquality { .. })
        ));
    }

    #[test]
    fn rejects_disjunction() {
        let e = parse("SELECT COUNT(*) FROM R1 WHERE R1.A1 = 0 OR R1.A1 = 1").unwrap_err();
        assert_eq!(e, ParseError::Disjunction { position: 40 });
        assert!(e.to_string().contains("disjunction"));
    }

    #[test]
    fn lexical_error_position() {
        assert_eq!(
            parse("SELECT COUNT(*) FROM R1 WHERE R1.A1 = 'x'").unwrap_err(),
            ParseError::Lexical {
                position: 38,
                token: "'".into()
            }
        );
    }

    #[test]
    fn unknown_relation() {
        assert_eq!(
            parse("SELECT COUNT(*) FROM R1 WHERE R2.A2 = 0").unwrap_err(),
            ParseError::UnknownRelation("R2".into())
        );
    }

    #[test]
    fn truncated() {
        assert!(matches!(
            parse("SELECT COUNT(*) FROM"),
            Err(ParseError::UnexpectedEnd { .. })
        ));
        assert!(matches!(
            parse("SELECT COUNT(*) FROM R1 R2 R3"),
            Err(ParseError::Unexpected { .. })
        ));
    }

    #[test]
    fn printer_round_trip() {
        let q = parse("SELECT COUNT(*) FROM R2 AS b, R1 WHERE R1.B1 = b.B2 AND R1.A1 = 7").unwrap();
        assert_eq!(parse(&q.to_string()).unwrap(), q);
    }
}
