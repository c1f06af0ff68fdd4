//! A small SPARQL subset: `SELECT *` over one basic graph pattern.
//!
//! Supported: `PREFIX`/`BASE`, Turtle-style `;` and `,` abbreviations, the
//! `a` keyword, sequence paths `p1/p2`, inverse paths `^p` and parenthesised
//! paths. Sequence paths are expanded into chained patterns joined by fresh
//! variables named `_path0`, `_path1`, ...

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::query::bgp::{BasicGraphPattern, NodeRef};
use crate::store::Term;

const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    IriRef(String),
    PName(String, String),
    Var(String),
    Blank(String),
    Literal(String),
    LangTag(String),
    DatatypeMark,
    Number(String),
    Word(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::QuerySyntax {
        offset,
        message: message.into(),
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let at = |i: usize| chars.get(i).map(|&(_, c)| c);
    let off = |i: usize| chars.get(i).map_or(text.len(), |&(o, _)| o);
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        let start = off(i);
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = match c {
            '<' => {
                let mut iri = String::new();
                i += 1;
                loop {
                    match at(i) {
                        Some('>') => break,
                        Some(c) if c.is_whitespace() || c == '<' || c == '"' => {
                            return Err(syntax(off(i), "illegal character in IRI"))
                        }
                        Some(c) => iri.push(c),
                        None => return Err(syntax(start, "unterminated IRI")),
                    }
                    i += 1;
                }
                i += 1;
                Tok::IriRef(iri)
            }
            '?' | '$' => {
                i += 1;
                let name_start = i;
                while at(i).is_some_and(|c| c.is_alphanumeric() || c == '_') {
                    i += 1;
                }
                if i == name_start {
                    // a bare '?' is the zero-or-one path modifier
                    Tok::Punct('?')
                } else {
                    Tok::Var(chars[name_start..i].iter().map(|&(_, c)| c).collect())
                }
            }
            '"' | '\'' => {
                let quote = c;
                let mut lexical = String::new();
                i += 1;
                loop {
                    match at(i) {
                        Some(c) if c == quote => break,
                        Some('\\') => {
                            i += 1;
                            let esc = match at(i) {
                                Some('t') => '\t',
                                Some('n') => '\n',
                                Some('r') => '\r',
                                Some('b') => '\u{8}',
                                Some('f') => '\u{c}',
                                Some('"') => '"',
                                Some('\'') => '\'',
                                Some('\\') => '\\',
                                _ => return Err(syntax(off(i), "bad escape in literal")),
                            };
                            lexical.push(esc);
                        }
                        Some('\n') | None => return Err(syntax(start, "unterminated literal")),
                        Some(c) => lexical.push(c),
                    }
                    i += 1;
                }
                i += 1;
                Tok::Literal(lexical)
            }
            '@' => {
                i += 1;
                let tag_start = i;
                while at(i).is_some_and(|c| c.is_ascii_alphanumeric() || c == '-') {
                    i += 1;
                }
                if i == tag_start {
                    return Err(syntax(start, "empty language tag"));
                }
                Tok::LangTag(chars[tag_start..i].iter().map(|&(_, c)| c).collect())
            }
            '^' if at(i + 1) == Some('^') => {
                i += 2;
                Tok::DatatypeMark
            }
            '_' if at(i + 1) == Some(':') => {
                i += 2;
                let label_start = i;
                while at(i).is_some_and(is_name_char) {
                    i += 1;
                }
                Tok::Blank(chars[label_start..i].iter().map(|&(_, c)| c).collect())
            }
            c if c.is_ascii_digit()
                || ((c == '-' || c == '+') && at(i + 1).is_some_and(|d| d.is_ascii_digit())) =>
            {
                let num_start = i;
                i += 1;
                while at(i).is_some_and(|d| d.is_ascii_digit())
                    || (at(i) == Some('.') && at(i + 1).is_some_and(|d| d.is_ascii_digit()))
                {
                    i += 1;
                }
                Tok::Number(chars[num_start..i].iter().map(|&(_, c)| c).collect())
            }
            c if c.is_alphabetic() || c == ':' => {
                let word_start = i;
                while at(i).is_some_and(|c| is_name_char(c) || c == ':' || c == '.') {
                    i += 1;
                }
                // trailing dots end the statement
                while i > word_start && chars[i - 1].1 == '.' {
                    i -= 1;
                }
                let word: String = chars[word_start..i].iter().map(|&(_, c)| c).collect();
                match word.split_once(':') {
                    Some((prefix, local)) => Tok::PName(prefix.to_owned(), local.to_owned()),
                    None => Tok::Word(word),
                }
            }
            '{' | '}' | '.' | ';' | ',' | '/' | '^' | '(' | ')' | '*' | '+' | '|' | '[' | ']'
            | '!' | '=' => {
                i += 1;
                Tok::Punct(c)
            }
            other => return Err(syntax(start, format!("unexpected character '{other}'"))),
        };
        out.push(Token { tok, offset: start });
    }
    Ok(out)
}

/// One step of an expanded property path.
#[derive(Debug, Clone)]
struct Step {
    predicate: String,
    inverse: bool,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
    prefixes: HashMap<String, String>,
    base: Option<String>,
    used_vars: HashSet<String>,
    fresh: usize,
    triples: Vec<(NodeRef, String, NodeRef)>,
}

const UNSUPPORTED_WORDS: &[&str] = &[
    "FILTER", "OPTIONAL", "UNION", "MINUS", "GRAPH", "SERVICE", "BIND", "VALUES", "ASK",
    "CONSTRUCT", "DESCRIBE", "ORDER", "GROUP", "LIMIT", "OFFSET", "HAVING", "DISTINCT",
    "REDUCED", "FROM",
];

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn is_word(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    fn expect_punct(&mut self, c: char) -> Result<()> {
        if self.is_punct(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected '{c}'")))
        }
    }

    fn reject_unsupported(&self) -> Result<()> {
        if let Some(Tok::Word(w)) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED_WORDS.contains(&upper.as_str()) {
                return Err(Error::Unsupported(upper));
            }
        }
        Ok(())
    }

    fn resolve(&self, iri: String) -> String {
        let has_scheme = iri
            .split_once(':')
            .is_some_and(|(scheme, _)| !scheme.is_empty() && !scheme.contains('/'));
        match (&self.base, has_scheme) {
            (Some(base), false) => format!("{base}{iri}"),
            _ => iri,
        }
    }

    fn expand(&self, prefix: &str, local: &str) -> Result<String> {
        self.prefixes
            .get(prefix)
            .map(|ns| format!("{ns}{local}"))
            .ok_or_else(|| syntax(self.offset(), format!("undeclared prefix '{prefix}:'")))
    }

    fn prologue(&mut self) -> Result<()> {
        loop {
            if self.is_word("PREFIX") {
                self.pos += 1;
                let at = self.offset();
                let prefix = match self.bump() {
                    Some(Tok::PName(p, l)) if l.is_empty() => p,
                    _ => return Err(syntax(at, "expected prefix name after PREFIX")),
                };
                let at = self.offset();
                let iri = match self.bump() {
                    Some(Tok::IriRef(iri)) => self.resolve(iri),
                    _ => return Err(syntax(at, "expected IRI in PREFIX declaration")),
                };
                self.prefixes.insert(prefix, iri);
            } else if self.is_word("BASE") {
                self.pos += 1;
                let at = self.offset();
                match self.bump() {
                    Some(Tok::IriRef(iri)) => self.base = Some(iri),
                    _ => return Err(syntax(at, "expected IRI after BASE")),
                }
            } else {
                return Ok(());
            }
        }
    }

    fn query(&mut self) -> Result<()> {
        self.prologue()?;
        self.reject_unsupported()?;
        if !self.is_word("SELECT") {
            return Err(syntax(self.offset(), "expected SELECT"));
        }
        self.pos += 1;
        self.reject_unsupported()?;
        if matches!(self.peek(), Some(Tok::Var(_))) {
            return Err(Error::Unsupported("projection lists".into()));
        }
        self.expect_punct('*')?;
        if self.is_word("WHERE") {
            self.pos += 1;
        }
        self.expect_punct('{')?;
        self.triples_block()?;
        self.expect_punct('}')?;
        if self.pos < self.tokens.len() {
            self.reject_unsupported()?;
            return Err(syntax(self.offset(), "unexpected input after query body"));
        }
        Ok(())
    }

    fn triples_block(&mut self) -> Result<()> {
        loop {
            self.reject_unsupported()?;
            if self.is_punct('}') || self.peek().is_none() {
                return Ok(());
            }
            if self.is_punct('{') {
                return Err(Error::Unsupported("nested group patterns".into()));
            }
            let subject = self.node()?;
            self.property_list(&subject)?;
            if self.is_punct('.') {
                self.pos += 1;
            } else {
                return Ok(());
            }
        }
    }

    fn property_list(&mut self, subject: &NodeRef) -> Result<()> {
        loop {
            let path = self.path()?;
            loop {
                let object = self.node()?;
                self.emit(subject, &path, object);
                if self.is_punct(',') {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if !self.is_punct(';') {
                return Ok(());
            }
            while self.is_punct(';') {
                self.pos += 1;
            }
            if self.is_punct('.') || self.is_punct('}') {
                return Ok(());
            }
        }
    }

    fn path(&mut self) -> Result<Vec<Step>> {
        let mut steps = self.path_element()?;
        while self.is_punct('/') {
            self.pos += 1;
            steps.extend(self.path_element()?);
        }
        if self.is_punct('|') {
            return Err(Error::Unsupported("alternative paths".into()));
        }
        Ok(steps)
    }

    fn path_element(&mut self) -> Result<Vec<Step>> {
        let inverse = if self.is_punct('^') {
            self.pos += 1;
            true
        } else {
            false
        };
        let at = self.offset();
        let mut steps = match self.bump() {
            Some(Tok::IriRef(iri)) => vec![Step {
                predicate: self.resolve(iri),
                inverse: false,
            }],
            Some(Tok::PName(p, l)) => vec![Step {
                predicate: self.expand(&p, &l)?,
                inverse: false,
            }],
            Some(Tok::Word(w)) if w == "a" => vec![Step {
                predicate: format!("{RDF}type"),
                inverse: false,
            }],
            Some(Tok::Punct('(')) => {
                let inner = self.path()?;
                self.expect_punct(')')?;
                inner
            }
            Some(Tok::Var(_)) => return Err(Error::Unsupported("variable predicates".into())),
            Some(Tok::Punct('!')) => return Err(Error::Unsupported("negated property sets".into())),
            _ => return Err(syntax(at, "expected a predicate")),
        };
        if self.is_punct('*') || self.is_punct('+') || self.is_punct('?') {
            return Err(Error::Unsupported("path modifiers * + ?".into()));
        }
        if inverse {
            steps.reverse();
            for s in &mut steps {
                s.inverse = !s.inverse;
            }
        }
        Ok(steps)
    }

    fn node(&mut self) -> Result<NodeRef> {
        let at = self.offset();
        let node = match self.bump() {
            Some(Tok::Var(name)) => NodeRef::Variable(name),
            // blank nodes in a query behave as variables
            Some(Tok::Blank(label)) => NodeRef::Variable(format!("_:{label}")),
            Some(Tok::IriRef(iri)) => NodeRef::Bound(Term::Iri(self.resolve(iri))),
            Some(Tok::PName(p, l)) => NodeRef::Bound(Term::Iri(self.expand(&p, &l)?)),
            Some(Tok::Literal(lexical)) => {
                let term = match self.peek() {
                    Some(Tok::LangTag(_)) => match self.bump() {
                        Some(Tok::LangTag(lang)) => Term::Literal {
                            lexical,
                            datatype: None,
                            lang: Some(lang),
                        },
                        _ => unreachable!(),
                    },
                    Some(Tok::DatatypeMark) => {
                        self.pos += 1;
                        let at = self.offset();
                        let dt = match self.bump() {
                            Some(Tok::IriRef(iri)) => self.resolve(iri),
                            Some(Tok::PName(p, l)) => self.expand(&p, &l)?,
                            _ => return Err(syntax(at, "expected datatype IRI")),
                        };
                        Term::Literal {
                            lexical,
                            datatype: Some(dt),
                            lang: None,
                        }
                    }
                    _ => Term::literal(lexical),
                };
                NodeRef::Bound(term)
            }
            Some(Tok::Number(n)) => {
                let dt = if n.contains('.') { "decimal" } else { "integer" };
                NodeRef::Bound(Term::Literal {
                    lexical: n,
                    datatype: Some(format!("{XSD}{dt}")),
                    lang: None,
                })
            }
            Some(Tok::Word(w)) if w == "true" || w == "false" => NodeRef::Bound(Term::Literal {
                lexical: w,
                datatype: Some(format!("{XSD}boolean")),
                lang: None,
            }),
            Some(Tok::Punct('[')) => {
                return Err(Error::Unsupported("anonymous blank node syntax".into()))
            }
            Some(Tok::Punct('(')) => return Err(Error::Unsupported("RDF collections".into())),
            Some(Tok::Word(w)) if UNSUPPORTED_WORDS.contains(&w.to_ascii_uppercase().as_str()) => {
                return Err(Error::Unsupported(w.to_ascii_uppercase()))
            }
            _ => return Err(syntax(at, "expected a term or variable")),
        };
        Ok(node)
    }

    fn fresh_var(&mut self) -> NodeRef {
        loop {
            let name = format!("_path{}", self.fresh);
            self.fresh += 1;
            if !self.used_vars.contains(&name) {
                return NodeRef::Variable(name);
            }
        }
    }

    fn emit(&mut self, subject: &NodeRef, path: &[Step], object: NodeRef) {
        let mut from = subject.clone();
        for (i, step) in path.iter().enumerate() {
            let to = if i + 1 == path.len() {
                object.clone()
            } else {
                self.fresh_var()
            };
            let triple = if step.inverse {
                (to.clone(), step.predicate.clone(), from)
            } else {
                (from, step.predicate.clone(), to.clone())
            };
            self.triples.push(triple);
            from = to;
        }
    }
}

/// Parse query text into a validated [`BasicGraphPattern`].
pub fn parse_query(text: &str) -> Result<BasicGraphPattern> {
    let tokens = lex(text)?;
    let used_vars = tokens
        .iter()
        .filter_map(|t| match &t.tok {
            Tok::Var(v) => Some(v.clone()),
            _ => None,
        })
        .collect();
    let prefixes = [
        ("rdf", RDF),
        ("rdfs", "http://www.w3.org/2000/01/rdf-schema#"),
        ("xsd", XSD),
        ("owl", "http://www.w3.org/2002/07/owl#"),
    ]
    .into_iter()
    .map(|(p, ns)| (p.to_owned(), ns.to_owned()))
    .collect();
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        prefixes,
        base: None,
        used_vars,
        fresh: 0,
        triples: Vec::new(),
    };
    parser.query()?;
    BasicGraphPattern::new(parser.triples)
}
