//! Dictionary-encoded, immutable RDF graph with forward and backward
//! adjacency indexes.
//!
//! Triples are loaded from N-Triples text. Every distinct term gets a dense
//! [`TermId`] in first-seen order, and the graph is frozen once loading is
//! complete. Neighbor lookups return sorted slices straight out of the index.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

/// An RDF term. Equality is bit-exact on every field.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Literal {
        lexical: String,
        datatype: Option<String>,
        lang: Option<String>,
    },
    Blank(String),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(s.into())
    }

    pub fn literal(s: impl Into<String>) -> Self {
        Term::Literal {
            lexical: s.into(),
            datatype: None,
            lang: None,
        }
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => {
                f.write_str("<")?;
                for c in iri.chars() {
                    match c {
                        '>' | '<' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' => {
                            write!(f, "\\u{:04X}", c as u32)?
                        }
                        c if (c as u32) <= 0x20 => write!(f, "\\u{:04X}", c as u32)?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str(">")
            }
            Term::Blank(label) => write!(f, "_:{label}"),
            Term::Literal {
                lexical,
                datatype,
                lang,
            } => {
                f.write_str("\"")?;
                for c in lexical.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
                if let Some(lang) = lang {
                    write!(f, "@{lang}")?;
                } else if let Some(dt) = datatype {
                    write!(f, "^^{}", Term::Iri(dt.clone()))?;
                }
                Ok(())
            }
        }
    }
}

/// Dense identifier of a term inside one [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// subject to object
    Forward,
    /// object to subject
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirectedPredicate {
    pub predicate: TermId,
    pub direction: Direction,
}

impl DirectedPredicate {
    pub fn forward(predicate: TermId) -> Self {
        DirectedPredicate {
            predicate,
            direction: Direction::Forward,
        }
    }

    pub fn inverse(predicate: TermId) -> Self {
        DirectedPredicate {
            predicate,
            direction: Direction::Inverse,
        }
    }
}

type Range = (u32, u32);

#[derive(Debug, Default)]
struct PredicateIndex {
    pairs: Vec<(TermId, TermId)>,
    subjects: Vec<TermId>,
    objects: Vec<TermId>,
}

/// Immutable dictionary-encoded triple set.
#[derive(Debug, Default)]
pub struct Graph {
    terms: Vec<Term>,
    ids: HashMap<Term, TermId>,
    triples: Vec<(TermId, TermId, TermId)>,
    fwd: HashMap<(TermId, TermId), Range>,
    fwd_targets: Vec<TermId>,
    bwd: HashMap<(TermId, TermId), Range>,
    bwd_targets: Vec<TermId>,
    by_predicate: HashMap<TermId, PredicateIndex>,
    adjacency_calls: AtomicU64,
}

impl Graph {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id.index()]
    }

    pub fn id_of(&self, term: &Term) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn iri_id(&self, iri: &str) -> Option<TermId> {
        self.id_of(&Term::Iri(iri.to_owned()))
    }

    /// Triples sorted by (subject, predicate, object) id.
    pub fn triples(&self) -> &[(TermId, TermId, TermId)] {
        &self.triples
    }

    pub fn contains(&self, s: TermId, p: TermId, o: TermId) -> bool {
        self.lookup(s, DirectedPredicate::forward(p))
            .binary_search(&o)
            .is_ok()
    }

    /// `V(node, edge)`: nodes reachable from `node` over one `edge`, ascending
    /// by id. Every call is counted, see [`Graph::adjacency_calls`].
    pub fn neighbors(&self, node: TermId, edge: DirectedPredicate) -> &[TermId] {
        self.adjacency_calls.fetch_add(1, Ordering::Relaxed);
        self.lookup(node, edge)
    }

    /// Same as [`Graph::neighbors`] without touching the call counter.
    pub(crate) fn lookup(&self, node: TermId, edge: DirectedPredicate) -> &[TermId] {
        let (index, targets) = match edge.direction {
            Direction::Forward => (&self.fwd, &self.fwd_targets),
            Direction::Inverse => (&self.bwd, &self.bwd_targets),
        };
        match index.get(&(node, edge.predicate)) {
            Some(&(start, end)) => &targets[start as usize..end as usize],
            None => &[],
        }
    }

    /// Number of [`Graph::neighbors`] calls served so far.
    pub fn adjacency_calls(&self) -> u64 {
        self.adjacency_calls.load(Ordering::Relaxed)
    }

    pub fn subjects_of(&self, p: TermId) -> &[TermId] {
        self.by_predicate
            .get(&p)
            .map(|i| i.subjects.as_slice())
            .unwrap_or(&[])
    }

    pub fn objects_of(&self, p: TermId) -> &[TermId] {
        self.by_predicate
            .get(&p)
            .map(|i| i.objects.as_slice())
            .unwrap_or(&[])
    }

    /// All (subject, object) pairs of predicate `p`, sorted.
    pub fn pairs_of(&self, p: TermId) -> &[(TermId, TermId)] {
        self.by_predicate
            .get(&p)
            .map(|i| i.pairs.as_slice())
            .unwrap_or(&[])
    }

    /// Total length of all forward plus backward adjacency lists.
    pub fn adjacency_len(&self) -> usize {
        self.fwd_targets.len() + self.bwd_targets.len()
    }

    pub fn to_ntriples(&self) -> String {
        let mut out = String::new();
        for &(s, p, o) in &self.triples {
            out.push_str(&format!("{} {} {} .\n", self.term(s), self.term(p), self.term(o)));
        }
        out
    }
}

#[derive(Default)]
struct GraphBuilder {
    terms: Vec<Term>,
    ids: HashMap<Term, TermId>,
    seen: HashSet<(TermId, TermId, TermId)>,
}

impl GraphBuilder {
    fn intern(&mut self, term: Term) -> TermId {
        if let Some(&id) = self.ids.get(&term) {
            return id;
        }
        let id = TermId(self.terms.len() as u32);
        self.terms.push(term.clone());
        self.ids.insert(term, id);
        id
    }

    fn insert(&mut self, s: Term, p: Term, o: Term) {
        let s = self.intern(s);
        let p = self.intern(p);
        let o = self.intern(o);
        self.seen.insert((s, p, o));
    }

    fn finish(self) -> Graph {
        let mut triples: Vec<_> = self.seen.into_iter().collect();
        triples.sort_unstable();

        let (fwd, fwd_targets) = build_index(triples.iter().map(|&(s, p, o)| (s, p, o)));
        let (bwd, bwd_targets) = build_index(triples.iter().map(|&(s, p, o)| (o, p, s)));

        let mut by_predicate: HashMap<TermId, PredicateIndex> = HashMap::new();
        for &(s, p, o) in &triples {
            by_predicate.entry(p).or_default().pairs.push((s, o));
        }
        for index in by_predicate.values_mut() {
            index.pairs.sort_unstable();
            index.subjects = index.pairs.iter().map(|&(s, _)| s).collect();
            index.subjects.dedup();
            index.objects = index.pairs.iter().map(|&(_, o)| o).collect();
            index.objects.sort_unstable();
            index.objects.dedup();
        }

        Graph {
            terms: self.terms,
            ids: self.ids,
            triples,
            fwd,
            fwd_targets,
            bwd,
            bwd_targets,
            by_predicate,
            adjacency_calls: AtomicU64::new(0),
        }
    }
}

fn build_index(
    keyed: impl Iterator<Item = (TermId, TermId, TermId)>,
) -> (HashMap<(TermId, TermId), Range>, Vec<TermId>) {
    let mut rows: Vec<_> = keyed.collect();
    rows.sort_unstable();
    let mut index = HashMap::new();
    let mut targets = Vec::with_capacity(rows.len());
    let mut start = 0u32;
    for (i, &(a, p, b)) in rows.iter().enumerate() {
        targets.push(b);
        let last = rows
            .get(i + 1)
            .map_or(true, |&(na, np, _)| (na, np) != (a, p));
        if last {
            let end = targets.len() as u32;
            index.insert((a, p), (start, end));
            start = end;
        }
    }
    (index, targets)
}

/// Parse N-Triples from `source` into a frozen [`Graph`]. Duplicate triples
/// are kept once.
pub fn load_ntriples(source: impl BufRead) -> Result<Graph> {
    let mut builder = GraphBuilder::default();
    for (n, line) in source.split(b'\n').enumerate() {
        let line_no = n + 1;
        let bytes = line?;
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::NTriples {
            line: line_no,
            message: "invalid UTF-8".into(),
        })?;
        let parsed = LineParser::new(text)
            .parse()
            .map_err(|message| Error::NTriples {
                line: line_no,
                message,
            })?;
        if let Some((s, p, o)) = parsed {
            builder.insert(s, p, o);
        }
    }
    Ok(builder.finish())
}

pub fn load_ntriples_str(text: &str) -> Result<Graph> {
    load_ntriples(text.as_bytes())
}

struct LineParser<'a> {
    text: &'a str,
    pos: usize,
}

type Parsed<T> = std::result::Result<T, String>;

impl<'a> LineParser<'a> {
    fn new(text: &'a str) -> Self {
        LineParser { text, pos: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn next(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r')) {
            self.next();
        }
    }

    fn expect(&mut self, want: char) -> Parsed<()> {
        match self.next() {
            Some(c) if c == want => Ok(()),
            Some(c) => Err(format!("expected '{want}', found '{c}'")),
            None => Err(format!("expected '{want}', found end of line")),
        }
    }

    fn parse(mut self) -> Parsed<Option<(Term, Term, Term)>> {
        self.skip_ws();
        match self.peek() {
            None | Some('#') => return Ok(None),
            _ => {}
        }
        let s = match self.peek() {
            Some('<') => Term::Iri(self.iri()?),
            Some('_') => self.blank()?,
            _ => return Err("subject must be an IRI or blank node".into()),
        };
        self.skip_ws();
        let p = match self.peek() {
            Some('<') => Term::Iri(self.iri()?),
            _ => return Err("predicate must be an IRI".into()),
        };
        self.skip_ws();
        let o = match self.peek() {
            Some('<') => Term::Iri(self.iri()?),
            Some('_') => self.blank()?,
            Some('"') => self.literal()?,
            _ => return Err("object must be an IRI, blank node or literal".into()),
        };
        self.skip_ws();
        self.expect('.')?;
        self.skip_ws();
        match self.peek() {
            None | Some('#') => Ok(Some((s, p, o))),
            Some(c) => Err(format!("unexpected '{c}' after end of triple")),
        }
    }

    fn iri(&mut self) -> Parsed<String> {
        self.expect('<')?;
        let mut out = String::new();
        loop {
            match self.next() {
                Some('>') => break,
                Some('\\') => out.push(self.unicode_escape()?),
                Some(c) if c == '<' || c == '"' || c == ' ' => {
                    return Err(format!("illegal character '{c}' in IRI"))
                }
                Some(c) => out.push(c),
                None => return Err("unterminated IRI".into()),
            }
        }
        if out.is_empty() {
            return Err("empty IRI".into());
        }
        Ok(out)
    }

    fn unicode_escape(&mut self) -> Parsed<char> {
        let len = match self.next() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err("bad escape sequence".into()),
        };
        let mut hex = String::with_capacity(len);
        for _ in 0..len {
            hex.push(self.next().ok_or("truncated unicode escape")?);
        }
        u32::from_str_radix(&hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| format!("invalid unicode escape '{hex}'"))
    }

    fn blank(&mut self) -> Parsed<Term> {
        self.expect('_')?;
        self.expect(':')?;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.') {
                self.next();
            } else {
                break;
            }
        }
        // a label never ends with '.', so trailing dots belong to the statement
        while self.pos > start && self.text[..self.pos].ends_with('.') {
            self.pos -= 1;
        }
        if self.pos == start {
            return Err("empty blank node label".into());
        }
        Ok(Term::Blank(self.text[start..self.pos].to_owned()))
    }

    fn literal(&mut self) -> Parsed<Term> {
        self.expect('"')?;
        let mut lexical = String::new();
        loop {
            match self.next() {
                Some('"') => break,
                Some('\\') => {
                    let unescaped = match self.peek() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        _ => {
                            lexical.push(self.unicode_escape()?);
                            continue;
                        }
                    };
                    self.next();
                    lexical.push(unescaped);
                }
                Some(c) => lexical.push(c),
                None => return Err("unterminated literal".into()),
            }
        }
        match self.peek() {
            Some('@') => {
                self.next();
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                    self.next();
                }
                let lang = &self.text[start..self.pos];
                if !lang.starts_with(|c: char| c.is_ascii_alphabetic()) {
                    return Err("malformed language tag".into());
                }
                Ok(Term::Literal {
                    lexical,
                    datatype: None,
                    lang: Some(lang.to_owned()),
                })
            }
            Some('^') => {
                self.next();
                self.expect('^')?;
                let dt = self.iri()?;
                Ok(Term::Literal {
                    lexical,
                    datatype: Some(dt),
                    lang: None,
                })
            }
            _ => Ok(Term::literal(lexical)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(text: &str) -> Parsed<Option<(Term, Term, Term)>> {
        LineParser::new(text).parse()
    }

    fn object(text: &str) -> Term {
        line(&format!("<http://s> <http://p> {text} .")).unwrap().unwrap().2
    }

    #[test]
    fn blank_and_comment_lines() {
        assert_eq!(line(""), Ok(None));
        assert_eq!(line("   \t"), Ok(None));
        assert_eq!(line("# nothing here"), Ok(None));
    }

    #[test]
    fn blank_label_followed_by_dot() {
        let (s, _, o) = line("_:a.b <http://p> _:c.").unwrap().unwrap();
        assert_eq!(s, Term::Blank("a.b".into()));
        assert_eq!(o, Term::Blank("c".into()));
    }

    #[test]
    fn iri_unicode_escapes() {
        assert_eq!(object(r"<http://x/é\U0001F600>"), Term::iri("http://x/é😀"));
    }

    #[test]
    fn literal_forms() {
        assert_eq!(object(r#""a\"b\\c\nd""#), Term::literal("a\"b\\c\nd"));
        assert_eq!(
            object(r#""hi"@en-GB"#),
            Term::Literal {
                lexical: "hi".into(),
                datatype: None,
                lang: Some("en-GB".into())
            }
        );
        assert_eq!(
            object(r#""1"^^<http://www.w3.org/2001/XMLSchema#integer>"#),
            Term::Literal {
                lexical: "1".into(),
                datatype: Some("http://www.w3.org/2001/XMLSchema#integer".into()),
                lang: None
            }
        );
    }

    #[test]
    fn malformed_lines() {
        for bad in [
            "<http://s> <http://p> <http://o>",
            "<http://s> <http://p> <http://o> . extra",
            "\"lit\" <http://p> <http://o> .",
            "<http://s> _:p <http://o> .",
            "<http://s> <http://p> \"open .",
            "<http://s> <http://p> <> .",
            "<http://s> <http://p> <http://a b> .",
            "<http://s> <http://p> \"x\"@1 .",
            r"<http://s> <http://p> <http://\u12> .",
        ] {
            assert!(line(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        let terms = [
            Term::iri("http://x/a>b"),
            Term::literal("tab\tquote\" back\\ nl\n"),
            Term::Literal {
                lexical: "x".into(),
                datatype: None,
                lang: Some("de".into()),
            },
            Term::Literal {
                lexical: "2".into(),
                datatype: Some("http://www.w3.org/2001/XMLSchema#int".into()),
                lang: None,
            },
        ];
        for t in terms {
            assert_eq!(object(&t.to_string()), t);
        }
    }

    #[test]
    fn dictionary_is_dense() {
        let g = load_ntriples_str("<http://a> <http://p> <http://b> .\n<http://b> <http://p> <http://a> .\n")
            .unwrap();
        assert_eq!(g.term_count(), 3);
        for i in 0..3 {
            let t = g.term(TermId(i)).clone();
            assert_eq!(g.id_of(&t), Some(TermId(i)));
        }
    }
}
