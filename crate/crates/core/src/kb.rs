//! The `.kb` text format: a line-oriented declaration language for type
//! trees, reference models, lexicon entries and grammatical relations.
//!
//! ```text
//! # comments run to end of line
//! type Top
//! type Artery < Top
//! reltype rel
//! reltype part < rel
//! model Artery { head a: Artery ; s: Artery_Segment ; a -part-> s }
//! entry artere_f { head x: Artery }
//! gramrel de_f prefers part, rel
//! ```
//!
//! Blocks may span several lines; items inside a block are separated by `;`
//! or newlines. A concept may carry an individual referent with
//! `VAR: TYPE = REFERENT`. Types may be referenced before they are declared.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::cg::{CgError, ConceptNode, ConceptualGraph, ReferenceModel};
use crate::lexicon::{Lexicon, LexiconError};
use crate::ontology::{Ontology, OntologyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    SyntaxError,
    UnknownTypeRef,
    DuplicateDecl,
    HeadTypeMismatch,
    MissingHead,
    NoRoot,
    InvalidGraph,
    NoModelOnChain,
    UnreachableConcept,
    UnusedPreference,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub line: usize,
    pub message: String,
}

impl Diagnostic {
    fn error(kind: DiagnosticKind, line: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            kind,
            line,
            message: message.into(),
        }
    }

    fn warning(kind: DiagnosticKind, line: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            kind,
            line,
            message: message.into(),
        }
    }
}

/// `LEVEL:LINE:MESSAGE`
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.severity, self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Graph(#[from] CgError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

/// Declaration lines, kept so that validation can point at the source.
#[derive(Debug, Clone, Default)]
struct SourceLines {
    types: HashMap<String, usize>,
    models: HashMap<String, (usize, Vec<usize>)>,
    entries: HashMap<String, (usize, Vec<usize>)>,
    gramrels: HashMap<String, usize>,
}

/// Ontology plus lexicon. Built once, then only queried.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    pub ontology: Ontology,
    pub lexicon: Lexicon,
    lines: SourceLines,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_model(&mut self, t: &str, graph: ConceptualGraph) -> Result<(), KbError> {
        graph.validate(&self.ontology)?;
        let model = ReferenceModel::new(graph)?;
        self.ontology.register_model(t, model)?;
        Ok(())
    }

    pub fn add_entry(&mut self, word: &str, graph: ConceptualGraph) -> Result<(), KbError> {
        graph.validate(&self.ontology)?;
        self.lexicon.add_entry(word, graph)?;
        Ok(())
    }

    pub fn add_gramrel(&mut self, name: &str, prefs: &[&str]) -> Result<(), KbError> {
        self.lexicon
            .add_gramrel(name, prefs, &self.ontology.relations)?;
        Ok(())
    }

    /// Serializes back to the `.kb` format, preserving declaration order.
    pub fn to_kb_text(&self) -> String {
        let mut out = String::new();
        for t in self.ontology.concepts.names() {
            match self.ontology.concepts.parent(t.as_str()).unwrap() {
                Some(p) => writeln!(out, "type {t} < {p}").unwrap(),
                None => writeln!(out, "type {t}").unwrap(),
            }
        }
        for t in self.ontology.relations.names() {
            match self.ontology.relations.parent(t.as_str()).unwrap() {
                Some(p) => writeln!(out, "reltype {t} < {p}").unwrap(),
                None => writeln!(out, "reltype {t}").unwrap(),
            }
        }
        for (t, m) in self.ontology.models().iter() {
            writeln!(out, "model {t} {{").unwrap();
            write_body(&mut out, m.graph());
            out.push_str("}\n");
        }
        for e in self.lexicon.entries() {
            writeln!(out, "entry {} {{", e.word).unwrap();
            write_body(&mut out, &e.definition);
            out.push_str("}\n");
        }
        for g in self.lexicon.gramrels() {
            let prefs: Vec<&str> = g.prefs.iter().map(|p| p.as_str()).collect();
            writeln!(out, "gramrel {} prefers {}", g.name, prefs.join(", ")).unwrap();
        }
        out
    }
}

fn write_body(out: &mut String, g: &ConceptualGraph) {
    let taken: HashSet<&str> = (0..g.concepts().len())
        .filter_map(|i| g.variable(i))
        .collect();
    let mut fresh = 0;
    let names: Vec<String> = (0..g.concepts().len())
        .map(|i| match g.variable(i) {
            Some(v) => v.to_string(),
            None => loop {
                let v = format!("c{fresh}");
                fresh += 1;
                if !taken.contains(v.as_str()) {
                    break v;
                }
            },
        })
        .collect();
    let head = g.head();
    let order = head
        .into_iter()
        .chain((0..g.concepts().len()).filter(|&i| Some(i) != head));
    for i in order {
        let c = &g.concepts()[i];
        let kw = if Some(i) == head { "head " } else { "" };
        match &c.referent {
            Some(r) => writeln!(out, "  {kw}{}: {} = {}", names[i], c.ctype, quote(r)).unwrap(),
            None => writeln!(out, "  {kw}{}: {}", names[i], c.ctype).unwrap(),
        }
    }
    for r in g.relations() {
        writeln!(
            out,
            "  {} -{}-> {}",
            names[r.source], r.rtype, names[r.target]
        )
        .unwrap();
    }
}

fn quote(s: &str) -> String {
    if !s.is_empty() && s.chars().all(is_ident_char) {
        s.to_string()
    } else {
        format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '*'
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    Lt,
    LBrace,
    RBrace,
    Semi,
    Colon,
    Comma,
    Eq,
    Dash,
    Arrow,
    Newline,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Lt => f.write_str("'<'"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::Semi => f.write_str("';'"),
            Tok::Colon => f.write_str("':'"),
            Tok::Comma => f.write_str("','"),
            Tok::Eq => f.write_str("'='"),
            Tok::Dash => f.write_str("'-'"),
            Tok::Arrow => f.write_str("'->'"),
            Tok::Newline => f.write_str("end of line"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, Diagnostic> {
    let mut toks = Vec::new();
    let mut line = 1;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\n' => {
                toks.push((Tok::Newline, line));
                line += 1;
            }
            '#' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
            }
            c if c.is_whitespace() => {}
            '<' => toks.push((Tok::Lt, line)),
            '{' => toks.push((Tok::LBrace, line)),
            '}' => toks.push((Tok::RBrace, line)),
            ';' => toks.push((Tok::Semi, line)),
            ':' => toks.push((Tok::Colon, line)),
            ',' => toks.push((Tok::Comma, line)),
            '=' => toks.push((Tok::Eq, line)),
            '-' => {
                if chars.peek() == Some(&'>') {
                    chars.next();
                    toks.push((Tok::Arrow, line));
                } else {
                    toks.push((Tok::Dash, line));
                }
            }
            '"' => {
                let start = line;
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None | Some('\n') => {
                            return Err(Diagnostic::error(
                                DiagnosticKind::SyntaxError,
                                start,
                                "unterminated string",
                            ))
                        }
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some(e) if e != '\n' => s.push(e),
                            _ => {
                                return Err(Diagnostic::error(
                                    DiagnosticKind::SyntaxError,
                                    start,
                                    "unterminated string",
                                ))
                            }
                        },
                        Some(c) => s.push(c),
                    }
                }
                toks.push((Tok::Str(s), line));
            }
            c if is_ident_char(c) => {
                let mut s = String::from(c);
                while let Some(&n) = chars.peek() {
                    if is_ident_char(n) {
                        s.push(n);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(s), line));
            }
            other => {
                return Err(Diagnostic::error(
                    DiagnosticKind::SyntaxError,
                    line,
                    format!("unexpected character '{other}'"),
                ))
            }
        }
    }
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parsing into declarations

#[derive(Debug)]
enum Item {
    Concept {
        var: String,
        ctype: String,
        referent: Option<String>,
        head: bool,
        line: usize,
    },
    Edge {
        source: String,
        rel: String,
        target: String,
        line: usize,
    },
}

#[derive(Debug)]
enum Decl {
    Type {
        name: String,
        parent: Option<String>,
        line: usize,
    },
    RelType {
        name: String,
        parent: Option<String>,
        line: usize,
    },
    Model {
        ctype: String,
        items: Vec<Item>,
        line: usize,
    },
    Entry {
        word: String,
        items: Vec<Item>,
        line: usize,
    },
    GramRel {
        name: String,
        prefs: Vec<String>,
        line: usize,
    },
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    in_block: bool,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |&(_, l)| l)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn unexpected(&self, what: &str) -> Diagnostic {
        let found = match self.peek() {
            Some(t) => t.to_string(),
            None => "end of file".to_string(),
        };
        Diagnostic::error(
            DiagnosticKind::SyntaxError,
            self.line(),
            format!("expected {what}, found {found}"),
        )
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn end_of_statement(&mut self) -> PResult<()> {
        match self.peek() {
            None => Ok(()),
            Some(Tok::Newline) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected("end of line")),
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek() == Some(&Tok::Newline) {
            self.pos += 1;
        }
    }

    /// Skips to the start of the next top-level statement.
    fn recover(&mut self) {
        let mut depth = usize::from(std::mem::take(&mut self.in_block));
        while let Some(t) = self.next() {
            match t {
                Tok::LBrace => depth += 1,
                Tok::RBrace => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        return;
                    }
                }
                Tok::Newline if depth == 0 => return,
                _ => {}
            }
        }
    }

    fn decl(&mut self) -> PResult<Decl> {
        let line = self.line();
        let kw = self.ident("a declaration keyword")?;
        match kw.as_str() {
            "type" | "reltype" => {
                let name = self.ident("a type name")?;
                let parent = if self.peek() == Some(&Tok::Lt) {
                    self.pos += 1;
                    Some(self.ident("a parent type name")?)
                } else {
                    None
                };
                self.end_of_statement()?;
                Ok(if kw == "type" {
                    Decl::Type { name, parent, line }
                } else {
                    Decl::RelType { name, parent, line }
                })
            }
            "model" => {
                let ctype = self.ident("a type name")?;
                let items = self.body()?;
                Ok(Decl::Model { ctype, items, line })
            }
            "entry" => {
                let word = self.ident("a word")?;
                let items = self.body()?;
                Ok(Decl::Entry { word, items, line })
            }
            "gramrel" => {
                let name = self.ident("a grammatical relation name")?;
                let kw = self.ident("'prefers'")?;
                if kw != "prefers" {
                    return Err(Diagnostic::error(
                        DiagnosticKind::SyntaxError,
                        line,
                        format!("expected 'prefers', found '{kw}'"),
                    ));
                }
                let mut prefs = vec![self.ident("a relation type")?];
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    prefs.push(self.ident("a relation type")?);
                }
                self.end_of_statement()?;
                Ok(Decl::GramRel { name, prefs, line })
            }
            other => Err(Diagnostic::error(
                DiagnosticKind::SyntaxError,
                line,
                format!("unknown declaration '{other}'"),
            )),
        }
    }

    fn body(&mut self) -> PResult<Vec<Item>> {
        self.skip_newlines();
        self.expect(Tok::LBrace)?;
        self.in_block = true;
        let mut items = Vec::new();
        loop {
            while matches!(self.peek(), Some(Tok::Newline | Tok::Semi)) {
                self.pos += 1;
            }
            if self.peek() == Some(&Tok::RBrace) {
                self.pos += 1;
                self.in_block = false;
                break;
            }
            if self.peek().is_none() {
                return Err(self.unexpected("'}'"));
            }
            items.push(self.item()?);
            match self.peek() {
                Some(Tok::Newline | Tok::Semi | Tok::RBrace) => {}
                _ => return Err(self.unexpected("';', end of line or '}'")),
            }
        }
        self.end_of_statement()?;
        Ok(items)
    }

    fn item(&mut self) -> PResult<Item> {
        let line = self.line();
        let first = self.ident("a variable or 'head'")?;
        let (head, var) = if first == "head" && matches!(self.peek(), Some(Tok::Ident(_))) {
            (true, self.ident("a variable")?)
        } else {
            (false, first)
        };
        match self.peek() {
            Some(Tok::Colon) => {
                self.pos += 1;
                let ctype = self.ident("a concept type")?;
                let referent = if self.peek() == Some(&Tok::Eq) {
                    self.pos += 1;
                    match self.next() {
                        Some(Tok::Ident(s) | Tok::Str(s)) => Some(s),
                        _ => {
                            self.pos -= 1;
                            return Err(self.unexpected("a referent"));
                        }
                    }
                } else {
                    None
                };
                Ok(Item::Concept {
                    var,
                    ctype,
                    referent,
                    head,
                    line,
                })
            }
            Some(Tok::Dash) if !head => {
                self.pos += 1;
                let rel = self.ident("a relation type")?;
                self.expect(Tok::Arrow)?;
                let target = self.ident("a variable")?;
                Ok(Item::Edge {
                    source: var,
                    rel,
                    target,
                    line,
                })
            }
            _ => Err(self.unexpected("':' or '-REL->'")),
        }
    }
}

// ---------------------------------------------------------------------------
// Loading

fn load_tree(
    decls: Vec<(String, Option<String>, usize)>,
    h: &mut crate::ontology::TypeHierarchy,
    lines: &mut HashMap<String, usize>,
    what: &str,
    diags: &mut Vec<Diagnostic>,
) {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut pending = Vec::new();
    let mut root: Option<(String, usize)> = None;
    for (name, parent, line) in decls {
        if let Some(prev) = seen.get(&name) {
            diags.push(Diagnostic::error(
                DiagnosticKind::DuplicateDecl,
                line,
                format!("{what} '{name}' already declared on line {prev}"),
            ));
            continue;
        }
        seen.insert(name.clone(), line);
        if parent.is_none() {
            if let Some((r, rl)) = &root {
                diags.push(Diagnostic::error(
                    DiagnosticKind::DuplicateDecl,
                    line,
                    format!("second root {what} '{name}' (root '{r}' declared on line {rl})"),
                ));
                continue;
            }
            root = Some((name.clone(), line));
        }
        pending.push((name, parent, line));
    }
    let Some((root_name, root_line)) = root else {
        if !pending.is_empty() || what == "type" {
            diags.push(Diagnostic::error(
                DiagnosticKind::NoRoot,
                pending.first().map_or(1, |p| p.2),
                format!("no root {what} declared"),
            ));
        }
        return;
    };
    h.add_type(&root_name, None).expect("first root");
    lines.insert(root_name.clone(), root_line);
    pending.retain(|(n, _, _)| *n != root_name);
    // Forward references: keep adding whatever has its parent in place.
    loop {
        let before = pending.len();
        pending.retain(|(name, parent, line)| {
            let p = parent.as_deref().expect("non-root");
            if h.contains(p) {
                h.add_type(name, Some(p)).expect("checked above");
                lines.insert(name.clone(), *line);
                false
            } else {
                true
            }
        });
        if pending.len() == before {
            break;
        }
    }
    for (name, parent, line) in pending {
        let p = parent.unwrap();
        let msg = if seen.contains_key(&p) {
            format!("{what} '{name}' is part of a parent cycle through '{p}'")
        } else {
            format!("unknown parent {what} '{p}' for '{name}'")
        };
        diags.push(Diagnostic::error(DiagnosticKind::UnknownTypeRef, line, msg));
    }
}

fn build_graph(
    items: &[Item],
    ontology: &Ontology,
    owner: &str,
    diags: &mut Vec<Diagnostic>,
) -> Option<(ConceptualGraph, Vec<usize>)> {
    let mut g = ConceptualGraph::new();
    let mut concept_lines = Vec::new();
    let mut ok = true;
    let mut head: Option<(usize, usize)> = None;
    // Variables whose declaration already failed; edges on them stay quiet.
    let mut broken: HashSet<&str> = HashSet::new();
    for item in items {
        match item {
            Item::Concept {
                var,
                ctype,
                referent,
                head: is_head,
                line,
            } => {
                if !ontology.concepts.contains(ctype) {
                    diags.push(Diagnostic::error(
                        DiagnosticKind::UnknownTypeRef,
                        *line,
                        format!("unknown concept type '{ctype}' in {owner}"),
                    ));
                    ok = false;
                    broken.insert(var);
                    continue;
                }
                let idx = match g.concept_by_var(var) {
                    Some(idx) => {
                        let existing = &g.concepts()[idx];
                        if existing.ctype.as_str() != ctype
                            || (referent.is_some() && existing.referent != *referent)
                        {
                            diags.push(Diagnostic::error(
                                DiagnosticKind::DuplicateDecl,
                                *line,
                                format!(
                                    "variable '{var}' redeclared as {} in {owner}",
                                    ConceptNode {
                                        ctype: ctype.as_str().into(),
                                        referent: referent.clone()
                                    }
                                ),
                            ));
                            ok = false;
                            continue;
                        }
                        idx
                    }
                    None => {
                        let node = ConceptNode {
                            ctype: ontology.concepts.get(ctype).unwrap().clone(),
                            referent: referent.clone(),
                        };
                        concept_lines.push(*line);
                        g.add_concept(node, Some(var)).expect("fresh variable")
                    }
                };
                if *is_head {
                    match head {
                        Some((h, hl)) if h != idx => {
                            diags.push(Diagnostic::error(
                                DiagnosticKind::DuplicateDecl,
                                *line,
                                format!("second head in {owner} (first on line {hl})"),
                            ));
                            ok = false;
                        }
                        Some(_) => {}
                        None => {
                            head = Some((idx, *line));
                            g.set_head(idx).unwrap();
                        }
                    }
                }
            }
            Item::Edge {
                source,
                rel,
                target,
                line,
            } => {
                let Some(rtype) = ontology.relations.get(rel) else {
                    diags.push(Diagnostic::error(
                        DiagnosticKind::UnknownTypeRef,
                        *line,
                        format!("unknown relation type '{rel}' in {owner}"),
                    ));
                    ok = false;
                    continue;
                };
                let mut ends = [0usize; 2];
                let mut resolved = true;
                for (slot, v) in ends.iter_mut().zip([source, target]) {
                    match g.concept_by_var(v) {
                        Some(i) => *slot = i,
                        None if broken.contains(v.as_str()) => resolved = false,
                        None => {
                            diags.push(Diagnostic::error(
                                DiagnosticKind::SyntaxError,
                                *line,
                                format!("variable '{v}' used before its declaration in {owner}"),
                            ));
                            resolved = false;
                        }
                    }
                }
                if !resolved {
                    ok = false;
                    continue;
                }
                if let Err(e) = g.add_relation(rtype.clone(), ends[0], ends[1]) {
                    diags.push(Diagnostic::error(
                        DiagnosticKind::InvalidGraph,
                        *line,
                        format!("{e} in {owner}"),
                    ));
                    ok = false;
                }
            }
        }
    }
    ok.then_some((g, concept_lines))
}

/// Parses and cross-validates a knowledge base. On failure every error found
/// is returned, in source order.
pub fn parse_kb(text: &str) -> Result<KnowledgeBase, Vec<Diagnostic>> {
    let toks = lex(text).map_err(|d| vec![d])?;
    let mut p = Parser {
        toks,
        pos: 0,
        in_block: false,
    };
    let mut diags = Vec::new();
    let mut decls = Vec::new();
    loop {
        p.skip_newlines();
        if p.peek().is_none() {
            break;
        }
        match p.decl() {
            Ok(d) => decls.push(d),
            Err(d) => {
                diags.push(d);
                p.recover();
            }
        }
    }

    let mut kb = KnowledgeBase::new();
    let mut types = Vec::new();
    let mut reltypes = Vec::new();
    let mut rest = Vec::new();
    for d in decls {
        match d {
            Decl::Type { name, parent, line } => types.push((name, parent, line)),
            Decl::RelType { name, parent, line } => reltypes.push((name, parent, line)),
            other => rest.push(other),
        }
    }
    let mut rel_lines = HashMap::new();
    load_tree(
        types,
        &mut kb.ontology.concepts,
        &mut kb.lines.types,
        "type",
        &mut diags,
    );
    load_tree(
        reltypes,
        &mut kb.ontology.relations,
        &mut rel_lines,
        "relation type",
        &mut diags,
    );

    for d in rest {
        match d {
            Decl::Model { ctype, items, line } => {
                let owner = format!("model {ctype}");
                if !kb.ontology.concepts.contains(&ctype) {
                    diags.push(Diagnostic::error(
                        DiagnosticKind::UnknownTypeRef,
                        line,
                        format!("model for unknown type '{ctype}'"),
                    ));
                    continue;
                }
                let Some((g, clines)) = build_graph(&items, &kb.ontology, &owner, &mut diags)
                else {
                    continue;
                };
                let model = match ReferenceModel::new(g) {
                    Ok(m) => m,
                    Err(_) => {
                        diags.push(Diagnostic::error(
                            DiagnosticKind::MissingHead,
                            line,
                            format!("{owner} declares no head concept"),
                        ));
                        continue;
                    }
                };
                match kb.ontology.register_model(&ctype, model) {
                    Ok(()) => {
                        kb.lines.models.insert(ctype, (line, clines));
                    }
                    Err(OntologyError::HeadTypeMismatch { expected, head }) => {
                        diags.push(Diagnostic::error(
                            DiagnosticKind::HeadTypeMismatch,
                            line,
                            format!("model {expected} has head of type '{head}'"),
                        ))
                    }
                    Err(e) => diags.push(Diagnostic::error(
                        DiagnosticKind::DuplicateDecl,
                        line,
                        e.to_string(),
                    )),
                }
            }
            Decl::Entry { word, items, line } => {
                let owner = format!("entry {word}");
                let Some((g, clines)) = build_graph(&items, &kb.ontology, &owner, &mut diags)
                else {
                    continue;
                };
                match kb.lexicon.add_entry(&word, g) {
                    Ok(()) => {
                        kb.lines.entries.insert(word, (line, clines));
                    }
                    Err(LexiconError::MissingHead(_)) => diags.push(Diagnostic::error(
                        DiagnosticKind::MissingHead,
                        line,
                        format!("{owner} declares no head concept"),
                    )),
                    Err(e) => diags.push(Diagnostic::error(
                        DiagnosticKind::DuplicateDecl,
                        line,
                        e.to_string(),
                    )),
                }
            }
            Decl::GramRel { name, prefs, line } => {
                let prefs: Vec<&str> = prefs.iter().map(String::as_str).collect();
                match kb
                    .lexicon
                    .add_gramrel(&name, &prefs, &kb.ontology.relations)
                {
                    Ok(()) => {
                        kb.lines.gramrels.insert(name, line);
                    }
                    Err(e @ LexiconError::UnknownRelationType(_)) => diags.push(Diagnostic::error(
                        DiagnosticKind::UnknownTypeRef,
                        line,
                        e.to_string(),
                    )),
                    Err(e) => diags.push(Diagnostic::error(
                        DiagnosticKind::DuplicateDecl,
                        line,
                        e.to_string(),
                    )),
                }
            }
            Decl::Type { .. } | Decl::RelType { .. } => unreachable!(),
        }
    }

    if diags.is_empty() {
        Ok(kb)
    } else {
        diags.sort_by_key(|d| d.line);
        Err(diags)
    }
}

/// Non-fatal findings on a loaded knowledge base.
pub fn validate_kb(kb: &KnowledgeBase) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let o = &kb.ontology;
    for t in o.concepts.names() {
        if o.inherited_models(t.as_str()).unwrap().is_empty() {
            let line = kb.lines.types.get(t.as_str()).copied().unwrap_or(0);
            out.push(Diagnostic::warning(
                DiagnosticKind::NoModelOnChain,
                line,
                format!("no reference model for type '{t}' or any of its supertypes"),
            ));
        }
    }
    let graphs = o
        .models()
        .iter()
        .map(|(t, m)| {
            (
                format!("model {t}"),
                m.graph(),
                kb.lines.models.get(t.as_str()),
            )
        })
        .chain(kb.lexicon.entries().map(|e| {
            (
                format!("entry {}", e.word),
                &e.definition,
                kb.lines.entries.get(&e.word),
            )
        }));
    let mut used_rels = Vec::new();
    for (owner, g, lines) in graphs {
        for i in g.unreachable_from_head() {
            let line = lines
                .and_then(|(decl, cl)| cl.get(i).or(Some(decl)))
                .copied()
                .unwrap_or(0);
            out.push(Diagnostic::warning(
                DiagnosticKind::UnreachableConcept,
                line,
                format!(
                    "concept {} in {owner} is not connected to the head",
                    g.variable(i)
                        .map_or_else(|| g.concepts()[i].to_string(), str::to_string)
                ),
            ));
        }
        used_rels.extend(g.relations().iter().map(|r| r.rtype.clone()));
    }
    for gr in kb.lexicon.gramrels() {
        for p in &gr.prefs {
            let used = used_rels.iter().any(|r| {
                o.relations
                    .is_subtype(r.as_str(), p.as_str())
                    .unwrap_or(false)
            });
            if !used {
                let line = kb.lines.gramrels.get(&gr.name).copied().unwrap_or(0);
                out.push(Diagnostic::warning(
                    DiagnosticKind::UnusedPreference,
                    line,
                    format!(
                        "preference '{p}' of {} matches no relation in any model or entry",
                        gr.name
                    ),
                ));
            }
        }
    }
    out.sort_by_key(|d| d.line);
    out
}
