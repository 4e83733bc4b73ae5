//! The textual format: parenthesized prefix syntax for terms, formulas,
//! sequents and proofs, grouped into documents with a signature block.
//!
//! ```text
//! (signature (symbol P 1 pred) (symbol k 0 const))
//! (def goal (imp (P k) (P k)))
//! (proof id
//!   (rule RImp (seq () ((imp (P k) (P k)))) (imp (P k) (P k))
//!     (rule Ax (seq ((P k)) ((P k))) (P k))))
//! ```
//!
//! Serialization is canonical: multiset elements are ordered by their
//! serialized form and every proof node sits on its own line.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::calculus::{Inference, Path, Proof, RuleTag, Sequent};
use crate::syntax::{Formula, Name, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Pred,
    Fn,
    Const,
}

impl SymbolKind {
    fn keyword(self) -> &'static str {
        match self {
            SymbolKind::Pred => "pred",
            SymbolKind::Fn => "fn",
            SymbolKind::Const => "const",
        }
    }
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("unexpected `)`")]
    UnexpectedClose,
    #[error("expected {0}")]
    Expected(&'static str),
    #[error("undeclared symbol `{0}`")]
    Undeclared(String),
    #[error("`{0}` is a reserved word")]
    Reserved(String),
    #[error("`{0}` is declared twice")]
    Duplicate(String),
    #[error("`{name}` is declared as {declared}, used as {used}")]
    KindMismatch { name: String, declared: SymbolKind, used: SymbolKind },
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("unknown rule tag `{0}`")]
    UnknownRule(String),
    #[error("Henkin index `{0}` is not closed")]
    OpenHenkinIndex(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {kind}")]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
}

fn err<T>(pos: Pos, kind: ParseErrorKind) -> Result<T, ParseError> {
    Err(ParseError { pos, kind })
}

const RESERVED: [&str; 15] =
    ["true", "false", "not", "and", "or", "imp", "E", "A", "H", "seq", "rule", "symbol", "def", "proof", "signature"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub name: Name,
    pub arity: usize,
    pub kind: SymbolKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub symbols: Vec<Symbol>,
}

impl Signature {
    pub fn get(&self, name: &str) -> Option<&Symbol> {
        self.symbols.iter().find(|s| &*s.name == name)
    }

    /// Adds a symbol unless one of that name exists.
    pub fn declare(&mut self, name: &str, arity: usize, kind: SymbolKind) {
        if self.get(name).is_none() {
            self.symbols.push(Symbol { name: name.into(), arity, kind });
        }
    }

    /// Removes the symbol called `name`, if declared.
    pub fn remove(&mut self, name: &str) {
        self.symbols.retain(|s| &*s.name != name);
    }

    fn scan_term(&mut self, t: &Term) {
        match t {
            Term::Var(_) => {}
            Term::Const(c) => self.declare(c, 0, SymbolKind::Const),
            Term::Henkin(q) => self.scan_formula(q),
            Term::App(f, args) => {
                self.declare(f, args.len(), SymbolKind::Fn);
                args.iter().for_each(|a| self.scan_term(a));
            }
        }
    }

    /// Declares every symbol of `f` not yet known.
    pub fn scan_formula(&mut self, f: &Formula) {
        if let Formula::Atom(p, args) = f {
            self.declare(p, args.len(), SymbolKind::Pred);
            args.iter().for_each(|a| self.scan_term(a));
        }
        for c in f.children() {
            self.scan_formula(c);
        }
    }

    pub fn scan_proof(&mut self, pi: &Proof) {
        pi.visit(&mut |_, n| {
            n.conclusion.formulas().for_each(|f| self.scan_formula(f));
            self.scan_formula(&n.inference.principal);
            if let Some(w) = &n.inference.witness {
                self.scan_term(w);
            }
        });
    }

    /// The signature of the symbols used by `pi`.
    pub fn of_proof(pi: &Proof) -> Signature {
        let mut sig = Signature::default();
        sig.scan_proof(pi);
        sig
    }
}

/// Source positions of a parsed item. Positions never take part in
/// equality, so documents compare structurally.
#[derive(Debug, Clone, Default)]
pub struct Provenance {
    pub file: Option<String>,
    pub nodes: BTreeMap<Path, Pos>,
}

impl PartialEq for Provenance {
    fn eq(&self, _: &Provenance) -> bool {
        true
    }
}

impl Eq for Provenance {}

impl Provenance {
    /// `file:line:col` of the proof node at `path`, falling back to the
    /// nearest recorded ancestor.
    pub fn locate(&self, path: &[usize]) -> String {
        let pos = (0..=path.len()).rev().find_map(|i| self.nodes.get(&path[..i])).copied().unwrap_or_default();
        match &self.file {
            Some(f) => format!("{f}:{pos}"),
            None => pos.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Def { name: Name, formula: Formula },
    Proof { name: Name, proof: Proof, provenance: Provenance },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub signature: Signature,
    pub items: Vec<Item>,
}

impl Document {
    /// A document holding one proof, with the signature it uses.
    pub fn single(name: &str, proof: Proof) -> Document {
        Document {
            signature: Signature::of_proof(&proof),
            items: vec![Item::Proof { name: name.into(), proof, provenance: Provenance::default() }],
        }
    }

    pub fn proofs(&self) -> impl Iterator<Item = (&Name, &Proof, &Provenance)> {
        self.items.iter().filter_map(|i| match i {
            Item::Proof { name, proof, provenance } => Some((name, proof, provenance)),
            Item::Def { .. } => None,
        })
    }

    pub fn proof(&self, name: &str) -> Option<&Proof> {
        self.proofs().find(|(n, _, _)| &***n == name).map(|(_, p, _)| p)
    }

    pub fn def(&self, name: &str) -> Option<&Formula> {
        self.items.iter().find_map(|i| match i {
            Item::Def { name: n, formula } if &**n == name => Some(formula),
            _ => None,
        })
    }
}

#[derive(Debug, Clone)]
enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    fn atom(&self, what: &'static str) -> Result<&str, ParseError> {
        match self {
            Sexp::Atom(s, _) => Ok(s),
            Sexp::List(_, p) => err(*p, ParseErrorKind::Expected(what)),
        }
    }

    fn list(&self, what: &'static str) -> Result<&[Sexp], ParseError> {
        match self {
            Sexp::List(items, _) => Ok(items),
            Sexp::Atom(_, p) => err(*p, ParseErrorKind::Expected(what)),
        }
    }

    fn head(&self) -> Option<&str> {
        match self {
            Sexp::List(items, _) => match items.first() {
                Some(Sexp::Atom(s, _)) => Some(s),
                _ => None,
            },
            Sexp::Atom(..) => None,
        }
    }
}

fn read_all(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    let mut line = 1;
    let mut col = 0;
    let chars = text.chars();
    let mut word = String::new();
    let mut word_pos = Pos::default();
    let mut in_comment = false;
    let flush = |word: &mut String, pos: Pos, stack: &mut Vec<(Vec<Sexp>, Pos)>, top: &mut Vec<Sexp>| {
        if !word.is_empty() {
            let a = Sexp::Atom(std::mem::take(word), pos);
            match stack.last_mut() {
                Some((items, _)) => items.push(a),
                None => top.push(a),
            }
        }
    };
    for ch in chars {
        col += 1;
        let here = Pos { line, col };
        if in_comment {
            if ch == '\n' {
                in_comment = false;
                line += 1;
                col = 0;
            }
            continue;
        }
        match ch {
            ';' => {
                flush(&mut word, word_pos, &mut stack, &mut top);
                in_comment = true;
            }
            '(' => {
                flush(&mut word, word_pos, &mut stack, &mut top);
                stack.push((Vec::new(), here));
            }
            ')' => {
                flush(&mut word, word_pos, &mut stack, &mut top);
                let (items, pos) = stack.pop().ok_or(ParseError { pos: here, kind: ParseErrorKind::UnexpectedClose })?;
                let l = Sexp::List(items, pos);
                match stack.last_mut() {
                    Some((items, _)) => items.push(l),
                    None => top.push(l),
                }
            }
            c if c.is_whitespace() => {
                flush(&mut word, word_pos, &mut stack, &mut top);
                if c == '\n' {
                    line += 1;
                    col = 0;
                }
            }
            c => {
                if word.is_empty() {
                    word_pos = here;
                }
                word.push(c);
            }
        }
    }
    flush(&mut word, word_pos, &mut stack, &mut top);
    if let Some((_, pos)) = stack.last() {
        return err(*pos, ParseErrorKind::UnexpectedEof);
    }
    Ok(top)
}

struct Reader<'a> {
    sig: &'a Signature,
}

impl Reader<'_> {
    fn symbol(&self, name: &str, pos: Pos, kind: SymbolKind, arity: usize) -> Result<(), ParseError> {
        let Some(s) = self.sig.get(name) else { return err(pos, ParseErrorKind::Undeclared(name.to_string())) };
        if s.kind != kind {
            return err(pos, ParseErrorKind::KindMismatch { name: name.to_string(), declared: s.kind, used: kind });
        }
        if s.arity != arity {
            return err(pos, ParseErrorKind::ArityMismatch { name: name.to_string(), expected: s.arity, found: arity });
        }
        Ok(())
    }

    fn binder<'s>(&self, s: &'s Sexp) -> Result<&'s str, ParseError> {
        let x = s.atom("a variable")?;
        if RESERVED.contains(&x) {
            return err(s.pos(), ParseErrorKind::Reserved(x.to_string()));
        }
        Ok(x)
    }

    fn term(&self, s: &Sexp, bound: &mut Vec<String>) -> Result<Term, ParseError> {
        match s {
            Sexp::Atom(a, pos) => {
                if bound.iter().any(|b| b == a) {
                    return Ok(Term::var(a));
                }
                self.symbol(a, *pos, SymbolKind::Const, 0)?;
                Ok(Term::constant(a))
            }
            Sexp::List(items, pos) => {
                let head = items.first().ok_or(ParseError { pos: *pos, kind: ParseErrorKind::Expected("a term") })?;
                let h = head.atom("a function symbol")?;
                if h == "H" {
                    let [_, q, x, body] = items.as_slice() else {
                        return err(*pos, ParseErrorKind::Expected("(H E|A var formula)"));
                    };
                    let x = self.binder(x)?;
                    bound.push(x.to_string());
                    let body = self.formula(body, bound);
                    bound.pop();
                    let index = match q.atom("E or A")? {
                        "E" => Formula::exists(x, body?),
                        "A" => Formula::forall(x, body?),
                        _ => return err(q.pos(), ParseErrorKind::Expected("E or A")),
                    };
                    let shown = index.to_string();
                    return Term::henkin(index).map_err(|_| ParseError { pos: *pos, kind: ParseErrorKind::OpenHenkinIndex(shown) });
                }
                self.symbol(h, head.pos(), SymbolKind::Fn, items.len() - 1)?;
                let args = items[1..].iter().map(|a| self.term(a, bound)).collect::<Result<Vec<_>, _>>()?;
                Ok(Term::app(h, args))
            }
        }
    }

    fn formula(&self, s: &Sexp, bound: &mut Vec<String>) -> Result<Formula, ParseError> {
        match s {
            Sexp::Atom(a, pos) => match a.as_str() {
                "true" => Ok(Formula::Top),
                "false" => Ok(Formula::Bot),
                _ => {
                    self.symbol(a, *pos, SymbolKind::Pred, 0)?;
                    Ok(Formula::atom(a, vec![]))
                }
            },
            Sexp::List(items, pos) => {
                let head = items.first().ok_or(ParseError { pos: *pos, kind: ParseErrorKind::Expected("a formula") })?;
                let h = head.atom("a connective or predicate")?;
                let arity = |n: usize, what: &'static str| {
                    if items.len() == n + 1 {
                        Ok(())
                    } else {
                        err(*pos, ParseErrorKind::Expected(what))
                    }
                };
                match h {
                    "not" => {
                        arity(1, "(not F)")?;
                        Ok(Formula::not(self.formula(&items[1], bound)?))
                    }
                    "and" | "or" | "imp" => {
                        arity(2, "a binary connective with two operands")?;
                        let a = self.formula(&items[1], bound)?;
                        let b = self.formula(&items[2], bound)?;
                        Ok(match h {
                            "and" => Formula::and(a, b),
                            "or" => Formula::or(a, b),
                            _ => Formula::imp(a, b),
                        })
                    }
                    "E" | "A" => {
                        arity(2, "(E|A var F)")?;
                        let x = self.binder(&items[1])?;
                        bound.push(x.to_string());
                        let body = self.formula(&items[2], bound);
                        bound.pop();
                        Ok(if h == "E" { Formula::exists(x, body?) } else { Formula::forall(x, body?) })
                    }
                    _ => {
                        self.symbol(h, head.pos(), SymbolKind::Pred, items.len() - 1)?;
                        let args = items[1..].iter().map(|a| self.term(a, bound)).collect::<Result<Vec<_>, _>>()?;
                        Ok(Formula::atom(h, args))
                    }
                }
            }
        }
    }

    fn formulas(&self, s: &Sexp) -> Result<Vec<Formula>, ParseError> {
        s.list("a list of formulas")?.iter().map(|f| self.formula(f, &mut Vec::new())).collect()
    }

    fn sequent(&self, s: &Sexp) -> Result<Sequent, ParseError> {
        let items = s.list("a sequent")?;
        match items {
            [h, a, b] if h.atom("seq").ok() == Some("seq") => Ok(Sequent::new(self.formulas(a)?, self.formulas(b)?)),
            _ => err(s.pos(), ParseErrorKind::Expected("(seq (F…) (F…))")),
        }
    }

    fn proof(&self, s: &Sexp, path: &mut Path, spans: &mut BTreeMap<Path, Pos>) -> Result<Proof, ParseError> {
        let items = s.list("a proof node")?;
        if s.head() != Some("rule") || items.len() < 4 {
            return err(s.pos(), ParseErrorKind::Expected("(rule TAG SEQUENT PRINCIPAL …)"));
        }
        spans.insert(path.clone(), s.pos());
        let tag_name = items[1].atom("a rule tag")?;
        let tag: RuleTag =
            tag_name.parse().map_err(|_| ParseError { pos: items[1].pos(), kind: ParseErrorKind::UnknownRule(tag_name.to_string()) })?;
        let conclusion = self.sequent(&items[2])?;
        let principal = self.formula(&items[3], &mut Vec::new())?;
        let mut rest = &items[4..];
        let witness = if tag.needs_witness() {
            let w = rest.first().ok_or(ParseError { pos: s.pos(), kind: ParseErrorKind::Expected("a witness term") })?;
            rest = &rest[1..];
            Some(self.term(w, &mut Vec::new())?)
        } else {
            None
        };
        let mut premises = Vec::new();
        for (i, p) in rest.iter().enumerate() {
            path.push(i);
            premises.push(self.proof(p, path, spans)?);
            path.pop();
        }
        Ok(Proof::new(conclusion, Inference { tag, principal, witness }, premises))
    }
}

fn parse_signature(s: &Sexp) -> Result<Signature, ParseError> {
    let mut sig = Signature::default();
    for decl in &s.list("a signature")?[1..] {
        let items = decl.list("a symbol declaration")?;
        let [h, name, arity, kind] = items else {
            return err(decl.pos(), ParseErrorKind::Expected("(symbol NAME ARITY pred|fn|const)"));
        };
        if h.atom("symbol")? != "symbol" {
            return err(h.pos(), ParseErrorKind::Expected("symbol"));
        }
        let n = name.atom("a symbol name")?;
        if RESERVED.contains(&n) {
            return err(name.pos(), ParseErrorKind::Reserved(n.to_string()));
        }
        if sig.get(n).is_some() {
            return err(name.pos(), ParseErrorKind::Duplicate(n.to_string()));
        }
        let a: usize =
            arity.atom("an arity")?.parse().map_err(|_| ParseError { pos: arity.pos(), kind: ParseErrorKind::Expected("an arity") })?;
        let kind = match kind.atom("a symbol kind")? {
            "pred" => SymbolKind::Pred,
            "fn" => SymbolKind::Fn,
            "const" if a == 0 => SymbolKind::Const,
            _ => return err(kind.pos(), ParseErrorKind::Expected("pred, fn or const (constants have arity 0)")),
        };
        sig.symbols.push(Symbol { name: n.into(), arity: a, kind });
    }
    Ok(sig)
}

/// Parses a document. `file` is recorded in the provenance of each proof.
pub fn parse(text: &str, file: Option<&str>) -> Result<Document, ParseError> {
    let forms = read_all(text)?;
    let mut forms = forms.iter().peekable();
    let signature = match forms.peek() {
        Some(s) if s.head() == Some("signature") => parse_signature(forms.next().unwrap())?,
        _ => Signature::default(),
    };
    let reader = Reader { sig: &signature };
    let mut items = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for form in forms {
        let list = form.list("a top-level form")?;
        let (kind, name) = match list {
            [k, n, _] => (k.atom("def or proof")?, n.atom("an item name")?),
            _ => return err(form.pos(), ParseErrorKind::Expected("(def NAME F) or (proof NAME P)")),
        };
        if names.iter().any(|n| n == name) {
            return err(list[1].pos(), ParseErrorKind::Duplicate(name.to_string()));
        }
        names.push(name.to_string());
        match kind {
            "def" => items.push(Item::Def { name: name.into(), formula: reader.formula(&list[2], &mut Vec::new())? }),
            "proof" => {
                let mut nodes = BTreeMap::new();
                let proof = reader.proof(&list[2], &mut Vec::new(), &mut nodes)?;
                let provenance = Provenance { file: file.map(str::to_string), nodes };
                items.push(Item::Proof { name: name.into(), proof, provenance });
            }
            _ => return err(list[0].pos(), ParseErrorKind::Expected("def or proof")),
        }
    }
    Ok(Document { signature, items })
}

/// Parses a single closed formula against `sig`.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    match read_all(text)?.as_slice() {
        [s] => Reader { sig }.formula(s, &mut Vec::new()),
        _ => err(Pos { line: 1, col: 1 }, ParseErrorKind::Expected("exactly one formula")),
    }
}

/// Parses a single closed term against `sig`.
pub fn parse_term(text: &str, sig: &Signature) -> Result<Term, ParseError> {
    match read_all(text)?.as_slice() {
        [s] => Reader { sig }.term(s, &mut Vec::new()),
        _ => err(Pos { line: 1, col: 1 }, ParseErrorKind::Expected("exactly one term")),
    }
}

fn write_proof(out: &mut String, p: &Proof, indent: usize) {
    let _ = write!(out, "{:indent$}(rule {} {} {}", "", p.tag(), p.conclusion, p.principal());
    if let Some(w) = &p.inference.witness {
        let _ = write!(out, " {w}");
    }
    for q in &p.premises {
        out.push('\n');
        write_proof(out, q, indent + 2);
    }
    out.push(')');
}

/// Serializes one proof tree in canonical form.
pub fn serialize_proof(p: &Proof) -> String {
    let mut out = String::new();
    write_proof(&mut out, p, 0);
    out
}

/// Canonical text of a document.
pub fn serialize(doc: &Document) -> String {
    let mut out = String::new();
    if !doc.signature.symbols.is_empty() {
        out.push_str("(signature");
        for s in &doc.signature.symbols {
            let _ = write!(out, "\n  (symbol {} {} {})", s.name, s.arity, s.kind);
        }
        out.push_str(")\n");
    }
    for item in &doc.items {
        if !out.is_empty() {
            out.push('\n');
        }
        match item {
            Item::Def { name, formula } => {
                let _ = writeln!(out, "(def {name} {formula})");
            }
            Item::Proof { name, proof, .. } => {
                let _ = writeln!(out, "(proof {name}");
                write_proof(&mut out, proof, 2);
                out.push_str(")\n");
            }
        }
    }
    out
}
