//! Sequents, the sixteen rules of LK^h, proof trees and the local checker.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::syntax::{is_gentzen_subformula, match_instance, Expression, Formula, Term};

/// A position in a proof tree: premise indices from the root.
pub type Path = Vec<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "antecedent",
            Side::Right => "succedent",
        })
    }
}

/// `Γ ⇒ Δ` over finite multisets. Both cedents are kept sorted, so
/// structural equality is multiset equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Sequent {
    ante: Vec<Formula>,
    succ: Vec<Formula>,
}

fn remove_one(v: &mut Vec<Formula>, f: &Formula) -> bool {
    match v.binary_search(f) {
        Ok(i) => {
            v.remove(i);
            true
        }
        Err(_) => false,
    }
}

fn insert_sorted(v: &mut Vec<Formula>, f: Formula) {
    let i = v.binary_search(&f).unwrap_or_else(|i| i);
    v.insert(i, f);
}

/// True iff multiset `small` is contained in multiset `big` (both sorted).
fn multiset_le(small: &[Formula], big: &[Formula]) -> bool {
    let mut j = 0;
    for f in small {
        while j < big.len() && &big[j] < f {
            j += 1;
        }
        if j == big.len() || &big[j] != f {
            return false;
        }
        j += 1;
    }
    true
}

/// Multiset difference `big - small`.
fn multiset_minus(big: &[Formula], small: &[Formula]) -> Vec<Formula> {
    let mut out = big.to_vec();
    for f in small {
        remove_one(&mut out, f);
    }
    out
}

impl Sequent {
    pub fn new(mut ante: Vec<Formula>, mut succ: Vec<Formula>) -> Sequent {
        ante.sort();
        succ.sort();
        Sequent { ante, succ }
    }

    pub fn antecedent(&self) -> &[Formula] {
        &self.ante
    }

    pub fn succedent(&self) -> &[Formula] {
        &self.succ
    }

    pub fn cedent(&self, side: Side) -> &[Formula] {
        match side {
            Side::Left => &self.ante,
            Side::Right => &self.succ,
        }
    }

    fn cedent_mut(&mut self, side: Side) -> &mut Vec<Formula> {
        match side {
            Side::Left => &mut self.ante,
            Side::Right => &mut self.succ,
        }
    }

    pub fn contains(&self, side: Side, f: &Formula) -> bool {
        self.cedent(side).binary_search(f).is_ok()
    }

    pub fn count(&self, side: Side, f: &Formula) -> usize {
        self.cedent(side).iter().filter(|g| *g == f).count()
    }

    pub fn with(&self, side: Side, f: Formula) -> Sequent {
        let mut s = self.clone();
        insert_sorted(s.cedent_mut(side), f);
        s
    }

    pub fn with_all(&self, side: Side, fs: impl IntoIterator<Item = Formula>) -> Sequent {
        let mut s = self.clone();
        for f in fs {
            insert_sorted(s.cedent_mut(side), f);
        }
        s
    }

    /// Removes one copy of `f`, if present.
    pub fn without(&self, side: Side, f: &Formula) -> Option<Sequent> {
        let mut s = self.clone();
        remove_one(s.cedent_mut(side), f).then_some(s)
    }

    /// Multiset union.
    pub fn union(&self, other: &Sequent) -> Sequent {
        let mut s = self.clone();
        for f in &other.ante {
            insert_sorted(&mut s.ante, f.clone());
        }
        for f in &other.succ {
            insert_sorted(&mut s.succ, f.clone());
        }
        s
    }

    /// Multiset inclusion of both cedents.
    pub fn is_sub_multiset(&self, other: &Sequent) -> bool {
        multiset_le(&self.ante, &other.ante) && multiset_le(&self.succ, &other.succ)
    }

    /// Every formula of `self` occurs in `other` (set inclusion per cedent).
    pub fn is_supported_by(&self, other: &Sequent) -> bool {
        self.ante.iter().all(|f| other.contains(Side::Left, f))
            && self.succ.iter().all(|f| other.contains(Side::Right, f))
    }

    /// Multiset difference per cedent.
    pub fn minus(&self, other: &Sequent) -> Sequent {
        Sequent { ante: multiset_minus(&self.ante, &other.ante), succ: multiset_minus(&self.succ, &other.succ) }
    }

    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.ante.iter().chain(self.succ.iter())
    }

    pub fn map(&self, mut f: impl FnMut(&Formula) -> Formula) -> Sequent {
        Sequent::new(self.ante.iter().map(&mut f).collect(), self.succ.iter().map(&mut f).collect())
    }

    pub fn is_closed(&self) -> bool {
        self.formulas().all(Formula::is_closed)
    }
}

impl Expression for Sequent {
    fn deep_occurrences(&self, r: &Term) -> usize {
        self.formulas().map(|f| f.deep_occurrences(r)).sum()
    }

    fn deep_replace(&self, r: &Term, s: &Term) -> Sequent {
        self.map(|f| f.deep_replace(r, s))
    }

    fn is_pure(&self) -> bool {
        self.formulas().all(Formula::is_pure)
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut a: Vec<String> = self.ante.iter().map(ToString::to_string).collect();
        let mut s: Vec<String> = self.succ.iter().map(ToString::to_string).collect();
        a.sort();
        s.sort();
        write!(f, "(seq ({}) ({}))", a.join(" "), s.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleTag {
    Ax,
    AxBot,
    AxTop,
    LNot,
    RNot,
    LAnd,
    RAnd,
    LOr,
    ROr,
    LImp,
    RImp,
    LExists,
    RExists,
    LForall,
    RForall,
    Cut,
}

impl RuleTag {
    pub const ALL: [RuleTag; 16] = [
        RuleTag::Ax,
        RuleTag::AxBot,
        RuleTag::AxTop,
        RuleTag::LNot,
        RuleTag::RNot,
        RuleTag::LAnd,
        RuleTag::RAnd,
        RuleTag::LOr,
        RuleTag::ROr,
        RuleTag::LImp,
        RuleTag::RImp,
        RuleTag::LExists,
        RuleTag::RExists,
        RuleTag::LForall,
        RuleTag::RForall,
        RuleTag::Cut,
    ];

    pub fn arity(self) -> usize {
        match self {
            RuleTag::Ax | RuleTag::AxBot | RuleTag::AxTop => 0,
            RuleTag::RAnd | RuleTag::LOr | RuleTag::LImp | RuleTag::Cut => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleTag::Ax => "Ax",
            RuleTag::AxBot => "AxBot",
            RuleTag::AxTop => "AxTop",
            RuleTag::LNot => "LNot",
            RuleTag::RNot => "RNot",
            RuleTag::LAnd => "LAnd",
            RuleTag::RAnd => "RAnd",
            RuleTag::LOr => "LOr",
            RuleTag::ROr => "ROr",
            RuleTag::LImp => "LImp",
            RuleTag::RImp => "RImp",
            RuleTag::LExists => "LExists",
            RuleTag::RExists => "RExists",
            RuleTag::LForall => "LForall",
            RuleTag::RForall => "RForall",
            RuleTag::Cut => "Cut",
        }
    }

    /// Side of the conclusion holding the principal formula. Axioms and
    /// cuts have none.
    pub fn side(self) -> Option<Side> {
        match self {
            RuleTag::LNot | RuleTag::LAnd | RuleTag::LOr | RuleTag::LImp | RuleTag::LExists | RuleTag::LForall => {
                Some(Side::Left)
            }
            RuleTag::RNot | RuleTag::RAnd | RuleTag::ROr | RuleTag::RImp | RuleTag::RExists | RuleTag::RForall => {
                Some(Side::Right)
            }
            _ => None,
        }
    }

    pub fn is_axiom(self) -> bool {
        self.arity() == 0
    }

    pub fn needs_witness(self) -> bool {
        matches!(self, RuleTag::RExists | RuleTag::LForall)
    }

    pub fn is_strong(self) -> bool {
        matches!(self, RuleTag::LExists | RuleTag::RForall)
    }

    pub fn is_weak(self) -> bool {
        self.needs_witness()
    }

    /// The rule introducing `f` on `side`, if any.
    pub fn introducing(side: Side, f: &Formula) -> Option<RuleTag> {
        use Formula::*;
        Some(match (side, f) {
            (Side::Left, Not(_)) => RuleTag::LNot,
            (Side::Right, Not(_)) => RuleTag::RNot,
            (Side::Left, And(..)) => RuleTag::LAnd,
            (Side::Right, And(..)) => RuleTag::RAnd,
            (Side::Left, Or(..)) => RuleTag::LOr,
            (Side::Right, Or(..)) => RuleTag::ROr,
            (Side::Left, Imp(..)) => RuleTag::LImp,
            (Side::Right, Imp(..)) => RuleTag::RImp,
            (Side::Left, Exists(..)) => RuleTag::LExists,
            (Side::Right, Exists(..)) => RuleTag::RExists,
            (Side::Left, Forall(..)) => RuleTag::LForall,
            (Side::Right, Forall(..)) => RuleTag::RForall,
            _ => return None,
        })
    }
}

impl fmt::Display for RuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown rule tag `{0}`")]
pub struct UnknownTag(pub String);

impl FromStr for RuleTag {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<RuleTag, UnknownTag> {
        RuleTag::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| UnknownTag(s.to_string()))
    }
}

/// Rule tag plus payload. For `Cut` the principal is the cut formula; for
/// `AxBot` and `AxTop` it is `⊥` and `⊤`; for `Ax` the atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Inference {
    pub tag: RuleTag,
    pub principal: Formula,
    pub witness: Option<Term>,
}

impl Inference {
    pub fn new(tag: RuleTag, principal: Formula) -> Inference {
        Inference { tag, principal, witness: None }
    }

    pub fn with_witness(tag: RuleTag, principal: Formula, witness: Term) -> Inference {
        Inference { tag, principal, witness: Some(witness) }
    }

    /// The minor formulas of each premise, grouped by side.
    pub fn minors(&self) -> Result<Vec<Vec<(Side, Formula)>>, RuleError> {
        use Formula::*;
        let p = &self.principal;
        let shape = || RuleError::PrincipalShape { tag: self.tag, principal: p.clone() };
        let l = |f: &Formula| (Side::Left, f.clone());
        let r = |f: &Formula| (Side::Right, f.clone());
        Ok(match (self.tag, p) {
            (RuleTag::Ax | RuleTag::AxBot | RuleTag::AxTop, _) => vec![],
            (RuleTag::LNot, Not(a)) => vec![vec![r(a)]],
            (RuleTag::RNot, Not(a)) => vec![vec![l(a)]],
            (RuleTag::LAnd, And(a, b)) => vec![vec![l(a), l(b)]],
            (RuleTag::RAnd, And(a, b)) => vec![vec![r(a)], vec![r(b)]],
            (RuleTag::LOr, Or(a, b)) => vec![vec![l(a)], vec![l(b)]],
            (RuleTag::ROr, Or(a, b)) => vec![vec![r(a), r(b)]],
            (RuleTag::LImp, Imp(a, b)) => vec![vec![r(a)], vec![l(b)]],
            (RuleTag::RImp, Imp(a, b)) => vec![vec![l(a), r(b)]],
            (RuleTag::LExists, Exists(..)) => vec![vec![(Side::Left, p.henkin_instance().ok_or_else(shape)?)]],
            (RuleTag::RForall, Forall(..)) => vec![vec![(Side::Right, p.henkin_instance().ok_or_else(shape)?)]],
            (RuleTag::RExists, Exists(..)) | (RuleTag::LForall, Forall(..)) => {
                let t = self.witness.as_ref().ok_or(RuleError::MissingWitness(self.tag))?;
                let side = self.tag.side().expect("weak rules have a side");
                vec![vec![(side, p.clone()), (side, p.instantiate(t).ok_or_else(shape)?)]]
            }
            (RuleTag::Cut, _) => vec![vec![r(p)], vec![l(p)]],
            _ => return Err(shape()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("{tag} expects {expected} premise(s), found {found}")]
    ArityMismatch { tag: RuleTag, expected: usize, found: usize },
    #[error("{tag} cannot have principal formula `{principal}`")]
    PrincipalShape { tag: RuleTag, principal: Formula },
    #[error("principal formula `{formula}` missing from the {side} of the conclusion")]
    PrincipalMissing { side: Side, formula: Formula },
    #[error("axiom formula `{0}` is not atomic")]
    NonAtomicAxiom(Formula),
    #[error("expected Henkin constant `{expected}`, found `{found}`")]
    WrongHenkinConstant { expected: Term, found: Term },
    #[error("premise {premise} does not match the rule schema in its {slot}")]
    SchemaMismatch { premise: usize, slot: Side },
    #[error("premise {premise} has a context different from the conclusion")]
    ContextMismatch { premise: usize },
    #[error("{0} requires a witness term")]
    MissingWitness(RuleTag),
    #[error("{0} takes no witness term")]
    UnexpectedWitness(RuleTag),
    #[error("witness `{0}` is not closed")]
    OpenWitness(Term),
    #[error("formula `{0}` in the conclusion is not closed")]
    OpenFormula(Formula),
}

/// A proof tree with explicit conclusions at every node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Proof {
    pub conclusion: Sequent,
    pub inference: Inference,
    pub premises: Vec<Proof>,
}

/// Length, height and cut-rank of a proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProofStats {
    pub length: usize,
    pub height: usize,
    pub cut_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at node {path:?}: {error}")]
pub struct CheckError {
    pub path: Path,
    pub error: RuleError,
}

/// Premise sequents demanded by `inf` for `conclusion`.
fn expected_premises(conclusion: &Sequent, inf: &Inference) -> Result<Vec<Sequent>, RuleError> {
    if inf.tag.needs_witness() {
        match &inf.witness {
            None => return Err(RuleError::MissingWitness(inf.tag)),
            Some(t) if !t.is_closed() => return Err(RuleError::OpenWitness(t.clone())),
            _ => {}
        }
    } else if inf.witness.is_some() {
        return Err(RuleError::UnexpectedWitness(inf.tag));
    }
    let p = &inf.principal;
    match inf.tag {
        RuleTag::Ax => {
            if !p.is_atomic() {
                return Err(RuleError::NonAtomicAxiom(p.clone()));
            }
            for side in [Side::Left, Side::Right] {
                if !conclusion.contains(side, p) {
                    return Err(RuleError::PrincipalMissing { side, formula: p.clone() });
                }
            }
            return Ok(vec![]);
        }
        RuleTag::AxBot | RuleTag::AxTop => {
            let (want, side) = if inf.tag == RuleTag::AxBot { (Formula::Bot, Side::Left) } else { (Formula::Top, Side::Right) };
            if *p != want {
                return Err(RuleError::PrincipalShape { tag: inf.tag, principal: p.clone() });
            }
            if !conclusion.contains(side, p) {
                return Err(RuleError::PrincipalMissing { side, formula: p.clone() });
            }
            return Ok(vec![]);
        }
        _ => {}
    }
    let minors = inf.minors()?;
    let context = match inf.tag.side() {
        Some(side) => conclusion
            .without(side, p)
            .ok_or_else(|| RuleError::PrincipalMissing { side, formula: p.clone() })?,
        None => conclusion.clone(),
    };
    Ok(minors
        .into_iter()
        .map(|ms| {
            let mut s = context.clone();
            for (side, f) in ms {
                s = s.with(side, f);
            }
            s
        })
        .collect())
}

/// Explains why `actual` differs from `expected` for premise `i`.
fn diagnose(conclusion: &Sequent, inf: &Inference, i: usize, expected: &Sequent, actual: &Sequent) -> RuleError {
    if inf.tag.is_strong() {
        let side = inf.tag.side().expect("strong rules have a side");
        if let Some(ctx) = conclusion.without(side, &inf.principal) {
            let extra = actual.minus(&ctx);
            let other = match side {
                Side::Left => Side::Right,
                Side::Right => Side::Left,
            };
            if extra.cedent(other).is_empty() && extra.cedent(side).len() == 1 && ctx.is_sub_multiset(actual) {
                if let Some(Some(found)) = match_instance(&inf.principal, &extra.cedent(side)[0]) {
                    let expected = inf.principal.henkin_constant().expect("quantifier");
                    if found != expected {
                        return RuleError::WrongHenkinConstant { expected, found };
                    }
                }
            }
        }
    }
    let minors = inf.minors().ok().and_then(|m| m.into_iter().nth(i)).unwrap_or_default();
    let minors_present = minors.iter().all(|(side, f)| actual.contains(*side, f));
    if minors_present && (inf.tag.arity() == 2) {
        return RuleError::ContextMismatch { premise: i };
    }
    let slot = if expected.antecedent() != actual.antecedent() { Side::Left } else { Side::Right };
    RuleError::SchemaMismatch { premise: i, slot }
}

/// Checks a single inference against the premise conclusions.
pub fn check_rule(node: &Proof) -> Result<(), RuleError> {
    check_inference(&node.conclusion, &node.inference, node.premises.iter().map(|p| &p.conclusion))
}

/// Local validity of an inference given only its sequents.
pub fn check_inference<'a>(
    conclusion: &Sequent,
    inf: &Inference,
    premises: impl ExactSizeIterator<Item = &'a Sequent>,
) -> Result<(), RuleError> {
    if premises.len() != inf.tag.arity() {
        return Err(RuleError::ArityMismatch { tag: inf.tag, expected: inf.tag.arity(), found: premises.len() });
    }
    if let Some(f) = conclusion.formulas().find(|f| !f.is_closed()) {
        return Err(RuleError::OpenFormula(f.clone()));
    }
    let expected = expected_premises(conclusion, inf)?;
    for (i, (want, got)) in expected.iter().zip(premises).enumerate() {
        if want != got {
            return Err(diagnose(conclusion, inf, i, want, got));
        }
    }
    Ok(())
}

/// Checks every node, premises before their conclusion, left to right.
pub fn check_proof(root: &Proof) -> Result<ProofStats, CheckError> {
    fn go(p: &Proof, path: &mut Path) -> Result<(), CheckError> {
        for (i, q) in p.premises.iter().enumerate() {
            path.push(i);
            go(q, path)?;
            path.pop();
        }
        check_rule(p).map_err(|error| CheckError { path: path.clone(), error })
    }
    go(root, &mut Vec::new())?;
    Ok(root.stats())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at node {path:?}: `{formula}` is not a subformula of the endsequent")]
pub struct SubformulaViolation {
    pub path: Path,
    pub formula: Formula,
}

/// Verifies that every formula in the proof is a Gentzen subformula of
/// some endsequent formula. Nodes are visited root first.
pub fn subformula_property(root: &Proof) -> Result<(), SubformulaViolation> {
    let end: Vec<&Formula> = root.conclusion.formulas().collect();
    let mut good: HashSet<Formula> = HashSet::new();
    let mut err = None;
    root.visit(&mut |path, node| {
        if err.is_some() {
            return;
        }
        for f in node.conclusion.formulas() {
            if good.contains(f) {
                continue;
            }
            if end.iter().any(|e| is_gentzen_subformula(f, e)) {
                good.insert(f.clone());
            } else {
                err = Some(SubformulaViolation { path: path.to_vec(), formula: f.clone() });
                return;
            }
        }
    });
    err.map_or(Ok(()), Err)
}

impl Proof {
    pub fn new(conclusion: Sequent, inference: Inference, premises: Vec<Proof>) -> Proof {
        Proof { conclusion, inference, premises }
    }

    /// Builds a node whose conclusion is computed from the premises, and
    /// checks it.
    pub fn infer(tag: RuleTag, principal: Formula, witness: Option<Term>, premises: Vec<Proof>) -> Result<Proof, RuleError> {
        let inference = Inference { tag, principal, witness };
        if premises.len() != tag.arity() || tag.is_axiom() {
            return Err(RuleError::ArityMismatch { tag, expected: tag.arity(), found: premises.len() });
        }
        let minors = inference.minors()?;
        let first = &premises[0].conclusion;
        let mut ctx = first.clone();
        for (side, f) in &minors[0] {
            ctx = ctx.without(*side, f).ok_or(RuleError::SchemaMismatch { premise: 0, slot: *side })?;
        }
        let conclusion = match tag.side() {
            Some(side) => ctx.with(side, inference.principal.clone()),
            None => ctx,
        };
        let node = Proof { conclusion, inference, premises };
        check_rule(&node)?;
        Ok(node)
    }

    /// An axiom node with the given conclusion.
    pub fn axiom(tag: RuleTag, principal: Formula, conclusion: Sequent) -> Result<Proof, RuleError> {
        let node = Proof { conclusion, inference: Inference::new(tag, principal), premises: vec![] };
        check_rule(&node)?;
        Ok(node)
    }

    pub fn tag(&self) -> RuleTag {
        self.inference.tag
    }

    pub fn principal(&self) -> &Formula {
        &self.inference.principal
    }

    pub fn length(&self) -> usize {
        1 + self.premises.iter().map(Proof::length).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.premises.iter().map(Proof::height).max().unwrap_or(0)
    }

    pub fn cut_rank(&self) -> usize {
        let own = if self.tag() == RuleTag::Cut { self.principal().depth() } else { 0 };
        self.premises.iter().map(Proof::cut_rank).fold(own, usize::max)
    }

    pub fn stats(&self) -> ProofStats {
        ProofStats { length: self.length(), height: self.height(), cut_rank: self.cut_rank() }
    }

    pub fn is_cut_free(&self) -> bool {
        self.tag() != RuleTag::Cut && self.premises.iter().all(Proof::is_cut_free)
    }

    /// Cut formulas, one entry per cut node, in preorder.
    pub fn cut_formulas(&self) -> Vec<Formula> {
        let mut out = Vec::new();
        self.visit(&mut |_, n| {
            if n.tag() == RuleTag::Cut {
                out.push(n.principal().clone());
            }
        });
        out
    }

    /// Preorder traversal with paths.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&[usize], &'a Proof)) {
        fn go<'a>(p: &'a Proof, path: &mut Path, f: &mut impl FnMut(&[usize], &'a Proof)) {
            f(path, p);
            for (i, q) in p.premises.iter().enumerate() {
                path.push(i);
                go(q, path, f);
                path.pop();
            }
        }
        go(self, &mut Vec::new(), f)
    }

    pub fn at(&self, path: &[usize]) -> Option<&Proof> {
        let mut p = self;
        for &i in path {
            p = p.premises.get(i)?;
        }
        Some(p)
    }

    /// Every formula occurring anywhere in the proof, including payloads.
    pub fn all_formulas(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        self.visit(&mut |_, n| {
            out.extend(n.conclusion.formulas());
            out.push(n.principal());
        });
        out
    }
}
