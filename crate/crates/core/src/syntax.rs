//! Terms and formulas over a first-order language extended with Henkin
//! constants, plus the syntactic primitives the proof transformations use.
//!
//! Equality of expressions is syntactic identity. There is no alpha
//! conversion: `∃x P(x)` and `∃y P(y)` are different formulas and index
//! different Henkin constants.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Symbol and variable names.
pub type Name = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("substituted term `{0}` is not closed")]
    OpenTerm(Term),
    #[error("Henkin index `{0}` is not a closed quantifier formula")]
    BadHenkinIndex(Formula),
    #[error("`{0}` is not a Henkin constant")]
    NotHenkin(Term),
}

/// Which quantifier a Henkin constant belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    /// `c_{∃xA}`, a witness for `∃xA`.
    Witness,
    /// `c_{∀xA}`, a counterexample to `∀xA`.
    Counterexample,
}

/// A first-order semiterm. Closed terms contain no `Var`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Name),
    Const(Name),
    /// Henkin constant indexed by a closed `∃xA` or `∀xA`.
    Henkin(Arc<Formula>),
    App(Name, Arc<[Term]>),
}

/// A first-order semiformula. Formulas are closed semiformulas.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Name, Arc<[Term]>),
    Top,
    Bot,
    Not(Arc<Formula>),
    And(Arc<Formula>, Arc<Formula>),
    Or(Arc<Formula>, Arc<Formula>),
    Imp(Arc<Formula>, Arc<Formula>),
    Exists(Name, Arc<Formula>),
    Forall(Name, Arc<Formula>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.into())
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(name.into())
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(name.into(), args.into())
    }

    /// The Henkin constant belonging to `index`, which must be a closed
    /// quantifier formula.
    pub fn henkin(index: Formula) -> Result<Term, SyntaxError> {
        if index.is_quantifier() && index.is_closed() {
            Ok(Term::Henkin(Arc::new(index)))
        } else {
            Err(SyntaxError::BadHenkinIndex(index))
        }
    }

    pub fn is_henkin(&self) -> bool {
        matches!(self, Term::Henkin(_))
    }

    pub fn henkin_index(&self) -> Option<&Formula> {
        match self {
            Term::Henkin(q) => Some(q),
            _ => None,
        }
    }

    pub fn polarity(&self) -> Option<Polarity> {
        match self.henkin_index()? {
            Formula::Exists(..) => Some(Polarity::Witness),
            Formula::Forall(..) => Some(Polarity::Counterexample),
            _ => None,
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) | Term::Henkin(_) => true,
            Term::App(_, args) => args.iter().all(Term::is_closed),
        }
    }

    fn has_free(&self, x: &str) -> bool {
        match self {
            Term::Var(v) => &**v == x,
            Term::Const(_) | Term::Henkin(_) => false,
            Term::App(_, args) => args.iter().any(|a| a.has_free(x)),
        }
    }

    pub(crate) fn free_vars_into(&self, out: &mut Vec<Name>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            Term::Const(_) | Term::Henkin(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.free_vars_into(out)),
        }
    }

    /// Replaces free occurrences of `x` by `t` without closedness checks.
    pub(crate) fn subst(&self, x: &str, t: &Term) -> Term {
        match self {
            Term::Var(v) if &**v == x => t.clone(),
            Term::Var(_) | Term::Const(_) | Term::Henkin(_) => self.clone(),
            Term::App(f, args) => {
                if !self.has_free(x) {
                    return self.clone();
                }
                Term::App(f.clone(), args.iter().map(|a| a.subst(x, t)).collect())
            }
        }
    }

    /// Number of symbols, counting Henkin indices in full.
    pub fn deep_size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 1,
            Term::Henkin(q) => 1 + q.deep_size(),
            Term::App(_, args) => 1 + args.iter().map(Term::deep_size).sum::<usize>(),
        }
    }

    /// Visits every ordinary subterm, outermost first. Henkin indices are
    /// not entered.
    pub fn for_each_subterm<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        if let Term::App(_, args) = self {
            for a in args.iter() {
                a.for_each_subterm(f);
            }
        }
    }
}

impl Formula {
    pub fn atom(pred: &str, args: Vec<Term>) -> Formula {
        Formula::Atom(pred.into(), args.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Arc::new(a))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Arc::new(a), Arc::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Arc::new(a), Arc::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Arc::new(a), Arc::new(b))
    }

    pub fn exists(x: &str, a: Formula) -> Formula {
        Formula::Exists(x.into(), Arc::new(a))
    }

    pub fn forall(x: &str, a: Formula) -> Formula {
        Formula::Forall(x.into(), Arc::new(a))
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Atom(..))
    }

    pub fn is_quantifier(&self) -> bool {
        matches!(self, Formula::Exists(..) | Formula::Forall(..))
    }

    /// Bound variable and matrix of a quantifier formula.
    pub fn quantifier_parts(&self) -> Option<(&Name, &Formula)> {
        match self {
            Formula::Exists(x, a) | Formula::Forall(x, a) => Some((x, a)),
            _ => None,
        }
    }

    /// Depth of the tree representation: 1 for atoms, `⊤` and `⊥`.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(..) | Formula::Top | Formula::Bot => 1,
            Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => a.depth() + 1,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.depth().max(b.depth()) + 1
            }
        }
    }

    pub fn deep_size(&self) -> usize {
        match self {
            Formula::Atom(_, args) => 1 + args.iter().map(Term::deep_size).sum::<usize>(),
            Formula::Top | Formula::Bot => 1,
            Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => 1 + a.deep_size(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                1 + a.deep_size() + b.deep_size()
            }
        }
    }

    pub fn has_free(&self, x: &str) -> bool {
        match self {
            Formula::Atom(_, args) => args.iter().any(|t| t.has_free(x)),
            Formula::Top | Formula::Bot => false,
            Formula::Not(a) => a.has_free(x),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.has_free(x) || b.has_free(x)
            }
            Formula::Exists(y, a) | Formula::Forall(y, a) => &**y != x && a.has_free(x),
        }
    }

    pub fn free_vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.free_vars_into(&mut out, &mut Vec::new());
        out
    }

    fn free_vars_into(&self, out: &mut Vec<Name>, bound: &mut Vec<Name>) {
        match self {
            Formula::Atom(_, args) => {
                let mut vs = Vec::new();
                args.iter().for_each(|t| t.free_vars_into(&mut vs));
                for v in vs {
                    if !bound.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            Formula::Top | Formula::Bot => {}
            Formula::Not(a) => a.free_vars_into(out, bound),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.free_vars_into(out, bound);
                b.free_vars_into(out, bound);
            }
            Formula::Exists(y, a) | Formula::Forall(y, a) => {
                bound.push(y.clone());
                a.free_vars_into(out, bound);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// `A_x[t]` for a closed term `t`.
    pub fn substitute(&self, x: &str, t: &Term) -> Result<Formula, SyntaxError> {
        if !t.is_closed() {
            return Err(SyntaxError::OpenTerm(t.clone()));
        }
        Ok(self.subst(x, t))
    }

    /// Substitution without the closedness check. Callers guarantee that no
    /// variable of `t` is captured.
    pub(crate) fn subst(&self, x: &str, t: &Term) -> Formula {
        if !self.has_free(x) {
            return self.clone();
        }
        match self {
            Formula::Atom(p, args) => {
                Formula::Atom(p.clone(), args.iter().map(|a| a.subst(x, t)).collect())
            }
            Formula::Top | Formula::Bot => self.clone(),
            Formula::Not(a) => Formula::Not(Arc::new(a.subst(x, t))),
            Formula::And(a, b) => Formula::And(Arc::new(a.subst(x, t)), Arc::new(b.subst(x, t))),
            Formula::Or(a, b) => Formula::Or(Arc::new(a.subst(x, t)), Arc::new(b.subst(x, t))),
            Formula::Imp(a, b) => Formula::Imp(Arc::new(a.subst(x, t)), Arc::new(b.subst(x, t))),
            Formula::Exists(y, a) => Formula::Exists(y.clone(), Arc::new(a.subst(x, t))),
            Formula::Forall(y, a) => Formula::Forall(y.clone(), Arc::new(a.subst(x, t))),
        }
    }

    /// For a quantifier formula `QxA`, the instance `A_x[t]`.
    pub fn instantiate(&self, t: &Term) -> Option<Formula> {
        let (x, a) = self.quantifier_parts()?;
        Some(a.subst(x, t))
    }

    /// The Henkin constant belonging to this quantifier formula.
    pub fn henkin_constant(&self) -> Option<Term> {
        Term::henkin(self.clone()).ok()
    }

    /// For a quantifier formula, `A_x[c_{QxA}]`.
    pub fn henkin_instance(&self) -> Option<Formula> {
        let c = self.henkin_constant()?;
        self.instantiate(&c)
    }

    /// Visits every term position (ordinary occurrences, outermost first).
    pub fn for_each_term<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            Formula::Atom(_, args) => args.iter().for_each(|t| t.for_each_subterm(f)),
            Formula::Top | Formula::Bot => {}
            Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => a.for_each_term(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.for_each_term(f);
                b.for_each_term(f);
            }
        }
    }

    /// Maps every maximal term position through `f`.
    pub(crate) fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Formula {
        match self {
            Formula::Atom(p, args) => Formula::Atom(p.clone(), args.iter().map(&mut *f).collect()),
            Formula::Top | Formula::Bot => self.clone(),
            Formula::Not(a) => Formula::Not(Arc::new(a.map_terms(f))),
            Formula::And(a, b) => Formula::And(Arc::new(a.map_terms(f)), Arc::new(b.map_terms(f))),
            Formula::Or(a, b) => Formula::Or(Arc::new(a.map_terms(f)), Arc::new(b.map_terms(f))),
            Formula::Imp(a, b) => Formula::Imp(Arc::new(a.map_terms(f)), Arc::new(b.map_terms(f))),
            Formula::Exists(y, a) => Formula::Exists(y.clone(), Arc::new(a.map_terms(f))),
            Formula::Forall(y, a) => Formula::Forall(y.clone(), Arc::new(a.map_terms(f))),
        }
    }

    /// Immediate subformulas, with quantifier matrices as semiformulas.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(..) | Formula::Top | Formula::Bot => vec![],
            Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => vec![a, b],
        }
    }

    /// Henkin constants with an ordinary occurrence in this formula.
    pub fn henkin_constants(&self) -> Vec<Term> {
        let mut out: Vec<Term> = Vec::new();
        self.for_each_term(&mut |t| {
            if t.is_henkin() && !out.contains(t) {
                out.push(t.clone());
            }
        });
        out
    }
}

/// Rank of a Henkin constant: the least `n` with the constant in `C_n`.
///
/// Computed by `rk(c_{QxA}) = 1 + max{rk(b) : b occurs in QxA}` (max of the
/// empty set is 0).
pub fn henkin_rank(c: &Term) -> Result<usize, SyntaxError> {
    fn go(index: &Formula, memo: &mut HashMap<Formula, usize>) -> usize {
        if let Some(&r) = memo.get(index) {
            return r;
        }
        let mut best = 0;
        for b in index.henkin_constants() {
            if let Term::Henkin(q) = &b {
                best = best.max(go(q, memo));
            }
        }
        memo.insert(index.clone(), best + 1);
        best + 1
    }
    match c {
        Term::Henkin(q) => Ok(go(q, &mut HashMap::new())),
        other => Err(SyntaxError::NotHenkin(other.clone())),
    }
}

/// Expressions supporting deep occurrence and deep replacement of terms.
///
/// A term `r` occurs deeply in `E` if it occurs ordinarily, or occurs
/// deeply in the index of a Henkin constant occurring in `E`. Both Henkin
/// polarities are treated alike.
pub trait Expression: Sized {
    /// Number of deep occurrence sites of `r`.
    fn deep_occurrences(&self, r: &Term) -> usize;

    /// `E{r/s}`: replaces maximal deep occurrences of `r`, outermost
    /// first, without rescanning inserted copies of `s`.
    fn deep_replace(&self, r: &Term, s: &Term) -> Self;

    /// True iff no Henkin constant occurs.
    fn is_pure(&self) -> bool;

    fn deep_occurs(&self, r: &Term) -> bool {
        self.deep_occurrences(r) > 0
    }
}

impl Expression for Term {
    fn deep_occurrences(&self, r: &Term) -> usize {
        if self == r {
            return 1;
        }
        match self {
            Term::Var(_) | Term::Const(_) => 0,
            Term::Henkin(q) => q.deep_occurrences(r),
            Term::App(_, args) => args.iter().map(|a| a.deep_occurrences(r)).sum(),
        }
    }

    fn deep_replace(&self, r: &Term, s: &Term) -> Term {
        if self == r {
            return s.clone();
        }
        match self {
            Term::Var(_) | Term::Const(_) => self.clone(),
            Term::Henkin(q) => Term::Henkin(Arc::new(q.deep_replace(r, s))),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.deep_replace(r, s)).collect())
            }
        }
    }

    fn is_pure(&self) -> bool {
        match self {
            Term::Var(_) | Term::Const(_) => true,
            Term::Henkin(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_pure),
        }
    }
}

impl Expression for Formula {
    fn deep_occurrences(&self, r: &Term) -> usize {
        let mut n = 0;
        self.for_each_top_term(&mut |t| n += t.deep_occurrences(r));
        n
    }

    fn deep_replace(&self, r: &Term, s: &Term) -> Formula {
        if r == s || !self.deep_occurs(r) {
            return self.clone();
        }
        self.map_terms(&mut |t| t.deep_replace(r, s))
    }

    fn is_pure(&self) -> bool {
        let mut pure = true;
        self.for_each_top_term(&mut |t| pure &= t.is_pure());
        pure
    }
}

impl Formula {
    fn for_each_top_term(&self, f: &mut impl FnMut(&Term)) {
        match self {
            Formula::Atom(_, args) => args.iter().for_each(&mut *f),
            Formula::Top | Formula::Bot => {}
            Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => {
                a.for_each_top_term(f)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.for_each_top_term(f);
                b.for_each_top_term(f);
            }
        }
    }
}

/// Holes for pattern matching: variables that may be instantiated by one
/// consistent closed term each.
#[derive(Debug, Default, Clone)]
pub(crate) struct Holes {
    names: Vec<Name>,
    bound: Vec<Option<Term>>,
}

impl Holes {
    pub(crate) fn new(names: &[Name]) -> Holes {
        Holes { names: names.to_vec(), bound: vec![None; names.len()] }
    }

    pub(crate) fn push(&mut self, x: &Name) {
        self.names.push(x.clone());
        self.bound.push(None);
    }

    pub(crate) fn get(&self, x: &str) -> Option<&Term> {
        let i = self.names.iter().position(|n| &**n == x)?;
        self.bound[i].as_ref()
    }

    fn slot(&self, x: &str) -> Option<usize> {
        self.names.iter().rposition(|n| &**n == x)
    }
}

/// Matches semiterm `pat` against closed `t`; free variables of `pat` listed
/// in `holes` are bound consistently, variables in `shadow` match literally.
fn match_term(pat: &Term, t: &Term, holes: &mut Holes, shadow: &[Name]) -> bool {
    match pat {
        Term::Var(x) => {
            if shadow.iter().any(|s| s == x) {
                return pat == t;
            }
            match holes.slot(x) {
                Some(i) => match &holes.bound[i] {
                    Some(b) => b == t,
                    None => {
                        if !t.is_closed() {
                            return false;
                        }
                        holes.bound[i] = Some(t.clone());
                        true
                    }
                },
                None => pat == t,
            }
        }
        Term::Const(_) | Term::Henkin(_) => pat == t,
        Term::App(f, args) => match t {
            Term::App(g, targs) if f == g && args.len() == targs.len() => args
                .iter()
                .zip(targs.iter())
                .all(|(p, u)| match_term(p, u, holes, shadow)),
            _ => false,
        },
    }
}

/// Matches semiformula `pat` against `f`. Binders shadow holes of the same
/// name and must agree literally (no alpha conversion).
pub(crate) fn match_formula(pat: &Formula, f: &Formula, holes: &mut Holes) -> bool {
    fn go(pat: &Formula, f: &Formula, holes: &mut Holes, shadow: &mut Vec<Name>) -> bool {
        match (pat, f) {
            (Formula::Atom(p, pargs), Formula::Atom(q, args)) => {
                p == q
                    && pargs.len() == args.len()
                    && pargs
                        .iter()
                        .zip(args.iter())
                        .all(|(a, b)| match_term(a, b, holes, shadow))
            }
            (Formula::Top, Formula::Top) | (Formula::Bot, Formula::Bot) => true,
            (Formula::Not(a), Formula::Not(b)) => go(a, b, holes, shadow),
            (Formula::And(a1, b1), Formula::And(a2, b2))
            | (Formula::Or(a1, b1), Formula::Or(a2, b2))
            | (Formula::Imp(a1, b1), Formula::Imp(a2, b2)) => {
                go(a1, a2, holes, shadow) && go(b1, b2, holes, shadow)
            }
            (Formula::Exists(x, a), Formula::Exists(y, b))
            | (Formula::Forall(x, a), Formula::Forall(y, b)) => {
                if x != y {
                    return false;
                }
                shadow.push(x.clone());
                let ok = go(a, b, holes, shadow);
                shadow.pop();
                ok
            }
            _ => false,
        }
    }
    go(pat, f, holes, &mut Vec::new())
}

/// For a quantifier formula `QxA`, finds `t` with `A_x[t] ≡ instance`.
/// `Some(None)` means the instance does not depend on `t`.
pub fn match_instance(quantified: &Formula, instance: &Formula) -> Option<Option<Term>> {
    let (x, a) = quantified.quantifier_parts()?;
    let mut holes = Holes::new(std::slice::from_ref(x));
    if match_formula(a, instance, &mut holes) {
        Some(holes.get(x).cloned())
    } else {
        None
    }
}

/// True iff `b` is a subformula of `a` in the sense of Gentzen: reachable by
/// descending through connectives and, at a quantifier `QxC`, passing to
/// any closed instance `C_x[t]`.
pub fn is_gentzen_subformula(b: &Formula, a: &Formula) -> bool {
    fn go(b: &Formula, a: &Formula, holes: &mut Holes) -> bool {
        let mut trial = holes.clone();
        if match_formula(a, b, &mut trial) {
            return true;
        }
        match a {
            Formula::Atom(..) | Formula::Top | Formula::Bot => false,
            Formula::Not(c) => go(b, c, holes),
            Formula::And(c, d) | Formula::Or(c, d) | Formula::Imp(c, d) => {
                go(b, c, holes) || go(b, d, holes)
            }
            Formula::Exists(x, c) | Formula::Forall(x, c) => {
                let mut inner = holes.clone();
                inner.push(x);
                go(b, c, &mut inner)
            }
        }
    }
    go(b, a, &mut Holes::default())
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Term]) -> fmt::Result {
    for a in args {
        write!(f, " {a}")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) | Term::Const(x) => write!(f, "{x}"),
            Term::Henkin(q) => match &**q {
                Formula::Exists(x, a) => write!(f, "(H E {x} {a})"),
                Formula::Forall(x, a) => write!(f, "(H A {x} {a})"),
                _ => unreachable!("Henkin index is a quantifier formula"),
            },
            Term::App(g, args) => {
                write!(f, "({g}")?;
                write_args(f, args)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(p, args) => {
                write!(f, "({p}")?;
                write_args(f, args)?;
                write!(f, ")")
            }
            Formula::Top => write!(f, "true"),
            Formula::Bot => write!(f, "false"),
            Formula::Not(a) => write!(f, "(not {a})"),
            Formula::And(a, b) => write!(f, "(and {a} {b})"),
            Formula::Or(a, b) => write!(f, "(or {a} {b})"),
            Formula::Imp(a, b) => write!(f, "(imp {a} {b})"),
            Formula::Exists(x, a) => write!(f, "(E {x} {a})"),
            Formula::Forall(x, a) => write!(f, "(A {x} {a})"),
        }
    }
}
