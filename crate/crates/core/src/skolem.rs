//! One-step Skolemization in both polarities and the elimination of a
//! Skolem function from proofs that are free for it.
//!
//! Witness polarity turns `∀x⃗∃yA` into `∀x⃗A[x⃗, f(x⃗)]`, counterexample
//! polarity turns `∃x⃗∀yA` into `∃x⃗A[x⃗, g(x⃗)]`. The elimination walks the
//! proof once, tracking the special partial instances of the Skolemized
//! formula, and rewrites every critical weak quantifier step into a strong
//! step on the original formula followed by a weak step.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bounds::{monus, superexp_bound, Bound};
use crate::calculus::{check_proof, CheckError, Inference, Path, Proof, RuleError, RuleTag, Sequent, Side};
use crate::cutelim::{reduce_step, CutElimError};
use crate::syntax::{match_formula, Expression, Formula, Holes, Name, Polarity, Term};
use crate::transform::{invert, replace_in_proof, weaken, InversionTarget, TransformError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkolemError {
    #[error("function symbol `{0}` already occurs in the formula")]
    SymbolClash(Name),
    #[error("variable `{0}` is listed twice in the prefix")]
    RepeatedVariable(Name),
    #[error("variable `{0}` is bound inside the matrix and would capture")]
    VariableCapture(Name),
    #[error("variable `{0}` is free in the matrix but not in the prefix")]
    OpenMatrix(Name),
    #[error("`{0}` does not have the quantifier prefix required by the polarity")]
    SourceShape(Formula),
    #[error("elimination needs at least one prefix variable")]
    EmptyPrefix,
    #[error("{0}")]
    NotFree(NotFree),
    #[error("endsequent `{0}` does not have the form required by the theorem")]
    EndsequentShapeMismatch(Sequent),
    #[error("Skolem term `{0}` does not map to its Henkin constant")]
    IncoherentReplacement(Term),
    #[error("the construction broke its postcondition: {0}")]
    Postcondition(&'static str),
    #[error("final cut-rank {found} exceeds {limit}")]
    CutRankRegression { found: usize, limit: usize },
    #[error("length {measured} exceeds the bound {limit:?}")]
    BoundExceeded { measured: usize, limit: Bound },
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    CutElim(#[from] CutElimError),
}

/// Why a proof is not free for the Skolem function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotFreeReason {
    /// A strong quantifier rule whose matrix has a Skolem semiterm in the
    /// bound variable.
    StrongRule,
    /// A weak rule on the wrong side or on a formula of the wrong shape.
    Shape,
    /// The principal formula has the right shape but does not descend from
    /// the Skolemized formula of the endsequent.
    Untraced,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("inference at {path:?} is not invariant under replacement of Skolem terms ({reason:?})")]
pub struct NotFree {
    pub path: Path,
    pub reason: NotFreeReason,
}

/// A one-step Skolemization: the prefix `x₁..x_k`, the variable `y`, the
/// matrix `A` and the fresh function symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkolemizationSpec {
    pub polarity: Polarity,
    pub prefix: Vec<Name>,
    pub y: Name,
    pub matrix: Formula,
    pub function: Name,
}

/// One critical inference with its full term vector `s⃗`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalInference {
    pub path: Path,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalInferenceReport {
    pub critical: Vec<CriticalInference>,
    /// Distinct term vectors, containing terms before contained ones.
    pub ordering: Vec<Vec<Term>>,
}

impl CriticalInferenceReport {
    pub fn n(&self) -> usize {
        self.critical.len()
    }
}

fn bound_vars(f: &Formula, out: &mut Vec<Name>) {
    if let Some((x, _)) = f.quantifier_parts() {
        out.push(x.clone());
    }
    for c in f.children() {
        bound_vars(c, out);
    }
}

/// Every deep subterm of `t` headed by `g`, outermost first.
fn collect_fn_terms(t: &Term, g: &str, out: &mut Vec<Term>) {
    t.for_each_subterm(&mut |u| match u {
        Term::App(h, _) if &**h == g => out.push(u.clone()),
        Term::Const(h) if &**h == g => out.push(u.clone()),
        Term::Henkin(q) => formula_fn_terms(q, g, out),
        _ => {}
    });
}

fn formula_fn_terms(f: &Formula, g: &str, out: &mut Vec<Term>) {
    f.for_each_term(&mut |t| {
        if let Term::Henkin(q) = t {
            formula_fn_terms(q, g, out);
        } else if matches!(t, Term::App(h, _) | Term::Const(h) if &**h == g) {
            out.push(t.clone());
        }
    });
}

/// Whether the function symbol `g` occurs anywhere in `f`, Henkin indices
/// included.
pub fn mentions_function(f: &Formula, g: &str) -> bool {
    let mut out = Vec::new();
    formula_fn_terms(f, g, &mut out);
    !out.is_empty()
}

fn proof_fn_terms(pi: &Proof, g: &str) -> Vec<Term> {
    let mut out = Vec::new();
    pi.visit(&mut |_, n| {
        for f in n.conclusion.formulas() {
            formula_fn_terms(f, g, &mut out);
        }
        if let Some(w) = &n.inference.witness {
            collect_fn_terms(w, g, &mut out);
        }
    });
    out.sort();
    out.dedup();
    out
}

/// Whether `g` occurs anywhere in the proof.
pub fn proof_mentions_function(pi: &Proof, g: &str) -> bool {
    !proof_fn_terms(pi, g).is_empty()
}

impl SkolemizationSpec {
    pub fn new(
        polarity: Polarity,
        prefix: Vec<Name>,
        y: Name,
        matrix: Formula,
        function: Name,
    ) -> Result<SkolemizationSpec, SkolemError> {
        for (i, x) in prefix.iter().enumerate() {
            if prefix[..i].contains(x) || *x == y {
                return Err(SkolemError::RepeatedVariable(x.clone()));
            }
        }
        let mut bound = Vec::new();
        bound_vars(&matrix, &mut bound);
        if let Some(x) = bound.iter().find(|b| prefix.contains(b)) {
            return Err(SkolemError::VariableCapture(x.clone()));
        }
        if let Some(v) = matrix.free_vars().into_iter().find(|v| !prefix.contains(v) && *v != y) {
            return Err(SkolemError::OpenMatrix(v));
        }
        if mentions_function(&matrix, &function) {
            return Err(SkolemError::SymbolClash(function));
        }
        Ok(SkolemizationSpec { polarity, prefix, y, matrix, function })
    }

    /// Reads the prefix off a source formula `∀x⃗∃yA` (witness) or `∃x⃗∀yA`
    /// (counterexample).
    pub fn infer(source: &Formula, function: &str, polarity: Polarity) -> Result<SkolemizationSpec, SkolemError> {
        let mut prefix = Vec::new();
        let mut cur = source;
        loop {
            match (polarity, cur) {
                (Polarity::Witness, Formula::Forall(x, a)) | (Polarity::Counterexample, Formula::Exists(x, a)) => {
                    prefix.push(x.clone());
                    cur = a;
                }
                (Polarity::Witness, Formula::Exists(y, a)) | (Polarity::Counterexample, Formula::Forall(y, a)) => {
                    return SkolemizationSpec::new(polarity, prefix, y.clone(), (**a).clone(), function.into());
                }
                _ => return Err(SkolemError::SourceShape(source.clone())),
            }
        }
    }

    /// Recovers the specification from a Skolemized formula
    /// `∀x⃗A[x⃗,f(x⃗)]` (witness) or `∃x⃗A[x⃗,g(x⃗)]` (counterexample): the prefix
    /// is as long as the arity of the function's occurrence.
    pub fn from_skolemized(
        skolemized: &Formula,
        function: &str,
        polarity: Polarity,
    ) -> Result<SkolemizationSpec, SkolemError> {
        let shape = || SkolemError::SourceShape(skolemized.clone());
        let mut found = Vec::new();
        formula_fn_terms(skolemized, function, &mut found);
        let k = match found.first() {
            Some(Term::App(_, args)) => args.len(),
            _ => return Err(shape()),
        };
        let mut prefix = Vec::new();
        let mut body = skolemized;
        for _ in 0..k {
            match (polarity, body) {
                (Polarity::Witness, Formula::Forall(x, a)) | (Polarity::Counterexample, Formula::Exists(x, a)) => {
                    prefix.push(x.clone());
                    body = a;
                }
                _ => return Err(shape()),
            }
        }
        let target = Term::app(function, prefix.iter().map(|x| Term::var(x)).collect());
        let mut taken = Vec::new();
        bound_vars(skolemized, &mut taken);
        let y: Name = std::iter::once("y".to_string())
            .chain((1..).map(|i| format!("y{i}")))
            .find(|y| !taken.iter().any(|b| **b == **y))
            .expect("unbounded supply")
            .into();
        fn abstract_term(t: &Term, target: &Term, y: &Name) -> Term {
            match t {
                _ if t == target => Term::Var(y.clone()),
                Term::App(g, args) => Term::App(g.clone(), args.iter().map(|a| abstract_term(a, target, y)).collect()),
                _ => t.clone(),
            }
        }
        let matrix = body.map_terms(&mut |t| abstract_term(t, &target, &y));
        let spec = SkolemizationSpec::new(polarity, prefix, y, matrix, function.into()).map_err(|_| shape())?;
        if spec.skolemize() != *skolemized {
            return Err(shape());
        }
        Ok(spec)
    }

    pub fn arity(&self) -> usize {
        self.prefix.len()
    }

    fn outer(&self, x: &str, a: Formula) -> Formula {
        match self.polarity {
            Polarity::Witness => Formula::forall(x, a),
            Polarity::Counterexample => Formula::exists(x, a),
        }
    }

    fn inner(&self, a: Formula) -> Formula {
        match self.polarity {
            Polarity::Witness => Formula::exists(&self.y, a),
            Polarity::Counterexample => Formula::forall(&self.y, a),
        }
    }

    /// The side on which the Skolemized formula sits in the theorems.
    pub fn side(&self) -> Side {
        match self.polarity {
            Polarity::Witness => Side::Left,
            Polarity::Counterexample => Side::Right,
        }
    }

    fn weak_tag(&self) -> RuleTag {
        match self.polarity {
            Polarity::Witness => RuleTag::LForall,
            Polarity::Counterexample => RuleTag::RExists,
        }
    }

    fn strong_tag(&self) -> RuleTag {
        match self.polarity {
            Polarity::Witness => RuleTag::LExists,
            Polarity::Counterexample => RuleTag::RForall,
        }
    }

    /// `f(args)`; a constant when the prefix is empty.
    pub fn skolem_term(&self, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::constant(&self.function)
        } else {
            Term::app(&self.function, args)
        }
    }

    fn args(&self, s: &[Term]) -> Vec<Term> {
        let mut args = s.to_vec();
        args.extend(self.prefix[s.len()..].iter().map(|x| Term::var(x)));
        args
    }

    fn body(&self, s: &[Term]) -> Formula {
        self.prefix.iter().zip(s).fold(self.matrix.clone(), |a, (x, t)| a.subst(x, t))
    }

    fn close(&self, j: usize, a: Formula) -> Formula {
        self.prefix[j..].iter().rev().fold(a, |a, x| self.outer(x, a))
    }

    /// The partial instance of the Skolemized formula after instantiating
    /// the first `s.len()` prefix variables by `s`.
    pub fn skolem_partial(&self, s: &[Term]) -> Formula {
        let fx = self.skolem_term(self.args(s));
        self.close(s.len(), self.body(s).subst(&self.y, &fx))
    }

    /// The matching partial instance of the source formula.
    pub fn source_partial(&self, s: &[Term]) -> Formula {
        self.close(s.len(), self.inner(self.body(s)))
    }

    pub fn source(&self) -> Formula {
        self.source_partial(&[])
    }

    /// The one-step Skolemization of the source formula.
    pub fn skolemize(&self) -> Formula {
        self.skolem_partial(&[])
    }

    /// `c_{∃yA[s⃗,y]}` (witness) or `c_{∀yA[s⃗,y]}` (counterexample) for a full
    /// term vector.
    pub fn henkin_for(&self, s: &[Term]) -> Term {
        self.source_partial(s).henkin_constant().expect("closed quantifier formula")
    }

    /// If `f` is a partial instance of the Skolemized formula with fewer
    /// than `k` variables instantiated, the instantiating terms.
    pub fn match_partial(&self, f: &Formula) -> Option<Vec<Term>> {
        (0..self.arity()).find_map(|j| {
            let vars: Vec<Term> = self.prefix[..j].iter().map(|x| Term::var(x)).collect();
            let pattern = self.skolem_partial(&vars);
            let mut holes = Holes::new(&self.prefix[..j]);
            if !match_formula(&pattern, f, &mut holes) {
                return None;
            }
            self.prefix[..j].iter().map(|x| holes.get(x).cloned()).collect()
        })
    }

    fn is_skolem_term(&self, t: &Term) -> bool {
        matches!(t, Term::App(g, _) | Term::Const(g) if *g == self.function)
    }

    /// Whether the quantifier inference at `node` can be non-invariant under
    /// deep replacement of Skolem terms: its matrix has a Skolem semiterm
    /// whose only free variable is the bound one.
    pub fn is_critical_candidate(&self, node: &Proof) -> bool {
        let tag = node.tag();
        if !(tag.is_weak() || tag.is_strong()) {
            return false;
        }
        let Some((x, a)) = node.principal().quantifier_parts() else { return false };
        let mut hit = false;
        a.for_each_term(&mut |t| {
            if !hit && self.is_skolem_term(t) {
                let mut vs = Vec::new();
                t.free_vars_into(&mut vs);
                hit = vs.len() == 1 && vs[0] == *x;
            }
        });
        hit
    }
}

type Tracked = BTreeMap<Formula, usize>;

fn initial_tracking(spec: &SkolemizationSpec, s: &Sequent) -> Tracked {
    let mut tracked = Tracked::new();
    for f in s.cedent(spec.side()) {
        if spec.match_partial(f).is_some() {
            *tracked.entry(f.clone()).or_default() += 1;
        }
    }
    tracked
}

fn is_tracked(tracked: &Tracked, f: &Formula) -> bool {
    tracked.get(f).is_some_and(|&n| n > 0)
}

/// Number of quantifier inferences that can be non-invariant under deep
/// replacement of Skolem terms of `spec`.
pub fn count_critical(pi: &Proof, spec: &SkolemizationSpec) -> usize {
    let mut n = 0;
    pi.visit(&mut |_, node| n += spec.is_critical_candidate(node) as usize);
    n
}

/// Finds every critical inference and checks that each one is a weak step
/// on a traced special partial instance with all but one prefix variable
/// instantiated.
pub fn analyze_freeness(pi: &Proof, spec: &SkolemizationSpec) -> Result<CriticalInferenceReport, NotFree> {
    fn go(
        node: &Proof,
        spec: &SkolemizationSpec,
        tracked: &Tracked,
        path: &mut Path,
        out: &mut Vec<CriticalInference>,
    ) -> Result<(), NotFree> {
        let k = spec.arity();
        let traced = node.tag() == spec.weak_tag() && is_tracked(tracked, node.principal());
        let prefix = if traced { spec.match_partial(node.principal()) } else { None };
        let mut next = tracked.clone();
        if spec.is_critical_candidate(node) {
            let reason = if node.tag().is_strong() {
                Some(NotFreeReason::StrongRule)
            } else if node.tag() != spec.weak_tag() {
                Some(NotFreeReason::Shape)
            } else if !traced {
                Some(NotFreeReason::Untraced)
            } else if prefix.as_ref().map(Vec::len) != Some(k - 1) {
                Some(NotFreeReason::Shape)
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(NotFree { path: path.clone(), reason });
            }
            let mut terms = prefix.unwrap();
            terms.push(node.inference.witness.clone().expect("weak rule"));
            out.push(CriticalInference { path: path.clone(), terms });
        } else if let Some(s) = prefix {
            debug_assert!(s.len() + 1 < k);
            let minor = node.principal().instantiate(node.inference.witness.as_ref().expect("weak rule"));
            *next.entry(minor.expect("quantifier")).or_default() += 1;
        }
        for (i, p) in node.premises.iter().enumerate() {
            path.push(i);
            go(p, spec, &next, path, out)?;
            path.pop();
        }
        Ok(())
    }
    let mut critical = Vec::new();
    go(pi, spec, &initial_tracking(spec, &pi.conclusion), &mut Vec::new(), &mut critical)?;
    let mut ordering: Vec<Vec<Term>> = critical.iter().map(|c| c.terms.clone()).collect();
    ordering.sort_by_cached_key(|s| {
        let t = spec.skolem_term(s.clone());
        (std::cmp::Reverse(t.deep_size()), t.to_string())
    });
    ordering.dedup();
    Ok(CriticalInferenceReport { critical, ordering })
}

/// The composite replacement `θ = {f(s⃗₁)/a₁}···{f(s⃗_n)/a_n}`.
struct Theta(Vec<(Term, Term)>);

impl Theta {
    fn term(&self, t: &Term) -> Term {
        self.0.iter().fold(t.clone(), |t, (r, s)| t.deep_replace(r, s))
    }

    fn formula(&self, f: &Formula) -> Formula {
        self.0.iter().fold(f.clone(), |f, (r, s)| f.deep_replace(r, s))
    }

    fn inference(&self, inf: &Inference) -> Inference {
        Inference {
            tag: inf.tag,
            principal: self.formula(&inf.principal),
            witness: inf.witness.as_ref().map(|t| self.term(t)),
        }
    }
}

struct Eliminator<'a> {
    spec: &'a SkolemizationSpec,
    theta: Theta,
}

impl Eliminator<'_> {
    /// The source-side image of a tracked special partial instance.
    fn omega(&self, f: &Formula) -> Formula {
        let s = self.spec.match_partial(f).expect("tracked formulas are partial instances");
        let s: Vec<Term> = s.iter().map(|t| self.theta.term(t)).collect();
        self.spec.source_partial(&s)
    }

    fn image(&self, s: &Sequent, tracked: &Tracked) -> Sequent {
        let side = self.spec.side();
        let mut left = Tracked::new();
        let map_cedent = |fs: &[Formula], tracked_side: bool, left: &mut Tracked| -> Vec<Formula> {
            fs.iter()
                .map(|f| {
                    let used = left.entry(f.clone()).or_default();
                    if tracked_side && *used < tracked.get(f).copied().unwrap_or(0) {
                        *used += 1;
                        self.omega(f)
                    } else {
                        self.theta.formula(f)
                    }
                })
                .collect()
        };
        let ante = map_cedent(s.antecedent(), side == Side::Left, &mut left);
        let succ = map_cedent(s.succedent(), side == Side::Right, &mut left);
        Sequent::new(ante, succ)
    }

    fn go(&self, node: &Proof, tracked: &Tracked) -> Result<Proof, SkolemError> {
        let spec = self.spec;
        let expected = self.image(&node.conclusion, tracked);
        if node.tag() == spec.weak_tag() && is_tracked(tracked, node.principal()) {
            let principal = node.principal();
            let s = spec.match_partial(principal).expect("tracked");
            let t = node.inference.witness.as_ref().expect("weak rule");
            let minor = principal.instantiate(t).expect("quantifier");
            let below = if s.len() + 1 == spec.arity() {
                let premise = self.go(&node.premises[0], tracked)?;
                let mut full = s;
                full.push(t.clone());
                let full: Vec<Term> = full.iter().map(|u| self.theta.term(u)).collect();
                let inner = spec.source_partial(&full);
                if Some(self.theta.formula(&minor)) != inner.henkin_instance() {
                    return Err(SkolemError::IncoherentReplacement(spec.skolem_term(full)));
                }
                Proof::infer(spec.strong_tag(), inner, None, vec![premise])?
            } else {
                let mut next = tracked.clone();
                *next.entry(minor).or_default() += 1;
                self.go(&node.premises[0], &next)?
            };
            let out = Proof::infer(spec.weak_tag(), self.omega(principal), Some(self.theta.term(t)), vec![below])?;
            if out.conclusion != expected {
                return Err(SkolemError::Postcondition("image of a traced weak step"));
            }
            return Ok(out);
        }
        let premises = node.premises.iter().map(|p| self.go(p, tracked)).collect::<Result<Vec<_>, _>>()?;
        Ok(Proof::new(expected, self.theta.inference(&node.inference), premises))
    }
}

fn eliminate(pi: &Proof, spec: &SkolemizationSpec, polarity: Polarity) -> Result<Proof, SkolemError> {
    if spec.polarity != polarity {
        return Err(SkolemError::SourceShape(spec.source()));
    }
    if spec.arity() == 0 {
        return Err(SkolemError::EmptyPrefix);
    }
    check_proof(pi)?;
    let target = spec.skolemize();
    let side = spec.side();
    let shape = || SkolemError::EndsequentShapeMismatch(pi.conclusion.clone());
    let rest = pi.conclusion.without(side, &target).ok_or_else(shape)?;
    if rest.formulas().any(|f| mentions_function(f, &spec.function)) {
        return Err(shape());
    }
    let report = analyze_freeness(pi, spec).map_err(SkolemError::NotFree)?;
    let theta = Theta(report.ordering.iter().map(|s| (spec.skolem_term(s.clone()), spec.henkin_for(s))).collect());
    for s in &report.ordering {
        let image = theta.term(&spec.skolem_term(s.clone()));
        let s_theta: Vec<Term> = s.iter().map(|t| theta.term(t)).collect();
        if image != spec.henkin_for(&s_theta) {
            return Err(SkolemError::IncoherentReplacement(spec.skolem_term(s.clone())));
        }
    }
    let mut tracked = Tracked::new();
    tracked.insert(target, 1);
    let elim = Eliminator { spec, theta };
    let mut out = elim.go(pi, &tracked)?;
    loop {
        let terms = proof_fn_terms(&out, &spec.function);
        let innermost = terms.into_iter().find(|t| {
            let Term::App(_, args) = t else { return true };
            let mut inner = Vec::new();
            args.iter().for_each(|a| collect_fn_terms(a, &spec.function, &mut inner));
            inner.is_empty()
        });
        let Some(r) = innermost else { break };
        let args = match &r {
            Term::App(_, args) => args.to_vec(),
            _ => vec![],
        };
        out = replace_in_proof(&out, &r, &spec.henkin_for(&args))?;
    }
    let stats = check_proof(&out)?;
    let expected = rest.with(side, spec.source());
    if out.conclusion != expected {
        return Err(SkolemError::Postcondition("endsequent"));
    }
    if stats.length != pi.length() + report.n() {
        return Err(SkolemError::Postcondition("length l + n"));
    }
    if stats.cut_rank != pi.cut_rank() {
        return Err(SkolemError::Postcondition("cut-rank"));
    }
    Ok(out)
}

/// From `π ⊢_l ∀x⃗A[x⃗,f(x⃗)], Γ ⇒ Δ` free for `f`, a proof of
/// `∀x⃗∃yA, Γ ⇒ Δ` with length `l + n`, the same cut-rank and no `f`.
pub fn eliminate_witness(pi: &Proof, spec: &SkolemizationSpec) -> Result<Proof, SkolemError> {
    eliminate(pi, spec, Polarity::Witness)
}

/// From `π ⊢_l Γ ⇒ Δ, ∃x⃗A[x⃗,g(x⃗)]` free for `g`, a proof of
/// `Γ ⇒ Δ, ∃x⃗∀yA` with length `l + n`, the same cut-rank and no `g`.
pub fn eliminate_counterexample(pi: &Proof, spec: &SkolemizationSpec) -> Result<Proof, SkolemError> {
    eliminate(pi, spec, Polarity::Counterexample)
}

/// From `π ⊢_l ⇒ ∀x⃗A[x⃗,f(x⃗)] → B` free for `f`, a proof of `⇒ ∀x⃗∃yA → B`
/// with length at most `2l` and no larger cut-rank.
pub fn deskolemize_implication(pi: &Proof, spec: &SkolemizationSpec) -> Result<Proof, SkolemError> {
    let shape = || SkolemError::EndsequentShapeMismatch(pi.conclusion.clone());
    let target = spec.skolemize();
    let imp = pi
        .conclusion
        .succedent()
        .iter()
        .find(|f| matches!(f, Formula::Imp(a, _) if **a == target))
        .ok_or_else(shape)?;
    let Formula::Imp(_, b) = imp else { unreachable!() };
    let inverted = invert(pi, &InversionTarget::new(RuleTag::RImp, imp.clone()))?.remove(0);
    let eliminated = eliminate_witness(&inverted, spec)?;
    let out = Proof::infer(RuleTag::RImp, Formula::imp(spec.source(), (**b).clone()), None, vec![eliminated])?;
    if out.length() > 2 * pi.length() || out.cut_rank() > pi.cut_rank() {
        return Err(SkolemError::Postcondition("length ≤ 2l"));
    }
    Ok(out)
}

/// Eliminates `g_n`, then `g_{n-1}`, down to `g₁`. `specs` lists `g₁` first;
/// each spec's Skolemized formula is the source formula of the next one.
/// The number of critical inferences for every remaining function is
/// checked to be unchanged by each step.
pub fn eliminate_counterexample_chain(pi: &Proof, specs: &[SkolemizationSpec]) -> Result<Proof, SkolemError> {
    let mut cur = pi.clone();
    for (i, spec) in specs.iter().enumerate().rev() {
        let before: Vec<usize> = specs[..i].iter().map(|s| count_critical(&cur, s)).collect();
        cur = eliminate_counterexample(&cur, spec)?;
        let after: Vec<usize> = specs[..i].iter().map(|s| count_critical(&cur, s)).collect();
        if before != after {
            return Err(SkolemError::Postcondition("critical counts of the remaining functions"));
        }
    }
    if cur.length() >= 2 * pi.length() || cur.cut_rank() > pi.cut_rank() {
        return Err(SkolemError::Postcondition("length < 2l"));
    }
    Ok(cur)
}

/// `e_A(l) = 2_{2·(max(d_A, r_A) ∸ r) + 1}^{max(h_A, 2l) + 1}`.
pub fn e_a(d_a: usize, r_a: usize, h_a: usize, r: usize, l: usize) -> Bound {
    let n = monus(d_a.max(r_a) as u64, r as u64);
    superexp_bound(2 * n + 1, h_a.max(2 * l) as u64 + 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem22Outcome {
    pub proof: Proof,
    /// Statistics of the joined proof before any reduction.
    pub joined: crate::calculus::ProofStats,
    pub reductions: usize,
    pub bound: Bound,
}

/// Joins `πA ⊢ ⇒ ∀x⃗∃yA` with the deskolemized and inverted `π` by a cut on
/// `∀x⃗∃yA`, then reduces the cut-rank to `r` with at most
/// `max(d_A, r_A) ∸ r` reduction steps.
pub fn problem22_pipeline(
    pi_a: &Proof,
    pi: &Proof,
    spec: &SkolemizationSpec,
    r: usize,
) -> Result<Problem22Outcome, SkolemError> {
    let source = spec.source();
    if pi_a.conclusion != Sequent::new(vec![], vec![source.clone()]) {
        return Err(SkolemError::EndsequentShapeMismatch(pi_a.conclusion.clone()));
    }
    if pi.cut_rank() > r {
        return Err(SkolemError::CutRankRegression { found: pi.cut_rank(), limit: r });
    }
    let l = pi.length();
    let desk = deskolemize_implication(pi, spec)?;
    let imp = desk
        .conclusion
        .succedent()
        .iter()
        .find(|f| matches!(f, Formula::Imp(a, _) if **a == source))
        .cloned()
        .ok_or_else(|| SkolemError::EndsequentShapeMismatch(desk.conclusion.clone()))?;
    let Formula::Imp(_, b) = &imp else { unreachable!() };
    let right = invert(&desk, &InversionTarget::new(RuleTag::RImp, imp.clone()))?.remove(0);
    let left = weaken(pi_a, &Sequent::new(vec![], vec![(**b).clone(), source.clone()]))?;
    let mut rho = Proof::infer(RuleTag::Cut, source.clone(), None, vec![left, right])?;
    let joined = rho.stats();
    let (d_a, r_a, h_a) = (source.depth(), pi_a.cut_rank(), pi_a.height());
    let steps = monus(d_a.max(r_a) as u64, r as u64) as usize;
    let mut reductions = 0;
    while reductions < steps && rho.cut_rank() > r {
        rho = reduce_step(&rho)?;
        reductions += 1;
    }
    check_proof(&rho)?;
    if rho.cut_rank() > r {
        return Err(SkolemError::CutRankRegression { found: rho.cut_rank(), limit: r });
    }
    let bound = e_a(d_a, r_a, h_a, r, l);
    if !bound.admits(rho.length() as u64) {
        return Err(SkolemError::BoundExceeded { measured: rho.length(), limit: bound });
    }
    Ok(Problem22Outcome { proof: rho, joined, reductions, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::prove;

    fn c(n: &str) -> Term {
        Term::constant(n)
    }
    fn v(n: &str) -> Term {
        Term::var(n)
    }
    fn p(args: Vec<Term>) -> Formula {
        Formula::atom("P", args)
    }
    fn seq(a: Vec<Formula>, s: Vec<Formula>) -> Sequent {
        Sequent::new(a, s)
    }
    fn ax(f: &Formula, a: Vec<Formula>, s: Vec<Formula>) -> Proof {
        Proof::axiom(RuleTag::Ax, f.clone(), seq(a, s)).unwrap()
    }
    fn infer(tag: RuleTag, f: &Formula, w: Option<Term>, prem: Vec<Proof>) -> Proof {
        Proof::infer(tag, f.clone(), w, prem).unwrap()
    }
    fn f1(t: Term) -> Term {
        Term::app("f", vec![t])
    }
    fn witness_spec() -> SkolemizationSpec {
        let src = Formula::forall("x", Formula::exists("y", p(vec![v("x"), v("y")])));
        SkolemizationSpec::infer(&src, "f", Polarity::Witness).unwrap()
    }

    /// `∀xP(x,f(x)) ⇒ ∃yP(k,y)` by Ax, R∃ with `f(k)`, L∀ with `k`.
    fn witness_example() -> Proof {
        let all = Formula::forall("x", p(vec![v("x"), f1(v("x"))]));
        let ex = Formula::exists("y", p(vec![c("k"), v("y")]));
        let inst = p(vec![c("k"), f1(c("k"))]);
        let leaf = ax(&inst, vec![inst.clone(), all.clone()], vec![ex.clone(), inst.clone()]);
        let r = infer(RuleTag::RExists, &ex, Some(f1(c("k"))), vec![leaf]);
        infer(RuleTag::LForall, &all, Some(c("k")), vec![r])
    }

    #[test]
    fn recovers_spec_from_skolemized_formula() {
        let spec = witness_spec();
        let back = SkolemizationSpec::from_skolemized(&spec.skolemize(), "f", Polarity::Witness).unwrap();
        assert_eq!(back.skolemize(), spec.skolemize());
        assert_eq!(back.source(), spec.source());
        let mixed = Formula::forall("x", p(vec![f1(v("x")), f1(c("k"))]));
        assert!(SkolemizationSpec::from_skolemized(&mixed, "f", Polarity::Witness).is_err());
        let ex = Formula::exists("x", p(vec![v("x"), f1(v("x"))]));
        assert!(SkolemizationSpec::from_skolemized(&ex, "f", Polarity::Witness).is_err());
        let g = SkolemizationSpec::from_skolemized(&ex, "f", Polarity::Counterexample).unwrap();
        assert_eq!(g.source(), Formula::exists("x", Formula::forall("y", p(vec![v("x"), v("y")]))));
    }

    #[test]
    fn skolemizes_both_polarities() {
        let spec = witness_spec();
        assert_eq!(spec.skolemize(), Formula::forall("x", p(vec![v("x"), f1(v("x"))])));
        let k0 = SkolemizationSpec::infer(&Formula::exists("y", p(vec![v("y")])), "f", Polarity::Witness).unwrap();
        assert_eq!(k0.skolemize(), p(vec![c("f")]));
        let r = |args| Formula::atom("R", args);
        let src = Formula::exists("x1", Formula::exists("x2", Formula::forall("y", r(vec![v("x1"), v("x2"), v("y")]))));
        let g = SkolemizationSpec::infer(&src, "g", Polarity::Counterexample).unwrap();
        let gx = Term::app("g", vec![v("x1"), v("x2")]);
        assert_eq!(g.skolemize(), Formula::exists("x1", Formula::exists("x2", r(vec![v("x1"), v("x2"), gx]))));
        assert_eq!(g.source(), src);
    }

    #[test]
    fn rejects_clashing_symbol() {
        let src = Formula::forall("x", Formula::exists("y", p(vec![f1(v("x")), v("y")])));
        assert_eq!(
            SkolemizationSpec::infer(&src, "f", Polarity::Witness),
            Err(SkolemError::SymbolClash("f".into()))
        );
        assert!(matches!(
            SkolemizationSpec::infer(&p(vec![c("k")]), "f", Polarity::Counterexample),
            Err(SkolemError::SourceShape(_))
        ));
    }

    #[test]
    fn partial_instances_match() {
        let src = Formula::forall("x1", Formula::forall("x2", Formula::exists("y", p(vec![v("x1"), v("x2"), v("y")]))));
        let spec = SkolemizationSpec::infer(&src, "f", Polarity::Witness).unwrap();
        let s = [f1(c("k"))];
        let partial = spec.skolem_partial(&s);
        assert_eq!(spec.match_partial(&partial), Some(s.to_vec()));
        assert_eq!(spec.match_partial(&spec.skolemize()), Some(vec![]));
        let full = spec.skolem_partial(&[c("k"), c("k")]);
        assert_eq!(spec.match_partial(&full), None);
    }

    #[test]
    fn analyzes_the_witness_example() {
        let pi = witness_example();
        check_proof(&pi).unwrap();
        let report = analyze_freeness(&pi, &witness_spec()).unwrap();
        assert_eq!(report.n(), 1);
        assert_eq!(report.critical[0].path, Vec::<usize>::new());
        assert_eq!(report.ordering, vec![vec![c("k")]]);
        for sub in [&pi.premises[0], &pi.premises[0].premises[0]] {
            assert_eq!(analyze_freeness(sub, &witness_spec()).unwrap().n(), 0);
        }
    }

    #[test]
    fn eliminates_the_witness_example() {
        let spec = witness_spec();
        let pi = witness_example();
        let out = eliminate_witness(&pi, &spec).unwrap();
        let a = Formula::exists("y", p(vec![c("k"), v("y")])).henkin_constant().unwrap();
        let ex = Formula::exists("y", p(vec![c("k"), v("y")]));
        let inst = p(vec![c("k"), a.clone()]);
        let expected = infer(
            RuleTag::LForall,
            &spec.source(),
            Some(c("k")),
            vec![infer(
                RuleTag::LExists,
                &ex,
                None,
                vec![infer(
                    RuleTag::RExists,
                    &ex,
                    Some(a),
                    vec![ax(&inst, vec![inst.clone(), spec.source()], vec![ex.clone(), inst.clone()])],
                )],
            )],
        );
        assert_eq!(out, expected);
        assert_eq!(out.length(), pi.length() + 1);
        assert!(!proof_mentions_function(&out, "f"));
    }

    #[test]
    fn nested_skolem_terms_are_ordered_outside_in() {
        let spec = witness_spec();
        let all = spec.skolemize();
        let body = |u: Term, x: Term, w: Term| Formula::and(p(vec![u, x.clone()]), p(vec![x, w]));
        let goal = Formula::exists("u", Formula::exists("v", Formula::exists("w", body(v("u"), v("v"), v("w")))));
        let ex_v = Formula::exists("v", Formula::exists("w", body(c("k"), v("v"), v("w"))));
        let ex_w = Formula::exists("w", body(c("k"), f1(c("k")), v("w")));
        let (k, fk, ffk) = (c("k"), f1(c("k")), f1(f1(c("k"))));
        let conj = body(k.clone(), fk.clone(), ffk.clone());
        let (i1, i2) = (p(vec![k.clone(), fk.clone()]), p(vec![fk.clone(), ffk.clone()]));
        let ante = vec![all.clone(), i1.clone(), i2.clone()];
        let succ = vec![goal.clone(), ex_v.clone(), ex_w.clone()];
        let leaf = |i: &Formula| {
            let mut s = succ.clone();
            s.push(i.clone());
            ax(i, ante.clone(), s)
        };
        let and = infer(RuleTag::RAnd, &conj, None, vec![leaf(&i1), leaf(&i2)]);
        let e1 = infer(RuleTag::RExists, &ex_w, Some(ffk), vec![and]);
        let e2 = infer(RuleTag::RExists, &ex_v, Some(fk.clone()), vec![e1]);
        let e3 = infer(RuleTag::RExists, &goal, Some(k.clone()), vec![e2]);
        let l1 = infer(RuleTag::LForall, &all, Some(fk), vec![e3]);
        let pi = infer(RuleTag::LForall, &all, Some(k), vec![l1]);
        assert_eq!(pi.conclusion, seq(vec![all], vec![goal]));
        let report = analyze_freeness(&pi, &spec).unwrap();
        assert_eq!(report.n(), 2);
        assert_eq!(report.ordering, vec![vec![f1(c("k"))], vec![c("k")]]);
        let out = eliminate_witness(&pi, &spec).unwrap();
        assert_eq!(out.length(), pi.length() + 2);
        assert!(!proof_mentions_function(&out, "f"));
        let a2 = spec.henkin_for(&[c("k")]);
        assert!(out.all_formulas().iter().any(|f| f.deep_occurs(&spec.henkin_for(std::slice::from_ref(&a2)))));
    }

    #[test]
    fn strong_rule_on_skolem_semiterm_is_not_free() {
        let all = Formula::forall("x", p(vec![v("x"), f1(v("x"))]));
        let q = |t: Term| Formula::atom("Q", vec![t]);
        let qz = Formula::forall("z", q(v("z")));
        let qf = Formula::forall("x", q(f1(v("x"))));
        let cst = qf.henkin_constant().unwrap();
        let leaf = ax(&q(f1(cst.clone())), vec![all.clone(), qz.clone(), q(f1(cst.clone()))], vec![q(f1(cst.clone()))]);
        let l = infer(RuleTag::LForall, &qz, Some(f1(cst)), vec![leaf]);
        let pi = infer(RuleTag::RForall, &qf, None, vec![l]);
        let err = analyze_freeness(&pi, &witness_spec()).unwrap_err();
        assert_eq!(err, NotFree { path: vec![], reason: NotFreeReason::StrongRule });
        assert!(matches!(eliminate_witness(&pi, &witness_spec()), Err(SkolemError::EndsequentShapeMismatch(_))));
    }

    fn counter_example() -> (Proof, SkolemizationSpec) {
        let src = Formula::exists("x", Formula::forall("y", p(vec![v("x"), v("y")])));
        let spec = SkolemizationSpec::infer(&src, "g", Polarity::Counterexample).unwrap();
        let g = Term::app("g", vec![c("k")]);
        let zy = Formula::forall("z", Formula::forall("y", p(vec![v("z"), v("y")])));
        let ky = Formula::forall("y", p(vec![c("k"), v("y")]));
        let inst = p(vec![c("k"), g.clone()]);
        let leaf = ax(&inst, vec![inst.clone(), ky.clone(), zy.clone()], vec![spec.skolemize(), inst.clone()]);
        let r = infer(RuleTag::RExists, &spec.skolemize(), Some(c("k")), vec![leaf]);
        let l1 = infer(RuleTag::LForall, &ky, Some(g), vec![r]);
        (infer(RuleTag::LForall, &zy, Some(c("k")), vec![l1]), spec)
    }

    #[test]
    fn eliminates_a_counterexample_function() {
        let (pi, spec) = counter_example();
        assert_eq!(pi.length(), 4);
        let out = eliminate_counterexample(&pi, &spec).unwrap();
        assert_eq!(out.length(), 5);
        assert_eq!(out.conclusion.succedent(), &[spec.source()]);
        assert!(!proof_mentions_function(&out, "g"));
        assert!(matches!(eliminate_witness(&pi, &spec), Err(SkolemError::SourceShape(_))));
    }

    #[test]
    fn empty_prefix_is_rejected() {
        let spec = SkolemizationSpec::infer(&Formula::exists("y", p(vec![v("y")])), "f", Polarity::Witness).unwrap();
        let a = spec.skolemize();
        let pi = ax(&a, vec![a.clone()], vec![a.clone()]);
        assert_eq!(eliminate_witness(&pi, &spec), Err(SkolemError::EmptyPrefix));
    }

    #[test]
    fn deskolemizes_an_implication() {
        let spec = witness_spec();
        let pi = witness_example();
        let ex = Formula::exists("y", p(vec![c("k"), v("y")]));
        let wrapped = infer(RuleTag::RImp, &Formula::imp(spec.skolemize(), ex.clone()), None, vec![pi]);
        let out = deskolemize_implication(&wrapped, &spec).unwrap();
        assert_eq!(out.conclusion, seq(vec![], vec![Formula::imp(spec.source(), ex)]));
        assert!(out.length() <= 2 * wrapped.length());
        assert_eq!(out.length(), 5);
    }

    #[test]
    fn counterexample_chain_of_two() {
        let r = |a: Term, b: Term, c2: Term, d: Term| Formula::atom("R", vec![a, b, c2, d]);
        let g1 = |t: Term| Term::app("g1", vec![t]);
        let spec1 = SkolemizationSpec::new(
            Polarity::Counterexample,
            vec!["x1".into()],
            "y1".into(),
            Formula::exists("x2", Formula::forall("y2", r(v("x1"), v("y1"), v("x2"), v("y2")))),
            "g1".into(),
        )
        .unwrap();
        let spec2 = SkolemizationSpec::new(
            Polarity::Counterexample,
            vec!["x1".into(), "x2".into()],
            "y2".into(),
            r(v("x1"), g1(v("x1")), v("x2"), v("y2")),
            "g2".into(),
        )
        .unwrap();
        assert_eq!(spec1.skolemize(), spec2.source());
        let all = ["a", "b", "c", "d"]
            .iter()
            .rev()
            .fold(r(v("a"), v("b"), v("c"), v("d")), |f, x| Formula::forall(x, f));
        let pi = prove(&seq(vec![all], vec![spec2.skolemize()]), 8).expect("provable");
        let out = eliminate_counterexample_chain(&pi, &[spec1.clone(), spec2]).unwrap();
        assert_eq!(out.conclusion.succedent(), &[spec1.source()]);
        assert!(out.length() < 2 * pi.length());
        assert_eq!(out.length(), pi.length() + 2);
    }

    #[test]
    fn problem22_pipeline_reduces_to_the_requested_rank() {
        let a = Formula::or(p(vec![v("x"), v("y")]), Formula::not(p(vec![v("x"), v("y")])));
        let src = Formula::forall("x", Formula::exists("y", a));
        let spec = SkolemizationSpec::infer(&src, "f", Polarity::Witness).unwrap();
        let pi_a = prove(&seq(vec![], vec![src.clone()]), 2).unwrap();
        let b = spec.source_partial(&[c("k")]);
        let pi = prove(&seq(vec![], vec![Formula::imp(spec.skolemize(), b)]), 4).unwrap();
        for r in [0, 1, 5] {
            let out = problem22_pipeline(&pi_a, &pi, &spec, r).unwrap();
            assert!(out.proof.cut_rank() <= r);
            assert!(out.bound.admits(out.proof.length() as u64));
            if r >= src.depth() {
                assert_eq!(out.reductions, 0);
                assert_eq!(out.proof.stats(), out.joined);
            }
        }
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(e_a(3, 0, 4, 3, 2), Bound::Finite(1 << 5));
        assert_eq!(e_a(1, 0, 1, 0, 0), Bound::Finite(1 << 16));
        assert_eq!(e_a(1, 0, 1, 0, 1), Bound::Huge);
        assert_eq!(e_a(5, 0, 10, 0, 10), Bound::Huge);
    }
}
