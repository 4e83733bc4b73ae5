//! Cut elimination for proofs with pure endsequents.
//!
//! Each round first makes the proof quasiregular for its cut-rank `r` (no
//! critical cut of rank `r` remains), then reduces every cut of rank `r`.
//! All height bounds are measured and enforced on every call.

use thiserror::Error;

use crate::bounds::Bound;
use crate::calculus::{Path, Proof, ProofStats, RuleTag, Sequent, Side};
use crate::syntax::{henkin_rank, Expression, Formula};
use crate::transform::{invert, replace_in_proof, weaken, InversionTarget};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CutElimError {
    #[error("the endsequent `{0}` is not pure")]
    NonPureEndsequent(Sequent),
    #[error("the proof is already cut-free")]
    AlreadyCutFree,
    #[error("the proof has a critical cut of rank {0}")]
    NotQuasiregular(usize),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("{operation}: height {measured} exceeds the bound {limit:?}")]
    BoundExceeded { operation: &'static str, measured: usize, limit: Bound },
}

/// One cut inference of a proof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutClassification {
    pub path: Path,
    pub formula: Formula,
    pub rank: usize,
    pub is_quantifier: bool,
    pub is_critical: bool,
}

/// Whether a cut on `a` concluding `conclusion` is critical.
fn is_critical(a: &Formula, conclusion: &Sequent) -> bool {
    a.henkin_constant().is_some_and(|c| conclusion.deep_occurs(&c))
}

pub fn classify_cuts(pi: &Proof) -> Vec<CutClassification> {
    let mut out = Vec::new();
    pi.visit(&mut |path, n| {
        if n.tag() == RuleTag::Cut {
            let a = n.principal();
            out.push(CutClassification {
                path: path.to_vec(),
                formula: a.clone(),
                rank: a.depth(),
                is_quantifier: a.is_quantifier(),
                is_critical: is_critical(a, &n.conclusion),
            });
        }
    });
    out
}

/// True iff `pi` has no critical cut of rank `r`.
pub fn is_quasiregular(pi: &Proof, r: usize) -> bool {
    let mut ok = true;
    pi.visit(&mut |_, n| {
        ok &= !(n.tag() == RuleTag::Cut && n.principal().depth() == r && is_critical(n.principal(), &n.conclusion));
    });
    ok
}

fn check_height(operation: &'static str, pi: &Proof, limit: Bound, strict: bool) -> Result<(), CutElimError> {
    let h = pi.height() as u64;
    let ok = if strict { limit.exceeds(h) } else { limit.admits(h) };
    if ok {
        Ok(())
    } else {
        Err(CutElimError::BoundExceeded { operation, measured: pi.height(), limit })
    }
}

fn cut(a: &Formula, left: Proof, right: Proof) -> Proof {
    let conclusion = left.conclusion.without(Side::Right, a).expect("left premise has the cut formula");
    Proof { conclusion, inference: crate::calculus::Inference::new(RuleTag::Cut, a.clone()), premises: vec![left, right] }
}

/// Depth-`r` quantifier cut formulas of `pi`, without repetition.
fn quantifier_cuts(pi: &Proof, r: usize) -> Vec<Formula> {
    let mut out: Vec<Formula> = pi.cut_formulas().into_iter().filter(|a| a.is_quantifier() && a.depth() == r).collect();
    out.sort();
    out.dedup();
    out
}

fn quasiregularize_at(pi: &Proof, r: usize) -> Proof {
    if is_quasiregular(pi, r) {
        return pi.clone();
    }
    // The constant of the chosen formula has least rank, so no other
    // candidate's constant occurs deeply in it.
    let a = quantifier_cuts(pi, r)
        .into_iter()
        .map(|a| {
            let rank = henkin_rank(&a.henkin_constant().expect("quantifier")).expect("Henkin constant");
            (rank, a.to_string(), a)
        })
        .min()
        .map(|(_, _, a)| a)
        .expect("a critical cut of rank r exists");
    let (rho, sigma) = crate::transform::invert_cut(pi, &a);
    let left = quasiregularize_at(&rho, r);
    let right = quasiregularize_at(&sigma, r);
    cut(&a, left, right)
}

/// A proof of the same pure endsequent with the same cut-rank `r` and no
/// critical cut of rank `r`. Height stays below `2^h`.
pub fn quasiregularize(pi: &Proof) -> Result<Proof, CutElimError> {
    if !pi.conclusion.is_pure() {
        return Err(CutElimError::NonPureEndsequent(pi.conclusion.clone()));
    }
    let r = pi.cut_rank();
    let out = quasiregularize_at(pi, r);
    check_height("quasiregularize", &out, Bound::Finite(pi.height() as u64).pow2(), true)?;
    debug_assert_eq!(out.cut_rank(), r);
    debug_assert!(is_quasiregular(&out, r));
    Ok(out)
}

/// If `s` is an initial sequent, an axiom proving it.
fn axiom_for(s: &Sequent) -> Option<Proof> {
    if s.contains(Side::Left, &Formula::Bot) {
        return Proof::axiom(RuleTag::AxBot, Formula::Bot, s.clone()).ok();
    }
    if s.contains(Side::Right, &Formula::Top) {
        return Proof::axiom(RuleTag::AxTop, Formula::Top, s.clone()).ok();
    }
    let p = s.antecedent().iter().find(|f| f.is_atomic() && s.contains(Side::Right, f))?;
    Proof::axiom(RuleTag::Ax, p.clone(), s.clone()).ok()
}

type Hit<'a> = dyn FnMut(&Proof, Vec<Proof>, &Sequent) -> Option<Proof> + 'a;

/// Follows one occurrence of `a` on `side` through `pi` and removes it,
/// adding `extra` to every sequent. At nodes where `hit` recognises an
/// inference on the occurrence, `hit` receives the already transformed
/// premises and the target conclusion and builds the replacement.
fn push_through(
    pi: &Proof,
    side: Side,
    a: &Formula,
    extra: &Sequent,
    hit: &mut Hit<'_>,
) -> Proof {
    let conclusion = pi.conclusion.without(side, a).expect("occurrence present").union(extra);
    let premises: Vec<Proof> = pi.premises.iter().map(|p| push_through(p, side, a, extra, hit)).collect();
    if let Some(out) = hit(pi, premises.clone(), &conclusion) {
        return out;
    }
    Proof { conclusion, inference: pi.inference.clone(), premises }
}

/// Eliminates a single cut on `a` between `pi1 ⊢ Γ ⇒ Δ, a` and
/// `pi2 ⊢ a, Γ ⇒ Δ` whose cut-ranks are below `depth(a)`. The result has
/// cut-rank below `depth(a)` and height at most the sum of the heights.
pub fn reduce_one_cut(pi1: &Proof, pi2: &Proof, a: &Formula) -> Result<Proof, CutElimError> {
    let r = a.depth();
    let ctx = pi1
        .conclusion
        .without(Side::Right, a)
        .ok_or_else(|| CutElimError::PreconditionViolated(format!("left premise lacks `{a}` in its succedent")))?;
    if pi2.conclusion.without(Side::Left, a).as_ref() != Some(&ctx) {
        return Err(CutElimError::PreconditionViolated("premises do not share their context".into()));
    }
    if pi1.cut_rank() >= r || pi2.cut_rank() >= r {
        return Err(CutElimError::PreconditionViolated(format!("premises have cuts of rank ≥ {r}")));
    }
    if let Some(c) = a.henkin_constant() {
        if ctx.deep_occurs(&c) {
            return Err(CutElimError::PreconditionViolated(format!("`{c}` occurs deeply in the conclusion")));
        }
    }
    let out = match axiom_for(&ctx) {
        Some(ax) => ax,
        None => reduce_cases(pi1, pi2, a, &ctx)?,
    };
    debug_assert_eq!(out.conclusion, ctx);
    check_height("reduce_one_cut", &out, Bound::Finite((pi1.height() + pi2.height()) as u64), false)?;
    Ok(out)
}

fn inv(pi: &Proof, tag: RuleTag, a: &Formula) -> Vec<Proof> {
    invert(pi, &InversionTarget::new(tag, a.clone())).expect("target present and invertible")
}

fn weak(pi: &Proof, target: &Sequent) -> Proof {
    weaken(pi, target).expect("inclusion holds by construction")
}

/// Drops `⊤` from the left or `⊥` from the right; neither is ever principal
/// there.
fn strip(pi: &Proof, side: Side, a: &Formula) -> Proof {
    push_through(pi, side, a, &Sequent::default(), &mut |_, _, _| None)
}

fn reduce_cases(pi1: &Proof, pi2: &Proof, a: &Formula, ctx: &Sequent) -> Result<Proof, CutElimError> {
    use Formula::*;
    Ok(match a {
        Top => strip(pi2, Side::Left, a),
        Bot => strip(pi1, Side::Right, a),
        Atom(..) => {
            let mut hit = |node: &Proof, _: Vec<Proof>, target: &Sequent| {
                if node.tag() == RuleTag::Ax && node.principal() == a && !target.contains(Side::Right, a) {
                    Some(weak(pi2, target))
                } else {
                    None
                }
            };
            let pushed = push_through(pi1, Side::Right, a, ctx, &mut hit);
            weak(&pushed, ctx)
        }
        Not(b) => {
            let left = inv(pi2, RuleTag::LNot, a).remove(0);
            let right = inv(pi1, RuleTag::RNot, a).remove(0);
            cut(b, left, right)
        }
        And(b, c) => {
            let mut rs = inv(pi1, RuleTag::RAnd, a);
            let (rb, rc) = (rs.remove(0), rs.remove(0));
            let s = inv(pi2, RuleTag::LAnd, a).remove(0);
            let rc = weak(&rc, &ctx.with(Side::Left, (**b).clone()).with(Side::Right, (**c).clone()));
            let inner = cut(c, rc, s);
            cut(b, rb, inner)
        }
        Or(b, c) => {
            let r = inv(pi1, RuleTag::ROr, a).remove(0);
            let mut ss = inv(pi2, RuleTag::LOr, a);
            let (sb, sc) = (ss.remove(0), ss.remove(0));
            let sb = weak(&sb, &ctx.with(Side::Left, (**b).clone()).with(Side::Right, (**c).clone()));
            let inner = cut(b, r, sb);
            cut(c, inner, sc)
        }
        Imp(b, c) => {
            let r = inv(pi1, RuleTag::RImp, a).remove(0);
            let mut ss = inv(pi2, RuleTag::LImp, a);
            let (sb, sc) = (ss.remove(0), ss.remove(0));
            let sb = weak(&sb, &ctx.with(Side::Right, (**b).clone()).with(Side::Right, (**c).clone()));
            let inner = cut(b, sb, r);
            cut(c, inner, sc)
        }
        Exists(..) => {
            let c = a.henkin_constant().expect("closed");
            let inst_c = a.henkin_instance().expect("closed");
            let pi2f = inv(pi2, RuleTag::LExists, a).remove(0);
            let mut failure = None;
            let mut hit = |node: &Proof, mut prem: Vec<Proof>, target: &Sequent| {
                if node.tag() != RuleTag::RExists || node.principal() != a || failure.is_some() {
                    return None;
                }
                let t = node.inference.witness.clone().expect("checked");
                let inst = a.instantiate(&t).expect("quantifier");
                let graft = match replace_in_proof(&pi2f, &c, &t) {
                    Ok(g) => g,
                    Err(e) => {
                        failure = Some(e);
                        return None;
                    }
                };
                debug_assert!(graft.conclusion.contains(Side::Left, &inst));
                let graft = weak(&graft, &target.with(Side::Left, inst.clone()));
                Some(cut(&inst, prem.remove(0), graft))
            };
            let pushed = push_through(pi1, Side::Right, a, ctx, &mut hit);
            if let Some(e) = failure {
                return Err(CutElimError::PreconditionViolated(format!("replacement of `{inst_c}` failed: {e}")));
            }
            weak(&pushed, ctx)
        }
        Forall(..) => {
            let c = a.henkin_constant().expect("closed");
            let pi1f = inv(pi1, RuleTag::RForall, a).remove(0);
            let mut failure = None;
            let mut hit = |node: &Proof, mut prem: Vec<Proof>, target: &Sequent| {
                if node.tag() != RuleTag::LForall || node.principal() != a || failure.is_some() {
                    return None;
                }
                let t = node.inference.witness.clone().expect("checked");
                let inst = a.instantiate(&t).expect("quantifier");
                let graft = match replace_in_proof(&pi1f, &c, &t) {
                    Ok(g) => g,
                    Err(e) => {
                        failure = Some(e);
                        return None;
                    }
                };
                let graft = weak(&graft, &target.with(Side::Right, inst.clone()));
                Some(cut(&inst, graft, prem.remove(0)))
            };
            let pushed = push_through(pi2, Side::Left, a, ctx, &mut hit);
            if let Some(e) = failure {
                return Err(CutElimError::PreconditionViolated(format!("replacement of `{c}` failed: {e}")));
            }
            weak(&pushed, ctx)
        }
    })
}

fn reduce_rank_at(pi: &Proof, r: usize) -> Result<Proof, CutElimError> {
    let premises = pi.premises.iter().map(|p| reduce_rank_at(p, r)).collect::<Result<Vec<_>, _>>()?;
    if pi.tag() == RuleTag::Cut && pi.principal().depth() == r {
        return reduce_one_cut(&premises[0], &premises[1], pi.principal());
    }
    Ok(Proof { conclusion: pi.conclusion.clone(), inference: pi.inference.clone(), premises })
}

/// From an `r`-quasiregular proof with cuts of rank at most `r`, a proof of
/// the same endsequent with all cuts below `r` and height below `2^h`.
pub fn reduce_rank(pi: &Proof, r: usize) -> Result<Proof, CutElimError> {
    if pi.cut_rank() > r {
        return Err(CutElimError::PreconditionViolated(format!("cut-rank {} exceeds {r}", pi.cut_rank())));
    }
    if !is_quasiregular(pi, r) {
        return Err(CutElimError::NotQuasiregular(r));
    }
    let out = reduce_rank_at(pi, r)?;
    check_height("reduce_rank", &out, Bound::Finite(pi.height() as u64).pow2(), true)?;
    debug_assert!(r == 0 || out.cut_rank() < r);
    Ok(out)
}

/// One trace record of the elimination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub step: usize,
    pub op: &'static str,
    pub stats: ProofStats,
}

/// Quasiregularization followed by rank reduction: strictly smaller
/// cut-rank, height below `2^(2^h)`.
pub fn reduce_step(pi: &Proof) -> Result<Proof, CutElimError> {
    reduce_step_traced(pi, &mut |_, _| {})
}

fn reduce_step_traced(pi: &Proof, log: &mut dyn FnMut(&'static str, &Proof)) -> Result<Proof, CutElimError> {
    if !pi.conclusion.is_pure() {
        return Err(CutElimError::NonPureEndsequent(pi.conclusion.clone()));
    }
    let r = pi.cut_rank();
    if r == 0 {
        return Err(CutElimError::AlreadyCutFree);
    }
    let q = quasiregularize(pi)?;
    log("quasiregularize", &q);
    let out = reduce_rank(&q, r)?;
    log("reduce_rank", &out);
    check_height("reduce_step", &out, Bound::Finite(pi.height() as u64).pow2().pow2(), true)?;
    Ok(out)
}

/// A cut-free proof of the same pure endsequent, with height at most
/// `2_{2r}^h`.
pub fn eliminate_cuts(pi: &Proof) -> Result<Proof, CutElimError> {
    eliminate_cuts_traced(pi).map(|(p, _)| p)
}

/// As [`eliminate_cuts`], also returning per-step statistics.
pub fn eliminate_cuts_traced(pi: &Proof) -> Result<(Proof, Vec<TraceRecord>), CutElimError> {
    if !pi.conclusion.is_pure() {
        return Err(CutElimError::NonPureEndsequent(pi.conclusion.clone()));
    }
    let mut trace = vec![TraceRecord { step: 0, op: "input", stats: pi.stats() }];
    let mut cur = pi.clone();
    let mut step = 0;
    while !cur.is_cut_free() {
        step += 1;
        let mut log = |op: &'static str, p: &Proof| trace.push(TraceRecord { step, op, stats: p.stats() });
        cur = reduce_step_traced(&cur, &mut log)?;
    }
    let limit = crate::bounds::superexp_bound(2 * pi.cut_rank() as u64, pi.height() as u64);
    check_height("eliminate_cuts", &cur, limit, false)?;
    Ok((cur, trace))
}
