//! Bounded cut-free proof search.
//!
//! [`prove`] applies invertible rules eagerly and instantiates weak
//! quantifiers with closed terms of the sequent, so it is complete for the
//! propositional fragment. [`exists_cut_free`] enumerates every cut-free
//! derivation up to a height bound without relying on invertibility.

use std::collections::BTreeSet;

use crate::calculus::{Inference, Proof, RuleTag, Sequent, Side};
use crate::syntax::{Formula, Term};

fn axiom_for(s: &Sequent) -> Option<Proof> {
    if s.contains(Side::Left, &Formula::Bot) {
        return Some(Proof::new(s.clone(), Inference::new(RuleTag::AxBot, Formula::Bot), vec![]));
    }
    if s.contains(Side::Right, &Formula::Top) {
        return Some(Proof::new(s.clone(), Inference::new(RuleTag::AxTop, Formula::Top), vec![]));
    }
    let p = s.antecedent().iter().find(|f| f.is_atomic() && s.contains(Side::Right, f))?;
    Some(Proof::new(s.clone(), Inference::new(RuleTag::Ax, p.clone()), vec![]))
}

/// Premise sequents of `inf` applied backwards to `s`.
fn premises_of(s: &Sequent, inf: &Inference) -> Vec<Sequent> {
    let minors = inf.minors().expect("well-formed inference");
    let ctx = match inf.tag.side() {
        Some(side) => s.without(side, &inf.principal).expect("principal present"),
        None => s.clone(),
    };
    minors
        .into_iter()
        .map(|ms| ms.into_iter().fold(ctx.clone(), |acc, (side, f)| acc.with(side, f)))
        .collect()
}

/// Closed terms occurring in `s`, including the Henkin constants of its
/// quantifier formulas.
pub fn closed_terms(s: &Sequent) -> Vec<Term> {
    let mut out = BTreeSet::new();
    for f in s.formulas() {
        f.for_each_term(&mut |t| {
            if t.is_closed() {
                out.insert(t.clone());
            }
        });
    }
    out.into_iter().collect()
}

fn invertible(s: &Sequent) -> Option<Inference> {
    for side in [Side::Left, Side::Right] {
        for f in s.cedent(side) {
            match RuleTag::introducing(side, f) {
                Some(tag) if !tag.is_weak() => return Some(Inference::new(tag, f.clone())),
                _ => {}
            }
        }
    }
    None
}

/// Searches for a cut-free proof of `s`, allowing at most `fuel` weak
/// quantifier instantiations along any branch.
pub fn prove(s: &Sequent, fuel: usize) -> Option<Proof> {
    if let Some(ax) = axiom_for(s) {
        return Some(ax);
    }
    if let Some(inf) = invertible(s) {
        let premises = premises_of(s, &inf).iter().map(|p| prove(p, fuel)).collect::<Option<Vec<_>>>()?;
        return Some(Proof::new(s.clone(), inf, premises));
    }
    if fuel == 0 {
        return None;
    }
    let terms = closed_terms(s);
    let fallback = [Term::constant("k")];
    let terms: &[Term] = if terms.is_empty() { &fallback } else { &terms };
    for side in [Side::Left, Side::Right] {
        for f in s.cedent(side) {
            if RuleTag::introducing(side, f).is_some_and(RuleTag::is_weak) {
                for t in terms {
                    let inst = f.instantiate(t).expect("quantifier");
                    if s.contains(side, &inst) {
                        continue;
                    }
                    let tag = RuleTag::introducing(side, f).expect("weak");
                    let inf = Inference::with_witness(tag, f.clone(), t.clone());
                    let prem = premises_of(s, &inf).remove(0);
                    if let Some(p) = prove(&prem, fuel - 1) {
                        return Some(Proof::new(s.clone(), inf, vec![p]));
                    }
                }
            }
        }
    }
    None
}

/// Whether some cut-free proof of `s` of height at most `height` exists,
/// trying every rule on every formula and instantiating weak quantifiers
/// with the closed terms in `terms`.
pub fn exists_cut_free(s: &Sequent, height: usize, terms: &[Term]) -> bool {
    if height == 0 {
        return false;
    }
    if axiom_for(s).is_some() {
        return true;
    }
    if height == 1 {
        return false;
    }
    let mut tried = BTreeSet::new();
    for side in [Side::Left, Side::Right] {
        for f in s.cedent(side) {
            if !tried.insert((side == Side::Left, f.clone())) {
                continue;
            }
            let Some(tag) = RuleTag::introducing(side, f) else { continue };
            let infs: Vec<Inference> = if tag.is_weak() {
                terms.iter().map(|t| Inference::with_witness(tag, f.clone(), t.clone())).collect()
            } else {
                vec![Inference::new(tag, f.clone())]
            };
            for inf in infs {
                if premises_of(s, &inf).iter().all(|p| exists_cut_free(p, height - 1, terms)) {
                    return true;
                }
            }
        }
    }
    false
}
