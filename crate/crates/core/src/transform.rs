//! Structural transformations: weakening and contraction, inversion of
//! propositional and strong quantifier rules, inversion of cuts, and deep
//! replacement of terms in proofs.

use thiserror::Error;

use crate::calculus::{check_inference, Inference, Path, Proof, RuleTag, Sequent, Side};
use crate::syntax::{Expression, Formula, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("`{from}` is not included in `{to}`")]
    InclusionViolated { from: Sequent, to: Sequent },
    #[error("`{formula}` does not occur in the {side}")]
    TargetAbsent { side: Side, formula: Formula },
    #[error("{0} is a weak quantifier rule and is not invertible")]
    WeakQuantifierTarget(RuleTag),
    #[error("{tag} cannot be inverted on `{formula}`")]
    TargetShape { tag: RuleTag, formula: Formula },
    #[error("node {path:?} is not invariant under the replacement")]
    NonInvariantNode { path: Path },
}

/// A rule to invert together with the formula it introduces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InversionTarget {
    pub tag: RuleTag,
    pub formula: Formula,
}

impl InversionTarget {
    pub fn new(tag: RuleTag, formula: Formula) -> InversionTarget {
        InversionTarget { tag, formula }
    }

    fn validate(&self) -> Result<Side, TransformError> {
        if self.tag.is_weak() {
            return Err(TransformError::WeakQuantifierTarget(self.tag));
        }
        let shape = || TransformError::TargetShape { tag: self.tag, formula: self.formula.clone() };
        let side = self.tag.side().ok_or_else(shape)?;
        if RuleTag::introducing(side, &self.formula) != Some(self.tag) {
            return Err(shape());
        }
        Ok(side)
    }

    /// Formulas added to each output of the inversion.
    fn components(&self) -> Vec<Vec<(Side, Formula)>> {
        Inference::new(self.tag, self.formula.clone()).minors().expect("validated target")
    }
}

fn add_all(s: &Sequent, extra: &[(Side, Formula)]) -> Sequent {
    let mut s = s.clone();
    for (side, f) in extra {
        s = s.with(*side, f.clone());
    }
    s
}

/// Adds the formulas of `extra` to every sequent of `pi`.
fn add_everywhere(pi: &Proof, extra: &Sequent) -> Proof {
    Proof {
        conclusion: pi.conclusion.union(extra),
        inference: pi.inference.clone(),
        premises: pi.premises.iter().map(|p| add_everywhere(p, extra)).collect(),
    }
}

fn is_intro(node: &Proof, side: Side, f: &Formula) -> bool {
    node.tag().side() == Some(side) && node.principal() == f
}

/// Inversion along the trace of one occurrence of `f`: nodes introducing
/// `f` are replaced by their premises, axioms are rebuilt.
fn traced_inversion(pi: &Proof, side: Side, f: &Formula, comps: &[Vec<(Side, Formula)>]) -> Vec<Proof> {
    if is_intro(pi, side, f) && !pi.tag().is_weak() {
        return pi.premises.clone();
    }
    let base = pi.conclusion.without(side, f).expect("traced formula present");
    if pi.tag().is_axiom() {
        return comps
            .iter()
            .map(|c| Proof { conclusion: add_all(&base, c), inference: pi.inference.clone(), premises: vec![] })
            .collect();
    }
    let inverted: Vec<Vec<Proof>> = pi.premises.iter().map(|p| traced_inversion(p, side, f, comps)).collect();
    comps
        .iter()
        .enumerate()
        .map(|(i, c)| Proof {
            conclusion: add_all(&base, c),
            inference: pi.inference.clone(),
            premises: inverted.iter().map(|outs| outs[i].clone()).collect(),
        })
        .collect()
}

/// Removes one copy of `f` from the conclusion, where that copy is never
/// principal along its trace. Returns `None` otherwise.
fn strengthen(pi: &Proof, side: Side, f: &Formula) -> Option<Proof> {
    let n = pi.conclusion.count(side, f);
    let own = usize::from(is_intro(pi, side, f) || (pi.tag().is_axiom() && pi.principal() == f));
    if n <= own {
        return None;
    }
    let premises = if pi.tag().is_axiom() {
        vec![]
    } else {
        pi.premises.iter().map(|p| strengthen(p, side, f)).collect::<Option<Vec<_>>>()?
    };
    Some(Proof { conclusion: pi.conclusion.without(side, f)?, inference: pi.inference.clone(), premises })
}

/// Height-preserving contraction of one copy of `f`, which must occur at
/// least twice on `side`. The length does not increase.
pub fn contract(pi: &Proof, side: Side, f: &Formula) -> Proof {
    assert!(pi.conclusion.count(side, f) >= 2, "contraction needs two copies of {f}");
    let conclusion = pi.conclusion.without(side, f).expect("present");
    if pi.tag().is_axiom() {
        return Proof { conclusion, inference: pi.inference.clone(), premises: vec![] };
    }
    if !is_intro(pi, side, f) || pi.tag().is_weak() {
        let premises = pi.premises.iter().map(|p| contract(p, side, f)).collect();
        return Proof { conclusion, inference: pi.inference.clone(), premises };
    }
    let comps = pi.inference.minors().expect("checked node");
    let premises = pi
        .premises
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut q = traced_inversion(p, side, f, &comps).swap_remove(i);
            for (s, g) in &comps[i] {
                q = contract(&q, *s, g);
            }
            q
        })
        .collect();
    Proof { conclusion, inference: pi.inference.clone(), premises }
}

/// Contracts every formula of the conclusion to its multiplicity in
/// `target`, which must contain each formula at least once.
fn contract_to(pi: &Proof, target: &Sequent) -> Proof {
    let mut out = pi.clone();
    for side in [Side::Left, Side::Right] {
        let mut fs: Vec<Formula> = pi.conclusion.cedent(side).to_vec();
        fs.dedup();
        for f in fs {
            while out.conclusion.count(side, &f) > target.count(side, &f).max(1) {
                out = contract(&out, side, &f);
            }
        }
    }
    out
}

/// `π[Π ⇒ Λ]`: a proof of `target` from a proof of `Γ ⇒ Δ`, where every
/// formula of `Γ` (of `Δ`) occurs in `Π` (in `Λ`). When `Γ ⇒ Δ` is a
/// sub-multiset of the target the output is structurally similar to `pi`.
pub fn weaken(pi: &Proof, target: &Sequent) -> Result<Proof, TransformError> {
    if !pi.conclusion.is_supported_by(target) {
        return Err(TransformError::InclusionViolated { from: pi.conclusion.clone(), to: target.clone() });
    }
    let base = if pi.conclusion.is_sub_multiset(target) { pi.clone() } else { contract_to(pi, target) };
    let extra = target.minus(&base.conclusion);
    Ok(add_everywhere(&base, &extra))
}

/// True iff no strong quantifier rule of `pi` has the index of `c` as its
/// principal formula.
pub fn is_free_for_constant(pi: &Proof, c: &Term) -> bool {
    let Some(index) = c.henkin_index() else { return true };
    let mut free = true;
    pi.visit(&mut |_, n| free &= !(n.tag().is_strong() && n.principal() == index));
    free
}

/// Makes `pi` free for the constant of the strong rule introducing `q` on
/// `side`, adding the Henkin instance of `q` to every sequent.
fn free_for(pi: &Proof, side: Side, q: &Formula, inst: &Formula) -> Proof {
    if pi.tag().is_strong() && pi.principal() == q {
        let prem = free_for(&pi.premises[0], side, q, inst);
        let prem = contract(&prem, side, inst);
        let target = pi.conclusion.with(side, inst.clone());
        return weaken(&prem, &target).expect("premise is included in the conclusion");
    }
    Proof {
        conclusion: pi.conclusion.with(side, inst.clone()),
        inference: pi.inference.clone(),
        premises: pi.premises.iter().map(|p| free_for(p, side, q, inst)).collect(),
    }
}

/// Inverts the rule `target.tag` on one occurrence of `target.formula`.
/// Returns one proof, or two for `LImp`, `RAnd` and `LOr` (left premise
/// first). Outputs never exceed the input in length, height or cut-rank;
/// strong quantifier inversions are free for the constant of the formula.
pub fn invert(pi: &Proof, target: &InversionTarget) -> Result<Vec<Proof>, TransformError> {
    let side = target.validate()?;
    let f = &target.formula;
    if !pi.conclusion.contains(side, f) {
        return Err(TransformError::TargetAbsent { side, formula: f.clone() });
    }
    let comps = target.components();
    if target.tag.is_strong() {
        let inst = &comps[0][0].1;
        let freed = free_for(pi, side, f, inst);
        let out = strengthen(&freed, side, f).expect("no strong rule on the formula remains");
        return Ok(vec![out]);
    }
    Ok(traced_inversion(pi, side, f, &comps))
}

/// `ρ ⊢ Γ ⇒ Δ, A` and `σ ⊢ A, Γ ⇒ Δ` from `π ⊢ Γ ⇒ Δ`, with no cut on `A`
/// and heights bounded by the height of `π`.
pub fn invert_cut(pi: &Proof, a: &Formula) -> (Proof, Proof) {
    let has_cut = pi.cut_formulas().iter().any(|c| c == a);
    if !has_cut {
        let rho = add_everywhere(pi, &Sequent::new(vec![], vec![a.clone()]));
        let sigma = add_everywhere(pi, &Sequent::new(vec![a.clone()], vec![]));
        return (rho, sigma);
    }
    if pi.tag() == RuleTag::Cut && pi.principal() == a {
        let (rho1, _) = invert_cut(&pi.premises[0], a);
        let (_, sigma2) = invert_cut(&pi.premises[1], a);
        return (contract(&rho1, Side::Right, a), contract(&sigma2, Side::Left, a));
    }
    let (rhos, sigmas): (Vec<Proof>, Vec<Proof>) = pi.premises.iter().map(|p| invert_cut(p, a)).unzip();
    let rho = Proof {
        conclusion: pi.conclusion.with(Side::Right, a.clone()),
        inference: pi.inference.clone(),
        premises: rhos,
    };
    let sigma = Proof {
        conclusion: pi.conclusion.with(Side::Left, a.clone()),
        inference: pi.inference.clone(),
        premises: sigmas,
    };
    (rho, sigma)
}

fn replace_inference(inf: &Inference, r: &Term, s: &Term) -> Inference {
    Inference {
        tag: inf.tag,
        principal: inf.principal.deep_replace(r, s),
        witness: inf.witness.as_ref().map(|t| t.deep_replace(r, s)),
    }
}

/// Whether `{r/s}` maps the inference at `node` to a valid inference of the
/// same kind with the replaced principal, minor and side formulas.
pub fn is_invariant_rule(node: &Proof, r: &Term, s: &Term) -> bool {
    let conclusion = node.conclusion.deep_replace(r, s);
    let inference = replace_inference(&node.inference, r, s);
    let premises: Vec<Sequent> = node.premises.iter().map(|p| p.conclusion.deep_replace(r, s)).collect();
    check_inference(&conclusion, &inference, premises.iter()).is_ok()
}

/// The per-node form of the syntactic sufficient condition for invariance:
/// `r` is not the constant of a strong rule here, and no subterm `r′ ≠ x`
/// of the matrix with `x` free satisfies `r′_x[t] ≡ r`.
pub fn sufficient_invariance(node: &Proof, r: &Term) -> bool {
    let tag = node.tag();
    if !matches!(tag, RuleTag::LExists | RuleTag::RExists | RuleTag::LForall | RuleTag::RForall) {
        return true;
    }
    let q = node.principal();
    let Some((x, a)) = q.quantifier_parts() else { return true };
    let t = if tag.is_strong() {
        let c = q.henkin_constant().expect("closed quantifier formula");
        if &c == r {
            return false;
        }
        c
    } else {
        match &node.inference.witness {
            Some(t) => t.clone(),
            None => return true,
        }
    };
    let mut ok = true;
    a.for_each_term(&mut |sub| {
        if ok && !matches!(sub, Term::Var(v) if v == x) {
            let mut vars = Vec::new();
            sub.free_vars_into(&mut vars);
            if vars.iter().any(|v| v == x) && &sub.subst(x, &t) == r {
                ok = false;
            }
        }
    });
    ok
}

/// `π{r/s}`: deep replacement throughout a proof whose every inference is
/// invariant under it. The length is unchanged.
pub fn replace_in_proof(pi: &Proof, r: &Term, s: &Term) -> Result<Proof, TransformError> {
    let mut bad = None;
    pi.visit(&mut |path, n| {
        if bad.is_none() && !is_invariant_rule(n, r, s) {
            bad = Some(path.to_vec());
        }
    });
    if let Some(path) = bad {
        return Err(TransformError::NonInvariantNode { path });
    }
    Ok(replace_unchecked(pi, r, s))
}

pub(crate) fn replace_unchecked(pi: &Proof, r: &Term, s: &Term) -> Proof {
    Proof {
        conclusion: pi.conclusion.deep_replace(r, s),
        inference: replace_inference(&pi.inference, r, s),
        premises: pi.premises.iter().map(|p| replace_unchecked(p, r, s)).collect(),
    }
}
