//! Seeded generators shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use lkh::calculus::{check_proof, Proof, RuleTag, Sequent, Side};
use lkh::search::prove;
use lkh::skolem::SkolemizationSpec;
use lkh::syntax::{Formula, Polarity, Term};
use lkh::transform::weaken;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type R = ChaCha8Rng;

pub fn rng(seed: u64) -> R {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(n: &str) -> Term {
    Term::constant(n)
}
pub fn v(n: &str) -> Term {
    Term::var(n)
}
pub fn p1(t: Term) -> Formula {
    Formula::atom("P", vec![t])
}
pub fn q2(a: Term, b: Term) -> Formula {
    Formula::atom("Q", vec![a, b])
}

pub fn fixture(name: &str) -> String {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures");
    std::fs::read_to_string(format!("{dir}/{name}.lkh")).unwrap()
}

pub fn fixture_proof(name: &str) -> Proof {
    let doc = lkh::text::parse(&fixture(name), Some(name)).unwrap();
    let p = doc.proofs().next().unwrap().1.clone();
    p
}

pub const FIXTURES: [&str; 6] = ["example1", "drinker", "example3", "nonpure", "witness", "counterexample"];

/// Henkin constants of ranks 1 and 2 used as terms.
pub fn henkin_pool() -> Vec<Term> {
    let all_p = Formula::forall("x", p1(v("x")));
    let ex_p = Formula::exists("x", p1(v("x")));
    let all_q = Formula::forall("x", q2(v("x"), c("k")));
    let ex_q = Formula::exists("x", q2(c("m"), v("x")));
    let a = all_p.henkin_constant().unwrap();
    let nested = Formula::exists("y", q2(a.clone(), v("y"))).henkin_constant().unwrap();
    vec![
        a,
        ex_p.henkin_constant().unwrap(),
        all_q.henkin_constant().unwrap(),
        ex_q.henkin_constant().unwrap(),
        nested,
    ]
}

fn pick<'a, T>(rng: &mut R, xs: &'a [T]) -> &'a T {
    xs.choose(rng).unwrap()
}

/// A random pure semiformula over `P/1`, `Q/2`, `S/0` with free variables
/// among `vars`.
pub fn formula_in(rng: &mut R, depth: usize, vars: &mut Vec<String>, fresh: &mut usize) -> Formula {
    let mut terms: Vec<Term> = vec![c("k"), c("m")];
    terms.extend(vars.iter().map(|x| v(x)));
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..3) {
            0 => Formula::atom("S", vec![]),
            1 => p1(pick(rng, &terms).clone()),
            _ => q2(pick(rng, &terms).clone(), pick(rng, &terms).clone()),
        };
    }
    match rng.gen_range(0..6) {
        0 => Formula::not(formula_in(rng, depth - 1, vars, fresh)),
        1 => Formula::and(formula_in(rng, depth - 1, vars, fresh), formula_in(rng, depth - 1, vars, fresh)),
        2 => Formula::or(formula_in(rng, depth - 1, vars, fresh), formula_in(rng, depth - 1, vars, fresh)),
        3 => Formula::imp(formula_in(rng, depth - 1, vars, fresh), formula_in(rng, depth - 1, vars, fresh)),
        q => {
            *fresh += 1;
            let x = format!("x{fresh}");
            vars.push(x.clone());
            let body = formula_in(rng, depth - 1, vars, fresh);
            vars.pop();
            if q == 4 {
                Formula::exists(&x, body)
            } else {
                Formula::forall(&x, body)
            }
        }
    }
}

pub fn pure_formula(rng: &mut R, depth: usize) -> Formula {
    formula_in(rng, depth, &mut Vec::new(), &mut 0)
}

/// Replaces a random subset of the ordinary occurrences of `t` in `f` by
/// the variable `x`.
fn abstract_term(rng: &mut R, f: &Formula, t: &Term, x: &str) -> Formula {
    fn term(rng: &mut R, u: &Term, t: &Term, x: &str) -> Term {
        if u == t {
            return if rng.gen_bool(0.7) { v(x) } else { u.clone() };
        }
        match u {
            Term::App(g, args) => Term::app(g, args.iter().map(|a| term(rng, a, t, x)).collect()),
            _ => u.clone(),
        }
    }
    match f {
        Formula::Atom(p, args) => Formula::atom(p, args.iter().map(|a| term(rng, a, t, x)).collect()),
        Formula::Top | Formula::Bot => f.clone(),
        Formula::Not(a) => Formula::not(abstract_term(rng, a, t, x)),
        Formula::And(a, b) => Formula::and(abstract_term(rng, a, t, x), abstract_term(rng, b, t, x)),
        Formula::Or(a, b) => Formula::or(abstract_term(rng, a, t, x), abstract_term(rng, b, t, x)),
        Formula::Imp(a, b) => Formula::imp(abstract_term(rng, a, t, x), abstract_term(rng, b, t, x)),
        Formula::Exists(y, a) => Formula::exists(y, abstract_term(rng, a, t, x)),
        Formula::Forall(y, a) => Formula::forall(y, abstract_term(rng, a, t, x)),
    }
}

fn closed_terms_of(f: &Formula) -> Vec<Term> {
    let mut out = BTreeSet::new();
    f.for_each_term(&mut |t| {
        if t.is_closed() {
            out.insert(t.clone());
        }
    });
    out.into_iter().collect()
}

/// Merges two sequents: every formula with the larger of its two
/// multiplicities.
fn merge(a: &Sequent, b: &Sequent) -> Sequent {
    a.union(&b.minus(a))
}

/// Forward proof generator: random axioms extended by random rule
/// applications, two-premise rules joining independently grown proofs.
pub struct ProofGen {
    pub rng: R,
    pool: Vec<Term>,
    fresh: usize,
    pub max_cedent: usize,
}

impl ProofGen {
    pub fn new(seed: u64) -> ProofGen {
        let mut pool = vec![c("k"), c("m")];
        pool.extend(henkin_pool());
        ProofGen { rng: rng(seed), pool, fresh: 0, max_cedent: 5 }
    }

    fn term(&mut self) -> Term {
        pick(&mut self.rng, &self.pool).clone()
    }

    fn atom(&mut self) -> Formula {
        match self.rng.gen_range(0..4) {
            0 => Formula::atom("S", vec![]),
            1 | 2 => p1(self.term()),
            _ => q2(self.term(), self.term()),
        }
    }

    pub fn axiom(&mut self) -> Proof {
        let mut ante: Vec<Formula> = (0..self.rng.gen_range(0..2)).map(|_| self.atom()).collect();
        let mut succ: Vec<Formula> = (0..self.rng.gen_range(0..2)).map(|_| self.atom()).collect();
        match self.rng.gen_range(0..10) {
            0 => {
                ante.push(Formula::Bot);
                Proof::axiom(RuleTag::AxBot, Formula::Bot, Sequent::new(ante, succ)).unwrap()
            }
            1 => {
                succ.push(Formula::Top);
                Proof::axiom(RuleTag::AxTop, Formula::Top, Sequent::new(ante, succ)).unwrap()
            }
            _ => {
                let a = self.atom();
                ante.push(a.clone());
                succ.push(a.clone());
                Proof::axiom(RuleTag::Ax, a, Sequent::new(ante, succ)).unwrap()
            }
        }
    }

    fn fits(&self, s: &Sequent) -> bool {
        s.antecedent().len() <= self.max_cedent && s.succedent().len() <= self.max_cedent
    }

    fn choose(&mut self, s: &Sequent, side: Side) -> Option<Formula> {
        s.cedent(side).choose(&mut self.rng).cloned()
    }

    fn two(&mut self, s: &Sequent, side: Side) -> Option<(Formula, Formula)> {
        let fs = s.cedent(side);
        if fs.len() < 2 {
            return None;
        }
        let picked: Vec<&Formula> = fs.choose_multiple(&mut self.rng, 2).collect();
        Some((picked[0].clone(), picked[1].clone()))
    }

    fn unary(&mut self, p: &Proof) -> Option<Proof> {
        let s = p.conclusion.clone();
        let one = |tag, f: Formula, p: &Proof| Proof::infer(tag, f, None, vec![p.clone()]).ok();
        match self.rng.gen_range(0..9) {
            0 => one(RuleTag::LNot, Formula::not(self.choose(&s, Side::Right)?), p),
            1 => one(RuleTag::RNot, Formula::not(self.choose(&s, Side::Left)?), p),
            2 => {
                let (a, b) = self.two(&s, Side::Left)?;
                one(RuleTag::LAnd, Formula::and(a, b), p)
            }
            3 => {
                let (a, b) = self.two(&s, Side::Right)?;
                one(RuleTag::ROr, Formula::or(a, b), p)
            }
            4 => {
                let a = self.choose(&s, Side::Left)?;
                let b = self.choose(&s, Side::Right)?;
                one(RuleTag::RImp, Formula::imp(a, b), p)
            }
            5 | 6 => {
                let side = if self.rng.gen_bool(0.5) { Side::Left } else { Side::Right };
                let b = self.choose(&s, side)?;
                let mut terms = closed_terms_of(&b);
                terms.push(self.term());
                let t = pick(&mut self.rng, &terms).clone();
                self.fresh += 1;
                let x = format!("v{}", self.fresh);
                let body = abstract_term(&mut self.rng, &b, &t, &x);
                let (q, tag) = match side {
                    Side::Left => (Formula::forall(&x, body), RuleTag::LForall),
                    Side::Right => (Formula::exists(&x, body), RuleTag::RExists),
                };
                let widened = weaken(p, &s.with(side, q.clone())).ok()?;
                Proof::infer(tag, q, Some(t), vec![widened]).ok()
            }
            _ => {
                for side in [Side::Right, Side::Left] {
                    for f in s.cedent(side) {
                        let mut found = None;
                        f.for_each_term(&mut |t| {
                            if found.is_none() {
                                if let Some(q) = t.henkin_index() {
                                    if q.henkin_instance().as_ref() == Some(f) {
                                        found = Some(q.clone());
                                    }
                                }
                            }
                        });
                        if let Some(q) = found {
                            let tag = RuleTag::introducing(side, &q)?;
                            if tag.is_strong() {
                                if let Ok(out) = Proof::infer(tag, q, None, vec![p.clone()]) {
                                    return Some(out);
                                }
                            }
                        }
                    }
                }
                None
            }
        }
    }

    fn binary(&mut self, p: &Proof, q: &Proof) -> Option<Proof> {
        let (ps, qs) = (&p.conclusion, &q.conclusion);
        let (tag, a, sa, b, sb) = match self.rng.gen_range(0..4) {
            0 => (RuleTag::RAnd, self.choose(ps, Side::Right)?, Side::Right, self.choose(qs, Side::Right)?, Side::Right),
            1 => (RuleTag::LOr, self.choose(ps, Side::Left)?, Side::Left, self.choose(qs, Side::Left)?, Side::Left),
            2 => (RuleTag::LImp, self.choose(ps, Side::Right)?, Side::Right, self.choose(qs, Side::Left)?, Side::Left),
            _ => {
                let a = self.choose(ps, Side::Right)?;
                (RuleTag::Cut, a.clone(), Side::Right, a, Side::Left)
            }
        };
        let ctx = merge(&ps.without(sa, &a)?, &qs.without(sb, &b)?);
        let p2 = weaken(p, &ctx.with(sa, a.clone())).ok()?;
        let q2 = weaken(q, &ctx.with(sb, b.clone())).ok()?;
        let principal = match tag {
            RuleTag::RAnd => Formula::and(a, b),
            RuleTag::LOr => Formula::or(a, b),
            RuleTag::LImp => Formula::imp(a, b),
            _ => a,
        };
        Proof::infer(tag, principal, None, vec![p2, q2]).ok()
    }

    /// A random checked proof built with about `steps` rule applications.
    pub fn proof(&mut self, steps: usize) -> Proof {
        let mut p = self.axiom();
        for _ in 0..steps {
            let next = if steps > 2 && self.rng.gen_bool(0.2) {
                let q = self.proof(steps / 3);
                self.binary(&p, &q)
            } else {
                self.unary(&p)
            };
            if let Some(n) = next {
                if self.fits(&n.conclusion) {
                    p = n;
                }
            }
        }
        check_proof(&p).expect("generated proofs check");
        p
    }
}

/// Valid pure sequents with quantifiers used as seeds of the cut corpus.
pub fn pure_valid_sequents() -> Vec<Sequent> {
    let all_p = Formula::forall("x", p1(v("x")));
    let ex_p = Formula::exists("x", p1(v("x")));
    let lem = Formula::forall("x", Formula::or(p1(v("x")), Formula::not(p1(v("x")))));
    let eyax = Formula::exists("y", Formula::forall("x", q2(v("x"), v("y"))));
    let axey = Formula::forall("x", Formula::exists("y", q2(v("x"), v("y"))));
    let drinker = Formula::exists("x", Formula::imp(p1(v("x")), all_p.clone()));
    vec![
        Sequent::new(vec![], vec![lem]),
        Sequent::new(vec![all_p.clone()], vec![ex_p.clone()]),
        Sequent::new(vec![eyax], vec![axey]),
        Sequent::new(vec![], vec![drinker]),
        Sequent::new(vec![ex_p.clone()], vec![ex_p]),
        Sequent::new(vec![all_p.clone()], vec![all_p]),
    ]
}

fn quantifier_subformulas(f: &Formula, out: &mut Vec<Formula>) {
    if f.is_quantifier() && f.is_closed() {
        out.push(f.clone());
    }
    f.for_each_term(&mut |t| {
        if let Some(q) = t.henkin_index() {
            out.push(q.clone());
        }
    });
    for c in f.children() {
        quantifier_subformulas(c, out);
    }
}

fn build_with_cuts(rng: &mut R, s: &Sequent, budget: usize) -> Option<Proof> {
    if budget == 0 {
        return prove(s, 3);
    }
    if rng.gen_bool(0.4) {
        for side in [Side::Left, Side::Right] {
            for f in s.cedent(side) {
                let Some(tag) = RuleTag::introducing(side, f) else { continue };
                if tag.is_weak() {
                    continue;
                }
                let inf = lkh::calculus::Inference::new(tag, f.clone());
                let ctx = s.without(side, f)?;
                let mut premises = Vec::new();
                for minors in inf.minors().ok()? {
                    let ps = minors.into_iter().fold(ctx.clone(), |acc, (sd, g)| acc.with(sd, g));
                    premises.push(build_with_cuts(rng, &ps, budget)?);
                }
                return Some(Proof::new(s.clone(), inf, premises));
            }
        }
    }
    let mut candidates = Vec::new();
    for f in s.formulas() {
        quantifier_subformulas(f, &mut candidates);
        if f.depth() <= 3 {
            candidates.push(f.clone());
        }
    }
    candidates.push(pure_formula(rng, 2));
    candidates.retain(|f| f.depth() <= 3 && f.is_closed());
    let cut = pick(rng, &candidates).clone();
    let left = build_with_cuts(rng, &s.with(Side::Right, cut.clone()), budget - 1)?;
    let right = build_with_cuts(rng, &s.with(Side::Left, cut.clone()), budget - 1)?;
    Some(Proof::new(s.clone(), lkh::calculus::Inference::new(RuleTag::Cut, cut), vec![left, right]))
}

/// Pure-endsequent proofs with cuts of rank 1 to 3 and height at most 12.
pub fn cut_corpus(seed: u64, count: usize) -> Vec<Proof> {
    let mut rng = rng(seed);
    let seeds = pure_valid_sequents();
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < count * 50 {
        attempts += 1;
        let s = pick(&mut rng, &seeds).clone();
        let budget = rng.gen_range(1..=3);
        let Some(p) = build_with_cuts(&mut rng, &s, budget) else { continue };
        let r = p.cut_rank();
        if (1..=3).contains(&r) && p.height() <= 12 && check_proof(&p).is_ok() {
            out.push(p);
        }
    }
    out
}

/// The Skolem specification `∀x₁..∀x_k∃y P_k(x⃗, y)` with function `f`.
pub fn witness_spec(k: usize) -> SkolemizationSpec {
    let xs: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
    let mut args: Vec<Term> = xs.iter().map(|x| v(x)).collect();
    args.push(v("y"));
    let matrix = Formula::atom("W", args);
    SkolemizationSpec::new(Polarity::Witness, xs.iter().map(|x| x.as_str().into()).collect(), "y".into(), matrix, "f".into())
        .unwrap()
}

/// A random proof of `∀x⃗W(x⃗, f(x⃗)) ⇒ ∃z⃗∃yW(z⃗, y)` free for `f`, with
/// several instantiations whose terms nest earlier Skolem terms, and
/// optionally an atomic cut on the target instance.
pub fn skolem_proof(seed: u64, k: usize) -> (Proof, SkolemizationSpec) {
    let mut rng = rng(seed);
    let spec = witness_spec(k);
    let mut pool = vec![c("k"), c("m")];
    let count = rng.gen_range(1..=3);
    let mut vectors: Vec<Vec<Term>> = Vec::new();
    for _ in 0..count {
        let s: Vec<Term> = (0..k).map(|_| pick(&mut rng, &pool).clone()).collect();
        pool.push(spec.skolem_term(s.clone()));
        vectors.push(s);
    }
    let target = vectors.last().unwrap().clone();
    let fs = spec.skolem_term(target.clone());
    let goal_atom = |zs: &[Term], y: Term| {
        let mut a = zs.to_vec();
        a.push(y);
        Formula::atom("W", a)
    };
    let zs: Vec<String> = (1..=k).map(|i| format!("z{i}")).collect();
    // Existential goal with j leading terms instantiated.
    let goal = |j: usize| {
        let mut args: Vec<Term> = target[..j].to_vec();
        args.extend(zs[j..].iter().map(|z| v(z)));
        let mut f = Formula::exists("y", goal_atom(&args, v("y")));
        for z in zs[j..].iter().rev() {
            f = Formula::exists(z, f);
        }
        f
    };
    let mut ante = vec![spec.skolemize()];
    for s in &vectors {
        for j in 1..k {
            ante.push(spec.skolem_partial(&s[..j]));
        }
        let mut full = s.clone();
        full.push(spec.skolem_term(s.clone()));
        ante.push(Formula::atom("W", full));
    }
    let leaf_atom = goal_atom(&target, fs.clone());
    let mut succ: Vec<Formula> = (0..=k).map(goal).collect();
    succ.push(leaf_atom.clone());
    let mut p = Proof::axiom(RuleTag::Ax, leaf_atom.clone(), Sequent::new(ante, succ)).unwrap();
    p = Proof::infer(RuleTag::RExists, goal(k), Some(fs), vec![p]).unwrap();
    for j in (0..k).rev() {
        p = Proof::infer(RuleTag::RExists, goal(j), Some(target[j].clone()), vec![p]).unwrap();
    }
    if rng.gen_bool(0.5) {
        let left = Proof::axiom(RuleTag::Ax, leaf_atom.clone(), p.conclusion.with(Side::Right, leaf_atom.clone())).unwrap();
        let right = weaken(&p, &p.conclusion.with(Side::Left, leaf_atom.clone())).unwrap();
        p = Proof::infer(RuleTag::Cut, leaf_atom, None, vec![left, right]).unwrap();
    }
    for s in vectors.iter().rev() {
        for j in (0..k).rev() {
            p = Proof::infer(RuleTag::LForall, spec.skolem_partial(&s[..j]), Some(s[j].clone()), vec![p]).unwrap();
        }
    }
    check_proof(&p).expect("generated Skolem proof checks");
    (p, spec)
}

/// Random propositional formula over `A`, `B`, `C` with connective depth
/// at most `depth`.
pub fn prop_formula(rng: &mut R, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..8) {
            0 => Formula::Top,
            1 => Formula::Bot,
            i => Formula::atom(["A", "B", "C"][i % 3], vec![]),
        };
    }
    let a = prop_formula(rng, depth - 1);
    match rng.gen_range(0..4) {
        0 => Formula::not(a),
        1 => Formula::and(a, prop_formula(rng, depth - 1)),
        2 => Formula::or(a, prop_formula(rng, depth - 1)),
        _ => Formula::imp(a, prop_formula(rng, depth - 1)),
    }
}

/// Truth-table evaluation, independent of the calculus.
pub fn eval(f: &Formula, val: u8) -> bool {
    match f {
        Formula::Top => true,
        Formula::Bot => false,
        Formula::Atom(p, _) => val >> (["A", "B", "C"].iter().position(|a| **a == **p).unwrap()) & 1 == 1,
        Formula::Not(a) => !eval(a, val),
        Formula::And(a, b) => eval(a, val) && eval(b, val),
        Formula::Or(a, b) => eval(a, val) || eval(b, val),
        Formula::Imp(a, b) => !eval(a, val) || eval(b, val),
        _ => unreachable!("propositional"),
    }
}

pub fn tautology(s: &Sequent) -> bool {
    (0..8u8).all(|val| s.antecedent().iter().any(|f| !eval(f, val)) || s.succedent().iter().any(|f| eval(f, val)))
}

pub fn prop_sequent(rng: &mut R) -> Sequent {
    let n = rng.gen_range(0..=2);
    let m = rng.gen_range(1..=2);
    let ante = (0..n).map(|_| prop_formula(rng, 3)).collect();
    let succ = (0..m).map(|_| prop_formula(rng, 3)).collect();
    Sequent::new(ante, succ)
}
