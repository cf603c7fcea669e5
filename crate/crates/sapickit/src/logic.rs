//! Two-sorted first-order trace formulas and their satisfaction relation on
//! finite traces.
//!
//! Timepoints are trace indices. Message quantifiers range over the normal
//! forms of subterms occurring in the trace, which is exact for guarded
//! formulas; the guarded evaluator enumerates only witnesses of action atoms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{FormulaError, Violation};
use crate::process::is_reserved_fact;
use crate::terms::{apply_subst, normalize, DisplayVar, Fact, Sort, Substitution, Term, Theory, Variable};

/// A trace: a sequence of sets of ground facts.
pub type Trace = Vec<BTreeSet<Fact>>;

/// A trace formula.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TraceFormula {
    False,
    Action(Fact, Variable),
    Less(Variable, Variable),
    EqTime(Variable, Variable),
    EqTerm(Term, Term),
    Not(Box<TraceFormula>),
    And(Box<TraceFormula>, Box<TraceFormula>),
    Or(Box<TraceFormula>, Box<TraceFormula>),
    Implies(Box<TraceFormula>, Box<TraceFormula>),
    Exists(Variable, Box<TraceFormula>),
    Forall(Variable, Box<TraceFormula>),
}

/// Quantifier mode of a lemma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    AllTraces,
    ExistsTrace,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::AllTraces => "all-traces",
            Mode::ExistsTrace => "exists-trace",
        })
    }
}

use TraceFormula as F;

impl TraceFormula {
    pub fn not(f: F) -> F {
        F::Not(Box::new(f))
    }

    pub fn and(a: F, b: F) -> F {
        F::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: F, b: F) -> F {
        F::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: F, b: F) -> F {
        F::Implies(Box::new(a), Box::new(b))
    }

    /// Conjunction of a non-empty list (right nested).
    pub fn conj(mut items: Vec<F>) -> F {
        let mut acc = items.pop().expect("non-empty conjunction");
        while let Some(f) = items.pop() {
            acc = F::and(f, acc);
        }
        acc
    }

    /// Disjunction of a non-empty list (right nested).
    pub fn disj(mut items: Vec<F>) -> F {
        let mut acc = items.pop().expect("non-empty disjunction");
        while let Some(f) = items.pop() {
            acc = F::or(f, acc);
        }
        acc
    }

    pub fn exists(vars: Vec<Variable>, body: F) -> F {
        vars.into_iter().rev().fold(body, |b, v| F::Exists(v, Box::new(b)))
    }

    pub fn forall(vars: Vec<Variable>, body: F) -> F {
        vars.into_iter().rev().fold(body, |b, v| F::Forall(v, Box::new(b)))
    }

    pub fn action(f: Fact, i: &Variable) -> F {
        F::Action(f, i.clone())
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Variable>, out: &mut Vec<Variable>) {
        let add = |v: &Variable, bound: &Vec<Variable>, out: &mut Vec<Variable>| {
            if !bound.contains(v) && !out.contains(v) {
                out.push(v.clone());
            }
        };
        match self {
            F::False => {}
            F::Action(fact, i) => {
                fact.vars().iter().for_each(|v| add(v, bound, out));
                add(i, bound, out);
            }
            F::Less(i, j) | F::EqTime(i, j) => {
                add(i, bound, out);
                add(j, bound, out);
            }
            F::EqTerm(a, b) => a.vars().iter().chain(b.vars().iter()).for_each(|v| add(v, bound, out)),
            F::Not(a) => a.collect_free(bound, out),
            F::And(a, b) | F::Or(a, b) | F::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            F::Exists(v, b) | F::Forall(v, b) => {
                bound.push(v.clone());
                b.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Rewrites into the core connectives (⊥, atoms, ¬, ∧, ∃), removing
    /// double negations.
    pub fn to_core(&self) -> F {
        match self {
            F::Not(a) => neg(a.to_core()),
            F::And(a, b) => F::and(a.to_core(), b.to_core()),
            F::Or(a, b) => neg(F::and(neg(a.to_core()), neg(b.to_core()))),
            F::Implies(a, b) => neg(F::and(a.to_core(), neg(b.to_core()))),
            F::Exists(v, b) => F::Exists(v.clone(), Box::new(b.to_core())),
            F::Forall(v, b) => neg(F::Exists(v.clone(), Box::new(neg(b.to_core())))),
            atom => atom.clone(),
        }
    }

    /// Every fact occurring in an action atom.
    pub fn facts(&self) -> Vec<&Fact> {
        let mut out = Vec::new();
        self.visit(&mut |f| {
            if let F::Action(fact, _) = f {
                out.push(fact);
            }
        });
        out
    }

    fn visit<'a>(&'a self, g: &mut impl FnMut(&'a F)) {
        g(self);
        match self {
            F::Not(a) | F::Exists(_, a) | F::Forall(_, a) => a.visit(g),
            F::And(a, b) | F::Or(a, b) | F::Implies(a, b) => {
                a.visit(g);
                b.visit(g);
            }
            _ => {}
        }
    }
}

fn neg(f: F) -> F {
    match f {
        F::Not(inner) => *inner,
        other => F::not(other),
    }
}

/// A valuation of timepoint and message variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Valuation {
    pub times: BTreeMap<Variable, i64>,
    pub terms: Substitution,
}

/// Violations of formula well-formedness: reserved facts or variables and
/// sort errors.
pub fn check_formula_wellformed(phi: &F) -> Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    wf_rec(phi, &mut Vec::new(), &mut v);
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

fn wf_rec(phi: &F, path: &mut Vec<usize>, v: &mut Vec<Violation>) {
    let mut push = |rule: &'static str, message: String| v.push(Violation { position: path.clone(), rule, message });
    let msg_term = |t: &Term| t.vars().iter().all(|x| x.sort != Sort::Temp);
    match phi {
        F::Action(fact, i) => {
            if is_reserved_fact(&fact.symbol) {
                push("reserved", format!("reserved fact {}", fact.symbol));
            }
            if i.sort != Sort::Temp {
                push("sort", format!("{} is not a timepoint", i.text));
            }
            if !fact.args.iter().all(msg_term) {
                push("sort", format!("timepoint variable inside {}", fact));
            }
            if let Some(x) = fact.vars().iter().find(|x| x.is_reserved()) {
                push("reserved", format!("reserved variable {}", x.text));
            }
        }
        F::Less(i, j) | F::EqTime(i, j) => {
            if i.sort != Sort::Temp || j.sort != Sort::Temp {
                push("sort", format!("{} / {} compared as timepoints", i.text, j.text));
            }
        }
        F::EqTerm(a, b) => {
            if !msg_term(a) || !msg_term(b) {
                push("sort", format!("timepoint compared as message in {} = {}", a, b));
            }
            if let Some(x) = a.vars().iter().chain(b.vars().iter()).find(|x| x.is_reserved()) {
                push("reserved", format!("reserved variable {}", x.text));
            }
        }
        F::Exists(x, _) | F::Forall(x, _) if x.is_reserved() => push("reserved", format!("reserved variable {}", x.text)),
        _ => {}
    }
    let kids: Vec<&F> = match phi {
        F::Not(a) | F::Exists(_, a) | F::Forall(_, a) => vec![a],
        F::And(a, b) | F::Or(a, b) | F::Implies(a, b) => vec![a, b],
        _ => vec![],
    };
    for (i, k) in kids.into_iter().enumerate() {
        path.push(i + 1);
        wf_rec(k, path, v);
        path.pop();
    }
}

/// Rejects formulas with a message variable that occurs in no positive
/// action atom guarding its quantifier.
pub fn check_guarded(phi: &F) -> Result<(), FormulaError> {
    guarded_rec(&phi.to_core())
}

fn guarded_rec(phi: &F) -> Result<(), FormulaError> {
    match phi {
        F::Exists(..) => {
            let (vars, body) = exists_block(phi);
            let conjuncts = flatten_and(body);
            for v in vars.iter().filter(|v| v.sort != Sort::Temp) {
                let covered = conjuncts.iter().any(|c| matches!(c, F::Action(f, _) if f.vars().contains(v)));
                if !covered {
                    return Err(FormulaError::Unguarded(DisplayVar(v).to_string()));
                }
            }
            conjuncts.iter().try_for_each(|c| guarded_rec(c))
        }
        F::Not(a) => guarded_rec(a),
        F::And(a, b) => {
            guarded_rec(a)?;
            guarded_rec(b)
        }
        _ => Ok(()),
    }
}

fn exists_block(phi: &F) -> (Vec<Variable>, &F) {
    let mut vars = Vec::new();
    let mut cur = phi;
    while let F::Exists(v, b) = cur {
        vars.push(v.clone());
        cur = b;
    }
    (vars, cur)
}

fn flatten_and(phi: &F) -> Vec<&F> {
    match phi {
        F::And(a, b) => {
            let mut v = flatten_and(a);
            v.extend(flatten_and(b));
            v
        }
        other => vec![other],
    }
}

/// Normal forms of all subterms of arguments of facts in the trace.
pub fn term_universe(tr: &Trace) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for set in tr {
        for f in set {
            f.args.iter().for_each(|a| a.collect_subterms(&mut out));
        }
    }
    out
}

struct Ctx<'a> {
    tr: &'a Trace,
    th: &'a Theory,
    universe: Vec<Term>,
    extra_times: Vec<i64>,
}

/// Satisfaction of `phi` by `tr` under `theta`.
///
/// Formulas whose message quantifiers are unguarded are rejected.
pub fn satisfies(tr: &Trace, theta: &Valuation, phi: &F, th: &Theory) -> Result<bool, FormulaError> {
    check_guarded(phi)?;
    for v in phi.free_vars() {
        let bound = if v.sort == Sort::Temp { theta.times.contains_key(&v) } else { theta.terms.contains_key(&v) };
        if !bound {
            return Err(FormulaError::Unbound(DisplayVar(&v).to_string()));
        }
    }
    let ctx = Ctx {
        tr,
        th,
        universe: term_universe(tr).into_iter().map(|t| normalize(&t, th)).collect::<Result<BTreeSet<_>, _>>()?.into_iter().collect(),
        extra_times: theta.times.values().copied().collect(),
    };
    eval(&ctx, &phi.to_core(), &mut theta.clone())
}

fn eval(ctx: &Ctx, phi: &F, th: &mut Valuation) -> Result<bool, FormulaError> {
    match phi {
        F::False => Ok(false),
        F::Action(fact, i) => {
            let Some(&t) = th.times.get(i) else { return Err(FormulaError::Unbound(DisplayVar(i).to_string())) };
            if t < 0 || t as usize >= ctx.tr.len() {
                return Ok(false);
            }
            let g = fact.apply(&th.terms).normalize(ctx.th)?;
            Ok(ctx.tr[t as usize].contains(&g))
        }
        F::Less(i, j) => Ok(time(th, i)? < time(th, j)?),
        F::EqTime(i, j) => Ok(time(th, i)? == time(th, j)?),
        F::EqTerm(a, b) => {
            let a = normalize(&apply_subst(&th.terms, a), ctx.th)?;
            let b = normalize(&apply_subst(&th.terms, b), ctx.th)?;
            Ok(a == b)
        }
        F::Not(a) => Ok(!eval(ctx, a, th)?),
        F::And(a, b) => Ok(eval(ctx, a, th)? && eval(ctx, b, th)?),
        F::Exists(..) => {
            let (vars, body) = exists_block(phi);
            let conjuncts = flatten_and(body);
            let saved = th.clone();
            for v in &vars {
                th.times.remove(v);
                th.terms.remove(v);
            }
            let guards: Vec<(&Fact, &Variable)> = conjuncts
                .iter()
                .filter_map(|c| match c {
                    F::Action(f, i) => Some((f, i)),
                    _ => None,
                })
                .collect();
            let r = search(ctx, &vars, &guards, 0, &conjuncts, th);
            *th = saved;
            r
        }
        F::Or(..) | F::Implies(..) | F::Forall(..) => eval(ctx, &phi.to_core(), th),
    }
}

fn time(th: &Valuation, v: &Variable) -> Result<i64, FormulaError> {
    th.times.get(v).copied().ok_or_else(|| FormulaError::Unbound(DisplayVar(v).to_string()))
}

/// Backtracking over guard atoms, then over any remaining quantified
/// variables, then checks all conjuncts.
fn search(
    ctx: &Ctx,
    vars: &[Variable],
    guards: &[(&Fact, &Variable)],
    gi: usize,
    conjuncts: &[&F],
    th: &mut Valuation,
) -> Result<bool, FormulaError> {
    if gi < guards.len() {
        let (fact, i) = guards[gi];
        let quantified = |v: &Variable| vars.contains(v);
        let indices: Vec<usize> = match th.times.get(i) {
            Some(&t) if t >= 0 && (t as usize) < ctx.tr.len() => vec![t as usize],
            Some(_) => vec![],
            None if quantified(i) => (0..ctx.tr.len()).collect(),
            None => return Err(FormulaError::Unbound(DisplayVar(i).to_string())),
        };
        let pattern = fact.apply(&th.terms);
        let open: Vec<Variable> = pattern.vars();
        if open.iter().any(|v| !quantified(v)) {
            return Err(FormulaError::Unbound(DisplayVar(&open[0]).to_string()));
        }
        let syntactic = open.is_empty() || destructor_free(&pattern, ctx.th);
        if !syntactic {
            return search(ctx, vars, guards, gi + 1, conjuncts, th);
        }
        let pattern = if open.is_empty() { pattern.normalize(ctx.th)? } else { pattern };
        for idx in indices {
            for g in &ctx.tr[idx] {
                let mut s = Substitution::new();
                if !crate::terms::match_fact_into(&pattern, g, &mut s) {
                    continue;
                }
                let had_time = th.times.contains_key(i);
                th.times.insert(i.clone(), idx as i64);
                for (v, t) in &s {
                    th.terms.insert(v.clone(), t.clone());
                }
                let r = search(ctx, vars, guards, gi + 1, conjuncts, th)?;
                for v in s.keys() {
                    th.terms.remove(v);
                }
                if !had_time {
                    th.times.remove(i);
                }
                if r {
                    return Ok(true);
                }
            }
        }
        return Ok(false);
    }
    if let Some(v) = vars.iter().find(|v| !th.times.contains_key(*v) && !th.terms.contains_key(*v)) {
        let v = v.clone();
        if v.sort == Sort::Temp {
            let mut dom: BTreeSet<i64> = (0..ctx.tr.len() as i64).collect();
            dom.extend(ctx.extra_times.iter().copied());
            dom.extend(th.times.values().copied());
            for t in dom {
                th.times.insert(v.clone(), t);
                let r = search(ctx, vars, guards, gi, conjuncts, th)?;
                th.times.remove(&v);
                if r {
                    return Ok(true);
                }
            }
        } else {
            for t in ctx.universe.iter().filter(|t| t.sort().is_subsort_of(v.sort)) {
                th.terms.insert(v.clone(), t.clone());
                let r = search(ctx, vars, guards, gi, conjuncts, th)?;
                th.terms.remove(&v);
                if r {
                    return Ok(true);
                }
            }
        }
        return Ok(false);
    }
    for c in conjuncts {
        if !eval(ctx, c, th)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn destructor_free(f: &Fact, th: &Theory) -> bool {
    let ds = th.destructors();
    f.args.iter().all(|a| ds.iter().all(|d| !a.contains_symbol(d)))
}

/// Reference semantics: enumerates every valuation of each quantifier over
/// the finite domains (trace indices and the trace's term universe).
pub fn satisfies_brute_force(tr: &Trace, theta: &Valuation, phi: &F, th: &Theory) -> Result<bool, FormulaError> {
    let universe: Vec<Term> = term_universe(tr)
        .into_iter()
        .map(|t| normalize(&t, th))
        .collect::<Result<BTreeSet<_>, _>>()?
        .into_iter()
        .collect();
    let mut times: BTreeSet<i64> = (0..tr.len() as i64).collect();
    times.extend(theta.times.values().copied());
    brute(tr, th, &universe, &times, phi, &mut theta.clone())
}

fn brute(
    tr: &Trace,
    th: &Theory,
    universe: &[Term],
    times: &BTreeSet<i64>,
    phi: &F,
    val: &mut Valuation,
) -> Result<bool, FormulaError> {
    let r = |f: &F, val: &mut Valuation| brute(tr, th, universe, times, f, val);
    Ok(match phi {
        F::False => false,
        F::Action(fact, i) => {
            let t = time(val, i)?;
            t >= 0 && (t as usize) < tr.len() && tr[t as usize].contains(&fact.apply(&val.terms).normalize(th)?)
        }
        F::Less(i, j) => time(val, i)? < time(val, j)?,
        F::EqTime(i, j) => time(val, i)? == time(val, j)?,
        F::EqTerm(a, b) => normalize(&apply_subst(&val.terms, a), th)? == normalize(&apply_subst(&val.terms, b), th)?,
        F::Not(a) => !r(a, val)?,
        F::And(a, b) => r(a, val)? && r(b, val)?,
        F::Or(a, b) => r(a, val)? || r(b, val)?,
        F::Implies(a, b) => !r(a, val)? || r(b, val)?,
        F::Exists(v, b) | F::Forall(v, b) => {
            let want = matches!(phi, F::Exists(..));
            let saved_t = val.times.remove(v);
            let saved_m = val.terms.remove(v);
            let mut result = !want;
            if v.sort == Sort::Temp {
                for &t in times {
                    val.times.insert(v.clone(), t);
                    if r(b, val)? == want {
                        result = want;
                        break;
                    }
                }
                val.times.remove(v);
            } else {
                for t in universe.iter().filter(|t| t.sort().is_subsort_of(v.sort)) {
                    val.terms.insert(v.clone(), t.clone());
                    if r(b, val)? == want {
                        result = want;
                        break;
                    }
                }
                val.terms.remove(v);
            }
            if let Some(t) = saved_t {
                val.times.insert(v.clone(), t);
            }
            if let Some(t) = saved_m {
                val.terms.insert(v.clone(), t);
            }
            result
        }
    })
}

/// `Tr ⊨∀ φ`: every trace satisfies φ under every valuation of its free variables.
pub fn valid_for<'a>(traces: impl IntoIterator<Item = &'a Trace>, phi: &F, th: &Theory) -> Result<bool, FormulaError> {
    let closed = F::forall(phi.free_vars(), phi.clone());
    for tr in traces {
        if !satisfies(tr, &Valuation::default(), &closed, th)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `Tr ⊨∃ φ`: some trace satisfies φ under some valuation.
pub fn satisfiable_for<'a>(traces: impl IntoIterator<Item = &'a Trace>, phi: &F, th: &Theory) -> Result<bool, FormulaError> {
    let closed = F::exists(phi.free_vars(), phi.clone());
    for tr in traces {
        if satisfies(tr, &Valuation::default(), &closed, th)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Evaluates a closed formula on one trace.
pub fn holds(tr: &Trace, phi: &F, th: &Theory) -> Result<bool, FormulaError> {
    satisfies(tr, &Valuation::default(), phi, th)
}

/// Displays a formula in the surface syntax.
impl fmt::Display for TraceFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, 0)
    }
}

fn prec(phi: &F) -> u8 {
    match phi {
        F::Implies(..) => 1,
        F::Or(..) => 2,
        F::And(..) => 3,
        F::Exists(..) | F::Forall(..) => 0,
        _ => 4,
    }
}

fn write_formula(f: &mut fmt::Formatter<'_>, phi: &F, ctx: u8) -> fmt::Result {
    let p = prec(phi);
    let paren = p < ctx || (p == 0 && ctx > 0);
    if paren {
        f.write_str("(")?;
    }
    match phi {
        F::False => f.write_str("F")?,
        F::Action(fact, i) => write!(f, "{} @ {}", fact, DisplayVar(i))?,
        F::Less(i, j) => write!(f, "{} < {}", DisplayVar(i), DisplayVar(j))?,
        F::EqTime(i, j) => write!(f, "{} = {}", DisplayVar(i), DisplayVar(j))?,
        F::EqTerm(a, b) => write!(f, "{} = {}", a, b)?,
        F::Not(a) => {
            f.write_str("not ")?;
            write_formula(f, a, 4)?;
        }
        F::And(a, b) => {
            write_formula(f, a, 4)?;
            f.write_str(" & ")?;
            write_formula(f, b, 3)?;
        }
        F::Or(a, b) => {
            write_formula(f, a, 3)?;
            f.write_str(" | ")?;
            write_formula(f, b, 2)?;
        }
        F::Implies(a, b) => {
            write_formula(f, a, 2)?;
            f.write_str(" ==> ")?;
            write_formula(f, b, 1)?;
        }
        F::Exists(..) | F::Forall(..) => {
            let is_ex = matches!(phi, F::Exists(..));
            f.write_str(if is_ex { "Ex" } else { "All" })?;
            let mut cur = phi;
            loop {
                match (cur, is_ex) {
                    (F::Exists(v, b), true) | (F::Forall(v, b), false) => {
                        write!(f, " {}", DisplayVar(v))?;
                        cur = b;
                    }
                    _ => break,
                }
            }
            f.write_str(". ")?;
            write_formula(f, cur, 0)?;
        }
    }
    if paren {
        f.write_str(")")?;
    }
    Ok(())
}
