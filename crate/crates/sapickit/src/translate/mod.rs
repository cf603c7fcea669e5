//! Translation of processes into multiset rewrite rules, the axiom formula
//! that filters msr traces, and the trace transformations `filter` and `hide`.

mod alpha;
mod emit;

pub use alpha::{
    alpha_conjuncts, build_alpha, check_alpha_procedural, check_inev, check_init, check_eq, check_in, check_lock,
    check_noteq, check_notin, filter, hide, hide_trace, translate_formula, AlphaMonitor, ALPHA_NAMES,
};
pub use emit::{emit_theory, parse_theory, TheoryFile};

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::Error;
use crate::msr::{MsrRule, MsrSystem};
use crate::process::{annotate, check_patterns, check_wellformed, Process};
use crate::terms::{Fact, Name, Sort, Term, Theory, Variable};

/// The adversary rules for a theory. Private function symbols get no
/// application rule.
pub fn md_rules(th: &Theory) -> Vec<MsrRule> {
    let x = Term::var("x");
    let mut rules = vec![
        MsrRule::new("MDOut", vec![Fact::new("Out", vec![x.clone()])], vec![], vec![Fact::persistent("K", vec![x.clone()])]),
        MsrRule::new(
            "MDIn",
            vec![Fact::persistent("K", vec![x.clone()])],
            vec![Fact::new("K", vec![x.clone()])],
            vec![Fact::new("In", vec![x])],
        ),
        MsrRule::new("MDPub", vec![], vec![], vec![Fact::persistent("K", vec![Term::var_sorted("x", Sort::Pub)])]),
        MsrRule::new(
            "MDFresh",
            vec![Fact::new("Fr", vec![Term::var_sorted("x", Sort::Fresh)])],
            vec![],
            vec![Fact::persistent("K", vec![Term::var_sorted("x", Sort::Fresh)])],
        ),
    ];
    for f in th.public_functions() {
        let xs: Vec<Term> = (1..=f.arity).map(|i| Term::var(&format!("x{}", i))).collect();
        rules.push(MsrRule::new(
            format!("MDAppl_{}", f.name),
            xs.iter().map(|x| Fact::persistent("K", vec![x.clone()])).collect(),
            vec![],
            vec![Fact::persistent("K", vec![Term::app(&f.name, xs.clone())])],
        ));
    }
    rules
}

/// Position digits used in fact and rule names; the root is `0`.
pub fn position_digits(pos: &[usize]) -> String {
    if pos.is_empty() {
        "0".to_string()
    } else {
        pos.iter().map(|d| d.to_string()).collect()
    }
}

/// Symbol of the state fact at a position.
pub fn state_symbol(pos: &[usize]) -> String {
    format!("state_{}", position_digits(pos))
}

/// Symbol of the semi-state fact at a position.
pub fn semistate_symbol(pos: &[usize]) -> String {
    format!("statesemi_{}", position_digits(pos))
}

/// The variable standing for a bound name.
pub fn name_var(a: &Name) -> Variable {
    Variable::new(&format!("n_{}", a.text), Sort::Fresh)
}

/// The variable standing for the label of a lock.
pub fn lock_var(l: u32) -> Variable {
    Variable::new(&format!("lock_{}", l), Sort::Fresh)
}

/// Translates a well-formed process into `MD ∪ {Init} ∪ ⟦P⟧`.
///
/// State facts list the bound variables with the most recently bound first.
/// Replication turns the linear state of `!P` into a persistent state for
/// `P`, so `state_p` is persistent exactly when the parent of `p` is a
/// replication.
pub fn translate(p: &Process, th: &Theory) -> Result<MsrSystem, Error> {
    check_wellformed(p).map_err(Error::IllFormed)?;
    check_patterns(p, th).map_err(Error::IllFormed)?;
    let ann = annotate(p).map_err(|e| Error::Input(e.to_string()))?;
    let mut rules = md_rules(th);
    rules.push(MsrRule::new("Init", vec![], vec![Fact::new("Init", vec![])], vec![Fact::new(&state_symbol(&[]), vec![])]));
    let mut t = Translator { rules: Vec::new() };
    t.go(ann.process(), &mut Vec::new(), &[], false);
    rules.extend(t.rules);
    Ok(MsrSystem::new(Arc::new(th.clone()), rules))
}

struct Translator {
    rules: Vec<MsrRule>,
}

/// Replaces bound names by their variables.
fn vt(t: &Term) -> Term {
    t.map_names(&mut |n| if n.sort == Sort::Fresh { Term::Var(name_var(n)) } else { Term::Name(n.clone()) })
}

fn vf(f: &Fact) -> Fact {
    f.map_terms(vt)
}

/// Prepends the variables of `terms` not yet in `xs`, in order of occurrence.
fn bind(xs: &[Term], terms: &[&Term]) -> Vec<Term> {
    let mut new = Vec::new();
    for t in terms {
        t.collect_vars(&mut new);
    }
    let mut seen: BTreeSet<Term> = xs.iter().cloned().collect();
    let mut out: Vec<Term> = new.into_iter().map(Term::Var).filter(|v| seen.insert(v.clone())).collect();
    out.extend(xs.iter().cloned());
    out
}

impl Translator {
    fn state(&self, pos: &[usize], xs: &[Term], persistent: bool) -> Fact {
        Fact { symbol: state_symbol(pos).into(), args: xs.to_vec(), persistent }
    }

    fn rule(&mut self, pos: &[usize], kind: &str, l: Vec<Fact>, a: Vec<Fact>, r: Vec<Fact>) {
        self.rules.push(MsrRule::new(format!("p_{}_{}", position_digits(pos), kind), l, a, r));
    }

    /// Emits the rules for the process at `pos`; `pers` tells whether its
    /// state fact is persistent.
    fn go(&mut self, p: &Process, pos: &mut Vec<usize>, xs: &[Term], pers: bool) {
        let here = self.state(pos, xs, pers);
        let child = |pos: &Vec<usize>, i: usize| {
            let mut c = pos.clone();
            c.push(i);
            c
        };
        match p {
            // Only the root gets a rule; an inner 0 leaves an inert state fact.
            Process::Zero if pos.is_empty() => self.rule(pos, "zero", vec![here], vec![], vec![]),
            Process::Zero => {}
            Process::Par(a, b) => {
                let (p1, p2) = (child(pos, 1), child(pos, 2));
                let r = vec![self.state(&p1, xs, false), self.state(&p2, xs, false)];
                self.rule(pos, "par", vec![here], vec![], r);
                self.descend(a, pos, 1, xs, false);
                self.descend(b, pos, 2, xs, false);
            }
            Process::Repl(a) => {
                let r = vec![self.state(&child(pos, 1), xs, true)];
                self.rule(pos, "repl", vec![here], vec![], r);
                self.descend(a, pos, 1, xs, true);
            }
            Process::New(a, q) => {
                let v = Term::Var(name_var(a));
                let ys = bind(xs, &[&v]);
                let r = vec![self.state(&child(pos, 1), &ys, false)];
                self.rule(pos, "new", vec![here, Fact::new("Fr", vec![v.clone()])], vec![Fact::new("ProtoNonce", vec![v])], r);
                self.descend(q, pos, 1, &ys, false);
            }
            Process::Out(None, n, q) => {
                let next = self.state(&child(pos, 1), xs, false);
                self.rule(pos, "out", vec![here], vec![], vec![Fact::new("Out", vec![vt(n)]), next]);
                self.descend(q, pos, 1, xs, false);
            }
            Process::In(None, n, q) => {
                let n = vt(n);
                let ys = bind(xs, &[&n]);
                let next = self.state(&child(pos, 1), &ys, false);
                self.rule(
                    pos,
                    "in",
                    vec![here, Fact::new("In", vec![n.clone()])],
                    vec![Fact::new("InEvent", vec![n])],
                    vec![next],
                );
                self.descend(q, pos, 1, &ys, false);
            }
            Process::Out(Some(m), n, q) => {
                let (m, n) = (vt(m), vt(n));
                let next = self.state(&child(pos, 1), xs, false);
                let semi = Fact::new(&semistate_symbol(pos), xs.to_vec());
                self.rule(
                    pos,
                    "out",
                    vec![here.clone(), Fact::new("In", vec![m.clone()])],
                    vec![Fact::new("InEvent", vec![m.clone()])],
                    vec![Fact::new("Out", vec![n.clone()]), next.clone()],
                );
                self.rule(pos, "outmsg", vec![here], vec![], vec![Fact::new("Msg", vec![m.clone(), n.clone()]), semi.clone()]);
                self.rule(pos, "outack", vec![semi, Fact::new("Ack", vec![m, n])], vec![], vec![next]);
                self.descend(q, pos, 1, xs, false);
            }
            Process::In(Some(m), n, q) => {
                let (m, n) = (vt(m), vt(n));
                let ys = bind(xs, &[&n]);
                let next = self.state(&child(pos, 1), &ys, false);
                let mn = Term::pair(m.clone(), n.clone());
                self.rule(
                    pos,
                    "in",
                    vec![here.clone(), Fact::new("In", vec![mn.clone()])],
                    vec![Fact::new("InEvent", vec![mn])],
                    vec![next.clone()],
                );
                self.rule(
                    pos,
                    "inmsg",
                    vec![here, Fact::new("Msg", vec![m.clone(), n.clone()])],
                    vec![],
                    vec![next, Fact::new("Ack", vec![m, n])],
                );
                self.descend(q, pos, 1, &ys, false);
            }
            Process::If(m, n, a, b) => {
                let (m, n) = (vt(m), vt(n));
                let (s1, s2) = (self.state(&child(pos, 1), xs, false), self.state(&child(pos, 2), xs, false));
                self.rule(pos, "ifeq", vec![here.clone()], vec![Fact::new("Eq", vec![m.clone(), n.clone()])], vec![s1]);
                self.rule(pos, "ifneq", vec![here], vec![Fact::new("NotEq", vec![m, n])], vec![s2]);
                self.descend(a, pos, 1, xs, false);
                self.descend(b, pos, 2, xs, false);
            }
            Process::Event(f, q) => {
                let r = vec![self.state(&child(pos, 1), xs, false)];
                self.rule(pos, "event", vec![here], vec![Fact::new("Event", vec![]), vf(f)], r);
                self.descend(q, pos, 1, xs, false);
            }
            Process::Insert(m, n, q) => {
                let r = vec![self.state(&child(pos, 1), xs, false)];
                self.rule(pos, "insert", vec![here], vec![Fact::new("Insert", vec![vt(m), vt(n)])], r);
                self.descend(q, pos, 1, xs, false);
            }
            Process::Delete(m, q) => {
                let r = vec![self.state(&child(pos, 1), xs, false)];
                self.rule(pos, "delete", vec![here], vec![Fact::new("Delete", vec![vt(m)])], r);
                self.descend(q, pos, 1, xs, false);
            }
            Process::Lookup(m, v, a, b) => {
                let m = vt(m);
                let vv = Term::Var(v.clone());
                let ys = bind(xs, &[&vv]);
                let s1 = self.state(&child(pos, 1), &ys, false);
                let s2 = self.state(&child(pos, 2), xs, false);
                self.rule(pos, "lookup", vec![here.clone()], vec![Fact::new("IsIn", vec![m.clone(), vv])], vec![s1]);
                self.rule(pos, "lookupelse", vec![here], vec![Fact::new("IsNotSet", vec![m])], vec![s2]);
                self.descend(a, pos, 1, &ys, false);
                self.descend(b, pos, 2, xs, false);
            }
            Process::Lock(m, l, q) => {
                let lv = Term::Var(lock_var(l.expect("annotated lock")));
                let ys = bind(xs, &[&lv]);
                let r = vec![self.state(&child(pos, 1), &ys, false)];
                self.rule(
                    pos,
                    "lock",
                    vec![Fact::new("Fr", vec![lv.clone()]), here],
                    vec![Fact::new("Lock", vec![lv, vt(m)])],
                    r,
                );
                self.descend(q, pos, 1, &ys, false);
            }
            Process::Unlock(m, l, q) => {
                let lv = Term::Var(lock_var(l.expect("annotated unlock")));
                let r = vec![self.state(&child(pos, 1), xs, false)];
                self.rule(pos, "unlock", vec![here], vec![Fact::new("Unlock", vec![lv, vt(m)])], r);
                self.descend(q, pos, 1, xs, false);
            }
            Process::MsrStep(l, a, r, q) => {
                let l: Vec<Fact> = l.iter().map(vf).collect();
                let terms: Vec<&Term> = l.iter().flat_map(|f| f.args.iter()).collect();
                let ys = bind(xs, &terms);
                let mut prem = vec![here];
                prem.extend(l.iter().cloned());
                let mut acts = vec![Fact::new("Event", vec![])];
                acts.extend(a.iter().map(vf));
                let mut concl: Vec<Fact> = r.iter().map(vf).collect();
                concl.push(self.state(&child(pos, 1), &ys, false));
                self.rule(pos, "msr", prem, acts, concl);
                self.descend(q, pos, 1, &ys, false);
            }
        }
    }

    fn descend(&mut self, q: &Process, pos: &mut Vec<usize>, i: usize, xs: &[Term], pers: bool) {
        pos.push(i);
        self.go(q, pos, xs, pers);
        pos.pop();
    }
}
