//! Helpers shared by the integration tests: corpus access and random
//! generators for traces and guarded formulas.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use sapickit::frontend::SpecFile;
use sapickit::logic::{check_guarded, Trace, TraceFormula as F};
use sapickit::terms::{Fact, Term, Theory, Variable};

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(format!("{}.sapic", name))
}

pub fn load(name: &str) -> SpecFile {
    sapickit::harness::load(&corpus_path(name)).unwrap_or_else(|e| panic!("{}: {}", name, e))
}

/// Every corpus file name, sorted.
pub fn corpus_names() -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .expect("corpus directory")
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "sapic").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

/// Corpus files of the differential suite. Together they cover every
/// process construct.
pub const DIFF_CORPUS: [&str; 12] = [
    "zero",
    "pnew",
    "lock-pair",
    "internal-comm",
    "adversary-io",
    "conditional",
    "store",
    "msr-step",
    "repl-new",
    "events-par",
    "guarded-counter",
    "echo",
];

pub fn el(facts: Vec<Fact>) -> BTreeSet<Fact> {
    facts.into_iter().collect()
}

pub fn p(s: &str) -> Term {
    Term::public(s)
}

fn f(sym: &str, args: Vec<Term>) -> Fact {
    Fact::new(sym, args)
}

/// Random traces over the reserved vocabulary plus the user facts `A/1`,
/// `B/1`, and `C/0`. Most steps respect the store, lock, and input
/// discipline so that a fair share of traces satisfy every axiom; the rest
/// are arbitrary.
pub struct TraceGen<'r> {
    pub rng: &'r mut ChaCha8Rng,
    pub max_len: usize,
    pub valid_bias: f64,
}

const KEYS: [&str; 2] = ["a", "b"];
const VALUES: [&str; 2] = ["1", "2"];

impl TraceGen<'_> {
    fn pick(&mut self, xs: &[&str]) -> Term {
        p(xs.choose(self.rng).expect("non-empty"))
    }

    fn user(&mut self) -> Fact {
        match self.rng.gen_range(0..3) {
            0 => f("A", vec![self.pick(&VALUES)]),
            1 => f("B", vec![self.pick(&VALUES)]),
            _ => f("C", vec![]),
        }
    }

    pub fn trace(&mut self) -> Trace {
        let len = self.rng.gen_range(0..=self.max_len);
        let mut tr: Trace = Vec::new();
        let mut store: BTreeMap<Term, Term> = BTreeMap::new();
        let mut locks: BTreeMap<Term, Term> = BTreeMap::new();
        let mut next_label = 0;
        let mut pending_k: Option<Term> = None;
        while tr.len() < len {
            let valid = self.rng.gen_bool(self.valid_bias);
            if tr.is_empty() && self.rng.gen_bool(0.85) {
                tr.push(el(vec![f("Init", vec![])]));
                continue;
            }
            if !valid && self.rng.gen_bool(0.1) {
                tr.push(el(vec![f("Init", vec![])]));
                continue;
            }
            if let Some(t) = pending_k.take() {
                if valid {
                    tr.push(el(vec![f("InEvent", vec![t])]));
                    continue;
                }
            }
            let x = self.pick(&KEYS);
            let v = self.pick(&VALUES);
            let facts = match self.rng.gen_range(0..10) {
                0 => {
                    store.insert(x.clone(), v.clone());
                    vec![f("Insert", vec![x, v])]
                }
                1 => {
                    store.remove(&x);
                    vec![f("Delete", vec![x])]
                }
                2 => match store.get(&x) {
                    Some(w) if valid => vec![f("IsIn", vec![x.clone(), w.clone()])],
                    _ => vec![f("IsIn", vec![x, v])],
                },
                3 => {
                    if valid && store.contains_key(&x) {
                        continue;
                    }
                    let x = if valid { x } else { store.keys().next().cloned().unwrap_or(x) };
                    vec![f("IsNotSet", vec![x])]
                }
                4 => {
                    if valid && locks.contains_key(&x) {
                        continue;
                    }
                    next_label += 1;
                    let l = Term::fresh(&format!("l{}", next_label));
                    locks.insert(x.clone(), l.clone());
                    vec![f("Lock", vec![l, x])]
                }
                5 => match locks.get(&x).cloned() {
                    Some(l) if valid => {
                        locks.remove(&x);
                        vec![f("Unlock", vec![l, x])]
                    }
                    _ => {
                        let l = Term::fresh(&format!("l{}", self.rng.gen_range(1..=next_label.max(1))));
                        vec![f("Unlock", vec![l, x])]
                    }
                },
                6 => {
                    if valid {
                        vec![f("Eq", vec![v.clone(), v])]
                    } else {
                        vec![f("Eq", vec![v, self.pick(&VALUES)])]
                    }
                }
                7 => {
                    let w = self.pick(&VALUES);
                    if valid && w == v {
                        continue;
                    }
                    vec![f("NotEq", vec![v, w])]
                }
                8 => {
                    pending_k = Some(v.clone());
                    vec![f("K", vec![v])]
                }
                _ => {
                    let mut facts = vec![f("Event", vec![]), self.user()];
                    if self.rng.gen_bool(0.3) {
                        facts.push(self.user());
                    }
                    if !valid && self.rng.gen_bool(0.3) {
                        facts.push(f("InEvent", vec![v]));
                    }
                    facts
                }
            };
            tr.push(el(facts));
        }
        tr
    }

    pub fn trace_set(&mut self, max: usize) -> Vec<Trace> {
        let n = self.rng.gen_range(1..=max);
        (0..n).map(|_| self.trace()).collect()
    }
}

/// Random guarded formulas over `A/1`, `B/1`, `C/0`, and `K/1`.
pub struct FormulaGen<'r> {
    pub rng: &'r mut ChaCha8Rng,
    counter: usize,
}

impl<'r> FormulaGen<'r> {
    pub fn new(rng: &'r mut ChaCha8Rng) -> Self {
        FormulaGen { rng, counter: 0 }
    }

    fn fresh_vars(&mut self) -> (Variable, Variable) {
        self.counter += 1;
        (Variable::msg(&format!("x{}", self.counter)), Variable::temp(&format!("i{}", self.counter)))
    }

    fn guard(&mut self, x: &Variable, i: &Variable) -> (F, bool) {
        match self.rng.gen_range(0..4) {
            0 => (F::action(f("A", vec![Term::Var(x.clone())]), i), true),
            1 => (F::action(f("B", vec![Term::Var(x.clone())]), i), true),
            2 => (F::action(f("K", vec![Term::Var(x.clone())]), i), true),
            _ => (F::action(f("C", vec![]), i), false),
        }
    }

    fn atom(&mut self, msgs: &[Variable], times: &[Variable]) -> F {
        match self.rng.gen_range(0..5) {
            0 if times.len() >= 2 => {
                let (a, b) = (times.choose(self.rng).unwrap().clone(), times.choose(self.rng).unwrap().clone());
                F::Less(a, b)
            }
            1 if times.len() >= 2 => {
                let (a, b) = (times.choose(self.rng).unwrap().clone(), times.choose(self.rng).unwrap().clone());
                F::EqTime(a, b)
            }
            2 if !msgs.is_empty() => {
                let a = Term::Var(msgs.choose(self.rng).unwrap().clone());
                let b = if self.rng.gen_bool(0.5) {
                    Term::Var(msgs.choose(self.rng).unwrap().clone())
                } else {
                    p(VALUES.choose(self.rng).unwrap())
                };
                F::EqTerm(a, b)
            }
            3 if !times.is_empty() => {
                let i = times.choose(self.rng).unwrap().clone();
                let arg = match msgs.choose(self.rng) {
                    Some(x) if self.rng.gen_bool(0.7) => Term::Var(x.clone()),
                    _ => p(VALUES.choose(self.rng).unwrap()),
                };
                let sym = if self.rng.gen_bool(0.5) { "A" } else { "B" };
                F::action(f(sym, vec![arg]), &i)
            }
            _ => F::False,
        }
    }

    fn quantified(&mut self, depth: usize, msgs: &[Variable], times: &[Variable]) -> F {
        let (x, i) = self.fresh_vars();
        let (g, binds_x) = self.guard(&x, &i);
        let mut m2 = msgs.to_vec();
        if binds_x {
            m2.push(x.clone());
        }
        let mut t2 = times.to_vec();
        t2.push(i.clone());
        let body = self.body(depth.saturating_sub(1), &m2, &t2);
        let vars = if binds_x { vec![x, i] } else { vec![i] };
        if self.rng.gen_bool(0.5) {
            F::exists(vars, F::and(g, body))
        } else {
            F::forall(vars, F::implies(g, body))
        }
    }

    fn body(&mut self, depth: usize, msgs: &[Variable], times: &[Variable]) -> F {
        if depth == 0 {
            return self.atom(msgs, times);
        }
        match self.rng.gen_range(0..6) {
            0 => F::not(self.body(depth - 1, msgs, times)),
            1 => F::and(self.body(depth - 1, msgs, times), self.body(depth - 1, msgs, times)),
            2 => F::or(self.body(depth - 1, msgs, times), self.body(depth - 1, msgs, times)),
            3 | 4 => self.quantified(depth, msgs, times),
            _ => self.atom(msgs, times),
        }
    }

    /// A closed, guarded formula.
    pub fn formula(&mut self) -> F {
        loop {
            let phi = match self.rng.gen_range(0..4) {
                0 => F::not(self.quantified(3, &[], &[])),
                1 => F::and(self.quantified(2, &[], &[]), self.quantified(2, &[], &[])),
                _ => self.quantified(3, &[], &[]),
            };
            if check_guarded(&phi).is_ok() && phi.free_vars().is_empty() {
                return phi;
            }
        }
    }
}

/// A theory with symmetric encryption, used by the term generators.
pub fn senc_theory() -> Theory {
    sapickit::frontend::parse_spec(
        "theory T\nbegin\nfunctions: senc/2, sdec/2\nequations: sdec(senc(m, k), k) = m\nprocess:\n  0\nend\n",
    )
    .expect("theory parses")
    .theory
}
