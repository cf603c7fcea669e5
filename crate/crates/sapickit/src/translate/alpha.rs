//! The axiom formula α, procedural checkers for its conjuncts, an
//! incremental monitor, and the trace transformations `filter` and `hide`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use crate::error::{Error, FormulaError};
use crate::logic::{check_formula_wellformed, holds, Mode, Trace, TraceFormula as F};
use crate::process::is_reserved_fact;
use crate::terms::{nf, Fact, Term, Theory, Variable};

/// Names of the seven conjuncts, in conjunction order.
pub const ALPHA_NAMES: [&str; 7] =
    ["alpha_init", "alpha_eq", "alpha_noteq", "alpha_in", "alpha_notin", "alpha_lock", "alpha_inev"];

fn m(s: &str) -> Variable {
    Variable::msg(s)
}

fn tv(s: &str) -> Variable {
    Variable::temp(s)
}

fn act(sym: &str, args: &[&Variable], i: &Variable) -> F {
    F::action(Fact::new(sym, args.iter().map(|v| Term::Var((*v).clone())).collect()), i)
}

fn lt(a: &Variable, b: &Variable) -> F {
    F::Less(a.clone(), b.clone())
}

fn teq(a: &Variable, b: &Variable) -> F {
    F::EqTime(a.clone(), b.clone())
}

/// The seven conjuncts of α as named formulas.
///
/// `alpha_inev` additionally requires the witnessing `K(t)` to precede the
/// input (`j < i`), which makes every conjunct prefix-monotone: once a trace
/// violates α, so does every extension.
pub fn alpha_conjuncts() -> Vec<(&'static str, F)> {
    let (x, y, y2, l, l2, t, t2) = (m("x"), m("y"), m("y2"), m("l"), m("l2"), m("t"), m("t2"));
    let (i, j, k, mm, t1, tt2, t3) = (tv("i"), tv("j"), tv("k"), tv("m"), tv("t1"), tv("t2"), tv("t3"));

    let init = F::forall(
        vec![i.clone(), j.clone()],
        F::implies(F::and(act("Init", &[], &i), act("Init", &[], &j)), teq(&i, &j)),
    );
    let eq_t = F::EqTerm(Term::Var(x.clone()), Term::Var(y.clone()));
    let eq = F::forall(vec![x.clone(), y.clone(), i.clone()], F::implies(act("Eq", &[&x, &y], &i), eq_t.clone()));
    let noteq =
        F::forall(vec![x.clone(), y.clone(), i.clone()], F::implies(act("NotEq", &[&x, &y], &i), F::not(eq_t)));
    let isin = F::forall(
        vec![x.clone(), y.clone(), t3.clone()],
        F::implies(
            act("IsIn", &[&x, &y], &t3),
            F::exists(
                vec![tt2.clone()],
                F::conj(vec![
                    act("Insert", &[&x, &y], &tt2),
                    lt(&tt2, &t3),
                    F::forall(
                        vec![t1.clone(), y2.clone()],
                        F::implies(
                            act("Insert", &[&x, &y2], &t1),
                            F::disj(vec![lt(&t1, &tt2), teq(&t1, &tt2), lt(&t3, &t1)]),
                        ),
                    ),
                    F::forall(
                        vec![t1.clone()],
                        F::implies(act("Delete", &[&x], &t1), F::or(lt(&t1, &tt2), lt(&t3, &t1))),
                    ),
                ]),
            ),
        ),
    );
    let notin = F::forall(
        vec![x.clone(), t3.clone()],
        F::implies(
            act("IsNotSet", &[&x], &t3),
            F::or(
                F::forall(vec![t1.clone(), y.clone()], F::implies(act("Insert", &[&x, &y], &t1), lt(&t3, &t1))),
                F::exists(
                    vec![t1.clone()],
                    F::conj(vec![
                        act("Delete", &[&x], &t1),
                        lt(&t1, &t3),
                        F::forall(
                            vec![tt2.clone(), y.clone()],
                            F::implies(F::and(act("Insert", &[&x, &y], &tt2), lt(&tt2, &t3)), lt(&tt2, &t1)),
                        ),
                    ]),
                ),
            ),
        ),
    );
    let between = |sym: &str| {
        F::forall(
            vec![l2.clone(), mm.clone()],
            F::implies(act(sym, &[&l2, &x], &mm), F::not(F::and(lt(&i, &mm), lt(&mm, &k)))),
        )
    };
    let lock = F::forall(
        vec![x.clone(), l.clone(), l2.clone(), i.clone(), j.clone()],
        F::implies(
            F::conj(vec![act("Lock", &[&l, &x], &i), act("Lock", &[&l2, &x], &j), lt(&i, &j)]),
            F::exists(
                vec![k.clone()],
                F::conj(vec![
                    act("Unlock", &[&l, &x], &k),
                    lt(&i, &k),
                    lt(&k, &j),
                    between("Lock"),
                    between("Unlock"),
                ]),
            ),
        ),
    );
    let inev = F::forall(
        vec![t.clone(), i.clone()],
        F::implies(
            act("InEvent", &[&t], &i),
            F::exists(
                vec![j.clone()],
                F::conj(vec![
                    act("K", &[&t], &j),
                    lt(&j, &i),
                    F::forall(vec![k.clone()], F::implies(act("Event", &[], &k), F::or(lt(&k, &j), lt(&i, &k)))),
                    F::forall(
                        vec![k.clone(), t2.clone()],
                        F::implies(act("K", &[&t2], &k), F::disj(vec![lt(&k, &j), lt(&i, &k), teq(&k, &j)])),
                    ),
                ]),
            ),
        ),
    );
    vec![
        ("alpha_init", init),
        ("alpha_eq", eq),
        ("alpha_noteq", noteq),
        ("alpha_in", isin),
        ("alpha_notin", notin),
        ("alpha_lock", lock),
        ("alpha_inev", inev),
    ]
}

/// α as one conjunction, built once and shared.
pub fn build_alpha() -> &'static F {
    static ALPHA: OnceLock<F> = OnceLock::new();
    ALPHA.get_or_init(|| F::conj(alpha_conjuncts().into_iter().map(|(_, f)| f).collect()))
}

/// `⟦φ⟧∀ = α ⇒ φ` and `⟦φ⟧∃ = α ∧ φ`.
pub fn translate_formula(phi: &F, mode: Mode) -> Result<F, Error> {
    check_formula_wellformed(phi).map_err(|v| {
        Error::Formula(FormulaError::IllFormed(v.iter().map(|v| v.message.clone()).collect::<Vec<_>>().join("; ")))
    })?;
    let alpha = build_alpha().clone();
    Ok(match mode {
        Mode::AllTraces => F::implies(alpha, phi.clone()),
        Mode::ExistsTrace => F::and(alpha, phi.clone()),
    })
}

/// Keeps the traces that satisfy α, using the generic evaluator.
pub fn filter(traces: &[Trace], th: &Theory) -> Result<Vec<Trace>, FormulaError> {
    let alpha = build_alpha();
    let mut out = Vec::new();
    for tr in traces {
        if holds(tr, alpha, th)? {
            out.push(tr.clone());
        }
    }
    Ok(out)
}

/// Removes reserved facts and then empty elements.
pub fn hide_trace(tr: &Trace) -> Trace {
    tr.iter()
        .map(|el| el.iter().filter(|f| !is_reserved_fact(&f.symbol)).cloned().collect::<BTreeSet<Fact>>())
        .filter(|el| !el.is_empty())
        .collect()
}

/// `hide` applied to every trace.
pub fn hide(traces: &[Trace]) -> Vec<Trace> {
    traces.iter().map(hide_trace).collect()
}

/// Arguments of the facts named `sym` in an element, normalized.
fn args_of<'a>(el: &'a BTreeSet<Fact>, sym: &'a str, th: &'a Theory) -> impl Iterator<Item = Vec<Term>> + 'a {
    el.iter().filter(move |f| &*f.symbol == sym).map(move |f| f.args.iter().map(|a| nf(a, th)).collect())
}

fn has(el: &BTreeSet<Fact>, sym: &str) -> bool {
    el.iter().any(|f| &*f.symbol == sym)
}

/// At most one element carries `Init()`.
pub fn check_init(tr: &Trace) -> bool {
    tr.iter().filter(|el| el.iter().any(|f| &*f.symbol == "Init" && f.args.is_empty())).count() <= 1
}

/// Every `Eq(x,y)` has `x =_E y`.
pub fn check_eq(tr: &Trace, th: &Theory) -> bool {
    tr.iter().all(|el| args_of(el, "Eq", th).all(|a| a.len() != 2 || a[0] == a[1]))
}

/// Every `NotEq(x,y)` has `x ≠_E y`.
pub fn check_noteq(tr: &Trace, th: &Theory) -> bool {
    tr.iter().all(|el| args_of(el, "NotEq", th).all(|a| a.len() != 2 || a[0] != a[1]))
}

fn inserts_at(el: &BTreeSet<Fact>, x: &Term, th: &Theory) -> Vec<Term> {
    args_of(el, "Insert", th).filter(|a| a.len() == 2 && &a[0] == x).map(|a| a[1].clone()).collect()
}

fn deletes_at(el: &BTreeSet<Fact>, x: &Term, th: &Theory) -> bool {
    args_of(el, "Delete", th).any(|a| a.len() == 1 && &a[0] == x)
}

/// Every `IsIn(x,y)` at `t3` is preceded by a latest insert of `x` that
/// includes `y`, with no delete of `x` from that insert up to `t3`.
pub fn check_in(tr: &Trace, th: &Theory) -> bool {
    for (t3, el) in tr.iter().enumerate() {
        for a in args_of(el, "IsIn", th) {
            if a.len() != 2 {
                continue;
            }
            let (x, y) = (&a[0], &a[1]);
            if !inserts_at(el, x, th).is_empty() || deletes_at(el, x, th) {
                return false;
            }
            let last = (0..t3).rev().find(|&t| !inserts_at(&tr[t], x, th).is_empty());
            let Some(t2) = last else { return false };
            if !inserts_at(&tr[t2], x, th).contains(y) || (t2..t3).any(|t| deletes_at(&tr[t], x, th)) {
                return false;
            }
        }
    }
    true
}

/// Every `IsNotSet(x)` at `t3` has no insert of `x` up to `t3`, or a delete
/// of `x` strictly after every insert of `x` before `t3`.
pub fn check_notin(tr: &Trace, th: &Theory) -> bool {
    for (t3, el) in tr.iter().enumerate() {
        for a in args_of(el, "IsNotSet", th) {
            if a.len() != 1 {
                continue;
            }
            let x = &a[0];
            let never = (0..=t3).all(|t| inserts_at(&tr[t], x, th).is_empty());
            let last_ins = (0..t3).rev().find(|&t| !inserts_at(&tr[t], x, th).is_empty());
            let deleted = match last_ins {
                Some(t2) => (t2 + 1..t3).any(|t| deletes_at(&tr[t], x, th)),
                None => (0..t3).any(|t| deletes_at(&tr[t], x, th)),
            };
            if !never && !deleted {
                return false;
            }
        }
    }
    true
}

/// Between a lock on `x` and any later lock on `x`, the first element with
/// lock events on `x` contains the matching unlock and no lock.
pub fn check_lock(tr: &Trace, th: &Theory) -> bool {
    let locks = |el: &BTreeSet<Fact>, x: &Term| -> Vec<Term> {
        args_of(el, "Lock", th).filter(|a| a.len() == 2 && &a[1] == x).map(|a| a[0].clone()).collect()
    };
    let unlocks = |el: &BTreeSet<Fact>, x: &Term| -> Vec<Term> {
        args_of(el, "Unlock", th).filter(|a| a.len() == 2 && &a[1] == x).map(|a| a[0].clone()).collect()
    };
    for (i, el) in tr.iter().enumerate() {
        let targets: BTreeSet<Term> = args_of(el, "Lock", th).filter(|a| a.len() == 2).map(|a| a[1].clone()).collect();
        for x in targets {
            let Some(j) = (i + 1..tr.len()).find(|&j| !locks(&tr[j], &x).is_empty()) else { continue };
            let k0 = (i + 1..=j).find(|&k| !locks(&tr[k], &x).is_empty() || !unlocks(&tr[k], &x).is_empty()).unwrap();
            if k0 == j {
                return false;
            }
            let un = unlocks(&tr[k0], &x);
            if !locks(el, &x).iter().all(|l| un.contains(l)) {
                return false;
            }
        }
    }
    true
}

/// Every `InEvent(t)` at `i` has `K(t)` in the last `K` element `j < i`, and
/// no `Event()` in `j..=i` and no `K` in `i`.
pub fn check_inev(tr: &Trace, th: &Theory) -> bool {
    for (i, el) in tr.iter().enumerate() {
        for a in args_of(el, "InEvent", th) {
            if has(el, "Event") || has(el, "K") {
                return false;
            }
            let Some(j) = (0..i).rev().find(|&j| has(&tr[j], "K")) else { return false };
            if !args_of(&tr[j], "K", th).any(|k| k == a) || (j..i).any(|k| has(&tr[k], "Event")) {
                return false;
            }
        }
    }
    true
}

/// Conjunction of the procedural checkers.
pub fn check_alpha_procedural(tr: &Trace, th: &Theory) -> bool {
    check_init(tr)
        && check_eq(tr, th)
        && check_noteq(tr, th)
        && check_in(tr, th)
        && check_notin(tr, th)
        && check_lock(tr, th)
        && check_inev(tr, th)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Slot {
    DeletedOnly,
    Inserted { values: BTreeSet<Term>, del_same: bool, del_after: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum LockSlot {
    Held(BTreeSet<Term>),
    Poisoned,
}

/// Incremental α: feeds trace elements one at a time and reports the first
/// violation. Since α is prefix-monotone, a violated prefix can be pruned.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlphaMonitor {
    init: bool,
    store: BTreeMap<Term, Slot>,
    locks: BTreeMap<Term, LockSlot>,
    last_k: Option<BTreeSet<Term>>,
    event_since: bool,
}

impl AlphaMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Values currently stored under `x`, if a lookup would succeed.
    pub fn stored(&self, x: &Term) -> Vec<Term> {
        match self.store.get(x) {
            Some(Slot::Inserted { values, del_same: false, del_after: false }) => values.iter().cloned().collect(),
            _ => Vec::new(),
        }
    }

    /// Appends an element; returns `false` if the extended trace violates α.
    /// On violation the monitor is left in an unspecified state.
    pub fn step(&mut self, el: &BTreeSet<Fact>, th: &Theory) -> bool {
        // Init.
        if el.iter().any(|f| &*f.symbol == "Init" && f.args.is_empty()) {
            if self.init {
                return false;
            }
            self.init = true;
        }
        if !check_eq(&vec![el.clone()], th) || !check_noteq(&vec![el.clone()], th) {
            return false;
        }
        // Store lookups against the state before this element.
        for a in args_of(el, "IsIn", th) {
            if a.len() == 2 {
                let ok = matches!(self.store.get(&a[0]), Some(Slot::Inserted { values, del_same: false, del_after: false }) if values.contains(&a[1]));
                if !ok || !inserts_at(el, &a[0], th).is_empty() || deletes_at(el, &a[0], th) {
                    return false;
                }
            }
        }
        for a in args_of(el, "IsNotSet", th) {
            if a.len() == 1 {
                let ok = match self.store.get(&a[0]) {
                    None => inserts_at(el, &a[0], th).is_empty(),
                    Some(Slot::DeletedOnly) => true,
                    Some(Slot::Inserted { del_after, .. }) => *del_after,
                };
                if !ok {
                    return false;
                }
            }
        }
        // Store updates.
        let mut keys: BTreeSet<Term> = args_of(el, "Insert", th).filter(|a| a.len() == 2).map(|a| a[0].clone()).collect();
        keys.extend(args_of(el, "Delete", th).filter(|a| a.len() == 1).map(|a| a[0].clone()));
        for x in keys {
            let ins = inserts_at(el, &x, th);
            let del = deletes_at(el, &x, th);
            if !ins.is_empty() {
                self.store.insert(x, Slot::Inserted { values: ins.into_iter().collect(), del_same: del, del_after: false });
            } else {
                match self.store.get_mut(&x) {
                    None => {
                        self.store.insert(x, Slot::DeletedOnly);
                    }
                    Some(Slot::Inserted { del_after, .. }) => *del_after = true,
                    Some(Slot::DeletedOnly) => {}
                }
            }
        }
        // Locks.
        let mut targets: BTreeMap<Term, (BTreeSet<Term>, BTreeSet<Term>)> = BTreeMap::new();
        for a in args_of(el, "Lock", th).filter(|a| a.len() == 2) {
            targets.entry(a[1].clone()).or_default().0.insert(a[0].clone());
        }
        for a in args_of(el, "Unlock", th).filter(|a| a.len() == 2) {
            targets.entry(a[1].clone()).or_default().1.insert(a[0].clone());
        }
        for (x, (ls, us)) in targets {
            let next = match self.locks.remove(&x) {
                None if ls.is_empty() => None,
                None => Some(LockSlot::Held(ls)),
                Some(_) if !ls.is_empty() => return false,
                Some(LockSlot::Poisoned) => Some(LockSlot::Poisoned),
                Some(LockSlot::Held(held)) if held.is_subset(&us) => None,
                Some(LockSlot::Held(_)) => Some(LockSlot::Poisoned),
            };
            if let Some(s) = next {
                self.locks.insert(x, s);
            }
        }
        // Input timing.
        let ks: BTreeSet<Term> = args_of(el, "K", th).filter(|a| a.len() == 1).map(|a| a[0].clone()).collect();
        let event = has(el, "Event");
        let inputs: Vec<Vec<Term>> = args_of(el, "InEvent", th).collect();
        if !inputs.is_empty() {
            if event || !ks.is_empty() || self.event_since {
                return false;
            }
            let Some(last) = &self.last_k else { return false };
            if !inputs.iter().all(|a| a.len() == 1 && last.contains(&a[0])) {
                return false;
            }
        }
        if !ks.is_empty() {
            self.last_k = Some(ks);
            self.event_since = event;
        } else if event {
            self.event_since = true;
        }
        true
    }

    /// Applies `g` to every term held by the monitor.
    pub fn map_terms(&self, g: &mut impl FnMut(&Term) -> Term) -> AlphaMonitor {
        let set = |xs: &BTreeSet<Term>, g: &mut dyn FnMut(&Term) -> Term| xs.iter().map(|t| g(t)).collect::<BTreeSet<Term>>();
        let mut store = BTreeMap::new();
        for (k, v) in &self.store {
            let v = match v {
                Slot::DeletedOnly => Slot::DeletedOnly,
                Slot::Inserted { values, del_same, del_after } => {
                    Slot::Inserted { values: set(values, g), del_same: *del_same, del_after: *del_after }
                }
            };
            store.insert(g(k), v);
        }
        let mut locks = BTreeMap::new();
        for (k, v) in &self.locks {
            let v = match v {
                LockSlot::Held(ls) => LockSlot::Held(set(ls, g)),
                LockSlot::Poisoned => LockSlot::Poisoned,
            };
            locks.insert(g(k), v);
        }
        let last_k = self.last_k.as_ref().map(|ks| set(ks, g));
        AlphaMonitor { init: self.init, store, locks, last_k, event_since: self.event_since }
    }

    /// Runs the monitor over a whole trace.
    pub fn accepts(tr: &Trace, th: &Theory) -> bool {
        let mut mon = AlphaMonitor::new();
        tr.iter().all(|el| mon.step(el, th))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(facts: Vec<Fact>) -> BTreeSet<Fact> {
        facts.into_iter().collect()
    }

    fn p(s: &str) -> Term {
        Term::public(s)
    }

    #[test]
    fn seven_conjuncts() {
        assert_eq!(alpha_conjuncts().len(), 7);
    }

    #[test]
    fn init_twice_violates() {
        let th = Theory::new();
        let one = vec![el(vec![Fact::new("Init", vec![])])];
        let two = vec![el(vec![Fact::new("Init", vec![])]), el(vec![Fact::new("Init", vec![])])];
        assert!(holds(&one, build_alpha(), &th).unwrap());
        assert!(!holds(&two, build_alpha(), &th).unwrap());
        assert!(!check_init(&two));
    }

    #[test]
    fn lookup_after_delete_fails() {
        let th = Theory::new();
        let tr = vec![
            el(vec![Fact::new("Insert", vec![p("a"), p("b")])]),
            el(vec![Fact::new("Delete", vec![p("a")])]),
            el(vec![Fact::new("IsIn", vec![p("a"), p("b")])]),
        ];
        assert!(!holds(&tr, build_alpha(), &th).unwrap());
        assert!(!check_in(&tr, &th));
        assert!(!AlphaMonitor::accepts(&tr, &th));
    }

    #[test]
    fn input_needs_a_preceding_k() {
        let th = Theory::new();
        let ok = vec![el(vec![Fact::new("K", vec![p("c")])]), el(vec![Fact::new("InEvent", vec![p("c")])])];
        let bad = vec![el(vec![Fact::new("InEvent", vec![p("c")])]), el(vec![Fact::new("K", vec![p("c")])])];
        for (tr, want) in [(ok, true), (bad, false)] {
            assert_eq!(holds(&tr, build_alpha(), &th).unwrap(), want);
            assert_eq!(check_inev(&tr, &th), want);
            assert_eq!(AlphaMonitor::accepts(&tr, &th), want);
        }
    }

    #[test]
    fn hide_drops_reserved_facts_and_empty_elements() {
        let tr = vec![
            el(vec![Fact::new("Init", vec![])]),
            el(vec![Fact::new("Event", vec![]), Fact::new("A", vec![])]),
        ];
        assert_eq!(hide_trace(&tr), vec![el(vec![Fact::new("A", vec![])])]);
        assert!(hide_trace(&vec![el(vec![Fact::new("Init", vec![])])]).is_empty());
    }
}
