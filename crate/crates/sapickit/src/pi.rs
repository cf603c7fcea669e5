//! Bounded executor for the operational semantics of processes.
//!
//! Structural steps (removing `0`, splitting `|`, `new`, and conditionals)
//! are applied eagerly since they emit no label and commute with every other
//! step. Replication is unfolded on demand: a step may use a process of the
//! configuration, a process of one fresh copy of a replicated body, or for
//! communication two such processes. States are deduplicated up to renaming
//! of allocated names.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::adversary::{shuffle, AdversaryView, Bounds};
use crate::logic::Trace;
use crate::msr::{canonicalize_trace, Renumber};
use crate::process::Process;
use crate::terms::{match_fact_into, nf, syntactic_match, Fact, FactMultiset, Name, Substitution, Term, Theory};

/// How many nested replications one step may unfold.
const UNFOLD_DEPTH: usize = 3;

/// Offset separating the names of two copies unfolded in the same step.
const SECOND_COPY: usize = 1_000_000;

/// A configuration: store, fact multisets, running processes, adversary
/// outputs, and held locks. Processes are kept sorted and replicated
/// processes occur once.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    pub store: BTreeMap<Term, Term>,
    pub facts: FactMultiset,
    pub persistent: BTreeSet<Fact>,
    pub procs: Vec<Process>,
    pub outputs: BTreeSet<Term>,
    pub locks: BTreeSet<Term>,
}

impl Config {
    fn tidy(&mut self) {
        self.procs.sort();
        let mut seen = BTreeSet::new();
        self.procs.retain(|p| !matches!(p, Process::Repl(_)) || seen.insert(p.clone()));
    }

    /// Names allocated by `new` that occur in the configuration.
    pub fn fresh_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut add = |t: &Term| t.collect_names(&mut out);
        self.store.iter().for_each(|(k, v)| {
            add(k);
            add(v)
        });
        self.facts.iter().for_each(|(f, _)| f.args.iter().for_each(&mut add));
        self.persistent.iter().for_each(|f| f.args.iter().for_each(&mut add));
        self.outputs.iter().for_each(&mut add);
        self.locks.iter().for_each(&mut add);
        for p in &self.procs {
            out.extend(p.names());
        }
        out.retain(crate::msr::is_allocated);
        out
    }
}

/// A reachable state: the trace so far and the configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PiState {
    pub trace: Trace,
    pub config: Config,
    /// Silent steps since the last label.
    pub silent: usize,
}

/// A transition: `label` is `None` for silent steps.
#[derive(Debug, Clone)]
pub struct PiStep {
    pub label: Option<BTreeSet<Fact>>,
    pub state: PiState,
}

/// Result of a bounded exploration.
#[derive(Debug, Clone, Default)]
pub struct PiExploration {
    /// Traces of all visited states, canonically renamed.
    pub traces: BTreeSet<Trace>,
    pub states: usize,
    /// Why the exploration may have missed traces, if it did.
    pub truncated: Option<String>,
}

/// A copy of a replicated body with its eager steps done.
#[derive(Debug, Clone)]
struct Copy {
    procs: Vec<Process>,
    fresh: usize,
}

/// The step relation over configurations.
pub struct PiEngine<'a> {
    th: &'a Theory,
    view: &'a AdversaryView,
    bounds: Bounds,
    truncated: std::cell::RefCell<Option<String>>,
}

impl<'a> PiEngine<'a> {
    pub fn new(view: &'a AdversaryView, bounds: &Bounds) -> Self {
        PiEngine { th: view.theory(), view, bounds: *bounds, truncated: Default::default() }
    }

    fn flag(&self, why: String) {
        self.truncated.borrow_mut().get_or_insert(why);
    }

    /// Why some successor sets were incomplete, if any were.
    pub fn truncated(&self) -> Option<String> {
        self.truncated.borrow().clone()
    }

    /// The state running `p` with empty store, facts, and trace.
    pub fn initial(&self, p: &Process) -> PiState {
        let mut fresh = 0;
        let mut config = Config::default();
        self.settle(vec![p.clone()], &mut fresh, &mut config.procs);
        config.tidy();
        canonical(PiState { trace: Vec::new(), config, silent: 0 })
    }

    /// Applies the structural steps until every process is blocked on an
    /// action or is a replication.
    fn settle(&self, mut pending: Vec<Process>, fresh: &mut usize, out: &mut Vec<Process>) {
        while let Some(p) = pending.pop() {
            match p {
                Process::Zero => {}
                Process::Par(a, b) => {
                    pending.push(*a);
                    pending.push(*b);
                }
                Process::New(a, q) => {
                    *fresh += 1;
                    pending.push(q.rename_name(&a, &Name::fresh(&fresh.to_string())));
                }
                Process::If(m, n, a, b) => {
                    pending.push(if nf(&m, self.th) == nf(&n, self.th) { *a } else { *b });
                }
                other => out.push(other),
            }
        }
    }

    /// Copies of a replicated body, each possibly unfolding one nested
    /// replication further.
    fn unfold(&self, body: &Process, fresh: usize, depth: usize) -> Vec<Copy> {
        let mut n = fresh;
        let mut procs = Vec::new();
        self.settle(vec![body.clone()], &mut n, &mut procs);
        let mut out = vec![Copy { procs: procs.clone(), fresh: n }];
        if depth > 1 {
            for q in &procs {
                if let Process::Repl(inner) = q {
                    for c in self.unfold(inner, n, depth - 1) {
                        let mut ps = procs.clone();
                        ps.extend(c.procs);
                        out.push(Copy { procs: ps, fresh: c.fresh });
                    }
                }
            }
        }
        out
    }

    /// Successors of a state. Visible successors beyond the label bound are
    /// omitted.
    pub fn successors(&self, st: &PiState) -> Vec<PiStep> {
        let cfg = &st.config;
        let base_fresh = max_allocated(st);
        if let Some(step) = self.eager(st, base_fresh) {
            return vec![step];
        }
        let acting = |ps: &[Process], i: usize| !matches!(ps[i], Process::Repl(_));
        let mut out = Vec::new();
        let bodies: Vec<&Process> =
            cfg.procs.iter().filter_map(|p| if let Process::Repl(b) = p { Some(&**b) } else { None }).collect();
        let copies: Vec<Copy> = bodies.iter().flat_map(|b| self.unfold(b, base_fresh, UNFOLD_DEPTH)).collect();
        let nbase = cfg.procs.len();

        // Single actions.
        for i in (0..nbase).filter(|&i| acting(&cfg.procs, i)) {
            self.act(st, &cfg.procs, i, base_fresh, &mut out);
        }
        for c in &copies {
            let all: Vec<Process> = cfg.procs.iter().chain(&c.procs).cloned().collect();
            for i in (nbase..all.len()).filter(|&i| acting(&all, i)) {
                self.act(st, &all, i, c.fresh, &mut out);
            }
        }

        // Internal communication.
        for i in 0..nbase {
            for j in 0..nbase {
                if i != j && acting(&cfg.procs, i) && acting(&cfg.procs, j) {
                    self.comm(st, &cfg.procs, i, j, base_fresh, &mut out);
                }
            }
        }
        for c in &copies {
            let all: Vec<Process> = cfg.procs.iter().chain(&c.procs).cloned().collect();
            for i in 0..all.len() {
                for j in 0..all.len() {
                    if i != j && (i >= nbase || j >= nbase) && acting(&all, i) && acting(&all, j) {
                        self.comm(st, &all, i, j, c.fresh, &mut out);
                    }
                }
            }
        }
        if copies.iter().any(|c| c.procs.iter().any(|p| matches!(p, Process::Out(Some(_), ..)))) {
            let seconds: Vec<Copy> =
                bodies.iter().flat_map(|b| self.unfold(b, base_fresh + SECOND_COPY, UNFOLD_DEPTH)).collect();
            for c1 in &copies {
                for c2 in &seconds {
                    let mut all: Vec<Process> = cfg.procs.clone();
                    all.extend(c1.procs.iter().cloned());
                    let mid = all.len();
                    all.extend(c2.procs.iter().cloned());
                    for i in nbase..mid {
                        for j in mid..all.len() {
                            if acting(&all, i) && acting(&all, j) {
                                self.comm(st, &all, i, j, c2.fresh, &mut out);
                                self.comm(st, &all, j, i, c2.fresh, &mut out);
                            }
                        }
                    }
                }
            }
        }

        // Standalone adversary knowledge.
        match self.view.standalone(&cfg.outputs, &st.trace) {
            Ok(ts) => {
                for t in ts {
                    let label = [Fact::new("K", vec![t])].into_iter().collect();
                    self.push(st, Some(label), cfg.clone(), &mut out);
                }
            }
            Err(e) => self.flag(e.to_string()),
        }
        shuffle(&mut out, self.bounds.seed);
        out
    }

    /// A silent store or lock step that no other live process can interfere
    /// with. Taking it alone loses no visible trace, since every other step
    /// commutes with it.
    fn eager(&self, st: &PiState, fresh: usize) -> Option<PiStep> {
        let procs = &st.config.procs;
        for (i, p) in procs.iter().enumerate() {
            let (kind, m) = match p {
                Process::Out(None, ..) => {
                    let mut out = Vec::new();
                    self.act(st, procs, i, fresh, &mut out);
                    return out.pop();
                }
                Process::Lookup(m, ..) => (Access::Read, m),
                Process::Insert(m, ..) | Process::Delete(m, ..) => (Access::Write, m),
                Process::Lock(m, ..) | Process::Unlock(m, ..) => (Access::Lock, m),
                _ => continue,
            };
            let cell = nf(m, self.th);
            let mut ops = Vec::new();
            for (j, q) in procs.iter().enumerate() {
                if j != i {
                    accesses(q, &BTreeSet::new(), &mut ops);
                }
            }
            if ops.iter().any(|(k, t, bound)| kind.conflicts(*k) && may_equal(t, &cell, bound, self.th)) {
                continue;
            }
            let mut out = Vec::new();
            self.act(st, procs, i, fresh, &mut out);
            if let Some(step) = out.pop() {
                return Some(step);
            }
        }
        None
    }

    /// Drops processes that can only read the store and then stop. Their
    /// steps are silent and invisible to every other process.
    fn prune(&self, config: &mut Config) {
        if !config.procs.iter().any(|p| matches!(p, Process::Lookup(..))) {
            return;
        }
        let procs = std::mem::take(&mut config.procs);
        let mut writes = Vec::new();
        for p in &procs {
            accesses(p, &BTreeSet::new(), &mut writes);
        }
        writes.retain(|(k, _, _)| *k == Access::Write);
        let kept = procs.iter().filter(|p| !inert(p, &config.store, &writes, self.th)).cloned().collect();
        config.procs = kept;
    }

    /// Records a successor unless it exceeds the label bound.
    fn push(&self, st: &PiState, label: Option<BTreeSet<Fact>>, mut config: Config, out: &mut Vec<PiStep>) {
        self.prune(&mut config);
        config.tidy();
        let mut trace = st.trace.clone();
        let silent = match &label {
            Some(l) => {
                trace.push(l.clone());
                0
            }
            None => st.silent + 1,
        };
        if trace.len() > self.bounds.max_visible {
            return;
        }
        out.push(PiStep { label, state: canonical(PiState { trace, config, silent }) });
    }

    /// Config with the processes of `all` except those at `skip`.
    fn without(&self, st: &PiState, all: &[Process], skip: &[usize]) -> Config {
        let mut c = st.config.clone();
        c.procs = all.iter().enumerate().filter(|(i, _)| !skip.contains(i)).map(|(_, p)| p.clone()).collect();
        c
    }

    fn act(&self, st: &PiState, all: &[Process], i: usize, fresh: usize, out: &mut Vec<PiStep>) {
        let th = self.th;
        let mut c = self.without(st, all, &[i]);
        let mut n = fresh;
        match &all[i] {
            Process::Out(None, msg, p) => {
                c.outputs.insert(nf(msg, th));
                self.settle(vec![(**p).clone()], &mut n, &mut c.procs);
                self.push(st, None, c, out);
            }
            Process::Out(Some(m), msg, p) => {
                let ch = nf(m, th);
                if self.view.knows(&c.outputs, &ch) {
                    c.outputs.insert(nf(msg, th));
                    self.settle(vec![(**p).clone()], &mut n, &mut c.procs);
                    self.push(st, Some(k_label(ch)), c, out);
                }
            }
            Process::In(m, pat, p) => {
                let pattern = match m {
                    Some(m) => Term::pair(nf(m, th), norm_pattern(pat, th)),
                    None => norm_pattern(pat, th),
                };
                match self.view.instances(&c.outputs, &pattern) {
                    Ok(taus) => {
                        for tau in taus {
                            let t = nf(&crate::terms::apply_subst(&tau, &pattern), th);
                            let mut c2 = c.clone();
                            let mut n2 = n;
                            let before = c2.procs.len();
                            self.settle(vec![p.apply(&tau)], &mut n2, &mut c2.procs);
                            let label = k_label(t);
                            if self.view.unobserved(&st.trace, &label) && fusable(&c2.procs[before..]) {
                                self.fused(st, label, c2, before, n2, out);
                            } else {
                                self.push(st, Some(label), c2, out);
                            }
                        }
                    }
                    Err(e) => self.flag(e.to_string()),
                }
            }
            Process::Event(f, p) => {
                let f = f.map_terms(|t| nf(t, th));
                self.settle(vec![(**p).clone()], &mut n, &mut c.procs);
                self.push(st, Some([f].into_iter().collect()), c, out);
            }
            Process::Insert(m, v, p) => {
                c.store.insert(nf(m, th), nf(v, th));
                self.settle(vec![(**p).clone()], &mut n, &mut c.procs);
                self.push(st, None, c, out);
            }
            Process::Delete(m, p) => {
                c.store.remove(&nf(m, th));
                self.settle(vec![(**p).clone()], &mut n, &mut c.procs);
                self.push(st, None, c, out);
            }
            Process::Lookup(m, x, p, q) => {
                let next = match c.store.get(&nf(m, th)) {
                    Some(v) if v.sort().is_subsort_of(x.sort) => {
                        let s: Substitution = [(x.clone(), v.clone())].into_iter().collect();
                        p.apply(&s)
                    }
                    Some(_) => return,
                    None => (**q).clone(),
                };
                self.settle(vec![next], &mut n, &mut c.procs);
                self.push(st, None, c, out);
            }
            Process::Lock(m, _, p) => {
                let t = nf(m, th);
                if c.locks.insert(t) {
                    self.settle(vec![(**p).clone()], &mut n, &mut c.procs);
                    self.push(st, None, c, out);
                }
            }
            Process::Unlock(m, _, p) => {
                c.locks.remove(&nf(m, th));
                self.settle(vec![(**p).clone()], &mut n, &mut c.procs);
                self.push(st, None, c, out);
            }
            Process::MsrStep(l, a, r, p) => {
                let mut matches = Vec::new();
                match_facts(l, &c, &Substitution::new(), th, &mut matches);
                for (s, mut c2) in matches {
                    for f in r {
                        let f = f.apply(&s).map_terms(|t| nf(t, th));
                        if f.persistent {
                            c2.persistent.insert(f);
                        } else {
                            c2.facts.insert(f);
                        }
                    }
                    let label: BTreeSet<Fact> = a.iter().map(|f| f.apply(&s).map_terms(|t| nf(t, th))).collect();
                    let mut n2 = n;
                    self.settle(vec![p.apply(&s)], &mut n2, &mut c2.procs);
                    self.push(st, if label.is_empty() { None } else { Some(label) }, c2, out);
                }
            }
            _ => {}
        }
    }

    /// An input the dedup view cannot see, taken together with the next
    /// step of the process it released. The input only needs knowledge,
    /// which never shrinks, so it can always be delayed until that step.
    fn fused(&self, st: &PiState, label: BTreeSet<Fact>, c: Config, first: usize, fresh: usize, out: &mut Vec<PiStep>) {
        let mut trace = st.trace.clone();
        trace.push(label);
        if trace.len() >= self.bounds.max_visible {
            return;
        }
        let procs = c.procs.clone();
        let mid = PiState { trace, config: c, silent: 0 };
        for j in first..procs.len() {
            self.act(&mid, &procs, j, fresh, out);
        }
    }

    fn comm(&self, st: &PiState, all: &[Process], o: usize, i: usize, fresh: usize, out: &mut Vec<PiStep>) {
        let (Process::Out(Some(m1), msg, p), Process::In(Some(m2), pat, q)) = (&all[o], &all[i]) else { return };
        let th = self.th;
        if nf(m1, th) != nf(m2, th) {
            return;
        }
        let Some(tau) = syntactic_match(&norm_pattern(pat, th), &nf(msg, th)) else { return };
        let mut c = self.without(st, all, &[o, i]);
        let mut n = fresh;
        self.settle(vec![(**p).clone(), q.apply(&tau)], &mut n, &mut c.procs);
        self.push(st, None, c, out);
    }
}

/// Whether the next steps of `procs` are local: store, lock, and event
/// steps, which never synchronise with another process.
fn fusable(procs: &[Process]) -> bool {
    !procs.is_empty()
        && procs.iter().all(|p| {
            matches!(
                p,
                Process::Lookup(..)
                    | Process::Insert(..)
                    | Process::Delete(..)
                    | Process::Lock(..)
                    | Process::Unlock(..)
                    | Process::Event(..)
                    | Process::Out(None, ..)
            )
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Access {
    Read,
    Write,
    Lock,
}

impl Access {
    fn conflicts(self, other: Access) -> bool {
        match (self, other) {
            (Access::Lock, Access::Lock) => true,
            (Access::Lock, _) | (_, Access::Lock) => false,
            (Access::Read, Access::Read) => false,
            _ => true,
        }
    }
}

/// Store and lock accesses anywhere in `p`, with the names bound by `new`
/// above each access.
fn accesses<'p>(p: &'p Process, bound: &BTreeSet<Name>, out: &mut Vec<(Access, &'p Term, BTreeSet<Name>)>) {
    let mut bound = bound.clone();
    match p {
        Process::Lookup(m, ..) => out.push((Access::Read, m, bound.clone())),
        Process::Insert(m, ..) | Process::Delete(m, ..) => out.push((Access::Write, m, bound.clone())),
        Process::Lock(m, ..) | Process::Unlock(m, ..) => out.push((Access::Lock, m, bound.clone())),
        Process::New(n, _) => {
            bound.insert(n.clone());
        }
        _ => {}
    }
    for c in p.children() {
        accesses(c, &bound, out);
    }
}

/// Whether some instance of `t` could normalize to the ground term `c`.
/// Variables, names bound by `new`, and rewritable symbols match anything.
fn may_equal(t: &Term, c: &Term, bound: &BTreeSet<Name>, th: &Theory) -> bool {
    match t {
        Term::Var(v) => c.sort().is_subsort_of(v.sort),
        Term::Name(n) => bound.contains(n) || t == c,
        Term::App(f, args) => {
            if th.is_destructor(f) {
                return true;
            }
            match c {
                Term::App(g, cargs) if f == g && args.len() == cargs.len() => {
                    args.iter().zip(cargs).all(|(a, b)| may_equal(a, b, bound, th))
                }
                _ => false,
            }
        }
    }
}

/// Whether `p` can only take silent reads and conditionals before it stops
/// or blocks forever. Cells nobody can write have their current value;
/// other lookups may take either branch with any value.
fn inert(p: &Process, store: &BTreeMap<Term, Term>, writes: &[(Access, &Term, BTreeSet<Name>)], th: &Theory) -> bool {
    match p {
        Process::Zero => true,
        Process::Par(a, b) => inert(a, store, writes, th) && inert(b, store, writes, th),
        Process::New(_, q) => inert(q, store, writes, th),
        Process::If(m, n, a, b) => {
            if m.is_ground() && n.is_ground() {
                let q = if nf(m, th) == nf(n, th) { a } else { b };
                inert(q, store, writes, th)
            } else {
                inert(a, store, writes, th) && inert(b, store, writes, th)
            }
        }
        Process::Lookup(m, x, a, b) => {
            let stable = m.is_ground() && {
                let cell = nf(m, th);
                !writes.iter().any(|(_, t, bound)| may_equal(t, &cell, bound, th))
            };
            if !stable {
                return inert(a, store, writes, th) && inert(b, store, writes, th);
            }
            match store.get(&nf(m, th)) {
                Some(v) if v.sort().is_subsort_of(x.sort) => {
                    let s: Substitution = [(x.clone(), v.clone())].into_iter().collect();
                    inert(&a.apply(&s), store, writes, th)
                }
                Some(_) => true,
                None => inert(b, store, writes, th),
            }
        }
        _ => false,
    }
}

fn k_label(t: Term) -> BTreeSet<Fact> {
    [Fact::new("K", vec![t])].into_iter().collect()
}

fn norm_pattern(t: &Term, th: &Theory) -> Term {
    if t.is_ground() {
        return nf(t, th);
    }
    match t {
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| norm_pattern(a, th)).collect()),
        other => other.clone(),
    }
}

/// Matches fact patterns against the configuration, consuming linear facts.
fn match_facts(pats: &[Fact], c: &Config, s: &Substitution, th: &Theory, out: &mut Vec<(Substitution, Config)>) {
    let Some((first, rest)) = pats.split_first() else {
        out.push((s.clone(), c.clone()));
        return;
    };
    let pat = first.apply(s).map_terms(|t| norm_pattern(t, th));
    let cands: Vec<Fact> = if pat.persistent {
        c.persistent.iter().filter(|f| f.symbol == pat.symbol).cloned().collect()
    } else {
        c.facts.iter().filter(|(f, _)| f.symbol == pat.symbol).map(|(f, _)| f.clone()).collect()
    };
    for f in cands {
        let mut s2 = s.clone();
        if !match_fact_into(&pat, &f, &mut s2) {
            continue;
        }
        let mut c2 = c.clone();
        if !pat.persistent {
            c2.facts.remove_one(&f);
        }
        match_facts(rest, &c2, &s2, th, out);
    }
}

/// Largest allocated name in a state.
fn max_allocated(st: &PiState) -> usize {
    let mut names = st.config.fresh_names();
    for el in &st.trace {
        for f in el {
            f.args.iter().for_each(|a| a.collect_names(&mut names));
        }
    }
    names.iter().filter(|n| crate::msr::is_allocated(n)).filter_map(|n| n.text.parse().ok()).max().unwrap_or(0)
}

/// Renames allocated names by first visit: trace, then configuration.
fn canonical(st: PiState) -> PiState {
    let mut rn = Renumber::default();
    let trace = rn.trace(&st.trace);
    let c = &st.config;
    let outputs = c.outputs.iter().map(|t| rn.term(t)).collect();
    let store = c.store.iter().map(|(k, v)| (rn.term(k), rn.term(v))).collect();
    let facts = c.facts.map_terms(|t| rn.term(t));
    let persistent = c.persistent.iter().map(|f| rn.fact(f)).collect();
    let locks = c.locks.iter().map(|t| rn.term(t)).collect();
    let procs = c.procs.iter().map(|p| p.map_terms(&mut |t| rn.term(t))).collect();
    let mut config = Config { store, facts, persistent, procs, outputs, locks };
    config.tidy();
    PiState { trace, config, silent: st.silent }
}

/// Breadth-first search from `p`; `visit` sees every new state and stops
/// the search by returning `false`.
pub fn explore_pi_with(
    p: &Process,
    view: &AdversaryView,
    bounds: &Bounds,
    visit: &mut dyn FnMut(&PiState) -> bool,
) -> PiExploration {
    let eng = PiEngine::new(view, bounds);
    let root = eng.initial(p);
    let key = |s: &PiState| (view.trace_key(&s.trace), s.config.clone());
    let mut visited: HashMap<(Trace, Config), (usize, usize)> = HashMap::new();
    visited.insert(key(&root), (0, 0));
    let mut queue = VecDeque::from([root]);
    let mut truncated = None;
    'search: while let Some(st) = queue.pop_front() {
        if !visit(&st) {
            break;
        }
        if st.trace.len() >= bounds.max_visible {
            continue;
        }
        for step in eng.successors(&st) {
            let s = step.state;
            let k = key(&s);
            if s.silent > bounds.max_silent {
                if !visited.contains_key(&k) {
                    truncated.get_or_insert_with(|| "silent step bound reached".to_string());
                }
                continue;
            }
            match visited.get(&k) {
                Some(&(v, sl)) if v <= s.trace.len() && sl <= s.silent => continue,
                _ => {}
            }
            if visited.len() >= bounds.state_cap {
                truncated.get_or_insert_with(|| "state cap reached".to_string());
                break 'search;
            }
            visited.insert(k, (s.trace.len(), s.silent));
            queue.push_back(s);
        }
    }
    PiExploration { traces: BTreeSet::new(), states: visited.len(), truncated: truncated.or_else(|| eng.truncated()) }
}

/// Explores `p` and returns the canonically renamed traces of all reached
/// states.
pub fn explore_pi(p: &Process, view: &AdversaryView, bounds: &Bounds) -> PiExploration {
    let mut traces = BTreeSet::new();
    let mut res = explore_pi_with(p, view, bounds, &mut |s| {
        traces.insert(s.trace.clone());
        true
    });
    res.traces = traces.iter().map(canonicalize_trace).collect();
    res
}

/// Follows random transitions for at most `steps` steps. `choose(n)` picks
/// one of `n` successors. Returns the visited states, starting with the
/// initial one.
pub fn random_walk(
    p: &Process,
    view: &AdversaryView,
    bounds: &Bounds,
    steps: usize,
    choose: &mut dyn FnMut(usize) -> usize,
) -> Vec<PiState> {
    let eng = PiEngine::new(view, bounds);
    let mut path = vec![eng.initial(p)];
    for _ in 0..steps {
        let succ = eng.successors(path.last().expect("initial state"));
        if succ.is_empty() {
            break;
        }
        let k = choose(succ.len()) % succ.len();
        path.push(succ.into_iter().nth(k).expect("chosen successor").state);
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::AdversaryMode;
    use crate::frontend::parse_process;
    use std::sync::Arc;

    fn engine_for(src: &str) -> (Process, AdversaryView, Bounds) {
        let th = Theory::new();
        let p = parse_process(src, &th).unwrap();
        let bounds = Bounds { max_visible: 4, ..Bounds::default() };
        let view = AdversaryView::new(Arc::new(th), p.public_names(), &bounds, AdversaryMode::Silent);
        (p, view, bounds)
    }

    fn traces(src: &str) -> BTreeSet<Trace> {
        let (p, view, bounds) = engine_for(src);
        explore_pi(&p, &view, &bounds).traces
    }

    #[test]
    fn unshared_store_step_is_taken_alone() {
        let (p, view, bounds) = engine_for("insert 'a', 'b'; event A() | event B()");
        let eng = PiEngine::new(&view, &bounds);
        let succ = eng.successors(&eng.initial(&p));
        assert_eq!(succ.len(), 1);
        assert!(succ[0].label.is_none());
        assert_eq!(succ[0].state.config.store.len(), 1);
    }

    #[test]
    fn conflicting_store_steps_interleave() {
        let (p, view, bounds) = engine_for("insert 'a', 'b'; event A() | lookup 'a' as v in event B(v) else event C()");
        let eng = PiEngine::new(&view, &bounds);
        assert!(eng.successors(&eng.initial(&p)).len() > 1);
        let ts = traces("insert 'a', 'b'; event A() | lookup 'a' as v in event B(v) else event C()");
        let first: BTreeSet<String> = ts.iter().filter(|t| !t.is_empty()).map(|t| t[0].iter().next().unwrap().symbol.to_string()).collect();
        assert_eq!(first, ["A", "B", "C"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn inert_lookups_are_dropped() {
        let (p, view, bounds) = engine_for("insert 'a', '1'; event A() | lookup 'a' as v in 0");
        let eng = PiEngine::new(&view, &bounds);
        for s in eng.successors(&eng.initial(&p)) {
            assert!(!s.state.config.procs.iter().any(|q| matches!(q, Process::Lookup(..))));
        }
    }

    #[test]
    fn lock_blocks_until_unlock() {
        let with = traces("(lock 'l'; event A(); unlock 'l') | (lock 'l'; event B(); unlock 'l')");
        let without = traces("(lock 'l'; event A()) | (lock 'l'; event B())");
        assert_eq!(with.len(), 5);
        assert_eq!(without.len(), 3);
        assert!(without.is_subset(&with));
    }

    #[test]
    fn implicit_channel_output_is_silent() {
        let ts = traces("new n; out(n); event Done()");
        assert_eq!(ts.len(), 2);
        assert!(ts.iter().all(|t| t.iter().flatten().all(|f| &*f.symbol == "Done")));
    }

    #[test]
    fn private_channel_communication_is_internal() {
        let ts = traces("new c; (out(c, 'm') | in(c, x); event Got(x))");
        let got = Fact::new("Got", vec![Term::public("m")]);
        assert!(ts.iter().any(|t| t.len() == 1 && t[0].contains(&got)));
    }

    #[test]
    fn replication_allocates_distinct_names() {
        let ts = traces("!(new n; event C(n))");
        let longest = ts.iter().max_by_key(|t| t.len()).unwrap();
        assert_eq!(longest.len(), 4);
        let names: BTreeSet<&Term> = longest.iter().flatten().map(|f| &f.args[0]).collect();
        assert_eq!(names.len(), 4);
    }
}
