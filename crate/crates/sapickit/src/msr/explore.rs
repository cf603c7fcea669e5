//! Bounded exploration of translated systems.
//!
//! The reduced explorer runs administrative rules in bulk. Eager rules fire
//! to a fixpoint after every step. Lazy rules fire only when a premise of
//! another rule needs one of their conclusions. α is tracked incrementally
//! and violating prefixes are pruned, so the explorer yields the hidden
//! traces of the filtered trace set directly.
//!
//! The reference explorer fires every protocol rule as an explicit step,
//! keeps raw traces, and filters and hides them at the end.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use crate::adversary::{shuffle, AdversaryView, Bounds};
use crate::error::Error;
use crate::logic::{term_universe, Trace};
use crate::terms::{apply_subst, match_fact_into, nf, Fact, Substitution, Term, Theory, Variable};
use crate::translate::{filter, hide_trace, AlphaMonitor};

use super::rules::{is_adversary_rule, MsrSystem, RuleClass};
use super::state::{applicable, fire, fresh_premise, match_premises, norm_fact_pattern, norm_pattern, Instance, MsrState};
use super::{canonicalize_trace, Renumber};

/// How the explorer treats protocol rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Eager and lazy rules fire implicitly; α prunes on the fly.
    #[default]
    Reduced,
    /// Every protocol rule is an explicit step; α filters at the end.
    None,
}

/// Result of a bounded exploration.
#[derive(Debug, Clone, Default)]
pub struct MsrExploration {
    /// Hidden traces, canonically renamed.
    pub traces: BTreeSet<Trace>,
    /// Number of distinct states visited.
    pub states: usize,
    /// Why the exploration may have missed traces, if it did.
    pub truncated: Option<String>,
    /// Unfiltered raw traces, canonically renamed; filled only by the
    /// reference explorer.
    pub raw: BTreeSet<Trace>,
}

/// A run of the generic semantics.
#[derive(Debug, Clone, Default)]
pub struct MsrRun {
    /// States before and after every step.
    pub states: Vec<MsrState>,
    pub instances: Vec<Instance>,
    /// Action sets of the steps.
    pub trace: Trace,
}

/// Nesting limit for supplying a premise through lazy rules.
const SUPPLY_DEPTH: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    /// Hidden trace when reduced, raw trace otherwise.
    trace: Trace,
    state: MsrState,
    outputs: BTreeSet<Term>,
    monitor: AlphaMonitor,
    silent: usize,
    visible: usize,
    /// Reference explorer only: an input the adversary sent outside its
    /// standalone set, which the next step must consume.
    pending: Option<Term>,
}

type Key = (Trace, MsrState, BTreeSet<Term>, AlphaMonitor, Option<Term>);

struct Firing {
    subst: Substitution,
    state: MsrState,
    input: Option<Term>,
}

struct Explorer<'a> {
    sys: &'a MsrSystem,
    th: &'a Theory,
    view: &'a AdversaryView,
    bounds: Bounds,
    reduced: bool,
    init: Option<usize>,
    normal: Vec<usize>,
    eager: HashMap<Arc<str>, (usize, Fact)>,
    lazy: Vec<(usize, BTreeSet<Arc<str>>)>,
    truncated: Option<String>,
}

impl<'a> Explorer<'a> {
    fn new(sys: &'a MsrSystem, view: &'a AdversaryView, bounds: &Bounds, reduction: Reduction) -> Self {
        let reduced = reduction == Reduction::Reduced;
        let class = sys.classify();
        let mut ex = Explorer {
            sys,
            th: &sys.theory,
            view,
            bounds: *bounds,
            reduced,
            init: None,
            normal: Vec::new(),
            eager: HashMap::new(),
            lazy: Vec::new(),
            truncated: None,
        };
        let mut lazy = Vec::new();
        for (i, r) in sys.rules.iter().enumerate() {
            if is_adversary_rule(r) {
                continue;
            }
            if r.name == "Init" && r.premises.is_empty() {
                ex.init = Some(i);
                continue;
            }
            let c = if reduced { class[&r.name] } else { RuleClass::Normal };
            match c {
                RuleClass::Eager => {
                    let p = r.linear_premises().find(|f| fresh_premise(f).is_none()).expect("eager rule premise");
                    ex.eager.insert(p.symbol.clone(), (i, p.clone()));
                }
                RuleClass::Lazy => lazy.push(i),
                RuleClass::Normal => ex.normal.push(i),
            }
        }
        for i in lazy {
            let mut reach: BTreeSet<Arc<str>> = sys.rules[i].conclusions.iter().map(|f| f.symbol.clone()).collect();
            loop {
                let more: Vec<Arc<str>> = reach
                    .iter()
                    .filter_map(|s| ex.eager.get(s))
                    .flat_map(|(e, _)| sys.rules[*e].conclusions.iter().map(|f| f.symbol.clone()))
                    .filter(|s| !reach.contains(s))
                    .collect();
                if more.is_empty() {
                    break;
                }
                reach.extend(more);
            }
            ex.lazy.push((i, reach));
        }
        ex
    }

    fn flag(&mut self, why: &str) {
        if self.truncated.is_none() {
            self.truncated = Some(why.to_string());
        }
    }

    /// Allocates the `Fr` variables of rule `r`, adds its conclusions, and
    /// returns its actions.
    fn conclude(&self, r: usize, mut s: Substitution, st: &mut MsrState) -> BTreeSet<Fact> {
        let rule = &self.sys.rules[r];
        for p in &rule.premises {
            if let Some(v) = fresh_premise(p) {
                if !s.contains_key(v) {
                    let n = st.fresh_name();
                    s.insert(v.clone(), Term::Name(n));
                }
            }
        }
        for f in &rule.conclusions {
            st.add(f.apply(&s).map_terms(|t| nf(t, self.th)));
        }
        rule.actions.iter().map(|f| f.apply(&s).map_terms(|t| nf(t, self.th))).collect()
    }

    /// Fires eager rules and the output rule until nothing changes. Without
    /// `outputs`, `Out` facts stay in the state.
    fn closure(&self, st: &mut MsrState, mut outputs: Option<&mut BTreeSet<Term>>) {
        loop {
            let mut pick: Option<(Fact, Option<(usize, Substitution)>)> = None;
            for (f, _) in st.linear.iter() {
                if &*f.symbol == "Out" && f.args.len() == 1 && outputs.is_some() {
                    pick = Some((f.clone(), None));
                    break;
                }
                if let Some((r, pat)) = self.eager.get(&f.symbol) {
                    let mut s = Substitution::new();
                    if match_fact_into(&norm_fact_pattern(pat, &s.clone(), self.th), f, &mut s) {
                        pick = Some((f.clone(), Some((*r, s))));
                        break;
                    }
                }
            }
            match pick {
                None => return,
                Some((f, None)) => {
                    st.linear.remove_one(&f);
                    if let Some(o) = outputs.as_deref_mut() {
                        o.insert(nf(&f.args[0], self.th));
                    }
                }
                Some((f, Some((r, s)))) => {
                    st.linear.remove_one(&f);
                    self.conclude(r, s, st);
                }
            }
        }
    }

    /// Matches `pats` against the state, supplying missing facts through
    /// lazy rules when reduced.
    fn supply(&self, pats: &[&Fact], state: &MsrState, s: &Substitution, depth: usize) -> Vec<(Substitution, MsrState)> {
        let Some((first, rest)) = pats.split_first() else {
            return vec![(s.clone(), state.clone())];
        };
        let mut out = Vec::new();
        let mut direct = Vec::new();
        match_premises(&[*first], state, s, self.th, &mut direct);
        for (s2, st2) in direct {
            out.extend(self.supply(rest, &st2, &s2, depth));
        }
        if !self.reduced || depth >= SUPPLY_DEPTH {
            return out;
        }
        let pat = norm_fact_pattern(first, s, self.th);
        for (l, reach) in &self.lazy {
            if !reach.contains(&pat.symbol) {
                continue;
            }
            let lr = &self.sys.rules[*l];
            let lpats: Vec<&Fact> = lr.premises.iter().filter(|f| fresh_premise(f).is_none()).collect();
            for (sl, mut stl) in self.supply(&lpats, state, &Substitution::new(), depth + 1) {
                self.conclude(*l, sl, &mut stl);
                self.closure(&mut stl, None);
                let new_linear = stl.linear.difference(&state.linear);
                let new_persistent: Vec<Fact> = stl.persistent.difference(&state.persistent).cloned().collect();
                let cands: Vec<Fact> = if pat.persistent {
                    new_persistent
                } else {
                    new_linear.iter().map(|(f, _)| f.clone()).collect()
                };
                for f in cands {
                    let mut s2 = s.clone();
                    if !match_fact_into(&pat, &f, &mut s2) {
                        continue;
                    }
                    let mut st2 = stl.clone();
                    if !f.persistent {
                        st2.linear.remove_one(&f);
                    }
                    out.extend(self.supply(rest, &st2, &s2, depth));
                }
            }
        }
        out
    }

    /// Terms a knowable-instance query yields for a pattern.
    fn knowable(&mut self, outputs: &BTreeSet<Term>, pattern: &Term, s: &Substitution) -> Vec<(Substitution, Term)> {
        let p = norm_pattern(&apply_subst(s, pattern), self.th);
        match self.view.instances(outputs, &p) {
            Ok(taus) => taus
                .into_iter()
                .map(|tau| {
                    let mut s2 = s.clone();
                    s2.extend(tau.clone());
                    let t = nf(&apply_subst(&tau, &p), self.th);
                    (s2, t)
                })
                .collect(),
            Err(e) => {
                self.flag(&e.to_string());
                Vec::new()
            }
        }
    }

    /// Values for a premise-unbound variable.
    fn values_for(&self, r: usize, v: &Variable, s: &Substitution, node: &Node) -> Vec<Term> {
        let rule = &self.sys.rules[r];
        if self.reduced {
            for a in rule.actions.iter().filter(|a| &*a.symbol == "IsIn" && a.args.len() == 2) {
                if a.args[1] == Term::Var(v.clone()) {
                    let key = nf(&apply_subst(s, &a.args[0]), self.th);
                    return node.monitor.stored(&key).into_iter().filter(|t| t.sort().is_subsort_of(v.sort)).collect();
                }
            }
        }
        term_universe(&node.trace).into_iter().filter(|t| t.sort().is_subsort_of(v.sort)).collect()
    }

    fn firings(&mut self, r: usize, node: &Node) -> Vec<Firing> {
        let rule = &self.sys.rules[r];
        let is_in = |f: &Fact| &*f.symbol == "In" && !f.persistent && f.args.len() == 1;
        let pats: Vec<&Fact> =
            rule.premises.iter().filter(|f| fresh_premise(f).is_none() && !(self.reduced && is_in(f))).collect();
        let input = if self.reduced { rule.premises.iter().find(|f| is_in(f)).map(|f| f.args[0].clone()) } else { None };
        let matched = self.supply(&pats, &node.state, &Substitution::new(), 0);
        let mut out = Vec::new();
        for (s, st) in matched {
            let with_input: Vec<(Substitution, Option<Term>)> = match &input {
                None => vec![(s, None)],
                Some(p) => self.knowable(&node.outputs, p, &s).into_iter().map(|(s2, t)| (s2, Some(t))).collect(),
            };
            for (s, input) in with_input {
                let free: Vec<Variable> = rule.unbound_vars().into_iter().filter(|v| !s.contains_key(v)).collect();
                let mut subs = vec![s];
                for v in free {
                    let mut next = Vec::new();
                    for s in subs {
                        for t in self.values_for(r, &v, &s, node) {
                            let mut s2 = s.clone();
                            s2.insert(v.clone(), t);
                            next.push(s2);
                        }
                    }
                    subs = next;
                }
                for subst in subs {
                    out.push(Firing { subst, state: st.clone(), input: input.clone() });
                }
            }
        }
        out
    }

    /// Appends elements to a node, enforcing α and the bounds.
    fn extend(&mut self, node: &Node, elems: Vec<BTreeSet<Fact>>, state: MsrState, outputs: BTreeSet<Term>) -> Option<Node> {
        let mut n = Node {
            trace: node.trace.clone(),
            state,
            outputs,
            monitor: node.monitor.clone(),
            silent: node.silent,
            visible: node.visible,
            pending: None,
        };
        for el in elems {
            let hidden: BTreeSet<Fact> = hide_trace(&vec![el.clone()]).into_iter().next().unwrap_or_default();
            if self.reduced {
                if !n.monitor.step(&el, self.th) {
                    return None;
                }
                if !hidden.is_empty() {
                    n.trace.push(hidden.clone());
                }
            } else {
                n.trace.push(el);
            }
            if hidden.is_empty() {
                n.silent += 1;
            } else {
                n.visible += 1;
                n.silent = 0;
            }
        }
        if n.visible > self.bounds.max_visible {
            return None;
        }
        Some(canonical(n))
    }

    fn successors(&mut self, node: &Node) -> Vec<Node> {
        let mut out = Vec::new();
        if let Some(t) = &node.pending {
            let inp = Fact::new("In", vec![t.clone()]);
            let before = node.state.linear.count(&inp);
            let mut out = self.rule_successors(node);
            out.retain(|n| n.state.linear.count(&inp) < before);
            return out;
        }
        out.extend(self.rule_successors(node));
        let hidden = if self.reduced { node.trace.clone() } else { hide_trace(&node.trace) };
        let standalone: BTreeSet<Term> = match self.view.standalone(&node.outputs, &hidden) {
            Ok(ts) => ts.into_iter().collect(),
            Err(e) => {
                self.flag(&e.to_string());
                BTreeSet::new()
            }
        };
        let mut terms = standalone.clone();
        if !self.reduced {
            terms.extend(self.input_terms(node));
        }
        for t in terms {
            let mut st = node.state.clone();
            if !self.reduced {
                st.add(Fact::new("In", vec![t.clone()]));
            }
            let el = [Fact::new("K", vec![t.clone()])].into_iter().collect();
            if let Some(mut n) = self.extend(node, vec![el], st, node.outputs.clone()) {
                if !self.reduced && !standalone.contains(&t) {
                    n.pending = Some(t);
                    n = canonical(n);
                }
                out.push(n);
            }
        }
        shuffle(&mut out, self.bounds.seed);
        out
    }

    fn rule_successors(&mut self, node: &Node) -> Vec<Node> {
        let mut out = Vec::new();
        for r in self.normal.clone() {
            for f in self.firings(r, node) {
                let mut st = f.state;
                let actions = self.conclude(r, f.subst, &mut st);
                let mut outputs = node.outputs.clone();
                self.closure(&mut st, Some(&mut outputs));
                let mut elems = Vec::new();
                if let Some(t) = f.input {
                    elems.push([Fact::new("K", vec![t])].into_iter().collect());
                }
                elems.push(actions);
                out.extend(self.extend(node, elems, st, outputs));
            }
        }
        out
    }

    /// Knowable terms some `In` premise could consume in the current state.
    fn input_terms(&mut self, node: &Node) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        for r in self.normal.clone() {
            let rule = &self.sys.rules[r];
            let Some(inp) = rule.premises.iter().find(|f| &*f.symbol == "In" && f.args.len() == 1) else { continue };
            let pats: Vec<&Fact> =
                rule.premises.iter().filter(|f| fresh_premise(f).is_none() && &*f.symbol != "In").collect();
            let pattern = inp.args[0].clone();
            let mut matched = Vec::new();
            match_premises(&pats, &node.state, &Substitution::new(), self.th, &mut matched);
            for (s, _) in matched {
                out.extend(self.knowable(&node.outputs, &pattern, &s).into_iter().map(|(_, t)| t));
            }
        }
        out
    }

    fn root(&mut self) -> Option<Node> {
        let node = Node {
            trace: Vec::new(),
            state: MsrState::new(),
            outputs: BTreeSet::new(),
            monitor: AlphaMonitor::new(),
            silent: 0,
            visible: 0,
            pending: None,
        };
        let mut st = MsrState::new();
        let mut elems = Vec::new();
        if let Some(i) = self.init {
            elems.push(self.conclude(i, Substitution::new(), &mut st));
        }
        let mut outputs = BTreeSet::new();
        self.closure(&mut st, Some(&mut outputs));
        self.extend(&node, elems, st, outputs)
    }

    fn key(&self, n: &Node) -> Key {
        let tr = if self.reduced { self.view.trace_key(&n.trace) } else { n.trace.clone() };
        (tr, n.state.clone(), n.outputs.clone(), n.monitor.clone(), n.pending.clone())
    }

    /// Breadth-first search; `visit` sees every new node and stops the
    /// search by returning `false`. Returns the number of visited states.
    fn run(&mut self, visit: &mut dyn FnMut(&Node) -> bool) -> usize {
        let Some(root) = self.root() else { return 0 };
        let mut visited: HashMap<Key, (usize, usize)> = HashMap::new();
        visited.insert(self.key(&root), (root.visible, root.silent));
        let mut queue = VecDeque::from([root]);
        while let Some(node) = queue.pop_front() {
            if !visit(&node) {
                break;
            }
            if node.visible >= self.bounds.max_visible {
                // Further silent steps hide to the same traces.
                continue;
            }
            for succ in self.successors(&node) {
                let k = self.key(&succ);
                if succ.silent > self.bounds.max_silent * self.bounds.msr_factor {
                    if !visited.contains_key(&k) {
                        self.flag("silent step bound reached");
                    }
                    continue;
                }
                match visited.get(&k) {
                    Some(&(v, s)) if v <= succ.visible && s <= succ.silent => continue,
                    _ => {}
                }
                if visited.len() >= self.bounds.state_cap {
                    self.flag("state cap reached");
                    return visited.len();
                }
                visited.insert(k, (succ.visible, succ.silent));
                queue.push_back(succ);
            }
        }
        visited.len()
    }
}

/// Renames allocated names in a node by first visit.
fn canonical(n: Node) -> Node {
    let mut rn = Renumber::default();
    let trace = rn.trace(&n.trace);
    let outputs = n.outputs.iter().map(|t| rn.term(t)).collect();
    let mut state = n.state.map_terms(|t| rn.term(t));
    let monitor = n.monitor.map_terms(&mut |t| rn.term(t));
    let pending = n.pending.as_ref().map(|t| rn.term(t));
    state.fresh = rn.count();
    Node { trace, state, outputs, monitor, silent: n.silent, visible: n.visible, pending }
}

/// Explores a system and returns its hidden, α-filtered traces.
pub fn explore_msr(
    sys: &MsrSystem,
    view: &AdversaryView,
    bounds: &Bounds,
    reduction: Reduction,
) -> Result<MsrExploration, Error> {
    let mut ex = Explorer::new(sys, view, bounds, reduction);
    let mut raw: BTreeSet<Trace> = BTreeSet::new();
    let states = ex.run(&mut |n| {
        raw.insert(n.trace.clone());
        true
    });
    if ex.reduced {
        let traces = raw.iter().map(canonicalize_trace).collect();
        return Ok(MsrExploration { traces, states, truncated: ex.truncated, raw: BTreeSet::new() });
    }
    let all: Vec<Trace> = raw.into_iter().collect();
    let kept = filter(&all, &sys.theory)?;
    let traces = kept.iter().map(|tr| canonicalize_trace(&hide_trace(tr))).collect();
    let raw = all.iter().map(canonicalize_trace).collect();
    Ok(MsrExploration { traces, states, truncated: ex.truncated, raw })
}

/// Reduced exploration that hands every reached hidden trace to `visit`
/// and stops as soon as it returns `false`. The returned trace set is
/// empty.
pub fn explore_msr_with(
    sys: &MsrSystem,
    view: &AdversaryView,
    bounds: &Bounds,
    visit: &mut dyn FnMut(&Trace) -> bool,
) -> MsrExploration {
    let mut ex = Explorer::new(sys, view, bounds, Reduction::Reduced);
    let states = ex.run(&mut |n| visit(&n.trace));
    MsrExploration { traces: BTreeSet::new(), states, truncated: ex.truncated, raw: BTreeSet::new() }
}

/// Runs the generic semantics for at most `steps` steps. `choose(n)` picks
/// one of `n` applicable instances; the run stops early when none applies.
pub fn random_execution(
    sys: &MsrSystem,
    steps: usize,
    choose: &mut dyn FnMut(usize) -> usize,
) -> Result<MsrRun, Error> {
    let mut run = MsrRun { states: vec![MsrState::new()], ..MsrRun::default() };
    for _ in 0..steps {
        let cur = run.states.last().expect("initial state");
        let insts = applicable(sys, cur);
        if insts.is_empty() {
            break;
        }
        let inst = insts[choose(insts.len()) % insts.len()].clone();
        let (next, acts) = fire(sys, cur, &inst)?;
        run.trace.push(acts.into_iter().collect());
        run.states.push(next);
        run.instances.push(inst);
    }
    Ok(run)
}
