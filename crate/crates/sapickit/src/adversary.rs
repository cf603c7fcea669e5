//! Exploration bounds and the adversary view shared by both engines.
//!
//! Both engines ask the same questions of the adversary: which terms it can
//! send on an input and which standalone `K(t)` labels it may emit. Answering
//! both through one view keeps the differential comparison fair.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;
use std::sync::Arc;

use serde::Serialize;

use crate::deduction::{Knowledge, Truncated};
use crate::logic::{Trace, TraceFormula};
use crate::terms::{apply_subst, match_fact_into, nf, Fact, Name, Substitution, Term, Theory};

/// Exploration bounds shared by the engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bounds {
    /// Maximal number of visible labels per trace.
    pub max_visible: usize,
    /// Maximal number of silent steps between two labels.
    pub max_silent: usize,
    /// Maximal recipe depth of adversary deductions.
    pub deduction_depth: usize,
    /// Number of fresh names the adversary may use.
    pub adversary_fresh_pool: usize,
    /// Maximal number of explored states.
    pub state_cap: usize,
    /// Multiplier turning the silent bound into the msr step bound.
    pub msr_factor: usize,
    /// Seed for the order in which successors are explored; 0 keeps the
    /// natural order.
    pub seed: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_visible: 6, max_silent: 20, deduction_depth: 2, adversary_fresh_pool: 2, state_cap: 200_000, msr_factor: 6, seed: 0 }
    }
}

impl Bounds {
    /// Names of the adversary's fresh pool.
    pub fn pool(&self) -> Vec<Name> {
        (1..=self.adversary_fresh_pool).map(|i| Name::fresh(&format!("a.{}", i))).collect()
    }
}

/// Permutes `items` deterministically from `seed`; seed 0 leaves them as
/// they are.
pub fn shuffle<T>(items: &mut [T], seed: u64) {
    if seed == 0 {
        return;
    }
    let mut x = seed ^ (items.len() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    for i in (1..items.len()).rev() {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        items.swap(i, (x % (i as u64 + 1)) as usize);
    }
}

/// Which standalone `K(t)` labels the adversary emits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversaryMode {
    /// Every knowable term within the deduction depth.
    Full,
    /// Only the atoms of the current knowledge: public basis, pool, outputs.
    Demand,
    /// No standalone labels; inputs are unaffected.
    Silent,
    /// Only terms a formula can observe (see [`Relevance`]).
    Relevant(Arc<Relevance>),
}

/// The part of a trace a formula can observe.
///
/// A `K(u)` atom of the formula observes `K(t)` only if `t` is an instance of
/// `u` under a match of a non-`K` atom sharing its variables, or `u` is
/// ground. Requires every variable of a `K` atom to occur in a non-`K` atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relevance {
    symbols: BTreeSet<String>,
    ground: BTreeSet<Term>,
    links: Vec<(Fact, Term)>,
}

impl Relevance {
    /// Builds the relevance view of a formula, or `None` when some `K`-atom
    /// variable occurs in no other atom.
    pub fn of(phi: &TraceFormula, th: &Theory) -> Option<Relevance> {
        let facts = phi.facts();
        let mut rel = Relevance { symbols: BTreeSet::new(), ground: BTreeSet::new(), links: Vec::new() };
        for f in &facts {
            if &*f.symbol != "K" {
                rel.symbols.insert(f.symbol.to_string());
            }
        }
        for f in facts.iter().filter(|f| &*f.symbol == "K" && f.args.len() == 1) {
            let u = &f.args[0];
            if u.is_ground() {
                rel.ground.insert(nf(u, th));
                continue;
            }
            let vars = u.vars();
            let mut covered = BTreeSet::new();
            for g in facts.iter().filter(|g| &*g.symbol != "K") {
                let gv = g.vars();
                if vars.iter().any(|v| gv.contains(v)) {
                    covered.extend(gv.into_iter().filter(|v| vars.contains(v)));
                    rel.links.push(((*g).clone(), u.clone()));
                }
            }
            if covered.len() < vars.iter().collect::<BTreeSet<_>>().len() {
                return None;
            }
        }
        Some(rel)
    }

    /// Terms whose `K` facts the formula can observe, given the facts so far.
    pub fn observable(&self, tr: &Trace, th: &Theory) -> BTreeSet<Term> {
        let mut out = self.ground.clone();
        for el in tr {
            for f in el {
                for (g, u) in &self.links {
                    let mut s = Substitution::new();
                    if match_fact_into(g, f, &mut s) {
                        let t = apply_subst(&s, u);
                        if t.is_ground() {
                            out.insert(nf(&t, th));
                        }
                    }
                }
            }
        }
        out
    }

    /// Projects a trace onto the observable facts. `K` facts are kept when
    /// their term is observable given the trace up to and including them.
    pub fn project(&self, tr: &Trace, th: &Theory) -> Trace {
        (0..tr.len()).map(|i| self.kept(&tr[..=i], th)).filter(|el| !el.is_empty()).collect()
    }

    /// The observable facts of the last element of `tr`.
    fn kept(&self, tr: &[BTreeSet<Fact>], th: &Theory) -> BTreeSet<Fact> {
        let Some(el) = tr.last() else { return BTreeSet::new() };
        let obs = self.observable(&tr.to_vec(), th);
        el.iter()
            .filter(|f| {
                if &*f.symbol == "K" {
                    f.args.len() == 1 && obs.contains(&f.args[0])
                } else {
                    self.symbols.contains(&*f.symbol)
                }
            })
            .cloned()
            .collect()
    }
}

/// Bounded adversary knowledge for a set of outputs, with a cache keyed by
/// the output set.
pub struct AdversaryView {
    th: Arc<Theory>,
    basis: BTreeSet<Term>,
    depth: usize,
    cap: usize,
    pub mode: AdversaryMode,
    cache: RefCell<HashMap<BTreeSet<Term>, Rc<Knowledge>>>,
}

const CACHE_LIMIT: usize = 4096;

impl AdversaryView {
    /// `public` are the public names the adversary starts with; the pool
    /// names of `bounds` are added.
    pub fn new(th: Arc<Theory>, public: impl IntoIterator<Item = Name>, bounds: &Bounds, mode: AdversaryMode) -> Self {
        let mut basis: BTreeSet<Term> = public.into_iter().map(Term::Name).collect();
        basis.extend(bounds.pool().into_iter().map(Term::Name));
        AdversaryView { th, basis, depth: bounds.deduction_depth, cap: crate::deduction::DEFAULT_TERM_CAP, mode, cache: RefCell::new(HashMap::new()) }
    }

    pub fn theory(&self) -> &Theory {
        &self.th
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn basis(&self) -> &BTreeSet<Term> {
        &self.basis
    }

    /// Knowledge after observing `outputs` (normal forms).
    pub fn knowledge(&self, outputs: &BTreeSet<Term>) -> Rc<Knowledge> {
        if let Some(k) = self.cache.borrow().get(outputs) {
            return k.clone();
        }
        let k = Rc::new(Knowledge::new(
            self.th.clone(),
            self.basis.iter().cloned().chain(outputs.iter().cloned()),
            self.depth,
            self.cap,
        ));
        let mut cache = self.cache.borrow_mut();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(outputs.clone(), k.clone());
        k
    }

    /// Substitutions grounding an input pattern to a knowable term. The
    /// constructor skeleton of the pattern is free; each variable and each
    /// ground part must be knowable within the deduction depth, or a
    /// compound part must match a knowable term as a whole.
    pub fn instances(&self, outputs: &BTreeSet<Term>, pattern: &Term) -> Result<Vec<Substitution>, Truncated> {
        let k = self.knowledge(outputs);
        let mut out = BTreeSet::new();
        self.skeleton(&k, pattern, &Substitution::new(), &mut out)?;
        Ok(out.into_iter().collect())
    }

    fn skeleton(&self, k: &Knowledge, p: &Term, acc: &Substitution, out: &mut BTreeSet<Substitution>) -> Result<(), Truncated> {
        let p = apply_subst(acc, p);
        if p.is_ground() {
            if k.knows(&p) {
                out.insert(acc.clone());
            }
            return Ok(());
        }
        for s in k.instances(&p, self.depth)? {
            let mut s2 = acc.clone();
            s2.extend(s);
            out.insert(s2);
        }
        if let Term::App(f, args) = &p {
            let public = self.th.signature.get(f).map(|s| !s.private).unwrap_or(false);
            if public && !self.th.is_destructor(f) {
                let mut partial = vec![acc.clone()];
                for a in args {
                    let mut next = BTreeSet::new();
                    for s in &partial {
                        self.skeleton(k, a, s, &mut next)?;
                    }
                    partial = next.into_iter().collect();
                }
                out.extend(partial);
            }
        }
        Ok(())
    }

    /// Whether a ground term is knowable.
    pub fn knows(&self, outputs: &BTreeSet<Term>, t: &Term) -> bool {
        self.knowledge(outputs).knows(t)
    }

    /// Terms `t` for which a standalone `K(t)` label is offered after the
    /// trace `tr`.
    pub fn standalone(&self, outputs: &BTreeSet<Term>, tr: &Trace) -> Result<Vec<Term>, Truncated> {
        let k = self.knowledge(outputs);
        Ok(match &self.mode {
            AdversaryMode::Full => k.materialize(self.depth)?.iter().cloned().collect(),
            AdversaryMode::Demand => k.atoms().iter().cloned().collect(),
            AdversaryMode::Silent => Vec::new(),
            AdversaryMode::Relevant(rel) => rel.observable(tr, &self.th).into_iter().filter(|t| k.knows(t)).collect(),
        })
    }

    /// Whether appending `label` to `tr` leaves the dedup view unchanged.
    pub fn unobserved(&self, tr: &Trace, label: &BTreeSet<Fact>) -> bool {
        match &self.mode {
            AdversaryMode::Relevant(rel) => {
                let mut t = tr.clone();
                t.push(label.clone());
                rel.kept(&t, &self.th).is_empty()
            }
            _ => false,
        }
    }

    /// The dedup view of a trace: the projection for relevance mode, the
    /// trace itself otherwise.
    pub fn trace_key(&self, tr: &Trace) -> Trace {
        match &self.mode {
            AdversaryMode::Relevant(rel) => rel.project(tr, &self.th),
            _ => tr.clone(),
        }
    }
}
