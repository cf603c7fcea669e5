//! Multiset states and the generic firing of ground rule instances.

use std::collections::BTreeSet;

use crate::error::Error;
use crate::terms::{match_fact_into, nf, Fact, FactMultiset, Name, Sort, Substitution, Term, Theory, Variable};

use super::rules::{MsrRule, MsrSystem};

/// A state: a multiset of linear facts and a set of persistent facts.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MsrState {
    pub linear: FactMultiset,
    pub persistent: BTreeSet<Fact>,
    /// Fresh names allocated so far; new names are numbered above it.
    pub fresh: usize,
}

impl MsrState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a fact: linear facts gain one occurrence, persistent ones are
    /// added to the set.
    pub fn add(&mut self, f: Fact) {
        if f.persistent {
            self.persistent.insert(f);
        } else {
            self.linear.insert(f);
        }
    }

    pub fn contains(&self, f: &Fact) -> bool {
        if f.persistent {
            self.persistent.contains(f)
        } else {
            self.linear.contains(f)
        }
    }

    /// Distinct facts, linear first.
    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.linear.iter().map(|(f, _)| f).chain(self.persistent.iter())
    }

    /// Allocates a fresh name never handed out by this state.
    pub fn fresh_name(&mut self) -> Name {
        self.fresh += 1;
        Name::fresh(&self.fresh.to_string())
    }

    pub fn map_terms(&self, mut g: impl FnMut(&Term) -> Term) -> MsrState {
        MsrState {
            linear: self.linear.map_terms(&mut g),
            persistent: self.persistent.iter().map(|f| f.map_terms(&mut g)).collect(),
            fresh: self.fresh,
        }
    }
}

/// A rule together with a substitution grounding it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instance {
    /// Index into [`MsrSystem::rules`].
    pub rule: usize,
    pub subst: Substitution,
}

impl Instance {
    fn ground(&self, facts: &[Fact], th: &Theory) -> Vec<Fact> {
        facts.iter().map(|f| f.apply(&self.subst).map_terms(|t| nf(t, th))).collect()
    }

    pub fn premises(&self, sys: &MsrSystem) -> Vec<Fact> {
        self.ground(&sys.rules[self.rule].premises, &sys.theory)
    }

    pub fn actions(&self, sys: &MsrSystem) -> Vec<Fact> {
        self.ground(&sys.rules[self.rule].actions, &sys.theory)
    }

    pub fn conclusions(&self, sys: &MsrSystem) -> Vec<Fact> {
        self.ground(&sys.rules[self.rule].conclusions, &sys.theory)
    }
}

/// Normalizes the ground subterms of a pattern so that it can be matched
/// syntactically against normal forms.
pub(crate) fn norm_pattern(t: &Term, th: &Theory) -> Term {
    if t.is_ground() {
        return nf(t, th);
    }
    match t {
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| norm_pattern(a, th)).collect()),
        other => other.clone(),
    }
}

pub(crate) fn norm_fact_pattern(f: &Fact, s: &Substitution, th: &Theory) -> Fact {
    f.apply(s).map_terms(|t| norm_pattern(t, th))
}

/// Matches `pats` in order against the facts of `state`, consuming linear
/// occurrences. Each result carries the extended substitution and the state
/// with the matched linear facts removed.
pub(crate) fn match_premises(
    pats: &[&Fact],
    state: &MsrState,
    s: &Substitution,
    th: &Theory,
    out: &mut Vec<(Substitution, MsrState)>,
) {
    let Some((first, rest)) = pats.split_first() else {
        out.push((s.clone(), state.clone()));
        return;
    };
    let pat = norm_fact_pattern(first, s, th);
    let cands: Vec<Fact> = if pat.persistent {
        state.persistent.iter().filter(|f| f.symbol == pat.symbol).cloned().collect()
    } else {
        state.linear.iter().filter(|(f, _)| f.symbol == pat.symbol).map(|(f, _)| f.clone()).collect()
    };
    for f in cands {
        let mut s2 = s.clone();
        if !match_fact_into(&pat, &f, &mut s2) {
            continue;
        }
        if pat.persistent {
            match_premises(rest, state, &s2, th, out);
        } else {
            let mut st = state.clone();
            st.linear.remove_one(&f);
            match_premises(rest, &st, &s2, th, out);
        }
    }
}

/// Whether a premise is an `Fr(x)` fact with a variable argument.
pub(crate) fn fresh_premise(f: &Fact) -> Option<&Variable> {
    match (&*f.symbol, f.args.as_slice()) {
        ("Fr", [Term::Var(v)]) if !f.persistent => Some(v),
        _ => None,
    }
}

/// Every instance of every rule applicable in `state` under the generic
/// semantics. `Fr` premises are met by names above `state.fresh`; variables
/// bound by no premise range over the subterms of the state and the public
/// names of the rules, filtered by sort.
pub fn applicable(sys: &MsrSystem, state: &MsrState) -> Vec<Instance> {
    let th = &sys.theory;
    let mut universe = BTreeSet::new();
    for f in state.facts() {
        f.args.iter().for_each(|a| a.collect_subterms(&mut universe));
    }
    for r in &sys.rules {
        for f in r.premises.iter().chain(&r.actions).chain(&r.conclusions) {
            let mut names = BTreeSet::new();
            f.args.iter().for_each(|a| a.collect_names(&mut names));
            universe.extend(names.into_iter().filter(|n| n.sort == Sort::Pub).map(Term::Name));
        }
    }
    let mut out = Vec::new();
    for (i, r) in sys.rules.iter().enumerate() {
        let pats: Vec<&Fact> = r.premises.iter().filter(|f| fresh_premise(f).is_none()).collect();
        let mut matches = Vec::new();
        match_premises(&pats, state, &Substitution::new(), th, &mut matches);
        let fresh: Vec<&Variable> = r.premises.iter().filter_map(fresh_premise).collect();
        let unbound: Vec<Variable> = r.unbound_vars();
        for (mut s, _) in matches {
            for (k, v) in fresh.iter().enumerate() {
                s.insert((*v).clone(), Term::fresh(&(state.fresh + k + 1).to_string()));
            }
            let free: Vec<&Variable> = unbound.iter().filter(|v| !s.contains_key(*v)).collect();
            let mut subs = vec![s];
            for v in free {
                let vals: Vec<&Term> = universe.iter().filter(|t| t.sort().is_subsort_of(v.sort)).collect();
                subs = subs
                    .into_iter()
                    .flat_map(|s| {
                        vals.iter().map(move |t| {
                            let mut s2 = s.clone();
                            s2.insert(v.clone(), (*t).clone());
                            s2
                        })
                    })
                    .collect();
            }
            out.extend(subs.into_iter().map(|subst| Instance { rule: i, subst }));
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Fires a ground instance: checks its premises, removes the linear ones,
/// and adds the conclusions. Returns the new state and the action facts.
pub fn fire(sys: &MsrSystem, state: &MsrState, inst: &Instance) -> Result<(MsrState, Vec<Fact>), Error> {
    let rule: &MsrRule =
        sys.rules.get(inst.rule).ok_or_else(|| Error::Input(format!("no rule with index {}", inst.rule)))?;
    let mut next = state.clone();
    for (pat, f) in rule.premises.iter().zip(inst.premises(sys)) {
        if !f.is_ground() {
            return Err(Error::Input(format!("premise {} of {} is not ground", f, rule.name)));
        }
        if fresh_premise(pat).is_some() {
            let n = match &f.args[0] {
                Term::Name(n) if n.sort == Sort::Fresh => n.text.parse::<usize>().ok(),
                _ => None,
            };
            match n {
                Some(k) if k > next.fresh => next.fresh = k,
                _ => return Err(Error::Input(format!("{} in {} is not a new fresh name", f, rule.name))),
            }
        } else if f.persistent {
            if !next.persistent.contains(&f) {
                return Err(Error::Input(format!("missing persistent premise {} of {}", f, rule.name)));
            }
        } else if !next.linear.remove_one(&f) {
            return Err(Error::Input(format!("missing premise {} of {}", f, rule.name)));
        }
    }
    for f in inst.conclusions(sys) {
        next.add(f);
    }
    Ok((next, inst.actions(sys)))
}
