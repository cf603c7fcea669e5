//! Labelled multiset rewriting: rules, states, transitions, and bounded
//! exploration.

mod explore;
mod rules;
mod state;

pub use explore::{explore_msr, explore_msr_with, random_execution, MsrExploration, MsrRun, Reduction};
pub use rules::{is_adversary_rule, MsrRule, MsrSystem, RuleClass};
pub use state::{applicable, fire, Instance, MsrState};

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::Trace;
use crate::terms::{Fact, Name, Sort, Term};

/// Upper bound on tie-breaking orders tried per trace element.
const TIE_LIMIT: usize = 720;

/// Renaming of fresh names to `f1`, `f2`, … by first occurrence.
///
/// Facts inside an element are visited by their shape (the fact with fresh
/// names blanked out); among facts of equal shape every visiting order is
/// tried and the lexicographically least renamed trace wins, so traces equal
/// up to renaming map to the same result.
pub fn canonical_renaming(tr: &Trace) -> BTreeMap<Name, Name> {
    let mut cands: Vec<(BTreeMap<Name, Name>, Trace)> = vec![(BTreeMap::new(), Vec::new())];
    for el in tr {
        let mut groups: BTreeMap<String, Vec<&Fact>> = BTreeMap::new();
        for f in el {
            groups.entry(shape_key(f)).or_default().push(f);
        }
        let groups: Vec<Vec<&Fact>> = groups.into_values().collect();
        let orders = orderings(&groups);
        let mut next: Vec<(BTreeMap<Name, Name>, Trace)> = Vec::new();
        for (map, prefix) in &cands {
            for order in &orders {
                let mut m = map.clone();
                let renamed: BTreeSet<Fact> = order.iter().map(|f| rename_fact(f, &mut m)).collect();
                let mut p = prefix.clone();
                p.push(renamed);
                next.push((m, p));
            }
        }
        let best = next.iter().map(|(_, p)| p.clone()).min().unwrap();
        next.retain(|(_, p)| *p == best);
        next.sort_by(|a, b| a.0.cmp(&b.0));
        next.dedup_by(|a, b| a.0 == b.0);
        cands = next;
    }
    cands.swap_remove(0).0
}

/// All visiting orders of an element: groups in shape order, each group
/// permuted, up to [`TIE_LIMIT`] orders.
fn orderings<'a>(groups: &[Vec<&'a Fact>]) -> Vec<Vec<&'a Fact>> {
    let mut out: Vec<Vec<&'a Fact>> = vec![Vec::new()];
    for g in groups {
        let perms = if g.len() > 1 && g.iter().any(|f| has_fresh(f)) { permutations(g) } else { vec![g.clone()] };
        let mut next = Vec::new();
        'outer: for o in &out {
            for p in &perms {
                let mut v = o.clone();
                v.extend(p.iter().copied());
                next.push(v);
                if next.len() >= TIE_LIMIT {
                    break 'outer;
                }
            }
        }
        out = next;
    }
    out
}

fn permutations<'a>(items: &[&'a Fact]) -> Vec<Vec<&'a Fact>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
            if out.len() >= TIE_LIMIT {
                return out;
            }
        }
    }
    out
}

fn has_fresh(f: &Fact) -> bool {
    let mut names = BTreeSet::new();
    f.args.iter().for_each(|a| a.collect_names(&mut names));
    names.iter().any(|n| n.sort == Sort::Fresh)
}

fn rename_fact(f: &Fact, map: &mut BTreeMap<Name, Name>) -> Fact {
    f.map_terms(|t| {
        t.map_names(&mut |n| {
            if n.sort != Sort::Fresh {
                return Term::Name(n.clone());
            }
            let k = map.len() + 1;
            Term::Name(map.entry(n.clone()).or_insert_with(|| Name::fresh(&format!("f{}", k))).clone())
        })
    })
}

/// Applies a renaming to a term; names outside the map are unchanged.
pub fn rename_term(t: &Term, map: &BTreeMap<Name, Name>) -> Term {
    t.map_names(&mut |n| Term::Name(map.get(n).cloned().unwrap_or_else(|| n.clone())))
}

/// Applies a renaming to every fact of a trace.
pub fn rename_trace(tr: &Trace, map: &BTreeMap<Name, Name>) -> Trace {
    tr.iter().map(|el| el.iter().map(|f| f.map_terms(|t| rename_term(t, map))).collect()).collect()
}

/// Renames fresh names to `f1`, `f2`, … in order of first occurrence.
pub fn canonicalize_trace(tr: &Trace) -> Trace {
    rename_trace(tr, &canonical_renaming(tr))
}

/// Whether a name was allocated by one of the engines (numeric text).
pub(crate) fn is_allocated(n: &Name) -> bool {
    n.sort == Sort::Fresh && !n.text.is_empty() && n.text.bytes().all(|b| b.is_ascii_digit())
}

/// Renames allocated names to `1`, `2`, … in order of first visit, so that
/// states equal up to such a renaming usually get equal keys.
#[derive(Debug, Default)]
pub(crate) struct Renumber {
    map: BTreeMap<Name, Name>,
}

impl Renumber {
    pub(crate) fn term(&mut self, t: &Term) -> Term {
        t.map_names(&mut |n| {
            if !is_allocated(n) {
                return Term::Name(n.clone());
            }
            let k = self.map.len() + 1;
            Term::Name(self.map.entry(n.clone()).or_insert_with(|| Name::fresh(&k.to_string())).clone())
        })
    }

    pub(crate) fn fact(&mut self, f: &Fact) -> Fact {
        f.map_terms(|t| self.term(t))
    }

    pub(crate) fn trace(&mut self, tr: &Trace) -> Trace {
        tr.iter().map(|el| el.iter().map(|f| self.fact(f)).collect()).collect()
    }

    /// Number of names renamed so far.
    pub(crate) fn count(&self) -> usize {
        self.map.len()
    }
}

/// A printable key of a fact with fresh names blanked out.
fn shape_key(f: &Fact) -> String {
    let blank = f.map_terms(|t| t.map_names(&mut |n| if n.sort == Sort::Fresh { Term::fresh("_") } else { Term::Name(n.clone()) }));
    blank.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(fs: Vec<Fact>) -> BTreeSet<Fact> {
        fs.into_iter().collect()
    }

    #[test]
    fn renaming_by_first_occurrence() {
        let tr = vec![el(vec![Fact::new("K", vec![Term::fresh("n1")])]), el(vec![Fact::new("K", vec![Term::fresh("n2")])])];
        let want = vec![el(vec![Fact::new("K", vec![Term::fresh("f1")])]), el(vec![Fact::new("K", vec![Term::fresh("f2")])])];
        assert_eq!(canonicalize_trace(&tr), want);
        let plain = vec![el(vec![Fact::new("A", vec![Term::public("a")])])];
        assert_eq!(canonicalize_trace(&plain), plain);
    }

    #[test]
    fn ties_inside_an_element_are_resolved() {
        let (a, b) = (Term::fresh("a"), Term::fresh("b"));
        let t1 = vec![
            el(vec![Fact::new("A", vec![a.clone()]), Fact::new("A", vec![b.clone()])]),
            el(vec![Fact::new("B", vec![a.clone()])]),
        ];
        let t2 = vec![
            el(vec![Fact::new("A", vec![a.clone()]), Fact::new("A", vec![b.clone()])]),
            el(vec![Fact::new("B", vec![b])]),
        ];
        assert_eq!(canonicalize_trace(&t1), canonicalize_trace(&t2));
    }
}
