//! Adversary deduction over frames with bounded application depth.
//!
//! Depth counts nested function applications in a recipe: atoms (frame
//! entries and known names) have depth 0, and applying a public symbol to
//! terms of depth at most `d - 1` yields depth `d`. Results are taken modulo
//! the theory, so `sdec(senc(m,k),k)` built from known `senc(m,k)` and `k`
//! yields `m` at depth 1.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;
use std::sync::Arc;

use thiserror::Error;

use crate::terms::{apply_subst, match_into, nf, syntactic_match, Name, Sort, Substitution, Term, Theory};

/// Default cap on the number of materialized knowable terms.
pub const DEFAULT_TERM_CAP: usize = 200_000;

/// The knowable-term generator exceeded its cap.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("knowable-term generator truncated at {size} terms (cap {cap})")]
pub struct Truncated {
    pub size: usize,
    pub cap: usize,
}

/// A frame `ν ñ.σ`: restricted names and the observed outputs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Frame {
    pub restricted: BTreeSet<Name>,
    pub knowledge: Substitution,
}

impl Frame {
    /// Builds a frame from restricted names and outputs bound to `x1, x2, ...`.
    pub fn new(restricted: impl IntoIterator<Item = Name>, outputs: impl IntoIterator<Item = Term>) -> Self {
        let knowledge = outputs
            .into_iter()
            .enumerate()
            .map(|(i, t)| (crate::terms::Variable::msg(&format!("x{}", i + 1)), t))
            .collect();
        Frame { restricted: restricted.into_iter().collect(), knowledge }
    }
}

/// Which bare names are known without being listed as atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
enum NameRule {
    /// Every name outside the restricted set.
    Unrestricted(BTreeSet<Name>),
    /// Every public name.
    Public,
}

/// Bounded adversary knowledge over a fixed set of atoms, with memoized
/// membership tests and lazily materialized depth layers.
#[derive(Debug)]
pub struct Knowledge {
    th: Arc<Theory>,
    atoms: BTreeSet<Term>,
    names: NameRule,
    sub_atoms: Vec<Term>,
    depth: usize,
    cap: usize,
    fast: bool,
    memo: RefCell<HashMap<(Term, usize), bool>>,
    layers: RefCell<Vec<Rc<BTreeSet<Term>>>>,
}

impl Knowledge {
    /// Knowledge of an engine's adversary: `atoms` are outputs plus the public
    /// basis and the adversary's fresh pool; every public name is known.
    pub fn new(th: Arc<Theory>, atoms: impl IntoIterator<Item = Term>, depth: usize, cap: usize) -> Self {
        Self::build(th, atoms, NameRule::Public, depth, cap)
    }

    /// Knowledge induced by a frame: frame entries plus every unrestricted name.
    pub fn for_frame(th: Arc<Theory>, frame: &Frame, basis: &BTreeSet<Name>, depth: usize, cap: usize) -> Self {
        let atoms = frame
            .knowledge
            .values()
            .cloned()
            .chain(basis.iter().filter(|n| !frame.restricted.contains(n)).cloned().map(Term::Name))
            .collect::<Vec<_>>();
        Self::build(th, atoms, NameRule::Unrestricted(frame.restricted.clone()), depth, cap)
    }

    fn build(th: Arc<Theory>, atoms: impl IntoIterator<Item = Term>, names: NameRule, depth: usize, cap: usize) -> Self {
        let atoms: BTreeSet<Term> = atoms.into_iter().map(|t| nf(&t, &th)).collect();
        let mut subs = BTreeSet::new();
        atoms.iter().for_each(|a| a.collect_subterms(&mut subs));
        let fast = th.is_subterm_convergent();
        Knowledge {
            th,
            atoms,
            names,
            sub_atoms: subs.into_iter().collect(),
            depth,
            cap,
            fast,
            memo: RefCell::new(HashMap::new()),
            layers: RefCell::new(Vec::new()),
        }
    }

    pub fn theory(&self) -> &Theory {
        &self.th
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn atoms(&self) -> &BTreeSet<Term> {
        &self.atoms
    }

    fn is_atom(&self, t: &Term) -> bool {
        if self.atoms.contains(t) {
            return true;
        }
        match (t, &self.names) {
            (Term::Name(n), NameRule::Unrestricted(r)) => !r.contains(n),
            (Term::Name(n), NameRule::Public) => n.sort == Sort::Pub,
            _ => false,
        }
    }

    /// Whether `t` is knowable within the configured depth.
    pub fn knows(&self, t: &Term) -> bool {
        let t = nf(t, &self.th);
        self.member(&t, self.depth)
    }

    /// Whether the normal form `t` is knowable within depth `d`.
    pub fn member(&self, t: &Term, d: usize) -> bool {
        if self.is_atom(t) {
            return true;
        }
        if d == 0 || !t.is_ground() {
            return false;
        }
        if !self.fast {
            return self.materialize(d).map(|k| k.contains(t)).unwrap_or(false);
        }
        if let Some(&b) = self.memo.borrow().get(&(t.clone(), d)) {
            return b;
        }
        let b = self.member_uncached(t, d);
        self.memo.borrow_mut().insert((t.clone(), d), b);
        b
    }

    fn member_uncached(&self, t: &Term, d: usize) -> bool {
        if let Term::App(f, args) = t {
            let public = self.th.signature.get(f).map(|s| !s.private).unwrap_or(false);
            if public && args.iter().all(|a| self.member(a, d - 1)) {
                return true;
            }
        }
        let mut t_subs = BTreeSet::new();
        t.collect_subterms(&mut t_subs);
        for rule in &self.th.rules {
            if self.th.signature.get(rule.head()).map(|s| s.private).unwrap_or(true) {
                continue;
            }
            let Some(base) = syntactic_match(&rule.rhs, t) else { continue };
            let free: Vec<_> = rule.lhs.vars().into_iter().filter(|v| !base.contains_key(v)).collect();
            let cands: Vec<&Term> = self.sub_atoms.iter().chain(t_subs.iter()).collect();
            let mut found = false;
            for_each_assignment(&free, &cands, &mut base.clone(), &mut |s| {
                let Term::App(_, ps) = &rule.lhs else { unreachable!() };
                let ok = ps.iter().all(|p| {
                    let u = apply_subst(s, p);
                    nf(&u, &self.th) == u && self.member(&u, d - 1)
                });
                if ok {
                    found = true;
                }
                found
            });
            if found {
                return true;
            }
        }
        false
    }

    /// All knowable normal forms of depth at most `d` built over the atoms.
    pub fn materialize(&self, d: usize) -> Result<Rc<BTreeSet<Term>>, Truncated> {
        let mut layers = self.layers.borrow_mut();
        if layers.is_empty() {
            layers.push(Rc::new(self.atoms.clone()));
        }
        while layers.len() <= d {
            let prev = layers.last().unwrap().clone();
            let next = close_once(&prev, &self.th, self.cap)?;
            layers.push(Rc::new(next));
        }
        Ok(layers[d].clone())
    }

    /// Substitutions `τ` (over the variables of `pattern`) such that
    /// `pattern·τ` is knowable within depth `d`. `pattern` must be
    /// constructor-only.
    pub fn instances(&self, pattern: &Term, d: usize) -> Result<Vec<Substitution>, Truncated> {
        let mut out = BTreeSet::new();
        self.instances_into(pattern, d, &Substitution::new(), &mut out)?;
        Ok(out.into_iter().collect())
    }

    fn instances_into(
        &self,
        pattern: &Term,
        d: usize,
        acc: &Substitution,
        out: &mut BTreeSet<Substitution>,
    ) -> Result<(), Truncated> {
        let p = apply_subst(acc, pattern);
        if p.is_ground() {
            if self.member(&nf(&p, &self.th), d) {
                out.insert(acc.clone());
            }
            return Ok(());
        }
        match &p {
            Term::Var(v) => {
                let cands: Vec<Term> = match v.sort {
                    Sort::Fresh | Sort::Pub => {
                        let mut names = BTreeSet::new();
                        self.sub_atoms.iter().for_each(|t| t.collect_names(&mut names));
                        names.into_iter().filter(|n| n.sort == v.sort).map(Term::Name).collect()
                    }
                    _ if d == 0 => self.atoms.iter().cloned().collect(),
                    _ => self.materialize(d)?.iter().cloned().collect(),
                };
                for c in cands {
                    if c.sort().is_subsort_of(v.sort) && self.member(&c, d) {
                        let mut s = acc.clone();
                        s.insert(v.clone(), c);
                        out.insert(s);
                    }
                }
            }
            Term::App(f, args) => {
                let public = self.th.signature.get(f).map(|s| !s.private).unwrap_or(false);
                if d >= 1 && public {
                    let mut partial = vec![acc.clone()];
                    for a in args {
                        let mut next = BTreeSet::new();
                        for s in &partial {
                            self.instances_into(a, d - 1, s, &mut next)?;
                        }
                        partial = next.into_iter().collect();
                    }
                    out.extend(partial);
                }
                for c in &self.sub_atoms {
                    let mut s = acc.clone();
                    if match_into(&p, c, &mut s) && self.member(c, d) {
                        out.insert(s);
                    }
                }
            }
            Term::Name(_) => unreachable!("ground"),
        }
        Ok(())
    }
}

fn for_each_assignment(
    vars: &[crate::terms::Variable],
    cands: &[&Term],
    s: &mut Substitution,
    f: &mut impl FnMut(&Substitution) -> bool,
) -> bool {
    match vars.split_first() {
        None => f(s),
        Some((v, rest)) => {
            for c in cands {
                if !c.sort().is_subsort_of(v.sort) {
                    continue;
                }
                s.insert(v.clone(), (*c).clone());
                if for_each_assignment(rest, cands, s, f) {
                    return true;
                }
            }
            s.remove(v);
            false
        }
    }
}

/// One round of closure: `k` plus every public application over `k`.
fn close_once(k: &BTreeSet<Term>, th: &Theory, cap: usize) -> Result<BTreeSet<Term>, Truncated> {
    let mut next = k.clone();
    let items: Vec<&Term> = k.iter().collect();
    for sym in th.public_functions() {
        let mut idx = vec![0usize; sym.arity];
        if sym.arity > 0 && items.is_empty() {
            continue;
        }
        loop {
            let args = idx.iter().map(|&i| items[i].clone()).collect();
            next.insert(nf(&Term::App(sym.name.clone(), args), th));
            if next.len() > cap {
                return Err(Truncated { size: next.len(), cap });
            }
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < items.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }
    Ok(next)
}

/// Whether `ν ñ.σ ⊢ t` has a derivation with at most `depth` nested applications.
pub fn derivable(f: &Frame, t: &Term, depth: usize, th: &Theory) -> bool {
    let k = Knowledge::for_frame(Arc::new(th.clone()), f, &BTreeSet::new(), depth, DEFAULT_TERM_CAP);
    k.knows(t)
}

/// Normal forms of all terms built from `range(σ) ∪ basis` (minus restricted
/// names) with at most `depth` nested public applications.
pub fn generate_knowable(
    f: &Frame,
    depth: usize,
    basis: &BTreeSet<Name>,
    th: &Theory,
    cap: usize,
) -> Result<BTreeSet<Term>, Truncated> {
    let k = Knowledge::for_frame(Arc::new(th.clone()), f, basis, depth, cap);
    Ok((*k.materialize(depth)?).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{FunSym, RewriteRule};

    fn th() -> Theory {
        let mut th = Theory::new();
        th.add_function(FunSym::new("senc", 2)).unwrap();
        th.add_function(FunSym::new("sdec", 2)).unwrap();
        let (m, k) = (Term::var("m"), Term::var("k"));
        th.add_rule(RewriteRule::new(Term::app("sdec", vec![Term::app("senc", vec![m.clone(), k.clone()]), k]), m).unwrap())
            .unwrap();
        th
    }

    fn senc(a: Term, b: Term) -> Term {
        Term::app("senc", vec![a, b])
    }

    #[test]
    fn key_chain_is_derivable_at_depth_one() {
        let (k1, k2) = (Name::fresh("k1"), Name::fresh("k2"));
        let f = Frame::new(
            [k1.clone(), k2.clone()],
            [senc(Term::Name(k2.clone()), Term::Name(k1.clone())), Term::Name(k1)],
        );
        assert!(derivable(&f, &Term::Name(k2.clone()), 2, &th()));
        assert!(derivable(&f, &Term::Name(k2), 1, &th()));
    }

    #[test]
    fn unrestricted_names_are_derivable() {
        assert!(derivable(&Frame::default(), &Term::public("c"), 1, &th()));
        assert!(!derivable(&Frame::new([Name::fresh("k")], []), &Term::fresh("k"), 3, &th()));
    }

    #[test]
    fn depth_zero_of_empty_frame_is_empty() {
        let k = generate_knowable(&Frame::default(), 0, &BTreeSet::new(), &th(), 100).unwrap();
        assert!(k.is_empty());
    }

    #[test]
    fn depth_one_closure_contains_encryptions_and_pairs() {
        let kname = Name::fresh("k");
        let f = Frame::new([kname.clone()], [Term::Name(kname.clone())]);
        let basis: BTreeSet<Name> = [Name::public("c")].into_iter().collect();
        let set = generate_knowable(&f, 1, &basis, &th(), 1000).unwrap();
        let (k, c) = (Term::Name(kname), Term::public("c"));
        for t in [
            senc(k.clone(), c.clone()),
            senc(c.clone(), k.clone()),
            senc(k.clone(), k.clone()),
            senc(c.clone(), c.clone()),
            Term::pair(k, c),
        ] {
            assert!(set.contains(&t), "missing {}", t);
        }
    }

    #[test]
    fn cap_is_reported() {
        let f = Frame::new([], [Term::public("a"), Term::public("b")]);
        let err = generate_knowable(&f, 2, &BTreeSet::new(), &th(), 10).unwrap_err();
        assert_eq!(err.cap, 10);
    }

    #[test]
    fn pattern_instances_follow_membership() {
        let th = Arc::new(th());
        let h = Term::fresh("h");
        let k = Knowledge::new(th, [Term::public("c"), h.clone()], 2, 1000);
        let pat = Term::pair(Term::public("c"), Term::pair(Term::var_sorted("x", Sort::Fresh), Term::var("y")));
        let inst = k.instances(&pat, 2).unwrap();
        assert!(inst.iter().any(|s| s.values().all(|v| v == &h)));
        for s in &inst {
            assert!(k.member(&nf(&apply_subst(s, &pat), k.theory()), 2));
        }
    }
}
