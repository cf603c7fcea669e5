//! Process syntax, positions, lock annotation, and well-formedness.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{AnnotationError, TermError, Violation};
use crate::terms::{apply_subst, nf, Fact, Name, Sort, Substitution, Term, Theory, Variable};

/// A process of the stateful applied pi calculus. Lock and unlock carry an
/// optional label assigned by [`annotate`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Process {
    Zero,
    Par(Box<Process>, Box<Process>),
    Repl(Box<Process>),
    New(Name, Box<Process>),
    /// Output; `None` is the implicit public channel, which only the
    /// adversary reads.
    Out(Option<Term>, Term, Box<Process>),
    /// Input; `None` is the implicit public channel, written only by the
    /// adversary.
    In(Option<Term>, Term, Box<Process>),
    If(Term, Term, Box<Process>, Box<Process>),
    Event(Fact, Box<Process>),
    Insert(Term, Term, Box<Process>),
    Delete(Term, Box<Process>),
    Lookup(Term, Variable, Box<Process>, Box<Process>),
    Lock(Term, Option<u32>, Box<Process>),
    Unlock(Term, Option<u32>, Box<Process>),
    MsrStep(Vec<Fact>, Vec<Fact>, Vec<Fact>, Box<Process>),
}

/// A process whose locks and unlocks all carry labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnnotatedProcess(pub Process);

impl AnnotatedProcess {
    pub fn process(&self) -> &Process {
        &self.0
    }

    /// Removes all labels, recovering the original process.
    pub fn strip(&self) -> Process {
        self.0.strip_labels()
    }
}

impl Process {
    /// Children in position order (binary for Par/If/Lookup, unary otherwise).
    pub fn children(&self) -> Vec<&Process> {
        use Process::*;
        match self {
            Zero => vec![],
            Par(p, q) | If(_, _, p, q) | Lookup(_, _, p, q) => vec![p, q],
            Repl(p)
            | New(_, p)
            | Out(_, _, p)
            | In(_, _, p)
            | Event(_, p)
            | Insert(_, _, p)
            | Delete(_, p)
            | Lock(_, _, p)
            | Unlock(_, _, p)
            | MsrStep(_, _, _, p) => vec![p],
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Process> {
        use Process::*;
        match self {
            Zero => vec![],
            Par(p, q) | If(_, _, p, q) | Lookup(_, _, p, q) => vec![p, q],
            Repl(p)
            | New(_, p)
            | Out(_, _, p)
            | In(_, _, p)
            | Event(_, p)
            | Insert(_, _, p)
            | Delete(_, p)
            | Lock(_, _, p)
            | Unlock(_, _, p)
            | MsrStep(_, _, _, p) => vec![p],
        }
    }

    /// Short constructor name used in rule names and diagnostics.
    pub fn kind(&self) -> &'static str {
        use Process::*;
        match self {
            Zero => "zero",
            Par(..) => "par",
            Repl(..) => "repl",
            New(..) => "new",
            Out(..) => "out",
            In(..) => "in",
            If(..) => "if",
            Event(..) => "event",
            Insert(..) => "insert",
            Delete(..) => "delete",
            Lookup(..) => "lookup",
            Lock(..) => "lock",
            Unlock(..) => "unlock",
            MsrStep(..) => "msr",
        }
    }

    pub fn strip_labels(&self) -> Process {
        let mut p = self.clone();
        p.visit_mut(&mut |q| match q {
            Process::Lock(_, l, _) | Process::Unlock(_, l, _) => *l = None,
            _ => {}
        });
        p
    }

    fn visit_mut(&mut self, f: &mut impl FnMut(&mut Process)) {
        f(self);
        for c in self.children_mut() {
            c.visit_mut(f);
        }
    }

    /// Visits every node in preorder with its position.
    pub fn visit(&self, f: &mut impl FnMut(&[usize], &Process)) {
        fn go(p: &Process, pos: &mut Vec<usize>, f: &mut impl FnMut(&[usize], &Process)) {
            f(pos, p);
            for (i, c) in p.children().into_iter().enumerate() {
                pos.push(i + 1);
                go(c, pos, f);
                pos.pop();
            }
        }
        go(self, &mut Vec::new(), f)
    }

    /// Terms and facts of the node itself (not of its children).
    pub fn local_terms(&self) -> Vec<&Term> {
        use Process::*;
        match self {
            Out(m, n, _) | In(m, n, _) => m.iter().chain([n]).collect(),
            If(m, n, _, _) | Insert(m, n, _) => vec![m, n],
            Delete(m, _) | Lookup(m, _, _, _) | Lock(m, _, _) | Unlock(m, _, _) => vec![m],
            Event(f, _) => f.args.iter().collect(),
            MsrStep(l, a, r, _) => l.iter().chain(a).chain(r).flat_map(|f| f.args.iter()).collect(),
            _ => vec![],
        }
    }

    /// Applies `g` to every term of every node.
    pub fn map_terms(&self, g: &mut impl FnMut(&Term) -> Term) -> Process {
        self.map_terms_dyn(g)
    }

    fn map_terms_dyn(&self, g: &mut dyn FnMut(&Term) -> Term) -> Process {
        use Process::*;
        fn b(p: &Process, g: &mut dyn FnMut(&Term) -> Term) -> Box<Process> {
            Box::new(p.map_terms_dyn(g))
        }
        fn mf(f: &Fact, g: &mut dyn FnMut(&Term) -> Term) -> Fact {
            f.map_terms(|t| g(t))
        }
        match self {
            Zero => Zero,
            Par(p, q) => Par(b(p, g), b(q, g)),
            Repl(p) => Repl(b(p, g)),
            New(a, p) => New(a.clone(), b(p, g)),
            Out(m, n, p) => Out(m.as_ref().map(&mut *g), g(n), b(p, g)),
            In(m, n, p) => In(m.as_ref().map(&mut *g), g(n), b(p, g)),
            If(m, n, p, q) => If(g(m), g(n), b(p, g), b(q, g)),
            Event(f, p) => Event(mf(f, g), b(p, g)),
            Insert(m, n, p) => Insert(g(m), g(n), b(p, g)),
            Delete(m, p) => Delete(g(m), b(p, g)),
            Lookup(m, x, p, q) => Lookup(g(m), x.clone(), b(p, g), b(q, g)),
            Lock(m, l, p) => Lock(g(m), *l, b(p, g)),
            Unlock(m, l, p) => Unlock(g(m), *l, b(p, g)),
            MsrStep(l, a, r, p) => MsrStep(
                l.iter().map(|f| mf(f, g)).collect(),
                a.iter().map(|f| mf(f, g)).collect(),
                r.iter().map(|f| mf(f, g)).collect(),
                b(p, g),
            ),
        }
    }

    /// Applies a substitution to every term.
    pub fn apply(&self, s: &Substitution) -> Process {
        if s.is_empty() {
            return self.clone();
        }
        self.map_terms(&mut |t| apply_subst(s, t))
    }

    /// Replaces every occurrence of name `from` by `to` (binders included).
    pub fn rename_name(&self, from: &Name, to: &Name) -> Process {
        let mut p = self.map_terms(&mut |t| t.map_names(&mut |n| Term::Name(if n == from { to.clone() } else { n.clone() })));
        p.visit_mut(&mut |q| {
            if let Process::New(a, _) = q {
                if a == from {
                    *a = to.clone();
                }
            }
        });
        p
    }

    /// Every name occurring in a term of the process.
    pub fn names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |_, p| p.local_terms().into_iter().for_each(|t| t.collect_names(&mut out)));
        out
    }

    /// Public names occurring in the process.
    pub fn public_names(&self) -> BTreeSet<Name> {
        self.names().into_iter().filter(|n| n.sort == Sort::Pub).collect()
    }

    /// Normalizes every term, keeping the process structure.
    pub fn normalize_terms(&self, th: &Theory) -> Process {
        self.map_terms(&mut |t| nf(t, th))
    }
}

/// The subprocess at a position.
pub fn subprocess_at<'a>(p: &'a Process, pos: &[usize]) -> Result<&'a Process, TermError> {
    let mut cur = p;
    for (i, &k) in pos.iter().enumerate() {
        let ch = cur.children();
        if k == 0 || k > ch.len() {
            return Err(TermError::Position(pos[..=i].to_vec()));
        }
        cur = ch[k - 1];
    }
    Ok(cur)
}

/// Fact symbols reserved for the translation.
pub const RESERVED_FACTS: [&str; 17] = [
    "Init",
    "Insert",
    "Delete",
    "IsIn",
    "IsNotSet",
    "state",
    "Lock",
    "Unlock",
    "Out",
    "Fr",
    "In",
    "Msg",
    "ProtoNonce",
    "Eq",
    "NotEq",
    "Event",
    "InEvent",
];

/// Whether a fact symbol is reserved. Every `state...` symbol belongs to the
/// `state` family (`state_p`, `statesemi_p`).
pub fn is_reserved_fact(symbol: &str) -> bool {
    symbol.starts_with("state") || RESERVED_FACTS.contains(&symbol)
}

/// Symbols that embedded rules may not use in premises or conclusions,
/// because the adversary rules produce and consume them.
pub const ADVERSARY_FACTS: [&str; 2] = ["K", "Ack"];

/// Assigns lock labels, linking each lock to the first syntactically equal
/// unlock on every branch below it.
pub fn annotate(p: &Process) -> Result<AnnotatedProcess, AnnotationError> {
    let mut counter = 0;
    Ok(AnnotatedProcess(annotate_rec(p, &mut counter, &mut Vec::new())?))
}

fn annotate_rec(p: &Process, counter: &mut u32, pos: &mut Vec<usize>) -> Result<Process, AnnotationError> {
    use Process::*;
    match p {
        Lock(t, None, q) => {
            *counter += 1;
            let l = *counter;
            pos.push(1);
            let q = au(q, t, l, pos)?;
            let q = annotate_rec(&q, counter, pos)?;
            pos.pop();
            Ok(Lock(t.clone(), Some(l), Box::new(q)))
        }
        Unlock(_, None, _) => Err(AnnotationError { position: pos.clone(), reason: "unlock without a preceding lock".into() }),
        _ => {
            let mut out = p.clone();
            let kids: Vec<Process> = p.children().into_iter().cloned().collect();
            let mut new_kids = Vec::new();
            for (i, c) in kids.iter().enumerate() {
                pos.push(i + 1);
                new_kids.push(annotate_rec(c, counter, pos)?);
                pos.pop();
            }
            for (slot, k) in out.children_mut().into_iter().zip(new_kids) {
                *slot = k;
            }
            Ok(out)
        }
    }
}

fn au(p: &Process, t: &Term, l: u32, pos: &mut Vec<usize>) -> Result<Process, AnnotationError> {
    use Process::*;
    match p {
        Zero => Ok(Zero),
        Par(..) | Repl(..) => Err(AnnotationError {
            position: pos.clone(),
            reason: format!("{} reached before the unlock of {}", p.kind(), t),
        }),
        Unlock(u, None, q) if u == t => Ok(Unlock(u.clone(), Some(l), q.clone())),
        Unlock(u, Some(_), _) if u == t => Err(AnnotationError {
            position: pos.clone(),
            reason: format!("unlock of {} is already linked to another lock", t),
        }),
        _ => {
            let mut out = p.clone();
            let kids: Vec<Process> = p.children().into_iter().cloned().collect();
            let mut new_kids = Vec::new();
            for (i, c) in kids.iter().enumerate() {
                pos.push(i + 1);
                new_kids.push(au(c, t, l, pos)?);
                pos.pop();
            }
            for (slot, k) in out.children_mut().into_iter().zip(new_kids) {
                *slot = k;
            }
            Ok(out)
        }
    }
}

/// Checks well-formedness: no reserved vocabulary, unique binders,
/// annotatable locks, fresh-name safe embedded rules, bound fresh names,
/// and groundness (every variable bound).
pub fn check_wellformed(p: &Process) -> Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    let mut binders = BTreeSet::new();
    let mut ctx = Scope::default();
    check_rec(p, &mut Vec::new(), &mut ctx, &mut binders, &mut v);
    if let Err(e) = annotate(p) {
        v.push(Violation { position: e.position, rule: "annotation", message: e.reason });
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

#[derive(Default, Clone)]
struct Scope {
    vars: BTreeSet<Variable>,
    names: BTreeSet<Name>,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
enum Binder {
    Name(Name),
    Var(Arc<str>),
}

fn check_rec(p: &Process, pos: &mut Vec<usize>, sc: &mut Scope, binders: &mut BTreeSet<Binder>, v: &mut Vec<Violation>) {
    use Process::*;
    let here = pos.clone();
    let viol = |v: &mut Vec<Violation>, rule: &'static str, message: String| {
        v.push(Violation { position: here.clone(), rule, message })
    };
    let check_term = |t: &Term, sc: &Scope, v: &mut Vec<Violation>| {
        for x in t.vars() {
            if x.is_reserved() {
                viol(v, "reserved", format!("reserved variable {}", x.text));
            } else if !sc.vars.contains(&x) {
                viol(v, "unbound", format!("variable {} is not bound", x.text));
            }
        }
        let mut names = BTreeSet::new();
        t.collect_names(&mut names);
        for n in names {
            if n.sort == Sort::Fresh && !sc.names.contains(&n) {
                viol(v, "free-name", format!("fresh name {} is not under a new binder", n.text));
            }
        }
    };
    let check_fact = |f: &Fact, v: &mut Vec<Violation>| {
        if is_reserved_fact(&f.symbol) {
            viol(v, "reserved", format!("reserved fact {}", f.symbol));
        }
    };
    let mut bind_var = |x: &Variable, sc: &mut Scope, v: &mut Vec<Violation>| {
        if x.is_reserved() {
            viol(v, "reserved", format!("reserved variable {}", x.text));
        }
        if !binders.insert(Binder::Var(x.text.clone())) {
            viol(v, "rebinding", format!("variable {} is bound more than once", x.text));
        }
        sc.vars.insert(x.clone());
    };
    let mut child_scopes: Vec<Scope> = vec![sc.clone(); p.children().len()];
    match p {
        New(a, _) => {
            if a.sort != Sort::Fresh {
                viol(v, "free-name", format!("new binds {} which is not of sort fresh", a.text));
            }
            if !binders.insert(Binder::Name(a.clone())) {
                viol(v, "rebinding", format!("name {} is bound more than once", a.text));
            }
            child_scopes[0].names.insert(a.clone());
        }
        Out(m, n, _) => {
            m.iter().for_each(|m| check_term(m, sc, v));
            check_term(n, sc, v);
        }
        Insert(m, n, _) | If(m, n, _, _) => {
            check_term(m, sc, v);
            check_term(n, sc, v);
        }
        In(m, n, _) => {
            m.iter().for_each(|m| check_term(m, sc, v));
            let mut names = BTreeSet::new();
            n.collect_names(&mut names);
            for a in names {
                if a.sort == Sort::Fresh && !sc.names.contains(&a) {
                    viol(v, "free-name", format!("fresh name {} is not under a new binder", a.text));
                }
            }
            for x in n.vars() {
                if !sc.vars.contains(&x) {
                    bind_var(&x, &mut child_scopes[0], v);
                }
            }
        }
        Delete(m, _) | Lock(m, _, _) | Unlock(m, _, _) => check_term(m, sc, v),
        Lookup(m, x, _, _) => {
            check_term(m, sc, v);
            if sc.vars.contains(x) {
                viol(v, "rebinding", format!("lookup rebinds {}", x.text));
            }
            bind_var(x, &mut child_scopes[0], v);
        }
        Event(f, _) => {
            check_fact(f, v);
            f.args.iter().for_each(|t| check_term(t, sc, v));
        }
        MsrStep(l, a, r, _) => {
            let mut inner = sc.clone();
            for f in l {
                check_fact(f, v);
                if ADVERSARY_FACTS.contains(&&*f.symbol) {
                    viol(v, "reserved", format!("embedded rule premise uses adversary fact {}", f.symbol));
                }
                for x in f.vars() {
                    if !inner.vars.contains(&x) {
                        bind_var(&x, &mut inner, v);
                    }
                }
                let mut names = BTreeSet::new();
                f.args.iter().for_each(|t| t.collect_names(&mut names));
                for n in names {
                    if n.sort == Sort::Fresh && !sc.names.contains(&n) {
                        viol(v, "free-name", format!("fresh name {} is not under a new binder", n.text));
                    }
                }
            }
            for f in a {
                check_fact(f, v);
                f.args.iter().for_each(|t| check_term(t, &inner, v));
            }
            let mut l_names = BTreeSet::new();
            l.iter().flat_map(|f| f.args.iter()).for_each(|t| t.collect_names(&mut l_names));
            for f in r {
                check_fact(f, v);
                if ADVERSARY_FACTS.contains(&&*f.symbol) {
                    viol(v, "reserved", format!("embedded rule conclusion uses adversary fact {}", f.symbol));
                }
                f.args.iter().for_each(|t| check_term(t, &inner, v));
                let mut names = BTreeSet::new();
                f.args.iter().for_each(|t| t.collect_names(&mut names));
                for n in names {
                    if n.sort == Sort::Fresh && !l_names.contains(&n) {
                        viol(v, "fresh-conclusion", format!("fresh name {} occurs in the conclusion but not the premises", n.text));
                    }
                }
            }
            child_scopes[0] = inner;
        }
        Zero | Par(..) | Repl(..) => {}
    }
    for (i, c) in p.children().into_iter().enumerate() {
        pos.push(i + 1);
        check_rec(c, pos, &mut child_scopes[i], binders, v);
        pos.pop();
    }
}

/// Violations that depend on the theory: destructor symbols in input
/// patterns and embedded-rule premises.
pub fn check_patterns(p: &Process, th: &Theory) -> Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    p.visit(&mut |pos, q| {
        let pats: Vec<&Term> = match q {
            Process::In(_, n, _) => vec![n],
            Process::MsrStep(l, _, _, _) => l.iter().flat_map(|f| f.args.iter()).collect(),
            _ => vec![],
        };
        for t in pats {
            if let Some(d) = th.destructors().iter().find(|d| t.contains_symbol(d)) {
                v.push(Violation {
                    position: pos.to_vec(),
                    rule: "pattern",
                    message: format!("pattern {} uses destructor {}", t, d),
                });
            }
        }
    });
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Process::*;

    fn t(s: &str) -> Term {
        Term::public(s)
    }

    fn bx(p: Process) -> Box<Process> {
        Box::new(p)
    }

    #[test]
    fn straight_line_lock_is_labelled() {
        let p = Lock(t("t"), None, bx(Event(Fact::new("A", vec![]), bx(Unlock(t("t"), None, bx(Zero))))));
        let a = annotate(&p).unwrap();
        assert_eq!(
            a.0,
            Lock(t("t"), Some(1), bx(Event(Fact::new("A", vec![]), bx(Unlock(t("t"), Some(1), bx(Zero))))))
        );
        assert_eq!(a.strip(), p);
    }

    #[test]
    fn parallel_before_unlock_fails() {
        let p = Lock(t("t"), None, bx(Par(bx(Zero), bx(Unlock(t("t"), None, bx(Zero))))));
        let e = annotate(&p).unwrap_err();
        assert_eq!(e.position, vec![1]);
    }

    #[test]
    fn both_branches_of_if_are_labelled() {
        let p = Lock(
            t("t"),
            None,
            bx(If(
                t("u"),
                t("v"),
                bx(Unlock(t("t"), None, bx(Event(Fact::new("P", vec![]), bx(Zero))))),
                bx(Unlock(t("t"), None, bx(Event(Fact::new("Q", vec![]), bx(Zero))))),
            )),
        );
        let a = annotate(&p).unwrap();
        match &a.0 {
            Lock(_, Some(1), q) => match &**q {
                If(_, _, x, y) => {
                    assert!(matches!(&**x, Unlock(_, Some(1), _)));
                    assert!(matches!(&**y, Unlock(_, Some(1), _)));
                }
                _ => panic!(),
            },
            _ => panic!(),
        }
    }

    #[test]
    fn positions_descend_into_children() {
        let p = Par(bx(Event(Fact::new("A", vec![]), bx(Zero))), bx(Zero));
        assert_eq!(subprocess_at(&p, &[2]).unwrap(), &Zero);
        assert_eq!(subprocess_at(&p, &[1, 1]).unwrap(), &Zero);
        assert!(subprocess_at(&p, &[3]).is_err());
        let i = If(t("a"), t("b"), bx(Zero), bx(Event(Fact::new("B", vec![]), bx(Zero))));
        assert!(matches!(subprocess_at(&i, &[2]).unwrap(), Event(..)));
    }

    #[test]
    fn reserved_fact_and_rebinding_are_reported() {
        let p = Event(Fact::new("state", vec![t("x")]), bx(Zero));
        let v = check_wellformed(&p).unwrap_err();
        assert_eq!(v[0].rule, "reserved");
        let a = Name::fresh("a");
        let p = New(a.clone(), bx(New(a, bx(Zero))));
        let v = check_wellformed(&p).unwrap_err();
        assert_eq!(v[0].rule, "rebinding");
    }

    #[test]
    fn free_fresh_names_and_unbound_variables_are_reported() {
        let p = Out(Some(t("c")), Term::fresh("k"), bx(Zero));
        assert_eq!(check_wellformed(&p).unwrap_err()[0].rule, "free-name");
        let p = Out(Some(t("c")), Term::var("x"), bx(Zero));
        assert_eq!(check_wellformed(&p).unwrap_err()[0].rule, "unbound");
    }
}
