//! Order-sorted terms, substitutions, positions, oriented equational
//! theories with normal-form equality, and facts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::TermError;

/// Sorts of names and variables. `Pub` and `Fresh` are subsorts of `Msg`;
/// `Temp` is unrelated to the message sorts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Msg,
    Pub,
    Fresh,
    Temp,
}

impl Sort {
    /// True when a value of sort `self` may stand where `other` is expected.
    pub fn is_subsort_of(self, other: Sort) -> bool {
        self == other || (other == Sort::Msg && matches!(self, Sort::Pub | Sort::Fresh))
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Msg => "msg",
            Sort::Pub => "pub",
            Sort::Fresh => "fresh",
            Sort::Temp => "temp",
        })
    }
}

/// A name of sort `Pub` or `Fresh`. Equality compares text and sort.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name {
    pub text: Arc<str>,
    pub sort: Sort,
}

impl Name {
    pub fn public(text: &str) -> Self {
        Name { text: text.into(), sort: Sort::Pub }
    }

    pub fn fresh(text: &str) -> Self {
        Name { text: text.into(), sort: Sort::Fresh }
    }
}

/// A sorted variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable {
    pub text: Arc<str>,
    pub sort: Sort,
}

impl Variable {
    pub fn new(text: &str, sort: Sort) -> Self {
        Variable { text: text.into(), sort }
    }

    pub fn msg(text: &str) -> Self {
        Self::new(text, Sort::Msg)
    }

    pub fn temp(text: &str) -> Self {
        Self::new(text, Sort::Temp)
    }

    /// Reserved variables are `n_<name>` (one per name) and `lock_<label>`.
    pub fn is_reserved(&self) -> bool {
        let t: &str = &self.text;
        t.starts_with("n_") || t.starts_with("lock_")
    }
}

/// A function symbol with its arity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunSym {
    pub name: Arc<str>,
    pub arity: usize,
    pub private: bool,
}

impl FunSym {
    pub fn new(name: &str, arity: usize) -> Self {
        FunSym { name: name.into(), arity, private: false }
    }
}

pub const PAIR: &str = "pair";
pub const FST: &str = "fst";
pub const SND: &str = "snd";

/// A term. Applications carry the symbol name; arity is the argument count
/// and privacy is looked up in the [`Theory`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Name(Name),
    Var(Variable),
    App(Arc<str>, Vec<Term>),
}

impl Term {
    pub fn public(text: &str) -> Term {
        Term::Name(Name::public(text))
    }

    pub fn fresh(text: &str) -> Term {
        Term::Name(Name::fresh(text))
    }

    pub fn var(text: &str) -> Term {
        Term::Var(Variable::msg(text))
    }

    pub fn var_sorted(text: &str, sort: Sort) -> Term {
        Term::Var(Variable::new(text, sort))
    }

    pub fn app(f: &str, args: Vec<Term>) -> Term {
        Term::App(f.into(), args)
    }

    pub fn constant(f: &str) -> Term {
        Term::App(f.into(), Vec::new())
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::App(PAIR.into(), vec![a, b])
    }

    /// Right-nested tuple `<t1, <t2, ... tn>>`.
    pub fn tuple(mut items: Vec<Term>) -> Term {
        let mut acc = items.pop().expect("tuple needs at least one element");
        while let Some(t) = items.pop() {
            acc = Term::pair(t, acc);
        }
        acc
    }

    /// The sort of the term; applications have sort `Msg`.
    pub fn sort(&self) -> Sort {
        match self {
            Term::Name(n) => n.sort,
            Term::Var(v) => v.sort,
            Term::App(..) => Sort::Msg,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Name(_) => true,
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Variables in order of first occurrence (left to right, depth first).
    pub fn vars(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut Vec<Variable>) {
        match self {
            Term::Name(_) => {}
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn collect_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Name(n) => {
                out.insert(n.clone());
            }
            Term::Var(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.collect_names(out)),
        }
    }

    /// All subterms including the term itself.
    pub fn collect_subterms(&self, out: &mut BTreeSet<Term>) {
        if out.insert(self.clone()) {
            if let Term::App(_, args) = self {
                args.iter().for_each(|a| a.collect_subterms(out));
            }
        }
    }

    /// Number of nested applications (names and variables have depth 0).
    pub fn depth(&self) -> usize {
        match self {
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            _ => 1,
        }
    }

    /// Applies `f` to every name, rebuilding the term.
    pub fn map_names(&self, f: &mut impl FnMut(&Name) -> Term) -> Term {
        match self {
            Term::Name(n) => f(n),
            Term::Var(_) => self.clone(),
            Term::App(g, args) => Term::App(g.clone(), args.iter().map(|a| a.map_names(f)).collect()),
        }
    }

    pub fn contains_symbol(&self, sym: &str) -> bool {
        match self {
            Term::App(g, args) => &**g == sym || args.iter().any(|a| a.contains_symbol(sym)),
            _ => false,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Name(n) => match n.sort {
                Sort::Pub => write!(f, "'{}'", n.text),
                _ => write!(f, "~{}", n.text),
            },
            Term::Var(v) => write!(f, "{}", DisplayVar(v)),
            Term::App(g, args) if &**g == PAIR && args.len() == 2 => {
                write!(f, "<{}, {}>", args[0], args[1])
            }
            Term::App(g, args) => {
                write!(f, "{}(", g)?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", a)?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Prints a variable with its sort prefix (`~` fresh, `$` pub, `#` temp).
pub struct DisplayVar<'a>(pub &'a Variable);

impl fmt::Display for DisplayVar<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.0.sort {
            Sort::Msg => "",
            Sort::Pub => "$",
            Sort::Fresh => "~",
            Sort::Temp => "#",
        };
        write!(f, "{}{}", prefix, self.0.text)
    }
}

/// An oriented equation `lhs -> rhs`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RewriteRule {
    pub lhs: Term,
    pub rhs: Term,
}

impl RewriteRule {
    pub fn new(lhs: Term, rhs: Term) -> Result<Self, TermError> {
        if matches!(lhs, Term::Var(_) | Term::Name(_)) {
            return Err(TermError::BadRule(format!("{} = {}: left side must be an application", lhs, rhs)));
        }
        let lv = lhs.vars();
        if let Some(v) = rhs.vars().into_iter().find(|v| !lv.contains(v)) {
            return Err(TermError::BadRule(format!(
                "{} = {}: variable {} of the right side is not bound on the left",
                lhs,
                rhs,
                DisplayVar(&v)
            )));
        }
        Ok(RewriteRule { lhs, rhs })
    }

    /// Head symbol of the left side.
    pub fn head(&self) -> &str {
        match &self.lhs {
            Term::App(g, _) => g,
            _ => unreachable!("validated at construction"),
        }
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// Default bound on rewrite steps during one normalization.
pub const DEFAULT_REWRITE_BOUND: usize = 10_000;

/// A signature together with a convergent rewrite system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theory {
    pub signature: BTreeMap<Arc<str>, FunSym>,
    pub rules: Vec<RewriteRule>,
    pub rewrite_bound: usize,
}

impl Default for Theory {
    fn default() -> Self {
        Self::new()
    }
}

impl Theory {
    /// The pairing theory: `pair/2`, `fst/1`, `snd/1` with their two rules.
    pub fn new() -> Self {
        let mut signature = BTreeMap::new();
        for (n, a) in [(PAIR, 2), (FST, 1), (SND, 1)] {
            signature.insert(Arc::from(n), FunSym::new(n, a));
        }
        let (x, y) = (Term::var("x"), Term::var("y"));
        let p = Term::pair(x.clone(), y.clone());
        let rules = vec![
            RewriteRule { lhs: Term::app(FST, vec![p.clone()]), rhs: x },
            RewriteRule { lhs: Term::app(SND, vec![p]), rhs: y },
        ];
        Theory { signature, rules, rewrite_bound: DEFAULT_REWRITE_BOUND }
    }

    pub fn add_function(&mut self, sym: FunSym) -> Result<(), TermError> {
        if let Some(old) = self.signature.get(&sym.name) {
            if old != &sym {
                return Err(TermError::Signature(format!("function {} declared twice with different arity", sym.name)));
            }
        }
        self.signature.insert(sym.name.clone(), sym);
        Ok(())
    }

    /// Adds an equation after checking that all its symbols are declared.
    pub fn add_rule(&mut self, rule: RewriteRule) -> Result<(), TermError> {
        self.check_term(&rule.lhs)?;
        self.check_term(&rule.rhs)?;
        self.rules.push(rule);
        Ok(())
    }

    /// Checks that every application uses a declared symbol with the right arity.
    pub fn check_term(&self, t: &Term) -> Result<(), TermError> {
        match t {
            Term::App(g, args) => {
                match self.signature.get(g) {
                    None => return Err(TermError::Signature(format!("undeclared function symbol {}", g))),
                    Some(s) if s.arity != args.len() => {
                        return Err(TermError::Signature(format!(
                            "{} expects {} arguments, found {}",
                            g,
                            s.arity,
                            args.len()
                        )))
                    }
                    _ => {}
                }
                args.iter().try_for_each(|a| self.check_term(a))
            }
            _ => Ok(()),
        }
    }

    /// Symbols heading some rule's left side.
    pub fn destructors(&self) -> BTreeSet<Arc<str>> {
        self.rules
            .iter()
            .map(|r| match &r.lhs {
                Term::App(g, _) => g.clone(),
                _ => unreachable!(),
            })
            .collect()
    }

    pub fn is_destructor(&self, sym: &str) -> bool {
        self.rules.iter().any(|r| r.head() == sym)
    }

    /// Public symbols, in signature order.
    pub fn public_functions(&self) -> Vec<&FunSym> {
        self.signature.values().filter(|s| !s.private).collect()
    }

    /// Symbols declared by the user (excluding built-in pairing).
    pub fn user_functions(&self) -> Vec<&FunSym> {
        self.signature.values().filter(|s| ![PAIR, FST, SND].contains(&&*s.name)).collect()
    }

    /// User equations (excluding the built-in projection rules).
    pub fn user_rules(&self) -> &[RewriteRule] {
        &self.rules[2..]
    }

    /// True when every right side is a subterm of its left side or a ground
    /// term built from public symbols.
    pub fn is_subterm_convergent(&self) -> bool {
        self.rules.iter().all(|r| {
            let mut subs = BTreeSet::new();
            r.lhs.collect_subterms(&mut subs);
            (subs.contains(&r.rhs) && r.rhs != r.lhs) || (r.rhs.is_ground() && self.is_public_ground(&r.rhs))
        })
    }

    fn is_public_ground(&self, t: &Term) -> bool {
        match t {
            Term::Name(n) => n.sort == Sort::Pub,
            Term::Var(_) => false,
            Term::App(g, args) => {
                self.signature.get(g).map(|s| !s.private).unwrap_or(false)
                    && args.iter().all(|a| self.is_public_ground(a))
            }
        }
    }
}

/// Rewrites `t` to its normal form (innermost, leftmost strategy).
pub fn normalize(t: &Term, th: &Theory) -> Result<Term, TermError> {
    let mut budget = th.rewrite_bound;
    normalize_with(t, th, &mut budget)
}

fn normalize_with(t: &Term, th: &Theory, budget: &mut usize) -> Result<Term, TermError> {
    match t {
        Term::App(g, args) => {
            let args = args.iter().map(|a| normalize_with(a, th, budget)).collect::<Result<Vec<_>, _>>()?;
            let t = Term::App(g.clone(), args);
            for rule in &th.rules {
                if let Some(s) = syntactic_match(&rule.lhs, &t) {
                    if *budget == 0 {
                        return Err(TermError::NonTermination { rule: rule.to_string() });
                    }
                    *budget -= 1;
                    let reduct = apply_subst(&s, &rule.rhs);
                    return normalize_with(&reduct, th, budget);
                }
            }
            Ok(t)
        }
        _ => Ok(t.clone()),
    }
}

/// Normalizes a term known to be well-formed; rewrite-bound violations panic.
/// Used by engines operating on checked inputs.
pub fn nf(t: &Term, th: &Theory) -> Term {
    normalize(t, th).unwrap_or_else(|e| panic!("{}", e))
}

/// Equality modulo the theory: syntactic identity of normal forms.
pub fn eq_mod_e(t1: &Term, t2: &Term, th: &Theory) -> Result<bool, TermError> {
    Ok(normalize(t1, th)? == normalize(t2, th)?)
}

/// A finite map from variables to terms.
pub type Substitution = BTreeMap<Variable, Term>;

/// Simultaneous application of `s` to `t`.
pub fn apply_subst(s: &Substitution, t: &Term) -> Term {
    if s.is_empty() {
        return t.clone();
    }
    match t {
        Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Name(_) => t.clone(),
        Term::App(g, args) => Term::App(g.clone(), args.iter().map(|a| apply_subst(s, a)).collect()),
    }
}

/// Checks that every binding respects sorts.
pub fn is_well_typed(s: &Substitution) -> bool {
    s.iter().all(|(v, t)| t.sort().is_subsort_of(v.sort))
}

/// Syntactic matching of `pattern` against `t`, respecting variable sorts.
pub fn syntactic_match(pattern: &Term, t: &Term) -> Option<Substitution> {
    let mut s = Substitution::new();
    if match_into(pattern, t, &mut s) {
        Some(s)
    } else {
        None
    }
}

/// Extends `s` so that `pattern·s = t`; returns false on clash. On failure
/// `s` may hold partial bindings.
pub fn match_into(pattern: &Term, t: &Term, s: &mut Substitution) -> bool {
    match (pattern, t) {
        (Term::Var(v), _) => match s.get(v) {
            Some(bound) => bound == t,
            None => {
                if t.sort().is_subsort_of(v.sort) {
                    s.insert(v.clone(), t.clone());
                    true
                } else {
                    false
                }
            }
        },
        (Term::Name(a), Term::Name(b)) => a == b,
        (Term::App(f, ps), Term::App(g, ts)) => {
            f == g && ps.len() == ts.len() && ps.iter().zip(ts).all(|(p, x)| match_into(p, x, s))
        }
        _ => false,
    }
}

/// Matches a constructor-only pattern against the normal form of a ground term.
pub fn match_nf(pattern: &Term, ground: &Term, th: &Theory) -> Result<Option<Substitution>, TermError> {
    if let Some(d) = first_destructor(pattern, th) {
        return Err(TermError::DestructorPattern(d.to_string()));
    }
    let g = normalize(ground, th)?;
    Ok(syntactic_match(pattern, &g))
}

fn first_destructor<'a>(t: &'a Term, th: &Theory) -> Option<&'a str> {
    match t {
        Term::App(g, args) => {
            if th.is_destructor(g) {
                Some(g)
            } else {
                args.iter().find_map(|a| first_destructor(a, th))
            }
        }
        _ => None,
    }
}

/// A path of 1-based child indices.
pub type Position = Vec<usize>;

/// The subterm of `t` at position `p`.
pub fn subterm_at(t: &Term, p: &[usize]) -> Result<Term, TermError> {
    let mut cur = t;
    for (i, &k) in p.iter().enumerate() {
        match cur {
            Term::App(_, args) if k >= 1 && k <= args.len() => cur = &args[k - 1],
            _ => return Err(TermError::Position(p[..=i].to_vec())),
        }
    }
    Ok(cur.clone())
}

/// A linear or persistent fact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub symbol: Arc<str>,
    pub args: Vec<Term>,
    pub persistent: bool,
}

impl Fact {
    pub fn new(symbol: &str, args: Vec<Term>) -> Self {
        Fact { symbol: symbol.into(), args, persistent: false }
    }

    pub fn persistent(symbol: &str, args: Vec<Term>) -> Self {
        Fact { symbol: symbol.into(), args, persistent: true }
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Fact {
        Fact { symbol: self.symbol.clone(), args: self.args.iter().map(&mut f).collect(), persistent: self.persistent }
    }

    pub fn apply(&self, s: &Substitution) -> Fact {
        self.map_terms(|t| apply_subst(s, t))
    }

    pub fn normalize(&self, th: &Theory) -> Result<Fact, TermError> {
        Ok(Fact {
            symbol: self.symbol.clone(),
            args: self.args.iter().map(|t| normalize(t, th)).collect::<Result<_, _>>()?,
            persistent: self.persistent,
        })
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn vars(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        self.args.iter().for_each(|a| a.collect_vars(&mut out));
        out
    }
}

/// Extends `s` so that `pattern·s = f`.
pub fn match_fact_into(pattern: &Fact, f: &Fact, s: &mut Substitution) -> bool {
    pattern.symbol == f.symbol
        && pattern.persistent == f.persistent
        && pattern.args.len() == f.args.len()
        && pattern.args.iter().zip(&f.args).all(|(p, t)| match_into(p, t, s))
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.persistent {
            f.write_str("!")?;
        }
        write!(f, "{}(", self.symbol)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", a)?;
        }
        f.write_str(")")
    }
}

/// A multiset of facts.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactMultiset {
    entries: BTreeMap<Fact, usize>,
}

impl FactMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, f: Fact) {
        *self.entries.entry(f).or_insert(0) += 1;
    }

    /// Removes one occurrence; returns false when absent.
    pub fn remove_one(&mut self, f: &Fact) -> bool {
        match self.entries.get_mut(f) {
            Some(n) if *n > 1 => {
                *n -= 1;
                true
            }
            Some(_) => {
                self.entries.remove(f);
                true
            }
            None => false,
        }
    }

    pub fn count(&self, f: &Fact) -> usize {
        self.entries.get(f).copied().unwrap_or(0)
    }

    pub fn contains(&self, f: &Fact) -> bool {
        self.entries.contains_key(f)
    }

    pub fn len(&self) -> usize {
        self.entries.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct facts with their multiplicities.
    pub fn iter(&self) -> impl Iterator<Item = (&Fact, usize)> {
        self.entries.iter().map(|(f, n)| (f, *n))
    }

    /// Multiset union.
    pub fn union(&self, other: &FactMultiset) -> FactMultiset {
        let mut out = self.clone();
        for (f, n) in other.iter() {
            *out.entries.entry(f.clone()).or_insert(0) += n;
        }
        out
    }

    /// Multiset difference (saturating).
    pub fn difference(&self, other: &FactMultiset) -> FactMultiset {
        let mut out = self.clone();
        for (f, n) in other.iter() {
            if let Some(m) = out.entries.get_mut(f) {
                if *m > n {
                    *m -= n;
                } else {
                    out.entries.remove(f);
                }
            }
        }
        out
    }

    /// Multiset inclusion.
    pub fn is_subset(&self, other: &FactMultiset) -> bool {
        self.iter().all(|(f, n)| other.count(f) >= n)
    }

    pub fn map_terms(&self, mut g: impl FnMut(&Term) -> Term) -> FactMultiset {
        let mut out = FactMultiset::new();
        for (f, n) in self.iter() {
            let f2 = f.map_terms(&mut g);
            *out.entries.entry(f2).or_insert(0) += n;
        }
        out
    }
}

impl FromIterator<Fact> for FactMultiset {
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        let mut m = FactMultiset::new();
        iter.into_iter().for_each(|f| m.insert(f));
        m
    }
}
