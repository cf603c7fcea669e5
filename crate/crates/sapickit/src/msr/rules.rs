use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::frontend::print_fact;
use crate::terms::{Fact, Term, Theory, Variable};

/// A labelled multiset rewrite rule `l --[a]-> r`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MsrRule {
    pub name: String,
    pub premises: Vec<Fact>,
    pub actions: Vec<Fact>,
    pub conclusions: Vec<Fact>,
}

impl MsrRule {
    pub fn new(name: impl Into<String>, premises: Vec<Fact>, actions: Vec<Fact>, conclusions: Vec<Fact>) -> Self {
        MsrRule { name: name.into(), premises, actions, conclusions }
    }

    /// Variables of the rule in order of first occurrence.
    pub fn vars(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        for f in self.premises.iter().chain(&self.actions).chain(&self.conclusions) {
            for a in &f.args {
                a.collect_vars(&mut out);
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        out.retain(|v| seen.insert(v.clone()));
        out
    }

    /// Variables of the conclusions and actions not bound by a premise.
    pub fn unbound_vars(&self) -> Vec<Variable> {
        let mut bound = Vec::new();
        for f in &self.premises {
            for a in &f.args {
                a.collect_vars(&mut bound);
            }
        }
        self.vars().into_iter().filter(|v| !bound.contains(v)).collect()
    }

    /// Whether the actions are only `ProtoNonce` facts.
    pub fn is_inert(&self) -> bool {
        self.actions.iter().all(|f| &*f.symbol == "ProtoNonce")
    }

    pub fn linear_premises(&self) -> impl Iterator<Item = &Fact> {
        self.premises.iter().filter(|f| !f.persistent)
    }

    pub fn persistent_premises(&self) -> impl Iterator<Item = &Fact> {
        self.premises.iter().filter(|f| f.persistent)
    }
}

fn write_facts(f: &mut fmt::Formatter<'_>, facts: &[Fact]) -> fmt::Result {
    for (i, x) in facts.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        f.write_str(&print_fact(x))?;
    }
    Ok(())
}

impl fmt::Display for MsrRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}: [", self.name)?;
        write_facts(f, &self.premises)?;
        if self.actions.is_empty() {
            f.write_str("] --> [")?;
        } else {
            f.write_str("] --[")?;
            write_facts(f, &self.actions)?;
            f.write_str("]-> [")?;
        }
        write_facts(f, &self.conclusions)?;
        f.write_str("]")
    }
}

/// How the explorer treats a protocol rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleClass {
    /// Fired immediately whenever its premise is present: inert, one linear
    /// premise that no other rule consumes, no persistent premises.
    Eager,
    /// Fired only to supply a linear premise of another rule: inert, at most
    /// one linear premise.
    Lazy,
    /// Fired as an explicit step.
    Normal,
}

/// A set of rules over a theory. Adversary rules are the ones whose names
/// start with `MD`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MsrSystem {
    pub theory: Arc<Theory>,
    pub rules: Vec<MsrRule>,
}

impl MsrSystem {
    pub fn new(theory: Arc<Theory>, rules: Vec<MsrRule>) -> Self {
        MsrSystem { theory, rules }
    }

    pub fn rule(&self, name: &str) -> Option<&MsrRule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// Rules other than the adversary rules.
    pub fn protocol_rules(&self) -> impl Iterator<Item = &MsrRule> {
        self.rules.iter().filter(|r| !is_adversary_rule(r))
    }

    /// Classifies each protocol rule for the reduced explorer.
    pub fn classify(&self) -> BTreeMap<String, RuleClass> {
        let mut consumers: BTreeMap<Arc<str>, usize> = BTreeMap::new();
        for r in self.protocol_rules() {
            for f in r.linear_premises() {
                *consumers.entry(f.symbol.clone()).or_default() += 1;
            }
        }
        let mut out = BTreeMap::new();
        for r in self.protocol_rules() {
            let linear: Vec<&Fact> = r.linear_premises().filter(|f| &*f.symbol != "Fr").collect();
            let has_in = linear.iter().any(|f| &*f.symbol == "In");
            let simple = r.is_inert() && !has_in && linear.len() <= 1 && r.unbound_vars().is_empty();
            let class = if simple
                && linear.len() == 1
                && r.persistent_premises().next().is_none()
                && consumers.get(&linear[0].symbol) == Some(&1)
            {
                RuleClass::Eager
            } else if simple && r.conclusions.iter().any(|f| !f.persistent) {
                RuleClass::Lazy
            } else {
                RuleClass::Normal
            };
            out.insert(r.name.clone(), class);
        }
        out
    }

    /// Fresh-sorted variables bound by `Fr` premises.
    pub fn fresh_vars(rule: &MsrRule) -> Vec<Variable> {
        let mut out = Vec::new();
        for f in rule.premises.iter().filter(|f| &*f.symbol == "Fr") {
            if let Some(Term::Var(v)) = f.args.first() {
                out.push(v.clone());
            }
        }
        out
    }
}

impl fmt::Display for MsrSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{}", r)?;
        }
        Ok(())
    }
}

/// Whether a rule is one of the adversary rules.
pub fn is_adversary_rule(r: &MsrRule) -> bool {
    r.name.starts_with("MD")
}
