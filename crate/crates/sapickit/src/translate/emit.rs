//! Theory-file emitter and its round-trip parser.

use std::fmt::Write;

use crate::frontend::{print_term, Lemma};
use crate::logic::TraceFormula;
use crate::msr::{MsrRule, MsrSystem};
use crate::terms::Theory;

use super::alpha_conjuncts;

pub use crate::frontend::parse_theory_file as parse_theory;

/// The contents of an emitted theory file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TheoryFile {
    pub name: String,
    pub theory: Theory,
    pub rules: Vec<MsrRule>,
    pub restrictions: Vec<(String, TraceFormula)>,
    pub lemmas: Vec<Lemma>,
}

impl TheoryFile {
    /// Packages a translated system with α as restrictions and the given lemmas.
    pub fn new(name: &str, sys: &MsrSystem, lemmas: &[Lemma]) -> Self {
        TheoryFile {
            name: name.to_string(),
            theory: (*sys.theory).clone(),
            rules: sys.rules.clone(),
            restrictions: alpha_conjuncts().into_iter().map(|(n, f)| (n.to_string(), f)).collect(),
            lemmas: lemmas.to_vec(),
        }
    }
}

/// Prints a theory file in the tamarin-style surface syntax.
pub fn emit_theory(file: &TheoryFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "theory {}\nbegin\n", file.name);
    let funs: Vec<String> = file
        .theory
        .user_functions()
        .iter()
        .map(|f| format!("{}/{}{}", f.name, f.arity, if f.private { " [private]" } else { "" }))
        .collect();
    if !funs.is_empty() {
        let _ = writeln!(out, "functions: {}", funs.join(", "));
    }
    let eqs: Vec<String> =
        file.theory.user_rules().iter().map(|r| format!("{} = {}", print_term(&r.lhs), print_term(&r.rhs))).collect();
    if !eqs.is_empty() {
        let _ = writeln!(out, "equations: {}", eqs.join(", "));
    }
    if !funs.is_empty() || !eqs.is_empty() {
        out.push('\n');
    }
    for r in &file.rules {
        let _ = writeln!(out, "{}", r);
    }
    out.push('\n');
    for (n, f) in &file.restrictions {
        let _ = writeln!(out, "restriction {}: \"{}\"", n, f);
    }
    for l in &file.lemmas {
        let _ = writeln!(out, "lemma {}: {} \"{}\"", l.name, l.mode, l.formula);
    }
    out.push_str("\nend\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_spec;
    use crate::translate::translate;

    #[test]
    fn emitted_theory_parses_back() {
        let spec = parse_spec(
            "theory T begin functions: senc/2, sdec/2 equations: sdec(senc(m,k),k) = m \
             process: !(new k; out(senc('m', k)); in(x); if x = k then event Leak(x)) \
             lemma secret: all-traces \"not Ex x #i. Leak(x) @ #i\" end",
        )
        .unwrap();
        let sys = translate(&spec.process, &spec.theory).unwrap();
        let file = TheoryFile::new("T", &sys, &spec.lemmas);
        let text = emit_theory(&file);
        let back = parse_theory(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(emit_theory(&back), text);
    }
}
