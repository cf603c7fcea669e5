//! Pretty-printer producing text that parses back to the same syntax tree.

use std::fmt::Write;

use super::SpecFile;
use crate::process::Process;
use crate::terms::{DisplayVar, Fact, Sort, Term, PAIR};

/// Prints a term in process syntax: fresh names bare, public names quoted.
pub fn print_term(t: &Term) -> String {
    let mut s = String::new();
    write_term(&mut s, t);
    s
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::Name(n) if n.sort == Sort::Pub => {
            let _ = write!(out, "'{}'", n.text);
        }
        Term::Name(n) => out.push_str(&n.text),
        Term::Var(v) => {
            let _ = write!(out, "{}", DisplayVar(v));
        }
        Term::App(f, args) if &**f == PAIR && args.len() == 2 => {
            out.push('<');
            write_term(out, &args[0]);
            out.push_str(", ");
            write_term(out, &args[1]);
            out.push('>');
        }
        Term::App(f, args) => {
            out.push_str(f);
            out.push('(');
            write_terms(out, args);
            out.push(')');
        }
    }
}

fn write_terms(out: &mut String, ts: &[Term]) {
    for (i, a) in ts.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_term(out, a);
    }
}

/// Prints a fact in process syntax.
pub fn print_fact(f: &Fact) -> String {
    let mut s = String::new();
    write_fact(&mut s, f);
    s
}

fn write_fact(out: &mut String, f: &Fact) {
    if f.persistent {
        out.push('!');
    }
    out.push_str(&f.symbol);
    out.push('(');
    write_terms(out, &f.args);
    out.push(')');
}

fn write_facts(out: &mut String, fs: &[Fact]) {
    for (i, f) in fs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_fact(out, f);
    }
}

/// Prints a process; `parse_process(print_process(p))` reproduces `p`.
pub fn print_process(p: &Process) -> String {
    let mut s = String::new();
    write_process(&mut s, p);
    s
}

fn write_process(out: &mut String, p: &Process) {
    match p {
        Process::Par(a, b) => {
            write_process(out, a);
            out.push_str(" | ");
            write_seq(out, b, matches!(**b, Process::Par(..)));
        }
        _ => write_seq(out, p, false),
    }
}

fn write_seq(out: &mut String, p: &Process, paren: bool) {
    if paren || matches!(p, Process::Par(..)) {
        out.push('(');
        write_process(out, p);
        out.push(')');
        return;
    }
    match p {
        Process::Zero => out.push('0'),
        Process::Par(..) => unreachable!(),
        Process::Repl(q) => {
            out.push('!');
            write_seq(out, q, false);
        }
        Process::New(n, q) => {
            let _ = write!(out, "new {}", n.text);
            write_cont(out, q);
        }
        Process::Out(c, m, q) => {
            out.push_str("out(");
            if let Some(c) = c {
                write_term(out, c);
                out.push_str(", ");
            }
            write_term(out, m);
            out.push(')');
            write_cont(out, q);
        }
        Process::In(c, m, q) => {
            out.push_str("in(");
            if let Some(c) = c {
                write_term(out, c);
                out.push_str(", ");
            }
            write_term(out, m);
            out.push(')');
            write_cont(out, q);
        }
        Process::If(m, n, a, b) => {
            out.push_str("if ");
            write_term(out, m);
            out.push_str(" = ");
            write_term(out, n);
            out.push_str(" then ");
            write_branches(out, a, b);
        }
        Process::Event(f, q) => {
            out.push_str("event ");
            write_fact(out, f);
            write_cont(out, q);
        }
        Process::Insert(m, n, q) => {
            out.push_str("insert ");
            write_term(out, m);
            out.push_str(", ");
            write_term(out, n);
            write_cont(out, q);
        }
        Process::Delete(m, q) => {
            out.push_str("delete ");
            write_term(out, m);
            write_cont(out, q);
        }
        Process::Lookup(m, x, a, b) => {
            out.push_str("lookup ");
            write_term(out, m);
            let _ = write!(out, " as {} in ", DisplayVar(x));
            write_branches(out, a, b);
        }
        Process::Lock(m, _, q) | Process::Unlock(m, _, q) => {
            out.push_str(if matches!(p, Process::Lock(..)) { "lock " } else { "unlock " });
            write_term(out, m);
            write_cont(out, q);
        }
        Process::MsrStep(l, a, r, q) => {
            out.push('[');
            write_facts(out, l);
            out.push_str("] --[");
            write_facts(out, a);
            out.push_str("]-> [");
            write_facts(out, r);
            out.push(']');
            write_cont(out, q);
        }
    }
}

fn write_branches(out: &mut String, then: &Process, els: &Process) {
    if *els == Process::Zero {
        write_seq(out, then, false);
    } else {
        write_seq(out, then, *then != Process::Zero);
        out.push_str(" else ");
        write_seq(out, els, false);
    }
}

fn write_cont(out: &mut String, q: &Process) {
    if *q != Process::Zero {
        out.push_str("; ");
        write_seq(out, q, false);
    }
}

/// Prints a whole `.sapic` file.
pub fn print_spec(spec: &SpecFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "theory {}\nbegin", spec.name);
    let funs: Vec<String> = spec
        .theory
        .user_functions()
        .iter()
        .map(|f| format!("{}/{}{}", f.name, f.arity, if f.private { " [private]" } else { "" }))
        .collect();
    if !funs.is_empty() {
        let _ = writeln!(out, "functions: {}", funs.join(", "));
    }
    let eqs: Vec<String> = spec
        .theory
        .user_rules()
        .iter()
        .map(|r| format!("{} = {}", print_term(&r.lhs), print_term(&r.rhs)))
        .collect();
    if !eqs.is_empty() {
        let _ = writeln!(out, "equations: {}", eqs.join(", "));
    }
    let opts: Vec<String> = spec.options.entries().iter().map(|(k, v)| format!("{}={}", k, v)).collect();
    if !opts.is_empty() {
        let _ = writeln!(out, "options: {}", opts.join(", "));
    }
    let _ = writeln!(out, "process:\n  {}", print_process(&spec.process));
    for l in &spec.lemmas {
        let _ = writeln!(out, "lemma {}: {} \"{}\"", l.name, l.mode, l.formula);
    }
    out.push_str("end\n");
    out
}
