//! Recursive-descent parser for theories, processes, and trace formulas.

use std::collections::BTreeMap;

use super::lexer::{lex, Tok};
use super::{Lemma, Options, SpecFile};
use crate::error::{ParseError, Span};
use crate::logic::{Mode, TraceFormula};
use crate::msr::MsrRule;
use crate::translate::TheoryFile;
use crate::process::Process;
use crate::terms::{Fact, FunSym, Name, RewriteRule, Sort, Term, Theory, Variable};

const KEYWORDS: [&str; 14] =
    ["new", "out", "in", "if", "then", "else", "event", "insert", "delete", "lookup", "as", "lock", "unlock", "process"];

#[derive(Debug, Clone)]
enum Binding {
    Name(Name),
    Var(Variable),
}

/// How unbound identifiers in a term are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TermMode {
    /// Unbound identifiers are public names.
    Use,
    /// Unbound identifiers become fresh bindings (input patterns, rule premises).
    Pattern,
    /// Unbound identifiers are variables (equations).
    Equation,
    /// Only quantified variables may occur (formulas).
    Formula,
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    theory: Theory,
    scope: Vec<(String, Binding)>,
    persistence: BTreeMap<String, bool>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str, theory: &Theory) -> PResult<Self> {
        Ok(Parser { toks: lex(src)?, pos: 0, theory: theory.clone(), scope: Vec::new(), persistence: BTreeMap::new() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError { span: self.span(), message: message.into() })
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {}, found {}", t, self.peek()))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{}`, found {}", kw, self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {}", other)),
        }
    }

    fn lookup(&self, name: &str) -> Option<&Binding> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, b)| b)
    }

    // ---- terms ----

    fn term(&mut self, mode: TermMode) -> PResult<Term> {
        let span = self.span();
        match self.peek().clone() {
            Tok::LAngle => {
                self.bump();
                let mut items = vec![self.term(mode)?];
                while self.eat(&Tok::Comma) {
                    items.push(self.term(mode)?);
                }
                self.expect(Tok::RAngle)?;
                if items.len() < 2 {
                    return Err(ParseError { span, message: "a tuple needs at least two components".into() });
                }
                Ok(Term::tuple(items))
            }
            Tok::Quoted(s) => {
                self.bump();
                Ok(Term::public(&s))
            }
            Tok::Tilde | Tok::Dollar | Tok::Hash => {
                let sort = match self.bump() {
                    Tok::Tilde => Sort::Fresh,
                    Tok::Dollar => Sort::Pub,
                    _ => Sort::Temp,
                };
                let name = self.ident()?;
                self.sorted_var(&name, sort, mode, span)
            }
            Tok::Ident(name) => {
                self.bump();
                if KEYWORDS.contains(&name.as_str()) && mode != TermMode::Formula {
                    return Err(ParseError { span, message: format!("keyword `{}` cannot be used as a term", name) });
                }
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let args = self.term_list(mode, Tok::RParen)?;
                    return self.application(&name, args, span);
                }
                if let Some(b) = self.lookup(&name) {
                    return Ok(match b {
                        Binding::Name(n) => Term::Name(n.clone()),
                        Binding::Var(v) => Term::Var(v.clone()),
                    });
                }
                if let Some(sym) = self.theory.signature.get(name.as_str()) {
                    if sym.arity == 0 {
                        return Ok(Term::constant(&name));
                    }
                }
                match mode {
                    TermMode::Use => Ok(Term::public(&name)),
                    TermMode::Pattern => {
                        let v = Variable::msg(&name);
                        self.scope.push((name, Binding::Var(v.clone())));
                        Ok(Term::Var(v))
                    }
                    TermMode::Equation => Ok(Term::var(&name)),
                    TermMode::Formula => Err(ParseError { span, message: format!("unbound identifier `{}`", name) }),
                }
            }
            other => self.err(format!("expected a term, found {}", other)),
        }
    }

    fn sorted_var(&mut self, name: &str, sort: Sort, mode: TermMode, span: Span) -> PResult<Term> {
        if let Some(Binding::Var(v)) = self.lookup(name) {
            if v.sort != sort {
                return Err(ParseError { span, message: format!("variable {} used with sort {} but bound with sort {}", name, sort, v.sort) });
            }
            return Ok(Term::Var(v.clone()));
        }
        let v = Variable::new(name, sort);
        match mode {
            TermMode::Pattern => {
                self.scope.push((name.to_string(), Binding::Var(v.clone())));
                Ok(Term::Var(v))
            }
            TermMode::Formula => Err(ParseError { span, message: format!("unbound variable `{}`", name) }),
            _ => Ok(Term::Var(v)),
        }
    }

    fn term_list(&mut self, mode: TermMode, close: Tok) -> PResult<Vec<Term>> {
        let mut args = Vec::new();
        if self.eat(&close) {
            return Ok(args);
        }
        loop {
            args.push(self.term(mode)?);
            if self.eat(&Tok::Comma) {
                continue;
            }
            self.expect(close.clone())?;
            return Ok(args);
        }
    }

    fn application(&self, name: &str, args: Vec<Term>, span: Span) -> PResult<Term> {
        match self.theory.signature.get(name) {
            None => Err(ParseError { span, message: format!("undeclared function symbol `{}`", name) }),
            Some(s) if s.arity != args.len() => Err(ParseError {
                span,
                message: format!("`{}` expects {} arguments, found {}", name, s.arity, args.len()),
            }),
            Some(_) => Ok(Term::app(name, args)),
        }
    }

    fn fact(&mut self, mode: TermMode) -> PResult<Fact> {
        let span = self.span();
        let persistent = self.eat(&Tok::Bang);
        let sym = self.ident()?;
        self.expect(Tok::LParen)?;
        let args = self.term_list(mode, Tok::RParen)?;
        self.check_persistence(&sym, persistent, span)?;
        Ok(Fact { symbol: sym.into(), args, persistent })
    }

    fn check_persistence(&mut self, sym: &str, persistent: bool, span: Span) -> PResult<()> {
        match self.persistence.get(sym) {
            Some(&p) if p != persistent => Err(ParseError {
                span,
                message: format!("fact {} used both as linear and persistent", sym),
            }),
            _ => {
                self.persistence.insert(sym.to_string(), persistent);
                Ok(())
            }
        }
    }

    fn fact_list(&mut self, mode: TermMode, close: Tok) -> PResult<Vec<Fact>> {
        let mut out = Vec::new();
        if self.eat(&close) {
            return Ok(out);
        }
        loop {
            out.push(self.fact(mode)?);
            if self.eat(&Tok::Comma) {
                continue;
            }
            self.expect(close.clone())?;
            return Ok(out);
        }
    }

    // ---- processes ----

    fn process(&mut self) -> PResult<Process> {
        let mut p = self.seq()?;
        while self.eat(&Tok::Bar) {
            let q = self.seq()?;
            p = Process::Par(Box::new(p), Box::new(q));
        }
        Ok(p)
    }

    /// Parses a branch in a nested scope.
    fn scoped<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        let mark = self.scope.len();
        let r = f(self);
        self.scope.truncate(mark);
        r
    }

    fn cont(&mut self) -> PResult<Box<Process>> {
        if self.eat(&Tok::Semi) {
            Ok(Box::new(self.seq()?))
        } else {
            Ok(Box::new(Process::Zero))
        }
    }

    fn seq(&mut self) -> PResult<Process> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number(0) => {
                self.bump();
                Ok(Process::Zero)
            }
            Tok::Bang => {
                self.bump();
                Ok(Process::Repl(Box::new(self.seq()?)))
            }
            Tok::LParen => {
                self.bump();
                let p = self.scoped(|s| s.process())?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::LBracket => self.scoped(|s| s.msr_step()),
            Tok::Ident(kw) => match kw.as_str() {
                "new" => {
                    self.bump();
                    let n = self.ident()?;
                    let name = Name::fresh(&n);
                    self.scoped(|s| {
                        s.scope.push((n, Binding::Name(name.clone())));
                        let p = s.cont()?;
                        Ok(Process::New(name, p))
                    })
                }
                "out" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let first = self.term(TermMode::Use)?;
                    let (ch, msg) = if self.eat(&Tok::Comma) {
                        (Some(first), self.term(TermMode::Use)?)
                    } else {
                        (None, first)
                    };
                    self.expect(Tok::RParen)?;
                    Ok(Process::Out(ch, msg, self.cont()?))
                }
                "in" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    self.scoped(|s| {
                        let mark = s.pos;
                        let ch = s.term(TermMode::Use)?;
                        let (ch, pat) = if s.eat(&Tok::Comma) {
                            (Some(ch), s.term(TermMode::Pattern)?)
                        } else {
                            s.pos = mark;
                            (None, s.term(TermMode::Pattern)?)
                        };
                        s.expect(Tok::RParen)?;
                        Ok(Process::In(ch, pat, s.cont()?))
                    })
                }
                "if" => {
                    self.bump();
                    let m = self.term(TermMode::Use)?;
                    self.expect(Tok::Eq)?;
                    let n = self.term(TermMode::Use)?;
                    self.expect_kw("then")?;
                    let p = self.scoped(|s| s.seq())?;
                    let q = if self.eat_kw("else") { self.scoped(|s| s.seq())? } else { Process::Zero };
                    Ok(Process::If(m, n, Box::new(p), Box::new(q)))
                }
                "event" => {
                    self.bump();
                    let f = self.fact(TermMode::Use)?;
                    Ok(Process::Event(f, self.cont()?))
                }
                "insert" => {
                    self.bump();
                    let m = self.term(TermMode::Use)?;
                    self.expect(Tok::Comma)?;
                    let n = self.term(TermMode::Use)?;
                    Ok(Process::Insert(m, n, self.cont()?))
                }
                "delete" => {
                    self.bump();
                    let m = self.term(TermMode::Use)?;
                    Ok(Process::Delete(m, self.cont()?))
                }
                "lookup" => {
                    self.bump();
                    let m = self.term(TermMode::Use)?;
                    self.expect_kw("as")?;
                    let sort = match self.peek() {
                        Tok::Tilde => {
                            self.bump();
                            Sort::Fresh
                        }
                        Tok::Dollar => {
                            self.bump();
                            Sort::Pub
                        }
                        _ => Sort::Msg,
                    };
                    let x = self.ident()?;
                    let v = Variable::new(&x, sort);
                    self.expect_kw("in")?;
                    let p = self.scoped(|s| {
                        s.scope.push((x.clone(), Binding::Var(v.clone())));
                        s.seq()
                    })?;
                    let q = if self.eat_kw("else") { self.scoped(|s| s.seq())? } else { Process::Zero };
                    Ok(Process::Lookup(m, v, Box::new(p), Box::new(q)))
                }
                "lock" | "unlock" => {
                    self.bump();
                    let m = self.term(TermMode::Use)?;
                    let p = self.cont()?;
                    Ok(if kw == "lock" { Process::Lock(m, None, p) } else { Process::Unlock(m, None, p) })
                }
                _ => Err(ParseError { span, message: format!("expected a process, found identifier `{}`", kw) }),
            },
            other => self.err(format!("expected a process, found {}", other)),
        }
    }

    fn msr_step(&mut self) -> PResult<Process> {
        self.expect(Tok::LBracket)?;
        let l = self.fact_list(TermMode::Pattern, Tok::RBracket)?;
        let a = if self.eat(&Tok::Arrow) {
            Vec::new()
        } else {
            self.expect(Tok::ArrowOpen)?;
            if self.eat(&Tok::ArrowClose) {
                Vec::new()
            } else {
                let mut out = Vec::new();
                loop {
                    out.push(self.fact(TermMode::Use)?);
                    if self.eat(&Tok::Comma) {
                        continue;
                    }
                    self.expect(Tok::ArrowClose)?;
                    break out;
                }
            }
        };
        self.expect(Tok::LBracket)?;
        let r = self.fact_list(TermMode::Use, Tok::RBracket)?;
        Ok(Process::MsrStep(l, a, r, self.cont()?))
    }

    // ---- formulas ----

    fn formula(&mut self) -> PResult<TraceFormula> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.formula()?;
            return Ok(TraceFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<TraceFormula> {
        let mut items = vec![self.conjunction()?];
        while self.eat(&Tok::Bar) {
            items.push(self.conjunction()?);
        }
        Ok(TraceFormula::disj(items))
    }

    fn conjunction(&mut self) -> PResult<TraceFormula> {
        let mut items = vec![self.unary()?];
        while self.eat(&Tok::Amp) {
            items.push(self.unary()?);
        }
        Ok(TraceFormula::conj(items))
    }

    fn unary(&mut self) -> PResult<TraceFormula> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(k) if k == "not" => {
                self.bump();
                Ok(TraceFormula::not(self.unary()?))
            }
            Tok::Ident(k) if (k == "F" || k == "False") && !self.continues_atom() => {
                self.bump();
                Ok(TraceFormula::False)
            }
            Tok::Ident(k) if (k == "T" || k == "True") && !self.continues_atom() => {
                self.bump();
                Ok(TraceFormula::not(TraceFormula::False))
            }
            Tok::Ident(k) if k == "All" || k == "Ex" => {
                self.bump();
                let mark = self.scope.len();
                let mut vars = Vec::new();
                while *self.peek() != Tok::Dot {
                    let sort = match self.peek() {
                        Tok::Hash => Sort::Temp,
                        Tok::Tilde => Sort::Fresh,
                        Tok::Dollar => Sort::Pub,
                        _ => Sort::Msg,
                    };
                    if sort != Sort::Msg {
                        self.bump();
                    }
                    let n = self.ident()?;
                    let v = Variable::new(&n, sort);
                    self.scope.push((n, Binding::Var(v.clone())));
                    vars.push(v);
                }
                if vars.is_empty() {
                    return Err(ParseError { span, message: "quantifier without variables".into() });
                }
                self.expect(Tok::Dot)?;
                let body = self.formula();
                self.scope.truncate(mark);
                let body = body?;
                Ok(if k == "All" { TraceFormula::forall(vars, body) } else { TraceFormula::exists(vars, body) })
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Bang => {
                let fact = self.fact(TermMode::Formula)?;
                self.expect(Tok::At)?;
                let i = self.time_var()?;
                Ok(TraceFormula::Action(fact, i))
            }
            Tok::Ident(name) if *self.peek_at(1) == Tok::LParen && !self.theory.signature.contains_key(name.as_str()) => {
                let fact = self.fact(TermMode::Formula)?;
                self.expect(Tok::At)?;
                let i = self.time_var()?;
                Ok(TraceFormula::Action(fact, i))
            }
            _ => {
                let lhs = self.term(TermMode::Formula)?;
                if self.eat(&Tok::LAngle) {
                    let rhs = self.term(TermMode::Formula)?;
                    return match (lhs, rhs) {
                        (Term::Var(i), Term::Var(j)) if i.sort == Sort::Temp && j.sort == Sort::Temp => {
                            Ok(TraceFormula::Less(i, j))
                        }
                        _ => Err(ParseError { span, message: "`<` compares timepoint variables".into() }),
                    };
                }
                self.expect(Tok::Eq)?;
                let rhs = self.term(TermMode::Formula)?;
                match (&lhs, &rhs) {
                    (Term::Var(i), Term::Var(j)) if i.sort == Sort::Temp && j.sort == Sort::Temp => {
                        Ok(TraceFormula::EqTime(i.clone(), j.clone()))
                    }
                    _ => Ok(TraceFormula::EqTerm(lhs, rhs)),
                }
            }
        }
    }

    fn continues_atom(&self) -> bool {
        matches!(self.peek_at(1), Tok::LParen | Tok::Eq | Tok::LAngle | Tok::At)
    }

    fn time_var(&mut self) -> PResult<Variable> {
        let span = self.span();
        self.eat(&Tok::Hash);
        let n = self.ident()?;
        match self.lookup(&n) {
            Some(Binding::Var(v)) if v.sort == Sort::Temp => Ok(v.clone()),
            _ => Err(ParseError { span, message: format!("`{}` is not a bound timepoint variable", n) }),
        }
    }

    // ---- files ----

    fn rule_facts(&mut self, close: Tok) -> PResult<Vec<Fact>> {
        let mut out = Vec::new();
        if self.eat(&close) {
            return Ok(out);
        }
        loop {
            let persistent = self.eat(&Tok::Bang);
            let sym = self.ident()?;
            self.expect(Tok::LParen)?;
            let args = self.term_list(TermMode::Equation, Tok::RParen)?;
            out.push(Fact { symbol: sym.into(), args, persistent });
            if self.eat(&Tok::Comma) {
                continue;
            }
            self.expect(close)?;
            return Ok(out);
        }
    }

    fn msr_rule(&mut self) -> PResult<MsrRule> {
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        self.expect(Tok::LBracket)?;
        let l = self.rule_facts(Tok::RBracket)?;
        let a = if self.eat(&Tok::Arrow) { Vec::new() } else {
            self.expect(Tok::ArrowOpen)?;
            self.rule_facts(Tok::ArrowClose)?
        };
        self.expect(Tok::LBracket)?;
        let r = self.rule_facts(Tok::RBracket)?;
        Ok(MsrRule::new(name, l, a, r))
    }

    fn theory_file(&mut self) -> PResult<TheoryFile> {
        self.expect_kw("theory")?;
        let name = self.ident()?;
        self.expect_kw("begin")?;
        let mut file = TheoryFile { name, ..TheoryFile::default() };
        loop {
            let span = self.span();
            match self.peek().clone() {
                Tok::Ident(k) if k == "end" => {
                    self.bump();
                    if *self.peek() != Tok::Eof {
                        return self.err("unexpected input after `end`");
                    }
                    break;
                }
                Tok::Ident(k) if k == "functions" => {
                    self.bump();
                    self.expect(Tok::Colon)?;
                    self.functions_section(span)?;
                }
                Tok::Ident(k) if k == "equations" => {
                    self.bump();
                    self.expect(Tok::Colon)?;
                    self.equations_section()?;
                }
                Tok::Ident(k) if k == "rule" => {
                    self.bump();
                    let r = self.msr_rule()?;
                    file.rules.push(r);
                }
                Tok::Ident(k) if k == "restriction" => {
                    self.bump();
                    let n = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let f = self.quoted_formula()?;
                    file.restrictions.push((n, f));
                }
                Tok::Ident(k) if k == "lemma" => {
                    self.bump();
                    let l = self.lemma_decl(span)?;
                    file.lemmas.push(l);
                }
                other => return Err(ParseError { span, message: format!("expected a theory item, found {}", other) }),
            }
        }
        file.theory = self.theory.clone();
        Ok(file)
    }

    fn functions_section(&mut self, span: Span) -> PResult<()> {
        loop {
            let f = self.ident()?;
            self.expect(Tok::Slash)?;
            let arity = match self.bump() {
                Tok::Number(n) => n as usize,
                other => return Err(ParseError { span: self.span(), message: format!("expected arity, found {}", other) }),
            };
            let mut sym = FunSym::new(&f, arity);
            if self.eat(&Tok::LBracket) {
                self.expect_kw("private")?;
                self.expect(Tok::RBracket)?;
                sym.private = true;
            }
            if KEYWORDS.contains(&f.as_str()) {
                return Err(ParseError { span, message: format!("keyword `{}` cannot name a function", f) });
            }
            self.theory.add_function(sym).map_err(|e| ParseError { span, message: e.to_string() })?;
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(())
    }

    fn equations_section(&mut self) -> PResult<()> {
        loop {
            let espan = self.span();
            let lhs = self.term(TermMode::Equation)?;
            self.expect(Tok::Eq)?;
            let rhs = self.term(TermMode::Equation)?;
            let rule = RewriteRule::new(lhs, rhs).map_err(|e| ParseError { span: espan, message: e.to_string() })?;
            self.theory.add_rule(rule).map_err(|e| ParseError { span: espan, message: e.to_string() })?;
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(())
    }

    fn lemma_decl(&mut self, span: Span) -> PResult<Lemma> {
        let lname = self.ident()?;
        self.expect(Tok::Colon)?;
        let m1 = self.ident()?;
        self.expect(Tok::Minus)?;
        let m2 = self.ident()?;
        let mode = match (m1.as_str(), m2.as_str()) {
            ("all", "traces") => Mode::AllTraces,
            ("exists", "trace") => Mode::ExistsTrace,
            _ => return Err(ParseError { span, message: format!("unknown lemma mode {}-{}", m1, m2) }),
        };
        let formula = self.quoted_formula()?;
        Ok(Lemma { name: lname, mode, formula })
    }

    fn quoted_formula(&mut self) -> PResult<TraceFormula> {
        self.expect(Tok::DQuote)?;
        let saved = std::mem::take(&mut self.persistence);
        let f = self.formula();
        self.persistence = saved;
        let formula = f?;
        self.expect(Tok::DQuote)?;
        Ok(formula)
    }


    fn spec(&mut self) -> PResult<SpecFile> {
        let mut name = String::from("unnamed");
        if self.eat_kw("theory") {
            name = self.ident()?;
        }
        self.eat_kw("begin");
        let mut options = Options::default();
        let mut process = None;
        let mut lemmas = Vec::new();
        loop {
            let span = self.span();
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(k) if k == "end" => {
                    self.bump();
                    if *self.peek() != Tok::Eof {
                        return self.err("unexpected input after `end`");
                    }
                    break;
                }
                Tok::Ident(k) if k == "functions" => {
                    self.bump();
                    self.expect(Tok::Colon)?;
                    self.functions_section(span)?;
                }
                Tok::Ident(k) if k == "equations" => {
                    self.bump();
                    self.expect(Tok::Colon)?;
                    self.equations_section()?;
                }
                Tok::Ident(k) if k == "options" => {
                    self.bump();
                    self.expect(Tok::Colon)?;
                    loop {
                        let ospan = self.span();
                        let mut key = self.ident()?;
                        while self.eat(&Tok::Minus) {
                            key.push('_');
                            key.push_str(&self.ident()?);
                        }
                        self.expect(Tok::Eq)?;
                        let v = match self.bump() {
                            Tok::Number(n) => n as usize,
                            other => return Err(ParseError { span: ospan, message: format!("expected a number, found {}", other) }),
                        };
                        options.set(&key, v).map_err(|m| ParseError { span: ospan, message: m })?;
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                Tok::Ident(k) if k == "process" => {
                    self.bump();
                    self.expect(Tok::Colon)?;
                    if process.is_some() {
                        return Err(ParseError { span, message: "a file declares exactly one process".into() });
                    }
                    let p = self.process()?;
                    process = Some(p);
                }
                Tok::Ident(k) if k == "lemma" => {
                    self.bump();
                    let l = self.lemma_decl(span)?;
                    if lemmas.iter().any(|x: &Lemma| x.name == l.name) {
                        return Err(ParseError { span, message: format!("lemma {} declared twice", l.name) });
                    }
                    lemmas.push(l);
                }
                other => return Err(ParseError { span, message: format!("expected a section keyword, found {}", other) }),
            }
        }
        let process = match process {
            Some(p) => p,
            None => return self.err("missing `process:` section"),
        };
        Ok(SpecFile { name, theory: self.theory.clone(), process, lemmas, options })
    }
}

/// Parses a complete `.sapic` file.
pub fn parse_spec(text: &str) -> Result<SpecFile, ParseError> {
    let mut p = Parser::new(text, &Theory::new())?;
    p.spec()
}

/// Parses a process over the given theory.
pub fn parse_process(text: &str, th: &Theory) -> Result<Process, ParseError> {
    let mut p = Parser::new(text, th)?;
    let proc_ = p.process()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {} after process", p.peek()));
    }
    Ok(proc_)
}

/// Parses a closed trace formula over the given theory.
pub fn parse_formula(text: &str, th: &Theory) -> Result<TraceFormula, ParseError> {
    let mut p = Parser::new(text, th)?;
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {} after formula", p.peek()));
    }
    Ok(f)
}

/// Parses a term; unbound identifiers are public names.
pub fn parse_term(text: &str, th: &Theory) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, th)?;
    let t = p.term(TermMode::Use)?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {} after term", p.peek()));
    }
    Ok(t)
}

/// Parses a theory file produced by the emitter.
pub fn parse_theory_file(text: &str) -> Result<TheoryFile, ParseError> {
    let mut p = Parser::new(text, &Theory::new())?;
    p.theory_file()
}
