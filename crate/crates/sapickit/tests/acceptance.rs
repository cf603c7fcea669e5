//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::test_runner::{Config as PtConfig, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sapickit::adversary::{AdversaryMode, Bounds};
use sapickit::deduction::{derivable, Frame};
use sapickit::harness::{self, EvalSide, Verdict};
use sapickit::logic::{holds, satisfies_brute_force, Mode, Trace, TraceFormula as F, Valuation};
use sapickit::msr::{canonical_renaming, rename_term, MsrRule};
use sapickit::pi::explore_pi_with;
use sapickit::terms::{Fact, Name, Term, Theory, Variable};
use sapickit::translate::{
    alpha_conjuncts, check_alpha_procedural, check_eq, check_in, check_init, check_inev, check_lock, check_noteq,
    check_notin, filter, hide, parse_theory, translate, translate_formula,
};

use common::{FormulaGen, TraceGen};

type Outcome = Result<String, String>;

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("1 deduction example", c1_deduction, Duration::from_secs(1)),
        ("2 translation fidelity", c2_translation, Duration::from_secs(1)),
        ("3 pi-semantics reproduction", c3_pi_example, Duration::from_secs(10)),
        ("4 differential corpus", c4_differential, Duration::from_secs(120 * common::DIFF_CORPUS.len() as u64)),
        ("5 filter and hide", c5_filter_hide, Duration::from_secs(60)),
        ("6 attack reproduction", c6_attack, Duration::from_secs(300)),
        ("7 axiom checkers", c7_alpha, Duration::from_secs(60)),
        ("8 engine laws", c8_laws, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let res = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let res = match res {
            Ok(_) if took > limit => Err(format!("took {:.2?}, limit {:?}", took, limit)),
            r => r,
        };
        match res {
            Ok(detail) => println!("criterion {}: PASS ({:.2?}) {}", name, took, detail),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL ({:.2?}) {}", name, took, detail);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn c1_deduction() -> Outcome {
    let th = common::senc_theory();
    let (k1, k2) = (Name::fresh("k1"), Name::fresh("k2"));
    let frame = Frame::new(
        [k1.clone(), k2.clone()],
        [Term::app("senc", vec![Term::Name(k2.clone()), Term::Name(k1.clone())]), Term::Name(k1)],
    );
    let target = Term::Name(k2);
    ensure(derivable(&frame, &target, 2, &th), "k2 not derivable at depth 2")?;
    // The proof tree uses one destructor application on two frame variables.
    ensure(derivable(&frame, &target, 1, &th), "k2 not derivable at depth 1")?;
    ensure(!derivable(&frame, &target, 0, &th), "k2 derivable without applying sdec")?;
    let without_key = Frame::new(frame.restricted.clone(), [frame.knowledge.values().next().unwrap().clone()]);
    ensure(!derivable(&without_key, &target, 2, &th), "k2 derivable without k1")?;
    Ok("k2 derivable via sdec(x1, x2)".into())
}

/// A rule with variables renamed in first-occurrence order and the
/// `ProtoNonce` labels removed (the expected listing omits them).
fn shape(r: &MsrRule) -> String {
    let mut order: Vec<Variable> = Vec::new();
    for f in r.premises.iter().chain(&r.actions).chain(&r.conclusions) {
        for v in f.vars() {
            if !order.contains(&v) {
                order.push(v);
            }
        }
    }
    let map: BTreeMap<Variable, Term> = order
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), Term::var_sorted(&format!("v{}", i), v.sort)))
        .collect();
    let show = |fs: &[Fact]| {
        fs.iter()
            .filter(|f| &*f.symbol != "ProtoNonce")
            .map(|f| f.apply(&map).to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!("[{}] --[{}]-> [{}]", show(&r.premises), show(&r.actions), show(&r.conclusions))
}

const PNEW_EXPECTED: &str = "theory Expected
begin
rule r0: [] --[Init()]-> [state_0()]
rule r1: [state_0()] --> [!state_1()]
rule r2: [!state_1(), Fr(~h)] --> [state_11(~h)]
rule r3: [state_11(~h), Fr(~k)] --> [state_111(~k, ~h)]
rule r4: [state_111(~k, ~h)] --[Event(), NewKey(~h, ~k)]-> [state_1111(~k, ~h)]
rule r5: [state_1111(~k, ~h)] --[Insert(<'key', ~h>, ~k)]-> [state_11111(~k, ~h)]
rule r6: [state_11111(~k, ~h)] --[Insert(<'att', ~h>, 'dec')]-> [state_111111(~k, ~h)]
rule r7: [state_111111(~k, ~h)] --> [Out(~h), state_1111111(~k, ~h)]
end
";

fn c2_translation() -> Outcome {
    let spec = common::load("pnew");
    let sys = translate(&spec.process, &spec.theory).map_err(|e| e.to_string())?;
    let expected = parse_theory(PNEW_EXPECTED).map_err(|e| e.to_string())?;
    let mut got: Vec<String> = sys.protocol_rules().map(shape).collect();
    let mut want: Vec<String> = expected.rules.iter().map(shape).collect();
    ensure(got.len() == 8, format!("expected Init and 7 protocol rules, got {} rules", got.len()))?;
    got.sort();
    want.sort();
    ensure(got == want, format!("rule sets differ:\n  got  {:?}\n  want {:?}", got, want))?;
    let md = sys.rules.len() - sys.protocol_rules().count();
    ensure(md == 7, format!("expected 7 adversary rules for pairs, got {}", md))?;
    Ok("Init + 7 rules match the expected listing".into())
}

fn c3_pi_example() -> Outcome {
    let spec = common::load("pnew");
    let bounds = Bounds { max_visible: 4, deduction_depth: 2, ..Bounds::default() };
    let view = harness::view(&spec, &bounds, AdversaryMode::Silent);
    let (f1, f2) = (Term::fresh("f1"), Term::fresh("f2"));
    let want_first: BTreeSet<Fact> = [Fact::new("NewKey", vec![f1.clone(), f2.clone()])].into_iter().collect();
    let key = Term::pair(Term::public("key"), f1.clone());
    let att = Term::pair(Term::public("att"), f1.clone());
    let mut found = false;
    let res = explore_pi_with(&spec.process, &view, &bounds, &mut |st| {
        if st.trace.len() != 1 {
            return true;
        }
        let ren = canonical_renaming(&st.trace);
        let first: BTreeSet<Fact> = st.trace[0].iter().map(|f| f.map_terms(|t| rename_term(t, &ren))).collect();
        let store: BTreeMap<Term, Term> =
            st.config.store.iter().map(|(k, v)| (rename_term(k, &ren), rename_term(v, &ren))).collect();
        if first == want_first && store.get(&key) == Some(&f2) && store.get(&att) == Some(&Term::public("dec")) {
            found = true;
            return false;
        }
        true
    });
    ensure(found, format!("no matching configuration among {} states", res.states))?;
    Ok("[{NewKey(f1, f2)}] with <'key', f1> -> f2 and <'att', f1> -> 'dec'".into())
}

fn c4_differential() -> Outcome {
    let required = ["par", "repl", "new", "out", "in", "if", "event", "insert", "delete", "lookup", "lock", "unlock", "msr"];
    let mut covered = BTreeSet::new();
    let mut slowest = Duration::ZERO;
    for name in common::DIFF_CORPUS {
        let spec = common::load(name);
        spec.process.visit(&mut |_, q| {
            covered.insert(q.kind());
        });
        let bounds = Bounds { max_visible: 4, deduction_depth: 2, adversary_fresh_pool: 1, ..Bounds::default() };
        let start = Instant::now();
        let rep = harness::cmd_diff(&spec, &bounds, AdversaryMode::Silent).map_err(|e| format!("{}: {}", name, e))?;
        let took = start.elapsed();
        slowest = slowest.max(took);
        ensure(took < Duration::from_secs(120), format!("{} took {:.2?}", name, took))?;
        ensure(rep.verdict == Verdict::Ok && rep.equal, format!("{}: {:?}", name, rep))?;
    }
    let missing: Vec<&&str> = required.iter().filter(|k| !covered.contains(**k)).collect();
    ensure(missing.is_empty(), format!("constructs not covered: {:?}", missing))?;
    let internal = common::load("internal-comm");
    let b = Bounds { max_visible: 4, deduction_depth: 2, adversary_fresh_pool: 1, ..Bounds::default() };
    let got = harness::run_pi(&internal, &b, AdversaryMode::Silent);
    ensure(
        got.traces.iter().any(|t| t.iter().flatten().any(|f| &*f.symbol == "Got")),
        "no internal communication observed",
    )?;
    Ok(format!("{} processes equal, slowest {:.2?}", common::DIFF_CORPUS.len(), slowest))
}

fn satisfied(traces: &[Trace], phi: &F, mode: Mode, th: &Theory, brute: bool) -> bool {
    let one = |tr: &Trace| {
        if brute {
            satisfies_brute_force(tr, &Valuation::default(), phi, th).expect("closed formula")
        } else {
            holds(tr, phi, th).expect("guarded formula")
        }
    };
    match mode {
        Mode::AllTraces => traces.iter().all(one),
        Mode::ExistsTrace => traces.iter().any(one),
    }
}

fn c5_filter_hide() -> Outcome {
    let th = Theory::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sets: Vec<Vec<Trace>> = {
        let mut g = TraceGen { rng: &mut rng, max_len: 6, valid_bias: 0.85 };
        (0..200).map(|_| g.trace_set(5)).collect()
    };
    let formulas: Vec<F> = {
        let mut g = FormulaGen::new(&mut rng);
        (0..50).map(|_| g.formula()).collect()
    };
    let mut nonempty_filtered = 0;
    let mut verdicts = [0usize; 2];
    for tr in &sets {
        let kept: Vec<Trace> = tr.iter().filter(|t| check_alpha_procedural(t, &th)).cloned().collect();
        let generic = filter(tr, &th).map_err(|e| e.to_string())?;
        ensure(kept == generic, "filter disagrees with the procedural axiom checkers")?;
        if !kept.is_empty() {
            nonempty_filtered += 1;
        }
        let hidden = hide(tr);
        for phi in &formulas {
            for mode in [Mode::AllTraces, Mode::ExistsTrace] {
                let translated = translate_formula(phi, mode).map_err(|e| e.to_string())?;
                let lhs = satisfied(tr, &translated, mode, &th, false);
                let rhs = satisfied(&kept, phi, mode, &th, true);
                ensure(lhs == rhs, format!("filter counterexample: {} on {:?}", phi, tr))?;
                verdicts[lhs as usize] += 1;
                let before = satisfied(tr, phi, mode, &th, false);
                let after = satisfied(&hidden, phi, mode, &th, true);
                ensure(before == after, format!("hide counterexample: {} on {:?}", phi, tr))?;
            }
        }
    }
    ensure(nonempty_filtered >= 50, format!("only {} sets keep a trace after filtering", nonempty_filtered))?;
    ensure(verdicts.iter().all(|&v| v >= 2000), format!("unbalanced verdicts {:?}", verdicts))?;
    Ok(format!(
        "200 sets x 50 formulas, {} sets non-empty after filter, {} true / {} false",
        nonempty_filtered, verdicts[1], verdicts[0]
    ))
}

fn c6_attack() -> Outcome {
    let mut lines = Vec::new();
    for (name, expect_holds) in [("pkcs11-locked", true), ("pkcs11-unlocked", false)] {
        let spec = common::load(name);
        let bounds = harness::BoundOverrides::default().resolve(&spec.options);
        let start = Instant::now();
        let rep = harness::cmd_eval(&spec, "secrecy", EvalSide::Pi, &bounds).map_err(|e| e.to_string())?;
        if expect_holds {
            ensure(rep.verdict == Verdict::Ok && rep.truncated.is_none(), format!("{}: {:?}", name, rep.verdict))?;
        } else {
            ensure(rep.verdict == Verdict::Violated, format!("{}: {:?}", name, rep.verdict))?;
            let w = rep.witness.as_ref().ok_or("no witness")?;
            let pos = |sym: &str| w.iter().position(|el| el.iter().any(|f| &*f.symbol == sym));
            let has_input = |tag: &str| {
                w.iter().flatten().any(|f| &*f.symbol == "K" && f.args[0].to_string().contains(&format!("'{}'", tag)))
            };
            ensure(has_input("set_dec") && has_input("set_wrap"), "witness lacks the two attribute changes")?;
            let (wrap, dec) = (pos("Wrap").ok_or("no Wrap")?, pos("DecUsing").ok_or("no DecUsing")?);
            ensure(wrap < dec, "decryption does not follow the wrap")?;
            let keys: BTreeSet<Term> =
                w.iter().flatten().filter(|f| &*f.symbol == "NewKey").map(|f| f.args[1].clone()).collect();
            ensure(keys.len() == 2, "expected two device keys")?;
            let leaked = w.iter().flatten().any(|f| &*f.symbol == "K" && keys.contains(&f.args[0]));
            ensure(leaked, "no device key becomes known")?;
        }
        lines.push(format!("{} {} in {:.1?} ({} states)", name, if rep.holds { "holds" } else { "violated" }, start.elapsed(), rep.states));
    }
    Ok(lines.join("; "))
}

fn c7_alpha() -> Outcome {
    let th = Theory::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut g = TraceGen { rng: &mut rng, max_len: 7, valid_bias: 0.8 };
    let checkers: [fn(&Trace, &Theory) -> bool; 7] = [
        |t, _| check_init(t),
        check_eq,
        check_noteq,
        check_in,
        check_notin,
        check_lock,
        check_inev,
    ];
    let conj = alpha_conjuncts();
    let mut holding = [0usize; 7];
    for _ in 0..500 {
        let tr = g.trace();
        for (k, ((name, phi), check)) in conj.iter().zip(checkers).enumerate() {
            let generic = holds(&tr, phi, &th).map_err(|e| e.to_string())?;
            ensure(generic == check(&tr, &th), format!("{} disagrees on {:?}", name, tr))?;
            holding[k] += generic as usize;
        }
    }
    ensure(holding.iter().all(|&h| h > 0 && h < 500), format!("degenerate sample: {:?}", holding))?;
    Ok(format!("500 traces, per-conjunct satisfied counts {:?}", holding))
}

fn c8_laws() -> Outcome {
    let th = Arc::new(common::senc_theory());
    let mut report = Vec::new();
    for (name, law) in laws::all() {
        let mut runner = TestRunner::new(PtConfig { cases: 1000, failure_persistence: None, ..PtConfig::default() });
        law(&mut runner, &th).map_err(|e| format!("{}: {}", name, e))?;
        report.push(name);
    }
    Ok(format!("{} laws x 1000 cases", report.len()))
}

#[path = "laws/mod.rs"]
mod laws;
