//! Behavior of the two engines against each other and against fixed
//! examples.

mod common;

use std::collections::BTreeSet;

use sapickit::adversary::{AdversaryMode, Bounds};
use sapickit::harness::{self, EvalSide, Verdict};
use sapickit::logic::Trace;
use sapickit::msr::{applicable, fire, MsrState, Reduction};
use sapickit::terms::{Fact, Term};
use sapickit::translate::translate;

use common::{el, p};

fn drop_nonces(tr: &Trace) -> Trace {
    tr.iter()
        .map(|e| e.iter().filter(|f| &*f.symbol != "ProtoNonce").cloned().collect::<BTreeSet<Fact>>())
        .filter(|e| !e.is_empty())
        .collect()
}

fn expected_trace(h: &Term, k: &Term) -> Trace {
    vec![
        el(vec![Fact::new("Init", vec![])]),
        el(vec![Fact::new("Event", vec![]), Fact::new("NewKey", vec![h.clone(), k.clone()])]),
        el(vec![Fact::new("Insert", vec![Term::pair(p("key"), h.clone()), k.clone()])]),
        el(vec![Fact::new("Insert", vec![Term::pair(p("att"), h.clone()), p("dec")])]),
    ]
}

#[test]
fn expected_trace_replays_in_the_generic_semantics() {
    let spec = common::load("pnew");
    let sys = translate(&spec.process, &spec.theory).unwrap();
    let order = ["Init", "p_0_repl", "p_1_new", "p_11_new", "p_111_event", "p_1111_insert", "p_11111_insert", "p_111111_out"];
    let mut state = MsrState::new();
    let mut trace: Trace = Vec::new();
    for name in order {
        let inst = applicable(&sys, &state)
            .into_iter()
            .find(|i| sys.rules[i.rule].name == name)
            .unwrap_or_else(|| panic!("{} not applicable", name));
        let (next, acts) = fire(&sys, &state, &inst).unwrap();
        trace.push(acts.into_iter().collect());
        state = next;
    }
    let (h, k) = (Term::fresh("1"), Term::fresh("2"));
    assert_eq!(drop_nonces(&trace), expected_trace(&h, &k));
    assert!(state.contains(&Fact::new("Out", vec![h])));
}

#[test]
fn reference_explorer_reaches_the_expected_trace() {
    let spec = common::load("pnew");
    let bounds = Bounds { max_visible: 4, adversary_fresh_pool: 1, ..Bounds::default() };
    let r = harness::run_msr(&spec, &bounds, AdversaryMode::Silent, Reduction::None).unwrap();
    let want = expected_trace(&Term::fresh("f1"), &Term::fresh("f2"));
    assert!(r.raw.iter().any(|t| drop_nonces(t) == want));
}

#[test]
fn reference_and_reduced_explorers_agree() {
    let bounds = Bounds { max_visible: 3, adversary_fresh_pool: 1, state_cap: 50_000, ..Bounds::default() };
    let mut complete = 0;
    for name in ["zero", "events-par", "lock-pair", "store", "msr-step", "echo", "internal-comm", "repl-new", "pnew"] {
        let spec = common::load(name);
        let reduced = harness::run_msr(&spec, &bounds, AdversaryMode::Silent, Reduction::Reduced).unwrap();
        let reference = harness::run_msr(&spec, &bounds, AdversaryMode::Silent, Reduction::None).unwrap();
        assert!(reduced.truncated.is_none(), "{}", name);
        if reference.truncated.is_none() {
            complete += 1;
            assert_eq!(reduced.traces, reference.traces, "{}", name);
        } else {
            assert!(reference.traces.is_subset(&reduced.traces), "{}", name);
        }
    }
    assert!(complete >= 6);
}

#[test]
fn zero_has_only_the_empty_trace() {
    let spec = common::load("zero");
    let rep = harness::cmd_diff(&spec, &Bounds::default(), AdversaryMode::Silent).unwrap();
    assert!(rep.equal);
    let pi = harness::run_pi(&spec, &Bounds::default(), AdversaryMode::Silent);
    assert_eq!(pi.traces, [Vec::new()].into_iter().collect());
}

#[test]
fn pnew_is_equal_at_default_bounds() {
    let spec = common::load("pnew");
    let rep = harness::cmd_diff(&spec, &Bounds::default(), AdversaryMode::Silent).unwrap();
    assert_eq!(rep.verdict, Verdict::Ok);
    assert!(rep.formulas.iter().all(|f| f.agree));
}

#[test]
fn untruncated_reference_runs_check_the_translated_formula() {
    let spec = common::load("lock-pair");
    let rep = harness::cmd_diff(&spec, &Bounds::default(), AdversaryMode::Silent).unwrap();
    assert_eq!(rep.verdict, Verdict::Ok);
    assert!(!rep.formulas.is_empty());
    assert!(rep.formulas.iter().all(|f| f.agree && f.msr_translated));
}

#[test]
fn removing_the_unlock_shrinks_the_pi_side_only_through_blocking() {
    let text = std::fs::read_to_string(common::corpus_path("lock-pair")).unwrap();
    let without = text.replace("; unlock 'l' )", " )");
    assert_ne!(text, without);
    let (with, without) = (harness::load_str(&text).unwrap(), harness::load_str(&without).unwrap());
    let b = Bounds::default();
    let a = harness::run_pi(&with, &b, AdversaryMode::Silent);
    let c = harness::run_pi(&without, &b, AdversaryMode::Silent);
    assert!(c.traces.is_subset(&a.traces) && c.traces.len() < a.traces.len());
    for spec in [&with, &without] {
        let rep = harness::cmd_diff(spec, &b, AdversaryMode::Silent).unwrap();
        assert_eq!(rep.verdict, Verdict::Ok, "{:?}", rep);
    }
}

#[test]
fn demand_mode_differential_is_exact() {
    let bounds = Bounds { max_visible: 4, adversary_fresh_pool: 1, ..Bounds::default() };
    for name in ["zero", "events-par", "lock-pair", "store", "msr-step", "echo", "guarded-counter", "pnew", "repl-new"] {
        let spec = common::load(name);
        let rep = harness::cmd_diff(&spec, &bounds, AdversaryMode::Demand).unwrap();
        assert_eq!(rep.verdict, Verdict::Ok, "{}: {:?}", name, rep);
    }
}

#[test]
fn seeds_do_not_change_trace_sets() {
    let spec = common::load("store");
    let base = harness::run_pi(&spec, &Bounds::default(), AdversaryMode::Demand).traces;
    for seed in [1, 7, 12345] {
        let b = Bounds { seed, ..Bounds::default() };
        assert_eq!(harness::run_pi(&spec, &b, AdversaryMode::Demand).traces, base);
        let m = harness::run_msr(&spec, &b, AdversaryMode::Demand, Reduction::Reduced).unwrap();
        assert_eq!(m.traces, base);
    }
}

fn with_lemma(name: &str, lemma: &str) -> sapickit::frontend::SpecFile {
    let text = std::fs::read_to_string(common::corpus_path(name)).unwrap();
    let text = text.replacen("\nend", &format!("\n{}\nend", lemma), 1);
    harness::load_str(&text).unwrap()
}

#[test]
fn false_as_an_existential_query_is_violated() {
    for name in ["zero", "pnew", "lock-pair"] {
        let spec = with_lemma(name, "lemma bottom: exists-trace \"F\"");
        for side in [EvalSide::Pi, EvalSide::Msr] {
            let rep = harness::cmd_eval(&spec, "bottom", side, &Bounds::default()).unwrap();
            assert!(!rep.holds);
            assert_eq!(rep.verdict, Verdict::Violated);
            assert!(rep.witness.is_none());
        }
    }
}

#[test]
fn pnew_secrecy_holds_on_both_sides() {
    let spec = common::load("pnew");
    for side in [EvalSide::Pi, EvalSide::Msr] {
        let rep = harness::cmd_eval(&spec, "secrecy", side, &Bounds::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Ok);
        let rep = harness::cmd_eval(&spec, "creation", side, &Bounds::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Ok);
        assert!(rep.witness.is_some());
    }
}

#[test]
fn leaked_key_is_found_on_both_sides() {
    let spec = with_lemma(
        "pnew",
        "lemma leak: all-traces \"All h k #i. NewKey(h, k) @ #i ==> not Ex #j. K(h) @ #j\"",
    );
    let b = Bounds { max_visible: 3, ..Bounds::default() };
    for side in [EvalSide::Pi, EvalSide::Msr] {
        let rep = harness::cmd_eval(&spec, "leak", side, &b).unwrap();
        assert_eq!(rep.verdict, Verdict::Violated, "{:?}", side);
        let w = rep.witness.unwrap();
        assert!(w.iter().flatten().any(|f| &*f.symbol == "K"));
    }
}

#[test]
fn unguarded_lemmas_are_rejected() {
    let spec = with_lemma("zero", "lemma loose: all-traces \"All x. x = x\"");
    assert!(harness::cmd_eval(&spec, "loose", EvalSide::Pi, &Bounds::default()).is_err());
}
