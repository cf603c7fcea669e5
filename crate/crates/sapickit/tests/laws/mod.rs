//! Engine laws as property tests, shared by the acceptance suite and the
//! `engine_laws` test target.

use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sapickit::adversary::{AdversaryMode, Bounds};
use sapickit::frontend::SpecFile;
use sapickit::harness;
use sapickit::logic::Trace;
use sapickit::msr::{random_execution, MsrSystem, Reduction};
use sapickit::pi::random_walk;
use sapickit::terms::{apply_subst, match_nf, nf, normalize, Fact, FactMultiset, Substitution, Term, Theory, Variable};
use sapickit::translate::{check_alpha_procedural, hide_trace, translate};

pub type Law = fn(&mut TestRunner, &Arc<Theory>) -> Result<(), String>;

pub fn all() -> Vec<(&'static str, Law)> {
    vec![
        ("normalize idempotence", normalize_idempotent),
        ("match_nf soundness", match_nf_sound),
        ("multiset conservation", multiset_conservation),
        ("freshness uniqueness", freshness_unique),
        ("lock mutual exclusion", lock_exclusion),
        ("trace prefix closure", prefix_closure),
    ]
}

fn leaf() -> impl Strategy<Value = Term> {
    prop_oneof![
        Just(Term::public("a")),
        Just(Term::public("b")),
        Just(Term::fresh("n1")),
        Just(Term::fresh("n2")),
    ]
}

/// Ground terms over pairs, projections, and symmetric encryption.
fn ground_term() -> impl Strategy<Value = Term> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::pair(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::app("senc", vec![a, b])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::app("sdec", vec![a, b])),
            inner.clone().prop_map(|a| Term::app("fst", vec![a])),
            inner.prop_map(|a| Term::app("snd", vec![a])),
        ]
    })
}

/// Constructor-only patterns over `x`, `y` and ground leaves.
fn pattern() -> impl Strategy<Value = Term> {
    let base = prop_oneof![Just(Term::var("x")), Just(Term::var("y")), leaf()];
    base.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::pair(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Term::app("senc", vec![a, b])),
        ]
    })
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn normalize_idempotent(runner: &mut TestRunner, th: &Arc<Theory>) -> Result<(), String> {
    runner
        .run(&ground_term(), |t| {
            let once = normalize(&t, th).expect("convergent theory");
            let twice = normalize(&once, th).expect("convergent theory");
            prop_assert_eq!(once, twice);
            Ok(())
        })
        .map_err(err)
}

fn match_nf_sound(runner: &mut TestRunner, th: &Arc<Theory>) -> Result<(), String> {
    let strat = (pattern(), ground_term(), ground_term(), ground_term());
    runner
        .run(&strat, |(pat, vx, vy, other)| {
            let s: Substitution = [(Variable::msg("x"), vx), (Variable::msg("y"), vy)].into_iter().collect();
            let instance = nf(&apply_subst(&s, &pat), th);
            for (target, must_match) in [(instance, true), (nf(&other, th), false)] {
                match match_nf(&pat, &target, th).expect("constructor pattern") {
                    Some(m) => prop_assert_eq!(nf(&apply_subst(&m, &pat), th), target),
                    None => prop_assert!(!must_match, "instance {} of {} not matched", target, pat),
                }
            }
            Ok(())
        })
        .map_err(err)
}

/// Small translated processes for random executions.
fn systems() -> Vec<(String, MsrSystem)> {
    ["pnew", "lock-pair", "store", "msr-step", "internal-comm", "guarded-counter", "echo", "conditional"]
        .iter()
        .map(|n| {
            let spec = super::common::load(n);
            (n.to_string(), translate(&spec.process, &spec.theory).expect("translates"))
        })
        .collect()
}

fn split(facts: &[Fact]) -> (FactMultiset, BTreeSet<Fact>) {
    let mut lin = FactMultiset::new();
    let mut pers = BTreeSet::new();
    for f in facts {
        if f.persistent {
            pers.insert(f.clone());
        } else {
            lin.insert(f.clone());
        }
    }
    (lin, pers)
}

fn multiset_conservation(runner: &mut TestRunner, _th: &Arc<Theory>) -> Result<(), String> {
    let systems = systems();
    runner
        .run(&(0..systems.len(), any::<u64>(), 1usize..20), |(k, seed, steps)| {
            let (name, sys) = &systems[k];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let run = random_execution(sys, steps, &mut |n| rng.gen_range(0..n)).expect("applicable instances fire");
            for (i, inst) in run.instances.iter().enumerate() {
                let (cur, next) = (&run.states[i], &run.states[i + 1]);
                let rule = &sys.rules[inst.rule];
                let prems: Vec<Fact> = inst
                    .premises(sys)
                    .into_iter()
                    .zip(&rule.premises)
                    .filter(|(_, pat)| !(&*pat.symbol == "Fr" && !pat.persistent))
                    .map(|(f, _)| f)
                    .collect();
                let (lin_p, pers_p) = split(&prems);
                let (lin_c, pers_c) = split(&inst.conclusions(sys));
                prop_assert!(lin_p.is_subset(&cur.linear), "{}: {} consumed missing facts", name, rule.name);
                prop_assert!(pers_p.is_subset(&cur.persistent));
                prop_assert_eq!(&next.linear, &cur.linear.difference(&lin_p).union(&lin_c));
                let pers: BTreeSet<Fact> = cur.persistent.union(&pers_c).cloned().collect();
                prop_assert_eq!(&next.persistent, &pers);
                prop_assert_eq!(&run.trace[i], &inst.actions(sys).into_iter().collect::<BTreeSet<_>>());
            }
            Ok(())
        })
        .map_err(err)
}

fn names_in(facts: impl IntoIterator<Item = Fact>) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for f in facts {
        for a in &f.args {
            a.collect_subterms(&mut out);
        }
    }
    out.into_iter().filter(|t| matches!(t, Term::Name(_))).collect()
}

fn freshness_unique(runner: &mut TestRunner, _th: &Arc<Theory>) -> Result<(), String> {
    let systems = systems();
    let repl = super::common::load("repl-new");
    let bounds = Bounds { max_visible: 8, ..Bounds::default() };
    let view = harness::view(&repl, &bounds, AdversaryMode::Silent);
    runner
        .run(&(0..systems.len(), any::<u64>(), 1usize..20), |(k, seed, steps)| {
            let (_, sys) = &systems[k];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let run = random_execution(sys, steps, &mut |n| rng.gen_range(0..n)).expect("applicable instances fire");
            let mut used: BTreeSet<Term> = BTreeSet::new();
            for (i, inst) in run.instances.iter().enumerate() {
                let rule = &sys.rules[inst.rule];
                let before = names_in(run.states[i].facts().cloned());
                for pat in rule.premises.iter().filter(|p| &*p.symbol == "Fr" && !p.persistent) {
                    let v = pat.vars().into_iter().next().expect("Fr has a variable");
                    let n = inst.subst.get(&v).expect("Fr variable bound").clone();
                    prop_assert!(!before.contains(&n), "{} already occurs in the state", n);
                    prop_assert!(used.insert(n.clone()), "{} allocated twice", n);
                }
            }
            let path = random_walk(&repl.process, &view, &bounds, steps, &mut |n| rng.gen_range(0..n));
            let last = &path.last().expect("initial state").trace;
            let created: Vec<&Term> =
                last.iter().flatten().filter(|f| &*f.symbol == "Created").map(|f| &f.args[0]).collect();
            let distinct: BTreeSet<&Term> = created.iter().copied().collect();
            prop_assert_eq!(created.len(), distinct.len());
            Ok(())
        })
        .map_err(err)
}

const CRITICAL: &str = "theory Critical
begin
process:
  !( lock 'l'; event Enter('1'); event Exit('1'); unlock 'l' )
| !( lock 'l'; event Enter('2'); event Exit('2'); unlock 'l' )
| !( lock 'm'; event Other(); unlock 'm' )
end
";

/// `Enter` and `Exit` strictly alternate with matching arguments.
fn alternates(tr: &Trace) -> bool {
    let mut inside: Option<Term> = None;
    for f in tr.iter().flatten() {
        match (&*f.symbol, &inside) {
            ("Enter", None) => inside = Some(f.args[0].clone()),
            ("Exit", Some(t)) if *t == f.args[0] => inside = None,
            ("Enter", _) | ("Exit", _) => return false,
            _ => {}
        }
    }
    true
}

fn lock_exclusion(runner: &mut TestRunner, _th: &Arc<Theory>) -> Result<(), String> {
    let spec: SpecFile = harness::load_str(CRITICAL).map_err(err)?;
    let sys = translate(&spec.process, &spec.theory).map_err(err)?;
    let bounds = Bounds { max_visible: 40, max_silent: 40, ..Bounds::default() };
    let view = harness::view(&spec, &bounds, AdversaryMode::Silent);
    runner
        .run(&(any::<u64>(), 1usize..40), |(seed, steps)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let path = random_walk(&spec.process, &view, &bounds, steps, &mut |n| rng.gen_range(0..n));
            for st in &path {
                prop_assert!(alternates(&st.trace), "pi trace {:?}", st.trace);
                prop_assert!(st.config.locks.len() <= 2);
            }
            let run = random_execution(&sys, steps.min(20), &mut |n| rng.gen_range(0..n)).expect("applicable instances fire");
            if check_alpha_procedural(&run.trace, &spec.theory) {
                prop_assert!(alternates(&hide_trace(&run.trace)), "msr trace {:?}", run.trace);
            }
            Ok(())
        })
        .map_err(err)
}

fn prefix_closed(traces: &BTreeSet<Trace>) -> bool {
    traces.iter().all(|t| (0..t.len()).all(|n| traces.contains(&t[..n].to_vec())))
}

fn prefix_closure(runner: &mut TestRunner, _th: &Arc<Theory>) -> Result<(), String> {
    let specs: Vec<SpecFile> =
        ["zero", "events-par", "lock-pair", "store", "msr-step", "echo", "guarded-counter", "repl-new", "internal-comm"]
            .iter()
            .map(|n| super::common::load(n))
            .collect();
    runner
        .run(&(0..specs.len(), 1usize..=3, 0u64..1000, any::<bool>()), |(k, visible, seed, demand)| {
            let spec = &specs[k];
            let bounds = Bounds { max_visible: visible, adversary_fresh_pool: 1, seed, ..Bounds::default() };
            let mode = if demand { AdversaryMode::Demand } else { AdversaryMode::Silent };
            let a = harness::run_pi(spec, &bounds, mode.clone());
            let b = harness::run_msr(spec, &bounds, mode, Reduction::Reduced).expect("translates");
            prop_assert!(a.truncated.is_none() && b.truncated.is_none());
            prop_assert!(prefix_closed(&a.traces), "pi traces of {} not prefix-closed", spec.name);
            prop_assert!(prefix_closed(&b.traces), "msr traces of {} not prefix-closed", spec.name);
            prop_assert!(a.traces.iter().all(|t| t.len() <= visible));
            Ok(())
        })
        .map_err(err)
}
