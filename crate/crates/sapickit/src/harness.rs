//! Drivers behind the command-line tool: loading files, running both
//! engines with matched bounds, the differential comparison, and property
//! evaluation. Every report serializes to the JSON shapes in `schema/`.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::adversary::{AdversaryMode, AdversaryView, Bounds, Relevance};
use crate::error::Error;
use crate::frontend::{parse_spec, print_term, Lemma, Options, SpecFile};
use crate::logic::{holds, Mode, Trace, TraceFormula};
use crate::msr::{canonicalize_trace, explore_msr, explore_msr_with, MsrExploration, MsrSystem, Reduction};
use crate::pi::{explore_pi, explore_pi_with, PiExploration};
use crate::process::{check_patterns, check_wellformed};
use crate::terms::{Fact, Name};
use crate::translate::{emit_theory, translate, translate_formula, TheoryFile};

/// Environment variable holding the successor-ordering seed.
pub const SEED_VAR: &str = "SAPICKIT_SEED";

/// Cap on states for the reference msr run used to evaluate translated
/// formulas on unfiltered traces.
const RAW_STATE_CAP: usize = 20_000;

/// Outcome classes, mapped to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Ok,
    Violated,
    BoundInconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Ok => 0,
            Verdict::Violated => 1,
            Verdict::BoundInconclusive => 3,
        }
    }
}

/// Bound values given on the command line; they override file options.
#[derive(Debug, Clone, Copy, Default)]
pub struct BoundOverrides {
    pub visible: Option<usize>,
    pub silent: Option<usize>,
    pub depth: Option<usize>,
    pub fresh_pool: Option<usize>,
    pub state_cap: Option<usize>,
    pub seed: Option<u64>,
}

impl BoundOverrides {
    /// Command line, then file options, then defaults.
    pub fn resolve(&self, file: &Options) -> Bounds {
        let d = Bounds::default();
        Bounds {
            max_visible: self.visible.or(file.visible).unwrap_or(d.max_visible),
            max_silent: self.silent.or(file.silent).unwrap_or(d.max_silent),
            deduction_depth: self.depth.or(file.depth).unwrap_or(d.deduction_depth),
            adversary_fresh_pool: self.fresh_pool.or(file.fresh_pool).unwrap_or(d.adversary_fresh_pool),
            state_cap: self.state_cap.or(file.state_cap).unwrap_or(d.state_cap),
            msr_factor: file.msr_factor.unwrap_or(d.msr_factor),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

/// Reads the seed from [`SEED_VAR`], if set.
pub fn seed_from_env() -> Result<Option<u64>, Error> {
    match std::env::var(SEED_VAR) {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| Error::Input(format!("{} must be an unsigned integer", SEED_VAR))),
        Err(_) => Ok(None),
    }
}

/// Parses a `.sapic` text and checks well-formedness.
pub fn load_str(text: &str) -> Result<SpecFile, Error> {
    let spec = parse_spec(text)?;
    check_wellformed(&spec.process).map_err(Error::IllFormed)?;
    check_patterns(&spec.process, &spec.theory).map_err(Error::IllFormed)?;
    Ok(spec)
}

/// Reads and checks a `.sapic` file.
pub fn load(path: &Path) -> Result<SpecFile, Error> {
    load_str(&std::fs::read_to_string(path)?)
}

/// The adversary view shared by both engines for a file.
pub fn view(spec: &SpecFile, bounds: &Bounds, mode: AdversaryMode) -> AdversaryView {
    AdversaryView::new(Arc::new(spec.theory.clone()), spec.process.public_names(), bounds, mode)
}

/// The theory file for a parsed input file.
pub fn theory_file(spec: &SpecFile) -> Result<(MsrSystem, TheoryFile), Error> {
    let sys = translate(&spec.process, &spec.theory)?;
    let file = TheoryFile::new(&spec.name, &sys, &spec.lemmas);
    Ok((sys, file))
}

/// Text of the emitted theory.
pub fn cmd_translate(spec: &SpecFile) -> Result<String, Error> {
    Ok(emit_theory(&theory_file(spec)?.1))
}

/// Explores the process with the given standalone-knowledge mode.
pub fn run_pi(spec: &SpecFile, bounds: &Bounds, mode: AdversaryMode) -> PiExploration {
    explore_pi(&spec.process, &view(spec, bounds, mode), bounds)
}

/// Explores the translation of the process.
pub fn run_msr(spec: &SpecFile, bounds: &Bounds, mode: AdversaryMode, reduction: Reduction) -> Result<MsrExploration, Error> {
    let sys = translate(&spec.process, &spec.theory)?;
    explore_msr(&sys, &view(spec, bounds, mode), bounds, reduction)
}

/// A trace as JSON: an array of steps, each an array of facts.
pub fn trace_json(tr: &Trace) -> Value {
    Value::Array(
        tr.iter()
            .map(|el| Value::Array(el.iter().map(fact_json).collect()))
            .collect(),
    )
}

fn fact_json(f: &Fact) -> Value {
    json!({
        "symbol": &*f.symbol,
        "args": f.args.iter().map(print_term).collect::<Vec<_>>(),
        "persistent": f.persistent,
    })
}

/// A trace in the surface syntax, one element per line.
pub fn trace_text(tr: &Trace) -> String {
    if tr.is_empty() {
        return "[]".to_string();
    }
    tr.iter()
        .map(|el| {
            let fs: Vec<String> = el.iter().map(crate::frontend::print_fact).collect();
            format!("{{{}}}", fs.join(", "))
        })
        .collect::<Vec<_>>()
        .join(" . ")
}

/// Result of an exploration command.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub engine: &'static str,
    pub bounds: Bounds,
    pub states: usize,
    pub truncated: Option<String>,
    #[serde(serialize_with = "ser_traces")]
    pub traces: BTreeSet<Trace>,
}

impl RunReport {
    pub fn verdict(&self) -> Verdict {
        if self.truncated.is_some() {
            Verdict::BoundInconclusive
        } else {
            Verdict::Ok
        }
    }
}

fn ser_traces<S: serde::Serializer>(ts: &BTreeSet<Trace>, s: S) -> Result<S::Ok, S::Error> {
    Value::Array(ts.iter().map(trace_json).collect()).serialize(s)
}

fn ser_trace_opt<S: serde::Serializer>(t: &Option<Trace>, s: S) -> Result<S::Ok, S::Error> {
    t.as_ref().map(trace_json).serialize(s)
}

pub fn cmd_run_pi(spec: &SpecFile, bounds: &Bounds, mode: AdversaryMode) -> RunReport {
    let r = run_pi(spec, bounds, mode);
    RunReport { engine: "pi", bounds: *bounds, states: r.states, truncated: r.truncated, traces: r.traces }
}

pub fn cmd_run_msr(spec: &SpecFile, bounds: &Bounds, mode: AdversaryMode, reduction: Reduction) -> Result<RunReport, Error> {
    let r = run_msr(spec, bounds, mode, reduction)?;
    Ok(RunReport { engine: "msr", bounds: *bounds, states: r.states, truncated: r.truncated, traces: r.traces })
}

/// Which side owns a trace missing on the other side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Pi,
    Msr,
}

/// Agreement of one declared formula between the two sides.
#[derive(Debug, Clone, Serialize)]
pub struct FormulaAgreement {
    pub lemma: String,
    pub pi: bool,
    pub msr: bool,
    /// `true` when the msr verdict came from the translated formula on
    /// unfiltered traces, `false` when from the formula on the hidden set.
    pub msr_translated: bool,
    pub agree: bool,
}

/// Result of the differential comparison.
#[derive(Debug, Clone, Serialize)]
pub struct DiffReport {
    pub verdict: Verdict,
    pub equal: bool,
    pub bounds: Bounds,
    pub pi_traces: usize,
    pub msr_traces: usize,
    pub pi_truncated: Option<String>,
    pub msr_truncated: Option<String>,
    /// Owner of the minimal differing trace.
    pub extra_on: Option<Side>,
    #[serde(serialize_with = "ser_trace_opt")]
    pub minimal_difference: Option<Trace>,
    pub formulas: Vec<FormulaAgreement>,
}

/// Truth of a property on a set of traces.
fn truth(traces: &BTreeSet<Trace>, lemma_mode: Mode, phi: &TraceFormula, spec: &SpecFile) -> Result<bool, Error> {
    let th = &spec.theory;
    Ok(match lemma_mode {
        Mode::AllTraces => crate::logic::valid_for(traces.iter(), phi, th)?,
        Mode::ExistsTrace => crate::logic::satisfiable_for(traces.iter(), phi, th)?,
    })
}

/// Compares the pi traces with the hidden, filtered msr traces.
pub fn cmd_diff(spec: &SpecFile, bounds: &Bounds, mode: AdversaryMode) -> Result<DiffReport, Error> {
    let a = run_pi(spec, bounds, mode.clone());
    let b = run_msr(spec, bounds, mode.clone(), Reduction::Reduced)?;
    let equal = a.traces == b.traces;
    let only_a = a.traces.difference(&b.traces).min_by(|x, y| (x.len(), *x).cmp(&(y.len(), *y)));
    let only_b = b.traces.difference(&a.traces).min_by(|x, y| (x.len(), *x).cmp(&(y.len(), *y)));
    let (extra_on, minimal_difference) = match (only_a, only_b) {
        (Some(x), Some(y)) if (y.len(), y) < (x.len(), x) => (Some(Side::Msr), Some(y.clone())),
        (Some(x), _) => (Some(Side::Pi), Some(x.clone())),
        (None, Some(y)) => (Some(Side::Msr), Some(y.clone())),
        (None, None) => (None, None),
    };
    let raw = if spec.lemmas.is_empty() {
        None
    } else {
        let sys = translate(&spec.process, &spec.theory)?;
        let rb = Bounds { state_cap: bounds.state_cap.min(RAW_STATE_CAP), ..*bounds };
        let r = explore_msr(&sys, &view(spec, &rb, mode), &rb, Reduction::None)?;
        if r.truncated.is_none() {
            Some(r.raw)
        } else {
            None
        }
    };
    let mut formulas = Vec::new();
    for l in &spec.lemmas {
        let pi = truth(&a.traces, l.mode, &l.formula, spec)?;
        let (msr, msr_translated) = match &raw {
            Some(raw) => (truth(raw, l.mode, &translate_formula(&l.formula, l.mode)?, spec)?, true),
            None => (truth(&b.traces, l.mode, &l.formula, spec)?, false),
        };
        formulas.push(FormulaAgreement { lemma: l.name.clone(), pi, msr, msr_translated, agree: pi == msr });
    }
    let verdict = if a.truncated.is_some() || b.truncated.is_some() {
        Verdict::BoundInconclusive
    } else if equal && formulas.iter().all(|f| f.agree) {
        Verdict::Ok
    } else {
        Verdict::Violated
    };
    Ok(DiffReport {
        verdict,
        equal,
        bounds: *bounds,
        pi_traces: a.traces.len(),
        msr_traces: b.traces.len(),
        pi_truncated: a.truncated,
        msr_truncated: b.truncated,
        extra_on,
        minimal_difference,
        formulas,
    })
}

/// Which semantics `eval` explores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSide {
    Pi,
    Msr,
}

/// Result of evaluating a declared property.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub lemma: String,
    pub side: EvalSide,
    /// Whether the property holds on the explored traces.
    pub holds: bool,
    pub verdict: Verdict,
    pub bounds: Bounds,
    pub states: usize,
    pub truncated: Option<String>,
    /// A violating trace for all-traces properties, or a satisfying one for
    /// exists-trace properties.
    #[serde(serialize_with = "ser_trace_opt")]
    pub witness: Option<Trace>,
}

/// Evaluates a lemma by searching for a counterexample (all-traces) or a
/// witness (exists-trace). When every variable of every `K` atom also
/// occurs in another atom, only `K` facts the formula can observe are
/// emitted standalone, and states are merged on the observable trace.
pub fn cmd_eval(spec: &SpecFile, lemma: &str, side: EvalSide, bounds: &Bounds) -> Result<EvalReport, Error> {
    let l: &Lemma = spec.lemma(lemma).ok_or_else(|| Error::Input(format!("no lemma named `{}`", lemma)))?;
    crate::logic::check_guarded(&l.formula)?;
    let th = &spec.theory;
    let mode = match Relevance::of(&l.formula, th) {
        Some(rel) => AdversaryMode::Relevant(Arc::new(rel)),
        None => AdversaryMode::Demand,
    };
    let v = view(spec, bounds, mode);
    let mut found: Option<Trace> = None;
    let mut err: Option<Error> = None;
    let mut seen: BTreeSet<Trace> = BTreeSet::new();
    let mut check = |tr: &Trace| -> bool {
        if !seen.insert(tr.clone()) {
            return true;
        }
        match holds(tr, &l.formula, th) {
            Ok(sat) => {
                let hit = match l.mode {
                    Mode::AllTraces => !sat,
                    Mode::ExistsTrace => sat,
                };
                if hit {
                    found = Some(canonicalize_trace(tr));
                }
                !hit
            }
            Err(e) => {
                err = Some(e.into());
                false
            }
        }
    };
    let (states, truncated) = match side {
        EvalSide::Pi => {
            let r = explore_pi_with(&spec.process, &v, bounds, &mut |s| check(&s.trace));
            (r.states, r.truncated)
        }
        EvalSide::Msr => {
            let sys = translate(&spec.process, th)?;
            let r = explore_msr_with(&sys, &v, bounds, &mut |tr| check(tr));
            (r.states, r.truncated)
        }
    };
    if let Some(e) = err {
        return Err(e);
    }
    let holds = match l.mode {
        Mode::AllTraces => found.is_none(),
        Mode::ExistsTrace => found.is_some(),
    };
    let verdict = if !holds {
        Verdict::Violated
    } else if found.is_none() && truncated.is_some() {
        Verdict::BoundInconclusive
    } else {
        Verdict::Ok
    };
    Ok(EvalReport { lemma: l.name.clone(), side, holds, verdict, bounds: *bounds, states, truncated, witness: found })
}

/// Summary of a successful `check`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub ok: bool,
    pub lemmas: Vec<String>,
    pub public_names: Vec<String>,
}

pub fn cmd_check(spec: &SpecFile) -> CheckReport {
    CheckReport {
        name: spec.name.clone(),
        ok: true,
        lemmas: spec.lemmas.iter().map(|l| l.name.clone()).collect(),
        public_names: spec.process.public_names().iter().map(|n: &Name| format!("'{}'", n.text)).collect(),
    }
}

/// Machine-readable form of an error.
pub fn error_json(e: &Error) -> Value {
    let kind = match e {
        Error::Parse(_) => "parse",
        Error::IllFormed(_) => "ill-formed",
        Error::Formula(_) => "formula",
        Error::Term(_) => "term",
        Error::Input(_) => "input",
        Error::Io(_) => "io",
    };
    let violations: Vec<Value> = match e {
        Error::IllFormed(vs) => vs
            .iter()
            .map(|v| json!({ "position": v.position, "rule": v.rule, "message": v.message }))
            .collect(),
        _ => Vec::new(),
    };
    json!({ "error": kind, "message": e.to_string(), "violations": violations })
}
