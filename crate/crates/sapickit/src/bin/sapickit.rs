use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sapickit::adversary::{AdversaryMode, Bounds};
use sapickit::harness::{self, BoundOverrides, EvalSide, Verdict};
use sapickit::msr::Reduction;
use sapickit::Error;

#[derive(Parser)]
#[command(name = "sapickit", version, about = "Translate stateful applied pi processes to multiset rewriting and compare both semantics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a file and check that its process is well-formed.
    Check(Common),
    /// Print the translated theory.
    Translate(Common),
    /// Explore the process semantics and print the traces.
    RunPi(Run),
    /// Explore the translated rules and print the traces.
    RunMsr {
        #[command(flatten)]
        run: Run,
        /// Use the unreduced reference semantics (small bounds only).
        #[arg(long)]
        reference: bool,
    },
    /// Compare both semantics and the declared properties.
    Diff(Run),
    /// Evaluate a declared property.
    Eval {
        #[command(flatten)]
        run: Run,
        /// Name of the lemma to evaluate.
        lemma: String,
        /// Semantics to explore.
        #[arg(long, value_enum, default_value = "pi")]
        side: SideArg,
    },
}

#[derive(Args)]
struct Common {
    /// Input `.sapic` file.
    file: PathBuf,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
    /// Write the output to a file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Run {
    #[command(flatten)]
    common: Common,
    /// Maximal recipe depth of adversary deductions.
    #[arg(long)]
    depth: Option<usize>,
    /// Maximal number of visible labels per trace.
    #[arg(long)]
    visible: Option<usize>,
    /// Maximal number of silent steps between two labels.
    #[arg(long)]
    silent: Option<usize>,
    /// Number of fresh names the adversary may use.
    #[arg(long = "fresh-pool")]
    fresh_pool: Option<usize>,
    /// Maximal number of explored states.
    #[arg(long = "state-cap")]
    state_cap: Option<usize>,
    /// Which standalone adversary knowledge labels to emit.
    #[arg(long, value_enum, default_value = "silent")]
    adversary: AdversaryArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum AdversaryArg {
    Full,
    Demand,
    Silent,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Pi,
    Msr,
}

impl Run {
    fn bounds(&self, spec: &sapickit::frontend::SpecFile) -> Result<Bounds, Error> {
        let o = BoundOverrides {
            visible: self.visible,
            silent: self.silent,
            depth: self.depth,
            fresh_pool: self.fresh_pool,
            state_cap: self.state_cap,
            seed: harness::seed_from_env()?,
        };
        let b = o.resolve(&spec.options);
        if b.max_visible == 0 || b.max_silent == 0 || b.state_cap == 0 {
            return Err(Error::Input("visible, silent, and state-cap bounds must be positive".into()));
        }
        Ok(b)
    }

    fn mode(&self) -> AdversaryMode {
        match self.adversary {
            AdversaryArg::Full => AdversaryMode::Full,
            AdversaryArg::Demand => AdversaryMode::Demand,
            AdversaryArg::Silent => AdversaryMode::Silent,
        }
    }
}

/// What a command produced: text, JSON, and the exit code.
struct Output {
    text: String,
    json: Value,
    code: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.cmd {
        Cmd::Check(c) | Cmd::Translate(c) => c,
        Cmd::RunPi(r) | Cmd::Diff(r) | Cmd::RunMsr { run: r, .. } | Cmd::Eval { run: r, .. } => &r.common,
    };
    let (as_json, out) = (common.json, common.out.clone());
    let result = run(&cli.cmd);
    let (body, code) = match result {
        Ok(o) => (if as_json { pretty(&o.json) } else { o.text }, o.code),
        Err(e) => {
            if as_json {
                (pretty(&harness::error_json(&e)), 2)
            } else {
                eprintln!("error: {}", e);
                (String::new(), 2)
            }
        }
    };
    if let Err(e) = emit(&body, out.as_deref()) {
        eprintln!("error: {}", e);
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"
}

fn emit(body: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, body),
        None => std::io::stdout().write_all(body.as_bytes()),
    }
}

fn code(v: Verdict) -> u8 {
    v.exit_code() as u8
}

fn to_json(v: &impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn run(cmd: &Cmd) -> Result<Output, Error> {
    match cmd {
        Cmd::Check(c) => {
            let spec = harness::load(&c.file)?;
            let r = harness::cmd_check(&spec);
            let text = format!("{}: ok ({} lemma(s))\n", r.name, r.lemmas.len());
            Ok(Output { text, json: json!({ "command": "check", "report": to_json(&r) }), code: 0 })
        }
        Cmd::Translate(c) => {
            let spec = harness::load(&c.file)?;
            let text = harness::cmd_translate(&spec)?;
            let json = json!({ "command": "translate", "report": { "name": spec.name, "theory": text } });
            Ok(Output { text, json, code: 0 })
        }
        Cmd::RunPi(r) => {
            let spec = harness::load(&r.common.file)?;
            let rep = harness::cmd_run_pi(&spec, &r.bounds(&spec)?, r.mode());
            Ok(run_output("run-pi", &rep))
        }
        Cmd::RunMsr { run: r, reference } => {
            let spec = harness::load(&r.common.file)?;
            let red = if *reference { Reduction::None } else { Reduction::Reduced };
            let rep = harness::cmd_run_msr(&spec, &r.bounds(&spec)?, r.mode(), red)?;
            Ok(run_output("run-msr", &rep))
        }
        Cmd::Diff(r) => {
            let spec = harness::load(&r.common.file)?;
            let rep = harness::cmd_diff(&spec, &r.bounds(&spec)?, r.mode())?;
            let mut text = format!(
                "{} (pi {} traces, msr {} traces)\n",
                if rep.equal { "EQUAL" } else { "DIFFERENT" },
                rep.pi_traces,
                rep.msr_traces
            );
            if let (Some(side), Some(t)) = (rep.extra_on, &rep.minimal_difference) {
                let side = if side == harness::Side::Pi { "pi" } else { "msr" };
                text += &format!("only on {}: {}\n", side, harness::trace_text(t));
            }
            for f in &rep.formulas {
                text += &format!("lemma {}: pi {}, msr {}{}\n", f.lemma, f.pi, f.msr, if f.agree { "" } else { " (DISAGREE)" });
            }
            for t in rep.pi_truncated.iter().chain(&rep.msr_truncated) {
                text += &format!("incomplete: {}\n", t);
            }
            Ok(Output { text, json: json!({ "command": "diff", "report": to_json(&rep) }), code: code(rep.verdict) })
        }
        Cmd::Eval { run: r, lemma, side } => {
            let spec = harness::load(&r.common.file)?;
            let side = match side {
                SideArg::Pi => EvalSide::Pi,
                SideArg::Msr => EvalSide::Msr,
            };
            let rep = harness::cmd_eval(&spec, lemma, side, &r.bounds(&spec)?)?;
            let mut text = format!(
                "{}: {} ({} states{})\n",
                rep.lemma,
                match rep.verdict {
                    Verdict::Ok => "holds within bounds",
                    Verdict::Violated => "violated",
                    Verdict::BoundInconclusive => "no witness, bounds reached",
                },
                rep.states,
                rep.truncated.as_ref().map(|t| format!(", {}", t)).unwrap_or_default()
            );
            if let Some(w) = &rep.witness {
                text += &format!("witness: {}\n", harness::trace_text(w));
            }
            Ok(Output { text, json: json!({ "command": "eval", "report": to_json(&rep) }), code: code(rep.verdict) })
        }
    }
}

fn run_output(command: &str, rep: &harness::RunReport) -> Output {
    let mut text = String::new();
    for t in &rep.traces {
        text += &harness::trace_text(t);
        text.push('\n');
    }
    text += &format!("{} traces, {} states\n", rep.traces.len(), rep.states);
    if let Some(t) = &rep.truncated {
        text += &format!("incomplete: {}\n", t);
    }
    Output { text, json: json!({ "command": command, "report": to_json(rep) }), code: code(rep.verdict()) }
}
