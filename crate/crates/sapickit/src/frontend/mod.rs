//! Concrete syntax: `.sapic` files, processes, and trace formulas.

mod lexer;
mod parser;
mod printer;

pub use parser::{parse_formula, parse_process, parse_spec, parse_term, parse_theory_file};
pub use printer::{print_fact, print_process, print_spec, print_term};

use crate::logic::{Mode, TraceFormula};
use crate::process::Process;
use crate::terms::Theory;

/// A property declared in a `.sapic` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma {
    pub name: String,
    pub mode: Mode,
    pub formula: TraceFormula,
}

/// Per-file exploration bounds. Unset fields fall back to command-line
/// values or defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Options {
    pub visible: Option<usize>,
    pub silent: Option<usize>,
    pub depth: Option<usize>,
    pub fresh_pool: Option<usize>,
    pub state_cap: Option<usize>,
    pub msr_factor: Option<usize>,
}

impl Options {
    /// Sets an option by key; hyphens in keys are normalized to underscores.
    pub fn set(&mut self, key: &str, value: usize) -> Result<(), String> {
        let slot = match key.replace('-', "_").as_str() {
            "visible" => &mut self.visible,
            "silent" => &mut self.silent,
            "depth" => &mut self.depth,
            "fresh_pool" => &mut self.fresh_pool,
            "state_cap" => &mut self.state_cap,
            "msr_factor" => &mut self.msr_factor,
            other => return Err(format!("unknown option `{}`", other)),
        };
        *slot = Some(value);
        Ok(())
    }

    /// Set options as `(key, value)` pairs in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, usize)> {
        [
            ("visible", self.visible),
            ("silent", self.silent),
            ("depth", self.depth),
            ("fresh_pool", self.fresh_pool),
            ("state_cap", self.state_cap),
            ("msr_factor", self.msr_factor),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

/// A parsed `.sapic` file: one theory, one process, named properties, and
/// optional bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecFile {
    pub name: String,
    pub theory: Theory,
    pub process: Process,
    pub lemmas: Vec<Lemma>,
    pub options: Options,
}

impl SpecFile {
    pub fn lemma(&self, name: &str) -> Option<&Lemma> {
        self.lemmas.iter().find(|l| l.name == name)
    }
}
