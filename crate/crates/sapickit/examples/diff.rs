//! Compare both semantics on every corpus file and print the verdicts.
//!
//! Run with `cargo run --release --example diff`.

use std::path::PathBuf;

use sapickit::adversary::{AdversaryMode, Bounds};
use sapickit::harness;

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let bounds = Bounds { max_visible: 4, deduction_depth: 2, adversary_fresh_pool: 1, ..Bounds::default() };
    for name in ["zero", "events-par", "lock-pair", "store", "internal-comm", "adversary-io", "repl-new"] {
        let spec = harness::load(&dir.join(format!("{}.sapic", name))).expect("corpus file loads");
        let rep = harness::cmd_diff(&spec, &bounds, AdversaryMode::Silent).expect("translates");
        println!(
            "{:<14} {:?} (pi {} traces, msr {} traces)",
            name,
            rep.verdict,
            rep.pi_traces,
            rep.msr_traces
        );
    }
}
