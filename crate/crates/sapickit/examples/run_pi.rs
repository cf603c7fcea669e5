//! Explore the process semantics of two competing critical sections.
//!
//! Run with `cargo run --example run_pi`.

use sapickit::adversary::{AdversaryMode, Bounds};
use sapickit::harness;

fn main() {
    let spec = harness::load_str(
        "theory Locks\nbegin\nprocess:\n  ( lock 'l'; event A(); unlock 'l' ) | ( lock 'l'; event B(); unlock 'l' )\nend\n",
    )
    .expect("file parses");
    let r = harness::run_pi(&spec, &Bounds::default(), AdversaryMode::Silent);
    for t in &r.traces {
        println!("{}", harness::trace_text(t));
    }
    println!("{} traces, {} states", r.traces.len(), r.states);
}
