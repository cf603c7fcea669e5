//! Explore the translated rules of the same process, once with the
//! reference semantics and once with the reduced one, and hide the
//! bookkeeping labels.
//!
//! Run with `cargo run --example run_msr`.

use sapickit::adversary::{AdversaryMode, Bounds};
use sapickit::harness;
use sapickit::msr::Reduction;

fn main() {
    let spec = harness::load_str(
        "theory Store\nbegin\nprocess:\n  insert 'cell', 'v'; ( lookup 'cell' as v in event Found(v) else event Missing() | delete 'cell' )\nend\n",
    )
    .expect("file parses");
    let bounds = Bounds { max_visible: 3, adversary_fresh_pool: 1, ..Bounds::default() };
    for red in [Reduction::None, Reduction::Reduced] {
        let r = harness::run_msr(&spec, &bounds, AdversaryMode::Silent, red).expect("translates");
        println!("{:?}: {} traces, {} states", red, r.traces.len(), r.states);
        for t in &r.traces {
            println!("  {}", harness::trace_text(t));
        }
    }
}
