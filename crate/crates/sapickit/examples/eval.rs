//! Evaluate the lemmas of the key creation process on both semantics.
//!
//! Run with `cargo run --release --example eval`.

use std::path::PathBuf;

use sapickit::adversary::Bounds;
use sapickit::harness::{self, EvalSide};

fn main() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus/pnew.sapic");
    let spec = harness::load(&path).expect("corpus file loads");
    for lemma in spec.lemmas.iter().map(|l| l.name.clone()) {
        for side in [EvalSide::Pi, EvalSide::Msr] {
            let rep = harness::cmd_eval(&spec, &lemma, side, &Bounds::default()).expect("guarded lemma");
            println!("{} on {:?}: {:?} after {} states", lemma, side, rep.verdict, rep.states);
            if let Some(w) = &rep.witness {
                println!("  witness: {}", harness::trace_text(w));
            }
        }
    }
}
