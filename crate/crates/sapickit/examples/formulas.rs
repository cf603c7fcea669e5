//! Evaluate a trace formula on hand-written traces.
//!
//! Run with `cargo run --example formulas`.

use sapickit::frontend::parse_formula;
use sapickit::logic::{holds, Trace};
use sapickit::terms::{Fact, Term, Theory};

fn main() {
    let th = Theory::new();
    let phi = parse_formula("All x #i. Got(x) @ #i ==> Ex #j. Sent(x) @ #j & #j < #i", &th).expect("formula parses");
    let step = |sym: &str, v: &str| [Fact::new(sym, vec![Term::public(v)])].into_iter().collect();
    let good: Trace = vec![step("Sent", "m"), step("Got", "m")];
    let bad: Trace = vec![step("Got", "m"), step("Sent", "m")];
    for (label, tr) in [("sent then got", good), ("got then sent", bad)] {
        println!("{}: {}", label, holds(&tr, &phi, &th).expect("closed formula"));
    }
}
