//! Decide whether the adversary can derive a secret key from a frame.
//!
//! Run with `cargo run --example deduction`.

use sapickit::deduction::{derivable, Frame};
use sapickit::frontend::parse_spec;
use sapickit::terms::{Name, Term};

fn main() {
    let spec = parse_spec(
        "theory Enc\nbegin\nfunctions: senc/2, sdec/2\nequations: sdec(senc(m, k), k) = m\nprocess:\n  0\nend\n",
    )
    .expect("theory parses");
    let (k1, k2) = (Name::fresh("k1"), Name::fresh("k2"));
    let wrapped = Term::app("senc", vec![Term::Name(k2.clone()), Term::Name(k1.clone())]);
    let frame = Frame::new([k1.clone(), k2.clone()], [wrapped.clone(), Term::Name(k1)]);
    for depth in 0..=2 {
        println!("depth {}: k2 derivable = {}", depth, derivable(&frame, &Term::Name(k2.clone()), depth, &spec.theory));
    }
    let hidden = Frame::new(frame.restricted.clone(), [wrapped]);
    println!("without k1: k2 derivable = {}", derivable(&hidden, &Term::Name(k2), 2, &spec.theory));
}
