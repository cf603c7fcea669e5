//! Translate a process to multiset rewrite rules and print the theory.
//!
//! Run with `cargo run --example translate [FILE]`; defaults to the key
//! creation process of the corpus.

use std::path::PathBuf;

use sapickit::harness;

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus/pnew.sapic")
    });
    let spec = harness::load(&path).unwrap_or_else(|e| panic!("{}: {}", path.display(), e));
    print!("{}", harness::cmd_translate(&spec).expect("well-formed process"));
}
