//! Compiler and differential workbench for the stateful applied pi calculus.

pub mod adversary;
pub mod deduction;
pub mod error;
pub mod frontend;
pub mod harness;
pub mod logic;
pub mod msr;
pub mod pi;
pub mod process;
pub mod terms;
pub mod translate;

pub use error::Error;
