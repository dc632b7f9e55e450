//! Synchronous sequential circuits with stream, operational and graph-rewriting semantics.

pub mod circuit;
pub mod dpo;
pub mod error;
pub mod formats;
pub mod gen;
pub mod hypergraph;
pub mod interp;
pub mod lang;
pub mod library;
pub mod mealy;
pub mod netlist;
pub mod opsem;
pub mod parteval;
pub mod synth;

pub use circuit::{Node, Term};
pub use error::{Error, Result};
pub use interp::{belnap, Interpretation, Lattice, Value};
pub use mealy::{MealyMachine, Waveform};
