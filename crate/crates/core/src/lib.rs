//! A workbench for the spatial mu-calculus over finite Kripke frames.
//!
//! The crate covers formula syntax ([`formula`]), finite models and frame
//! classes ([`kripke`]), model checking ([`semantics`]), bisimulation
//! ([`bisim`]), translations between fragments ([`translate`]), the
//! succinctness model families ([`families`]), exact minimal separating
//! formula synthesis and game-tree verification ([`synth`]), and the
//! experiment harness used by the `smc` binary ([`experiment`]).

pub mod bisim;
pub mod experiment;
pub mod families;
pub mod formula;
pub mod kripke;
pub mod random;
pub mod semantics;
pub mod synth;
pub mod translate;

pub use formula::{parse, Formula, FormulaError};
pub use kripke::{KripkeModel, ModelError, PointedModel};
pub use semantics::{eval, holds, TruthSet};
