//! Executable metamathematics at desk scale: arithmetic formulas with machine
//! atoms, hierarchy classification, propositional skeletons, bounded
//! semantics, named fixed points, toy theories, staged bell machines and a
//! derivation-chain rewriter for reflection conservation arguments.

pub mod conservation;
pub mod diagonal;
pub mod formula;
pub mod godel;
pub mod hierarchy;
pub mod machines;
pub mod oracle;
pub mod prop;
pub mod semantics;
pub mod syntax;
pub mod theory;

pub use formula::{numeral, BoundKind, Formula, MachineId, Name, Term, Var};
pub use hierarchy::{HierarchyClass, Polarity};
pub use semantics::Truth;
