//! Front end, compiler, run-time model and explicit-state explorer for
//! CoreSCOOP programs with objects.

pub mod bench;
pub mod compiler;
pub mod explorer;
pub mod export;
pub mod frontend;
pub mod ir;
pub mod model;
pub mod semantics;
