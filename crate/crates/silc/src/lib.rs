//! silc: a compositional static analyzer for a small C-like pointer
//! language. It proves the presence of memory-safety bugs (null-pointer
//! dereferences, memory leaks, use-after-free) with under-approximate
//! separation-logic summaries, tracks which side of an integration
//! boundary is responsible for each bug, and synthesizes source-level
//! sanitizer wrappers that disable the buggy paths.

pub mod biabduction;
pub mod frontend;
pub mod isl;
pub mod oracle;
pub mod solver;
