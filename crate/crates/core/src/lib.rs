//! Compare multiple Boolean formalizations of the same legal provision.
//!
//! A formalization is a rooted tree whose internal nodes carry AND/OR/NAND/NOR
//! operators and whose root decides a binary legal consequence. Given several
//! formalizations of one provision and a matching of their nodes into
//! equivalence classes, this crate derives a pairwise Boolean interface,
//! enumerates all minimal disagreement patterns (prime implicants) with a SAT
//! kernel, localizes root causes, and triages them into representative edge
//! cases for human review.
//!
//! The pair-level analysis is data parallel; the `parallel` feature (on by
//! default) runs it on rayon, without it the same code runs sequentially.

pub mod edgecase;
pub mod expr;
pub mod interface;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod sat;
pub mod triage;
