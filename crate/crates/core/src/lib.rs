//! Computational models for refuting group laws and measuring freeness.
//!
//! - [`words`]: reduced words in free groups and their evaluation.
//! - [`perm`]: permutation groups, Schreier-Sims chains, pointwise
//!   stabilizers and separation orders.
//! - [`trees`]: automorphisms of rooted trees as portraits and as wreath
//!   recursions, including the Grigorchuk generators.
//! - [`thompson`]: exact dyadic piecewise-linear maps of Thompson's group F.
//! - [`separation`]: separating actions, the word witness construction
//!   and certificate checking.
//! - [`montecarlo`]: nontriviality probabilities, bounds and freeness
//!   experiments with reproducible per-sample streams.

pub mod montecarlo;
pub mod perm;
pub mod separation;
pub mod thompson;
pub mod trees;
pub mod words;
