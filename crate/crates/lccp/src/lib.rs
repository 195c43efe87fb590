//! Exact solver for the length-constrained cycle partition problem (LCCP).
//!
//! The nodes of a complete undirected graph must be partitioned into the
//! minimum number of cycles such that the travel time of each cycle does not
//! exceed the critical time of any node it contains. The solver is a
//! branch-and-price method: a set-partitioning master problem solved by
//! column generation, with a label-setting dynamic program as the pricing
//! engine and edge branching on top.

// index loops keep the dense matrix code symmetric and readable
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)] // !(x > 0.0) deliberately rejects NaN

pub mod bnb;
pub mod colgen;
pub mod instance;
pub mod labeling;
pub mod lp;
pub mod oracle;
pub mod report;
