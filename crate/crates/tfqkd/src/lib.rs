//! File formats, thread-parallel search and the command implementations
//! behind the `tfqkd` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod parallel;
pub mod table;
pub mod validate;
