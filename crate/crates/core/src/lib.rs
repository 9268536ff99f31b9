#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Finite-key secret-key rates for coherent-state twin-field QKD.
//!
//! The crate is split bottom-up: [`special`] and [`bounds`] hold the
//! numerical tail inequalities, [`oracle`] the brute-force checks used to
//! validate them, [`channel`] the symmetric fiber model, [`decoy`] the
//! three-intensity yield estimation, [`engine`] the key-length formulas for
//! both protocols and [`optimizer`] the parameter search.
//!
//! Everything is `no_std` with `alloc`; IO and the command line live in the
//! `tfqkd` crate.

extern crate alloc;

pub mod bounds;
pub mod budget;
pub mod channel;
pub mod decoy;
pub mod engine;
pub mod error;
pub mod optimizer;
pub mod oracle;
pub mod roots;
pub mod special;

pub use error::{Error, Result};
