//! Refereed delegation of Turing-machine computations to two rational provers.
//!
//! Two provers run the same deterministic single-tape machine, commit to the
//! resulting computation tableau through a two-level Merkle tree, and a
//! verifier with logarithmic time and space settles any disagreement by
//! interrogating both of them. Payments are chosen so that computing honestly
//! is the only equilibrium.
//!
//! The crate is `no_std` (it needs `alloc`). File IO, the command line and
//! report formats live in the `mrm-sim` companion crate.
//!
//! Layout, bottom-up:
//!
//! - [`machine`]: machine descriptions, stepping and tableau materialization.
//! - [`program`]: the line-oriented machine program text format.
//! - [`merkle`]: keyed hashing, node addressing and the tableau tree.
//! - [`commitment`]: the commitment function, effort metering and `M(·)`.
//! - [`arbitration`]: the verifier's arbitration process and bisection.
//! - [`mechanism`]: parameter selection, the three-step game, payments.
//! - [`strategies`]: honest and deviant prover behaviours.
//! - [`fixtures`]: the shipped example machines.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
#![warn(rust_2018_idioms, missing_debug_implementations)]

extern crate alloc;

pub mod arbitration;
pub mod commitment;
pub mod fixtures;
pub mod machine;
pub mod mechanism;
pub mod merkle;
pub mod program;
pub mod strategies;

pub use arbitration::{arbitrate, Agent, Query, Response, Transcript, Verdict};
pub use commitment::{commit, Commitment, CostSchedule, EffortMeter};
pub use machine::{Dims, MachineSpec, Tableau};
pub use mechanism::{select_params, GameResult, Mechanism, Outcome, PaymentParams};
pub use merkle::{Digest, HashAlgorithm, HashScheme, NodeAddress, TableauTree};
pub use strategies::{Strategy, StrategyKind};
