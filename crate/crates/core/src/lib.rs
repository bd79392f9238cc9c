//! NOMA-based V2X broadcast scheduling and evaluation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod harness;
pub mod ids;
pub mod io;
pub mod matching;
pub mod metrics;
pub mod powerctrl;
pub mod scenario;
pub mod scheduler;
pub mod seed;
pub mod sim;
pub mod verify;
