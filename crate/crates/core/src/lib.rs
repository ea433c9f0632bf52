// SPDX-License-Identifier: Apache-2.0

//! Synthesis and verification of transmission-line decoupling networks.
//!
//! Given the reciprocal S-matrix of a coupled N-port load at a design
//! frequency, [`synth::synthesize`] produces a 2N-port generalized
//! π-network whose every branch is an ideal transmission line, such that
//! the load seen through the network is decoupled and matched at that
//! frequency. [`cascade`] verifies the result over frequency and
//! [`touchstone`] moves data in and out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cascade;
pub mod cli;
pub mod linalg;
pub mod netconv;
pub mod synth;
pub mod tlmodel;
pub mod tolerances;
pub mod touchstone;

pub use linalg::{ComplexMatrix, C64};
