//! Quantum LDPC stabilizer codes, fault paths, decoders, and resource bounds
//! for fault-tolerant computation with constant overhead.

#![allow(clippy::needless_range_loop)]

pub mod construct;
pub mod decoder;
pub mod error;
pub mod gf2;
pub mod graphs;
pub mod harness;
pub mod noise;
pub mod overhead;
pub mod pauli;
pub mod shorec;
pub mod stabcode;
pub mod stats;
