//! Two-stage schedule-and-align (TSSA) beam alignment for millimeter-wave
//! distributed antenna systems.
//!
//! A home base station drives `N` remote radio units (RRUs), each carrying an
//! `M`-element uniform circular array, to serve `K = N` single-antenna users.
//! Alignment runs in two stages:
//!
//! 1. every RRU sweeps a coarse full-circle codebook while users measure the
//!    power-angle-spectrum (PAS) and report the best beam index together with
//!    its peak-to-background ratio (PBR);
//! 2. the home BS pairs users to RRUs by maximizing the sum-log confidence,
//!    splits the power budget with fractional transmit power allocation and
//!    narrows each RRU's scan window, after which every RRU refines its beam
//!    toward the scheduled user.
//!
//! The crate also implements the one-stage exhaustive search baselines
//! (distributed and centralized), ground-truth oracles, misalignment metrics,
//! the downlink rate pipeline (MMSE effective-channel estimation followed by
//! zero-forcing precoding) and a seeded, parallel Monte Carlo harness.
//!
//! Module map:
//!
//! - [`geometry`]: cell layout and pair distances/bearings
//! - [`channel`]: Saleh-Valenzuela channels with probabilistic LOS blockage
//! - [`beamforming`]: UCA descriptor, analog beams and scan codebooks
//! - [`airlink`]: pilots, correlator statistics, PAS/PBR, PBR quantizer
//! - [`scheduler`]: assignment solver, FTPA power and scan-range control
//! - [`protocol`]: TSSA and the two baselines, one trial at a time
//! - [`evaluation`]: oracles, misalignment accounting, MMSE + ZF rates
//! - [`harness`]: experiment config, parallel runner, CSV outputs
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! - `topology_dump`, `channel_dump`, `beam_pattern`: debug CSV dumps
//! - `scan_feedback`: one scan, its PAS peak, PBR and quantized feedback
//! - `scheduling`: assignment, FTPA power and refined windows from feedback
//! - `alignment_trial`: TSSA and both baselines on one set of users
//! - `rate_pipeline`: MMSE estimation and ZF rates after alignment
//! - `fig3_sweep`, `fig4_rates`: small versions of the two experiments

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airlink;
pub mod beamforming;
pub mod channel;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod harness;
pub mod protocol;
pub mod rng;
pub mod scheduler;
pub mod stats;
pub mod units;

pub use error::{Error, Result};

/// Complex baseband sample type used throughout.
pub type Cplx = num_complex::Complex64;
