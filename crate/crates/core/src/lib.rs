//! Simulator and analysis toolkit for the three-party entanglement-assisted
//! "Guess my Number" game.
//!
//! A team of three contestants receives 0, 1/2, 1 or 3/2 apples each (the
//! total is promised to be whole) and must announce the parity of the total
//! as the XOR of one bit per player. Sharing a GHZ state lets the team win
//! every valid round, while the best local strategies win 3/4 of them.
//! This crate certifies that gap end to end:
//!
//! - [`qsim`]: dense state-vector and density-operator engine for up to
//!   four polarization qubits.
//! - [`protocol`]: the game domain, the phase rotations and their
//!   waveplate realizations, GHZ preparation (direct and via the two-pair
//!   parity-check pipeline), and single quantum rounds.
//! - [`classical`]: exhaustive, exact-rational certification of the 3/4
//!   classical bound and of the communication cost of matching the quantum
//!   strategy.
//! - [`noise`]: dephasing/white-noise channels, the calibrated win
//!   probability `(1+v)(1−p)/2 + p/2`, and detector-loss modeling.
//! - [`harness`]: seeded, reproducible Monte Carlo runs with per-variation
//!   and pooled statistics, emitted as JSON or CSV.

pub mod classical;
pub mod harness;
pub mod noise;
pub mod protocol;
pub mod qsim;

pub use classical::{comm_search, evaluate, optimal_classical, StrategyValue, TeamStrategy};
pub use harness::{emit_report, run_experiment, ExperimentReport, ReportFormat, RunConfig};
pub use noise::{calibrate_visibility, win_probability_exact, NoiseModel};
pub use protocol::{enumerate_valid_variations, AppleCount, AppleVariation, Parity};
pub use qsim::{Amplitude, DensityOperator, MeasurementBasis, PureState, Unitary2};
