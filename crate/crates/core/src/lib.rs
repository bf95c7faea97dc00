// SPDX-License-Identifier: Apache-2.0

//! Delay-annotated, 2-value gate-level re-simulation.
//!
//! Known waveforms on primary and pseudo-primary inputs are replayed through a
//! combinational netlist whose gates and wires carry SDF inertial delays. The
//! testbench is cut into independent cycle windows, gates are grouped by logic
//! level, and every (gate, window) pair is simulated as an independent task.
//! Each level is simulated twice: a counting pass sizes the output waveforms,
//! the arena is extended by the exact amount, and a storing pass fills it.
//! The resulting switching activity is written as SAIF.
//!
//! Pipeline: [`netlist`] → [`sdf`] → [`waveform`] → [`scheduler`] (driving
//! [`simcore`]) → [`report`]. [`oracle`] is an independent event-queue
//! simulator used to cross-check the kernel.

pub mod cli;
pub mod netlist;
pub mod oracle;
pub mod report;
pub mod scheduler;
pub mod sdf;
pub mod simcore;
pub mod units;
pub mod waveform;

// Lets the shared test generator name this crate as `glsim`.
#[cfg(test)]
extern crate self as glsim;
#[cfg(test)]
#[path = "../tests/common/mod.rs"]
mod testgen;

/// Simulation time in integer femtoseconds.
pub type Tick = u64;

pub use netlist::{CellDef, CellLibrary, GateId, LevelizedNetlist, NetId, Netlist};
pub use report::ActivityStats;
pub use scheduler::RunConfig;
pub use sdf::{AnnotatedDelays, Corner, DelayMode};
pub use waveform::{StimulusSet, Waveform, WaveformArena};

/// Any error the pipeline can raise, grouped by the stage that produced it.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Library(#[from] netlist::LibraryError),
    #[error(transparent)]
    Netlist(#[from] netlist::NetlistError),
    #[error(transparent)]
    Sdf(#[from] sdf::SdfError),
    #[error(transparent)]
    Waveform(#[from] waveform::WaveformError),
    #[error(transparent)]
    Kernel(#[from] simcore::KernelError),
    #[error(transparent)]
    Schedule(#[from] scheduler::ScheduleError),
}
