//! Simulation laboratory for harmonic-broadcast near video-on-demand with
//! XOR subchannel coding.
//!
//! A server cuts content into `n` segments, each into `λ` subsegments, and
//! every slot XORs the subsegments of the `M` scheduled segments into
//! `λ(M+R)` coded streams. Clients decode per packet position over GF(2),
//! reuse segments they already hold as implicit redundancy, and with
//! feedback error correction keep unsolved equations for later slots.
//!
//! Modules follow the pipeline:
//!
//! - [`harmonic`]: harmonic numbers, admissible loss bounds, first-slot
//!   success probabilities, startup delay, and the broadcast schedule.
//! - [`gf2`]: packed bit matrices and XOR equation systems.
//! - [`coding`]: segmentation, coding plans, slot encoding, packet traces.
//! - [`channel`]: uniform and Gilbert–Elliott packet loss.
//! - [`decoder`]: the client with implicit redundancy and FEC.
//! - [`metrics`]: seeded multi-client runs, sweeps, and CSV output.
//! - [`config`] and [`cli`]: run files, figure presets, and the `iecs` binary.

pub mod channel;
pub mod cli;
pub mod coding;
pub mod config;
pub mod decoder;
pub mod error;
pub mod gf2;
pub mod harmonic;
pub mod metrics;

pub use error::{Error, Result};
