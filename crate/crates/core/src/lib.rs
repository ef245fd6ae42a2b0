//! Agent-team FLISR (fault location, isolation and service restoration)
//! simulator for radial distribution utilities.
//!
//! * [`bdi`]: goal/process-model engine with plan choice and time slicing.
//! * [`teams`]: hierarchical teams, roles and task-team formation.
//! * [`grid`]: topology, energization, fault location, restoration routes.
//! * [`ied`]: simplified IED device model and the protection LN pipeline.
//! * [`flisr`]: the FLISR goal model, its allocation and restoration planning.
//! * [`sim`]: deterministic discrete-event kernel driving everything.
//! * [`config`]: topology and scenario file formats.

pub mod bdi;
pub mod config;
pub mod flisr;
pub mod grid;
pub mod ied;
pub mod sim;
pub mod teams;
