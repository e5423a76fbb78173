//! Steady-state heat transport through a qubit–phonon hybrid system.
//!
//! A qubit longitudinally coupled to a phonon mode is exactly diagonalized in
//! a displaced-Fock basis; the qubit and the mode each couple weakly to an
//! Ohmic bath. The dressed master equation then reduces to a rate equation
//! over eigenstate populations, whose stationary solution gives the heat
//! currents between the baths.

pub mod analysis;
pub mod baths;
pub mod cli;
pub mod error;
pub mod hilbert;
pub mod liouvillian;
pub mod observables;
pub mod steadystate;

pub use error::{Error, Result};
