//! Simulation of swept-field adiabatic rapid passage in the Rb-87 ground
//! manifold with dispersive-probe feedback that stops the sweep on a chosen
//! hyperfine state.

pub mod controller;
pub mod dynamics;
pub mod harness;
pub mod probe;
pub mod sterngerlach;
pub mod zeeman;
