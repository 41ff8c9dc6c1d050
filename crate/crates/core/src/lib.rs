//! Association and dissociation of the neutral hydrogen molecule as a
//! finite-dimensional open cavity-QED system.

pub mod evolve;
pub mod experiments;
pub mod hamiltonian;
pub mod hilbert;
pub mod lindblad;
pub mod operators;
pub mod oracle;
pub mod svg;
