//! Hamiltonian dynamics on `T*Tⁿ`: vector fields, symplectic integration,
//! separation of cosphere bundles and chord search between cotangent fibers.

mod chords;
mod hamiltonian;
mod integrator;
mod separation;
mod verify;

pub use hamiltonian::{
    hamiltonian_vector_field, AngularTerm, Bump, HamiltonianSpec, PhaseFunction, RadialProfile, TorusHamiltonian,
};
pub use integrator::{integrate, integrate_with, Scheme, Trajectory, MIDPOINT_TOL};
pub use chords::{chord_action, chord_trajectory, find_chord, ChordRecord, ChordSearch, SearchConfig, SearchStats};
pub use separation::{separation, SeparationReport, SeparationSet};
pub use verify::{verify_interlinking, Verdict, VerificationReport, VerifyConfig};
