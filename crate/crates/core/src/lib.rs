//! Numerical workbench for strictly local dynamical symmetries in spin
//! lattices.
//!
//! * [`pauli`]: Pauli strings in symplectic bitmask form and sparse sums.
//! * [`lattice`]: the XYZ spin-lace Hamiltonian, its local terms, singlet
//!   projectors and the local dynamical symmetry operators `A_p`.
//! * [`symmetry`]: eigenoperator verification and constrained search.
//! * [`dynamics`]: exact time evolution and correlation functions.
//! * [`response`]: linear response, finite-time transforms and peak finding.

pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod pauli;
pub mod response;
pub mod series;
pub mod state;
pub mod symmetry;

pub use dynamics::{
    connected_correlator, correlation, evolve_state, kicked_evolution, EvolutionPlan, Method,
    SpectralFrame, ThermalSpec, TraceMode,
};
pub use error::{Error, Result};
pub use lattice::{
    build, Axis, Defect, DefectTarget, SiteMap, SpinLace, SpinLaceSpec, TermKind, TermLabel,
    TermRegistry,
};
pub use pauli::{Pauli, PauliString, PauliSum, Phase, Support};
pub use response::{finite_time_ft, linear_response, omega_grid, peak_report, PeakReport};
pub use series::{Spectrum, TimeSeries};
pub use state::StateVector;
pub use symmetry::{
    check_delta_structure, check_delta_structure_with, eigenoperator_search, verify_conserved,
    verify_eigenoperator, CommutantConstraint, EigenoperatorResult, SearchConfig,
};
