//! Position-dependent mass (PDM) quantum and classical mechanics through the
//! point canonical transformation `q(x) = ∫√m dx`.
//!
//! Units: `ħ = 2m₀ = 1`.

// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod classical_dynamics;
pub mod em_coupling;
pub mod error;
pub mod mass_models;
pub mod numerics;
pub mod operators;
pub mod output;
pub mod point_transform;
pub mod spectral_solver;
pub mod tridiag;

pub use banded::BandedMatrix;
pub use classical_dynamics::{
    eom_rhs, hamiltonian_eval, integrate, transform_equivalence_check, ClassicalFields, ClassicalState,
    EquivalenceSetup, Scheme, TrajectoryResult,
};
pub use em_coupling::{
    eligibility, gauge_divergence_residual, landau_energy, landau_energy_with_field, solve_example_numeric,
    GaugeFamily, LandauConfig, LandauSolution, VectorPotentialSpec,
};
pub use error::{Error, Result};
pub use mass_models::{MassProfile, PairCatalogEntry, PairTag, ScalarMultiplier};
pub use numerics::Grid;
pub use operators::{DiscretizedOperator, OrderingParams, PotentialSpec};
pub use point_transform::{build_map, GriddedWavefunction, Measure, TransformMap};
pub use spectral_solver::{
    isospectrality_check, ordering_sweep, solve_pdm, solve_symmetric, NamedOrdering, PotentialFn, SpectralOptions,
    SpectrumResult,
};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
