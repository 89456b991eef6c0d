//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use pdm_core::classical_dynamics::ScalarField;
use pdm_core::{ClassicalFields, ClassicalState, Grid, MassProfile, PotentialFn};

pub fn harmonic_q() -> PotentialFn {
    Arc::new(|q| q * q)
}

pub fn grid(n: usize) -> Grid {
    Grid::uniform(-6.0, 6.0, n).expect("valid grid")
}

/// Inverse-quartic mass in a harmonic well, started at `x = 0.5` at rest.
pub fn oscillator() -> (ClassicalFields, ClassicalState) {
    let f = ClassicalFields::new(1)
        .with_mass_profile(&MassProfile::inverse_quartic())
        .with_potential(ScalarField::new(|x| x[0] * x[0]).with_gradient(|x| vec![2.0 * x[0]]));
    (f, ClassicalState::new(vec![0.5], vec![0.0]))
}
