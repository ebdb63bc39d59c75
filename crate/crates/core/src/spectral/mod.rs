//! Radial grids, sector operators and their exact propagators.

mod grid;
mod operator;
mod propagator;
pub mod tridiag;

pub use grid::{RadialGrid, MIN_POINTS};
pub(crate) use grid::check_len;
pub use operator::{potential_phase, Coulomb, Interaction, OperatorKind, SectorOperator};
pub(crate) use operator::potential_phases;
pub use propagator::{
    bessel_sequence, diagonalize, eigenvalues, ChebyshevPropagator, EigenDecomposition, Propagator,
};
