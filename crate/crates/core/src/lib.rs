//! Cavity light scattering from ultracold atoms in a one-dimensional optical
//! lattice.
//!
//! The scattered cavity field is proportional to the operator
//! `D = Σ A_i n_i`, a weighted sum of site occupations. Every observable
//! computed here (field amplitude, intensity, the noise quantity `R`,
//! fourth moments, photon-number and quadrature variances) is a moment of
//! `D` over the occupation statistics of a Mott insulator, a superfluid, or
//! an atomic coherent state.
//!
//! * [`geometry`] builds the per-site couplings `A_i` from the mode geometry.
//! * [`states`] provides occupation moments through factorial moments.
//! * [`observables`] evaluates the closed-form light observables.
//! * [`oracle`] recomputes the same moments by direct averaging over
//!   occupation configurations, exactly or by Monte Carlo.
//! * [`scan`] drives angular sweeps, figure presets and file output.

pub mod error;
pub mod geometry;
pub mod observables;
pub mod oracle;
pub mod scan;
pub mod states;

pub use error::{Error, Result};
pub use geometry::{
    alpha_minus, couplings, mode_value, structure_function, CouplingSet, LatticeGeometry,
    ModeKind, ModeSpec,
};
pub use observables::{CavityParams, ObservablesReport};
pub use oracle::{OccupationConfig, OracleReport};
pub use states::{AtomicState, MomentPattern, Table1Report};

pub use num_complex::Complex64;
