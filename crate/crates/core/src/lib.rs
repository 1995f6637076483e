//! Numerical laboratory for the two-phase Stefan problem `u_t = Δα(u)` in
//! enthalpy form.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: the temperature map α, its smooth regularizations α_m, the
//!   antiderivatives A_m and the cutoff profiles φ_h.
//! - [`grid`]: uniform space-time grids, fields, discrete calculus, cylinders
//!   and smooth bump functions.
//! - [`mollify`]: product mollifiers, the discrete maximal function and the
//!   below-average slice/radius selections.
//! - [`solver`]: backward-Euler steppers for the regularized and the exact graph.
//! - [`diagnostics`]: energy, subcaloric, comparison, agreement, continuity
//!   and local-boundedness checks on computed fields.
//! - [`scenarios`] and [`runner`]: the scenario registry, run configuration,
//!   batch runs, sweeps and report emission.
//! - [`verify`]: the graph and proof-device property suites.
//!
//! Data-parallel loops go through [`exec::Exec`]; with the `parallel` feature
//! (default) they run on rayon, otherwise sequentially.

pub mod banded;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod graph;
pub mod grid;
pub mod mollify;
pub mod runner;
pub mod scenarios;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
pub use graph::{Constitutive, CutoffProfile, CutoffVariant, EnthalpyGraph, RegularizedGraph};
pub use grid::{Ball, Cylinder, Grid, NestedCylinders, Point, Role, SpaceTimeField};
