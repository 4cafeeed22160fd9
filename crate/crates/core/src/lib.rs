//! Homogenization-based design toolkit for graded-gyroid two-fluid heat
//! exchangers.
//!
//! The crate is organized around the pipeline it implements:
//!
//! 1. [`grid`] / [`design`] — structured grids, the per-cell thickness design
//!    variable, and the cone-weight density filter with its exact transpose.
//! 2. [`gyroid`] — the two-level-set gyroid solid: phase queries, cell
//!    measurements (porosity, interfacial area), isosurface extraction and
//!    STL export for dehomogenization.
//! 3. [`props`] — effective-property construction: sample tables, polynomial
//!    fits (Darcy–Forchheimer resistance, heat-transfer surface), voxel
//!    conduction homogenization, and a seeded synthetic table generator.
//! 4. [`solver`] — the coupled steady model: two Brinkman–Forchheimer
//!    momentum/continuity systems plus a three-temperature energy system with
//!    volumetric wall/fluid heat exchange.
//! 5. [`adjoint`] — discrete-adjoint sensitivities, the MMA update, and the
//!    optimization driver / weighting-factor sweep.
//! 6. [`metrics`] — thermal-hydraulic performance numbers (friction factor,
//!    Colburn j, PEC, velocity-uniformity statistics).
//! 7. [`vtk`] / [`csv`] — legacy-ASCII VTK and flat CSV serialization.

pub mod design;
pub mod error;
pub mod grid;
pub mod gyroid;
pub mod io;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
