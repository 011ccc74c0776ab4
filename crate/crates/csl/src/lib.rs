//! csl — a conformal spectral laboratory for triangulated surfaces
//! with boundary.
//!
//! The crate builds meshes (disks, annuli, ribbons, graded disks),
//! equips them with conformal metrics `h * g`, assembles linear finite
//! elements, and solves Neumann, Dirichlet, Schroedinger and Steklov
//! eigenproblems. On top of the spectra it evaluates conformal
//! eigenvalue bounds through the Moebius group of the sphere: spherical
//! image volumes in the stereographic chart, sup-volume searches,
//! Hersch-type balancing, and the conformal cylinder deformation that
//! drives the Dirichlet spectrum-volume product to infinity.
//!
//! Entry points:
//! - [`mesh`] — generators, validation, the `CSLMESH` text format
//! - [`metric`] — conformal factors, areas, boundary masses
//! - [`spectral`] — FEM assembly and the four eigenproblems
//! - [`moebius`] — stereographic transport, volumes, searches, balancing
//! - [`confvol`] — bound reports and conformal-volume witnesses
//! - [`deform`] — the cylinder factor `h_eps` and blow-up sweeps
//! - [`cli`] — the batch front-end behind the `csl` binary
//!
//! Runnable walkthroughs live in `examples/`.

pub mod error;
pub mod geom;
pub mod mesh;
pub mod metric;
pub mod moebius;
pub mod spectral;
pub mod confvol;
pub mod deform;

pub use error::{Error, Result};
