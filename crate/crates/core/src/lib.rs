//! Equipartitions of mass assignments.
//!
//! Finds spheres inside k-dimensional subspaces that bisect d+1 mass
//! assignments, pairs of parallel hyperplanes whose slab holds half of each
//! mass, and axis-parallel down-wedges on vertical planes. Every partition is
//! located as a numerical zero of an explicit `(Z_2)^{m+1}`-equivariant test
//! map and then checked by an oracle that never touches the lifting code.
//!
//! Module map:
//! - [`geometry`]: frames, complements, the affine and parabolic lifts, inversion,
//!   and recovery of spheres and slabs from hyperplanes of `R^{d+1}`.
//! - [`measures`]: weighted clouds, mass assignments, smoothed half-space measures.
//! - [`testmaps`]: group actions, the canonical map, sphere and slab test maps.
//! - [`wedges`]: down-wedges and the wedge test map.
//! - [`solvers`]: multistart descent and homotopy tracking on `S^d x V_m(R^d)`.
//! - [`scenarios`]: instance generators.
//! - [`verify`]: independent residual oracles and the optimality scan.
//! - [`cli`]: scenario/result files and the command line driver.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod measures;
pub mod roots;
pub mod scenarios;
pub mod solvers;
pub mod testmaps;
pub mod verify;
pub mod wedges;

pub use error::{Error, Result};
pub use geometry::{FramePoint, HyperplaneD1, SlabPartition, SpherePartition, SubspaceBasis};
pub use measures::{AssignmentSpec, Line, SmoothingSpec, WeightedCloud};
pub use testmaps::{GroupElement, TestMapValue};
pub use wedges::{DownWedge, WedgeFrame};
