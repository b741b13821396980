//! Systemic performance and robustness measures for first-order linear
//! consensus networks `ẋ = −L x + ξ`, `y = M_n x` over weighted undirected
//! graphs.
//!
//! The crate is organized bottom-up:
//!
//! - [`graph`]: weighted graphs, the edge-list format, generators, Laplacian
//!   assembly and spanning-tree counting.
//! - [`spectral`]: symmetric eigensolver, Laplacian pseudo-inverse and the
//!   positive semidefinite order.
//! - [`measures`]: the measure catalog (spectral zeta, `H_p` norms, energies,
//!   entropy, Schur-convex sums) with a frequency-domain quadrature oracle.
//! - [`properties`]: randomized falsification searches for the measure
//!   axioms.
//! - [`design`]: weight allocation, brute-force rewiring and edge
//!   augmentation with the interlacing lower bound.
//! - [`sim`]: Euler–Maruyama simulation of the noisy consensus dynamics.
//! - [`cli`]: the `systemic` command-line front end and its JSON reports.

pub mod cli;
pub mod design;
pub mod error;
pub mod graph;
pub mod measures;
pub mod properties;
pub mod quad;
pub mod report;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{LaplacianMatrix, WeightedGraph};
pub use measures::{evaluate, Exponent, Measure};
pub use spectral::Spectrum;
