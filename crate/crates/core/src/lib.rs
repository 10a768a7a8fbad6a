//! Greedy m-term approximation with the Haar system in `L^p([0,1]^d)`.
//!
//! Functions are piecewise constant on a uniform dyadic grid, so every norm,
//! coefficient and conditional expectation is computed exactly. On top of the
//! transform sit the thresholding greedy operator, an exhaustive best m-term
//! oracle, the closed-form constants bounding the greedy error, and executable
//! checks for each inequality those constants come from.

pub mod basis;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod greedy;
pub mod grid;
pub mod martingale;
pub mod oracle;
pub mod transform;

pub use basis::{atom_lp_norm, dictionary, evaluate_atom, AtomDescriptor, HaarAtom, Orientation};
pub use error::{Error, Result};
pub use greedy::{greedy_approximation, greedy_error, greedy_residual, select_lambda_m, Support};
pub use grid::{cube_volume, lp_norm, restrict_indicator, DyadicCube, GridFunction};
pub use oracle::{optimize_coefficients, sigma_m, BestMTermResult, SolverOptions};
pub use transform::{analyze, project, square_function, synthesize, CoefficientTable};
