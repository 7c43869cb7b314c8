//! Numerical laboratory for the spectral fractional Laplacian on bounded
//! domains: eigenbases and fractional powers, bubble families and their
//! domain projections, Green/Robin functions, the degenerate cylinder
//! extension, blow-up solvers for the critical and slightly subcritical
//! problems, reduced energies over scale/center configurations, and
//! epsilon-sweep rate extraction.

pub mod basis;
pub mod bubbles;
pub mod constants;
pub mod error;
pub mod extension;
pub mod field;
pub mod greens;
pub mod grid;
pub mod lattice;
pub mod operator;
pub mod problem;
pub mod reduced;
pub mod solver;
pub mod special;
pub mod sweep;

pub use basis::SpectralBasis;
pub use bubbles::{BubbleDeriv, BubbleParams};
pub use constants::{closed_form_constants, ConstantSet};
pub use error::{Error, Result};
pub use field::{GridFunction, SpectralCoeffs};
pub use greens::{GreenCache, RobinMethod};
pub use grid::{DomainGrid, Mask2d};
pub use problem::{lookup_kind, ProblemKind};
pub use solver::SolveReport;
