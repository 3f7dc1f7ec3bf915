//! Direct discontinuous Galerkin (DDG) discretization of the 2-D periodic
//! nonlinear convection-diffusion equation
//!
//! ```text
//! u_t + f1(u)_x + f2(u)_y = u_xx + u_yy + g(x, y, t)   on [0, 2 pi]^2
//! ```
//!
//! on tensor-product meshes with `Q_k` modal elements, together with the
//! special projections, correction functions and error samplers used to
//! study its superconvergence.

pub mod analytic;
pub mod correction;
pub mod error;
pub mod error_norms;
pub mod field;
pub mod harness;
pub mod flux;
pub mod mesh;
pub mod operator;
pub mod par;
pub mod poly1d;
pub mod projections;
pub mod timestep;

pub use analytic::{AnalyticField, TrigField};
pub use error::{DdgError, Result};
pub use field::{l2_project, DGField};
pub use flux::{Burgers, FluxParams, ScalarFlux, SineFlux, ZeroFlux};
pub use mesh::{Axis, Mesh2D};
pub use operator::OperatorContext;
pub use par::Execution;
pub use harness::{run_case, run_convergence, ConvergenceReport, InitMode, Problem, ProblemSpec, RunConfig};
