//! Numerical solution of the Dirichlet problem for the two-dimensional
//! Monge–Ampère equation `det ∇²u = f` by convex optimization.
//!
//! A discrete energy `J_h(v) = h² Σ Φ(∇_h v)` is minimized over discrete
//! convex mesh functions whose discrete Hessian determinant dominates `f`.
//! Two discretizations of the constraint are provided: the 9-point Hessian
//! ([`Scheme::Standard`]) and a monotone wide-stencil operator
//! ([`Scheme::Monotone`]). Both are posed as second-order cone programs and
//! solved with [`masolve_conic`].
//!
//! ```
//! use masolve_core::{harness, Phi, Scheme};
//! use masolve_conic::SolveSettings;
//!
//! let case = harness::test_case("test3").unwrap();
//! let run = harness::run_case(&case, 4, Phi::Sqrt1pp, &Scheme::Standard, &SolveSettings::default()).unwrap();
//! assert!(run.row.error < 1e-6);
//! ```

pub mod grid;
pub mod harness;
pub mod operators;
pub mod program;

pub use grid::{backward_gradient, diff, norms, Axis, DiffKind, GradField, InteriorFunction, Mesh, MeshFunction, Norms};
pub use operators::{
    det_and_lambda_min, discrete_hessian, is_locally_discrete_convex, is_wide_stencil_convex, j_h, monotone_ma,
    HessianField, Phi, StencilSet,
};
pub use program::{
    build_envelope_program, build_monotone_program, build_program, build_standard_program, canonicalize,
    epigraph_of_phi, BlockCounts, MaProgram, ProgramSpec, Scheme, VarDef,
};

use masolve_conic::SolverError;

#[derive(Debug, thiserror::Error)]
pub enum MaError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("stencil leaves the mesh: {0}")]
    OutOfStencil(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("not differentiable: {0}")]
    Nondifferentiable(String),
    #[error("unsupported stencil width {0} (expected 1 or 2)")]
    UnsupportedWidth(usize),
    #[error("monotone operator undefined: {0}")]
    OperatorUndefined(String),
    #[error("atom placement: {0}")]
    AtomPlacement(String),
    #[error("unknown test case `{0}` (expected test1, test2, test3, test4 or dirac2)")]
    UnknownCase(String),
    #[error("infeasible sample: {0}")]
    InfeasibleSample(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
