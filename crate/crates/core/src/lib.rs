//! Upwind finite differences for the singularly perturbed problem
//! `-eps u'' - b u' + c u = f`, `u(0) = u(1) = 0`, on a Bakhvalov-type graded
//! mesh, together with the diagonal row scaling that makes the discrete
//! system uniformly well conditioned in `eps`.
//!
//! Modules follow the computational pipeline:
//! [`problem`] -> [`mesh`] -> [`discretize`] -> [`precondition`] -> [`linalg`],
//! with [`experiments`] running parameter sweeps and writing reports.

// Validity checks are written `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretize;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod mesh;
pub mod precondition;
pub mod problem;

pub use discretize::{assemble_upwind, consistency_error, is_l_matrix, DiscreteSystem};
pub use error::{Error, Result};
pub use linalg::{
    condition_number, inf_norm_matrix, inverse_inf_norm_inverse_positive, m_criterion_check,
    thomas_solve, MCriterion, MeshVector, SolveResult, TridiagonalMatrix,
};
pub use mesh::{
    generate_shishkin_mesh, generate_vb_mesh, lemma1_quantities, mesh_steps, solve_alpha,
    GeneratingFunction, Grading, GradingQuantities, LayerMesh, Mesh, MeshParams, TangentPoint,
};
pub use precondition::{
    apply_preconditioner, build_barrier, build_preconditioner, check_stability, scaled_consistency,
    BarrierCertificate, BarrierConstants, Preconditioner, StabilityCheck,
};
pub use problem::{
    builtin_layer_problem, problem_by_name, validate_problem, Coefficient, TestProblem,
    ValidationReport, Violation,
};
