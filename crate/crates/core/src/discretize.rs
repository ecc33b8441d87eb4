//! Upwind finite differences on an arbitrary mesh.
//!
//! Interior rows `1 <= i <= N-1` encode
//!
//! ```text
//! -eps D''U_i - b_i D'U_i + c_i U_i = f_i
//! D''W_i = ((W_{i+1} - W_i) / h_{i+1} - (W_i - W_{i-1}) / h_i) / hbar_i
//! D'W_i  = (W_{i+1} - W_i) / h_{i+1}
//! ```
//!
//! and rows `0` and `N` are identity rows with zero right-hand side.

use crate::linalg::{MeshVector, TridiagonalMatrix};
use crate::mesh::Mesh;
use crate::problem::TestProblem;

#[derive(Debug, Clone)]
pub struct DiscreteSystem<'a> {
    pub matrix: TridiagonalMatrix,
    pub rhs: Vec<f64>,
    pub mesh: &'a Mesh,
    pub problem: &'a TestProblem,
    pub epsilon: f64,
    pub preconditioned: bool,
}

/// Off-diagonal entries of interior row `i`: `(a_{i,i-1}, a_{i,i+1})`.
pub fn upwind_row(mesh: &Mesh, epsilon: f64, b: f64, i: usize) -> (f64, f64) {
    let (h, h_next, hbar) = (mesh.h(i), mesh.h(i + 1), mesh.hbar(i));
    let lower = -epsilon / (hbar * h);
    let upper = -epsilon / (hbar * h_next) - b / h_next;
    (lower, upper)
}

pub fn assemble_upwind<'a>(p: &'a TestProblem, mesh: &'a Mesh, epsilon: f64) -> DiscreteSystem<'a> {
    let n = mesh.n();
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut row_sums = vec![0.0; n + 1];
    let mut rhs = vec![0.0; n + 1];
    row_sums[0] = 1.0;
    row_sums[n] = 1.0;
    for i in 1..n {
        let x = mesh.x(i);
        let (l, u) = upwind_row(mesh, epsilon, p.b.eval(x), i);
        lower[i - 1] = l;
        upper[i] = u;
        row_sums[i] = p.c.eval(x);
        rhs[i] = p.f.eval(x);
    }
    let matrix = TridiagonalMatrix::from_row_sums(lower, upper, row_sums)
        .expect("diagonal lengths are consistent by construction");
    DiscreteSystem {
        matrix,
        rhs,
        mesh,
        problem: p,
        epsilon,
        preconditioned: false,
    }
}

pub fn is_l_matrix(t: &TridiagonalMatrix) -> bool {
    t.is_l_matrix()
}

/// `tau_i = (L^N u)_i - f_i` for `i = 1..=N-1` (index `i - 1` in the result).
pub fn consistency_error(
    p: &TestProblem,
    mesh: &Mesh,
    epsilon: f64,
    u_exact: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let sys = assemble_upwind(p, mesh, epsilon);
    let u = MeshVector::from_values(mesh.points().iter().map(|&x| u_exact(x)).collect());
    let lu = sys.matrix.apply(&u);
    (1..mesh.n()).map(|i| lu[i] - sys.rhs[i]).collect()
}
