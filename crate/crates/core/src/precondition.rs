//! Diagonal row scaling `M = diag(m_0..m_N)` with `m_i = hbar_i / H` on the
//! fine rows `1..=J` and `m_i = 1` elsewhere, and the barrier certificate for
//! the scaled matrix `M A`.

use serde::Serialize;

use crate::discretize::{assemble_upwind, consistency_error, DiscreteSystem};
use crate::error::{Error, Result};
use crate::linalg::{inverse_inf_norm_inverse_positive, m_criterion_check, MeshVector};
use crate::mesh::{Grading, LayerMesh, Mesh};
use crate::problem::TestProblem;

/// Relative tolerance of the entry-by-entry cross-check in [`apply_preconditioner`].
pub const ENTRY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preconditioner {
    pub m_diag: Vec<f64>,
    pub j_index: usize,
    pub h_coarse: f64,
}

impl Preconditioner {
    pub fn new(mesh: &Mesh, j_index: usize, h_coarse: f64) -> Self {
        let n = mesh.n();
        let m_diag = (0..=n)
            .map(|i| {
                if i >= 1 && i <= j_index && i < n {
                    mesh.hbar(i) / h_coarse
                } else {
                    1.0
                }
            })
            .collect();
        Preconditioner {
            m_diag,
            j_index,
            h_coarse,
        }
    }
}

pub fn build_preconditioner(m: &LayerMesh) -> Preconditioner {
    Preconditioner::new(&m.mesh, m.j_index, m.h_coarse)
}

/// Entries `(l_i, d_i, r_i)` of the scaled matrix for interior row `i`,
/// written out directly in terms of the mesh.
pub fn scaled_row_closed_form(
    mesh: &Mesh,
    epsilon: f64,
    j_index: usize,
    h_coarse: f64,
    b: f64,
    c: f64,
    i: usize,
) -> (f64, f64, f64) {
    let big_h = h_coarse;
    let (l, r, reaction) = if i < j_index {
        let (h, h_next, hbar) = (mesh.h(i), mesh.h(i + 1), mesh.hbar(i));
        (
            -epsilon / (h * big_h),
            -epsilon / (h_next * big_h) - b * hbar / (h_next * big_h),
            hbar / big_h * c,
        )
    } else if i == j_index {
        let (h, hbar) = (mesh.h(i), mesh.hbar(i));
        (
            -epsilon / (h * big_h),
            -epsilon / (big_h * big_h) - b * hbar / (big_h * big_h),
            hbar / big_h * c,
        )
    } else {
        (
            -epsilon / (big_h * big_h),
            -epsilon / (big_h * big_h) - b / big_h,
            c,
        )
    };
    (l, -l - r + reaction, r)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= ENTRY_RTOL * a.abs().max(b.abs())
}

/// Forms `M A` and `M f`, and checks every scaled interior entry against
/// [`scaled_row_closed_form`].
pub fn apply_preconditioner<'a>(
    pc: &Preconditioner,
    s: &DiscreteSystem<'a>,
) -> Result<DiscreteSystem<'a>> {
    let matrix = s.matrix.scale_rows(&pc.m_diag)?;
    let rhs = s.rhs.iter().zip(&pc.m_diag).map(|(f, m)| f * m).collect();
    for i in 1..s.mesh.n() {
        let x = s.mesh.x(i);
        let expected = scaled_row_closed_form(
            s.mesh,
            s.epsilon,
            pc.j_index,
            pc.h_coarse,
            s.problem.b.eval(x),
            s.problem.c.eval(x),
            i,
        );
        let got = matrix.row(i);
        for (entry, scaled, closed_form) in [
            ("lower", got.0, expected.0),
            ("diagonal", got.1, expected.1),
            ("upper", got.2, expected.2),
        ] {
            if !close(scaled, closed_form) {
                return Err(Error::EntryMismatch {
                    row: i,
                    entry,
                    scaled,
                    closed_form,
                });
            }
        }
    }
    Ok(DiscreteSystem {
        matrix,
        rhs,
        mesh: s.mesh,
        problem: s.problem,
        epsilon: s.epsilon,
        preconditioned: true,
    })
}

/// `tau~_i = m_i tau_i` for `i = 1..=N-1`.
pub fn scaled_consistency(
    p: &TestProblem,
    mesh: &Mesh,
    epsilon: f64,
    pc: &Preconditioner,
    u_exact: impl Fn(f64) -> f64,
) -> Vec<f64> {
    consistency_error(p, mesh, epsilon, u_exact)
        .into_iter()
        .enumerate()
        .map(|(k, tau)| pc.m_diag[k + 1] * tau)
        .collect()
}

/// Constants of the barrier vector
/// `v_i = c_shift - H i + c_decay w_i`, with `w_i = 1` before the
/// transition and `w_i = (1 + rho)^{J-i} / (1 + rho_J)` from `J` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierConstants {
    pub c_shift: f64,
    pub c_decay: f64,
}

impl BarrierConstants {
    /// `c_shift = 3` exceeds `H N` plus the margin; `c_decay = max(1, 8/(a q beta))`
    /// makes `c_decay beta / 8 >= 1 / (a q)`.
    pub fn defaults(a: f64, q: f64, beta: f64) -> Self {
        BarrierConstants {
            c_shift: 3.0,
            c_decay: (8.0 / (a * q * beta)).max(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierCertificate {
    pub v: MeshVector,
    /// `sigma_i = (M A v)_i` for `i = 1..=N-1`.
    pub sigma: Vec<f64>,
    /// `beta/2 - 2/a`.
    pub delta: f64,
    /// `beta H / (2 eps)`.
    pub rho: f64,
    /// `beta h_J / (2 eps)`.
    pub rho_j: f64,
    pub c_shift: f64,
    pub c_decay: f64,
    pub min_sigma: f64,
    pub min_v: f64,
    pub max_v: f64,
    /// `min_i (M A v)_i` over all rows, boundary rows included.
    pub gamma: f64,
    /// Whether `zeta sqrt(eps) / (a q) <= 2/a`, the smallness condition on `eps`.
    pub small_eps: bool,
}

impl BarrierCertificate {
    pub fn sigma_ok(&self) -> bool {
        self.min_sigma >= self.delta
    }

    pub fn positivity_ok(&self) -> bool {
        self.min_v >= self.delta
    }

    pub fn certified(&self) -> bool {
        self.small_eps && self.sigma_ok() && self.positivity_ok()
    }

    /// `||v||_inf / delta`, the stability bound implied by the certificate.
    pub fn implied_bound(&self) -> f64 {
        self.max_v / self.delta
    }
}

/// Barrier values and their analytic increments.
fn barrier_vector(mesh: &LayerMesh, rho: f64, rho_j: f64, k: BarrierConstants) -> MeshVector {
    let n = mesh.n();
    let j = mesh.j_index;
    let big_h = mesh.h_coarse;
    let ln_growth = rho.ln_1p();
    // (1 + rho)^{-m}
    let decay = |m: usize| (-(m as f64) * ln_growth).exp();
    let values = (0..=n)
        .map(|i| {
            let layer = if i < j {
                1.0
            } else {
                decay(i - j) / (1.0 + rho_j)
            };
            k.c_shift - big_h * i as f64 + k.c_decay * layer
        })
        .collect();
    let increments = (0..n)
        .map(|i| {
            let layer = if i + 1 < j {
                0.0
            } else if i + 1 == j {
                -rho_j / (1.0 + rho_j)
            } else {
                -rho * decay(i + 1 - j) / (1.0 + rho_j)
            };
            -big_h + k.c_decay * layer
        })
        .collect();
    MeshVector::with_increments(values, increments).expect("lengths match")
}

/// Builds the barrier vector for the scaled system and evaluates
/// `sigma_i = l_i v_{i-1} + d_i v_i + r_i v_{i+1}`.
pub fn build_barrier(
    p: &TestProblem,
    m: &LayerMesh,
    pc: &Preconditioner,
    constants: BarrierConstants,
) -> Result<BarrierCertificate> {
    let Grading::Bakhvalov { params, zeta, .. } = m.grading else {
        return Err(Error::NotBakhvalov);
    };
    let delta = p.beta / 2.0 - 2.0 / params.a;
    if !(delta > 0.0) {
        return Err(Error::NonPositiveDelta { delta });
    }
    let eps = params.epsilon;
    let rho = p.beta * m.h_coarse / (2.0 * eps);
    let rho_j = p.beta * m.mesh.h(m.j_index) / (2.0 * eps);
    let v = barrier_vector(m, rho, rho_j, constants);
    if let Some((index, &value)) = v.values().iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(Error::NonPositiveBarrier { index, value });
    }

    let system = apply_preconditioner(pc, &assemble_upwind(p, &m.mesh, eps))?;
    let av = system.matrix.apply(&v);
    let n = m.n();
    let sigma = av[1..n].to_vec();
    let fold_min = |xs: &[f64]| xs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(BarrierCertificate {
        min_sigma: fold_min(&sigma),
        min_v: fold_min(v.values()),
        max_v: v.values().iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
        gamma: fold_min(&av),
        sigma,
        v,
        delta,
        rho,
        rho_j,
        c_shift: constants.c_shift,
        c_decay: constants.c_decay,
        small_eps: zeta * eps.sqrt() / (params.a * params.q) <= 2.0 / params.a,
    })
}

/// Stability summary of the scaled matrix: the certificate plus the exactly
/// computed `||(M A)^{-1}||_inf` and the M-criterion bound it must respect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCheck {
    pub certificate: BarrierCertificate,
    pub inverse_norm: f64,
    pub criterion_bound: f64,
}

pub fn check_stability(
    p: &TestProblem,
    m: &LayerMesh,
    constants: BarrierConstants,
) -> Result<StabilityCheck> {
    let pc = build_preconditioner(m);
    let certificate = build_barrier(p, m, &pc, constants)?;
    let system = apply_preconditioner(&pc, &assemble_upwind(p, &m.mesh, m.epsilon()))?;
    let criterion = m_criterion_check(&system.matrix, &certificate.v)?;
    let inverse_norm = inverse_inf_norm_inverse_positive(&system.matrix)?;
    Ok(StabilityCheck {
        certificate,
        inverse_norm,
        criterion_bound: criterion.bound,
    })
}
