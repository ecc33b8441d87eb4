//! Layer-adapted meshes on `[0, 1]`.
//!
//! The graded mesh is generated by `x_i = lambda(i / N)` where
//!
//! ```text
//! lambda(t) = psi(t)                               for t in [0, alpha]
//!           = psi(alpha) + psi'(alpha) (t - alpha)  for t in [alpha, 1]
//! psi(t)    = a eps t / (q - t)
//! ```
//!
//! and `alpha` is the tangency point: the line from `(1, 1)` touches `psi`
//! at `alpha`. Beyond `x_J` (with `t_{J-1} < alpha <= t_J`) the mesh is
//! uniform with step `H = psi'(alpha) / N`.
//!
//! Step sizes are evaluated from closed forms instead of differencing the
//! points; differencing loses most digits when `h_i` is far below the
//! magnitude of `x_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    /// Grading strength.
    pub a: f64,
    /// Pole of the generating function, in `(0, 1)`.
    pub q: f64,
    /// Number of mesh intervals.
    pub n: usize,
    pub epsilon: f64,
}

impl MeshParams {
    pub fn new(a: f64, q: f64, n: usize, epsilon: f64) -> Result<Self> {
        let p = MeshParams { a, q, n, epsilon };
        p.validate()?;
        Ok(p)
    }

    /// Default grading `a = 4/beta + 1`, `q = 1/2`.
    pub fn with_defaults(beta: f64, n: usize, epsilon: f64) -> Result<Self> {
        Self::new(default_grading(beta), DEFAULT_Q, n, epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidMeshParams(format!(
                "a must be positive, got {}",
                self.a
            )));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::InvalidMeshParams(format!(
                "q must lie in (0, 1), got {}",
                self.q
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidMeshParams(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return Err(Error::InvalidMeshParams(format!(
                "N must be even and at least 4, got {}",
                self.n
            )));
        }
        let product = self.a * self.epsilon;
        if !(product < self.q) {
            return Err(Error::IllPosedGrading { product, q: self.q });
        }
        Ok(())
    }
}

pub const DEFAULT_Q: f64 = 0.5;

pub fn default_grading(beta: f64) -> f64 {
    4.0 / beta + 1.0
}

/// The tangency point together with `q - alpha`, which is carried separately
/// because it is `O(sqrt(eps))` and cannot be recovered from `alpha` by
/// subtraction without losing about half the significant digits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentPoint {
    pub alpha: f64,
    /// `q - alpha`.
    pub gap: f64,
}

/// Closed-form root of `a eps alpha (q - alpha) + a eps q (1 - alpha) = (q - alpha)^2`
/// lying in `(0, q)`.
pub fn solve_alpha(p: &MeshParams) -> Result<TangentPoint> {
    p.validate()?;
    let ae = p.a * p.epsilon;
    let root = (ae * p.q * (1.0 - p.q + ae)).sqrt();
    let alpha = (p.q - root) / (1.0 + ae);
    // q - alpha = (a eps q + root) / (1 + a eps), free of cancellation.
    let gap = (ae * p.q + root) / (1.0 + ae);
    Ok(TangentPoint { alpha, gap })
}

/// The mesh-generating function `lambda` for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratingFunction {
    pub params: MeshParams,
    pub tangent: TangentPoint,
}

impl GeneratingFunction {
    pub fn new(params: MeshParams) -> Result<Self> {
        let tangent = solve_alpha(&params)?;
        Ok(GeneratingFunction { params, tangent })
    }

    fn ae(&self) -> f64 {
        self.params.a * self.params.epsilon
    }

    /// `psi(t) = a eps t / (q - t)` for `t < q`.
    pub fn psi(&self, t: f64) -> f64 {
        self.ae() * t / (self.params.q - t)
    }

    pub fn psi_prime(&self, t: f64) -> f64 {
        let d = self.params.q - t;
        self.ae() * self.params.q / (d * d)
    }

    pub fn psi_alpha(&self) -> f64 {
        self.ae() * self.tangent.alpha / self.tangent.gap
    }

    pub fn psi_prime_alpha(&self) -> f64 {
        let g = self.tangent.gap;
        self.ae() * self.params.q / (g * g)
    }

    pub fn lambda(&self, t: f64) -> f64 {
        if t <= self.tangent.alpha {
            self.psi(t)
        } else {
            1.0 - self.psi_prime_alpha() * (1.0 - t)
        }
    }

    /// `psi(alpha) + psi'(alpha) (1 - alpha) - 1`, zero up to roundoff.
    pub fn tangency_residual(&self) -> f64 {
        self.psi_alpha() + self.psi_prime_alpha() * (1.0 - self.tangent.alpha) - 1.0
    }

    /// `zeta = (q - alpha) / sqrt(eps)`.
    pub fn zeta(&self) -> f64 {
        self.tangent.gap / self.params.epsilon.sqrt()
    }
}

/// Points and step sizes of a mesh `0 = x_0 < x_1 < ... < x_N = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    points: Vec<f64>,
    /// `steps[i - 1] = h_i`.
    steps: Vec<f64>,
}

impl Mesh {
    /// Builds a mesh from its points; steps are taken as point differences.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        let steps: Vec<f64> = points.windows(2).map(|w| w[1] - w[0]).collect();
        Self::from_parts(points, steps)
    }

    fn from_parts(points: Vec<f64>, steps: Vec<f64>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidMeshParams(
                "a mesh needs at least 2 intervals".into(),
            ));
        }
        if steps.len() + 1 != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len() - 1,
                found: steps.len(),
            });
        }
        if let Some(i) = points.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMeshParams(format!(
                "points must be strictly increasing (x_{} >= x_{})",
                i,
                i + 1
            )));
        }
        if let Some(i) = steps.iter().position(|&h| !(h > 0.0)) {
            return Err(Error::InvalidMeshParams(format!(
                "step h_{} is not positive",
                i + 1
            )));
        }
        Ok(Mesh { points, steps })
    }

    pub fn uniform(n: usize) -> Self {
        let points = (0..=n).map(|i| i as f64 / n as f64).collect();
        Mesh {
            points,
            steps: vec![1.0 / n as f64; n],
        }
    }

    /// Number of intervals `N`.
    pub fn n(&self) -> usize {
        self.steps.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn x(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// `h_i = x_i - x_{i-1}` for `1 <= i <= N`.
    pub fn h(&self, i: usize) -> f64 {
        self.steps[i - 1]
    }

    /// `hbar_i = (h_i + h_{i+1}) / 2` for `1 <= i <= N - 1`.
    pub fn hbar(&self, i: usize) -> f64 {
        0.5 * (self.steps[i - 1] + self.steps[i])
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }
}

/// `(h_1..h_N, hbar_1..hbar_{N-1})`.
pub fn mesh_steps(m: &Mesh) -> (Vec<f64>, Vec<f64>) {
    let h = m.steps.clone();
    let hbar = (1..m.n()).map(|i| m.hbar(i)).collect();
    (h, hbar)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Grading {
    /// Generated by [`GeneratingFunction`].
    Bakhvalov {
        params: MeshParams,
        alpha: f64,
        zeta: f64,
    },
    /// Piecewise-uniform comparison mesh with transition `min(1/2, sigma eps / beta ln N)`.
    Shishkin { epsilon: f64, sigma: f64, beta: f64 },
}

/// A mesh with a fine region `x_0..x_J` followed by a uniform coarse region
/// of step `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerMesh {
    pub mesh: Mesh,
    pub grading: Grading,
    pub j_index: usize,
    pub h_coarse: f64,
    /// `psi(alpha)` for the graded mesh, the transition point for Shishkin.
    pub transition: f64,
}

impl LayerMesh {
    pub fn n(&self) -> usize {
        self.mesh.n()
    }

    pub fn epsilon(&self) -> f64 {
        match self.grading {
            Grading::Bakhvalov { params, .. } => params.epsilon,
            Grading::Shishkin { epsilon, .. } => epsilon,
        }
    }

    pub fn params(&self) -> Option<&MeshParams> {
        match &self.grading {
            Grading::Bakhvalov { params, .. } => Some(params),
            Grading::Shishkin { .. } => None,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.grading {
            Grading::Bakhvalov { alpha, .. } => Some(alpha),
            Grading::Shishkin { .. } => None,
        }
    }

    pub fn zeta(&self) -> Option<f64> {
        match self.grading {
            Grading::Bakhvalov { zeta, .. } => Some(zeta),
            Grading::Shishkin { .. } => None,
        }
    }

    pub fn is_bakhvalov(&self) -> bool {
        matches!(self.grading, Grading::Bakhvalov { .. })
    }

    /// Too few fine intervals for the grading estimates (`J < 3`).
    pub fn is_degenerate(&self) -> bool {
        self.j_index < 3
    }
}

/// Smallest `J` with `J / N >= alpha`, so `t_{J-1} < alpha <= t_J`.
fn transition_index(alpha: f64, n: usize) -> usize {
    let t = |i: usize| i as f64 / n as f64;
    let mut j = ((alpha * n as f64).ceil() as usize).clamp(1, n);
    while j > 1 && t(j - 1) >= alpha {
        j -= 1;
    }
    while j < n && t(j) < alpha {
        j += 1;
    }
    j
}

pub fn generate_vb_mesh(p: &MeshParams) -> Result<LayerMesh> {
    let gen = GeneratingFunction::new(*p)?;
    let n = p.n;
    let nf = n as f64;
    let t = |i: usize| i as f64 / nf;
    let TangentPoint { alpha, gap } = gen.tangent;
    let ae = p.a * p.epsilon;
    let j = transition_index(alpha, n);
    let slope = gen.psi_prime_alpha();
    let h_coarse = slope / nf;
    let psi_alpha = gen.psi_alpha();
    // `t_J - alpha` and `alpha - t_{J-1}` through the gap: alpha itself is
    // too close to q to subtract from.
    let past_alpha = (t(j) - p.q) + gap;
    let before_alpha = (p.q - t(j - 1)) - gap;

    let mut points = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let x = if i < j {
            gen.psi(t(i))
        } else if i == j {
            psi_alpha + slope * past_alpha
        } else if i == n {
            1.0
        } else {
            1.0 - h_coarse * (n - i) as f64
        };
        points.push(x);
    }

    let mut steps = Vec::with_capacity(n);
    for i in 1..=n {
        let h = if i < j {
            ae * p.q / (nf * (p.q - t(i - 1)) * (p.q - t(i)))
        } else if i == j {
            // Split at the tangency point: psi part plus linear part.
            ae * p.q * before_alpha / (gap * (p.q - t(j - 1))) + slope * past_alpha
        } else {
            h_coarse
        };
        steps.push(h);
    }

    Ok(LayerMesh {
        mesh: Mesh::from_parts(points, steps)?,
        grading: Grading::Bakhvalov {
            params: *p,
            alpha,
            zeta: gen.zeta(),
        },
        j_index: j,
        h_coarse,
        transition: psi_alpha,
    })
}

/// Piecewise-uniform Shishkin mesh with `N/2` intervals on each side of the
/// transition point. Used as a comparison baseline only.
pub fn generate_shishkin_mesh(p: &MeshParams, sigma: f64, beta: f64) -> Result<LayerMesh> {
    p.validate()?;
    if !(sigma > 0.0 && beta > 0.0) {
        return Err(Error::InvalidMeshParams(format!(
            "sigma and beta must be positive, got {sigma}, {beta}"
        )));
    }
    let n = p.n;
    let half = n / 2;
    let tau = (sigma * p.epsilon / beta * (n as f64).ln()).min(0.5);
    let h_fine = tau / half as f64;
    let h_coarse = (1.0 - tau) / half as f64;
    let points = (0..=n)
        .map(|i| {
            if i <= half {
                i as f64 * h_fine
            } else if i == n {
                1.0
            } else {
                1.0 - (n - i) as f64 * h_coarse
            }
        })
        .collect();
    let steps = (1..=n)
        .map(|i| if i <= half { h_fine } else { h_coarse })
        .collect();
    Ok(LayerMesh {
        mesh: Mesh::from_parts(points, steps)?,
        grading: Grading::Shishkin {
            epsilon: p.epsilon,
            sigma,
            beta,
        },
        j_index: half,
        h_coarse,
        transition: tau,
    })
}

/// The two grading quantities bounded by the mesh estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradingQuantities {
    /// `g_i = eps (h_{i+1} - h_i) / (h_i h_{i+1})` for `i = 1..=J-2`.
    pub g: Vec<f64>,
    /// `eps (H - h_J) / (h_J H)`.
    pub g_transition: f64,
    /// `2 / a`.
    pub g_bound: f64,
    /// `zeta sqrt(eps) / (a q)`.
    pub transition_bound: f64,
}

impl GradingQuantities {
    pub fn holds(&self, slack: f64) -> bool {
        self.g.iter().all(|&g| g <= self.g_bound + slack)
            && self.g_transition <= self.transition_bound + slack
    }

    /// Largest ratio of a quantity to its bound; at most 1 when the estimates hold.
    pub fn max_ratio(&self) -> f64 {
        let g_max = self.g.iter().fold(f64::NEG_INFINITY, |m, &g| m.max(g));
        (g_max / self.g_bound).max(self.g_transition / self.transition_bound)
    }
}

pub fn lemma1_quantities(m: &LayerMesh) -> Result<GradingQuantities> {
    let Grading::Bakhvalov { params, zeta, .. } = m.grading else {
        return Err(Error::NotBakhvalov);
    };
    if m.is_degenerate() {
        return Err(Error::DegenerateMesh { j_index: m.j_index });
    }
    let eps = params.epsilon;
    let j = m.j_index;
    let g = (1..=j - 2)
        .map(|i| {
            let (hi, hn) = (m.mesh.h(i), m.mesh.h(i + 1));
            eps * (hn - hi) / (hi * hn)
        })
        .collect();
    let (hj, big_h) = (m.mesh.h(j), m.h_coarse);
    Ok(GradingQuantities {
        g,
        g_transition: eps * (big_h - hj) / (hj * big_h),
        g_bound: 2.0 / params.a,
        transition_bound: zeta * eps.sqrt() / (params.a * params.q),
    })
}
