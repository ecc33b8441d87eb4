//! Parameter sweeps over `(N, eps)`: error, observed rates, condition
//! numbers and the stability/grading checks, collected per cell.

pub mod config;
pub mod report;

use std::fmt;

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

pub use config::{ErrorMethod, MeshKind, OutputFormat, PreconditionMode, StudyConfig};
pub use report::{emit_report, render_report};

use crate::discretize::{assemble_upwind, DiscreteSystem};
use crate::error::{Error, Result};
use crate::linalg::{
    inf_norm_matrix, inverse_inf_norm_inverse_positive, m_criterion_check, max_norm, thomas_solve,
    MeshVector,
};
use crate::mesh::{
    generate_shishkin_mesh, generate_vb_mesh, lemma1_quantities, LayerMesh, MeshParams,
};
use crate::precondition::{apply_preconditioner, build_barrier, build_preconditioner};
use crate::problem::TestProblem;

/// Roundoff slack for inequalities that hold exactly in real arithmetic.
pub const INEQUALITY_SLACK: f64 = 1e-12;

/// Relative agreement required between the raw and the scaled solve.
pub const PATH_AGREEMENT_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Flag {
    /// Fewer than three fine intervals; grading estimates skipped.
    Degenerate,
    /// `eps` too large for the barrier argument; sigma reported but not judged.
    NotCertified,
    /// No barrier for this cell (Shishkin mesh or `a <= 4/beta`).
    NoBarrier,
    LMatrix,
    MCriterion,
    Stability,
    Grading,
    Barrier,
    InverseBound,
    EntryMismatch,
    PathMismatch,
    SolveFailed,
    ErrorFailed,
}

impl Flag {
    pub fn is_failure(self) -> bool {
        !matches!(
            self,
            Flag::Degenerate | Flag::NotCertified | Flag::NoBarrier
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Degenerate => "degenerate",
            Flag::NotCertified => "not-certified",
            Flag::NoBarrier => "no-barrier",
            Flag::LMatrix => "fail:l-matrix",
            Flag::MCriterion => "fail:m-criterion",
            Flag::Stability => "fail:stability",
            Flag::Grading => "fail:grading",
            Flag::Barrier => "fail:barrier",
            Flag::InverseBound => "fail:inverse-bound",
            Flag::EntryMismatch => "fail:entry-mismatch",
            Flag::PathMismatch => "fail:path-mismatch",
            Flag::SolveFailed => "fail:solve",
            Flag::ErrorFailed => "fail:error",
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Flag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// One `(N, eps)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRecord {
    pub n: usize,
    pub eps: f64,
    /// `max_i |U_i - u(x_i)|`, or the double-mesh estimate.
    pub error: Option<f64>,
    /// `log2(e_{N/2} / e_N)`, stored on the finer row.
    pub rate: Option<f64>,
    pub kappa_raw: Option<f64>,
    pub kappa_precond: Option<f64>,
    /// `||(M A)^{-1}||_inf`.
    pub inv_norm: Option<f64>,
    pub min_sigma: Option<f64>,
    /// Largest ratio of a grading quantity to its bound.
    pub lemma1_max: Option<f64>,
    /// `||A^{-1}||_inf` of the unscaled matrix.
    pub raw_inv_norm: Option<f64>,
    /// `min_i (A w)_i` for `w_i = 2 - x_i`.
    pub m_gamma: Option<f64>,
    pub flags: Vec<Flag>,
}

impl StudyRecord {
    fn empty(n: usize, eps: f64) -> Self {
        StudyRecord {
            n,
            eps,
            error: None,
            rate: None,
            kappa_raw: None,
            kappa_precond: None,
            inv_norm: None,
            min_sigma: None,
            lemma1_max: None,
            raw_inv_norm: None,
            m_gamma: None,
            flags: Vec::new(),
        }
    }

    fn flag(&mut self, f: Flag) {
        if !self.flags.contains(&f) {
            self.flags.push(f);
        }
    }

    pub fn has_failure(&self) -> bool {
        self.flags.iter().any(|f| f.is_failure())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedCell {
    pub n: usize,
    pub eps: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub problem: String,
    pub beta: f64,
    pub mesh: MeshKind,
    pub a: f64,
    pub q: f64,
    pub sigma: f64,
    pub precondition: PreconditionMode,
    pub error_method: ErrorMethod,
    pub c_shift: f64,
    pub c_decay: f64,
    pub n_values: Vec<usize>,
    pub eps_values: Vec<f64>,
    pub version: &'static str,
}

/// Tables indexed `[eps][N]` in config order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub n_values: Vec<usize>,
    pub eps_values: Vec<f64>,
    pub errors: Vec<Vec<Option<f64>>>,
    pub rates: Vec<Vec<Option<f64>>>,
    /// `max_eps e(N, eps)` over the admissible cells of each `N`.
    pub uniform_error: Vec<Option<f64>>,
    pub uniform_rate: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub provenance: Provenance,
    pub records: Vec<StudyRecord>,
    pub skipped: Vec<SkippedCell>,
    pub summary: Summary,
}

impl StudyReport {
    pub fn has_failures(&self) -> bool {
        self.records.iter().any(StudyRecord::has_failure)
    }

    pub fn record(&self, n: usize, eps: f64) -> Option<&StudyRecord> {
        self.records.iter().find(|r| r.n == n && r.eps == eps)
    }
}

pub fn observed_rate(coarse_error: f64, fine_error: f64) -> f64 {
    (coarse_error / fine_error).log2()
}

fn build_mesh(cfg: &StudyConfig, params: &MeshParams, beta: f64) -> Result<LayerMesh> {
    match cfg.mesh_kind {
        MeshKind::Vb => generate_vb_mesh(params),
        MeshKind::Shishkin => generate_shishkin_mesh(params, cfg.sigma, beta),
    }
}

/// Solves the system along the requested path(s). Returns the solution used
/// for the error and whether the two paths agreed.
fn solve_paths(
    raw: &DiscreteSystem<'_>,
    scaled: Option<&DiscreteSystem<'_>>,
    mode: PreconditionMode,
) -> Result<(Vec<f64>, bool)> {
    let solve = |s: &DiscreteSystem<'_>| thomas_solve(&s.matrix, &s.rhs).map(|r| r.solution);
    let scaled_solve = || match scaled {
        Some(s) => solve(s),
        None => Err(Error::NotBakhvalov),
    };
    match mode {
        PreconditionMode::Off => Ok((solve(raw)?, true)),
        PreconditionMode::On => Ok((scaled_solve()?, true)),
        PreconditionMode::Both => {
            let u_raw = solve(raw)?;
            let u_pre = scaled_solve()?;
            let diff = u_raw
                .iter()
                .zip(&u_pre)
                .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
            let agree = diff <= PATH_AGREEMENT_RTOL * max_norm(&u_raw);
            Ok((u_pre, agree))
        }
    }
}

/// Solution on a mesh along the configured path.
fn solve_on(problem: &TestProblem, mesh: &LayerMesh, mode: PreconditionMode) -> Result<Vec<f64>> {
    let raw = assemble_upwind(problem, &mesh.mesh, mesh.epsilon());
    let scaled = apply_preconditioner(&build_preconditioner(mesh), &raw)?;
    Ok(solve_paths(&raw, Some(&scaled), mode)?.0)
}

/// `max_i |U^N_i - U^{2N}_{2i}|`, after checking that every coarse point
/// reappears as every other fine point.
pub fn double_mesh_difference(
    coarse_points: &[f64],
    coarse: &[f64],
    fine_points: &[f64],
    fine: &[f64],
) -> Result<f64> {
    let n = coarse_points.len() - 1;
    if fine_points.len() != 2 * n + 1 || coarse.len() != n + 1 || fine.len() != 2 * n + 1 {
        return Err(Error::DimensionMismatch {
            expected: 2 * n + 1,
            found: fine_points.len(),
        });
    }
    let mut diff: f64 = 0.0;
    for i in 0..=n {
        let (x, y) = (coarse_points[i], fine_points[2 * i]);
        if (x - y).abs() > 1e-12 * x.abs().max(y.abs()) + 1e-15 {
            return Err(Error::NonNestedMeshes { index: i });
        }
        diff = diff.max((coarse[i] - fine[2 * i]).abs());
    }
    Ok(diff)
}

/// Double-mesh error estimate for `coarse` against `fine` (with `2N`
/// intervals), solving both along `mode`.
pub fn double_mesh_error(
    problem: &TestProblem,
    coarse: &LayerMesh,
    fine: &LayerMesh,
    mode: PreconditionMode,
) -> Result<f64> {
    let u_coarse = solve_on(problem, coarse, mode)?;
    let u_fine = solve_on(problem, fine, mode)?;
    double_mesh_difference(coarse.mesh.points(), &u_coarse, fine.mesh.points(), &u_fine)
}

fn run_cell(cfg: &StudyConfig, problem: &TestProblem, params: MeshParams) -> StudyRecord {
    let (n, eps) = (params.n, params.epsilon);
    let mut rec = StudyRecord::empty(n, eps);
    let beta = problem.beta;
    let mesh = match build_mesh(cfg, &params, beta) {
        Ok(m) => m,
        Err(e) => {
            warn!("N={n} eps={eps:e}: mesh generation failed: {e}");
            rec.flag(Flag::SolveFailed);
            return rec;
        }
    };
    let raw = assemble_upwind(problem, &mesh.mesh, eps);
    let pc = build_preconditioner(&mesh);
    let scaled = match apply_preconditioner(&pc, &raw) {
        Ok(s) => Some(s),
        Err(e) => {
            warn!("N={n} eps={eps:e}: {e}");
            rec.flag(Flag::EntryMismatch);
            None
        }
    };

    if !raw.matrix.is_l_matrix() || scaled.as_ref().is_some_and(|s| !s.matrix.is_l_matrix()) {
        rec.flag(Flag::LMatrix);
    }

    // Uniform stability of the unscaled matrix with w_i = 2 - x_i.
    let floor = 1.0_f64.min(beta);
    let w = MeshVector::with_increments(
        raw.mesh.points().iter().map(|x| 2.0 - x).collect(),
        raw.mesh.steps().iter().map(|h| -h).collect(),
    )
    .expect("one increment per interval");
    match m_criterion_check(&raw.matrix, &w) {
        Ok(mc) => {
            rec.m_gamma = Some(mc.gamma);
            if mc.gamma < floor - INEQUALITY_SLACK {
                rec.flag(Flag::MCriterion);
            }
            match inverse_inf_norm_inverse_positive(&raw.matrix) {
                Ok(inv) => {
                    rec.raw_inv_norm = Some(inv);
                    rec.kappa_raw = Some(inv * inf_norm_matrix(&raw.matrix));
                    if inv > 2.0 / floor + INEQUALITY_SLACK {
                        rec.flag(Flag::Stability);
                    }
                    if mc.certifies() && inv > mc.bound * (1.0 + INEQUALITY_SLACK) {
                        rec.flag(Flag::InverseBound);
                    }
                }
                Err(_) => rec.flag(Flag::Stability),
            }
        }
        Err(_) => rec.flag(Flag::MCriterion),
    }

    if let Some(s) = &scaled {
        match inverse_inf_norm_inverse_positive(&s.matrix) {
            Ok(inv) => {
                rec.inv_norm = Some(inv);
                rec.kappa_precond = Some(inv * inf_norm_matrix(&s.matrix));
            }
            Err(_) => rec.flag(Flag::Stability),
        }
    }

    if mesh.is_bakhvalov() {
        match lemma1_quantities(&mesh) {
            Ok(g) => {
                rec.lemma1_max = Some(g.max_ratio());
                if !g.holds(INEQUALITY_SLACK) {
                    rec.flag(Flag::Grading);
                }
            }
            Err(Error::DegenerateMesh { .. }) => rec.flag(Flag::Degenerate),
            Err(_) => rec.flag(Flag::Grading),
        }
    }

    let a = params.a;
    match build_barrier(problem, &mesh, &pc, cfg.barrier_constants(a, beta)) {
        Ok(cert) => {
            rec.min_sigma = Some(cert.min_sigma);
            if !cert.small_eps {
                rec.flag(Flag::NotCertified);
            } else if !(cert.sigma_ok() && cert.positivity_ok()) {
                rec.flag(Flag::Barrier);
            }
            if let (Some(s), Some(inv)) = (&scaled, rec.inv_norm) {
                if let Ok(mc) = m_criterion_check(&s.matrix, &cert.v) {
                    if mc.certifies() && inv > mc.bound * (1.0 + INEQUALITY_SLACK) {
                        rec.flag(Flag::InverseBound);
                    }
                }
            }
        }
        Err(Error::NotBakhvalov | Error::NonPositiveDelta { .. }) => rec.flag(Flag::NoBarrier),
        Err(e) => {
            debug!("N={n} eps={eps:e}: barrier: {e}");
            rec.flag(Flag::Barrier);
        }
    }

    let solution = match solve_paths(&raw, scaled.as_ref(), cfg.precondition) {
        Ok((u, agree)) => {
            if !agree {
                rec.flag(Flag::PathMismatch);
            }
            Some(u)
        }
        Err(e) => {
            warn!("N={n} eps={eps:e}: solve failed: {e}");
            rec.flag(Flag::SolveFailed);
            None
        }
    };

    if let Some(u) = solution {
        let error = match cfg.error_method {
            ErrorMethod::Exact => problem.exact.as_ref().map(|exact| {
                mesh.mesh
                    .points()
                    .iter()
                    .zip(&u)
                    .fold(0.0, |m: f64, (&x, &v)| m.max((v - exact(x, eps)).abs()))
            }),
            ErrorMethod::DoubleMesh => {
                let fine = MeshParams { n: 2 * n, ..params };
                build_mesh(cfg, &fine, beta)
                    .and_then(|fine_mesh| {
                        let u_fine = solve_on(problem, &fine_mesh, cfg.precondition)?;
                        double_mesh_difference(
                            mesh.mesh.points(),
                            &u,
                            fine_mesh.mesh.points(),
                            &u_fine,
                        )
                    })
                    .map_err(|e| warn!("N={n} eps={eps:e}: double-mesh: {e}"))
                    .ok()
            }
        };
        if error.is_none() {
            rec.flag(Flag::ErrorFailed);
        }
        rec.error = error;
    }
    rec.flags.sort();
    rec
}

fn summarize(cfg: &StudyConfig, records: &[StudyRecord]) -> Summary {
    let lookup = |n: usize, eps: f64| records.iter().find(|r| r.n == n && r.eps == eps);
    let table = |field: fn(&StudyRecord) -> Option<f64>| -> Vec<Vec<Option<f64>>> {
        cfg.eps_values
            .iter()
            .map(|&e| {
                cfg.n_values
                    .iter()
                    .map(|&n| lookup(n, e).and_then(field))
                    .collect()
            })
            .collect()
    };
    let errors = table(|r| r.error);
    let rates = table(|r| r.rate);
    let uniform_error: Vec<Option<f64>> = (0..cfg.n_values.len())
        .map(|k| {
            errors
                .iter()
                .filter_map(|row| row[k])
                .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.max(e))))
        })
        .collect();
    let uniform_rate = (0..cfg.n_values.len())
        .map(|k| {
            if k == 0 || cfg.n_values[k] != 2 * cfg.n_values[k - 1] {
                return None;
            }
            match (uniform_error[k - 1], uniform_error[k]) {
                (Some(c), Some(f)) => Some(observed_rate(c, f)),
                _ => None,
            }
        })
        .collect();
    Summary {
        n_values: cfg.n_values.clone(),
        eps_values: cfg.eps_values.clone(),
        errors,
        rates,
        uniform_error,
        uniform_rate,
    }
}

pub fn run_convergence_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let problem = cfg.resolve_problem()?;
    if cfg.error_method == ErrorMethod::Exact && problem.exact.is_none() {
        return Err(Error::InvalidProblem(format!(
            "problem `{}` has no exact solution; use the double-mesh error",
            problem.name
        )));
    }
    let a = cfg.grading(problem.beta);
    let constants = cfg.barrier_constants(a, problem.beta);

    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for &n in &cfg.n_values {
        for &eps in &cfg.eps_values {
            match MeshParams::new(a, cfg.q, n, eps) {
                Ok(p) => cells.push(p),
                Err(e) => {
                    warn!("skipping N={n} eps={eps:e}: {e}");
                    skipped.push(SkippedCell {
                        n,
                        eps,
                        reason: format!("inadmissible: {e}"),
                    });
                }
            }
        }
    }

    // Cells are independent; collect() keeps the (N, eps) order.
    let mut records: Vec<StudyRecord> = cells
        .par_iter()
        .map(|&p| run_cell(cfg, &problem, p))
        .collect();

    let errors: Vec<(usize, f64, Option<f64>)> =
        records.iter().map(|r| (r.n, r.eps, r.error)).collect();
    for r in &mut records {
        let coarse = errors
            .iter()
            .find(|(n, e, _)| *n == r.n / 2 && *e == r.eps)
            .and_then(|c| c.2);
        if let (Some(c), Some(f)) = (coarse, r.error) {
            r.rate = Some(observed_rate(c, f));
        }
    }

    let summary = summarize(cfg, &records);
    Ok(StudyReport {
        provenance: Provenance {
            problem: problem.name.clone(),
            beta: problem.beta,
            mesh: cfg.mesh_kind,
            a,
            q: cfg.q,
            sigma: cfg.sigma,
            precondition: cfg.precondition,
            error_method: cfg.error_method,
            c_shift: constants.c_shift,
            c_decay: constants.c_decay,
            n_values: cfg.n_values.clone(),
            eps_values: cfg.eps_values.clone(),
            version: env!("CARGO_PKG_VERSION"),
        },
        records,
        skipped,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> StudyConfig {
        StudyConfig {
            n_values: vec![32, 64, 128],
            eps_values: vec![1.0, 1e-3, 1e-7],
            ..StudyConfig::default()
        }
    }

    #[test]
    fn inadmissible_cells_are_skipped() {
        let r = run_convergence_study(&small_cfg()).unwrap();
        assert_eq!(r.skipped.len(), 3);
        assert!(r.skipped.iter().all(|s| s.eps == 1.0));
        assert_eq!(r.records.len(), 6);
    }

    #[test]
    fn rates_live_on_finer_rows() {
        let r = run_convergence_study(&small_cfg()).unwrap();
        assert!(r.record(32, 1e-3).unwrap().rate.is_none());
        let rate = r.record(64, 1e-3).unwrap().rate.unwrap();
        let (e32, e64) = (
            r.record(32, 1e-3).unwrap().error.unwrap(),
            r.record(64, 1e-3).unwrap().error.unwrap(),
        );
        assert_eq!(rate, (e32 / e64).log2());
        assert!(!r.has_failures(), "{:?}", r.records);
    }

    #[test]
    fn exact_error_needs_exact_solution() {
        let cfg = StudyConfig {
            problem: "layer-variable".into(),
            ..small_cfg()
        };
        assert!(matches!(
            run_convergence_study(&cfg),
            Err(Error::InvalidProblem(_))
        ));
    }

    #[test]
    fn identical_solutions_have_zero_double_mesh_difference() {
        let coarse = [0.0, 0.5, 1.0];
        let fine = [0.0, 0.25, 0.5, 0.75, 1.0];
        let d =
            double_mesh_difference(&coarse, &[0.0, 1.0, 0.0], &fine, &[0.0, 9.0, 1.0, 9.0, 0.0])
                .unwrap();
        assert_eq!(d, 0.0);
        let bad = [0.0, 0.25, 0.6, 0.75, 1.0];
        assert!(matches!(
            double_mesh_difference(&coarse, &[0.0; 3], &bad, &[0.0; 5]),
            Err(Error::NonNestedMeshes { index: 1 })
        ));
    }

    #[test]
    fn shishkin_meshes_are_not_nested() {
        let p = crate::problem::builtin_layer_problem();
        let c = generate_shishkin_mesh(&MeshParams::new(5.0, 0.5, 64, 1e-6).unwrap(), 2.0, 1.0)
            .unwrap();
        let f = generate_shishkin_mesh(&MeshParams::new(5.0, 0.5, 128, 1e-6).unwrap(), 2.0, 1.0)
            .unwrap();
        assert!(matches!(
            double_mesh_error(&p, &c, &f, PreconditionMode::On),
            Err(Error::NonNestedMeshes { .. })
        ));
    }
}
