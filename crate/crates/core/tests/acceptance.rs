//! Acceptance criteria. Each criterion prints one `PASS`/`FAIL` line; the
//! target exits non-zero if any criterion fails. It runs without the libtest
//! harness so the lines always appear in `cargo test` output.
//!
//! Run alone with `cargo test -p vbmesh-core --test acceptance`.

#![allow(clippy::needless_range_loop)] // dense elimination reads best indexed

use vbmesh_core::experiments::{
    run_convergence_study, ErrorMethod, MeshKind, PreconditionMode, StudyConfig,
};
use vbmesh_core::problem::layer_solution;
use vbmesh_core::*;

const A: f64 = 5.0;
const Q: f64 = 0.5;
const SLACK: f64 = 1e-12;
const EPS: [f64; 5] = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10];

fn n_values() -> Vec<usize> {
    (6..=12).map(|k| 1usize << k).collect()
}

fn vb(n: usize, eps: f64) -> LayerMesh {
    generate_vb_mesh(&MeshParams::new(A, Q, n, eps).unwrap()).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Outcome of one criterion: pass flag and a one-line explanation.
type Outcome = (bool, String);
type Criterion = fn() -> Outcome;

fn sweep_config() -> StudyConfig {
    StudyConfig {
        n_values: n_values(),
        eps_values: EPS.to_vec(),
        mesh_kind: MeshKind::Vb,
        a: Some(A),
        q: Q,
        precondition: PreconditionMode::Both,
        error_method: ErrorMethod::Exact,
        ..StudyConfig::default()
    }
}

fn criterion_1_rates() -> Outcome {
    let report = run_convergence_study(&sweep_config()).unwrap();
    let mut worst = (f64::INFINITY, f64::NEG_INFINITY);
    for &eps in &EPS {
        let rate = report
            .record(4096, eps)
            .and_then(|r| r.rate)
            .unwrap_or(f64::NAN);
        worst = (worst.0.min(rate), worst.1.max(rate));
    }
    let rates_ok = worst.0 >= 0.85 && worst.1 <= 1.15;
    let uniform = &report.summary.uniform_error;
    let ratio = uniform[0].unwrap() / uniform[uniform.len() - 1].unwrap();
    (
        rates_ok && ratio >= 32.0 && !report.has_failures(),
        format!(
            "rates at N=4096 in [{:.4}, {:.4}]; max_eps e(64)/max_eps e(4096) = {ratio:.2}",
            worst.0, worst.1
        ),
    )
}

fn criterion_2_conditioning() -> Outcome {
    let report = run_convergence_study(&StudyConfig {
        precondition: PreconditionMode::On,
        ..sweep_config()
    })
    .unwrap();
    let mut worst_spread = 0.0f64;
    let (mut raw_lo, mut raw_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for n in n_values() {
        let n2 = (n * n) as f64;
        let scaled: Vec<f64> = EPS
            .iter()
            .map(|&e| report.record(n, e).unwrap().kappa_precond.unwrap() / n2)
            .collect();
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        worst_spread = worst_spread.max(hi / lo);
        for &e in &EPS {
            let raw = report.record(n, e).unwrap().kappa_raw.unwrap() * e / n2;
            raw_lo = raw_lo.min(raw);
            raw_hi = raw_hi.max(raw);
        }
    }
    (
        worst_spread <= 10.0 && raw_lo >= 1e-2 && raw_hi <= 1e2,
        format!(
            "kappa(MA)/N^2 spread over eps <= {worst_spread:.3}; kappa(A)*eps/N^2 in [{raw_lo:.3e}, {raw_hi:.3e}]"
        ),
    )
}

fn criterion_3_m_criterion() -> Outcome {
    let p = builtin_layer_problem();
    let floor = p.beta.min(1.0);
    let (mut min_aw, mut max_inv) = (f64::INFINITY, 0.0f64);
    for n in n_values() {
        for &eps in &EPS {
            let m = vb(n, eps);
            let sys = assemble_upwind(&p, &m.mesh, eps);
            let w = MeshVector::with_increments(
                m.mesh.points().iter().map(|x| 2.0 - x).collect(),
                m.mesh.steps().iter().map(|h| -h).collect(),
            )
            .unwrap();
            let aw = sys.matrix.apply(&w);
            min_aw = min_aw.min(aw[1..n].iter().cloned().fold(f64::INFINITY, f64::min));
            max_inv = max_inv.max(inverse_inf_norm_inverse_positive(&sys.matrix).unwrap());
        }
    }
    (
        min_aw >= floor - SLACK && max_inv <= 2.0 / floor + SLACK,
        format!(
            "min (A w)_i = {min_aw:.15}; max ||A^-1|| = {max_inv:.15} (bound {})",
            2.0 / floor
        ),
    )
}

fn criterion_4_lemma1() -> Outcome {
    let (mut worst_ratio, mut worst_identity) = (0.0f64, 0.0f64);
    let mut ok = true;
    for n in n_values() {
        for &eps in &EPS {
            let m = vb(n, eps);
            let g = lemma1_quantities(&m).unwrap();
            ok &= g.holds(SLACK);
            worst_ratio = worst_ratio.max(g.max_ratio());
            for (k, gi) in g.g.iter().enumerate() {
                let t = (k + 1) as f64 / n as f64;
                worst_identity = worst_identity.max((gi - 2.0 * (1.0 - t / Q) / A).abs());
            }
        }
    }
    (
        ok && worst_identity <= 1e-10,
        format!("max quantity/bound = {worst_ratio:.6}; identity defect = {worst_identity:.3e}"),
    )
}

fn criterion_5_lemma2() -> Outcome {
    let p = builtin_layer_problem();
    let constants = BarrierConstants::defaults(A, Q, p.beta);
    let mut ok = true;
    let (mut min_sigma, mut delta, mut worst_spread) = (f64::INFINITY, 0.0, 0.0f64);
    let mut worst_bound_ratio = 0.0f64;
    for n in n_values() {
        let mut norms = Vec::new();
        for &eps in EPS.iter().filter(|&&e| e <= 1e-4) {
            let check = check_stability(&p, &vb(n, eps), constants).unwrap();
            let c = &check.certificate;
            delta = c.delta;
            min_sigma = min_sigma.min(c.min_sigma);
            ok &= (c.delta - 0.1).abs() < 1e-12 && c.min_sigma >= c.delta;
            ok &= check.inverse_norm <= c.max_v / c.delta;
            worst_bound_ratio = worst_bound_ratio.max(check.inverse_norm / (c.max_v / c.delta));
            norms.push(check.inverse_norm);
        }
        let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        worst_spread = worst_spread.max(hi / lo);
    }
    ok &= worst_spread < 5.0;
    (
        ok,
        format!(
            "delta = {delta:.3}, min sigma = {min_sigma:.4}; ||(MA)^-1|| / (max v/delta) <= {worst_bound_ratio:.4}; spread over eps = {worst_spread:.4}"
        ),
    )
}

/// Bounded means: growth slower than `N^0.1` over the last doubling, and
/// at most a factor 2 between any two `N`. The unscaled error must grow by
/// at least a factor 10 at each step `eps -> eps / 100`.
fn criterion_6_consistency() -> Outcome {
    let p = builtin_layer_problem();
    let (mut worst_exponent, mut worst_spread) = (f64::NEG_INFINITY, 0.0f64);
    let mut raw_grows = true;
    let mut prev_raw: Option<Vec<f64>> = None;
    for &eps in &EPS {
        let u = |x: f64| layer_solution(x, eps);
        let mut scaled = Vec::new();
        let mut raw = Vec::new();
        for n in n_values() {
            let m = vb(n, eps);
            let pc = build_preconditioner(&m);
            scaled.push(n as f64 * max_abs(&scaled_consistency(&p, &m.mesh, eps, &pc, u)));
            raw.push(n as f64 * max_abs(&consistency_error(&p, &m.mesh, eps, u)));
        }
        let k = scaled.len();
        worst_exponent = worst_exponent.max((scaled[k - 1] / scaled[k - 2]).log2());
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        worst_spread = worst_spread.max(hi / lo);
        if let Some(prev) = &prev_raw {
            raw_grows &= raw
                .iter()
                .zip(prev)
                .all(|(now, before)| now / before >= 10.0);
        }
        prev_raw = Some(raw);
    }
    (
        worst_exponent <= 0.1 && worst_spread <= 2.0 && raw_grows,
        format!(
            "N max|scaled tau|: last-doubling exponent <= {worst_exponent:.4}, spread over N <= {worst_spread:.4}; unscaled grows with 1/eps: {raw_grows}"
        ),
    )
}

/// Gaussian elimination with partial pivoting on the dense matrix.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

fn criterion_7_thomas() -> Outcome {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=50);
        let lower: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let off = if i > 0 { lower[i - 1].abs() } else { 0.0 }
                    + if i + 1 < n { upper[i].abs() } else { 0.0 };
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                sign * (off + rng.gen_range(0.1..2.0))
            })
            .collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = diag[i];
            if i > 0 {
                dense[i][i - 1] = lower[i - 1];
            }
            if i + 1 < n {
                dense[i][i + 1] = upper[i];
            }
        }
        let reference = dense_solve(dense, rhs.clone());
        let t = TridiagonalMatrix::from_diagonals(lower, diag, upper).unwrap();
        let x = thomas_solve(&t, &rhs).unwrap().solution;
        let diff = x
            .iter()
            .zip(&reference)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>();
        worst = worst.max(max_abs(&diff) / max_abs(&reference));
    }
    (
        worst <= 1e-12,
        format!("max relative difference = {worst:.3e}"),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 7] = [
        ("1 uniform first-order convergence", criterion_1_rates),
        ("2 conditioning", criterion_2_conditioning),
        ("3 M-criterion barrier", criterion_3_m_criterion),
        ("4 Lemma 1 grading bounds", criterion_4_lemma1),
        ("5 Lemma 2 barrier certificate", criterion_5_lemma2),
        ("6 scaled consistency", criterion_6_consistency),
        ("7 Thomas vs dense elimination", criterion_7_thomas),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let (ok, detail) = run();
        println!(
            "{} criterion {name}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
