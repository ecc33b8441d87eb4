use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use vbmesh_core::experiments::{
    render_report, run_convergence_study, MeshKind, OutputFormat, StudyConfig,
};
use vbmesh_core::mesh::default_grading;
use vbmesh_core::{
    apply_preconditioner, assemble_upwind, build_preconditioner, check_stability,
    generate_shishkin_mesh, generate_vb_mesh, problem_by_name, validate_problem, BarrierConstants,
    Error, LayerMesh, MeshParams, TestProblem,
};

/// Exit status when a sweep or certificate check fails.
const CHECK_FAILED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "vbmesh",
    version,
    about = "Upwind convection-diffusion on a Bakhvalov-type mesh"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)] // parsed once
enum Command {
    /// Run an (N, eps) sweep and write the report.
    Study(StudyArgs),
    /// Check the barrier certificate of the preconditioned matrix.
    Certify(CertifyArgs),
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
    /// Discrete system utilities.
    System {
        #[command(subcommand)]
        action: SystemAction,
    },
}

#[derive(Subcommand)]
enum MeshAction {
    /// Write mesh points and steps.
    Dump(MeshDumpArgs),
}

#[derive(Subcommand)]
enum SystemAction {
    /// Write the three diagonals and the right-hand side as CSV.
    Dump(SystemDumpArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// `key = value` file with the same names as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated N values.
    #[arg(long)]
    n_list: Option<String>,
    /// Comma-separated eps values.
    #[arg(long)]
    eps_list: Option<String>,
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    problem: Option<String>,
    /// on | off | both
    #[arg(long)]
    precondition: Option<String>,
    /// exact | double-mesh
    #[arg(long)]
    error: Option<String>,
    /// vb | shishkin
    #[arg(long)]
    mesh: Option<String>,
    #[arg(long)]
    c_shift: Option<String>,
    #[arg(long)]
    c_decay: Option<String>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// csv | md | json
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct MeshArgs {
    /// Grading strength (default 4/beta + 1).
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    n: usize,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    #[arg(long, default_value = "layer-constant")]
    problem: String,
    #[arg(long)]
    c_shift: Option<f64>,
    #[arg(long)]
    c_decay: Option<f64>,
    /// Also write the JSON record to this file.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct MeshDumpArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    #[arg(long, default_value = "vb")]
    kind: MeshKind,
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// csv | json
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SystemDumpArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    #[arg(long, default_value = "layer-constant")]
    problem: String,
    #[arg(long, default_value = "vb")]
    kind: MeshKind,
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    /// on | off
    #[arg(long, default_value = "off")]
    precondition: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_problem(name: &str) -> Result<TestProblem> {
    let p = problem_by_name(name)?;
    let report = validate_problem(&p, 1000);
    if !report.is_admissible() {
        bail!(
            "problem `{name}` is not admissible: {:?}",
            report.violations
        );
    }
    Ok(p)
}

fn layer_mesh(args: &MeshArgs, kind: MeshKind, sigma: f64, beta: f64) -> Result<LayerMesh> {
    let a = args.a.unwrap_or_else(|| default_grading(beta));
    let params = MeshParams::new(a, args.q, args.n, args.eps)?;
    Ok(match kind {
        MeshKind::Vb => generate_vb_mesh(&params)?,
        MeshKind::Shishkin => generate_shishkin_mesh(&params, sigma, beta)?,
    })
}

fn study(args: StudyArgs) -> Result<ExitCode> {
    let mut cfg = StudyConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_config_file(path)?;
    }
    let flags = [
        ("n-list", &args.n_list),
        ("eps-list", &args.eps_list),
        ("a", &args.a),
        ("q", &args.q),
        ("sigma", &args.sigma),
        ("problem", &args.problem),
        ("precondition", &args.precondition),
        ("error", &args.error),
        ("mesh", &args.mesh),
        ("c-shift", &args.c_shift),
        ("c-decay", &args.c_decay),
        ("out", &args.out),
        ("format", &args.format),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.apply_setting(key, v)
                .map_err(|m| anyhow::anyhow!("--{key}: {m}"))?;
        }
    }
    let report = run_convergence_study(&cfg)?;
    let text = render_report(&report, cfg.format)?;
    write_output(cfg.output.as_deref(), &text)?;
    for r in report.records.iter().filter(|r| r.has_failure()) {
        let flags: Vec<&str> = r.flags.iter().map(|f| f.as_str()).collect();
        eprintln!(
            "check failed at N={} eps={:e}: {}",
            r.n,
            r.eps,
            flags.join(" ")
        );
    }
    Ok(if report.has_failures() {
        ExitCode::from(CHECK_FAILED)
    } else {
        ExitCode::SUCCESS
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn certify(args: CertifyArgs) -> Result<ExitCode> {
    let problem = load_problem(&args.problem)?;
    let mesh = layer_mesh(&args.mesh, MeshKind::Vb, 0.0, problem.beta)?;
    let params = *mesh.params().expect("graded mesh");
    let defaults = BarrierConstants::defaults(params.a, params.q, problem.beta);
    let constants = BarrierConstants {
        c_shift: args.c_shift.unwrap_or(defaults.c_shift),
        c_decay: args.c_decay.unwrap_or(defaults.c_decay),
    };

    let mut text = String::new();
    writeln!(
        text,
        "a = {}, q = {}, eps = {:e}, N = {}",
        params.a, params.q, params.epsilon, params.n
    )?;
    writeln!(
        text,
        "c_shift = {}, c_decay = {}",
        constants.c_shift, constants.c_decay
    )?;
    let mut record = json!({
        "a": params.a,
        "q": params.q,
        "eps": params.epsilon,
        "n": params.n,
        "c_shift": constants.c_shift,
        "c_decay": constants.c_decay,
    });

    let check = match check_stability(&problem, &mesh, constants) {
        Ok(check) => check,
        // The certificate itself cannot be formed: a failed check, not a usage error.
        Err(e @ (Error::NonPositiveBarrier { .. } | Error::NonPositiveDelta { .. })) => {
            writeln!(
                text,
                "{:<32} {}  ({e})",
                "barrier constructible",
                verdict(false)
            )?;
            record["reason"] = json!(e.to_string());
            record["pass"] = json!(false);
            return finish_certify(text, &record, args.json.as_deref(), false);
        }
        Err(e) => return Err(e.into()),
    };
    let cert = &check.certificate;
    let conditions = [
        ("eps small enough", cert.small_eps),
        ("v_i >= delta", cert.positivity_ok()),
        ("sigma_i >= delta", cert.sigma_ok()),
        (
            "inverse norm <= ||v|| / gamma",
            check.inverse_norm <= check.criterion_bound * (1.0 + 1e-12),
        ),
        (
            "inverse norm <= max v / delta",
            check.inverse_norm <= cert.implied_bound() * (1.0 + 1e-12),
        ),
    ];

    writeln!(text, "delta             = {:.6e}", cert.delta)?;
    writeln!(text, "min sigma         = {:.6e}", cert.min_sigma)?;
    writeln!(
        text,
        "min v, max v      = {:.6e}, {:.6e}",
        cert.min_v, cert.max_v
    )?;
    writeln!(text, "||(MA)^-1||_inf   = {:.6e}", check.inverse_norm)?;
    writeln!(text, "M-criterion bound = {:.6e}", check.criterion_bound)?;
    for (name, ok) in conditions {
        writeln!(text, "{:<32} {}", name, verdict(ok))?;
    }
    let all_ok = conditions.iter().all(|c| c.1);
    for (key, value) in [
        ("delta", cert.delta),
        ("min_sigma", cert.min_sigma),
        ("min_v", cert.min_v),
        ("max_v", cert.max_v),
        ("inverse_norm", check.inverse_norm),
        ("criterion_bound", check.criterion_bound),
    ] {
        record[key] = json!(value);
    }
    record["conditions"] = conditions
        .iter()
        .map(|(n, ok)| json!({"name": n, "pass": ok}))
        .collect();
    record["pass"] = json!(all_ok);
    finish_certify(text, &record, args.json.as_deref(), all_ok)
}

/// Prints the report followed by the one-line JSON record.
fn finish_certify(
    mut text: String,
    record: &serde_json::Value,
    json_path: Option<&Path>,
    pass: bool,
) -> Result<ExitCode> {
    writeln!(text, "{record}")?;
    print!("{text}");
    if let Some(path) = json_path {
        std::fs::write(path, serde_json::to_string_pretty(record)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(CHECK_FAILED)
    })
}

fn mesh_dump(args: MeshDumpArgs) -> Result<ExitCode> {
    let mesh = layer_mesh(&args.mesh, args.kind, args.sigma, args.beta)?;
    let n = mesh.n();
    let t: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let text = match args.format {
        OutputFormat::Csv => {
            let mut s = String::from("i,t_i,x_i,h_i\n");
            for (i, ti) in t.iter().enumerate() {
                let h = if i == 0 {
                    String::new()
                } else {
                    format!("{:e}", mesh.mesh.h(i))
                };
                writeln!(s, "{},{:e},{:e},{}", i, ti, mesh.mesh.x(i), h)?;
            }
            s
        }
        OutputFormat::Json => {
            let v = json!({
                "grading": mesh.grading,
                "alpha": mesh.alpha(),
                "zeta": mesh.zeta(),
                "j_index": mesh.j_index,
                "h_coarse": mesh.h_coarse,
                "transition": mesh.transition,
                "t": t,
                "points": mesh.mesh.points(),
                "steps": mesh.mesh.steps(),
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
        OutputFormat::Md => bail!("mesh dump supports csv and json"),
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn system_dump(args: SystemDumpArgs) -> Result<ExitCode> {
    let problem = load_problem(&args.problem)?;
    let mesh = layer_mesh(&args.mesh, args.kind, args.sigma, problem.beta)?;
    let raw = assemble_upwind(&problem, &mesh.mesh, mesh.epsilon());
    let system = match args.precondition.as_str() {
        "off" => raw,
        "on" => apply_preconditioner(&build_preconditioner(&mesh), &raw)?,
        other => bail!("--precondition must be on or off, got `{other}`"),
    };
    let mut s = String::from("i,lower,diag,upper,rhs\n");
    for i in 0..system.matrix.dim() {
        let (l, d, u) = system.matrix.row(i);
        writeln!(s, "{},{:e},{:e},{:e},{:e}", i, l, d, u, system.rhs[i])?;
    }
    write_output(args.out.as_deref(), &s)?;
    Ok(ExitCode::SUCCESS)
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Study(a) => study(a),
        Command::Certify(a) => certify(a),
        Command::Mesh {
            action: MeshAction::Dump(a),
        } => mesh_dump(a),
        Command::System {
            action: SystemAction::Dump(a),
        } => system_dump(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
