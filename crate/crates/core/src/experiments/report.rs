//! CSV, markdown and JSON renderings of a [`StudyReport`].

use std::fmt::Write as _;
use std::path::Path;

use super::config::OutputFormat;
use super::StudyReport;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "N,eps,error,rate,kappa_raw,kappa_precond,inv_norm,min_sigma,lemma1_max,flags";

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn short(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into())
}

pub fn render_csv(r: &StudyReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for rec in &r.records {
        let flags: Vec<&str> = rec.flags.iter().map(|f| f.as_str()).collect();
        let _ = writeln!(
            out,
            "{},{:e},{},{},{},{},{},{},{},{}",
            rec.n,
            rec.eps,
            cell(rec.error),
            cell(rec.rate),
            cell(rec.kappa_raw),
            cell(rec.kappa_precond),
            cell(rec.inv_norm),
            cell(rec.min_sigma),
            cell(rec.lemma1_max),
            flags.join(";")
        );
    }
    out
}

pub fn render_markdown(r: &StudyReport) -> String {
    let p = &r.provenance;
    let s = &r.summary;
    let mut out = String::new();
    let _ = writeln!(out, "# Convergence study: `{}`\n", p.problem);
    let _ = writeln!(
        out,
        "mesh = {}, a = {}, q = {}, sigma = {}, beta = {}, precondition = {}, error = {}, \
         c_shift = {}, c_decay = {}, version {}\n",
        p.mesh,
        p.a,
        p.q,
        p.sigma,
        p.beta,
        p.precondition,
        p.error_method,
        p.c_shift,
        p.c_decay,
        p.version
    );

    out.push_str("## Maximum-norm error (observed rate)\n\n| eps |");
    for n in &s.n_values {
        let _ = write!(out, " N = {n} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(s.n_values.len()));
    out.push('\n');
    for (k, eps) in s.eps_values.iter().enumerate() {
        let _ = write!(out, "| {eps:e} |");
        for (e, rate) in s.errors[k].iter().zip(&s.rates[k]) {
            match rate {
                Some(rt) => {
                    let _ = write!(out, " {} ({rt:.2}) |", short(*e));
                }
                None => {
                    let _ = write!(out, " {} |", short(*e));
                }
            }
        }
        out.push('\n');
    }
    out.push_str("| **max over eps** |");
    for (e, rate) in s.uniform_error.iter().zip(&s.uniform_rate) {
        match rate {
            Some(rt) => {
                let _ = write!(out, " {} ({rt:.2}) |", short(*e));
            }
            None => {
                let _ = write!(out, " {} |", short(*e));
            }
        }
    }
    out.push_str("\n\n## Conditioning\n\n");
    out.push_str("| N | eps | kappa_raw * eps / N^2 | kappa_precond / N^2 | inv_norm | min_sigma | flags |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    for rec in &r.records {
        let n2 = (rec.n * rec.n) as f64;
        let flags: Vec<&str> = rec.flags.iter().map(|f| f.as_str()).collect();
        let _ = writeln!(
            out,
            "| {} | {:e} | {} | {} | {} | {} | {} |",
            rec.n,
            rec.eps,
            short(rec.kappa_raw.map(|k| k * rec.eps / n2)),
            short(rec.kappa_precond.map(|k| k / n2)),
            short(rec.inv_norm),
            short(rec.min_sigma),
            flags.join(" ")
        );
    }
    if !r.skipped.is_empty() {
        out.push_str("\n## Skipped cells\n\n");
        for c in &r.skipped {
            let _ = writeln!(out, "- N = {}, eps = {:e}: {}", c.n, c.eps, c.reason);
        }
    }
    out
}

pub fn render_report(r: &StudyReport, format: OutputFormat) -> Result<String> {
    if r.records.is_empty() {
        return Err(Error::EmptyReport);
    }
    Ok(match format {
        OutputFormat::Csv => render_csv(r),
        OutputFormat::Md => render_markdown(r),
        OutputFormat::Json => serde_json::to_string_pretty(r)? + "\n",
    })
}

pub fn emit_report(r: &StudyReport, format: OutputFormat, path: &Path) -> Result<()> {
    let text = render_report(r, format)?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
