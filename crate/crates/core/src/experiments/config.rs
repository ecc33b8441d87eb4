//! Study configuration and its `key = value` file format.
//!
//! ```text
//! # comment
//! n-list = 64, 128, 256
//! eps-list = 1e-2, 1e-6
//! problem = custom
//! b = poly 1 0 1
//! beta = 1
//! ```
//!
//! Keys are the long CLI flag names, so one setting path serves both.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{default_grading, DEFAULT_Q};
use crate::precondition::BarrierConstants;
use crate::problem::{problem_by_name, Coefficient, TestProblem};

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $word:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
        pub enum $name { $(#[serde(rename = $word)] $variant),+ }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($word => Ok($name::$variant),)+
                    other => Err(format!(
                        "`{}` is not one of: {}", other, [$($word),+].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($name::$variant => $word),+ })
            }
        }
    };
}

keyword_enum!(MeshKind { Vb => "vb", Shishkin => "shishkin" });
keyword_enum!(PreconditionMode { On => "on", Off => "off", Both => "both" });
keyword_enum!(ErrorMethod { Exact => "exact", DoubleMesh => "double-mesh" });
keyword_enum!(OutputFormat { Csv => "csv", Md => "md", Json => "json" });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n_values: Vec<usize>,
    pub eps_values: Vec<f64>,
    pub mesh_kind: MeshKind,
    /// Grading strength; `4/beta + 1` when unset.
    pub a: Option<f64>,
    pub q: f64,
    /// Shishkin transition constant.
    pub sigma: f64,
    /// A built-in problem name or `custom`.
    pub problem: String,
    /// Coefficient presets of the custom problem.
    pub custom_b: String,
    pub custom_c: String,
    pub custom_f: String,
    pub custom_beta: f64,
    pub precondition: PreconditionMode,
    pub error_method: ErrorMethod,
    pub c_shift: Option<f64>,
    pub c_decay: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_values: (6..=13).map(|k| 1usize << k).collect(),
            eps_values: vec![1.0, 1e-2, 1e-4, 1e-6, 1e-8, 1e-10],
            mesh_kind: MeshKind::Vb,
            a: None,
            q: DEFAULT_Q,
            sigma: 2.0,
            problem: "layer-constant".into(),
            custom_b: "const 1".into(),
            custom_c: "const 0".into(),
            custom_f: "const 1".into(),
            custom_beta: 1.0,
            precondition: PreconditionMode::Both,
            error_method: ErrorMethod::Exact,
            c_shift: None,
            c_decay: None,
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|w| !w.is_empty())
        .map(|w| w.parse::<T>().map_err(|_| format!("bad list entry `{w}`")))
        .collect()
}

fn parse_num(value: &str) -> std::result::Result<f64, String> {
    value
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))
}

impl StudyConfig {
    /// Applies one `key = value` setting.
    pub fn apply_setting(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        match key {
            "n-list" => self.n_values = parse_list(value)?,
            "eps-list" => self.eps_values = parse_list(value)?,
            "mesh" => self.mesh_kind = value.parse()?,
            "a" => self.a = Some(parse_num(value)?),
            "q" => self.q = parse_num(value)?,
            "sigma" => self.sigma = parse_num(value)?,
            "problem" => self.problem = value.to_string(),
            "b" => self.custom_b = value.to_string(),
            "c" => self.custom_c = value.to_string(),
            "f" => self.custom_f = value.to_string(),
            "beta" => self.custom_beta = parse_num(value)?,
            "precondition" => self.precondition = value.parse()?,
            "error" => self.error_method = value.parse()?,
            "c-shift" => self.c_shift = Some(parse_num(value)?),
            "c-decay" => self.c_decay = Some(parse_num(value)?),
            "out" => self.output = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Applies every setting of a config file's text.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            self.apply_setting(key.trim(), value)
                .map_err(|message| Error::Config { line, message })?;
        }
        Ok(())
    }

    pub fn apply_config_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_config_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Error::Config { line: 0, message };
        if self.n_values.is_empty() || self.eps_values.is_empty() {
            return Err(bad("n-list and eps-list must be non-empty".into()));
        }
        if self.n_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("n-list must be strictly increasing".into()));
        }
        if let Some(n) = self.n_values.iter().find(|&&n| n < 4 || n % 2 != 0) {
            return Err(bad(format!("N = {n} must be even and at least 4")));
        }
        if let Some(e) = self
            .eps_values
            .iter()
            .find(|&&e| !(e > 0.0 && e.is_finite()))
        {
            return Err(bad(format!("eps = {e} must be positive")));
        }
        Ok(())
    }

    pub fn resolve_problem(&self) -> Result<TestProblem> {
        if self.problem == "custom" {
            TestProblem::new(
                "custom",
                self.custom_b.parse::<Coefficient>()?,
                self.custom_c.parse::<Coefficient>()?,
                self.custom_f.parse::<Coefficient>()?,
                self.custom_beta,
            )
        } else {
            problem_by_name(&self.problem)
        }
    }

    pub fn grading(&self, beta: f64) -> f64 {
        self.a.unwrap_or_else(|| default_grading(beta))
    }

    pub fn barrier_constants(&self, a: f64, beta: f64) -> BarrierConstants {
        let d = BarrierConstants::defaults(a, self.q, beta);
        BarrierConstants {
            c_shift: self.c_shift.unwrap_or(d.c_shift),
            c_decay: self.c_decay.unwrap_or(d.c_decay),
        }
    }
}
