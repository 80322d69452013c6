//! Run configuration read from TOML.
//!
//! ```toml
//! [problem]
//! alpha = 0.6
//! beta = 0.5
//! A = [-0.8]            # row-major
//! xi0 = [1.0]
//! u = "0.5"
//! H = ["x1"]
//! ell = "1"
//! horizon = 1.0
//!
//! [mesh]
//! N = 256
//! r = 2.0               # optional
//!
//! [solver]
//! tol = 1e-10
//! max_iter = 200
//!
//! [stability]
//! regime = "uh-finite"  # uh-infinite, uhr-finite, uhr-infinite
//! epsilon = 0.01
//! samples = 100
//! seed = 42
//! G = "exp(2*t)"        # Rassias regimes
//! phi = "exp(2*t)"
//! K = 0.5
//! T_max = 10.0          # infinite regimes
//!
//! [output]
//! directory = "out"
//! formats = ["csv", "json"]
//! ```
//!
//! Every validation error names the offending key.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;
use toml::{Table, Value};

use crate::expr::Function;
use crate::resolvent::MatrixGenerator;
use crate::solver::ProblemSpec;
use crate::stability::Regime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed TOML: {0}")]
    Syntax(String),
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSection {
    pub alpha: f64,
    pub beta: f64,
    pub a: Vec<f64>,
    pub xi0: Vec<f64>,
    pub u: String,
    pub h: Vec<String>,
    pub ell: String,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshSection {
    pub n: usize,
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySection {
    pub regime: Regime,
    pub epsilon: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub g: Option<String>,
    pub phi: Option<String>,
    pub k: Option<f64>,
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl OutputSection {
    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

/// A fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub mesh: MeshSection,
    pub solver: SolverSection,
    pub stability: Option<StabilitySection>,
    pub output: OutputSection,
}

struct Section<'a> {
    name: &'a str,
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'a str, allowed: &[&str]) -> Result<Self, ConfigError> {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => return Err(invalid(name, "must be a table")),
        };
        if let Some(t) = table {
            if let Some(k) = t.keys().find(|k| !allowed.contains(&k.as_str())) {
                return Err(invalid(&format!("{name}.{k}"), "unknown key"));
            }
        }
        Ok(Self { name, table })
    }

    fn key(&self, k: &str) -> String {
        format!("{}.{}", self.name, k)
    }

    fn raw(&self, k: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(k))
    }

    fn required<T>(&self, k: &str, get: impl Fn(&Self, &str) -> Result<Option<T>, ConfigError>) -> Result<T, ConfigError> {
        get(self, k)?.ok_or_else(|| invalid(&self.key(k), "missing required key"))
    }

    fn float(&self, k: &str) -> Result<Option<f64>, ConfigError> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(_) => Err(invalid(&self.key(k), "expected a number")),
        }
    }

    fn uint(&self, k: &str) -> Result<Option<u64>, ConfigError> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Integer(v)) if *v >= 0 => Ok(Some(*v as u64)),
            Some(_) => Err(invalid(&self.key(k), "expected a non-negative integer")),
        }
    }

    fn string(&self, k: &str) -> Result<Option<String>, ConfigError> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(invalid(&self.key(k), "expected a string")),
        }
    }

    fn floats(&self, k: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(x) => Ok(*x as f64),
                    _ => Err(invalid(&self.key(k), "expected an array of numbers")),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(Value::Float(x)) => Ok(Some(vec![*x])),
            Some(Value::Integer(x)) => Ok(Some(vec![*x as f64])),
            Some(_) => Err(invalid(&self.key(k), "expected an array of numbers")),
        }
    }

    fn strings(&self, k: &str) -> Result<Option<Vec<String>>, ConfigError> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    _ => Err(invalid(&self.key(k), "expected an array of strings")),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(Value::String(s)) => Ok(Some(vec![s.clone()])),
            Some(_) => Err(invalid(&self.key(k), "expected an array of strings")),
        }
    }
}

fn check_expr(key: &str, source: &str, scope: &[&str]) -> Result<(), ConfigError> {
    Function::new(source, scope)
        .map(|_| ())
        .map_err(|e| invalid(key, e.to_string()))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
        let sections = ["problem", "mesh", "solver", "stability", "output"];
        if let Some(k) = root.keys().find(|k| !sections.contains(&k.as_str())) {
            return Err(invalid(k, "unknown section"));
        }

        let s = Section::new(&root, "problem", &["alpha", "beta", "A", "xi0", "u", "H", "ell", "horizon"])?;
        if s.table.is_none() {
            return Err(invalid("problem", "missing required section"));
        }
        let problem = ProblemSection {
            alpha: s.required("alpha", Section::float)?,
            beta: s.required("beta", Section::float)?,
            a: s.required("A", Section::floats)?,
            xi0: s.required("xi0", Section::floats)?,
            u: s.string("u")?.unwrap_or_else(|| "1".into()),
            h: s.required("H", Section::strings)?,
            ell: s.required("ell", Section::string)?,
            horizon: s.float("horizon")?.unwrap_or(1.0),
        };

        let s = Section::new(&root, "mesh", &["N", "r"])?;
        let mesh = MeshSection {
            n: s.uint("N")?.unwrap_or(256) as usize,
            r: s.float("r")?,
        };

        let s = Section::new(&root, "solver", &["tol", "max_iter"])?;
        let solver = SolverSection {
            tol: s.float("tol")?.unwrap_or(1e-10),
            max_iter: s.uint("max_iter")?.unwrap_or(200) as usize,
        };

        let s = Section::new(
            &root,
            "stability",
            &["regime", "epsilon", "samples", "seed", "G", "phi", "K", "T_max"],
        )?;
        let stability = match s.table {
            None => None,
            Some(_) => {
                let regime = s.required("regime", Section::string)?;
                Some(StabilitySection {
                    regime: regime.parse().map_err(|e: crate::Error| invalid("stability.regime", e.to_string()))?,
                    epsilon: s.float("epsilon")?,
                    samples: s.uint("samples")?.unwrap_or(100) as usize,
                    seed: s.uint("seed")?.unwrap_or(0),
                    g: s.string("G")?,
                    phi: s.string("phi")?,
                    k: s.float("K")?,
                    t_max: s.float("T_max")?,
                })
            }
        };

        let s = Section::new(&root, "output", &["directory", "formats"])?;
        let formats = s
            .strings("formats")?
            .unwrap_or_else(|| vec!["csv".into(), "json".into()])
            .iter()
            .map(|f| match f.as_str() {
                "csv" => Ok(OutputFormat::Csv),
                "json" => Ok(OutputFormat::Json),
                other => Err(invalid("output.formats", format!("unknown format {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let output = OutputSection {
            directory: PathBuf::from(s.string("directory")?.unwrap_or_else(|| "out".into())),
            formats,
        };

        let cfg = Self {
            problem,
            mesh,
            solver,
            stability,
            output,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.problem;
        if !(p.alpha > 0.0 && p.alpha <= 1.0) {
            return Err(invalid("problem.alpha", format!("{} is outside (0, 1]", p.alpha)));
        }
        if !(0.0..=1.0).contains(&p.beta) {
            return Err(invalid("problem.beta", format!("{} is outside [0, 1]", p.beta)));
        }
        if !(p.horizon > 0.0 && p.horizon.is_finite()) {
            return Err(invalid("problem.horizon", "must be positive"));
        }
        let n = p.xi0.len();
        if n == 0 {
            return Err(invalid("problem.xi0", "must not be empty"));
        }
        if p.a.len() != n * n {
            return Err(invalid(
                "problem.A",
                format!("expected {} entries for a {n}x{n} matrix, found {}", n * n, p.a.len()),
            ));
        }
        if p.a.iter().chain(&p.xi0).any(|v| !v.is_finite()) {
            return Err(invalid("problem.A", "entries must be finite"));
        }
        if p.h.len() != n {
            return Err(invalid("problem.H", format!("expected {n} components, found {}", p.h.len())));
        }
        check_expr("problem.u", &p.u, &["t"])?;
        check_expr("problem.ell", &p.ell, &["t"])?;
        let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let mut scope = vec!["t"];
        scope.extend(names.iter().map(|s| s.as_str()));
        for (i, h) in p.h.iter().enumerate() {
            check_expr(&format!("problem.H[{i}]"), h, &scope)?;
        }
        if self.mesh.n < 8 {
            return Err(invalid("mesh.N", format!("{} is below the minimum of 8", self.mesh.n)));
        }
        if let Some(r) = self.mesh.r {
            if !(r >= 1.0 && r.is_finite()) {
                return Err(invalid("mesh.r", format!("{r} must be >= 1")));
            }
        }
        if !(self.solver.tol > 0.0) {
            return Err(invalid("solver.tol", "must be positive"));
        }
        if self.solver.max_iter == 0 {
            return Err(invalid("solver.max_iter", "must be at least 1"));
        }
        if let Some(s) = &self.stability {
            if let Some(e) = s.epsilon {
                if !(e >= 0.0 && e.is_finite()) {
                    return Err(invalid("stability.epsilon", "must be >= 0"));
                }
            }
            if s.regime.is_rassias() {
                let g = s.g.as_deref().ok_or_else(|| invalid("stability.G", "required by the Rassias regimes"))?;
                let phi = s.phi.as_deref().ok_or_else(|| invalid("stability.phi", "required by the Rassias regimes"))?;
                check_expr("stability.G", g, &["t"])?;
                check_expr("stability.phi", phi, &["t"])?;
                match s.k {
                    Some(k) if k > 0.0 && k.is_finite() => {}
                    Some(_) => return Err(invalid("stability.K", "must be positive")),
                    None => return Err(invalid("stability.K", "required by the Rassias regimes")),
                }
            }
            match (s.regime.horizon(), s.t_max) {
                (crate::stability::Horizon::Infinite, None) => {
                    return Err(invalid("stability.T_max", "required by the infinite-horizon regimes"))
                }
                (_, Some(t)) if !(t > 0.0 && t.is_finite()) => {
                    return Err(invalid("stability.T_max", "must be positive"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// The interval actually simulated: `T_max` in the infinite regimes,
    /// `problem.horizon` otherwise.
    pub fn effective_horizon(&self) -> f64 {
        match &self.stability {
            Some(s) if s.regime.horizon() == crate::stability::Horizon::Infinite => {
                s.t_max.unwrap_or(self.problem.horizon)
            }
            _ => self.problem.horizon,
        }
    }

    /// Requires a `[stability]` section.
    pub fn stability(&self) -> Result<&StabilitySection, ConfigError> {
        self.stability
            .as_ref()
            .ok_or_else(|| invalid("stability", "missing required section"))
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec, ConfigError> {
        let p = &self.problem;
        let n = p.xi0.len();
        let gen = MatrixGenerator::new(DMatrix::from_row_slice(n, n, &p.a))
            .map_err(|e| invalid("problem.A", e.to_string()))?;
        let h: Vec<&str> = p.h.iter().map(|s| s.as_str()).collect();
        ProblemSpec::new(
            p.alpha,
            p.beta,
            gen,
            DVector::from_column_slice(&p.xi0),
            &p.u,
            &h,
            &p.ell,
            self.effective_horizon(),
        )
        .and_then(|spec| spec.with_mesh(self.mesh.n, self.mesh.r))
        .map_err(|e| invalid("problem", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[problem]
alpha = 0.6
beta = 0.5
A = [-0.8]
xi0 = [1.0]
u = "0.5"
H = ["x1"]
ell = "1"
horizon = 1.0

[mesh]
N = 64
"#;

    fn key_of(e: ConfigError) -> String {
        match e {
            ConfigError::Invalid { key, .. } => key,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn loads_minimal_config() {
        let c = RunConfig::from_toml_str(BASE).unwrap();
        assert_eq!(c.mesh.n, 64);
        assert_eq!(c.solver.max_iter, 200);
        assert!(c.stability.is_none());
        let p = c.problem_spec().unwrap();
        assert!((p.gamma() - 0.8).abs() < 1e-15);
        assert_eq!(p.mesh().unwrap().len(), 65);
    }

    #[test]
    fn missing_alpha_is_named() {
        let text = BASE.replace("alpha = 0.6\n", "");
        let e = RunConfig::from_toml_str(&text).unwrap_err();
        assert_eq!(key_of(e.clone()), "problem.alpha");
        assert!(e.to_string().contains("alpha"));
    }

    #[test]
    fn bad_values_are_named() {
        let cases = [
            ("alpha = 0.6", "alpha = 1.5", "problem.alpha"),
            ("A = [-0.8]", "A = [1, 2]", "problem.A"),
            ("H = [\"x1\"]", "H = [\"x2\"]", "problem.H[0]"),
            ("u = \"0.5\"", "u = \"sin(\"", "problem.u"),
            ("N = 64", "N = 4", "mesh.N"),
            ("N = 64", "N = 64\nr = 0.5", "mesh.r"),
            ("N = 64", "N = 64\nbogus = 1", "mesh.bogus"),
        ];
        for (from, to, key) in cases {
            let e = RunConfig::from_toml_str(&BASE.replace(from, to)).unwrap_err();
            assert_eq!(key_of(e), key, "{to}");
        }
    }

    #[test]
    fn stability_requirements() {
        let uhr = format!("{BASE}\n[stability]\nregime = \"uhr-finite\"\nphi = \"exp(2*t)\"\nK = 0.5\n");
        assert_eq!(key_of(RunConfig::from_toml_str(&uhr).unwrap_err()), "stability.G");
        let inf = format!("{BASE}\n[stability]\nregime = \"uh-infinite\"\nepsilon = 0.1\n");
        assert_eq!(key_of(RunConfig::from_toml_str(&inf).unwrap_err()), "stability.T_max");
        let bad = format!("{BASE}\n[stability]\nregime = \"sometimes\"\n");
        assert_eq!(key_of(RunConfig::from_toml_str(&bad).unwrap_err()), "stability.regime");
        let ok = format!("{BASE}\n[stability]\nregime = \"uh-infinite\"\nepsilon = 0.1\nT_max = 5\n");
        let c = RunConfig::from_toml_str(&ok).unwrap();
        assert_eq!(c.effective_horizon(), 5.0);
        assert_eq!(c.problem_spec().unwrap().horizon(), 5.0);
    }

    #[test]
    fn syntax_errors_are_reported() {
        assert!(matches!(
            RunConfig::from_toml_str("[problem\nalpha = 1"),
            Err(ConfigError::Syntax(_))
        ));
    }
}
