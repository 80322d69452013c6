//! Command-line front end.
//!
//! Exit codes: 0 success, 1 not certified or bound violation, 2 configuration
//! error, 3 Picard iteration did not converge, 4 numeric failure, 5 no
//! certificate available to verify against.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::{OutputFormat, RunConfig, StabilitySection};
use crate::expr::Function;
use crate::resolvent::{fit_exp_bound, ExpBound, ResolventTable};
use crate::solver::{fde_residual, MildSolver, PicardOutcome, ProblemSpec, WeightedTrajectory};
use crate::special::{mainardi, mittag_leffler};
use crate::stability::{
    corrupt_fixed_point, sample_perturbations, sample_within, uh_certify_finite, uh_certify_infinite,
    uhr_certify, verify_uh, verify_uhr, PerturbationReport, Regime, UHCertificate, UHRCertificate,
};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    NotCertified = 1,
    ConfigError = 2,
    NoConvergence = 3,
    NumericFailure = 4,
    CertificateAbsent = 5,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

impl From<&Error> for ExitStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NoConvergence { .. } => ExitStatus::NoConvergence,
            Error::Expr(_) | Error::InvalidInput(_) | Error::PhiConditionViolated { .. } | Error::GridTooCoarse { .. } => {
                ExitStatus::ConfigError
            }
            _ => ExitStatus::NumericFailure,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hilfer-uh", version, about = "Hilfer-fractional mild solutions and Ulam-Hyers stability checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sampling seed, overriding `stability.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replace the computed fixed point by a shifted copy before verifying.
    #[arg(long, global = true, hide = true)]
    corrupt_fixed_point: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the mild-solution fixed point by Picard iteration.
    Solve { config: PathBuf },
    /// Compute the stability certificate selected by `stability.regime`.
    Certify { config: PathBuf },
    /// Solve, certify and check the bound on sampled perturbations.
    Verify { config: PathBuf },
    /// Evaluate special functions.
    #[command(subcommand)]
    Specfun(Specfun),
}

#[derive(Debug, Subcommand)]
enum Specfun {
    /// Wright/Mainardi function M_alpha(theta).
    Wright {
        alpha: f64,
        #[arg(required = true, allow_negative_numbers = true)]
        theta: Vec<f64>,
    },
    /// Mittag-Leffler function E_{alpha,beta}(z).
    Ml {
        alpha: f64,
        beta: f64,
        #[arg(required = true, allow_negative_numbers = true)]
        z: Vec<f64>,
    },
}

/// Entry point used by the binary.
pub fn main_entry() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    run(std::env::args_os())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::ConfigError.code() } else { 0 };
        }
    };
    let status = match &cli.command {
        Command::Solve { config } => Context::load(config, &cli).map_or_else(|s| s, |ctx| ctx.solve()),
        Command::Certify { config } => Context::load(config, &cli).map_or_else(|s| s, |ctx| ctx.certify()),
        Command::Verify { config } => Context::load(config, &cli).map_or_else(|s| s, |ctx| ctx.verify()),
        Command::Specfun(f) => specfun(f),
    };
    status.code()
}

fn specfun(f: &Specfun) -> ExitStatus {
    let mut out = std::io::stdout().lock();
    match f {
        Specfun::Wright { alpha, theta } => {
            if !(*alpha > 0.0 && *alpha < 1.0) || theta.iter().any(|t| !(*t >= 0.0)) {
                eprintln!("error: need 0 < alpha < 1 and theta >= 0");
                return ExitStatus::ConfigError;
            }
            for &t in theta {
                let _ = writeln!(out, "{t} {:.17e}", mainardi(*alpha, t));
            }
        }
        Specfun::Ml { alpha, beta, z } => {
            for &x in z {
                match mittag_leffler(*alpha, *beta, x) {
                    Ok(v) => {
                        let _ = writeln!(out, "{x} {v:.17e}");
                    }
                    Err(e) => {
                        eprintln!("error: E({alpha}, {beta}; {x}): {e}");
                        return ExitStatus::from(&e);
                    }
                }
            }
        }
    }
    ExitStatus::Success
}

struct Context {
    config: RunConfig,
    spec: ProblemSpec,
    out_dir: PathBuf,
    seed_override: Option<u64>,
    corrupt: bool,
}

fn fail(e: &Error, what: &str) -> ExitStatus {
    eprintln!("error: {what}: {e}");
    ExitStatus::from(e)
}

impl Context {
    fn load(path: &Path, cli: &Cli) -> Result<Self, ExitStatus> {
        let config = RunConfig::load(path).map_err(|e| {
            eprintln!("config error: {e}");
            ExitStatus::ConfigError
        })?;
        let spec = config.problem_spec().map_err(|e| {
            eprintln!("config error: {e}");
            ExitStatus::ConfigError
        })?;
        let out_dir = cli.out.clone().unwrap_or_else(|| config.output.directory.clone());
        Ok(Self {
            config,
            spec,
            out_dir,
            seed_override: cli.seed,
            corrupt: cli.corrupt_fixed_point,
        })
    }

    fn stability(&self) -> Result<&StabilitySection, ExitStatus> {
        self.config.stability().map_err(|e| {
            eprintln!("config error: {e}");
            ExitStatus::ConfigError
        })
    }

    fn write_file(&self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), ExitStatus> {
        let mut buf = Vec::new();
        let written = fs::create_dir_all(&self.out_dir)
            .and_then(|_| body(&mut buf))
            .and_then(|_| fs::write(self.out_dir.join(name), &buf));
        written.map_err(|e| {
            eprintln!("error: cannot write {}: {e}", self.out_dir.join(name).display());
            ExitStatus::NumericFailure
        })
    }

    fn write_manifest(&self, manifest: &Value) -> Result<(), ExitStatus> {
        if !self.config.output.wants(OutputFormat::Json) {
            return Ok(());
        }
        self.write_file("manifest.json", |buf| {
            serde_json::to_writer_pretty(&mut *buf, manifest)?;
            buf.push(b'\n');
            Ok(())
        })
    }

    fn write_csv(&self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), ExitStatus> {
        if self.config.output.wants(OutputFormat::Csv) {
            self.write_file(name, body)
        } else {
            Ok(())
        }
    }

    fn inputs(&self) -> Value {
        let p = &self.spec;
        json!({
            "alpha": p.alpha(),
            "beta": p.beta(),
            "gamma": p.gamma(),
            "A": self.config.problem.a,
            "xi0": self.config.problem.xi0,
            "u": p.u_source(),
            "H": p.h_sources(),
            "ell": p.ell_source(),
            "horizon": p.horizon(),
            "N": p.mesh_size(),
            "r": p.grading(),
            "tol": self.config.solver.tol,
            "max_iter": self.config.solver.max_iter,
        })
    }

    fn table(&self) -> Result<ResolventTable, ExitStatus> {
        self.spec.resolvent_table().map_err(|e| fail(&e, "resolvent table"))
    }

    fn run_picard(&self, solver: &MildSolver<'_>, manifest: &mut Value) -> Result<PicardOutcome, ExitStatus> {
        match solver.picard_solve(self.config.solver.tol, self.config.solver.max_iter) {
            Ok(o) => Ok(o),
            Err(e @ Error::NoConvergence { last_delta, ratio }) => {
                manifest["status"] = json!("no-convergence");
                manifest["solve"] = json!({ "last_delta": last_delta, "ratio": ratio });
                self.write_manifest(manifest)?;
                Err(fail(&e, "solve"))
            }
            Err(e) => Err(fail(&e, "solve")),
        }
    }

    fn solve_summary(&self, outcome: &PicardOutcome) -> Value {
        let residual = fde_residual(&self.spec, &outcome.trajectory).ok();
        json!({
            "iterations": outcome.iterations,
            "final_delta": outcome.final_delta,
            "ratio": outcome.last_ratio(),
            "ratios": outcome.ratios,
            "fde_residual": residual,
        })
    }

    fn solve(&self) -> ExitStatus {
        self.solve_inner().map_or_else(|s| s, |_| ExitStatus::Success)
    }

    fn solve_inner(&self) -> Result<(), ExitStatus> {
        let table = self.table()?;
        let solver = MildSolver::new(&self.spec, &table).map_err(|e| fail(&e, "solver"))?;
        let mut manifest = json!({ "command": "solve", "inputs": self.inputs() });
        let outcome = self.run_picard(&solver, &mut manifest)?;
        manifest["status"] = json!("converged");
        manifest["solve"] = self.solve_summary(&outcome);
        manifest["resolvent"] = json!({
            "chebyshev_degree": table.metadata().chebyshev_degree,
            "chebyshev_tail": table.metadata().chebyshev_tail,
        });
        self.write_csv("trajectory.csv", |buf| outcome.trajectory.write_csv(buf))?;
        self.write_manifest(&manifest)?;
        println!(
            "converged in {} iterations (final delta {:e})",
            outcome.iterations, outcome.final_delta
        );
        Ok(())
    }

    fn certificate(&self, table: &ResolventTable, bound: &ExpBound) -> Result<Certificate, ExitStatus> {
        let s = self.stability()?;
        match s.regime {
            Regime::UhFinite => uh_certify_finite(&self.spec, bound)
                .map(Certificate::Uh)
                .map_err(|e| fail(&e, "certificate")),
            Regime::UhInfinite => match uh_certify_infinite(&self.spec, table, self.spec.horizon()) {
                Ok(c) => Ok(Certificate::Uh(c)),
                Err(Error::TruncationInconclusive { t_max }) => Ok(Certificate::Inconclusive { t_max }),
                Err(e) => Err(fail(&e, "certificate")),
            },
            Regime::UhrFinite | Regime::UhrInfinite => {
                let g = Function::new(s.g.as_deref().unwrap_or_default(), &["t"]).map_err(|e| fail(&e.into(), "stability.G"))?;
                let phi = Function::new(s.phi.as_deref().unwrap_or_default(), &["t"])
                    .map_err(|e| fail(&e.into(), "stability.phi"))?;
                let k = s.k.unwrap_or_default();
                uhr_certify(&self.spec, bound, &g, &phi, k, s.regime.horizon())
                    .map(|c| Certificate::Uhr(c, g))
                    .map_err(|e| match e {
                        Error::PhiConditionViolated { .. } => fail(&e, "stability.phi"),
                        e => fail(&e, "certificate"),
                    })
            }
        }
    }

    fn certify(&self) -> ExitStatus {
        match self.certify_inner() {
            Ok(true) => ExitStatus::Success,
            Ok(false) => ExitStatus::NotCertified,
            Err(s) => s,
        }
    }

    fn certify_inner(&self) -> Result<bool, ExitStatus> {
        let table = self.table()?;
        let bound = fit_exp_bound(&table);
        let cert = self.certificate(&table, &bound)?;
        let manifest = json!({
            "command": "certify",
            "inputs": self.inputs(),
            "regime": self.stability()?.regime.to_string(),
            "exp_bound": { "delta": bound.delta, "w": bound.w },
            "certificate": cert.to_json(),
            "certified": cert.stable(),
        });
        self.write_manifest(&manifest)?;
        println!("{}", cert.summary());
        Ok(cert.stable())
    }

    fn verify(&self) -> ExitStatus {
        self.verify_inner().unwrap_or_else(|s| s)
    }

    fn verify_inner(&self) -> Result<ExitStatus, ExitStatus> {
        let s = self.stability()?.clone();
        if !s.regime.is_rassias() && s.epsilon.is_none() {
            eprintln!("config error: stability.epsilon: required by verify in the Ulam-Hyers regimes");
            return Err(ExitStatus::ConfigError);
        }
        let table = self.table()?;
        let bound = fit_exp_bound(&table);
        let solver = MildSolver::new(&self.spec, &table).map_err(|e| fail(&e, "solver"))?;
        let mut manifest = json!({
            "command": "verify",
            "inputs": self.inputs(),
            "regime": s.regime.to_string(),
            "exp_bound": { "delta": bound.delta, "w": bound.w },
        });
        let cert = self.certificate(&table, &bound)?;
        manifest["certificate"] = cert.to_json();
        manifest["certified"] = json!(cert.stable());
        if !cert.stable() {
            manifest["status"] = json!("certificate-absent");
            self.write_manifest(&manifest)?;
            eprintln!("{}; nothing to verify", cert.summary());
            return Ok(ExitStatus::CertificateAbsent);
        }
        let outcome = self.run_picard(&solver, &mut manifest)?;
        manifest["solve"] = self.solve_summary(&outcome);
        let v = outcome.trajectory;
        let seed = self.seed_override.unwrap_or(s.seed);
        let report = match &cert {
            Certificate::Uh(c) => {
                let eps = s.epsilon.unwrap_or_default();
                let samples = sample_perturbations(&solver, &v, eps, s.samples, seed)
                    .map_err(|e| fail(&e, "sampling"))?;
                let reference = self.reference(&v, 10.0 * c.c.unwrap_or(1.0) * eps + 1.0);
                verify_uh(&solver, &reference, c, &samples).map_err(|e| fail(&e, "verify"))?
            }
            Certificate::Uhr(c, g) => {
                let env: Vec<f64> = v.mesh().iter().map(|&t| g.eval(&[t])).collect();
                let samples = sample_within(&solver, &v, &env, s.samples, seed).map_err(|e| fail(&e, "sampling"))?;
                let top = env.iter().fold(0.0, |m: f64, e| m.max(*e));
                let reference = self.reference(&v, 10.0 * c.c_g.unwrap_or(1.0) * top + 1.0);
                verify_uhr(&solver, &reference, c, &samples, g).map_err(|e| fail(&e, "verify"))?
            }
            Certificate::Inconclusive { .. } => unreachable!("unstable certificates return early"),
        };
        self.write_csv("report.csv", |buf| report.write_csv(buf))?;
        manifest["seed"] = json!(seed);
        manifest["corrupted_fixed_point"] = json!(self.corrupt);
        manifest["report"] = report_json(&report);
        let status = if report.all_pass() {
            ExitStatus::Success
        } else {
            ExitStatus::NotCertified
        };
        manifest["status"] = json!(if report.all_pass() { "pass" } else { "violation" });
        self.write_manifest(&manifest)?;
        println!(
            "{} samples, pass rate {:.3}, max distance/bound {:.4}",
            report.samples.len(),
            report.pass_rate,
            report.max_ratio
        );
        for rec in report.violations() {
            eprintln!("violation: sample {} at nodes {:?}", rec.index, rec.violating_nodes);
        }
        Ok(status)
    }

    fn reference(&self, v: &WeightedTrajectory, magnitude: f64) -> WeightedTrajectory {
        if self.corrupt {
            corrupt_fixed_point(v, magnitude)
        } else {
            v.clone()
        }
    }
}

fn report_json(r: &PerturbationReport) -> Value {
    json!({
        "samples": r.samples.len(),
        "pass_rate": r.pass_rate,
        "max_ratio": r.max_ratio,
        "violations": r.violations().map(|s| json!({
            "index": s.index,
            "nodes": s.violating_nodes,
        })).collect::<Vec<_>>(),
        "unweighted_pass": r.samples.iter().filter_map(|s| s.unweighted_pass).all(|b| b),
    })
}

enum Certificate {
    Uh(UHCertificate),
    Uhr(UHRCertificate, Function),
    Inconclusive { t_max: f64 },
}

impl Certificate {
    fn stable(&self) -> bool {
        match self {
            Certificate::Uh(c) => c.stable,
            Certificate::Uhr(c, _) => c.stable,
            Certificate::Inconclusive { .. } => false,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Certificate::Uh(c) => serde_json::to_value(c).unwrap_or(Value::Null),
            Certificate::Uhr(c, _) => serde_json::to_value(c).unwrap_or(Value::Null),
            Certificate::Inconclusive { t_max } => json!({ "truncation_inconclusive": true, "t_max": t_max }),
        }
    }

    fn summary(&self) -> String {
        match self {
            Certificate::Uh(c) => match c.c {
                Some(k) => format!("certified: lambda_tilde = {:.6}, c = {:.6}", c.lambda_tilde, k),
                None => format!("not certified: lambda_tilde = {:.6} >= 1", c.lambda_tilde),
            },
            Certificate::Uhr(c, _) => match c.c_g {
                Some(k) => format!("certified: rho = {:.6}, K = {}, C_G = {:.6}", c.rho, c.k, k),
                None => format!("not certified: contraction factor {:.6} >= 1", c.contraction),
            },
            Certificate::Inconclusive { t_max } => {
                format!("not certified: running supremum still grows at T_max = {t_max}")
            }
        }
    }
}
