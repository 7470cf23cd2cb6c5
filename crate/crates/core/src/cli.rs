//! The `pgrad` command line: `solve`, `check`, `diagnose`, `export`.
//!
//! Exit codes: 0 success, 1 a check or the solve did not succeed,
//! 2 bad input (config, field file, arguments), 3 numerical failure.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{info, warn};

use crate::action::{action, coercivity_lower_bound};
use crate::calculus::{theorem2_check, wirtinger_check, InequalityReport};
use crate::config::RunConfig;
use crate::domain::Field;
use crate::error::{Error, Result};
use crate::io::{load_pgf, save_csv, save_pgf};
use crate::potentials::{
    bounded_grad_check, coercivity_probe, fd_check_potential_grad, growth_check, HypothesisReport,
    Potential, Verdict,
};
use crate::solver::{minimize, StopReason};
use crate::verify::{periodicity_check, residual_report, ResidualReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Exit {
    Success = 0,
    Failure = 1,
    Input = 2,
    Numerical = 3,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }

    fn from_error(e: &Error) -> Self {
        match e {
            Error::NonFinite { what, .. } if *what != "field" => Exit::Numerical,
            _ => Exit::Input,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pgrad", version, about = "Periodic Poisson-gradient solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize the action and write the field and reports.
    Solve { config: PathBuf },
    /// Sample the potential against the existence hypotheses.
    Check { config: PathBuf },
    /// Report action, inequalities and residuals for a field file.
    Diagnose {
        field: PathBuf,
        config: PathBuf,
        /// Also write the metrics as `key = value` lines.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Convert a field file to CSV.
    Export {
        field: PathBuf,
        #[arg(long)]
        csv: PathBuf,
    },
}

/// Sets the log level from `PGRAD_LOG` (`quiet`, `info`, `debug`).
pub fn init_logging() {
    let level = match std::env::var("PGRAD_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Error,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Info,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .try_init();
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Exit
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Exit::Input } else { Exit::Success };
        }
    };
    match cli.command {
        Command::Solve { config } => cmd_solve(&config),
        Command::Check { config } => cmd_check(&config),
        Command::Diagnose {
            field,
            config,
            report,
        } => cmd_diagnose(&field, &config, report.as_deref()),
        Command::Export { field, csv } => cmd_export(&field, &csv),
    }
}

fn fail(context: &str, e: &Error) -> Exit {
    eprintln!("error: {context}: {e}");
    Exit::from_error(e)
}

/// Ordered `key = value` lines.
#[derive(Default)]
struct KeyValues(Vec<(String, String)>);

impl KeyValues {
    fn put(&mut self, key: &str, value: impl Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    fn num(&mut self, key: &str, value: f64) {
        self.put(key, format!("{value:.16e}"));
    }

    fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

fn put_residual(kv: &mut KeyValues, r: &ResidualReport) {
    kv.num("strong_l2", r.strong_l2);
    kv.num("strong_sup", r.strong_sup);
    kv.num("weak_max", r.weak_max);
    kv.num("trace_mismatch", r.trace_mismatch);
    kv.put("residual_passes", r.passes);
}

fn put_inequality(kv: &mut KeyValues, prefix: &str, r: &InequalityReport) {
    kv.num(&format!("{prefix}_lhs"), r.lhs);
    kv.num(&format!("{prefix}_rhs"), r.rhs);
    kv.num(&format!("{prefix}_constant"), r.constant_used);
    kv.put(&format!("{prefix}_holds"), r.holds);
}

fn probe(cfg: &RunConfig) -> Result<HypothesisReport> {
    coercivity_probe(
        &cfg.potential,
        &cfg.domain,
        cfg.check.directions,
        &cfg.check.radii,
        cfg.seed.wrapping_add(3),
    )
}

/// Writes `(tᵅ, u^i)` along the grid line through the origin in axis `α`.
fn write_profiles(field: &Field, dir: &Path) -> Result<()> {
    let d = field.domain();
    for axis in 0..d.p() {
        for comp in 0..d.n() {
            let path = dir.join(format!("profile_axis{}_comp{}.dat", axis + 1, comp + 1));
            let mut out = std::io::BufWriter::new(fs::File::create(path)?);
            for j in 0..d.grid_sizes()[axis] {
                let k = j * d.stride(axis);
                writeln!(out, "{:.16e} {:.16e}", j as f64 * d.spacing(axis), field.at(k)[comp])?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

pub fn cmd_solve(config: &Path) -> Exit {
    let cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail("config", &e),
    };
    let initial = match cfg.initial_field() {
        Ok(u) => u,
        Err(e) => return fail("initial field", &e),
    };
    if let Err(e) = fs::create_dir_all(&cfg.output.directory) {
        return fail("output directory", &e.into());
    }

    let mut coercivity_warning = None;
    match probe(&cfg) {
        Ok(r) if r.verdict != Verdict::Pass && !cfg.solver.pin_mean => {
            let msg = format!(
                "coercivity probe verdict {}; the mean may drift, consider pin_mean = true",
                r.verdict
            );
            warn!("{msg}");
            coercivity_warning = Some(msg);
        }
        Ok(_) => {}
        Err(e) => return fail("coercivity probe", &e),
    }

    info!(
        "solving {} on {:?} with {}",
        cfg.potential.kind().name(),
        cfg.domain.grid_sizes(),
        cfg.solver.method
    );
    let report = match minimize(&initial, &cfg.potential, &cfg.solver) {
        Ok(r) => r,
        Err(e) => return fail("solve", &e),
    };
    let field = &report.final_field;
    let dir = &cfg.output.directory;
    if report.stop_reason == StopReason::NumericalFailure {
        eprintln!("error: solve: non-finite action or gradient after {} iterations", report.iterations);
        if let Err(e) = save_pgf(field, &dir.join("field.pgf")) {
            eprintln!("error: solve output: {e}");
        }
        return Exit::Numerical;
    }

    let outcome = (|| -> Result<Exit> {
        save_pgf(field, &dir.join("field.pgf"))?;
        let phi = action(field, &cfg.potential, cfg.solver.scheme)?;
        let residual = residual_report(field, &cfg.potential, &cfg.verify)?;

        let mut kv = KeyValues::default();
        kv.put("potential", cfg.potential.kind().name());
        kv.put("method", cfg.solver.method);
        kv.put("stop_reason", report.stop_reason);
        kv.put("converged", report.converged);
        kv.put("iterations", report.iterations);
        kv.num("grad_tol", report.grad_tol);
        kv.num("grad_sup_final", report.grad_norms.last().copied().unwrap_or(f64::NAN));
        kv.num("phi_initial", report.iterates_phi.first().copied().unwrap_or(f64::NAN));
        kv.num("phi_final", phi.total);
        kv.num("kinetic_final", phi.kinetic);
        kv.num("potential_final", phi.potential);
        kv.put("coercivity_warning", coercivity_warning.as_deref().unwrap_or("none"));
        if cfg.output.reports.solve {
            kv.save(&dir.join("solve_report.txt"))?;
        }
        print!("{}", kv.render());

        let mut rkv = KeyValues::default();
        put_residual(&mut rkv, &residual);
        if cfg.output.reports.residual {
            rkv.save(&dir.join("residual_report.txt"))?;
        }
        print!("{}", rkv.render());

        if cfg.output.reports.profiles {
            write_profiles(field, dir)?;
        }

        Ok(if report.converged && residual.passes {
            Exit::Success
        } else {
            Exit::Failure
        })
    })();
    outcome.unwrap_or_else(|e| fail("solve output", &e))
}

fn print_hypothesis(r: &HypothesisReport) {
    println!(
        "{}: {} (samples {}, worst violation {:.3e})",
        r.checked_property, r.verdict, r.samples, r.worst_violation
    );
    if let (Some(m), Some(a0)) = (r.fitted_slope, r.fitted_intercept) {
        println!("  fitted a(s) = {m:.6} s + {a0:.6}");
    }
    if let Some(g) = r.g_max {
        println!("  max g = {g:.6}");
    }
    if let Some((t, u)) = &r.witness {
        println!("  witness t = {t:?}, u = {u:?}");
    }
}

pub fn cmd_check(config: &Path) -> Exit {
    let cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail("config", &e),
    };
    let c = &cfg.check;
    let b = c.growth_b;
    if !(b.is_finite() && b > 0.0) {
        return fail("config", &Error::config("check.growth_b", "must be positive"));
    }
    let weight = move |_: &[f64]| b;
    let pot = &cfg.potential;
    let d = &cfg.domain;
    let reports = [
        fd_check_potential_grad(pot, d, c.samples, c.radius, cfg.seed),
        bounded_grad_check(pot, d, c.samples, c.radius, cfg.seed.wrapping_add(1)),
        growth_check(pot, d, &weight, c.samples, c.radius, cfg.seed.wrapping_add(2)),
        probe(&cfg),
    ];
    let mut exit = Exit::Success;
    for r in reports {
        match r {
            Ok(r) => {
                print_hypothesis(&r);
                if r.verdict == Verdict::Fail {
                    exit = Exit::Failure;
                }
            }
            Err(e) => return fail("check", &e),
        }
    }
    exit
}

pub fn cmd_diagnose(field_path: &Path, config: &Path, report: Option<&Path>) -> Exit {
    let cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail("config", &e),
    };
    let field = match load_pgf(field_path) {
        Ok(f) => f,
        Err(e) => return fail("field", &e),
    };
    if **field.domain() != *cfg.domain {
        let e = Error::DomainMismatch("field grid differs from the config [domain]".into());
        return fail("field", &e);
    }

    let outcome = (|| -> Result<Exit> {
        let pot: &dyn Potential = &cfg.potential;
        let phi = action(&field, pot, cfg.solver.scheme)?;
        let t2 = theorem2_check(&field);
        let wirt = wirtinger_check(&field);
        let residual = residual_report(&field, pot, &cfg.verify)?;
        let periodicity = periodicity_check(&field, cfg.verify.oversample)?;

        let mut kv = KeyValues::default();
        kv.num("phi", phi.total);
        kv.num("kinetic", phi.kinetic);
        kv.num("potential", phi.potential);
        put_inequality(&mut kv, "theorem2", &t2);
        put_inequality(&mut kv, "wirtinger", &wirt);
        let mut bound_holds = true;
        match coercivity_lower_bound(&field, pot) {
            Ok(b) => {
                bound_holds = phi.total >= b;
                kv.num("lower_bound", b);
                kv.put("lower_bound_holds", bound_holds);
            }
            Err(Error::MissingBound) => kv.put("lower_bound", "unavailable"),
            Err(e) => return Err(e),
        }
        put_residual(&mut kv, &residual);
        kv.num("periodicity", periodicity);
        print!("{}", kv.render());
        if let Some(path) = report {
            kv.save(path)?;
        }
        Ok(if t2.holds && wirt.holds && bound_holds && residual.passes {
            Exit::Success
        } else {
            Exit::Failure
        })
    })();
    outcome.unwrap_or_else(|e| fail("diagnose", &e))
}

pub fn cmd_export(field_path: &Path, csv: &Path) -> Exit {
    let field = match load_pgf(field_path) {
        Ok(f) => f,
        Err(e) => return fail("field", &e),
    };
    match save_csv(&field, csv) {
        Ok(()) => Exit::Success,
        Err(e) => fail("export", &e),
    }
}
