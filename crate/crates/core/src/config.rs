//! Run configuration: sectioned `key = value` text.
//!
//! ```text
//! seed = 7
//!
//! [domain]
//! p = 2
//! n = 1
//! periods = 1 1
//! grid_sizes = 64 64
//!
//! [potential]
//! name = pseudo_huber
//! kappa = 1
//! forcing = 1 cos 0.5 1 0 ; 1 sin 0.25 0 1
//! ```
//!
//! `#` starts a comment. Vectors are space-separated. Relative paths are
//! resolved against the directory holding the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::calculus::Scheme;
use crate::domain::{make_domain, random_field, seeded_rng, DomainRef, Field};
use crate::error::{Error, Result};
use crate::io::load_pgf;
use crate::potentials::{builtin, BuiltinParams, BuiltinPotential, Forcing, ForcingTerm, Trig};
use crate::solver::{Method, SolveOptions};
use crate::verify::{ResidualTolerances, VerifyOptions};

const SECTIONS: [&str; 8] = [
    "", "domain", "potential", "solver", "initial", "output", "check", "verify",
];

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    Zeros,
    Constant(Vec<f64>),
    Random { amplitude: f64, max_mode: usize },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reports {
    pub solve: bool,
    pub residual: bool,
    pub profiles: bool,
}

impl Default for Reports {
    fn default() -> Self {
        Self {
            solve: true,
            residual: true,
            profiles: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub reports: Reports,
}

/// Sampling parameters for the hypothesis checkers.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub samples: usize,
    pub radius: f64,
    pub directions: usize,
    pub radii: Vec<f64>,
    /// Constant weight `b` for the growth fit.
    pub growth_b: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            radius: 100.0,
            directions: 16,
            radii: vec![0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            growth_b: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub domain: DomainRef,
    pub potential: BuiltinPotential,
    pub solver: SolveOptions,
    pub initial: InitialGuess,
    pub output: OutputConfig,
    pub check: CheckConfig,
    pub verify: VerifyOptions,
}

/// `section -> key -> (line, value)`.
type Table = BTreeMap<String, BTreeMap<String, (usize, String)>>;

fn parse_table(text: &str, source: &str) -> Result<Table> {
    let mut table = Table::new();
    table.insert(String::new(), BTreeMap::new());
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            source_name: source.to_string(),
            line: line_no,
            message,
        };
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(format!("unterminated section header `{line}`")))?
                .trim();
            if !SECTIONS.contains(&name) || name.is_empty() {
                return Err(err(format!("unknown section `[{name}]`")));
            }
            if table.contains_key(name) {
                return Err(err(format!("duplicate section `[{name}]`")));
            }
            section = name.to_string();
            table.insert(section.clone(), BTreeMap::new());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(err("empty key".into()));
        }
        let entries = table.get_mut(&section).expect("section registered");
        if entries
            .insert(key.to_string(), (line_no, value.trim().to_string()))
            .is_some()
        {
            return Err(err(format!("duplicate key `{key}`")));
        }
    }
    Ok(table)
}

/// Typed access to one section, tracking which keys were consumed.
struct Section<'a> {
    name: &'a str,
    entries: BTreeMap<String, (usize, String)>,
}

impl<'a> Section<'a> {
    fn take(table: &mut Table, name: &'a str) -> Self {
        Self {
            name,
            entries: table.remove(name).unwrap_or_default(),
        }
    }

    fn key(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.name)
        }
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(_, v)| v)
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.raw(key)
            .ok_or_else(|| Error::config(self.key(key), "missing"))
    }

    fn parse<T: FromStr>(&self, key: &str, value: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        value
            .parse::<T>()
            .map_err(|e| Error::config(self.key(key), format!("`{value}`: {e}")))
    }

    fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            Some(v) => self.parse(key, &v).map(Some),
            None => Ok(None),
        }
    }

    fn vec<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            Some(v) => v
                .split_whitespace()
                .map(|s| self.parse(key, s))
                .collect::<Result<Vec<T>>>()
                .map(Some),
            None => Ok(None),
        }
    }

    fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.raw(key) {
            Some(v) => match v.as_str() {
                "true" | "yes" | "1" => Ok(Some(true)),
                "false" | "no" | "0" => Ok(Some(false)),
                _ => Err(Error::config(self.key(key), format!("`{v}` is not a boolean"))),
            },
            None => Ok(None),
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.keys().next() {
            Some(k) => Err(Error::config(self.key(k), "unknown key")),
            None => Ok(()),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &path.display().to_string(), &base)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, source: &str, base: &Path) -> Result<Self> {
        let mut table = parse_table(text, source)?;
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };

        let mut top = Section::take(&mut table, "");
        let seed = top.get::<u64>("seed")?.unwrap_or(0);
        top.finish()?;

        let mut s = Section::take(&mut table, "domain");
        let p: usize = s.get("p")?.ok_or_else(|| Error::config("domain.p", "missing"))?;
        let n: usize = s.get("n")?.ok_or_else(|| Error::config("domain.n", "missing"))?;
        let periods: Vec<f64> = s
            .vec("periods")?
            .ok_or_else(|| Error::config("domain.periods", "missing"))?;
        let grid_sizes: Vec<usize> = s
            .vec("grid_sizes")?
            .ok_or_else(|| Error::config("domain.grid_sizes", "missing"))?;
        s.finish()?;
        if periods.len() != p {
            return Err(Error::config("domain.periods", format!("needs {p} entries")));
        }
        if grid_sizes.len() != p {
            return Err(Error::config("domain.grid_sizes", format!("needs {p} entries")));
        }
        if let Some(&t) = periods.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::config("domain.periods", format!("{t} is not a positive period")));
        }
        if let Some(&g) = grid_sizes.iter().find(|g| **g < 4 || **g % 2 == 1) {
            return Err(Error::config(
                "domain.grid_sizes",
                format!("{g} is not an even grid size of at least 4"),
            ));
        }
        let domain = make_domain(p, n, &periods, &grid_sizes)
            .map_err(|e| Error::config("domain", e.to_string()))?;

        let mut s = Section::take(&mut table, "potential");
        let name = s.required("name")?;
        let mut params = BuiltinParams::new(n);
        if let Some(k) = s.get("kappa")? {
            params.kappa = k;
        }
        if let Some(a) = s.get("amplitude")? {
            params.amplitude = a;
        }
        params.claimed_bound = s.get("claimed_bound")?;
        let forcing = s.raw("forcing");
        let forcing_file = s.raw("forcing_file");
        s.finish()?;
        params.forcing = match (forcing, forcing_file) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "potential.forcing",
                    "give either forcing or forcing_file, not both",
                ))
            }
            (Some(text), None) => {
                let terms = parse_forcing(&text, p, n)?;
                Forcing::modes(&periods, terms)
                    .map_err(|e| Error::config("potential.forcing", e.to_string()))?
            }
            (None, Some(file)) => {
                let field = load_pgf(&resolve(&file))
                    .map_err(|e| Error::config("potential.forcing_file", e.to_string()))?;
                if **field.domain() != *domain {
                    return Err(Error::config(
                        "potential.forcing_file",
                        "grid does not match [domain]",
                    ));
                }
                Forcing::sampled(field)
            }
            (None, None) => Forcing::None,
        };
        let potential = builtin(&name, params).map_err(|e| Error::config("potential", e.to_string()))?;

        let mut s = Section::take(&mut table, "solver");
        let mut solver = SolveOptions::default();
        if let Some(m) = s.raw("method") {
            solver.method = match m.as_str() {
                "lbfgs" => Method::Lbfgs,
                "gradient_descent" => Method::GradientDescent,
                _ => return Err(Error::config("solver.method", format!("unknown method `{m}`"))),
            };
        }
        if let Some(v) = s.get("max_iters")? {
            solver.max_iters = v;
        }
        solver.grad_tol = s.get("grad_tol")?;
        if let Some(v) = s.get("armijo_c")? {
            solver.armijo_c = v;
        }
        if let Some(v) = s.get("backtrack_factor")? {
            solver.backtrack_factor = v;
        }
        if let Some(v) = s.get("lbfgs_memory")? {
            solver.lbfgs_memory = v;
        }
        if let Some(v) = s.bool("pin_mean")? {
            solver.pin_mean = v;
        }
        if let Some(v) = s.get::<Scheme>("scheme")? {
            solver.scheme = v;
        }
        s.finish()?;
        solver
            .validate()
            .map_err(|e| Error::config("solver", e.to_string()))?;

        let mut s = Section::take(&mut table, "initial");
        let kind = s.raw("kind").unwrap_or_else(|| "zeros".into());
        let initial = match kind.as_str() {
            "zeros" => InitialGuess::Zeros,
            "constant" => {
                let c: Vec<f64> = s
                    .vec("value")?
                    .ok_or_else(|| Error::config("initial.value", "missing"))?;
                if c.len() != n || c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("initial.value", format!("needs {n} finite entries")));
                }
                InitialGuess::Constant(c)
            }
            "random" => {
                let amplitude: f64 = s.get("amplitude")?.unwrap_or(1.0);
                if !(amplitude.is_finite() && amplitude >= 0.0) {
                    return Err(Error::config("initial.amplitude", "must be non-negative and finite"));
                }
                let max_mode = s.get("max_mode")?.unwrap_or(2);
                InitialGuess::Random { amplitude, max_mode }
            }
            "file" => InitialGuess::File(resolve(&s.required("path")?)),
            other => return Err(Error::config("initial.kind", format!("unknown kind `{other}`"))),
        };
        s.finish()?;

        let mut s = Section::take(&mut table, "output");
        let directory = resolve(&s.raw("directory").unwrap_or_else(|| "out".into()));
        let reports = match s.raw("reports") {
            None => Reports::default(),
            Some(list) => {
                let mut r = Reports {
                    solve: false,
                    residual: false,
                    profiles: false,
                };
                for item in list.split_whitespace() {
                    match item {
                        "solve" => r.solve = true,
                        "residual" => r.residual = true,
                        "profiles" => r.profiles = true,
                        _ => {
                            return Err(Error::config("output.reports", format!("unknown report `{item}`")))
                        }
                    }
                }
                r
            }
        };
        s.finish()?;

        let mut s = Section::take(&mut table, "check");
        let mut check = CheckConfig::default();
        if let Some(v) = s.get("samples")? {
            check.samples = v;
        }
        if let Some(v) = s.get("radius")? {
            check.radius = v;
        }
        if let Some(v) = s.get("directions")? {
            check.directions = v;
        }
        if let Some(v) = s.vec("radii")? {
            check.radii = v;
        }
        if let Some(v) = s.get("growth_b")? {
            check.growth_b = v;
        }
        s.finish()?;

        let mut s = Section::take(&mut table, "verify");
        let mut verify = VerifyOptions {
            scheme: solver.scheme,
            ..VerifyOptions::default()
        };
        verify.max_mode = s.get("max_mode")?;
        if let Some(v) = s.get("oversample")? {
            verify.oversample = v;
        }
        let mut tol = ResidualTolerances::default();
        if let Some(v) = s.get("strong_l2")? {
            tol.strong_l2 = v;
        }
        if let Some(v) = s.get("strong_sup")? {
            tol.strong_sup = v;
        }
        if let Some(v) = s.get("weak")? {
            tol.weak = v;
        }
        if let Some(v) = s.get("trace")? {
            tol.trace = v;
        }
        verify.tolerances = tol;
        s.finish()?;

        Ok(Self {
            seed,
            domain,
            potential,
            solver,
            initial,
            output: OutputConfig { directory, reports },
            check,
            verify,
        })
    }

    /// Materializes the starting field. File fields must match the domain.
    pub fn initial_field(&self) -> Result<Field> {
        match &self.initial {
            InitialGuess::Zeros => Ok(Field::zeros(&self.domain)),
            InitialGuess::Constant(c) => Field::constant(&self.domain, c),
            InitialGuess::Random { amplitude, max_mode } => {
                let mut rng = seeded_rng(self.seed);
                Ok(random_field(&self.domain, *max_mode, *amplitude, false, &mut rng))
            }
            InitialGuess::File(path) => {
                let field = load_pgf(path)?;
                if **field.domain() != *self.domain {
                    return Err(Error::config("initial.path", "grid does not match [domain]"));
                }
                Ok(field)
            }
        }
    }
}

/// `comp cos|sin amp m1 … mp`, terms separated by `;`, components 1-based.
fn parse_forcing(text: &str, p: usize, n: usize) -> Result<Vec<ForcingTerm>> {
    let key = "potential.forcing";
    let mut terms = Vec::new();
    for term in text.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let toks: Vec<&str> = term.split_whitespace().collect();
        if toks.len() != 3 + p {
            return Err(Error::config(
                key,
                format!("term `{term}` needs `component cos|sin amplitude` and {p} mode indices"),
            ));
        }
        let bad = |what: &str| Error::config(key, format!("term `{term}`: bad {what}"));
        let component: usize = toks[0].parse().map_err(|_| bad("component"))?;
        if component == 0 || component > n {
            return Err(Error::config(key, format!("component {component} outside 1..={n}")));
        }
        let shape = match toks[1] {
            "cos" => Trig::Cos,
            "sin" => Trig::Sin,
            _ => return Err(bad("shape")),
        };
        let amplitude: f64 = toks[2].parse().map_err(|_| bad("amplitude"))?;
        let modes = toks[3..]
            .iter()
            .map(|s| s.parse::<i64>().map_err(|_| bad("mode index")))
            .collect::<Result<Vec<_>>>()?;
        terms.push(ForcingTerm {
            component: component - 1,
            shape,
            amplitude,
            modes,
        });
    }
    if terms.is_empty() {
        return Err(Error::config(key, "no terms"));
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{BuiltinKind, Potential};

    const BASE: &str = "\
seed = 5
[domain]
p = 2
n = 1
periods = 1 2
grid_sizes = 8 16
[potential]
name = pseudo_huber
forcing = 1 cos 0.5 1 0 ; 1 sin 0.25 0 1   # h(t)
[solver]
pin_mean = true
grad_tol = 1e-9
";

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, "test.cfg", Path::new("/cfg"))
    }

    #[test]
    fn parses_full_example() {
        let cfg = parse(BASE).unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.domain.grid_sizes(), &[8, 16]);
        assert_eq!(cfg.potential.kind(), BuiltinKind::PseudoHuber);
        assert!(cfg.solver.pin_mean);
        assert_eq!(cfg.solver.grad_tol, Some(1e-9));
        assert_eq!(cfg.initial, InitialGuess::Zeros);
        assert_eq!(cfg.output.directory, PathBuf::from("/cfg/out"));
        let mut g = [0.0];
        cfg.potential.gradient(&[0.0, 0.0], &[0.0], &mut g);
        assert!((g[0] - 0.5).abs() < 1e-15);
        assert_eq!(cfg.potential.bound(&[0.0, 0.0]), Some(1.5));
    }

    #[test]
    fn seed_defaults_to_zero() {
        let cfg = parse(&BASE.replace("seed = 5\n", "")).unwrap();
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn odd_grid_size_names_the_key() {
        let err = parse(&BASE.replace("8 16", "8 15")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("domain.grid_sizes"), "{msg}");
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        assert!(parse(&format!("{BASE}bogus = 1\n")).is_err());
        assert!(parse(&format!("{BASE}[extra]\n")).is_err());
        assert!(parse(&BASE.replace("pseudo_huber", "quartic")).is_err());
        assert!(parse(&BASE.replace("1 cos 0.5 1 0", "2 cos 0.5 1 0")).is_err());
        assert!(parse(&BASE.replace("1 cos 0.5 1 0", "1 tan 0.5 1 0")).is_err());
    }

    #[test]
    fn initial_guesses() {
        let cfg = parse(&format!("{BASE}[initial]\nkind = constant\nvalue = 2.5\n")).unwrap();
        let u = cfg.initial_field().unwrap();
        assert!(u.values().iter().all(|&v| v == 2.5));

        let text = format!("{BASE}[initial]\nkind = random\namplitude = 0.1\n");
        let a = parse(&text).unwrap().initial_field().unwrap();
        let b = parse(&text).unwrap().initial_field().unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.sup_norm() > 0.0);

        let cfg = parse(&format!("{BASE}[initial]\nkind = file\npath = u.pgf\n")).unwrap();
        assert_eq!(cfg.initial, InitialGuess::File(PathBuf::from("/cfg/u.pgf")));
    }

    #[test]
    fn reports_subset() {
        let cfg = parse(&format!("{BASE}[output]\ndirectory = /abs\nreports = residual\n")).unwrap();
        assert_eq!(cfg.output.directory, PathBuf::from("/abs"));
        assert!(!cfg.output.reports.solve && cfg.output.reports.residual && !cfg.output.reports.profiles);
    }
}
