//! `key = value` run configuration.
//!
//! Blank lines and text after `#` are ignored. Every key has a default; the
//! resolved configuration (defaults expanded, data mean filled in) is written
//! next to the outputs so that a run can be repeated or diagnosed later.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use epscrm::crm::{Intensity, TruncationSpec};
use epscrm::gibbs::{ChainConfig, EpsilonPrior};
use epscrm::models::VarianceMode;
use epscrm::par::Execution;
use epscrm::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Simulate { n: usize, seed: u64 },
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Nig {
        kappa0: f64,
        a: f64,
        b: f64,
        /// `None` centres the base measure at the data mean.
        m0: Option<f64>,
    },
    LinDep {
        b0: Option<Vec<f64>>,
        sigma0: Option<Vec<f64>>,
        nu0: f64,
        eta0sq: f64,
        mode: VarianceMode,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub intensity: Intensity,
    pub kappa: f64,
    pub epsilon: f64,
    pub epsilon_prior: EpsilonPrior,
    pub epsilon_step: f64,
    pub model: ModelSpec,
    pub data: DataSource,
    pub response: String,
    pub covariates: Vec<String>,
    pub standardize: bool,
    pub burnin: usize,
    pub samples: usize,
    pub thin: usize,
    pub seed: u64,
    pub stream: u64,
    pub chains: usize,
    pub grid: (f64, f64, usize),
    pub grid_x: Vec<Vec<f64>>,
    pub loss_ratio: f64,
    pub exec: Execution,
}

const KEYS: &[&str] = &[
    "intensity",
    "omega",
    "sigma",
    "kappa",
    "epsilon",
    "epsilon_prior",
    "epsilon_step",
    "model",
    "kappa0",
    "a",
    "b",
    "m0",
    "b0",
    "sigma0",
    "nu0",
    "eta0sq",
    "variance_mode",
    "data",
    "simulate_n",
    "data_seed",
    "response",
    "covariates",
    "standardize",
    "burnin",
    "samples",
    "thin",
    "seed",
    "stream",
    "chains",
    "grid",
    "grid_x",
    "loss_ratio",
    "exec",
];

fn defaults() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("intensity", "bessel"),
        ("omega", "1.05"),
        ("sigma", "0.25"),
        ("kappa", "0.11"),
        ("epsilon", "1e-6"),
        ("epsilon_prior", "fixed"),
        ("epsilon_step", "0.5"),
        ("model", "nig"),
        ("kappa0", "0.01"),
        ("a", "2"),
        ("b", "1"),
        ("m0", "data"),
        ("b0", "zeros"),
        ("sigma0", "diag100"),
        ("nu0", "4"),
        ("eta0sq", "1"),
        ("variance_mode", "in_locations"),
        ("data", "simulate"),
        ("simulate_n", "1000"),
        ("data_seed", "2024"),
        ("response", "y"),
        ("covariates", ""),
        ("standardize", "false"),
        ("burnin", "5000"),
        ("samples", "5000"),
        ("thin", "10"),
        ("seed", "1"),
        ("stream", "0"),
        ("chains", "1"),
        ("grid", "0:60:601"),
        ("grid_x", ""),
        ("loss_ratio", "1"),
        ("exec", "parallel"),
    ])
}

/// Parses `key = value` lines into a map, reporting every bad line.
pub fn parse_pairs(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    let mut errors = Vec::new();
    scan_pairs(text, origin, &mut map, &mut errors);
    if errors.is_empty() {
        Ok(map)
    } else {
        Err(Error::Config(errors))
    }
}

fn scan_pairs(text: &str, origin: &str, map: &mut BTreeMap<String, String>, errors: &mut Vec<String>) {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                let k = k.trim();
                if !KEYS.contains(&k) {
                    errors.push(format!("{origin}:{}: unknown key '{k}'", i + 1));
                } else {
                    map.insert(k.to_string(), v.trim().to_string());
                }
            }
            None => errors.push(format!("{origin}:{}: expected 'key = value', got '{line}'", i + 1)),
        }
    }
}

struct Reader<'a> {
    map: &'a BTreeMap<String, String>,
    defaults: BTreeMap<&'static str, &'static str>,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> String {
        self.map
            .get(key)
            .cloned()
            .unwrap_or_else(|| self.defaults.get(key).copied().unwrap_or("").to_string())
    }

    fn get<T: std::str::FromStr>(&mut self, key: &str, fallback: T) -> T {
        let v = self.raw(key);
        match v.parse() {
            Ok(x) => x,
            Err(_) => {
                self.errors.push(format!("{key}: cannot parse '{v}'"));
                fallback
            }
        }
    }

    fn list(&mut self, key: &str, sep: char) -> Vec<f64> {
        let v = self.raw(key);
        let mut out = Vec::new();
        for part in v.split(sep).map(str::trim).filter(|p| !p.is_empty()) {
            match part.parse() {
                Ok(x) => out.push(x),
                Err(_) => self.errors.push(format!("{key}: '{part}' is not a number")),
            }
        }
        out
    }
}

impl RunConfig {
    /// Builds the configuration from file contents plus `key=value`
    /// overrides, listing every problem before failing.
    pub fn from_pairs(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut r = Reader {
            map,
            defaults: defaults(),
            errors: Vec::new(),
        };
        let omega: f64 = r.get("omega", 1.0);
        let sigma: f64 = r.get("sigma", 0.25);
        let intensity = match r.raw("intensity").as_str() {
            "gamma" => Intensity::gamma(omega),
            "ngg" | "gen_gamma" => Intensity::gen_gamma(sigma, omega),
            "bessel" => Intensity::bessel(omega),
            other => Err(Error::Domain(format!(
                "unknown intensity '{other}' (gamma, ngg, bessel)"
            ))),
        };
        let intensity = match intensity {
            Ok(i) => i,
            Err(e) => {
                r.errors.push(format!("intensity: {e}"));
                Intensity::Gamma { omega: 1.0 }
            }
        };
        let kappa: f64 = r.get("kappa", 1.0);
        let epsilon: f64 = r.get("epsilon", 1e-6);
        if !(kappa > 0.0) {
            r.errors.push(format!("kappa must be positive, got {kappa}"));
        }
        if !(epsilon > 0.0) {
            r.errors.push(format!("epsilon must be positive, got {epsilon}"));
        }
        let prior_raw = r.raw("epsilon_prior");
        let parts: Vec<&str> = prior_raw.split(':').collect();
        let epsilon_prior = match parts.as_slice() {
            ["fixed"] => EpsilonPrior::Fixed,
            [kind @ ("loguniform" | "uniform"), lo, hi] => match (lo.parse(), hi.parse()) {
                (Ok(lo), Ok(hi)) if *kind == "loguniform" => EpsilonPrior::LogUniform { lo, hi },
                (Ok(lo), Ok(hi)) => EpsilonPrior::Uniform { lo, hi },
                _ => {
                    r.errors.push(format!("epsilon_prior: bad bounds in '{prior_raw}'"));
                    EpsilonPrior::Fixed
                }
            },
            _ => {
                r.errors.push(format!(
                    "epsilon_prior: expected 'fixed', 'loguniform:lo:hi' or 'uniform:lo:hi', got '{prior_raw}'"
                ));
                EpsilonPrior::Fixed
            }
        };
        let epsilon_step = r.get("epsilon_step", 0.5);

        let model = match r.raw("model").as_str() {
            "nig" => {
                let m0 = match r.raw("m0").as_str() {
                    "data" => None,
                    _ => Some(r.get("m0", 0.0)),
                };
                ModelSpec::Nig {
                    kappa0: r.get("kappa0", 0.01),
                    a: r.get("a", 2.0),
                    b: r.get("b", 1.0),
                    m0,
                }
            }
            "lindep" => {
                let b0 = match r.raw("b0").as_str() {
                    "zeros" => None,
                    _ => Some(r.list("b0", ',')),
                };
                let sigma0 = match r.raw("sigma0").as_str() {
                    "diag100" => None,
                    _ => Some(r.list("sigma0", ',')),
                };
                let mode = match r.raw("variance_mode").as_str() {
                    "in_locations" => VarianceMode::InLocations,
                    "parametric" => VarianceMode::Parametric,
                    other => {
                        r.errors.push(format!(
                            "variance_mode: expected in_locations or parametric, got '{other}'"
                        ));
                        VarianceMode::InLocations
                    }
                };
                ModelSpec::LinDep {
                    b0,
                    sigma0,
                    nu0: r.get("nu0", 4.0),
                    eta0sq: r.get("eta0sq", 1.0),
                    mode,
                }
            }
            other => {
                r.errors.push(format!("model: expected nig or lindep, got '{other}'"));
                ModelSpec::Nig {
                    kappa0: 0.01,
                    a: 2.0,
                    b: 1.0,
                    m0: None,
                }
            }
        };
        let data = match r.raw("data").as_str() {
            "simulate" => DataSource::Simulate {
                n: r.get("simulate_n", 1000),
                seed: r.get("data_seed", 2024),
            },
            path => DataSource::Csv(PathBuf::from(path)),
        };
        let covariates: Vec<String> = r
            .raw("covariates")
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if matches!(model, ModelSpec::LinDep { .. }) && matches!(data, DataSource::Simulate { .. }) {
            r.errors
                .push("the linear dependent model needs a CSV data file with covariates".into());
        }
        let grid_raw = r.raw("grid");
        let g: Vec<&str> = grid_raw.split(':').collect();
        let grid = match g.as_slice() {
            [lo, hi, pts] => match (lo.parse::<f64>(), hi.parse::<f64>(), pts.parse::<usize>()) {
                (Ok(lo), Ok(hi), Ok(p)) if hi > lo && p >= 2 => (lo, hi, p),
                _ => {
                    r.errors.push(format!(
                        "grid: need lo:hi:points with hi > lo and points ≥ 2, got '{grid_raw}'"
                    ));
                    (0.0, 1.0, 2)
                }
            },
            _ => {
                r.errors.push(format!("grid: expected lo:hi:points, got '{grid_raw}'"));
                (0.0, 1.0, 2)
            }
        };
        let grid_x: Vec<Vec<f64>> = r
            .raw("grid_x")
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
            })
            .filter_map(|v| match v {
                Ok(v) => Some(v),
                Err(e) => {
                    r.errors.push(format!("grid_x: {e}"));
                    None
                }
            })
            .collect();
        if grid_x.iter().any(|v| v.len() != covariates.len()) {
            r.errors.push(format!(
                "grid_x: every covariate vector needs {} entries ({})",
                covariates.len(),
                covariates.join(",")
            ));
        }
        let exec = match r.raw("exec").as_str() {
            "parallel" => Execution::Parallel,
            "sequential" => Execution::Sequential,
            other => {
                r.errors
                    .push(format!("exec: expected parallel or sequential, got '{other}'"));
                Execution::Sequential
            }
        };
        let cfg = RunConfig {
            intensity,
            kappa,
            epsilon,
            epsilon_prior,
            epsilon_step,
            model,
            data,
            response: r.raw("response"),
            covariates,
            standardize: r.get("standardize", false),
            burnin: r.get("burnin", 0),
            samples: r.get("samples", 1),
            thin: r.get("thin", 1),
            seed: r.get("seed", 1),
            stream: r.get("stream", 0),
            chains: r.get("chains", 1),
            grid,
            grid_x,
            loss_ratio: r.get("loss_ratio", 1.0),
            exec,
        };
        for (name, v) in [("samples", cfg.samples), ("thin", cfg.thin), ("chains", cfg.chains)] {
            if v == 0 {
                r.errors.push(format!("{name} must be positive"));
            }
        }
        if !(cfg.loss_ratio > 0.0) {
            r.errors
                .push(format!("loss_ratio must be positive, got {}", cfg.loss_ratio));
        }
        if r.errors.is_empty() {
            if let Ok(chain) = cfg.chain_config() {
                chain.validate()?;
            }
            Ok(cfg)
        } else {
            Err(Error::Config(r.errors))
        }
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut map = BTreeMap::new();
        let mut errors = Vec::new();
        scan_pairs(&text, &path.display().to_string(), &mut map, &mut errors);
        scan_pairs(&overrides.join("\n"), "command line", &mut map, &mut errors);
        match Self::from_pairs(&map) {
            Ok(cfg) if errors.is_empty() => Ok(cfg),
            Ok(_) => Err(Error::Config(errors)),
            Err(Error::Config(more)) => {
                errors.extend(more);
                Err(Error::Config(errors))
            }
            Err(e) => Err(e),
        }
    }

    pub fn chain_config(&self) -> Result<ChainConfig> {
        let mut c = ChainConfig::new(self.intensity, TruncationSpec::new(self.epsilon, self.kappa)?);
        c.n_burnin = self.burnin;
        c.n_samples = self.samples;
        c.thinning = self.thin;
        c.seed = self.seed;
        c.stream = self.stream;
        c.epsilon_prior = self.epsilon_prior;
        c.epsilon_step = self.epsilon_step;
        c.exec = self.exec;
        Ok(c)
    }

    pub fn grid_points(&self) -> Vec<f64> {
        let (lo, hi, n) = self.grid;
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    /// Fully resolved `key = value` text; `m0` is the value actually used.
    pub fn echo(&self, resolved_m0: Option<f64>) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let (name, omega, sigma) = match self.intensity {
            Intensity::Gamma { omega } => ("gamma", omega, 0.25),
            Intensity::GenGamma { sigma, omega } => ("ngg", omega, sigma),
            Intensity::Bessel { omega } => ("bessel", omega, 0.25),
        };
        put("intensity", name.into());
        put("omega", format!("{omega:e}"));
        put("sigma", format!("{sigma:e}"));
        put("kappa", format!("{:e}", self.kappa));
        put("epsilon", format!("{:e}", self.epsilon));
        put(
            "epsilon_prior",
            match self.epsilon_prior {
                EpsilonPrior::Fixed => "fixed".into(),
                EpsilonPrior::LogUniform { lo, hi } => format!("loguniform:{lo:e}:{hi:e}"),
                EpsilonPrior::Uniform { lo, hi } => format!("uniform:{lo:e}:{hi:e}"),
            },
        );
        put("epsilon_step", format!("{:e}", self.epsilon_step));
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        match &self.model {
            ModelSpec::Nig { kappa0, a, b, m0 } => {
                put("model", "nig".into());
                put("kappa0", format!("{kappa0:e}"));
                put("a", format!("{a:e}"));
                put("b", format!("{b:e}"));
                let m = m0.or(resolved_m0);
                put("m0", m.map_or("data".into(), |m| format!("{m:.16e}")));
            }
            ModelSpec::LinDep {
                b0,
                sigma0,
                nu0,
                eta0sq,
                mode,
            } => {
                put("model", "lindep".into());
                put("b0", b0.as_ref().map_or("zeros".into(), |v| join(v)));
                put("sigma0", sigma0.as_ref().map_or("diag100".into(), |v| join(v)));
                put("nu0", format!("{nu0:e}"));
                put("eta0sq", format!("{eta0sq:e}"));
                put(
                    "variance_mode",
                    match mode {
                        VarianceMode::InLocations => "in_locations".into(),
                        VarianceMode::Parametric => "parametric".into(),
                    },
                );
            }
        }
        match &self.data {
            DataSource::Simulate { n, seed } => {
                put("data", "simulate".into());
                put("simulate_n", n.to_string());
                put("data_seed", seed.to_string());
            }
            DataSource::Csv(p) => put("data", p.display().to_string()),
        }
        put("response", self.response.clone());
        put("covariates", self.covariates.join(","));
        put("standardize", self.standardize.to_string());
        put("burnin", self.burnin.to_string());
        put("samples", self.samples.to_string());
        put("thin", self.thin.to_string());
        put("seed", self.seed.to_string());
        put("stream", self.stream.to_string());
        put("chains", self.chains.to_string());
        put("grid", format!("{:e}:{:e}:{}", self.grid.0, self.grid.1, self.grid.2));
        put(
            "grid_x",
            self.grid_x.iter().map(|v| join(v)).collect::<Vec<_>>().join(";"),
        );
        put("loss_ratio", format!("{:e}", self.loss_ratio));
        put(
            "exec",
            if self.exec == Execution::Sequential {
                "sequential"
            } else {
                "parallel"
            }
            .into(),
        );
        s
    }
}
