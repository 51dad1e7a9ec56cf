//! Command implementations behind the `epscrm` binary.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use epscrm::archive::{fmt_real, read_archive, write_archive, Archive};
use epscrm::crm::{Intensity, TruncationSpec};
use epscrm::data::{ingest_csv, simulate_reference_data, Dataset};
use epscrm::diagnostics::{
    coclustering, coclustering_csv, density_csv, fit_report, predictive_density_grid, FitReport,
};
use epscrm::eppf::{
    bessel_dirichlet_bounds, calibrate_kappa, eppf_bessel, eppf_dirichlet, eppf_eps, eppf_limit, integer_partitions,
    moments_from_tie_prob, pair_tie_prob, prior_kn_exact, prior_kn_monte_carlo, set_partition_count, CalibrationTarget,
    Composition, KnDistribution,
};
use epscrm::gibbs::{run_chain, ChainStats};
use epscrm::models::{GaussNig, LinDep, MixtureModel};
use epscrm::par::{map_range, Execution};
use epscrm::{Error, Result};

use config::{DataSource, ModelSpec, RunConfig};

/// Loads the dataset a configuration points at. Relative CSV paths are
/// resolved against `base`.
pub fn load_data(cfg: &RunConfig, base: &Path) -> Result<Dataset> {
    let mut data = match &cfg.data {
        DataSource::Simulate { n, seed } => simulate_reference_data(*seed, *n),
        DataSource::Csv(p) => {
            let path = if p.is_absolute() { p.clone() } else { base.join(p) };
            ingest_csv(path, &cfg.response, &cfg.covariates)?
        }
    };
    if cfg.standardize {
        data.standardize_covariates();
    }
    Ok(data)
}

fn lindep_model(cfg: &RunConfig, data: &Dataset) -> Result<LinDep> {
    let ModelSpec::LinDep {
        b0,
        sigma0,
        nu0,
        eta0sq,
        mode,
    } = &cfg.model
    else {
        unreachable!("called for the linear model only")
    };
    let d = data.p() + 1;
    let b0 = b0.clone().unwrap_or_else(|| vec![0.0; d]);
    let s0 = match sigma0 {
        None => DMatrix::identity(d, d) * 100.0,
        Some(v) if v.len() == d => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v)),
        Some(v) if v.len() == d * d => DMatrix::from_row_slice(d, d, v),
        Some(v) => {
            return Err(Error::Config(vec![format!(
                "sigma0 needs {d} diagonal entries or {} matrix entries, got {}",
                d * d,
                v.len()
            )]))
        }
    };
    LinDep::new(b0, s0, *nu0, *eta0sq, *mode)
}

/// Summary of one finished chain.
pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: FitReport,
    pub stats: ChainStats,
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn covariate_vectors(cfg: &RunConfig, data: &Dataset) -> Vec<Vec<f64>> {
    if data.p() == 0 {
        return vec![Vec::new()];
    }
    if !cfg.grid_x.is_empty() {
        return cfg.grid_x.clone();
    }
    let n = data.len() as f64;
    vec![(0..data.p())
        .map(|j| data.x.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect()]
}

fn write_outputs<M: MixtureModel>(
    dir: &Path,
    cfg: &RunConfig,
    data: &Dataset,
    model: &M,
    archive: &Archive<M::Location, M::Global>,
    report: &FitReport,
) -> Result<()> {
    write_archive(dir, model, archive)?;
    write(&dir.join("fit_report.txt"), &report.to_text())?;
    write(&dir.join("cpo.csv"), &report.cpo_csv())?;
    write(&dir.join("kn_posterior.csv"), &report.kn_csv())?;
    write(&dir.join("binder_partition.csv"), &report.binder_csv())?;
    write(
        &dir.join("coclustering.csv"),
        &coclustering_csv(&coclustering(archive), data.len()),
    )?;
    let grid = cfg.grid_points();
    let xs = covariate_vectors(cfg, data);
    for (j, x) in xs.iter().enumerate() {
        let band = predictive_density_grid(archive, model, &grid, x, cfg.exec)?;
        let name = if data.p() == 0 {
            "density.csv".to_string()
        } else {
            format!("density_x{}.csv", j + 1)
        };
        write(&dir.join(name), &density_csv(&band))?;
    }
    if data.p() > 0 {
        // Row j of grid_x.csv holds the covariates of density_x{j}.csv.
        let mut text = format!("j,{}\n", data.covariate_names.join(","));
        for (j, x) in xs.iter().enumerate() {
            let cells: Vec<String> = x.iter().map(|v| fmt_real(*v)).collect();
            let _ = writeln!(text, "{},{}", j + 1, cells.join(","));
        }
        write(&dir.join("grid_x.csv"), &text)?;
    }
    Ok(())
}

fn run_model<M: MixtureModel>(
    cfg: &RunConfig,
    data: &Dataset,
    model: &M,
    out: &Path,
    m0: Option<f64>,
) -> Result<Vec<RunOutcome>> {
    // Chains run concurrently; all file writing happens afterwards, one run
    // directory at a time.
    let results = map_range(cfg.exec, cfg.chains, |c| {
        let mut chain_cfg = cfg.clone();
        chain_cfg.stream = cfg.stream + c as u64;
        let out = chain_cfg
            .chain_config()
            .and_then(|cc| run_chain(&cc, data, model))
            .and_then(|o| {
                let report = fit_report(&o.archive, data, model, cfg.loss_ratio, cfg.exec)?;
                Ok((o, report))
            });
        (chain_cfg, out)
    });
    let mut outcomes = Vec::new();
    for (c, (chain_cfg, res)) in results.into_iter().enumerate() {
        let (o, report) = res?;
        let dir = if cfg.chains == 1 {
            out.to_path_buf()
        } else {
            out.join(format!("chain{}", c + 1))
        };
        fs::create_dir_all(&dir)?;
        write(&dir.join("config.txt"), &chain_cfg.echo(m0))?;
        write_outputs(&dir, &chain_cfg, data, model, &o.archive, &report)?;
        let mut summary = String::new();
        let _ = writeln!(summary, "model = {}", model.name());
        let _ = writeln!(summary, "n = {}", data.len());
        let _ = writeln!(summary, "kept_sweeps = {}", o.archive.len());
        let _ = writeln!(summary, "degraded_jump_draws = {}", o.stats.degraded_jump_draws);
        if o.stats.epsilon_proposals > 0 {
            let _ = writeln!(
                summary,
                "epsilon_acceptance = {}",
                fmt_real(o.stats.epsilon_accepted as f64 / o.stats.epsilon_proposals as f64)
            );
        }
        for w in &o.stats.warnings {
            let _ = writeln!(summary, "warning = {w}");
        }
        write(&dir.join("run_summary.txt"), &summary)?;
        outcomes.push(RunOutcome {
            dir,
            report,
            stats: o.stats,
        });
    }
    Ok(outcomes)
}

/// `run`: chain(s), archive, fit report and density grids in `out`.
/// Relative data paths resolve against `base`.
pub fn run(cfg: &RunConfig, base: &Path, out: &Path) -> Result<Vec<RunOutcome>> {
    let data = load_data(cfg, base)?;
    // The echo must stay loadable from any working directory.
    let mut resolved = cfg.clone();
    if let DataSource::Csv(p) = &cfg.data {
        if p.is_relative() {
            resolved.data = DataSource::Csv(fs::canonicalize(base.join(p))?);
        }
    }
    let cfg = &resolved;
    fs::create_dir_all(out)?;
    match &cfg.model {
        ModelSpec::Nig { kappa0, a, b, m0 } => {
            let model = match m0 {
                Some(m) => GaussNig::new(*kappa0, *a, *b, *m)?,
                None => GaussNig::centred_on(&data, *kappa0, *a, *b)?,
            };
            run_model(cfg, &data, &model, out, Some(model.m0))
        }
        ModelSpec::LinDep { .. } => {
            let model = lindep_model(cfg, &data)?;
            run_model(cfg, &data, &model, out, None)
        }
    }
}

/// `diagnose`: recomputes the fit report of a run directory from its
/// archive and configuration echo.
pub fn diagnose(dir: &Path) -> Result<FitReport> {
    let cfg = RunConfig::load(&dir.join("config.txt"), &[])?;
    let base = std::env::current_dir()?;
    let data = load_data(&cfg, &base)?;
    match &cfg.model {
        ModelSpec::Nig { kappa0, a, b, m0 } => {
            let model = match m0 {
                Some(m) => GaussNig::new(*kappa0, *a, *b, *m)?,
                None => GaussNig::centred_on(&data, *kappa0, *a, *b)?,
            };
            let archive = read_archive(dir, &model)?;
            fit_report(&archive, &data, &model, cfg.loss_ratio, cfg.exec)
        }
        ModelSpec::LinDep { .. } => {
            let model = lindep_model(&cfg, &data)?;
            let archive = read_archive(dir, &model)?;
            fit_report(&archive, &data, &model, cfg.loss_ratio, cfg.exec)
        }
    }
}

/// Text table of a K_n law.
pub fn kn_table(d: &KnDistribution) -> String {
    let mut s = String::from("k,probability,se\n");
    for (i, (p, se)) in d.probs.iter().zip(&d.se).enumerate() {
        if *p > 0.0 || i < 12 {
            let _ = writeln!(s, "{},{},{}", i + 1, fmt_real(*p), fmt_real(*se));
        }
    }
    s
}

/// `prior-simulate`: prior law of K_n (exact for n ≤ 12 unless Monte Carlo
/// is forced) and prior moments of P_ε(B) for a few base-measure masses.
pub fn prior_simulate(
    intensity: &Intensity,
    trunc: &TruncationSpec,
    n: usize,
    reps: usize,
    seed: u64,
    exact: bool,
    exec: Execution,
) -> Result<(KnDistribution, String)> {
    let kn = if exact {
        prior_kn_exact(intensity, trunc, n as u32)?
    } else {
        prior_kn_monte_carlo(intensity, trunc, n, reps, seed, exec)?
    };
    let p2 = pair_tie_prob(intensity, trunc)?;
    let mut s = String::new();
    let _ = writeln!(s, "# p_eps(2) = {}", fmt_real(p2));
    let _ = writeln!(s, "# E(K_n) = {}, sd(K_n) = {}", fmt_real(kn.mean()), fmt_real(kn.sd()));
    s.push_str("p0_b1,p0_b2,p0_b1b2,mean,var,cov\n");
    for masses in [
        (0.1, 0.2, 0.0),
        (0.25, 0.5, 0.0),
        (0.5, 0.5, 0.25),
        (0.5, 0.3, 0.3),
        (0.9, 0.1, 0.05),
    ] {
        let m = moments_from_tie_prob(p2, masses)?;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            masses.0,
            masses.1,
            masses.2,
            fmt_real(m.mean),
            fmt_real(m.var),
            fmt_real(m.cov)
        );
    }
    Ok((kn, s))
}

/// Untruncated limit of the eppf for an intensity family.
pub fn eppf_reference(intensity: &Intensity, kappa: f64, comp: &Composition) -> Result<f64> {
    match *intensity {
        Intensity::Gamma { .. } => Ok(eppf_dirichlet(comp, kappa)),
        Intensity::Bessel { omega } => eppf_bessel(comp, omega, kappa),
        Intensity::GenGamma { .. } => eppf_limit(intensity, kappa, comp),
    }
}

/// `eppf-check`: eppf values against the ε → 0 limit, normalization
/// residuals, a convergence table over ε, and for the Bessel family the
/// two-sided Dirichlet bounds.
pub fn eppf_check(intensity: &Intensity, kappa: f64, epsilon: f64, nmax: u32) -> Result<String> {
    let trunc = TruncationSpec::new(epsilon, kappa)?;
    let mut s = String::new();
    let _ = writeln!(s, "# intensity {} kappa {kappa} epsilon {epsilon:e}", intensity.name());
    s.push_str("composition,eppf_eps,eppf_limit,abs_gap\n");
    let mut residuals = Vec::new();
    for n in 1..=nmax {
        let mut total = 0.0;
        for parts in integer_partitions(n) {
            let comp = Composition::new(parts.clone())?;
            let p = eppf_eps(intensity, &trunc, &comp)?;
            let lim = eppf_reference(intensity, kappa, &comp)?;
            total += set_partition_count(&parts) * p;
            let _ = writeln!(s, "{comp},{},{},{:e}", fmt_real(p), fmt_real(lim), (p - lim).abs());
        }
        residuals.push((n, total - 1.0));
    }
    s.push_str("\nn,normalization_residual\n");
    for (n, r) in &residuals {
        let _ = writeln!(s, "{n},{r:e}");
    }
    s.push_str("\nepsilon,max_abs_gap\n");
    let mut e = 1e-2;
    while e >= epsilon * (1.0 - 1e-12) {
        let t = TruncationSpec::new(e, kappa)?;
        let mut worst: f64 = 0.0;
        for n in 2..=nmax {
            for parts in integer_partitions(n) {
                let comp = Composition::new(parts)?;
                worst = worst.max((eppf_eps(intensity, &t, &comp)? - eppf_reference(intensity, kappa, &comp)?).abs());
            }
        }
        let _ = writeln!(s, "{e:e},{worst:e}");
        e /= 100.0;
    }
    if let Intensity::Bessel { omega } = *intensity {
        s.push_str("\ncomposition,lower,p_bessel,upper,p_dirichlet\n");
        for n in 2..=nmax {
            for parts in integer_partitions(n) {
                let comp = Composition::new(parts)?;
                let (lo, hi) = bessel_dirichlet_bounds(&comp, omega, kappa)?;
                let p = eppf_bessel(&comp, omega, kappa)?;
                let _ = writeln!(
                    s,
                    "{comp},{},{},{},{}",
                    fmt_real(lo),
                    fmt_real(p),
                    fmt_real(hi),
                    fmt_real(eppf_dirichlet(&comp, kappa))
                );
            }
        }
    }
    Ok(s)
}

/// `calibrate`: κ for a target, plus E and sd of K_n at that κ when the
/// target is E(K_n).
pub fn calibrate(intensity: &Intensity, epsilon: f64, target: CalibrationTarget, exec: Execution) -> Result<String> {
    let c = calibrate_kappa(intensity, epsilon, target, exec)?;
    let mut s = String::new();
    let _ = writeln!(s, "kappa = {}", fmt_real(c.kappa));
    let _ = writeln!(s, "target = {}", fmt_real(c.target));
    let _ = writeln!(s, "achieved = {}", fmt_real(c.achieved));
    let _ = writeln!(s, "evaluations = {}", c.evaluations);
    if let CalibrationTarget::ExpectedClusters { n, reps, seed, .. } = target {
        let _ = writeln!(s, "seed = {seed}");
        let _ = writeln!(s, "reps = {reps}");
        let kn = prior_kn_monte_carlo(intensity, &TruncationSpec::new(epsilon, c.kappa)?, n, reps, seed, exec)?;
        let _ = writeln!(s, "mean_kn = {}", fmt_real(kn.mean()));
        let _ = writeln!(s, "sd_kn = {}", fmt_real(kn.sd()));
    }
    Ok(s)
}
