use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use epscrm::crm::{Intensity, TruncationSpec};
use epscrm::eppf::CalibrationTarget;
use epscrm::par::Execution;
use epscrm::Result;
use epscrm_cli::config::RunConfig;

#[derive(Parser)]
#[command(name = "epscrm", version, about = "Truncated normalized CRM mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Family {
    Gamma,
    Ngg,
    Bessel,
}

#[derive(Args)]
struct IntensityArgs {
    #[arg(long, value_enum, default_value = "bessel")]
    intensity: Family,
    #[arg(long, default_value_t = 1.05)]
    omega: f64,
    /// NGG discount parameter.
    #[arg(long, default_value_t = 0.25)]
    sigma: f64,
    #[arg(long = "eps", default_value_t = 1e-6)]
    epsilon: f64,
    /// Run Monte Carlo loops on one thread.
    #[arg(long)]
    sequential: bool,
}

impl IntensityArgs {
    fn intensity(&self) -> Result<Intensity> {
        match self.intensity {
            Family::Gamma => Intensity::gamma(self.omega),
            Family::Ngg => Intensity::gen_gamma(self.sigma, self.omega),
            Family::Bessel => Intensity::bessel(self.omega),
        }
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the Gibbs sampler and write archive, fit report and density grids.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "run")]
        out: PathBuf,
        /// Override a configuration key, e.g. `--set kappa=0.5`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Prior law of K_n and prior moments of P_eps(B).
    PriorSimulate {
        #[command(flatten)]
        family: IntensityArgs,
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Enumerate set partitions instead of simulating (n ≤ 12).
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eppf values, normalization residuals and convergence tables.
    EppfCheck {
        #[command(flatten)]
        family: IntensityArgs,
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 5)]
        nmax: u32,
    },
    /// Find kappa for a target E(K_n) or tie probability.
    Calibrate {
        #[command(flatten)]
        family: IntensityArgs,
        #[arg(long, conflicts_with = "target_p2", required_unless_present = "target_p2")]
        target_ekn: Option<f64>,
        #[arg(long)]
        target_p2: Option<f64>,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 20_000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Recompute the fit report of an existing run directory.
    Diagnose {
        #[arg(long)]
        archive: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            mut overrides,
        } => {
            if let Some(s) = seed {
                overrides.push(format!("seed={s}"));
            }
            let cfg = RunConfig::load(&config, &overrides)?;
            let base = config.parent().map(|p| p.to_path_buf()).unwrap_or_default();
            for o in epscrm_cli::run(&cfg, &base, &out)? {
                println!("# {}", o.dir.display());
                print!("{}", o.report.to_text());
                for w in &o.stats.warnings {
                    eprintln!("warning: {w}");
                }
            }
        }
        Command::PriorSimulate {
            family,
            kappa,
            n,
            reps,
            seed,
            exact,
            out,
        } => {
            let intensity = family.intensity()?;
            let trunc = TruncationSpec::new(family.epsilon, kappa)?;
            let (kn, moments) = epscrm_cli::prior_simulate(&intensity, &trunc, n, reps, seed, exact, family.exec())?;
            let table = epscrm_cli::kn_table(&kn);
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    std::fs::write(dir.join("kn_prior.csv"), &table)?;
                    std::fs::write(dir.join("moments.csv"), &moments)?;
                }
                None => print!("{table}\n{moments}"),
            }
        }
        Command::EppfCheck { family, kappa, nmax } => {
            print!(
                "{}",
                epscrm_cli::eppf_check(&family.intensity()?, kappa, family.epsilon, nmax)?
            );
        }
        Command::Calibrate {
            family,
            target_ekn,
            target_p2,
            n,
            reps,
            seed,
        } => {
            let target = match (target_ekn, target_p2) {
                (Some(m), _) => CalibrationTarget::ExpectedClusters { m, n, reps, seed },
                (None, Some(q)) => CalibrationTarget::PairTie(q),
                (None, None) => unreachable!("clap requires one target"),
            };
            print!(
                "{}",
                epscrm_cli::calibrate(&family.intensity()?, family.epsilon, target, family.exec())?
            );
        }
        Command::Diagnose { archive } => {
            print!("{}", epscrm_cli::diagnose(&archive)?.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
