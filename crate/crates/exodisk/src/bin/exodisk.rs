use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use exodisk::diagnostics::write_diagnostics_csv;
use exodisk::experiments::{run_experiment_suite, smoke_config, smoke_nus, Job, DEFAULT_NUS};
use exodisk::initial::compatible_data;
use exodisk::norms::{write_norm_csv, NormContext};
use exodisk::rescaled::map_to_rescaled;
use exodisk::snapshot::Snapshot;
use exodisk::solver::{run_simulation, Mode};
use exodisk::{build_grid, Experiment, SolverConfig};

#[derive(Parser)]
#[command(name = "exodisk", version, about = "Exterior-disk vorticity solver and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated viscosities.
    #[arg(long, value_delimiter = ',')]
    nu: Vec<f64>,
    /// Output directory (defaults to `output_dir` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// E1, E2, E3 or E4.
    #[arg(long)]
    experiment: Option<Experiment>,
    /// Reduced resolution (N_θ = 32, N_r = 128) and two viscosities.
    #[arg(long)]
    smoke: bool,
}

#[derive(Subcommand)]
enum Command {
    /// One Navier–Stokes run (or Euler with `--nu 0`): diagnostics CSV and snapshots.
    Run(Common),
    /// Kernel, DtN, semigroup and norm audits (E4).
    Audit(Common),
    /// Viscosity sweep for one experiment, or E1–E4 when none is given.
    Sweep(Common),
    /// Norm report of snapshot files, or of the initial data when none are given.
    Norms {
        #[command(flatten)]
        common: Common,
        /// Snapshot files.
        snapshots: Vec<PathBuf>,
    },
}

impl Common {
    fn load(&self) -> exodisk::Result<SolverConfig> {
        let mut c = match &self.config {
            Some(p) => SolverConfig::load(p)?,
            None => SolverConfig::default(),
        };
        if let Some(e) = self.experiment {
            c.experiment = e;
        }
        if let Some(o) = &self.out {
            c.output_dir = o.clone();
        }
        if self.smoke {
            c = smoke_config(&c);
        }
        Ok(c)
    }

    fn nus(&self) -> Vec<f64> {
        let nus = if self.nu.is_empty() { DEFAULT_NUS.to_vec() } else { self.nu.clone() };
        if self.smoke {
            smoke_nus(&nus)
        } else {
            nus
        }
    }
}

fn run(common: &Common) -> exodisk::Result<()> {
    let mut config = common.load()?;
    if let Some(&nu) = common.nu.first() {
        config.nu = nu;
    }
    let mode = if config.nu == 0.0 { Mode::Euler } else { Mode::NavierStokes };
    if mode == Mode::Euler {
        config.nu_grid.get_or_insert(1e-3);
    }
    let grid = build_grid(&config)?;
    let stepper = exodisk::solver::Stepper::from_config(&config, mode)?;
    let omega0 = compatible_data(&config, &grid, &stepper.bs)?;
    let traj = run_simulation(&config, &omega0, mode)?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out)?;
    write_diagnostics_csv(std::fs::File::create(out.join("diagnostics.csv"))?, &traj.records)?;
    for (i, s) in traj.snapshots.iter().enumerate() {
        s.save(&out.join(format!("snapshot_{i:04}.exod")))?;
    }
    std::fs::write(out.join("config.txt"), config.to_text())?;
    println!(
        "status {:?}, {} steps, energy balance residual {:.3e}, enstrophy drift {:.3e}, kato {:.4e}",
        traj.status,
        traj.stats.len(),
        traj.energy_balance_residual(),
        traj.enstrophy_drift(),
        traj.kato_quantity()
    );
    Ok(())
}

fn suite(jobs: Vec<Job>, out: &Path) -> exodisk::Result<bool> {
    let manifest = run_experiment_suite(&jobs, out)?;
    print!("{}", manifest.to_text());
    Ok(manifest.entries.iter().all(|e| e.failures.is_empty()))
}

fn norms(common: &Common, snapshots: &[PathBuf]) -> exodisk::Result<()> {
    let config = common.load()?;
    let grid = build_grid(&config)?;
    let fields = if snapshots.is_empty() {
        let bs = exodisk::biot_savart::BiotSavart::new(&grid, config.n_theta / 2)?;
        vec![Snapshot { time: 0.0, nu: config.nu, field: compatible_data(&config, &grid, &bs)? }]
    } else {
        snapshots.iter().map(|p| Snapshot::load(p)).collect::<exodisk::Result<Vec<_>>>()?
    };
    let mut rows = Vec::new();
    for s in &fields {
        let w = map_to_rescaled(&s.field, &grid, config.lambda)?;
        let ctx = NormContext::for_field(&w, config.delta0, config.rho0, config.eps0)?;
        for i in 1..=4 {
            let rho = config.rho0 * i as f64 / 5.0;
            rows.push(ctx.report(&w, s.time, rho, config.k_norm)?);
        }
    }
    std::fs::create_dir_all(&config.output_dir)?;
    let path = config.output_dir.join("norms.csv");
    write_norm_csv(std::fs::File::create(&path)?, &rows)?;
    write_norm_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => run(c).map(|_| true),
        Command::Audit(c) => c.load().and_then(|config| {
            let out = config.output_dir.clone();
            suite(vec![Job { config: SolverConfig { experiment: Experiment::E4, ..config }, nus: Vec::new() }], &out)
        }),
        Command::Sweep(c) => c.load().and_then(|config| {
            let out = config.output_dir.clone();
            let experiments = match c.experiment {
                Some(e) => vec![e],
                None => vec![Experiment::E1, Experiment::E2, Experiment::E3, Experiment::E4],
            };
            let jobs = experiments
                .into_iter()
                .map(|e| Job { config: SolverConfig { experiment: e, ..config.clone() }, nus: c.nus() })
                .collect();
            suite(jobs, &out)
        }),
        Command::Norms { common, snapshots } => norms(common, snapshots).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
