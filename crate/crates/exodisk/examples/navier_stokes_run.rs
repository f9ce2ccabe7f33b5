//! Evolves compatible analytic data with the IMEX solver and prints the
//! energy balance, wall slip and a few diagnostics records.
//!
//! cargo run --release --example navier_stokes_run -- [nu] [t_final]

use exodisk::biot_savart::BiotSavart;
use exodisk::initial::compatible_data;
use exodisk::solver::{run_simulation, Mode};
use exodisk::{build_grid, SolverConfig};

fn main() -> exodisk::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut config = SolverConfig { n_r: 256, ..SolverConfig::default() };
    config.nu = args.next().map_or(Ok(1e-2), |s| s.parse()).expect("nu");
    config.t_final = args.next().map_or(Ok(0.1), |s| s.parse()).expect("t_final");
    config.snapshot_every = config.t_final;

    let grid = build_grid(&config)?;
    let bs = BiotSavart::new(&grid, config.n_theta / 2)?;
    let omega0 = compatible_data(&config, &grid, &bs)?;
    let start = std::time::Instant::now();
    let traj = run_simulation(&config, &omega0, Mode::NavierStokes)?;

    println!("nu = {:e}, steps = {}, wall time = {:.2?}", config.nu, traj.stats.len(), start.elapsed());
    println!("status = {:?}", traj.status);
    println!("energy balance residual = {:.3e}", traj.energy_balance_residual());
    let slip = traj.stats.iter().map(|s| s.wall_slip_ratio).fold(0.0, f64::max);
    println!("max wall slip / max|u| = {slip:.3e}");
    println!("t, boundary_sup, energy, enstrophy, kato, A_k");
    let stride = (traj.records.len() / 8).max(1);
    for r in traj.records.iter().step_by(stride) {
        println!(
            "{:.4}, {:.4e}, {:.6e}, {:.4e}, {:.3e}, {:.3e}",
            r.t, r.boundary_sup, r.energy, r.enstrophy, r.kato_integrand, r.a_k
        );
    }
    Ok(())
}
