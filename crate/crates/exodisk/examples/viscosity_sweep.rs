//! Runs the E1–E3 sweep in-process and prints the fitted boundary exponent,
//! the inviscid gaps and the Kato decade factors.
//!
//! cargo run --release --example viscosity_sweep -- [--smoke]

use exodisk::experiments::{
    e1_report, e2_report, e3_report, smoke_config, smoke_nus, thread_pool, Sweep, DEFAULT_NUS,
};
use exodisk::SolverConfig;

fn main() -> exodisk::Result<()> {
    let smoke = std::env::args().any(|a| a == "--smoke");
    let mut config = SolverConfig::default();
    let mut nus = DEFAULT_NUS.to_vec();
    if smoke {
        config = smoke_config(&config);
        nus = smoke_nus(&nus);
    }
    let pool = thread_pool()?;
    let sweep = Sweep::new(&config, &nus)?;
    let members = sweep.viscous(&pool)?;
    let euler = sweep.euler()?;

    let e1 = e1_report(&members, config.t_final);
    println!("nu, sup|w(T/2)|, scaled bound, A(beta) growth");
    for r in &e1.rows {
        println!("{:e}, {:.4e}, {:.4}, {:.4}", r.nu, r.boundary_sup_mid, r.scaled_bound, r.a_beta_max / r.a_beta_initial);
    }
    if let Some(f) = e1.fit {
        println!("boundary exponent {:.4} ± {:.4}", f.exponent, f.stderr);
    }

    let e2 = e2_report(&sweep, &members, &euler)?;
    for (nu, g) in &e2.rows {
        println!("nu = {nu:e}: sup_t ||u - u0|| = {g:.4e}");
    }
    if let Some(f) = e2.fit {
        println!("inviscid slope {:.3}, strictly decreasing {}", f.exponent, e2.strictly_decreasing);
    }
    println!("Euler enstrophy drift {:.2e}", euler.enstrophy_drift());

    let e3 = e3_report(&members, config.kato_c);
    for r in &e3.rows {
        println!("nu = {:e}: Kato {:.4e} (strip {:.2e}{})", r.nu, r.kato, r.strip_width, if r.subcell { ", subcell" } else { "" });
    }
    println!("factors per decade {:?}", e3.decade_factors);
    for (nu, e) in e1.failures.iter().chain(&e2.failures).chain(&e3.failures) {
        println!("nu = {nu:e} failed: {e}");
    }
    Ok(())
}
