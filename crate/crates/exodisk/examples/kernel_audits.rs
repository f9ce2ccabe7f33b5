//! Time-integration-free checks: the DtN expansion table, residual kernel
//! fits, the semigroup audit and the norm algebra inequality.
//!
//! cargo run --release --example kernel_audits

use exodisk::norms::{algebra_audit, PencilDomain};
use exodisk::rescaled::dtn_expansion_identity;
use exodisk::stokes::{residual_extract_and_fit, semigroup_audit, SemigroupSetup, StokesMode};
use num_complex::Complex64;
use rand::SeedableRng;

fn main() -> exodisk::Result<()> {
    println!("n  lambda  |N - lambda|n|w0|  correction  order");
    for n in [1, 3, 10] {
        for lambda in [0.1, 0.5] {
            let rep = dtn_expansion_identity(n, lambda, Complex64::new(1.0, 0.0), 20.0)?;
            println!(
                "{n:2} {lambda:5} {:14.3e} {:12.3e} {:6.2}",
                (rep.n_numeric - rep.n_exact).norm(),
                rep.correction_integral.norm(),
                rep.observed_order
            );
        }
    }

    println!("\nalpha  nu      theta0   prefactor  mismatch");
    for (alpha, nu) in [(0.5, 1e-2), (1.0, 1e-3), (2.0, 1e-4)] {
        let tau = 1.0;
        let mode = StokesMode::for_layer(alpha, nu, tau, 20.0 * (nu * tau).sqrt() + 2.0, 1200)?;
        let y0 = (nu * tau).sqrt();
        let k = residual_extract_and_fit(&mode, &[0.25, 0.5, 1.0], y0, 400)?;
        println!("{alpha:5} {nu:7.0e} {:8.4} {:10.3e} {:9.2e}", k.theta0, k.prefactor, k.mismatch);
    }

    let setup = SemigroupSetup::default();
    let start = std::time::Instant::now();
    let audit = semigroup_audit(&setup)?;
    println!(
        "\nsemigroup spread {:.3}, trace spread {:.3} ({} rows, {:.1?})",
        audit.semigroup_spread,
        audit.trace_spread,
        audit.rows.len(),
        start.elapsed()
    );

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let dom = PencilDomain::new(0.5, 0.25, 0.25)?;
    let alg = algebra_audit(&mut rng, &dom, 0.5, 100)?;
    println!("algebra: worst ratio {:.4} over {} pairs", alg.worst_ratio, alg.pairs);
    Ok(())
}
