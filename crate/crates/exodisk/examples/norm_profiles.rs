//! Pencil-domain norms of closed-form functions and the real-trace proxy
//! of a gridded field, with the Cauchy-derivative and intermediate-region
//! ratios over a small test family.
//!
//! cargo run --release --example norm_profiles

use exodisk::norms::{ClosedForm, NormContext, PencilDomain, Which};
use exodisk::rescaled::map_to_rescaled;
use exodisk::{RadialGrid, SpectralField};
use num_complex::Complex64 as C;

fn main() -> exodisk::Result<()> {
    let (delta0, eps0, lambda) = (0.5, 0.25, 0.5);
    let (rho, rho_in) = (0.4, 0.2);
    let outer = PencilDomain::new(delta0, rho, eps0)?;
    let inner = PencilDomain::new(delta0, rho_in, eps0)?;
    println!("kappa  n   |f|_L1     |f|_Linf   Cauchy C   D^2 ratio");
    for kappa in [0.5, 1.0, 2.0] {
        for n in [0i64, 1, 3] {
            let f = ClosedForm { lambda, modes: vec![(n, vec![(C::new(1.0, 0.0), C::new(kappa, 0.0))])] };
            let l1 = f.norm(&outer, Which::L1)?;
            let cauchy = (rho - rho_in) * f.derivative_norm(&inner)? / l1;
            let mid = f.real_derivative_sup(2, 0.25 * delta0, delta0) / l1;
            println!("{kappa:5} {n:2} {l1:10.4e} {:10.4e} {cauchy:10.4} {mid:10.4}", f.norm(&outer, Which::Linf)?);
        }
    }

    let g = RadialGrid::stretched(10.0, 512, 1e-3, None)?;
    let mut omega = SpectralField::zeros(16, g.len());
    for n in 0..=3i64 {
        for (v, &r) in omega.mode_mut(n).iter_mut().zip(&g.r) {
            *v = C::from_polar((-(n as f64)).exp(), n as f64) * ((r - 1.0).powi(2) * (-2.0 * (r - 1.0)).exp());
        }
    }
    omega.enforce_hermitian();
    let w = map_to_rescaled(&omega, &g, lambda)?;
    let ctx = NormContext::for_field(&w, delta0, 0.5, eps0)?;
    println!("\nreal-trace proxy of a gridded field:");
    for i in 1..=4 {
        let r = ctx.report(&w, 0.0, 0.1 * i as f64, 1)?;
        println!("rho {:.1}: L1 {:.4e}  W^1 {:.4e}  H^1 {:.4e}  tail {:.4e}", r.rho, r.l1, r.w_k, r.h_k, r.tail);
    }
    Ok(())
}
