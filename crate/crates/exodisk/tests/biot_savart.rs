use exodisk::biot_savart::{
    bump, dtn_apply, elliptic_residual, stream_mode, velocity_from_stream, Backend, BiotSavart,
};
use exodisk::{build_grid, RadialGrid, SolverConfig, SpectralField};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn grid() -> RadialGrid {
    build_grid(&SolverConfig::default()).unwrap()
}

fn profile(g: &RadialGrid, f: impl Fn(f64) -> f64) -> Vec<C> {
    g.r.iter().map(|&r| C::new(f(r), 0.0)).collect()
}

/// ψ₁ for ω₁ = s⁻⁴ restricted to [1, R]: the untruncated closed form plus
/// the contribution removed with the tail beyond R.
fn psi1_truncated(r: f64, big_r: f64) -> f64 {
    (r.powi(-2) - 1.0 / r) / 3.0 + (r - 1.0 / r) / (6.0 * big_r.powi(3))
}

fn rel_max(a: &[C], b: impl Fn(usize) -> f64) -> f64 {
    let scale = (0..a.len()).map(&b).map(f64::abs).fold(0.0, f64::max);
    (0..a.len()).map(|j| (a[j].re - b(j)).abs() + a[j].im.abs()).fold(0.0, f64::max) / scale
}

#[test]
fn zero_vorticity_gives_zero_flow() {
    let g = grid();
    for backend in [Backend::Direct, Backend::Kernel] {
        for n in [0, 1, 5] {
            let s = stream_mode(&vec![C::new(0.0, 0.0); g.len()], n, &g, backend).unwrap();
            assert!(s.psi.iter().chain(&s.u_r).chain(&s.u_theta).all(|c| c.norm() == 0.0));
        }
    }
}

#[test]
fn axisymmetric_swirl_matches_closed_form() {
    let g = grid();
    let w = profile(&g, |s| 4.0 * s.powi(-4));
    for backend in [Backend::Direct, Backend::Kernel] {
        let s = stream_mode(&w, 0, &g, backend).unwrap();
        let err = rel_max(&s.u_theta, |j| {
            let r = g.r[j];
            -2.0 / r + 2.0 / r.powi(3)
        });
        assert!(err < 1e-8, "{backend:?}: {err}");
        assert!(s.u_r.iter().all(|c| c.norm() == 0.0));
    }
}

#[test]
fn dipole_mode_matches_closed_form_on_both_backends() {
    let g = grid();
    let w = profile(&g, |s| s.powi(-4));
    let direct = stream_mode(&w, 1, &g, Backend::Direct).unwrap();
    let kernel = stream_mode(&w, 1, &g, Backend::Kernel).unwrap();
    let exact = |j: usize| psi1_truncated(g.r[j], g.r_max);
    assert!(rel_max(&direct.psi, exact) < 1e-6);
    assert!(rel_max(&kernel.psi, exact) < 1e-6);
    assert_eq!(direct.psi[0], C::new(0.0, 0.0));
    assert!(elliptic_residual(&g, &direct.psi, &w, 1) < 1e-8);
    assert!(elliptic_residual(&g, &kernel.psi, &w, 1) < 1e-4);
    let slip = (1.0 - g.r_max.powi(-3)) / 3.0;
    assert!((kernel.slip.re - slip).abs() < 1e-8);
    assert!((direct.slip.re - slip).abs() < 1e-6);
}

#[test]
fn velocity_from_closed_form_stream() {
    let g = grid();
    let mut psi = SpectralField::zeros(4, g.len());
    for (j, &r) in g.r.iter().enumerate() {
        let v = C::new((r.powi(-2) - 1.0 / r) / 3.0, 0.0);
        psi.mode_mut(1)[j] = v;
        psi.mode_mut(-1)[j] = v;
        psi.mode_mut(0)[j] = C::new((r - 1.0).powi(2), 0.0);
    }
    let (ur, ut) = velocity_from_stream(&psi, &g).unwrap();
    assert!((ut.mode(1)[0].re - 1.0 / 3.0).abs() < 1e-7);
    assert!(ur.mode(1)[0].norm() == 0.0);
    assert!(ur.mode(0).iter().all(|c| c.norm() == 0.0));
}

#[test]
fn decay_beyond_support_follows_harmonic_rate() {
    let g = grid();
    let w = profile(&g, |s| bump(s, 1.5, 4.0));
    for n in 1..=3i64 {
        let s = stream_mode(&w, n, &g, Backend::Direct).unwrap();
        let pts: Vec<(f64, f64)> = g
            .r
            .iter()
            .zip(&s.psi)
            .filter(|(r, _)| (6.0..=15.0).contains(*r))
            .map(|(r, p)| (r.ln(), p.norm().ln()))
            .collect();
        let k = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / k, a.1 + p.1 / k));
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + n as f64).abs() < 0.05 * n as f64, "n={n} slope {slope}");
    }
}

#[test]
fn dtn_examples() {
    let mut g = vec![C::new(0.0, 0.0); 9];
    g[4 + 3] = C::new(2.0, 0.0);
    g[4] = C::new(5.0, 0.0);
    let out = dtn_apply(&g);
    assert_eq!(out[7], C::new(6.0, 0.0));
    assert_eq!(out[4], C::new(0.0, 0.0));
}

#[test]
fn discrete_dtn_approaches_mode_number() {
    let g = grid();
    let bs = BiotSavart::new(&g, 10).unwrap();
    for n in 1..=10i64 {
        let rel = (bs.discrete_dtn(n) - n as f64).abs() / n as f64;
        assert!(rel < 1e-3, "n={n}: {}", bs.discrete_dtn(n));
    }
}

#[test]
fn boundary_flux_and_defect_examples() {
    let g = grid();
    let bs = BiotSavart::new(&g, 2).unwrap();
    let mut f = SpectralField::zeros(4, g.len());
    f.mode_mut(1).copy_from_slice(&profile(&g, |s| s.powi(-4)));
    f.mode_mut(-1).copy_from_slice(&profile(&g, |s| s.powi(-4)));
    f.mode_mut(0).copy_from_slice(&profile(&g, |s| (-s).exp()));
    let flux = bs.boundary_flux(&f);
    let tail = g.r_max.powi(-3);
    assert!((flux[3].re + (1.0 - tail) / 3.0).abs() < 1e-4);
    assert_eq!(flux[2], C::new(0.0, 0.0));

    let defect = bs.compatibility_defect(&f);
    assert!((defect[3].re - (1.0 - tail) / 3.0).abs() < 1e-4);

    let mut h = SpectralField::zeros(4, g.len());
    let w = profile(&g, |s| s.powi(-4) - 4.0 / 3.0 * s.powi(-5));
    h.mode_mut(1).copy_from_slice(&w);
    h.mode_mut(-1).copy_from_slice(&w);
    assert!(bs.compatibility_defect(&h)[3].norm() < 1e-4);
    assert!(bs.compatibility_defect(&SpectralField::zeros(4, g.len())).iter().all(|c| c.norm() == 0.0));
}

#[test]
fn boundary_flux_agrees_with_direct_solve_on_random_inputs() {
    let g = grid();
    let bs = BiotSavart::new(&g, 4).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.gen_range(1..=4i64);
        let (a, k, c) = (rng.gen_range(-2.0..2.0), rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0));
        let prof = profile(&g, |s| a * (s - 1.0) * (-k * (s - 1.0)).exp() + c * s.powi(-3));
        let mut f = SpectralField::zeros(8, g.len());
        f.mode_mut(n).copy_from_slice(&prof);
        f.enforce_hermitian();
        let flux = bs.boundary_flux(&f)[(4 + n) as usize];
        let direct = bs.mode(&prof, n, Backend::Direct).unwrap();
        // g = ∂_r ψ(1) = -u_θ(1)
        let scale = prof.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!((flux + direct.slip).norm() < 1e-4 * scale.max(direct.slip.norm()), "n={n}: {} vs {}", flux, -direct.slip);
    }
}

#[test]
fn projection_removes_defect_and_circulation() {
    let g = grid();
    let bs = BiotSavart::new(&g, 4).unwrap();
    let mut w = SpectralField::zeros(8, g.len());
    for n in 0..=3i64 {
        let prof = profile(&g, |s| (s - 1.0).powi(2) * (-2.0 * (s - 1.0)).exp() / (1.0 + n as f64));
        w.mode_mut(n).copy_from_slice(&prof);
    }
    w.enforce_hermitian();
    let p = bs.project_compatible(&w, 1.5, 10.0).unwrap();
    assert!(bs.compatibility_defect(&p).iter().all(|c| c.norm() < 1e-13));
    assert!(p.hermitian_defect() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn pointwise_bound_with_constant_one(seed in 0u64..10_000) {
        let g = RadialGrid::stretched(20.0, 200, 0.01, None).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=6i64);
        let c: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(1.0..6.0), rng.gen_range(0.3..3.0)))
            .collect();
        let prof = profile(&g, |s| c.iter().map(|(a, m, k)| a * bump(s, 1.0 + 0.1 * m, 1.0 + m * k)).sum::<f64>());
        let s = stream_mode(&prof, n, &g, Backend::Direct).unwrap();
        let ratio = exodisk::biot_savart::pointwise_ratio(&g, &s, &prof);
        prop_assert!(ratio <= 1.0 + 1e-6, "ratio {}", ratio);
    }
}

#[test]
fn non_finite_input_is_rejected() {
    let g = grid();
    let mut w = vec![C::new(0.0, 0.0); g.len()];
    w[3] = C::new(f64::NAN, 0.0);
    assert!(stream_mode(&w, 2, &g, Backend::Direct).is_err());
}
