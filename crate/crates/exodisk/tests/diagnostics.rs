use std::f64::consts::{PI, TAU};

use exodisk::biot_savart::Flow;
use exodisk::diagnostics::{
    boundary_sup_trace, inequality_audit, kato_integrand, l2_velocity_diff, scaling_fit, write_diagnostics_csv,
    AuditStatus, DiagnosticsRecord, KatoStrip, CSV_HEADER,
};
use exodisk::solver::{Mode, Stepper};
use exodisk::{RadialGrid, SolverConfig, SpectralField, ThetaTransform};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> RadialGrid {
    RadialGrid::stretched(10.0, 400, 1e-3, None).unwrap()
}

fn axisymmetric(g: &RadialGrid, n_theta: usize, f: impl Fn(f64) -> f64) -> SpectralField {
    let mut w = SpectralField::zeros(n_theta, g.len());
    for (v, &r) in w.mode_mut(0).iter_mut().zip(&g.r) {
        *v = C::new(f(r), 0.0);
    }
    w
}

fn random_field(rng: &mut impl Rng, n_theta: usize, n_r: usize) -> SpectralField {
    let mut w = SpectralField::zeros(n_theta, n_r);
    for n in 0..=(n_theta / 3) as i64 {
        for v in w.mode_mut(n) {
            *v = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    w.enforce_hermitian();
    w
}

#[test]
fn boundary_trace_examples() {
    let fft = ThetaTransform::new(16).unwrap();
    assert_eq!(boundary_sup_trace(&SpectralField::zeros(16, 5), &fft), 0.0);

    let mut w = SpectralField::zeros(16, 5);
    w.mode_mut(1)[0] = C::new(0.75, 0.0);
    w.enforce_hermitian();
    assert!((boundary_sup_trace(&w, &fft) - 1.5).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w = random_field(&mut rng, 16, 5);
    let phys = fft.inverse(&w).unwrap();
    let direct = (0..16).map(|k| phys.data[k * 5].abs()).fold(0.0, f64::max);
    assert!((boundary_sup_trace(&w, &fft) - direct).abs() < 1e-10);
}

fn swirl_flow(g: &RadialGrid, n_theta: usize, k: f64) -> Flow {
    let zero = SpectralField::zeros(n_theta, g.len());
    Flow {
        psi: zero.clone(),
        psi_fv: zero.clone(),
        u_r: zero,
        u_theta: axisymmetric(g, n_theta, |r| k * (1.0 / r - r.powi(-3))),
        bound_ratio: 0.0,
    }
}

#[test]
fn kato_integrand_matches_closed_form_strip_integral() {
    let g = grid();
    let (k, nu) = (1.5, 1e-2);
    let strip = KatoStrip::new(&g, 1.0, nu);
    assert!(!strip.subcell);
    let got = kato_integrand(&g, &swirl_flow(&g, 8, k), &strip, nu);
    let prim = |r: f64| -r.powi(-2) + 2.0 * r.powi(-4) - 5.0 / 3.0 * r.powi(-6);
    let exact = nu * TAU * k * k * (prim(1.0 + nu) - prim(1.0));
    assert!((got - exact).abs() / exact < 1e-4, "{got} vs {exact}");

    let zero = Flow { u_theta: SpectralField::zeros(8, g.len()), ..swirl_flow(&g, 8, k) };
    assert_eq!(kato_integrand(&g, &zero, &strip, nu), 0.0);
}

#[test]
fn thin_kato_strip_is_flagged() {
    let g = RadialGrid::stretched(10.0, 64, 1e-2, None).unwrap();
    let strip = KatoStrip::new(&g, 1.0, 1e-4);
    assert!(strip.subcell);
    let v = kato_integrand(&g, &swirl_flow(&g, 8, 1.0), &strip, 1e-4);
    assert!(v.is_finite() && v > 0.0);
}

#[test]
fn scaling_fit_examples() {
    let nus: [f64; 4] = [1e-2, 3e-3, 1e-3, 3e-4];
    let exact: Vec<_> = nus.iter().map(|&n| (n, n.powf(-0.5))).collect();
    let fit = scaling_fit(&exact).unwrap();
    assert!((fit.exponent + 0.5).abs() < 1e-12 && fit.stderr < 1e-12);

    let flat: Vec<_> = nus.iter().map(|&n| (n, 3.0)).collect();
    assert!(scaling_fit(&flat).unwrap().exponent.abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noisy: Vec<_> = nus.iter().map(|&n| (n, n.powf(-0.5) * (1.0 + rng.gen_range(-0.05..0.05)))).collect();
    assert!((scaling_fit(&noisy).unwrap().exponent + 0.5).abs() < 0.05);

    assert!(scaling_fit(&[(1e-2, 1.0), (1e-3, 0.0), (1e-4, 1.0)]).is_err());
    assert!(scaling_fit(&exact[..2]).is_err());
}

#[test]
fn l2_difference_examples() {
    let g = grid();
    let z = SpectralField::zeros(8, g.len());
    let ut = axisymmetric(&g, 8, |r| 1.0 / r);
    assert_eq!(l2_velocity_diff(&g, (&z, &ut), (&z, &ut), 5.0).unwrap(), 0.0);
    let got = l2_velocity_diff(&g, (&z, &ut), (&z, &z), 5.0).unwrap();
    let exact = (TAU * 5.0f64.ln()).sqrt();
    assert!((got - exact).abs() < 1e-6 * exact, "{got} vs {exact}");
    let short = SpectralField::zeros(8, 3);
    assert!(l2_velocity_diff(&g, (&z, &short), (&z, &z), 5.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn l2_difference_obeys_triangle_inequality(seed in 0u64..1000) {
        let g = RadialGrid::stretched(10.0, 64, 1e-2, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<_> = (0..6).map(|_| random_field(&mut rng, 8, g.len())).collect();
        let d = |i: usize, j: usize| l2_velocity_diff(&g, (&f[2 * i], &f[2 * i + 1]), (&f[2 * j], &f[2 * j + 1]), 5.0).unwrap();
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
    }
}

#[test]
fn audit_of_zero_state_is_skipped() {
    let config = SolverConfig { n_r: 128, ..SolverConfig::default() };
    let st = Stepper::from_config(&config, Mode::NavierStokes).unwrap();
    let zero = SpectralField::zeros(config.n_theta, st.grid().len());
    let rows = inequality_audit(&st, &zero, &config).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.status == AuditStatus::Skipped));
}

#[test]
fn pointwise_audit_on_inverse_fourth_power() {
    let config = SolverConfig { n_r: 512, r_max: 20.0, ..SolverConfig::default() };
    let g = RadialGrid::stretched(20.0, 512, 1e-3, None).unwrap();
    let st = Stepper::new(&g, config.n_theta, 1e-3, Mode::NavierStokes, 0.5, 1e-2).unwrap();
    let mut w = SpectralField::zeros(config.n_theta, g.len());
    for (v, &r) in w.mode_mut(1).iter_mut().zip(&g.r) {
        *v = C::new(r.powi(-4), 0.0);
    }
    w.enforce_hermitian();
    let rows = inequality_audit(&st, &w, &config).unwrap();
    let pw = rows.iter().find(|r| r.name == "pointwise_biot_savart").unwrap();
    assert_eq!(pw.status, AuditStatus::Pass);
    assert!((pw.ratio - 4.0 / 27.0).abs() < 2e-3, "{}", pw.ratio);
    assert!(rows.iter().filter(|r| !r.constant_one).all(|r| r.status == AuditStatus::Recorded));
}

#[test]
fn csv_has_documented_columns() {
    let rec = DiagnosticsRecord {
        t: 0.5,
        boundary_sup: 1.0,
        energy: 2.0,
        enstrophy: 3.0,
        kato_integrand: 4.0,
        e_energy: 5.0,
        d_dissipation: 6.0,
        a_k: 7.0,
        a_beta: PI,
        kato_subcell: false,
        expired: false,
    };
    let mut buf = Vec::new();
    write_diagnostics_csv(&mut buf, &[rec]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,boundary_sup,energy,enstrophy,kato_integrand,E_energy,D_dissipation,A_k,A_beta");
    assert_eq!(CSV_HEADER.split(',').count(), 9);
    let vals: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(vals.len(), 9);
    assert!((vals[8] - PI).abs() < 1e-11);
}
