use exodisk::biot_savart::BiotSavart;
use exodisk::initial::{analytic_data, compatible_data};
use exodisk::solver::{run_simulation, run_with, Mode, RunStatus, Stepper};
use exodisk::spectral::radial_derivative;
use exodisk::{build_grid, Error, RadialGrid, SolverConfig, SpectralField};
use num_complex::Complex64 as C;

fn small_config(nu: f64) -> SolverConfig {
    SolverConfig { nu, n_theta: 32, n_r: 160, t_final: 0.1, snapshot_every: 0.05, ..SolverConfig::default() }
}

fn axisymmetric(g: &RadialGrid, n_theta: usize, f: impl Fn(f64) -> f64) -> SpectralField {
    let mut w = SpectralField::zeros(n_theta, g.len());
    for (v, &r) in w.mode_mut(0).iter_mut().zip(&g.r) {
        *v = C::new(f(r), 0.0);
    }
    w
}

#[test]
fn advection_vanishes_without_gradients_or_for_swirl() {
    let g = RadialGrid::stretched(10.0, 128, 5e-3, None).unwrap();
    let st = Stepper::new(&g, 16, 1e-2, Mode::NavierStokes, 0.5, 1e-2).unwrap();

    let swirl = axisymmetric(&g, 16, |r| (-(r - 2.0).powi(2)).exp());
    let s = st.state(swirl, 0.0).unwrap();
    assert!(st.advection_term(&s.omega, &s.flow).unwrap().term.max_abs() < 1e-12);

    let flat = axisymmetric(&g, 16, |_| 1.0);
    let mut other = analytic_data(&SolverConfig { n_theta: 16, ..SolverConfig::default() }, &g);
    other.enforce_hermitian();
    let flow = st.bs.flow(&other, exodisk::biot_savart::Wall::Derivative).unwrap();
    let adv = st.advection_term(&flat, &flow).unwrap();
    assert!(adv.term.max_abs() < 1e-10, "{}", adv.term.max_abs());
}

#[test]
fn two_mode_advection_matches_mode_convolution() {
    let g = RadialGrid::stretched(10.0, 128, 5e-3, None).unwrap();
    let n_theta = 32;
    let st = Stepper::new(&g, n_theta, 1e-2, Mode::NavierStokes, 0.5, 1e-2).unwrap();
    let mut w = SpectralField::zeros(n_theta, g.len());
    for (j, &r) in g.r.iter().enumerate() {
        let x = r - 1.0;
        w.mode_mut(1)[j] = C::new(x * x * (-x).exp(), 0.3 * x * (-2.0 * x).exp());
        w.mode_mut(2)[j] = C::new(0.5 * x * x * (-1.5 * x).exp(), 0.0);
    }
    w.enforce_hermitian();
    let s = st.state(w.clone(), 0.0).unwrap();
    let adv = st.advection_term(&s.omega, &s.flow).unwrap().term;

    let dr = radial_derivative(&w, &g, 1).unwrap();
    let (ur, ut) = (&s.flow.u_r, &s.flow.u_theta);
    let last = g.len() - 1;
    let mut worst = 0.0f64;
    for n in -4i64..=4 {
        for j in 0..last {
            let mut sum = C::new(0.0, 0.0);
            for p in -2i64..=2 {
                let q = n - p;
                if q.abs() > 2 {
                    continue;
                }
                let iq = C::new(0.0, q as f64);
                sum -= ur.mode(p)[j] * dr.mode(q)[j] + ut.mode(p)[j] * iq * w.mode(q)[j] / g.r[j];
            }
            worst = worst.max((sum - adv.mode(n)[j]).norm());
        }
    }
    assert!(worst < 1e-10, "convolution mismatch {worst:e}");
}

#[test]
fn zero_data_stays_zero() {
    let config = small_config(1e-2);
    let grid = build_grid(&config).unwrap();
    let zero = SpectralField::zeros(config.n_theta, grid.len());
    for mode in [Mode::NavierStokes, Mode::Euler] {
        let traj = run_simulation(&config, &zero, mode).unwrap();
        assert!(traj.snapshots.iter().all(|s| s.field.max_abs() == 0.0));
        assert!(traj.records.iter().all(|r| r.energy == 0.0 && r.boundary_sup == 0.0));
    }
}

#[test]
fn euler_keeps_axisymmetric_data() {
    let g = RadialGrid::stretched(10.0, 128, 5e-3, None).unwrap();
    let st = Stepper::new(&g, 16, 0.0, Mode::Euler, 0.5, 1e-2).unwrap();
    let w = axisymmetric(&g, 16, |r| (r - 1.0).powi(2) * (-(r - 1.0)).exp());
    let mut s = st.state(w.clone(), 0.0).unwrap();
    for _ in 0..20 {
        s = st.step(&s, 1e-3).unwrap();
    }
    let diff = s.omega.raw().iter().zip(w.raw()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(diff < 1e-12, "{diff:e}");
}

/// Crank–Nicolson for ω_t = ν(ω_rr + ω_r/r), ω_r(1) = 0, ω(R) = 0 on a uniform grid.
fn radial_heat_oracle(f: impl Fn(f64) -> f64, r_max: f64, n: usize, nu: f64, t: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (r_max - 1.0) / (n - 1) as f64;
    let r: Vec<f64> = (0..n).map(|j| 1.0 + h * j as f64).collect();
    let mut w: Vec<f64> = r.iter().map(|&x| f(x)).collect();
    let dt = t / steps as f64;
    // operator rows: (lo, di, up); ghost point at j = 0 gives 2/h² (w1 - w0)
    let op = |j: usize| -> (f64, f64, f64) {
        if j == 0 {
            (0.0, -2.0 / (h * h), 2.0 / (h * h))
        } else {
            let a = 1.0 / (h * h);
            let b = 1.0 / (2.0 * h * r[j]);
            (a - b, -2.0 * a, a + b)
        }
    };
    let m = n - 1;
    for _ in 0..steps {
        let mut lo = vec![0.0; m];
        let mut di = vec![0.0; m];
        let mut up = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for j in 0..m {
            let (a, b, c) = op(j);
            let k = 0.5 * dt * nu;
            lo[j] = -k * a;
            di[j] = 1.0 - k * b;
            up[j] = -k * c;
            let left = if j > 0 { w[j - 1] } else { 0.0 };
            rhs[j] = w[j] + k * (a * left + b * w[j] + c * w[j + 1]);
        }
        // Thomas algorithm
        for j in 1..m {
            let q = lo[j] / di[j - 1];
            di[j] -= q * up[j - 1];
            rhs[j] -= q * rhs[j - 1];
        }
        w[m - 1] = rhs[m - 1] / di[m - 1];
        for j in (0..m - 1).rev() {
            w[j] = (rhs[j] - up[j] * w[j + 1]) / di[j];
        }
        w[m] = 0.0;
    }
    (r, w)
}

#[test]
fn axisymmetric_diffusion_matches_radial_heat_oracle() {
    let nu = 1e-2;
    let r_max = 8.0;
    let g = RadialGrid::stretched(r_max, 256, 5e-3, None).unwrap();
    let st = Stepper::new(&g, 8, nu, Mode::NavierStokes, 0.5, 1.0).unwrap();
    let f = |r: f64| (r - 1.0).powi(2) * (-2.0 * (r - 1.0).powi(2)).exp();
    let mut s = st.state(axisymmetric(&g, 8, f), 0.0).unwrap();
    let dt = 1e-2;
    for _ in 0..100 {
        s = st.step(&s, dt).unwrap();
    }
    let (ro, wo) = radial_heat_oracle(f, r_max, 8 * 256, nu, 1.0, 2000);
    let scale = wo.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for (j, &r) in g.r.iter().enumerate() {
        let o = exodisk::quadrature::interpolate(&ro, &wo, r);
        worst = worst.max((s.omega.mode(0)[j].re - o).abs());
    }
    assert!(worst / scale < 1e-4, "relative error {:e}", worst / scale);
}

#[test]
fn energy_balance_wall_slip_and_boundary_row() {
    let config = small_config(1e-2);
    let grid = build_grid(&config).unwrap();
    let bs = BiotSavart::new(&grid, config.n_theta / 2).unwrap();
    let omega0 = compatible_data(&config, &grid, &bs).unwrap();
    let traj = run_simulation(&config, &omega0, Mode::NavierStokes).unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    assert!(traj.energy_balance_residual() <= 1e-3, "{:e}", traj.energy_balance_residual());
    for s in &traj.stats {
        assert!(s.wall_slip_ratio <= 1e-6, "slip {:e} at t = {}", s.wall_slip_ratio, s.t);
        assert!(s.bc_residual <= 1e-8, "boundary row residual {:e}", s.bc_residual);
        assert!(s.bound_ratio <= 1.0 + 1e-6);
    }
    assert!(traj.records.windows(2).all(|p| p[1].t > p[0].t));
    assert!(traj.records.iter().all(|r| r.is_finite()));
    let last = traj.final_state().unwrap();
    assert!((last.time - config.t_final).abs() < 1e-12);
}

#[test]
fn euler_enstrophy_drift_is_small() {
    let config = SolverConfig { nu: 0.0, nu_grid: Some(1e-3), n_r: 256, ..SolverConfig::default() };
    let grid = build_grid(&config).unwrap();
    let bs = BiotSavart::new(&grid, config.n_theta / 2).unwrap();
    let omega0 = compatible_data(&config, &grid, &bs).unwrap();
    let traj = run_simulation(&config, &omega0, Mode::Euler).unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    assert!(traj.enstrophy_drift() <= 5e-3, "{:e}", traj.enstrophy_drift());
}

#[test]
fn step_refinement_converges_at_second_order() {
    let config = small_config(1e-2);
    let grid = build_grid(&config).unwrap();
    let st = Stepper::new(&grid, config.n_theta, config.nu, Mode::NavierStokes, 0.5, 1.0).unwrap();
    let omega0 = compatible_data(&config, &grid, &st.bs).unwrap();
    let t = 0.005;
    let solve = |steps: usize| {
        let mut s = st.state(omega0.clone(), 0.0).unwrap();
        for _ in 0..steps {
            s = st.step(&s, t / steps as f64).unwrap();
        }
        s.omega
    };
    let (a, b, c) = (solve(8), solve(16), solve(32));
    let diff = |x: &SpectralField, y: &SpectralField| x.raw().iter().zip(y.raw()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    let order = (diff(&a, &b) / diff(&b, &c)).log2();
    assert!(order >= 1.8, "observed order {order}");
}

#[test]
fn incompatible_data_needs_projection() {
    let config = SolverConfig { project: false, ..small_config(1e-2) };
    let grid = build_grid(&config).unwrap();
    let omega0 = analytic_data(&config, &grid);
    assert!(matches!(run_simulation(&config, &omega0, Mode::NavierStokes), Err(Error::Incompatible(_))));

    let st = Stepper::from_config(&SolverConfig { project: true, ..config.clone() }, Mode::NavierStokes).unwrap();
    let traj = run_with(&st, &SolverConfig { project: true, ..config }, &omega0).unwrap();
    assert!(traj.projected);
}

#[test]
fn oversized_step_reports_cfl_bound() {
    let config = small_config(1e-2);
    let grid = build_grid(&config).unwrap();
    let st = Stepper::new(&grid, config.n_theta, config.nu, Mode::NavierStokes, 0.5, 1e-2).unwrap();
    let omega0 = compatible_data(&config, &grid, &st.bs).unwrap();
    let s = st.state(omega0, 0.0).unwrap();
    match st.step(&s, 1.0) {
        Err(Error::Cfl { dt, suggested }) => assert!(suggested < dt),
        other => panic!("expected a CFL error, got {other:?}"),
    }
}

#[test]
fn wrong_shape_is_rejected() {
    let config = small_config(1e-2);
    let bad = SpectralField::zeros(config.n_theta, 7);
    assert!(matches!(run_simulation(&config, &bad, Mode::NavierStokes), Err(Error::Shape { .. })));
}
