use exodisk::norms::{
    algebra_audit, contour_norm, cutoff, field_norm_suite, ClosedForm, EnergyFunctionals, NormContext, PencilDomain,
    Which, MAX_K,
};
use exodisk::rescaled::RescaledField;
use exodisk::SpectralField;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DELTA0: f64 = 0.5;
const RHO: f64 = 0.3;
const EPS0: f64 = 0.25;

fn uniform_y(n: usize, y_max: f64) -> Vec<f64> {
    (0..n).map(|j| y_max * j as f64 / (n - 1) as f64).collect()
}

fn field_on(y: &[f64], lambda: f64, n_theta: usize, modes: &[(i64, &dyn Fn(f64) -> C)]) -> RescaledField {
    let mut f = SpectralField::zeros(n_theta, y.len());
    for (n, g) in modes {
        for (v, &yy) in f.mode_mut(*n).iter_mut().zip(y) {
            *v = g(yy);
        }
    }
    RescaledField { lambda, y: y.to_vec(), field: f }
}

#[test]
fn contour_norm_of_zero_and_one() {
    let dom = PencilDomain::new(DELTA0, RHO, EPS0).unwrap();
    assert_eq!(contour_norm(|_| C::new(0.0, 0.0), 1.0, &dom, Which::L1).unwrap(), 0.0);
    let one = contour_norm(|_| C::new(1.0, 0.0), 0.0, &dom, Which::L1).unwrap();
    let exact = 2.0 * (DELTA0 * (1.0 + RHO * RHO).sqrt() + RHO * 2f64.sqrt());
    assert!((one - exact).abs() < 1e-12, "{one} vs {exact}");
    assert_eq!(contour_norm(|_| C::new(1.0, 0.0), 0.0, &dom, Which::Linf).unwrap(), 1.0);
}

#[test]
fn contour_paths_stay_in_the_pencil() {
    let dom = PencilDomain::new(DELTA0, RHO, EPS0).unwrap();
    for &eta in &dom.eta {
        let c = dom.contour(eta);
        assert_eq!(c[0].y, C::new(0.0, 0.0));
        assert!((c.last().unwrap().y - C::new(DELTA0 + eta, 0.0)).norm() < 1e-15);
        for node in &c {
            let y = node.y;
            assert!(y.re >= 0.0 && y.re <= DELTA0 + eta + 1e-15);
            let bound = if y.re < DELTA0 - 1e-12 { eta * y.re } else { (eta * DELTA0).max(DELTA0 + eta - y.re) };
            assert!(y.im.abs() <= bound + 1e-12, "{y} outside Ω at η = {eta}");
        }
    }
}

#[test]
fn exponential_norm_converges_under_path_refinement() {
    let f = |y: C| (-y).exp();
    let coarse = PencilDomain::new(DELTA0, RHO, EPS0).unwrap();
    let fine = coarse.clone().with_points(2049);
    let a = contour_norm(f, 0.5, &coarse, Which::L1).unwrap();
    let b = contour_norm(f, 0.5, &fine, Which::L1).unwrap();
    assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
}

#[test]
fn non_finite_values_name_the_contour_point() {
    let dom = PencilDomain::new(DELTA0, RHO, EPS0).unwrap();
    let err = contour_norm(|y| C::new(1.0, 0.0) / y, 0.0, &dom, Which::L1).unwrap_err();
    assert!(err.to_string().contains("y ="), "{err}");
}

#[test]
fn algebra_inequality_holds_on_random_pairs() {
    let dom = PencilDomain::new(DELTA0, RHO, EPS0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let audit = algebra_audit(&mut rng, &dom, 0.5, 100).unwrap();
    assert_eq!(audit.pairs, 100);
    assert!(audit.worst_ratio <= 1.0, "{}", audit.worst_ratio);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn algebra_inequality_holds_on_the_real_trace(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = uniform_y(801, 8.0);
        let lambda = 0.5;
        let f = ClosedForm::random(&mut rng, lambda, 2, 2);
        let g = ClosedForm::random(&mut rng, lambda, 2, 2);
        let fg = f.product(&g);
        let sample = |h: &ClosedForm| {
            let mut s = SpectralField::zeros(16, y.len());
            for (n, t) in &h.modes {
                for (v, &yy) in s.mode_mut(*n).iter_mut().zip(&y) {
                    *v += ClosedForm::eval(t, C::new(yy, 0.0));
                }
            }
            RescaledField { lambda, y: y.clone(), field: s }
        };
        let ctx = NormContext::new(&y, lambda, DELTA0, 0.5, EPS0).unwrap();
        let (wf, wg, wfg) = (sample(&f), sample(&g), sample(&fg));
        let lhs = ctx.w_norm(&wfg, RHO, 0).unwrap();
        let rhs = ctx.linf(&wf, RHO) * ctx.w_norm(&wg, RHO, 0).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-8), "{} > {}", lhs, rhs);
    }
}

/// Largest Cauchy ratio `(ρ-ρ')(‖∂_x f‖ + ‖y∂_y f‖)_{ρ'} / ‖f‖_ρ` over a random family.
fn cauchy_constant(rng: &mut impl Rng, count: usize) -> f64 {
    let outer = PencilDomain::new(DELTA0, 0.4, EPS0).unwrap();
    let inner = PencilDomain::new(DELTA0, 0.2, EPS0).unwrap();
    (0..count)
        .map(|_| {
            let f = ClosedForm::random(rng, 0.5, 3, 3);
            0.2 * f.derivative_norm(&inner).unwrap() / f.norm(&outer, Which::L1).unwrap()
        })
        .fold(0.0, f64::max)
}

#[test]
fn cauchy_constant_is_stable_across_families() {
    let fits: Vec<f64> = (0..4).map(|s| cauchy_constant(&mut ChaCha8Rng::seed_from_u64(100 + s), 20)).collect();
    let hi = fits.iter().cloned().fold(0.0, f64::max);
    let lo = fits.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(lo > 0.0 && hi / lo <= 2.0, "{fits:?}");
}

#[test]
fn intermediate_region_ratio_is_bounded() {
    let dom = PencilDomain::new(DELTA0, 0.4, EPS0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let f = ClosedForm::random(&mut rng, 0.5, 2, 2);
        let l1 = f.norm(&dom, Which::L1).unwrap();
        for k in 0..=2 {
            let r = f.real_derivative_sup(k, 0.25 * DELTA0, DELTA0) / l1;
            assert!(r.is_finite() && r < 1e3, "k = {k}: {r}");
        }
    }
}

#[test]
fn proxy_norms_of_simple_fields() {
    let y = uniform_y(2001, 10.0);
    let lambda = 0.5;
    let ctx = NormContext::new(&y, lambda, DELTA0, 0.5, EPS0).unwrap();
    let zero = field_on(&y, lambda, 8, &[]);
    let rep = field_norm_suite(&zero, &ctx, RHO, 2).unwrap();
    assert_eq!(rep.l1 + rep.linf + rep.w_k + rep.w_k1 + rep.h_k + rep.tail, 0.0);
    assert!(rep.proxy);

    let n = 2i64;
    let alpha = lambda * n as f64;
    let w = field_on(&y, lambda, 8, &[(n, &|yy: f64| C::new((-yy).exp(), 0.0))]);
    let top = DELTA0 + RHO;
    let a = EPS0 * alpha;
    let exact = (a * top).exp() * (1.0 - (-(1.0 + a) * top).exp()) / (1.0 + a);
    let l1 = ctx.w_norm(&w, RHO, 0).unwrap();
    assert!((l1 - exact).abs() < 1e-8, "{l1} vs {exact}");

    let v = C::new(0.3, -0.4);
    let b = field_on(&y, lambda, 8, &[(n, &|_| v)]);
    let h0 = ctx.h_norm(&b, RHO, 0);
    assert!((h0 - (EPS0 * top * alpha).exp() * v.norm()).abs() < 1e-14);

    assert!(field_norm_suite(&w, &ctx, RHO, MAX_K + 1).is_err());
}

fn functionals(y: &[f64], nu: f64) -> EnergyFunctionals {
    let ctx = NormContext::new(y, 1.0, DELTA0, 0.5, EPS0).unwrap();
    EnergyFunctionals::new(ctx, nu, 4.0, 0.5, 1).unwrap()
}

#[test]
fn energy_functionals_of_zero_and_near_wall_data() {
    let y = uniform_y(2001, 10.0);
    let mut ef = functionals(&y, 1e-3);
    let zero = field_on(&y, 1.0, 8, &[]);
    let f = ef.update(&zero, 0.0).unwrap();
    assert_eq!(f.energy + f.dissipation + f.a_k + f.tail3 + ef.a_beta(), 0.0);

    let bump = |yy: f64| {
        let s = yy / (DELTA0 / 8.0);
        C::new(if s < 1.0 { (s * (1.0 - s)).powi(8) } else { 0.0 }, 0.0)
    };
    let near = field_on(&y, 1.0, 8, &[(0, &bump), (1, &bump)]);
    let (e, d) = ef.energy_dissipation(&near);
    assert!(e.abs() < 1e-14 && d.abs() < 1e-14, "{e:e} {d:e}");
}

#[test]
fn energy_of_gaussian_matches_quadrature() {
    let y = uniform_y(1001, 10.0);
    let ef = functionals(&y, 1e-3);
    let s = 0.5;
    let w = field_on(&y, 1.0, 8, &[(0, &|yy: f64| C::new((-(yy - 1.0).powi(2) / (2.0 * s * s)).exp(), 0.0))]);
    let (e, _) = ef.energy_dissipation(&w);

    // derivatives through probabilists' Hermite polynomials
    let he = |n: usize, x: f64| -> f64 {
        let (mut a, mut b) = (1.0, x);
        if n == 0 {
            return a;
        }
        for k in 1..n {
            let c = x * b - k as f64 * a;
            a = b;
            b = c;
        }
        b
    };
    let deriv = |j: usize, yy: f64| {
        let x = (yy - 1.0) / s;
        (-1f64).powi(j as i32) * he(j, x) * (-0.5 * x * x).exp() / s.powi(j as i32)
    };
    let m = 200_000;
    let h = 10.0 / m as f64;
    let mut acc = 0.0;
    for k in 0..=m {
        let yy = h * k as f64;
        let wt = if k == 0 || k == m { 0.5 } else { 1.0 };
        let eta = cutoff(yy, DELTA0).0;
        acc += wt * eta * (0..=5).map(|j| deriv(j, yy).powi(2)).sum::<f64>();
    }
    let exact = std::f64::consts::TAU * 0.5 * acc * h;
    assert!((e - exact).abs() < 1e-6 * exact, "{e} vs {exact}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn dissipation_is_nonnegative(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = uniform_y(401, 8.0);
        let ef = functionals(&y, 1e-2);
        let c: Vec<(f64, f64)> = (0..3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.3..3.0))).collect();
        let prof = move |yy: f64| C::new(c.iter().map(|(a, k)| a * (-k * yy).exp()).sum(), 0.0);
        let w = field_on(&y, 1.0, 8, &[(0, &prof), (2, &prof)]);
        let (e, d) = ef.energy_dissipation(&w);
        prop_assert!(e >= 0.0 && d >= 0.0);
    }
}

#[test]
fn expired_radius_is_flagged_not_an_error() {
    let y = uniform_y(801, 8.0);
    let mut ef = functionals(&y, 1e-3);
    let w = field_on(&y, 1.0, 8, &[(1, &|yy: f64| C::new(yy * (-yy).exp(), 0.0))]);
    let live = ef.update(&w, 0.0).unwrap();
    assert!(!live.expired && live.a_k > 0.0);
    let a_beta = ef.a_beta();
    let late = ef.update(&w, 1.0).unwrap();
    assert!(late.expired && late.a_k == 0.0);
    assert_eq!(ef.a_beta(), a_beta);
    assert!(NormContext::new(&y, 1.0, DELTA0, 0.5, EPS0)
        .and_then(|c| EnergyFunctionals::new(c, 1e-3, 4.0, 0.5, 0))
        .is_err());
}
