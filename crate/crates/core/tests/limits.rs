use ecosim_core::increments::{IncrementLaw, LimitParams, MarginalForm};
use ecosim_core::limitproc::{
    bridge, compose_w2, cov_xx, cov_xy, cov_yy, sample_bm, sample_joint_limit, sample_w1, t_transform, tilde_w1,
    w3_prime,
};
use ecosim_core::stats::{cov_estimate, half_normal_cdf, ks_statistic, mc_estimate, normal_cdf};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PATHS: usize = 10_000;

fn params(table: &[(i64, f64)]) -> LimitParams {
    IncrementLaw::table(table).unwrap().moments().limit_params().unwrap()
}

fn two_point() -> LimitParams {
    params(&[(1, 2.0 / 3.0), (-1, 1.0 / 3.0)])
}

fn within(estimate: f64, target: f64, se: f64, k: f64) -> bool {
    (estimate - target).abs() <= k * se
}

#[test]
fn brownian_motion_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = 256;
    let (mut end, mut mid) = (Vec::new(), Vec::new());
    for _ in 0..PATHS {
        let w = sample_bm(m, &mut rng).unwrap();
        assert_eq!(w.values()[0], 0.0);
        end.push(w.values()[m]);
        mid.push(w.values()[m / 2]);
    }
    let e = mc_estimate(&end).unwrap();
    assert!(within(e.var, 1.0, e.se_var, 3.0), "{e:?}");
    let products: Vec<f64> = mid.iter().zip(&end).map(|(a, b)| a * b).collect();
    let p = mc_estimate(&products).unwrap();
    assert!(within(p.mean, 0.5, p.se_mean, 3.0), "{p:?}");
}

#[test]
fn brownian_bridge_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = 256;
    let (mut q1, mut half, mut q3) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..PATHS {
        let b = bridge(&sample_bm(m, &mut rng).unwrap());
        assert_eq!(b.values()[0], 0.0);
        assert!(b.last().abs() < 1e-12);
        q1.push(b.values()[m / 4]);
        half.push(b.values()[m / 2]);
        q3.push(b.values()[3 * m / 4]);
    }
    let h = mc_estimate(&half).unwrap();
    assert!(within(h.var, 0.25, h.se_var, 3.0), "{h:?}");
    let products: Vec<f64> = q1.iter().zip(&q3).map(|(a, b)| a * b).collect();
    let p = mc_estimate(&products).unwrap();
    assert!(within(p.mean, 1.0 / 16.0, p.se_mean, 3.0), "{p:?}");
}

#[test]
fn wrapped_arc_motion_is_brownian() {
    let p = params(&[(1, 0.3), (2, 0.3), (-1, 0.2), (-2, 0.2)]);
    let m = 512;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut at = [Vec::new(), Vec::new(), Vec::new()];
    let mut psis = Vec::new();
    for _ in 0..PATHS {
        let w1 = sample_w1(p.f_c, m, &[], &mut rng).unwrap();
        let u: f64 = rand::Rng::random(&mut rng);
        let w = tilde_w1(&w1, u, &p);
        assert_eq!(w.values()[0], 0.0);
        for (slot, k) in at.iter_mut().zip([m / 4, m / 2, m]) {
            slot.push(w.values()[k]);
        }
        psis.push(w.psi());
    }
    for (slot, t) in at.iter().zip([0.25, 0.5, 1.0]) {
        let e = mc_estimate(slot).unwrap();
        assert!(within(e.var, t, e.se_var, 3.0), "t = {t}: {e:?}");
    }
    let ks = ks_statistic(&psis, |x| half_normal_cdf(x, 1.0).unwrap()).unwrap();
    assert!(ks <= 0.05, "{ks}");
}

#[test]
fn zero_threshold_degenerate_paths() {
    let p = params(&[(1, 1.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let w1 = sample_w1(0.0, 64, &[], &mut rng).unwrap();
    assert!(tilde_w1(&w1, 0.3, &p).values().iter().all(|&v| v == 0.0));
    let a = sample_bm(64, &mut rng).unwrap();
    let b = sample_bm(64, &mut rng).unwrap();
    assert_eq!(compose_w2(&a, &b, &p), a);
    // ρ = 1 gives W₃′ = W₂′
    assert_eq!(w3_prime(&a, &b, 1.0).values(), a.values());
}

#[test]
fn composed_w2_has_unit_variance() {
    let p = params(&[(1, 0.3), (2, 0.3), (-1, 0.2), (-2, 0.2)]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ends: Vec<f64> = (0..PATHS)
        .map(|_| {
            let a = sample_bm(64, &mut rng).unwrap();
            let b = sample_bm(64, &mut rng).unwrap();
            compose_w2(&a, &b, &p).last()
        })
        .collect();
    let e = mc_estimate(&ends).unwrap();
    assert!(within(e.var, 1.0, e.se_var, 3.0), "{e:?}");
}

#[test]
fn joint_limit_marginals() {
    let p = two_point();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f_grid = [0.5, 0.75, 1.0];
    let mut first = Vec::new();
    let mut second = Vec::new();
    for _ in 0..PATHS {
        let s = sample_joint_limit(&p, &f_grid, &[1.0], 1024, &mut rng, false).unwrap();
        assert!(s.second >= 0.0);
        first.push(s.first[1]);
        second.push(s.second);
        // T-transform of the sampled X_∞ reproduces the first coordinate
        for (j, &f) in f_grid.iter().enumerate() {
            let tx = t_transform(&p, f, s.x_inf[j], s.x_inf[2]);
            assert!((tx / p.e_plus - s.first[j]).abs() < 1e-9);
        }
    }
    let e = mc_estimate(&first).unwrap();
    assert!(within(e.var, 0.5625, e.se_var, 3.0), "{e:?}");
    let g = p.marginal_std(0.75, MarginalForm::CovarianceConsistent).unwrap();
    let ks = ks_statistic(&first, |x| normal_cdf(x, g).unwrap()).unwrap();
    assert!(ks <= 0.03, "{ks}");
    let h = mc_estimate(&second).unwrap();
    let target = 1.5f64.sqrt() * (2.0 / std::f64::consts::PI).sqrt();
    // the grid minimum biases Ψ slightly downward
    assert!(within(h.mean, target, h.se_mean, 3.0) || (h.mean - target).abs() < 0.03, "{h:?}");
}

#[test]
fn all_positive_law_limit() {
    let p = params(&[(1, 0.5), (2, 0.5)]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = sample_joint_limit(&p, &[0.25, 0.5], &[0.5, 1.0], 64, &mut rng, false).unwrap();
    assert_eq!(s.second, 0.0);
    for (j, &b) in s.bridge.iter().enumerate() {
        assert!((s.first[j] - b / p.e_plus.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn closed_form_covariances() {
    let p = two_point();
    assert!((cov_xx(&p, 1.0, 1.0).unwrap() - 8.0 / 9.0).abs() < 1e-12);
    // Var(I) of the two-point law
    let var_i = 1.0 - (1.0f64 / 3.0).powi(2);
    assert!((cov_xx(&p, 1.0, 1.0).unwrap() - var_i).abs() < 1e-12);
    let total = p.sigma_tilde1.powi(2) + p.sigma2.powi(2);
    assert!((cov_xx(&p, 0.5, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((total - 2.0 / 3.0).abs() < 1e-12);
    assert!((cov_xy(&p, 0.75, 1.0).unwrap() - cov_xx(&p, 0.5, 0.75).unwrap()).abs() < 1e-12);
    assert!((cov_xy(&p, 0.75, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((cov_yy(&p, 0.25, 1.0).unwrap() - 0.25 * total).abs() < 1e-12);
    assert!(cov_xx(&p, 1.5, 0.5).is_err());
}

#[test]
fn sampled_covariances_match_closed_forms() {
    let p = params(&[(1, 0.3), (2, 0.3), (-1, 0.2), (-2, 0.2)]);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f_grid = [0.5, 0.8, 1.0];
    let t_grid = [0.5, 1.0];
    let draws: Vec<_> = (0..PATHS)
        .map(|_| sample_joint_limit(&p, &f_grid, &t_grid, 512, &mut rng, false).unwrap())
        .collect();
    let col_x = |j: usize| draws.iter().map(|d| d.x_inf[j]).collect::<Vec<_>>();
    let col_y = |j: usize| draws.iter().map(|d| d.y_inf[j]).collect::<Vec<_>>();
    for (a, &f) in f_grid.iter().enumerate() {
        for (b, &f2) in f_grid.iter().enumerate().skip(a) {
            let c = cov_estimate(&col_x(a), &col_x(b)).unwrap();
            let want = cov_xx(&p, f, f2).unwrap();
            assert!(within(c.cov, want, c.se, 4.0), "xx({f},{f2}) {c:?} vs {want}");
        }
        for (b, &t) in t_grid.iter().enumerate() {
            let c = cov_estimate(&col_x(a), &col_y(b)).unwrap();
            let want = cov_xy(&p, f, t).unwrap();
            assert!(within(c.cov, want, c.se, 4.0), "xy({f},{t}) {c:?} vs {want}");
        }
    }
    let c = cov_estimate(&col_y(0), &col_y(1)).unwrap();
    let want = cov_yy(&p, 0.5, 1.0).unwrap();
    assert!(within(c.cov, want, c.se, 4.0), "yy {c:?} vs {want}");
}

#[test]
fn normal_cdf_against_series() {
    // erf by its Maclaurin series, summed to convergence
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        while term.abs() > 1e-18 {
            n += 1.0;
            term *= -x * x / n;
            sum += term / (2.0 * n + 1.0);
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }
    let phi = normal_cdf(1.959964, 1.0).unwrap();
    assert!((phi - 0.975).abs() < 1e-6);
    for k in -30..=30 {
        let x = k as f64 / 10.0;
        let oracle = 0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2));
        assert!((normal_cdf(x, 1.0).unwrap() - oracle).abs() < 1e-10, "{x}");
        if x >= 0.0 {
            let hn = half_normal_cdf(x, 1.3).unwrap();
            assert!((hn - (2.0 * normal_cdf(x, 1.3).unwrap() - 1.0)).abs() < 1e-12);
        }
    }
}
