use ecosim_core::increments::{IncrementLaw, MarginalForm, Moment};
use ecosim_core::noise::derive_stream;
use ecosim_core::stats::mc_estimate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Moments by enumerating the table, independent of the library code path.
struct Enumerated {
    e_plus: f64,
    e_minus: f64,
    e_plus2: f64,
    e_minus2: f64,
}

fn enumerate(table: &[(i64, f64)]) -> Enumerated {
    let pos = |v: i64| v.max(0) as f64;
    let neg = |v: i64| (-v).max(0) as f64;
    Enumerated {
        e_plus: table.iter().map(|&(v, p)| p * pos(v)).sum(),
        e_minus: table.iter().map(|&(v, p)| p * neg(v)).sum(),
        e_plus2: table.iter().map(|&(v, p)| p * pos(v).powi(2)).sum(),
        e_minus2: table.iter().map(|&(v, p)| p * neg(v).powi(2)).sum(),
    }
}

fn finite(m: Moment) -> f64 {
    m.finite().expect("finite moment")
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn random_table(rng: &mut ChaCha8Rng) -> Vec<(i64, f64)> {
    let k = rng.random_range(2..=6);
    let mut values: Vec<i64> = Vec::new();
    while values.len() < k {
        let v = rng.random_range(-5..=6);
        if v != 0 && !values.contains(&v) {
            values.push(v);
        }
    }
    if !values.iter().any(|&v| v > 0) {
        values[0] = values[0].abs();
    }
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    values.into_iter().zip(weights.into_iter().map(|w| w / total)).collect()
}

#[test]
fn two_point_law_moments() {
    let law = IncrementLaw::table(&[(1, 2.0 / 3.0), (-1, 1.0 / 3.0)]).unwrap();
    let m = law.moments();
    assert!(close(finite(m.e_plus), 2.0 / 3.0, 1e-15));
    assert!(close(m.e_minus, 1.0 / 3.0, 1e-15));
    assert!(close(finite(m.var_plus), 2.0 / 9.0, 1e-15));
    assert!(close(m.var_minus, 2.0 / 9.0, 1e-15));

    let p = m.limit_params().unwrap();
    assert!(close(p.f_c, 0.5, 1e-15));
    assert!(close(p.sigma_tilde1.powi(2), 1.0 / 6.0, 1e-15));
    assert!(close(p.sigma2.powi(2), 0.5, 1e-15));
    assert!(close(p.rho, 1.0, 1e-12));
    let g = |f| p.marginal_std(f, MarginalForm::CovarianceConsistent).unwrap();
    assert!(close(g(1.0), 0.0, 1e-15));
    assert!(close(g(0.75), 0.75, 1e-15));
    assert!(close(g(0.5), 1.5f64.sqrt(), 1e-12));
    let raw = p.marginal_std(0.75, MarginalForm::RawMoment).unwrap();
    assert!(close(raw * raw, 0.6875, 1e-12));
}

#[test]
fn jump_two_law_moments() {
    let law = IncrementLaw::table(&[(2, 0.5), (-1, 0.5)]).unwrap();
    let m = law.moments();
    assert!(close(finite(m.e_plus), 1.0, 1e-15));
    assert!(close(m.e_minus, 0.5, 1e-15));
    assert!(close(finite(m.e_plus2), 2.0, 1e-15));
    assert!(close(m.e_minus2, 0.5, 1e-15));
}

#[test]
fn four_point_law_params() {
    let table = [(1, 0.3), (2, 0.3), (-1, 0.2), (-2, 0.2)];
    let e = enumerate(&table);
    assert!(close(e.e_plus, 0.9, 1e-15));
    assert!(close(e.e_minus, 0.6, 1e-15));
    assert!(close(e.e_plus2 - e.e_plus.powi(2), 0.69, 1e-12));
    assert!(close(e.e_minus2 - e.e_minus.powi(2), 0.64, 1e-12));
    let p = IncrementLaw::table(&table).unwrap().moments().limit_params().unwrap();
    assert!(close(p.f_c, 2.0 / 3.0, 1e-15));
    let rho = 0.9 * 0.6 / (0.69f64 * 0.64).sqrt();
    assert!(close(p.rho, rho, 1e-12));
    assert!(close(p.rho, 0.8126, 1e-4));
}

#[test]
fn nonnegative_law_degenerates() {
    let law = IncrementLaw::table(&[(1, 1.0)]).unwrap();
    let m = law.moments();
    assert_eq!(m.e_minus, 0.0);
    let p = m.limit_params().unwrap();
    assert_eq!((p.f_c, p.sigma_tilde1, p.sigma2, p.rho), (0.0, 0.0, 0.0, 0.0));
    let mut s = derive_stream(1, 0);
    assert!((0..100).all(|_| s.next_increment(&law) == 1));
}

#[test]
fn heavy_tail_moments() {
    let law = IncrementLaw::heavy_tail(1.5, 0.8, 1).unwrap();
    let m = law.moments();
    assert!(m.e_plus.is_infinite());
    assert!(close(m.e_minus, 0.2, 1e-15));
    assert_eq!(m.f_c().unwrap(), 0.0);
    assert!(m.limit_params().is_err());
}

#[test]
fn rejects_bad_tables() {
    assert!(IncrementLaw::table(&[(1, 0.6), (-1, 0.6)]).is_err());
    assert!(IncrementLaw::table(&[(-1, 1.0)]).is_err());
    assert!(IncrementLaw::heavy_tail(2.5, 0.8, 1).is_err());
    assert!(IncrementLaw::from_json(r#"{"table": {"1.5": 1.0}}"#).is_err());
    let drifting_down = IncrementLaw::table(&[(1, 0.4), (-1, 0.6)]).unwrap();
    assert!(drifting_down.moments().limit_params().is_err());
}

#[test]
fn json_forms_agree() {
    let a = IncrementLaw::from_json(r#"{"table": {"1": "2/3", "-1": "1/3"}}"#).unwrap();
    let b = IncrementLaw::from_json(r#"{"table": {"+1": 0.6666666666666666, "-1": 0.3333333333333333}}"#).unwrap();
    assert!(close(finite(a.moments().e_plus), finite(b.moments().e_plus), 1e-15));
    let h = IncrementLaw::from_json(r#"{"heavy_tail": {"alpha": 1.5, "w": 0.8, "b": 1}}"#).unwrap();
    assert!(h.is_heavy_tailed());
}

#[test]
fn random_laws_satisfy_moment_inequalities() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 100 {
        let table = random_table(&mut rng);
        let law = IncrementLaw::table(&table).unwrap();
        let e = enumerate(&table);
        let m = law.moments();
        assert!(close(finite(m.e_plus), e.e_plus, 1e-12));
        assert!(close(m.e_minus, e.e_minus, 1e-12));
        assert!(close(finite(m.e_plus2), e.e_plus2, 1e-12));
        assert!(close(m.e_minus2, e.e_minus2, 1e-12));
        let sd_p = (e.e_plus2 - e.e_plus.powi(2)).max(0.0).sqrt();
        let sd_m = (e.e_minus2 - e.e_minus.powi(2)).max(0.0).sqrt();
        if e.e_minus > 0.0 {
            assert!(e.e_plus * e.e_minus <= sd_p * sd_m + 1e-12);
        }
        let Ok(p) = m.limit_params() else { continue };
        assert!((0.0..=1.0 + 1e-12).contains(&p.rho));
        let identity = p.f_c.powi(2) * e.e_plus2 + e.e_minus2;
        assert!(close(p.sigma2.powi(2), identity, 1e-12), "{table:?}");
        // g is continuous on [f_c, 1] and vanishes at 1
        let g = |f: f64| p.marginal_std(f, MarginalForm::CovarianceConsistent).unwrap();
        assert!(g(1.0).abs() < 1e-12);
        let steps = 200;
        let mut prev = g(p.f_c);
        for k in 1..=steps {
            let f = (p.f_c + (1.0 - p.f_c) * k as f64 / steps as f64).min(1.0);
            let cur = g(f);
            assert!((cur - prev).abs() < 0.2, "{table:?}");
            prev = cur;
        }
        checked += 1;
    }
}

#[test]
fn sample_means_match_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let draws = 1_000_000;
    for r in 0..10 {
        let table = random_table(&mut rng);
        let law = IncrementLaw::table(&table).unwrap();
        let m = law.moments();
        let mut s = derive_stream(99, r);
        let xs: Vec<i64> = (0..draws).map(|_| s.next_increment(&law)).collect();
        let plus: Vec<f64> = xs.iter().map(|&v| v.max(0) as f64).collect();
        let minus: Vec<f64> = xs.iter().map(|&v| (-v).max(0) as f64).collect();
        let ep = mc_estimate(&plus).unwrap();
        let em = mc_estimate(&minus).unwrap();
        assert!((ep.mean - finite(m.e_plus)).abs() <= 4.0 * ep.se_mean, "{table:?}");
        assert!((em.mean - m.e_minus).abs() <= 4.0 * em.se_mean.max(1e-12), "{table:?}");
        assert!((ep.var - finite(m.var_plus)).abs() <= 4.0 * ep.se_var.max(1e-12), "{table:?}");
        assert!((em.var - m.var_minus).abs() <= 4.0 * em.se_var.max(1e-12), "{table:?}");
    }
}

#[test]
fn two_point_sampler_mean() {
    let law = IncrementLaw::table(&[(1, 2.0 / 3.0), (-1, 1.0 / 3.0)]).unwrap();
    let mut s = derive_stream(12345, 0);
    let n = 1_000_000;
    let sum: i64 = (0..n).map(|_| s.next_increment(&law)).sum();
    assert!((sum as f64 / n as f64 - 1.0 / 3.0).abs() <= 0.002);
}

#[test]
fn heavy_tail_sampler() {
    let law = IncrementLaw::heavy_tail(1.5, 0.8, 1).unwrap();
    let mut s = derive_stream(4321, 0);
    let n = 1_000_000;
    let mut neg = 0u64;
    let mut ones = 0u64;
    let mut twos = 0u64;
    for _ in 0..n {
        match s.next_increment(&law) {
            -1 => neg += 1,
            1 => ones += 1,
            2 => twos += 1,
            v => assert!(v >= 3, "unexpected {v}"),
        }
    }
    assert!((neg as f64 / n as f64 - 0.2).abs() <= 0.0015);
    // P(I = k | I > 0) = k^-1.5 / ζ(1.5)
    let zeta = 2.612375348685488;
    let p1 = 0.8 / zeta;
    let p2 = 0.8 * 2f64.powf(-1.5) / zeta;
    for (count, p) in [(ones, p1), (twos, p2)] {
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((count as f64 / n as f64 - p).abs() <= 4.0 * se);
    }
}
