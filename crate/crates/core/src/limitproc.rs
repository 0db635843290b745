//! Samplers for the Gaussian limit objects and their closed-form covariances.
//!
//! Brownian paths are cumulative sums of independent `N(0, Δt)` increments drawn
//! with the ziggurat sampler of `rand_distr::StandardNormal`, so they are exact
//! Brownian motion at the knots. The bridge-side motion `W₁` is sampled on knots
//! that split `[0, f_c]` and `[f_c, 1]` into `m` equal cells each; this makes the
//! wrapped-arc motion `W̃₁` exact on the uniform `t`-grid `k / m`.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::increments::LimitParams;
use crate::walkrep::psi;

pub const DEFAULT_CELLS: usize = 4096;
const KNOT_EPS: f64 = 1e-12;

/// A real path sampled at ascending knots `times` of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PathGrid {
    pub fn uniform_times(m: usize) -> Vec<f64> {
        (0..=m).map(|k| k as f64 / m as f64).collect()
    }

    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(times.len(), values.len());
        Self { times, values }
    }

    pub fn zeros(m: usize) -> Self {
        Self::new(Self::uniform_times(m), vec![0.0; m + 1])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("paths are nonempty")
    }

    pub fn knot_index(&self, t: f64) -> Option<usize> {
        let i = self.times.partition_point(|&s| s < t - KNOT_EPS);
        (i < self.times.len() && (self.times[i] - t).abs() <= KNOT_EPS).then_some(i)
    }

    /// Value at a knot.
    pub fn at(&self, t: f64) -> Result<f64> {
        self.knot_index(t)
            .map(|i| self.values[i])
            .ok_or(Error::MissingKnot(t))
    }

    /// Pointwise `a * self + b * other` on identical knots.
    pub fn combine(&self, a: f64, other: &PathGrid, b: f64) -> PathGrid {
        debug_assert_eq!(self.times.len(), other.times.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        PathGrid::new(self.times.clone(), values)
    }

    /// `Ψ` of the sampled path.
    pub fn psi(&self) -> f64 {
        psi(&self.values).expect("paths are nonempty")
    }
}

/// Standard Brownian motion at the given knots (`times[0]` must be 0).
pub fn sample_bm_at<R: Rng + ?Sized>(times: Vec<f64>, rng: &mut R) -> PathGrid {
    debug_assert_eq!(times.first(), Some(&0.0));
    let mut values = Vec::with_capacity(times.len());
    let mut w = 0.0;
    values.push(0.0);
    for pair in times.windows(2) {
        let z: f64 = rng.sample(StandardNormal);
        w += z * (pair[1] - pair[0]).sqrt();
        values.push(w);
    }
    PathGrid::new(times, values)
}

/// Standard Brownian motion on the uniform grid with `m` cells.
pub fn sample_bm<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<PathGrid> {
    if m < 2 {
        return Err(Error::GridTooSmall(m));
    }
    let scale = 1.0 / (m as f64).sqrt();
    let mut values = Vec::with_capacity(m + 1);
    let mut w = 0.0;
    values.push(0.0);
    for _ in 0..m {
        let z: f64 = rng.sample(StandardNormal);
        w += z * scale;
        values.push(w);
    }
    Ok(PathGrid::new(PathGrid::uniform_times(m), values))
}

/// `Br(t) = W(t) - t W(1)`.
pub fn bridge(bm: &PathGrid) -> PathGrid {
    let w1 = bm.last();
    let values = bm
        .times
        .iter()
        .zip(&bm.values)
        .map(|(t, w)| w - t * w1)
        .collect();
    PathGrid::new(bm.times.clone(), values)
}

/// `W₁` together with the positions of its structural knots.
#[derive(Debug, Clone)]
pub struct W1Sample {
    pub path: PathGrid,
    /// Knot indices of `f_c k / m`, `k = 0..=m` (empty when `f_c = 0`).
    lower: Vec<usize>,
    /// Knot indices of `f_c + (1 - f_c) j / m`, `j = 0..=m`.
    upper: Vec<usize>,
    m: usize,
}

impl W1Sample {
    pub fn cells(&self) -> usize {
        self.m
    }
}

/// Samples `W₁` at the split-grid knots plus `extra` (ascending, in `[0, 1]`).
pub fn sample_w1<R: Rng + ?Sized>(f_c: f64, m: usize, extra: &[f64], rng: &mut R) -> Result<W1Sample> {
    if m < 2 {
        return Err(Error::GridTooSmall(m));
    }
    let mf = m as f64;
    let lower_knots: Vec<f64> = if f_c > 0.0 {
        (0..=m).map(|k| f_c * k as f64 / mf).collect()
    } else {
        Vec::new()
    };
    let upper_knots: Vec<f64> = (0..=m)
        .map(|j| if j == m { 1.0 } else { f_c + (1.0 - f_c) * j as f64 / mf })
        .collect();
    let mut times: Vec<f64> = lower_knots
        .iter()
        .chain(&upper_knots)
        .chain(extra)
        .copied()
        .chain(std::iter::once(0.0))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup_by(|b, a| (*b - *a).abs() <= KNOT_EPS);
    let path = sample_bm_at(times, rng);
    let locate = |knots: &[f64]| -> Vec<usize> {
        knots
            .iter()
            .map(|&t| path.knot_index(t).expect("knot was inserted"))
            .collect()
    };
    let lower = locate(&lower_knots);
    let upper = locate(&upper_knots);
    Ok(W1Sample {
        path,
        lower,
        upper,
        m,
    })
}

/// The wrapped-arc motion `W̃₁` on the uniform grid `t = k / m`.
///
/// `W̃₁(t) = [(1 - f_c) W₁(f_c t) - f_c ∫ 1_{Ã_t} dW₁] / √(f_c (1 - f_c))`, where
/// `Ã_t = f_c + (1 - f_c) (([0, t] + u) mod 1)` and `u` is snapped down to `j / m`.
/// Identically zero when `f_c = 0`.
pub fn tilde_w1(w1: &W1Sample, u: f64, p: &LimitParams) -> PathGrid {
    let m = w1.m;
    let f_c = p.f_c;
    if f_c <= 0.0 {
        return PathGrid::zeros(m);
    }
    let v = w1.path.values();
    let increments: Vec<f64> = w1.upper.windows(2).map(|c| v[c[1]] - v[c[0]]).collect();
    let start = ((u * m as f64).floor() as usize).min(m - 1);
    let norm = 1.0 / (f_c * (1.0 - f_c)).sqrt();
    let mut arc = 0.0;
    let mut values = Vec::with_capacity(m + 1);
    values.push(0.0);
    for k in 1..=m {
        arc += increments[(start + k - 1) % m];
        let lower = v[w1.lower[k]];
        values.push(((1.0 - f_c) * lower - f_c * arc) * norm);
    }
    PathGrid::new(PathGrid::uniform_times(m), values)
}

/// `W₃′ = ρ W₂′ + √(1 - ρ²) W₂″`.
pub fn w3_prime(w2p: &PathGrid, w2pp: &PathGrid, rho: f64) -> PathGrid {
    w2p.combine(rho, w2pp, (1.0 - rho * rho).max(0.0).sqrt())
}

/// `W₂ = (f_c σ(I+) W₂′ + σ(I-) W₃′) / σ₂`, or `W₂′` itself when `f_c = 0`.
pub fn compose_w2(w2p: &PathGrid, w2pp: &PathGrid, p: &LimitParams) -> PathGrid {
    if p.f_c <= 0.0 {
        return w2p.clone();
    }
    assert!(p.sigma2 > 0.0, "σ₂ > 0 whenever f_c > 0");
    let w3 = w3_prime(w2p, w2pp, p.rho);
    w2p.combine(p.f_c * p.sd_plus() / p.sigma2, &w3, p.sd_minus() / p.sigma2)
}

/// One draw of the limit pair, evaluated on `f_grid` (first coordinate) and with
/// `Y_∞` observed at `t_grid`.
#[derive(Debug, Clone)]
pub struct JointLimitSample {
    /// `[√(E I+) Br₁(f) + (1 - F(f)) σ₂ W₂(1)] / E I+` on `f_grid`.
    pub first: Vec<f64>,
    /// `Ψ(Y_∞) / E I+`.
    pub second: f64,
    /// `X_∞(f)` on `f_grid`.
    pub x_inf: Vec<f64>,
    /// `Y_∞(t)` on `t_grid`.
    pub y_inf: Vec<f64>,
    pub bridge: Vec<f64>,
    /// `W̃₁(t)` on `t_grid`.
    pub tilde_w1: Vec<f64>,
    pub tilde_w1_psi: f64,
    pub w2p_1: f64,
    pub w3p_1: f64,
    pub w2_1: f64,
    pub u: f64,
    pub paths: Option<LimitPaths>,
}

/// Underlying paths of a [`JointLimitSample`], kept on request.
#[derive(Debug, Clone)]
pub struct LimitPaths {
    pub w1: PathGrid,
    pub w2p: PathGrid,
    pub w2pp: PathGrid,
    pub tilde_w1: PathGrid,
    pub y_inf: PathGrid,
}

fn check_unit_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    match grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(&bad) => Err(Error::OutOfRange {
            name,
            value: bad,
            lo: 0.0,
            hi: 1.0,
        }),
        None => Ok(()),
    }
}

/// Draws `W₁`, `W₂′`, `W₂″` and `u` once and builds both coordinates from them.
pub fn sample_joint_limit<R: Rng + ?Sized>(
    p: &LimitParams,
    f_grid: &[f64],
    t_grid: &[f64],
    m: usize,
    rng: &mut R,
    keep_paths: bool,
) -> Result<JointLimitSample> {
    check_unit_grid("f", f_grid)?;
    check_unit_grid("t", t_grid)?;
    let mut extra = f_grid.to_vec();
    extra.sort_by(f64::total_cmp);
    let w1 = sample_w1(p.f_c, m, &extra, rng)?;
    let w2p = sample_bm(m, rng)?;
    let w2pp = sample_bm(m, rng)?;
    let u: f64 = rng.random();

    let br = bridge(&w1.path);
    let w2 = compose_w2(&w2p, &w2pp, p);
    let w3 = w3_prime(&w2p, &w2pp, p.rho);
    let tw1 = tilde_w1(&w1, u, p);
    let y = tw1.combine(p.sigma_tilde1, &w2, p.sigma2);

    let (w2p_1, w3p_1, w2_1) = (w2p.last(), w3.last(), w2.last());
    let sqrt_ep = p.e_plus.sqrt();
    let mut first = Vec::with_capacity(f_grid.len());
    let mut x_inf = Vec::with_capacity(f_grid.len());
    let mut bridge_vals = Vec::with_capacity(f_grid.len());
    for &f in f_grid {
        let b = br.at(f)?;
        bridge_vals.push(b);
        x_inf.push(sqrt_ep * b + f * p.sd_plus() * w2p_1 + p.sd_minus() * w3p_1);
        let tail = 1.0 - p.target_cdf(f);
        first.push((sqrt_ep * b + tail * p.sigma2 * w2_1) / p.e_plus);
    }
    let m_f = m as f64;
    let on_t = |path: &PathGrid| -> Vec<f64> {
        t_grid
            .iter()
            .map(|&t| path.values()[((t * m_f).round() as usize).min(m)])
            .collect()
    };
    let y_inf = on_t(&y);
    let tilde_at = on_t(&tw1);
    let tilde_w1_psi = tw1.psi();
    let second = y.psi() / p.e_plus;
    let paths = keep_paths.then(|| LimitPaths {
        w1: w1.path.clone(),
        w2p: w2p.clone(),
        w2pp: w2pp.clone(),
        tilde_w1: tw1.clone(),
        y_inf: y.clone(),
    });
    Ok(JointLimitSample {
        first,
        second,
        x_inf,
        y_inf,
        bridge: bridge_vals,
        tilde_w1: tilde_at,
        tilde_w1_psi,
        w2p_1,
        w3p_1,
        w2_1,
        u,
        paths,
    })
}

/// `T(x)(f) = x(f) + (f_c - f) / (1 - f_c) x(1)`.
pub fn t_transform(p: &LimitParams, f: f64, x_f: f64, x_1: f64) -> f64 {
    x_f + (p.f_c - f) / (1.0 - p.f_c) * x_1
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    check_unit_grid(name, &[v])
}

/// `E X_∞(f) X_∞(f′)`.
pub fn cov_xx(p: &LimitParams, f: f64, f2: f64) -> Result<f64> {
    check_unit("f", f)?;
    check_unit("f'", f2)?;
    let (a, b) = if f <= f2 { (f, f2) } else { (f2, f) };
    Ok(a * (1.0 - b) * p.e_plus
        + a * b * p.var_plus
        + p.var_minus
        + (a + b) * p.e_plus * p.e_minus)
}

/// `E Y_∞(s) Y_∞(t) = min(s, t) E X_∞(f_c)²`.
pub fn cov_yy(p: &LimitParams, s: f64, t: f64) -> Result<f64> {
    check_unit("s", s)?;
    check_unit("t", t)?;
    Ok(s.min(t) * cov_xx(p, p.f_c, p.f_c)?)
}

/// `E X_∞(f) Y_∞(t) = t E X_∞(f) X_∞(f_c)`.
pub fn cov_xy(p: &LimitParams, f: f64, t: f64) -> Result<f64> {
    check_unit("t", t)?;
    Ok(t * cov_xx(p, f, p.f_c)?)
}

/// CSV dump: column `t`, then one column per path (paths share knots).
pub fn write_paths_csv<W: Write>(out: &mut W, paths: &[PathGrid]) -> io::Result<()> {
    write!(out, "t")?;
    for i in 0..paths.len() {
        write!(out, ",path{i}")?;
    }
    writeln!(out)?;
    let Some(first) = paths.first() else {
        return Ok(());
    };
    for (k, t) in first.times().iter().enumerate() {
        write!(out, "{t}")?;
        for p in paths {
            write!(out, ",{}", p.values()[k])?;
        }
        writeln!(out)?;
    }
    Ok(())
}
