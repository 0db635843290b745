//! Replica runners returning in-memory results; the commands turn these into files.

use ecosim_core::ecosystem::{run_trajectory, BirthMode, EcosystemState, SnapshotPlan};
use ecosim_core::increments::{uniform_above_cdf, IncrementLaw, LimitParams, MomentSet};
use ecosim_core::limitproc::{sample_joint_limit, JointLimitSample};
use ecosim_core::noise::{derive_stream, splitmix64};
use ecosim_core::replicas::run_replicas;
use ecosim_core::stats::{cov_estimate, ks_two_sample};
use ecosim_core::walkrep::OnlineWalk;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// Grid on which the ECDF of the first replica is recorded.
pub const ECDF_POINTS: usize = 101;
/// Number of limit samples whose full paths are kept for dumping.
pub const PATH_DUMP: usize = 8;

/// The law together with the fitness threshold used for the target `U[f_c, 1]`.
#[derive(Debug, Clone)]
pub struct Setup {
    pub law: IncrementLaw,
    pub moments: MomentSet,
    pub f_c: f64,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let law = cfg.increment_law()?;
        let moments = law.moments();
        let f_c = match cfg.f_c {
            Some(f) => f,
            None => moments.f_c()?,
        };
        Ok(Self { law, moments, f_c })
    }

    pub fn limit_params(&self) -> Result<LimitParams> {
        Ok(self.moments.limit_params()?)
    }

    pub fn joint_f(&self, cfg: &ExperimentConfig) -> f64 {
        cfg.joint_f.unwrap_or(0.5 * (1.0 + self.f_c))
    }
}

/// Master seed of the limit sampler, kept apart from the replica streams.
pub fn limit_seed(seed: u64) -> u64 {
    splitmix64(seed ^ 0x6c69_6d69_7400_0000)
}

/// `{n/100, n/10, n}` without duplicates.
pub fn checkpoints(n: u64) -> Vec<u64> {
    let mut c = vec![n / 100, n / 10, n];
    c.dedup();
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlivenkoRow {
    pub replica: u64,
    pub n: u64,
    pub x: u64,
    pub sup_dev: f64,
}

#[derive(Debug, Clone)]
pub struct GlivenkoRun {
    pub f_c: f64,
    pub heavy_tailed: bool,
    pub checkpoints: Vec<u64>,
    /// Replica-major, one row per checkpoint.
    pub rows: Vec<GlivenkoRow>,
    /// `F̂_n` of replica 0 at the last checkpoint on `ecdf_grid`.
    pub ecdf: Vec<f64>,
    pub ecdf_grid: Vec<f64>,
}

impl GlivenkoRun {
    pub fn sup_devs_at(&self, n: u64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.n == n).map(|r| r.sup_dev).collect()
    }

    pub fn medians(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|&n| median(&self.sup_devs_at(n))).collect()
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

pub fn run_glivenko(cfg: &ExperimentConfig) -> Result<GlivenkoRun> {
    let setup = Setup::new(cfg)?;
    let ecdf_grid: Vec<f64> = (0..ECDF_POINTS).map(|k| k as f64 / (ECDF_POINTS - 1) as f64).collect();
    let checkpoints = checkpoints(cfg.n);
    let mode = BirthMode::default_for(&setup.law);
    let plan = SnapshotPlan {
        times: checkpoints.clone(),
        f_grid: ecdf_grid.clone(),
        f_c: setup.f_c,
        keep_living: false,
    };
    let results = run_replicas(cfg.replicas, cfg.threads, |r| {
        let mut stream = derive_stream(cfg.seed, r);
        run_trajectory(&setup.law, cfg.n, &mut stream, &plan, mode)
            .map(|t| (r, t.snapshots))
    });
    let mut rows = Vec::new();
    let mut ecdf = Vec::new();
    for res in results {
        let (r, snapshots) = res?;
        if r == 0 {
            if let Some(last) = snapshots.last() {
                ecdf = last
                    .levels
                    .iter()
                    .map(|&l| if last.x == 0 { 0.0 } else { l as f64 / last.x as f64 })
                    .collect();
            }
        }
        rows.extend(snapshots.into_iter().map(|s| GlivenkoRow {
            replica: r,
            n: s.n,
            x: s.x,
            sup_dev: s.sup_dev,
        }));
    }
    Ok(GlivenkoRun {
        f_c: setup.f_c,
        heavy_tailed: setup.law.is_heavy_tailed(),
        checkpoints,
        rows,
        ecdf,
        ecdf_grid,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRow {
    pub replica: u64,
    pub steps: u64,
    pub checks: u64,
    pub mismatches: u64,
}

/// Drives the ecosystem and the walk representation from one stream and its
/// replay, comparing `L_k(f)` with `S_k(f) - M_k(f)` after every step.
pub fn run_identity(cfg: &ExperimentConfig) -> Result<Vec<IdentityRow>> {
    let law = cfg.increment_law()?;
    OnlineWalk::new(&cfg.f_grid)?;
    let rows = run_replicas(cfg.replicas, cfg.threads, |r| {
        let mut stream = derive_stream(cfg.seed, r);
        let mut replay = stream.clone();
        let mut state = EcosystemState::init();
        let mut walk = OnlineWalk::new(&cfg.f_grid).expect("grid validated");
        let (mut births, mut replay_births) = (Vec::new(), Vec::new());
        let (mut checks, mut mismatches) = (0, 0);
        for _ in 0..cfg.n {
            let i = stream.next_step(&law, &mut births);
            state.step(i, &births).expect("stream yields valid births");
            let j = replay.next_step(&law, &mut replay_births);
            walk.push_step(j, &replay_births);
            for (k, &f) in cfg.f_grid.iter().enumerate() {
                let l = state.level_count(f).expect("grid validated") as i64;
                checks += 1;
                if l != walk.reflected(k) {
                    mismatches += 1;
                }
            }
        }
        IdentityRow {
            replica: r,
            steps: cfg.n,
            checks,
            mismatches,
        }
    });
    Ok(rows)
}

/// Finite-`n` fluctuations at the last step of each replica.
#[derive(Debug, Clone)]
pub struct CltRun {
    pub params: LimitParams,
    pub f_c: f64,
    pub n: u64,
    pub f_grid: Vec<f64>,
    /// `x[r]`: population size of replica `r`.
    pub x: Vec<u64>,
    /// `dev[r][j] = √n (F̂_n(f_j) - F(f_j))`.
    pub dev: Vec<Vec<f64>>,
    /// `√n F̂_n(f_c)` per replica.
    pub at_fc: Vec<f64>,
}

impl CltRun {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.dev.iter().map(|row| row[j]).collect()
    }

    pub fn grid_index(&self, f: f64) -> Option<usize> {
        self.f_grid.iter().position(|&g| (g - f).abs() < 1e-12)
    }
}

pub fn run_clt(cfg: &ExperimentConfig) -> Result<CltRun> {
    let setup = Setup::new(cfg)?;
    let params = setup.limit_params()?;
    let f_c = setup.f_c;
    if cfg.n == 0 {
        return Err(CliError::Config("the CLT experiments need n >= 1".into()));
    }
    let mut grid = cfg.f_grid.clone();
    grid.push(f_c);
    let plan = SnapshotPlan {
        times: vec![cfg.n],
        f_grid: grid,
        f_c,
        keep_living: false,
    };
    let root_n = (cfg.n as f64).sqrt();
    let results = run_replicas(cfg.replicas, cfg.threads, |r| {
        let mut stream = derive_stream(cfg.seed, r);
        run_trajectory(&setup.law, cfg.n, &mut stream, &plan, BirthMode::Explicit).map(|t| {
            let s = &t.snapshots[0];
            let fhat = |l: u64| if s.x == 0 { 0.0 } else { l as f64 / s.x as f64 };
            let dev: Vec<f64> = cfg
                .f_grid
                .iter()
                .zip(&s.levels)
                .map(|(&f, &l)| root_n * (fhat(l) - uniform_above_cdf(f_c, f)))
                .collect();
            let at_fc = root_n * fhat(*s.levels.last().expect("f_c level"));
            (s.x, dev, at_fc)
        })
    });
    let mut run = CltRun {
        params,
        f_c,
        n: cfg.n,
        f_grid: cfg.f_grid.clone(),
        x: Vec::with_capacity(cfg.replicas),
        dev: Vec::with_capacity(cfg.replicas),
        at_fc: Vec::with_capacity(cfg.replicas),
    };
    for res in results {
        let (x, dev, at_fc) = res?;
        run.x.push(x);
        run.dev.push(dev);
        run.at_fc.push(at_fc);
    }
    Ok(run)
}

/// Draws from the limit pair, one independent stream per draw.
#[derive(Debug, Clone)]
pub struct LimitRun {
    pub params: LimitParams,
    pub f_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub samples: Vec<JointLimitSample>,
}

impl LimitRun {
    pub fn first_column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.first[j]).collect()
    }

    pub fn second(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.second).collect()
    }

    pub fn x_column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.x_inf[j]).collect()
    }

    pub fn y_column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.y_inf[j]).collect()
    }

    pub fn tilde_column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.tilde_w1[j]).collect()
    }

    pub fn tilde_psi(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.tilde_w1_psi).collect()
    }
}

pub fn run_limit(cfg: &ExperimentConfig, f_grid: &[f64]) -> Result<LimitRun> {
    let setup = Setup::new(cfg)?;
    let params = setup.limit_params()?;
    let master = limit_seed(cfg.seed);
    let samples = run_replicas(cfg.limit_samples, cfg.threads, |i| {
        let mut rng = derive_stream(master, i);
        sample_joint_limit(&params, f_grid, &cfg.t_grid, cfg.m, &mut rng, (i as usize) < PATH_DUMP)
    });
    Ok(LimitRun {
        params,
        f_grid: f_grid.to_vec(),
        t_grid: cfg.t_grid.clone(),
        samples: samples.into_iter().collect::<std::result::Result<_, _>>()?,
    })
}

/// Finite-`n` and limit joint samples compared coordinate by coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointComparison {
    pub f: f64,
    pub ks_first: f64,
    pub ks_second: f64,
    /// KS distances with the limit draws widened by `LimitParams::population_scale`.
    pub ks_first_scaled: f64,
    pub ks_second_scaled: f64,
    pub corr_finite: f64,
    pub corr_limit: f64,
}

pub fn compare_joint(clt: &CltRun, j: usize, limit: &LimitRun, k: usize) -> Result<JointComparison> {
    let finite_first = clt.column(j);
    let limit_first = limit.first_column(k);
    let limit_second = limit.second();
    let scale = limit.params.population_scale();
    let widen = |v: &[f64]| v.iter().map(|x| x * scale).collect::<Vec<_>>();
    Ok(JointComparison {
        f: clt.f_grid[j],
        ks_first: ks_two_sample(&finite_first, &limit_first)?,
        ks_second: ks_two_sample(&clt.at_fc, &limit_second)?,
        ks_first_scaled: ks_two_sample(&finite_first, &widen(&limit_first))?,
        ks_second_scaled: ks_two_sample(&clt.at_fc, &widen(&limit_second))?,
        corr_finite: cov_estimate(&finite_first, &clt.at_fc)?.corr,
        corr_limit: cov_estimate(&limit_first, &limit_second)?.corr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_sets() {
        assert_eq!(checkpoints(100_000), vec![1000, 10_000, 100_000]);
        assert_eq!(checkpoints(0), vec![0]);
        assert_eq!(checkpoints(50), vec![0, 5, 50]);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
