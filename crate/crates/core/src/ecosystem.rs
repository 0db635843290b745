//! The fitness ecosystem: newborns receive uniform fitness marks, and whenever the
//! population shrinks the least fit members are removed first.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::increments::{uniform_above_cdf, IncrementLaw};
use crate::multiset::FitnessMultiset;
use crate::noise::NoiseStream;

/// Absolute accuracy of [`EcosystemState::sup_deviation`] when part of the
/// population is held lazily; explicit populations are evaluated exactly.
pub const SUP_TOL: f64 = 1e-9;

/// Above this many living members, snapshots keep level counts only.
pub const SNAPSHOT_COPY_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, Default)]
pub struct EcosystemState {
    n: u64,
    x: u64,
    s_plus: u64,
    s_minus: u64,
    living: FitnessMultiset,
}

fn check_unit(name: &'static str, f: f64) -> Result<()> {
    if (0.0..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value: f,
            lo: 0.0,
            hi: 1.0,
        })
    }
}

impl EcosystemState {
    /// Empty population at time 0.
    pub fn init() -> Self {
        Self::default()
    }

    /// Empty population whose lazily held births are resolved from `seed`.
    pub fn with_refinement_seed(seed: u64) -> Self {
        Self {
            living: FitnessMultiset::with_seed(seed),
            ..Self::default()
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Population size `X_n`.
    pub fn x(&self) -> u64 {
        self.x
    }

    /// `S_{n,+}`: total births so far.
    pub fn s_plus(&self) -> u64 {
        self.s_plus
    }

    /// `S_{n,-}`: total attempted removals so far.
    pub fn s_minus(&self) -> u64 {
        self.s_minus
    }

    /// Advances one time step with increment `i`; `births` must hold exactly
    /// `max(i, 0)` fitness values in `[0, 1)`.
    pub fn step(&mut self, i: i64, births: &[f64]) -> Result<()> {
        let expected = i.max(0) as usize;
        if births.len() != expected {
            return Err(Error::UniformCount {
                expected,
                got: births.len(),
            });
        }
        if let Some(&bad) = births.iter().find(|u| !(0.0..1.0).contains(*u)) {
            return Err(Error::BadFitness(bad));
        }
        for &u in births {
            self.living.insert(u);
        }
        self.finish_step(i);
        Ok(())
    }

    /// Advances one step whose `births` newborns are iid uniform but not drawn
    /// individually (see [`FitnessMultiset::insert_uniform_lazy`]).
    pub fn step_lazy(&mut self, births: u64) {
        self.living.insert_uniform_lazy(births);
        self.finish_step(births.min(i64::MAX as u64) as i64);
    }

    /// Applies a pure removal step `i < 0` (or an empty step `i = 0`).
    pub fn step_removal(&mut self, i: i64) {
        debug_assert!(i <= 0);
        self.finish_step(i);
    }

    fn finish_step(&mut self, i: i64) {
        if i >= 0 {
            self.s_plus = self.s_plus.saturating_add(i as u64);
            self.x += i as u64;
        } else {
            let deaths = i.unsigned_abs();
            self.s_minus = self.s_minus.saturating_add(deaths);
            let removed = self.living.remove_smallest(deaths);
            debug_assert_eq!(removed, deaths.min(self.x));
            self.x -= removed;
        }
        self.n += 1;
        debug_assert_eq!(self.x, self.living.len());
    }

    /// `L_n(f)`: living members with fitness `<= f`.
    pub fn level_count(&mut self, f: f64) -> Result<u64> {
        check_unit("f", f)?;
        Ok(self.living.count_le(f))
    }

    /// `F̂_n(f) = L_n(f) / X_n`, or 0 for an empty population.
    pub fn empirical_cdf(&mut self, f: f64) -> Result<f64> {
        check_unit("f", f)?;
        if self.x == 0 {
            return Ok(0.0);
        }
        Ok(self.living.count_le(f) as f64 / self.x as f64)
    }

    /// `sup_{f ∈ [0,1]} |F̂_n(f) - F(f)|` with `F` the `U[f_c, 1]` distribution function.
    pub fn sup_deviation(&mut self, f_c: f64) -> f64 {
        if self.x == 0 {
            return 1.0;
        }
        let cdf = |f: f64| uniform_above_cdf(f_c, f);
        let d = self.living.sup_distance(cdf, SUP_TOL);
        let at_fc = self.living.count_le(f_c) as f64 / self.x as f64;
        d.max(at_fc)
    }

    /// Urn prefix counts: entry `k` is `L_n(cum_mu[k])`.
    pub fn urn_counts(&mut self, cum_mu: &[f64]) -> Result<Vec<u64>> {
        if cum_mu.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::NotAscending);
        }
        cum_mu.iter().map(|&c| self.level_count(c)).collect()
    }

    pub fn level_counts(&mut self, grid: &[f64]) -> Result<Vec<u64>> {
        grid.iter().map(|&f| self.level_count(f)).collect()
    }

    /// Living fitness values in ascending order (resolves lazily held births).
    pub fn living_sorted(&mut self) -> Vec<f64> {
        self.living.to_sorted_vec()
    }

    pub fn snapshot(&mut self, plan: &SnapshotPlan) -> Result<Snapshot> {
        let levels = self.level_counts(&plan.f_grid)?;
        let sup_dev = self.sup_deviation(plan.f_c);
        let living = (plan.keep_living && self.x <= SNAPSHOT_COPY_LIMIT)
            .then(|| self.living_sorted());
        Ok(Snapshot {
            n: self.n,
            x: self.x,
            sup_dev,
            levels,
            living,
        })
    }
}

/// What to record at each snapshot time.
#[derive(Debug, Clone, Default)]
pub struct SnapshotPlan {
    pub times: Vec<u64>,
    pub f_grid: Vec<f64>,
    pub f_c: f64,
    pub keep_living: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: u64,
    pub x: u64,
    pub sup_dev: f64,
    pub levels: Vec<u64>,
    pub living: Option<Vec<f64>>,
}

/// How newborn fitness values enter the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BirthMode {
    /// Every fitness value is drawn from the stream.
    Explicit,
    /// Births are held as unresolved uniform counts; used for laws with `E I+ = ∞`.
    Lazy,
}

impl BirthMode {
    pub fn default_for(law: &IncrementLaw) -> Self {
        if law.is_heavy_tailed() {
            BirthMode::Lazy
        } else {
            BirthMode::Explicit
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub state: EcosystemState,
    pub snapshots: Vec<Snapshot>,
}

/// Runs `n_steps` steps driven by `stream`, snapshotting at `plan.times`
/// (time 0 included if listed).
pub fn run_trajectory(
    law: &IncrementLaw,
    n_steps: u64,
    stream: &mut NoiseStream,
    plan: &SnapshotPlan,
    mode: BirthMode,
) -> Result<Trajectory> {
    if plan.times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::NotAscending);
    }
    let mut state = EcosystemState::with_refinement_seed(stream.aux_seed(0x6c617a79));
    let mut snapshots = Vec::with_capacity(plan.times.len());
    let mut due = plan.times.iter().copied().filter(|&t| t <= n_steps).peekable();
    let mut births = Vec::new();
    while due.peek() == Some(&0) {
        snapshots.push(state.snapshot(plan)?);
        due.next();
    }
    for k in 1..=n_steps {
        match mode {
            BirthMode::Explicit => {
                let i = stream.next_step(law, &mut births);
                state.step(i, &births)?;
            }
            BirthMode::Lazy => {
                let i = stream.next_increment(law);
                if i > 0 {
                    state.step_lazy(i as u64);
                } else {
                    state.step_removal(i);
                }
            }
        }
        while due.peek() == Some(&k) {
            snapshots.push(state.snapshot(plan)?);
            due.next();
        }
    }
    Ok(Trajectory { state, snapshots })
}

/// Writes snapshots as CSV: `n,x,sup_dev,L(f_1),...`; the header carries the grid values.
pub fn write_snapshots_csv<W: Write>(out: &mut W, f_grid: &[f64], snapshots: &[Snapshot]) -> io::Result<()> {
    write!(out, "n,x,sup_dev")?;
    for f in f_grid {
        write!(out, ",L({f})")?;
    }
    writeln!(out)?;
    for s in snapshots {
        write!(out, "{},{},{}", s.n, s.x, s.sup_dev)?;
        for l in &s.levels {
            write!(out, ",{l}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
