//! Random-walk representation of the level processes.
//!
//! For each fitness level `f`, `S_n(f)` adds the newborns with fitness `<= f` and
//! subtracts every attempted removal; `M_n(f)` is its running minimum. The level
//! count of the ecosystem is the reflected walk `S_n(f) - M_n(f)`.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::increments::IncrementLaw;
use crate::noise::NoiseStream;

const GRID_EPS: f64 = 1e-12;

fn grid_index(grid: &[f64], f: f64) -> Option<usize> {
    let i = grid.partition_point(|&g| g < f - GRID_EPS);
    (i < grid.len() && (grid[i] - f).abs() <= GRID_EPS).then_some(i)
}

fn check_grid(f_grid: &[f64]) -> Result<()> {
    if f_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NotAscending);
    }
    if let Some(&bad) = f_grid.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::OutOfRange {
            name: "f",
            value: bad,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// Current `S_k(f)`, `M_k(f)` on a fixed grid, advanced one step at a time.
#[derive(Debug, Clone)]
pub struct OnlineWalk {
    f_grid: Vec<f64>,
    s: Vec<i64>,
    m: Vec<i64>,
    bucket: Vec<i64>,
    steps: u64,
}

impl OnlineWalk {
    pub fn new(f_grid: &[f64]) -> Result<Self> {
        check_grid(f_grid)?;
        let g = f_grid.len();
        Ok(Self {
            f_grid: f_grid.to_vec(),
            s: vec![0; g],
            m: vec![0; g],
            bucket: vec![0; g],
            steps: 0,
        })
    }

    pub fn f_grid(&self) -> &[f64] {
        &self.f_grid
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Feeds the same `(I, births)` pair the ecosystem consumes.
    pub fn push_step(&mut self, i: i64, births: &[f64]) {
        self.bucket.iter_mut().for_each(|b| *b = 0);
        for &u in births {
            // first grid point with u <= f
            let j = self.f_grid.partition_point(|&g| g < u);
            if j < self.bucket.len() {
                self.bucket[j] += 1;
            }
        }
        let removed = (-i).max(0);
        let mut born_below = 0;
        for j in 0..self.f_grid.len() {
            born_below += self.bucket[j];
            self.s[j] += born_below - removed;
            self.m[j] = self.m[j].min(self.s[j]);
        }
        self.steps += 1;
    }

    pub fn s(&self) -> &[i64] {
        &self.s
    }

    pub fn m(&self) -> &[i64] {
        &self.m
    }

    /// `S(f) - M(f)` at grid index `j`.
    pub fn reflected(&self, j: usize) -> i64 {
        self.s[j] - self.m[j]
    }
}

/// Full history `S_k(f)`, `M_k(f)` for `k = 0..=n` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    f_grid: Vec<f64>,
    n: usize,
    // row-major: [k * g + j]
    s: Vec<i64>,
    m: Vec<i64>,
}

impl WalkTrace {
    /// Builds a trace from an explicit sequence of steps.
    pub fn from_steps<'a, I>(f_grid: &[f64], steps: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, &'a [f64])>,
    {
        let mut walk = OnlineWalk::new(f_grid)?;
        let g = f_grid.len();
        let mut s = vec![0; g];
        let mut m = vec![0; g];
        let mut n = 0;
        for (i, births) in steps {
            if births.len() != i.max(0) as usize {
                return Err(Error::UniformCount {
                    expected: i.max(0) as usize,
                    got: births.len(),
                });
            }
            walk.push_step(i, births);
            s.extend_from_slice(walk.s());
            m.extend_from_slice(walk.m());
            n += 1;
        }
        Ok(Self {
            f_grid: f_grid.to_vec(),
            n,
            s,
            m,
        })
    }

    pub fn f_grid(&self) -> &[f64] {
        &self.f_grid
    }

    /// Number of steps `n`.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn at(&self, k: usize, j: usize) -> usize {
        k * self.f_grid.len() + j
    }

    pub fn s(&self, k: usize, j: usize) -> i64 {
        self.s[self.at(k, j)]
    }

    pub fn m(&self, k: usize, j: usize) -> i64 {
        self.m[self.at(k, j)]
    }

    /// `S(f)` for `k = 0..=n` at grid point `f`.
    pub fn s_path(&self, f: f64) -> Result<Vec<i64>> {
        let j = grid_index(&self.f_grid, f).ok_or(Error::NotOnGrid(f))?;
        Ok((0..=self.n).map(|k| self.s(k, j)).collect())
    }

    pub fn m_path(&self, f: f64) -> Result<Vec<i64>> {
        let j = grid_index(&self.f_grid, f).ok_or(Error::NotOnGrid(f))?;
        Ok((0..=self.n).map(|k| self.m(k, j)).collect())
    }

    /// `S_k(f) - M_k(f)`.
    pub fn reflected_level(&self, k: usize, f: f64) -> Result<i64> {
        let j = grid_index(&self.f_grid, f).ok_or(Error::NotOnGrid(f))?;
        if k > self.n {
            return Err(Error::StepOutOfRange { k, n: self.n });
        }
        Ok(self.s(k, j) - self.m(k, j))
    }

    /// `t ↦ S_{⌊nt⌋}(f_c) / √n` on the `n + 1` points `t = k/n`.
    pub fn y_path(&self, f_c: f64) -> Result<ScaledPath> {
        let j = grid_index(&self.f_grid, f_c).ok_or(Error::NotOnGrid(f_c))?;
        if self.n == 0 {
            return Err(Error::Empty);
        }
        let scale = 1.0 / (self.n as f64).sqrt();
        let values = (0..=self.n).map(|k| self.s(k, j) as f64 * scale).collect();
        Ok(ScaledPath { values, scale })
    }

    /// CSV dump: `k,S(f_1),M(f_1),S(f_2),M(f_2),...`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        write!(out, "k")?;
        for f in &self.f_grid {
            write!(out, ",S({f}),M({f})")?;
        }
        writeln!(out)?;
        for k in 0..=self.n {
            write!(out, "{k}")?;
            for j in 0..self.f_grid.len() {
                write!(out, ",{},{}", self.s(k, j), self.m(k, j))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Runs `n` steps of `stream` through the walk representation.
pub fn walk_trace(law: &IncrementLaw, n: usize, f_grid: &[f64], stream: &mut NoiseStream) -> Result<WalkTrace> {
    check_grid(f_grid)?;
    let g = f_grid.len();
    let mut walk = OnlineWalk::new(f_grid)?;
    let mut s = Vec::with_capacity((n + 1) * g);
    let mut m = Vec::with_capacity((n + 1) * g);
    s.extend_from_slice(walk.s());
    m.extend_from_slice(walk.m());
    let mut births = Vec::new();
    for _ in 0..n {
        let i = stream.next_step(law, &mut births);
        walk.push_step(i, &births);
        s.extend_from_slice(walk.s());
        m.extend_from_slice(walk.m());
    }
    Ok(WalkTrace {
        f_grid: f_grid.to_vec(),
        n,
        s,
        m,
    })
}

/// A path on the uniform grid `t = k / (len - 1)` of `[0, 1]`, scaled by `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPath {
    pub values: Vec<f64>,
    pub scale: f64,
}

/// `Ψ(x) = x(1) - inf_t x(t)` over the sampled values.
pub fn psi(values: &[f64]) -> Result<f64> {
    let last = *values.last().ok_or(Error::Empty)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(last - min)
}
