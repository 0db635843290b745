//! Ordered multiset of fitness values in `[0, 1)` with rank queries.
//!
//! The structure is a dyadic tree over `[0, 1)`: every node covers
//! `[lo, lo + 2^-depth)` and stores its subtree count. Leaves keep explicit sorted
//! values and split once they exceed [`LEAF_CAP`]. Points may also be inserted
//! *lazily*: a node then carries a `pending` count of points known only to be iid
//! uniform on its interval. Whenever a query or a removal needs to look inside such
//! a node, the pending points are split between the two halves by a
//! `Binomial(pending, 1/2)` draw, or materialized as explicit uniforms once few
//! enough remain. Every answer therefore has exactly the law it would have if all
//! points had been drawn up front, while huge birth batches cost `O(1)` to insert.
//!
//! Costs: explicit insert `O(depth + LEAF_CAP)`, rank query `O(depth)`, removal of the
//! `k` smallest amortized `O(k)` (whole subtrees are dropped without inspection).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

pub const LEAF_CAP: usize = 64;
pub const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone)]
pub struct FitnessMultiset {
    root: Node,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
struct Node {
    count: u64,
    pending: u64,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Leaf(Vec<f64>),
    Split(Box<[Node; 2]>),
}

impl Default for FitnessMultiset {
    fn default() -> Self {
        Self::new()
    }
}

impl FitnessMultiset {
    pub fn new() -> Self {
        Self::with_seed(0)
    }

    /// `seed` drives the resolution of lazily inserted points only; a multiset
    /// that never receives lazy insertions never touches it.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            root: Node::empty(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> u64 {
        self.root.count
    }

    pub fn is_empty(&self) -> bool {
        self.root.count == 0
    }

    /// True when some points are still held as unresolved counts.
    pub fn has_pending(&self) -> bool {
        self.root.any_pending()
    }

    /// Inserts one value; equal values keep insertion order.
    pub fn insert(&mut self, v: f64) {
        debug_assert!((0.0..1.0).contains(&v));
        self.root.insert(v, 0.0, 1.0, 0, &mut self.rng);
    }

    /// Adds `k` iid `U[0, 1)` points without drawing their positions.
    pub fn insert_uniform_lazy(&mut self, k: u64) {
        self.root.count += k;
        self.root.pending += k;
    }

    /// Removes the `min(k, len)` smallest values; returns how many were removed.
    pub fn remove_smallest(&mut self, k: u64) -> u64 {
        self.root.remove_smallest(k, 0.0, 1.0, 0, &mut self.rng)
    }

    /// Number of stored values `<= f`.
    pub fn count_le(&mut self, f: f64) -> u64 {
        self.root.count_le(f, 0.0, 1.0, 0, &mut self.rng)
    }

    /// All values in ascending order, resolving pending points first.
    pub fn to_sorted_vec(&mut self) -> Vec<f64> {
        self.root.materialize(0.0, 1.0, 0, &mut self.rng);
        let mut out = Vec::with_capacity(self.root.count as usize);
        self.root.collect(&mut out);
        out
    }

    /// `sup_f |count_le(f) / len - cdf(f)|` over `f ∈ [0, 1]`, including left limits,
    /// for a continuous nondecreasing `cdf` with `cdf(1) = 1`.
    ///
    /// Exact when every point is explicit. Otherwise pending nodes are bounded by
    /// their endpoint values and refined only where the bound could exceed the best
    /// attained value; the result is within `tol` of the true supremum.
    pub fn sup_distance<F: Fn(f64) -> f64>(&mut self, cdf: F, tol: f64) -> f64 {
        if self.root.count == 0 {
            return cdf(1.0);
        }
        let total = self.root.count as f64;
        loop {
            let mut b = Bounds::default();
            self.root.scan(0.0, 1.0, 0, total, &cdf, &mut b);
            if b.ub <= b.lb + tol {
                return b.lb;
            }
            let threshold = b.lb + tol;
            // refine only pending nodes whose bound could still beat the best value
            self.root
                .refine(0.0, 1.0, 0, 0, total, &cdf, threshold, &mut self.rng);
        }
    }
}

#[derive(Debug, Default)]
struct Bounds {
    lb: f64,
    ub: f64,
}

impl Bounds {
    fn attained(&mut self, d: f64) {
        self.lb = self.lb.max(d);
        self.ub = self.ub.max(d);
    }
}

impl Node {
    fn empty() -> Self {
        Node {
            count: 0,
            pending: 0,
            kind: Kind::Leaf(Vec::new()),
        }
    }

    fn any_pending(&self) -> bool {
        self.pending > 0
            || match &self.kind {
                Kind::Leaf(_) => false,
                Kind::Split(ch) => ch.iter().any(Node::any_pending),
            }
    }

    fn split_leaf(&mut self, lo: f64, w: f64) {
        let Kind::Leaf(values) = &mut self.kind else {
            return;
        };
        let mid = lo + 0.5 * w;
        let values = std::mem::take(values);
        let cut = values.partition_point(|&v| v < mid);
        let right = values[cut..].to_vec();
        let mut left = values;
        left.truncate(cut);
        let child = |vals: Vec<f64>| Node {
            count: vals.len() as u64,
            pending: 0,
            kind: Kind::Leaf(vals),
        };
        self.kind = Kind::Split(Box::new([child(left), child(right)]));
    }

    /// Moves this node's pending points one level down, or materializes them.
    fn push_down<R: Rng>(&mut self, lo: f64, w: f64, depth: u32, rng: &mut R) {
        if self.pending == 0 {
            return;
        }
        if let Kind::Leaf(values) = &mut self.kind {
            let total = values.len() as u64 + self.pending;
            if depth >= MAX_DEPTH || total <= LEAF_CAP as u64 {
                let top = (lo + w).next_down();
                for _ in 0..self.pending {
                    values.push((lo + w * rng.random::<f64>()).min(top));
                }
                values.sort_by(f64::total_cmp);
                self.pending = 0;
                return;
            }
            self.split_leaf(lo, w);
        }
        if let Kind::Split(ch) = &mut self.kind {
            let left = Binomial::new(self.pending, 0.5)
                .expect("p = 1/2 is valid")
                .sample(rng);
            let right = self.pending - left;
            ch[0].count += left;
            ch[0].pending += left;
            ch[1].count += right;
            ch[1].pending += right;
            self.pending = 0;
        }
    }

    fn insert<R: Rng>(&mut self, v: f64, lo: f64, w: f64, depth: u32, rng: &mut R) {
        self.push_down(lo, w, depth, rng);
        self.count += 1;
        match &mut self.kind {
            Kind::Leaf(values) => {
                let pos = values.partition_point(|&x| x <= v);
                values.insert(pos, v);
                if values.len() > LEAF_CAP && depth < MAX_DEPTH {
                    self.split_leaf(lo, w);
                }
            }
            Kind::Split(ch) => {
                let half = 0.5 * w;
                if v < lo + half {
                    ch[0].insert(v, lo, half, depth + 1, rng);
                } else {
                    ch[1].insert(v, lo + half, half, depth + 1, rng);
                }
            }
        }
    }

    fn remove_smallest<R: Rng>(&mut self, k: u64, lo: f64, w: f64, depth: u32, rng: &mut R) -> u64 {
        if k == 0 {
            return 0;
        }
        if k >= self.count {
            let removed = self.count;
            *self = Node::empty();
            return removed;
        }
        self.push_down(lo, w, depth, rng);
        match &mut self.kind {
            Kind::Leaf(values) => {
                values.drain(..k as usize);
            }
            Kind::Split(ch) => {
                let half = 0.5 * w;
                let r = ch[0].remove_smallest(k, lo, half, depth + 1, rng);
                ch[1].remove_smallest(k - r, lo + half, half, depth + 1, rng);
            }
        }
        self.count -= k;
        if matches!(self.kind, Kind::Split(_)) && self.count as usize <= LEAF_CAP / 4 {
            // few points left below a split: fold back into one leaf
            self.materialize(lo, w, depth, rng);
            let mut values = Vec::with_capacity(self.count as usize);
            self.collect(&mut values);
            self.kind = Kind::Leaf(values);
        }
        k
    }

    fn count_le<R: Rng>(&mut self, f: f64, lo: f64, w: f64, depth: u32, rng: &mut R) -> u64 {
        if self.count == 0 || f < lo {
            return 0;
        }
        if f >= lo + w {
            return self.count;
        }
        self.push_down(lo, w, depth, rng);
        match &mut self.kind {
            Kind::Leaf(values) => values.partition_point(|&x| x <= f) as u64,
            Kind::Split(ch) => {
                let half = 0.5 * w;
                if f < lo + half {
                    ch[0].count_le(f, lo, half, depth + 1, rng)
                } else {
                    ch[0].count + ch[1].count_le(f, lo + half, half, depth + 1, rng)
                }
            }
        }
    }

    fn materialize<R: Rng>(&mut self, lo: f64, w: f64, depth: u32, rng: &mut R) {
        if self.count == 0 {
            return;
        }
        self.push_down(lo, w, depth, rng);
        if let Kind::Split(ch) = &mut self.kind {
            let half = 0.5 * w;
            ch[0].materialize(lo, half, depth + 1, rng);
            ch[1].materialize(lo + half, half, depth + 1, rng);
        }
    }

    fn collect(&self, out: &mut Vec<f64>) {
        debug_assert_eq!(self.pending, 0);
        match &self.kind {
            Kind::Leaf(values) => out.extend_from_slice(values),
            Kind::Split(ch) => {
                ch[0].collect(out);
                ch[1].collect(out);
            }
        }
    }

    /// Upper bound of `|F̂ - cdf|` over a pending node's interval.
    fn pending_bound<F: Fn(f64) -> f64>(&self, lo: f64, w: f64, below: u64, total: f64, cdf: &F) -> (f64, f64, f64) {
        let l = below as f64 / total;
        let u = (below + self.count) as f64 / total;
        let fa = cdf(lo);
        let fb = cdf((lo + w).min(1.0));
        let attained = (l - fa).abs().max((u - fb).abs());
        let ub = (u - fa).max(fb - l);
        (attained, ub, l)
    }

    fn scan<F: Fn(f64) -> f64>(&self, lo: f64, w: f64, below: u64, total: f64, cdf: &F, b: &mut Bounds) {
        if self.count == 0 {
            return;
        }
        if self.pending > 0 {
            let (attained, ub, _) = self.pending_bound(lo, w, below, total, cdf);
            b.lb = b.lb.max(attained);
            b.ub = b.ub.max(ub);
            return;
        }
        match &self.kind {
            Kind::Leaf(values) => {
                let mut i = 0;
                while i < values.len() {
                    let y = values[i];
                    let mut j = i + 1;
                    while j < values.len() && values[j] == y {
                        j += 1;
                    }
                    let fy = cdf(y);
                    let left = (below + i as u64) as f64 / total;
                    let at = (below + j as u64) as f64 / total;
                    b.attained((left - fy).abs());
                    b.attained((at - fy).abs());
                    i = j;
                }
            }
            Kind::Split(ch) => {
                let half = 0.5 * w;
                ch[0].scan(lo, half, below, total, cdf, b);
                ch[1].scan(lo + half, half, below + ch[0].count, total, cdf, b);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn refine<F: Fn(f64) -> f64, R: Rng>(
        &mut self,
        lo: f64,
        w: f64,
        depth: u32,
        below: u64,
        total: f64,
        cdf: &F,
        threshold: f64,
        rng: &mut R,
    ) {
        if self.count == 0 {
            return;
        }
        if self.pending > 0 {
            let (_, ub, _) = self.pending_bound(lo, w, below, total, cdf);
            if ub > threshold {
                // one level per pass, so the next scan can raise the threshold first
                self.push_down(lo, w, depth, rng);
            }
            return;
        }
        if let Kind::Split(ch) = &mut self.kind {
            let half = 0.5 * w;
            let left_count = ch[0].count;
            ch[0].refine(lo, half, depth + 1, below, total, cdf, threshold, rng);
            ch[1].refine(lo + half, half, depth + 1, below + left_count, total, cdf, threshold, rng);
        }
    }
}
