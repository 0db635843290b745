//! Zeta-law tails and exact inverse-CDF sampling for `P(K = k) ∝ k^(-alpha)`, `k >= 1`.
//!
//! Tail probabilities `P(K > k) = ζ(alpha, k + 1) / ζ(alpha)` come from the Hurwitz
//! zeta function, evaluated by Euler–Maclaurin summation. Small `k` are served from a
//! table built once per law; larger values are located by bisection on the analytic
//! tail, so there is no truncation of the support below [`MAX_INCREMENT`].

/// Largest value the sampler returns. Draws beyond it (probability about
/// `0.77 * 2^-26.5` for alpha = 1.5) are clamped; 2^53 is the largest integer that
/// round-trips through `f64`.
pub const MAX_INCREMENT: u64 = 1 << 53;

const TABLE_LEN: usize = 1024;

// B_{2k} / (2k)! for k = 1..=7
const EM_COEFFS: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
];

/// Hurwitz zeta `ζ(s, q) = Σ_{j>=0} (q + j)^(-s)` for `s > 1`, `q > 0`.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q > 0.0);
    const SHIFT: f64 = 16.0;
    let mut sum = 0.0;
    let mut a = q;
    while a < SHIFT {
        sum += a.powf(-s);
        a += 1.0;
    }
    let mut tail = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // rising factorial s (s+1) ... (s+2k-2) times a^(-s-2k+1)
    let inv_a2 = 1.0 / (a * a);
    let mut term = s * a.powf(-s - 1.0);
    for (k, c) in EM_COEFFS.iter().enumerate() {
        tail += c * term;
        let j = 2.0 * k as f64;
        term *= (s + j + 1.0) * (s + j + 2.0) * inv_a2;
    }
    sum + tail
}

/// Inverse-CDF sampler for the zeta law with exponent `alpha > 1`.
#[derive(Debug, Clone)]
pub struct ZetaTail {
    alpha: f64,
    zeta: f64,
    // table[k] = P(K > k), k = 0..=TABLE_LEN
    table: Vec<f64>,
}

impl ZetaTail {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 1.0, "zeta law needs alpha > 1");
        let zeta = hurwitz_zeta(alpha, 1.0);
        let mut table = vec![0.0; TABLE_LEN + 1];
        table[TABLE_LEN] = hurwitz_zeta(alpha, TABLE_LEN as f64 + 1.0) / zeta;
        for k in (1..=TABLE_LEN).rev() {
            table[k - 1] = table[k] + (k as f64).powf(-alpha) / zeta;
        }
        Self { alpha, zeta, table }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `ζ(alpha)`, the normalizing constant.
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// `P(K > k)`.
    pub fn tail(&self, k: u64) -> f64 {
        match self.table.get(k as usize) {
            Some(&t) => t,
            None => hurwitz_zeta(self.alpha, k as f64 + 1.0) / self.zeta,
        }
    }

    /// `P(K = k)`.
    pub fn pmf(&self, k: u64) -> f64 {
        if k == 0 {
            0.0
        } else {
            (k as f64).powf(-self.alpha) / self.zeta
        }
    }

    /// Smallest `k >= 1` with `P(K > k) < v`, for `v` in `(0, 1]`.
    ///
    /// With `v = 1 - u` and `u ~ U[0, 1)` this is an exact draw from the law.
    pub fn quantile_upper(&self, v: f64) -> u64 {
        if self.table[TABLE_LEN] < v {
            return 1 + self.table[1..].partition_point(|&t| t >= v) as u64;
        }
        if self.tail(MAX_INCREMENT) >= v {
            return MAX_INCREMENT;
        }
        // tail(k) ~ (k + 1/2)^(1 - alpha) / ((alpha - 1) ζ)
        let a1 = self.alpha - 1.0;
        let guess = (a1 * self.zeta * v).powf(-1.0 / a1) - 0.5;
        let guess = guess.clamp(TABLE_LEN as f64, MAX_INCREMENT as f64) as u64;

        let mut lo = guess.saturating_sub(1).max(TABLE_LEN as u64);
        while lo > TABLE_LEN as u64 && self.tail(lo) < v {
            lo = TABLE_LEN as u64 + (lo - TABLE_LEN as u64) / 2;
        }
        let mut hi = (guess + 1).min(MAX_INCREMENT).max(lo + 1);
        while self.tail(hi) >= v {
            lo = hi;
            hi = hi.saturating_mul(2).min(MAX_INCREMENT);
        }
        // tail(lo) >= v > tail(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.tail(mid) >= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_zeta(s: f64, q: f64) -> f64 {
        // pairwise-ish direct sum plus integral tail correction
        let n = 2_000_000u64;
        let mut sum = 0.0;
        for j in (0..n).rev() {
            sum += (q + j as f64).powf(-s);
        }
        let a = q + n as f64;
        sum + a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s)
    }

    #[test]
    fn hurwitz_known_values() {
        // ζ(2) = π²/6
        let z2 = hurwitz_zeta(2.0, 1.0);
        assert!((z2 - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
        // ζ(1.5) = 2.612375348685488...
        assert!((hurwitz_zeta(1.5, 1.0) - 2.612_375_348_685_488).abs() < 1e-13);
        for &(s, q) in &[(1.5, 3.0), (1.2, 1.0), (1.9, 40.5), (1.5, 1e9)] {
            let e = brute_zeta(s, q);
            assert!(
                ((hurwitz_zeta(s, q) - e) / e).abs() < 1e-9,
                "s={s} q={q}"
            );
        }
    }

    #[test]
    fn table_and_analytic_tails_agree() {
        let z = ZetaTail::new(1.5);
        assert!((z.tail(0) - 1.0).abs() < 1e-13);
        for k in [1u64, 10, 500, 1024] {
            let analytic = hurwitz_zeta(1.5, k as f64 + 1.0) / z.zeta();
            assert!((z.tail(k) - analytic).abs() < 1e-13);
        }
    }

    #[test]
    fn quantile_is_generalized_inverse() {
        let z = ZetaTail::new(1.5);
        for &v in &[1.0, 0.9, 0.5, 0.2, 0.03, 1e-3, 1e-5, 1e-7, 3e-8] {
            let k = z.quantile_upper(v);
            assert!(z.tail(k) < v, "v={v} k={k}");
            assert!(k == 1 || z.tail(k - 1) >= v, "v={v} k={k}");
        }
        assert_eq!(z.quantile_upper(1.0), 1);
        assert_eq!(z.quantile_upper(1e-300), MAX_INCREMENT);
    }
}
