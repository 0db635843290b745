//! Estimators and goodness-of-fit statistics.
//!
//! Normal distribution functions use `libm`'s `erf`/`erfc` (the musl/FreeBSD
//! rational approximations, accurate to about one ulp).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample Kolmogorov–Smirnov distance
/// `max_i max(i/N - cdf(x_(i)), cdf(x_(i)) - (i-1)/N)`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    let xs = sorted(samples);
    let n = xs.len() as f64;
    Ok(xs.iter().enumerate().fold(0.0, |acc, (i, &x)| {
        let c = cdf(x);
        let hi = (i + 1) as f64 / n - c;
        let lo = c - i as f64 / n;
        acc.max(hi).max(lo)
    }))
}

/// Two-sample Kolmogorov–Smirnov distance `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty);
    }
    let xa = sorted(a);
    let xb = sorted(b);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// `Φ(x / σ)`.
pub fn normal_cdf(x: f64, sigma: f64) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::NonPositiveScale(sigma));
    }
    Ok(0.5 * libm::erfc(-x / (sigma * std::f64::consts::SQRT_2)))
}

/// Distribution function of `σ |Z|`.
pub fn half_normal_cdf(x: f64, sigma: f64) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::NonPositiveScale(sigma));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(libm::erf(x / (sigma * std::f64::consts::SQRT_2)))
}

/// Mean and variance with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    pub se_mean: f64,
    /// `√((m₄ - (N-3)/(N-1) s⁴) / N)` with `m₄` the sample fourth central moment.
    pub se_var: f64,
}

pub fn mc_estimate(samples: &[f64]) -> Result<MomentEstimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    let var = m2 / (nf - 1.0);
    let m4 = m4 / nf;
    let var_of_var = (m4 - (nf - 3.0) / (nf - 1.0) * var * var) / nf;
    Ok(MomentEstimate {
        n,
        mean,
        var,
        se_mean: (var / nf).sqrt(),
        se_var: var_of_var.max(0.0).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovEstimate {
    pub n: usize,
    /// Unbiased sample covariance.
    pub cov: f64,
    pub corr: f64,
    /// Standard error of `cov` from the spread of the centered products.
    pub se: f64,
}

pub fn cov_estimate(x: &[f64], y: &[f64]) -> Result<CovEstimate> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let products: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxy: f64 = products.iter().sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let cov = sxy / (nf - 1.0);
    let pm = sxy / nf;
    let pvar = products.iter().map(|q| (q - pm) * (q - pm)).sum::<f64>() / (nf - 1.0);
    let corr = if sxx > 0.0 && syy > 0.0 {
        sxy / (sxx * syy).sqrt()
    } else {
        0.0
    };
    Ok(CovEstimate {
        n,
        cov,
        corr,
        se: (pvar / nf).sqrt(),
    })
}

/// Samples with an optional paired coordinate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub paired: Option<Vec<f64>>,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            paired: None,
        }
    }

    pub fn paired(values: Vec<f64>, paired: Vec<f64>) -> Self {
        Self {
            values,
            paired: Some(paired),
        }
    }

    pub fn estimate(&self) -> Result<MomentEstimate> {
        mc_estimate(&self.values)
    }

    pub fn covariance(&self) -> Result<CovEstimate> {
        let other = self.paired.as_deref().ok_or(Error::Empty)?;
        cov_estimate(&self.values, other)
    }
}

/// Pass/fail record shared by every experiment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl TestReport {
    /// Passes when `statistic <= threshold`.
    pub fn at_most(test: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self {
            test: test.into(),
            statistic,
            threshold,
            pass: statistic <= threshold,
        }
    }

    /// Passes when `statistic >= threshold`.
    pub fn at_least(test: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self {
            test: test.into(),
            statistic,
            threshold,
            pass: statistic >= threshold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_examples() {
        assert!((ks_statistic(&[0.5], |x| x).unwrap() - 0.5).abs() < 1e-15);
        let n = 99;
        let q: Vec<f64> = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
        assert!(ks_statistic(&q, |x| x).unwrap() <= 1.0 / (n + 1) as f64 + 1e-12);
        assert_eq!(ks_statistic(&[], |x| x).unwrap_err(), Error::Empty);
    }

    #[test]
    fn ks_two_sample_basics() {
        let a = [0.1, 0.2, 0.3];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 0.1], &[1.0, 2.0]).unwrap(), 1.0);
        assert!((ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[2.5]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0, 2.0).unwrap(), 0.5);
        assert_eq!(half_normal_cdf(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(half_normal_cdf(-1.0, 1.0).unwrap(), 0.0);
        assert!(normal_cdf(1.0, 0.0).is_err());
        assert!(half_normal_cdf(1.0, -1.0).is_err());
    }

    #[test]
    fn moment_examples() {
        let e = mc_estimate(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(e.var, 0.0);
        let e = mc_estimate(&[0.0, 2.0]).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.var, 2.0);
        assert!(mc_estimate(&[1.0]).is_err());
        let x = [0.3, -1.2, 2.5, 0.7];
        assert!((cov_estimate(&x, &x).unwrap().corr - 1.0).abs() < 1e-15);
        assert!(cov_estimate(&x, &x[..3]).is_err());
        let s = SampleSet::paired(x.to_vec(), x.iter().map(|v| -v).collect());
        assert!((s.covariance().unwrap().corr + 1.0).abs() < 1e-15);
        assert!(SampleSet::new(x.to_vec()).covariance().is_err());
    }

    #[test]
    fn report_schema() {
        let r = TestReport::at_most("ks", 0.02, 0.05);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, r#"{"test":"ks","statistic":0.02,"threshold":0.05,"pass":true}"#);
        assert!(!TestReport::at_least("frac", 0.5, 0.9).pass);
    }
}
