//! Increment laws for the population driver `I`, their moments, and every
//! scalar constant of the limit theory derived from them.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zeta::ZetaTail;

const SUM_TOL: f64 = 1e-12;

/// Law of the driving increment `I`.
#[derive(Debug, Clone)]
pub enum IncrementLaw {
    Table(TableLaw),
    HeavyTail(HeavyTailLaw),
}

/// Finitely supported law; support sorted ascending, duplicates merged.
#[derive(Debug, Clone)]
pub struct TableLaw {
    support: Vec<(i64, f64)>,
    cumulative: Vec<f64>,
}

/// `I = K` with probability `w` where `P(K = k) ∝ k^(-alpha)`, else `I = -b`.
#[derive(Debug, Clone)]
pub struct HeavyTailLaw {
    alpha: f64,
    w: f64,
    b: u64,
    zeta: ZetaTail,
}

/// A probability written either as a JSON number or as a string (`"0.25"`, `"2/3"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Probability {
    Number(f64),
    Text(String),
}

impl Probability {
    fn value(&self) -> Result<f64> {
        match self {
            Probability::Number(p) => Ok(*p),
            Probability::Text(s) => {
                let s = s.trim();
                let parsed = match s.split_once('/') {
                    Some((num, den)) => num
                        .trim()
                        .parse::<f64>()
                        .ok()
                        .zip(den.trim().parse::<f64>().ok())
                        .map(|(a, b)| a / b),
                    None => s.parse::<f64>().ok(),
                };
                parsed
                    .filter(|p| p.is_finite())
                    .ok_or_else(|| Error::BadProbability(s.to_string()))
            }
        }
    }
}

/// JSON description of a law:
/// `{"table": {"1": 0.6667, "-1": 0.3333}}` or
/// `{"heavy_tail": {"alpha": 1.5, "w": 0.8, "b": 1}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    Table(BTreeMap<String, Probability>),
    HeavyTail { alpha: f64, w: f64, b: u64 },
}

impl LawSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::LawFormat(e.to_string()))
    }
}

impl IncrementLaw {
    /// Validates a law description; duplicate values are merged by summing.
    pub fn from_spec(spec: &LawSpec) -> Result<Self> {
        match spec {
            LawSpec::Table(entries) => {
                let mut pairs = Vec::with_capacity(entries.len());
                for (key, p) in entries {
                    let value = key
                        .trim()
                        .trim_start_matches('+')
                        .parse::<i64>()
                        .map_err(|_| Error::NonIntegerValue(key.clone()))?;
                    pairs.push((value, p.value()?));
                }
                Self::table(&pairs)
            }
            LawSpec::HeavyTail { alpha, w, b } => Self::heavy_tail(*alpha, *w, *b),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(&LawSpec::from_json(text)?)
    }

    pub fn table(entries: &[(i64, f64)]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyTable);
        }
        let mut merged: BTreeMap<i64, f64> = BTreeMap::new();
        for &(v, p) in entries {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidProbability(p));
            }
            *merged.entry(v).or_insert(0.0) += p;
        }
        let sum: f64 = merged.values().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::ProbabilitySum { sum });
        }
        if !merged.keys().any(|&v| v > 0) {
            return Err(Error::NoPositiveValue);
        }
        let support: Vec<(i64, f64)> = merged.into_iter().collect();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = support
            .iter()
            .map(|&(_, p)| {
                acc += p;
                acc
            })
            .collect();
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(IncrementLaw::Table(TableLaw {
            support,
            cumulative,
        }))
    }

    pub fn heavy_tail(alpha: f64, w: f64, b: u64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        if !(w > 0.0 && w <= 1.0) {
            return Err(Error::WeightOutOfRange(w));
        }
        if b == 0 {
            return Err(Error::BadNegativeJump);
        }
        Ok(IncrementLaw::HeavyTail(HeavyTailLaw {
            alpha,
            w,
            b,
            zeta: ZetaTail::new(alpha),
        }))
    }

    pub fn is_heavy_tailed(&self) -> bool {
        matches!(self, IncrementLaw::HeavyTail(_))
    }

    /// One draw by inverse CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        match self {
            IncrementLaw::Table(t) => {
                let u: f64 = rng.random();
                let idx = t.cumulative.partition_point(|&c| c <= u);
                t.support[idx.min(t.support.len() - 1)].0
            }
            IncrementLaw::HeavyTail(h) => {
                let u: f64 = rng.random();
                if u < h.w {
                    let v = 1.0 - rng.random::<f64>();
                    h.zeta.quantile_upper(v) as i64
                } else {
                    -(h.b as i64)
                }
            }
        }
    }

    pub fn moments(&self) -> MomentSet {
        match self {
            IncrementLaw::Table(t) => {
                let (mut ep, mut em, mut ep2, mut em2) = (0.0, 0.0, 0.0, 0.0);
                for &(v, p) in &t.support {
                    let x = v as f64;
                    if v > 0 {
                        ep += p * x;
                        ep2 += p * x * x;
                    } else if v < 0 {
                        em += p * -x;
                        em2 += p * x * x;
                    }
                }
                MomentSet {
                    e_plus: Moment::Finite(ep),
                    e_minus: em,
                    e_plus2: Moment::Finite(ep2),
                    e_minus2: em2,
                    var_plus: Moment::Finite((ep2 - ep * ep).max(0.0)),
                    var_minus: (em2 - em * em).max(0.0),
                }
            }
            IncrementLaw::HeavyTail(h) => {
                let q = 1.0 - h.w;
                let b = h.b as f64;
                // Σ k^(1-alpha) diverges for alpha <= 2
                MomentSet {
                    e_plus: Moment::Infinite,
                    e_minus: q * b,
                    e_plus2: Moment::Infinite,
                    e_minus2: q * b * b,
                    var_plus: Moment::Infinite,
                    var_minus: q * b * b - (q * b) * (q * b),
                }
            }
        }
    }

    pub fn support(&self) -> Option<&[(i64, f64)]> {
        match self {
            IncrementLaw::Table(t) => Some(&t.support),
            IncrementLaw::HeavyTail(_) => None,
        }
    }
}

impl HeavyTailLaw {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn b(&self) -> u64 {
        self.b
    }
    pub fn zeta(&self) -> &ZetaTail {
        &self.zeta
    }
}

impl fmt::Display for IncrementLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IncrementLaw::Table(t) => {
                write!(f, "table{{")?;
                for (i, (v, p)) in t.support.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v:+}: {p}")?;
                }
                write!(f, "}}")
            }
            IncrementLaw::HeavyTail(h) => write!(
                f,
                "heavy_tail{{alpha: {}, w: {}, b: {}}}",
                h.alpha, h.w, h.b
            ),
        }
    }
}

/// A moment that may diverge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    Finite(f64),
    Infinite,
}

impl Moment {
    pub fn finite(self) -> Option<f64> {
        match self {
            Moment::Finite(x) => Some(x),
            Moment::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Moment::Infinite)
    }

    fn exceeds(self, x: f64) -> bool {
        match self {
            Moment::Finite(y) => y > x,
            Moment::Infinite => true,
        }
    }
}

/// First and second moments of the positive and negative parts of `I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub e_plus: Moment,
    pub e_minus: f64,
    pub e_plus2: Moment,
    pub e_minus2: f64,
    pub var_plus: Moment,
    pub var_minus: f64,
}

impl MomentSet {
    /// `E I- < E I+`: the population grows without bound and `f_c` is defined.
    pub fn drift_condition(&self) -> bool {
        self.e_plus.exceeds(self.e_minus)
    }

    /// Critical fitness threshold; zero when `E I+` is infinite.
    pub fn f_c(&self) -> Result<f64> {
        if !self.drift_condition() {
            return Err(self.drift_error());
        }
        Ok(match self.e_plus {
            Moment::Finite(ep) => self.e_minus / ep,
            Moment::Infinite => 0.0,
        })
    }

    fn drift_error(&self) -> Error {
        Error::DriftCondition {
            e_minus: self.e_minus,
            e_plus: self.e_plus.finite().unwrap_or(f64::INFINITY),
        }
    }

    /// Constants of the central limit regime.
    pub fn limit_params(&self) -> Result<LimitParams> {
        let (Moment::Finite(ep), Moment::Finite(ep2), Moment::Finite(vp)) =
            (self.e_plus, self.e_plus2, self.var_plus)
        else {
            return Err(Error::InfiniteMean);
        };
        if !self.drift_condition() {
            return Err(self.drift_error());
        }
        let em = self.e_minus;
        let vm = self.var_minus;
        let f_c = em / ep;
        let sd_plus = vp.sqrt();
        let sd_minus = vm.sqrt();
        let rho = if em > 0.0 {
            let denom = sd_plus * sd_minus;
            assert!(denom > 0.0, "E I- > 0 forces σ(I+)σ(I-) > 0");
            ep * em / denom
        } else {
            0.0
        };
        let sigma2_sq = (f_c * f_c * vp + 2.0 * f_c * ep * em + vm).max(0.0);
        Ok(LimitParams {
            f_c,
            sigma_tilde1: (f_c * (1.0 - f_c) * ep).sqrt(),
            sigma2: sigma2_sq.sqrt(),
            rho,
            e_plus: ep,
            e_minus: em,
            e_plus2: ep2,
            e_minus2: self.e_minus2,
            var_plus: vp,
            var_minus: vm,
        })
    }
}

/// Which algebraic form of the one-dimensional marginal scale `g(f)` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalForm {
    /// `[f(1-f) E I+ + ((1-f)/(1-f_c))² σ₂²] / (E I+)²`, matching the covariance
    /// of the limit pair.
    CovarianceConsistent,
    /// Same bracket with raw second moments
    /// `f_c² E(I+²) + 2 f_c E I+ E I- + E(I-²)` in place of `σ₂²`.
    RawMoment,
}

/// Constants of the functional CLT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub f_c: f64,
    pub sigma_tilde1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    pub e_plus2: f64,
    pub e_minus2: f64,
    pub var_plus: f64,
    pub var_minus: f64,
}

impl LimitParams {
    pub fn sd_plus(&self) -> f64 {
        self.var_plus.sqrt()
    }

    pub fn sd_minus(&self) -> f64 {
        self.var_minus.sqrt()
    }

    /// Distribution function of `U[f_c, 1]`.
    pub fn target_cdf(&self, f: f64) -> f64 {
        uniform_above_cdf(self.f_c, f)
    }

    /// Standard deviation `g(f)` of the limit marginal of `√n Δ̂_n(f)`, `f ∈ [f_c, 1]`.
    pub fn marginal_std(&self, f: f64, form: MarginalForm) -> Result<f64> {
        if !(f >= self.f_c && f <= 1.0) {
            return Err(Error::OutOfRange {
                name: "f",
                value: f,
                lo: self.f_c,
                hi: 1.0,
            });
        }
        let bracket = match form {
            MarginalForm::CovarianceConsistent => self.sigma2 * self.sigma2,
            MarginalForm::RawMoment => {
                self.f_c * self.f_c * self.e_plus2
                    + 2.0 * self.f_c * self.e_plus * self.e_minus
                    + self.e_minus2
            }
        };
        let shrink = (1.0 - f) / (1.0 - self.f_c);
        let inner = f * (1.0 - f) * self.e_plus + shrink * shrink * bracket;
        Ok(inner.max(0.0).sqrt() / self.e_plus)
    }

    /// `EI₊ / lim X_n/n = 1/(1 - f_c)`. The limit pair is normalized by `1/EI₊`,
    /// while `F̂_n = L_n/X_n` divides by `X_n ≈ (1 - f_c) n EI₊`, so finite-`n`
    /// fluctuations are this factor wider than the limit pair.
    pub fn population_scale(&self) -> f64 {
        1.0 / (1.0 - self.f_c)
    }
}

/// `F(f) = (min(f,1) - f_c)_+ / (1 - f_c)`.
pub fn uniform_above_cdf(f_c: f64, f: f64) -> f64 {
    ((f.min(1.0) - f_c).max(0.0) / (1.0 - f_c)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_thirds() -> IncrementLaw {
        IncrementLaw::table(&[(1, 2.0 / 3.0), (-1, 1.0 / 3.0)]).unwrap()
    }

    #[test]
    fn make_law_examples() {
        assert!(two_thirds().support().is_some());
        let m = IncrementLaw::table(&[(1, 1.0)]).unwrap().moments();
        assert_eq!(m.e_minus, 0.0);
        assert!(matches!(
            IncrementLaw::table(&[(1, 0.6), (-1, 0.6)]),
            Err(Error::ProbabilitySum { .. })
        ));
    }

    #[test]
    fn make_law_rejections() {
        assert_eq!(
            IncrementLaw::table(&[(-1, 0.5), (0, 0.5)]).unwrap_err(),
            Error::NoPositiveValue
        );
        assert_eq!(IncrementLaw::table(&[]).unwrap_err(), Error::EmptyTable);
        assert!(matches!(
            IncrementLaw::heavy_tail(2.5, 0.8, 1),
            Err(Error::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            IncrementLaw::heavy_tail(1.0, 0.8, 1),
            Err(Error::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            IncrementLaw::from_json(r#"{"table": {"1.5": 1.0}}"#),
            Err(Error::NonIntegerValue(_))
        ));
    }

    #[test]
    fn duplicates_merge() {
        let law = IncrementLaw::table(&[(1, 0.25), (-1, 0.5), (1, 0.25)]).unwrap();
        assert_eq!(law.support().unwrap(), &[(-1, 0.5), (1, 0.5)]);
        let law = IncrementLaw::from_json(r#"{"table": {"+1": 0.25, "1": "1/4", "-2": "0.5"}}"#)
            .unwrap();
        assert_eq!(law.support().unwrap(), &[(-2, 0.5), (1, 0.5)]);
    }

    #[test]
    fn json_forms() {
        let law = IncrementLaw::from_json(r#"{"table": {"1": 0.6667, "-1": 0.3333}}"#).unwrap();
        assert_eq!(law.support().unwrap().len(), 2);
        let law = IncrementLaw::from_json(r#"{"heavy_tail": {"alpha": 1.5, "w": 0.8, "b": 1}}"#)
            .unwrap();
        assert!(law.is_heavy_tailed());
        assert!(LawSpec::from_json(r#"{"normal": {}}"#).is_err());
    }

    #[test]
    fn heavy_tail_moments() {
        let m = IncrementLaw::heavy_tail(1.5, 0.8, 1).unwrap().moments();
        assert!(m.e_plus.is_infinite());
        assert!((m.e_minus - 0.2).abs() < 1e-15);
        assert!(m.drift_condition());
        assert_eq!(m.f_c().unwrap(), 0.0);
        assert_eq!(m.limit_params().unwrap_err(), Error::InfiniteMean);
    }

    #[test]
    fn drift_violation_is_flagged_not_fatal() {
        let law = IncrementLaw::table(&[(1, 0.5), (-1, 0.5)]).unwrap();
        let m = law.moments();
        assert!(!m.drift_condition());
        assert!(matches!(m.limit_params(), Err(Error::DriftCondition { .. })));
        assert!(matches!(m.f_c(), Err(Error::DriftCondition { .. })));
    }

    #[test]
    fn all_positive_law_degenerates() {
        let p = IncrementLaw::table(&[(1, 1.0)])
            .unwrap()
            .moments()
            .limit_params()
            .unwrap();
        assert_eq!(p.f_c, 0.0);
        assert_eq!(p.sigma_tilde1, 0.0);
        assert_eq!(p.sigma2, 0.0);
        assert_eq!(p.rho, 0.0);
    }

    #[test]
    fn marginal_std_endpoints_and_range() {
        let p = two_thirds().moments().limit_params().unwrap();
        let form = MarginalForm::CovarianceConsistent;
        assert_eq!(p.marginal_std(1.0, form).unwrap(), 0.0);
        assert!((p.marginal_std(0.75, form).unwrap() - 0.75).abs() < 1e-12);
        assert!((p.marginal_std(0.5, form).unwrap() - 1.5f64.sqrt()).abs() < 1e-12);
        assert!(p.marginal_std(0.4, form).is_err());
        assert!(p.marginal_std(1.01, form).is_err());
    }

    #[test]
    fn sample_degenerate_law() {
        let law = IncrementLaw::table(&[(1, 1.0)]).unwrap();
        let mut rng = rand::rng();
        assert!((0..100).all(|_| law.sample(&mut rng) == 1));
    }
}
