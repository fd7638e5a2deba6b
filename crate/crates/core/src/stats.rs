//! Two-sample Kolmogorov-Smirnov test, Pearson correlation and exact
//! mean/median over integer samples.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 paired observations, got {0}")]
    TooFewPoints(usize),
    #[error("correlation is undefined for constant input")]
    ConstantInput,
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Set when the true p-value is below the smallest positive f64 and
    /// `p_value` holds that smallest value instead of zero.
    #[serde(default)]
    pub underflow: bool,
}

impl StatResult {
    fn new(statistic: f64, p: f64) -> Self {
        if p > 0.0 {
            StatResult {
                statistic,
                p_value: p.min(1.0),
                underflow: false,
            }
        } else {
            StatResult {
                statistic,
                p_value: f64::from_bits(1),
                underflow: true,
            }
        }
    }
}

fn check_finite(xs: &[f64]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// Largest absolute distance between the two empirical CDFs.
///
/// Both samples are swept in merged sorted order; tied values advance both
/// CDFs before the distance is measured.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    check_finite(a)?;
    check_finite(b)?;
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Survival function of the limiting Kolmogorov distribution, P(K > x).
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // Jacobi theta form, accurate where the alternating series is slow.
        let w = PI * PI / (8.0 * x * x);
        let mut sum = 0.0;
        for k in (1..200).step_by(2) {
            let term = (-(k as f64).powi(2) * w).exp();
            sum += term;
            if term < 1e-300 || term < sum * 1e-17 {
                break;
            }
        }
        (1.0 - (2.0 * PI).sqrt() / x * sum).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..200 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * x * x).exp();
            if term == 0.0 {
                break;
            }
            sum += if k % 2 == 1 { term } else { -term };
            if term < sum.abs() * 1e-17 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// Two-sample KS test with the asymptotic p-value
/// `Q(sqrt(nm/(n+m)) * D)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<StatResult, StatsError> {
    let d = ks_statistic(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let lambda = (n * m / (n + m)).sqrt() * d;
    Ok(StatResult::new(d, kolmogorov_sf(lambda)))
}

/// Sample Pearson correlation with a two-sided p-value from Student's t
/// distribution on `n - 2` degrees of freedom.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<StatResult, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(StatsError::TooFewPoints(xs.len()));
    }
    check_finite(xs)?;
    check_finite(ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = n - 2.0;
    let one_minus_r2 = (1.0 - r) * (1.0 + r);
    let p = if one_minus_r2 <= 0.0 {
        0.0
    } else {
        // P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2) and df/(df+t^2) = 1 - r^2.
        statrs::function::beta::beta_reg(df / 2.0, 0.5, one_minus_r2)
    };
    if p == 0.0 && one_minus_r2 <= 0.0 {
        // Exact linear relation: report zero without the underflow marker.
        return Ok(StatResult {
            statistic: r,
            p_value: 0.0,
            underflow: false,
        });
    }
    Ok(StatResult::new(r, p))
}

/// Exact mean of non-negative integers; zero for an empty slice.
pub fn exact_mean(values: &[u64]) -> Ratio<u64> {
    if values.is_empty() {
        return Ratio::from_integer(0);
    }
    Ratio::new(values.iter().sum(), values.len() as u64)
}

/// Exact median; the two middle values are averaged for even lengths.
pub fn exact_median(values: &[u64]) -> Ratio<u64> {
    if values.is_empty() {
        return Ratio::from_integer(0);
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        Ratio::from_integer(v[mid])
    } else {
        Ratio::new(v[mid - 1] + v[mid], 2)
    }
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Exact non-negative fraction, serialized with its decimal value alongside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fraction(pub Ratio<u64>);

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        if den == 0 {
            Fraction(Ratio::from_integer(0))
        } else {
            Fraction(Ratio::new(num, den))
        }
    }

    pub fn zero() -> Self {
        Fraction(Ratio::from_integer(0))
    }

    pub fn value(&self) -> f64 {
        ratio_to_f64(self.0)
    }
}

impl From<Ratio<u64>> for Fraction {
    fn from(r: Ratio<u64>) -> Self {
        Fraction(r)
    }
}

impl std::fmt::Display for Fraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if *self.0.denom() == 1 {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

#[derive(Serialize, Deserialize)]
struct FractionRepr {
    num: u64,
    den: u64,
    #[serde(default, skip_deserializing)]
    value: f64,
}

impl Serialize for Fraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FractionRepr {
            num: *self.0.numer(),
            den: *self.0.denom(),
            value: self.value(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = FractionRepr::deserialize(d)?;
        if r.den == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Fraction::new(r.num, r.den))
    }
}
