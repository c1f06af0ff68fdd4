//! Cardinality probability of a 0/1 matrix with fixed column sums.
//!
//! For `m` rows and column sums `C_1..C_n`, `T` is the number of rows that
//! are 1 in every column. Two columns give the hypergeometric law
//!
//! ```text
//! P(T | C1, C2) = C(C1, T) · C(m − C1, C2 − T) / C(m, C2)
//! ```
//!
//! and more columns are folded in one at a time, the all-1 row count of the
//! columns so far acting as the first column of the next two-column step.
//!
//! Distributions are exact (integer weights over a common integer total)
//! unless `m` exceeds [`EXACT_ROW_LIMIT`] or the support would be wider than
//! [`EXACT_WIDTH_LIMIT`], in which case a floating-point evaluation built on
//! term ratios takes over.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Above this many rows distributions are computed in floating point.
pub const EXACT_ROW_LIMIT: u64 = 1_000_000;
/// Above this support width distributions are computed in floating point.
pub const EXACT_WIDTH_LIMIT: u64 = 1_024;
/// Floating-point tails below this fraction of the peak are dropped.
const TAIL_CUTOFF: f64 = 1e-18;

/// Row count `m` and column sums `C_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnConstraints {
    pub m: BigUint,
    pub columns: Vec<BigUint>,
}

impl ColumnConstraints {
    pub fn new(m: impl Into<BigUint>, columns: impl IntoIterator<Item = impl Into<BigUint>>) -> Self {
        ColumnConstraints {
            m: m.into(),
            columns: columns.into_iter().map(Into::into).collect(),
        }
    }

    fn check(&self) -> Result<()> {
        for c in &self.columns {
            if c > &self.m {
                return Err(Error::Domain {
                    column: c.to_string(),
                    rows: self.m.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Drop every full column (`C_j = m`); they cannot change `T`.
pub fn reduce_columns(constraints: &ColumnConstraints) -> ColumnConstraints {
    ColumnConstraints {
        m: constraints.m.clone(),
        columns: constraints
            .columns
            .iter()
            .filter(|&c| c != &constraints.m)
            .cloned()
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Weights {
    /// `P(support_min + i) = weights[i] / total`
    Exact { weights: Vec<BigUint>, total: BigUint },
    Approx(Vec<f64>),
}

/// Probability mass over `T = support_min ..= support_max`.
///
/// Exact distributions store every non-zero probability. Floating-point
/// ones store a window around the mode and drop tails that fall below
/// double precision; the support still reports the full range of `T` the
/// model allows.
#[derive(Debug, Clone)]
pub struct CardinalityDistribution {
    /// First stored value.
    min: u64,
    weights: Weights,
    support: (u64, u64),
}

impl CardinalityDistribution {
    pub fn point_mass(t: u64) -> Self {
        CardinalityDistribution {
            min: t,
            weights: Weights::Exact {
                weights: vec![BigUint::one()],
                total: BigUint::one(),
            },
            support: (t, t),
        }
    }

    /// Build from explicit rationals; entries must be non-negative and sum
    /// to one.
    pub fn from_rationals(min: u64, probabilities: &[BigRational]) -> Self {
        let lcm = probabilities
            .iter()
            .fold(num_bigint::BigInt::one(), |acc, p| acc.lcm(p.denom()));
        let weights: Vec<BigUint> = probabilities
            .iter()
            .map(|p| {
                (p.numer() * (&lcm / p.denom()))
                    .to_biguint()
                    .expect("non-negative probability")
            })
            .collect();
        let total = lcm.to_biguint().expect("positive denominator");
        Self::exact(min, weights, total)
    }

    /// Integer counts for `T = 0, 1, ...` over a common total.
    pub(crate) fn from_counts(counts: Vec<BigUint>, total: BigUint) -> Self {
        Self::exact(0, counts, total)
    }

    fn exact(mut min: u64, mut weights: Vec<BigUint>, total: BigUint) -> Self {
        let lead = weights.iter().take_while(|w| w.is_zero()).count();
        weights.drain(..lead);
        min += lead as u64;
        while weights.last().is_some_and(Zero::is_zero) {
            weights.pop();
        }
        let support = (min, (min + weights.len() as u64).saturating_sub(1));
        CardinalityDistribution {
            min,
            weights: Weights::Exact { weights, total },
            support,
        }
    }

    fn approx(mut min: u64, mut weights: Vec<f64>, support: (u64, u64)) -> Self {
        let peak = weights.iter().cloned().fold(0.0, f64::max);
        let keep = |w: &f64| *w > peak * TAIL_CUTOFF;
        let lead = weights.iter().take_while(|w| !keep(w)).count();
        weights.drain(..lead);
        min += lead as u64;
        while weights.last().is_some_and(|w| !keep(w)) {
            weights.pop();
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        CardinalityDistribution {
            min,
            weights: Weights::Approx(weights),
            support,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.weights, Weights::Exact { .. })
    }

    pub fn support_min(&self) -> u64 {
        self.support.0
    }

    pub fn support_max(&self) -> u64 {
        self.support.1
    }

    /// First and last `T` with a stored probability. Equal to the support
    /// for exact distributions.
    pub fn window(&self) -> (u64, u64) {
        (self.min, self.min + self.len() as u64 - 1)
    }

    fn stored(&self, t: u64) -> Option<usize> {
        (t >= self.min && t < self.min + self.len() as u64).then(|| (t - self.min) as usize)
    }

    /// Number of stored probabilities.
    pub fn len(&self) -> usize {
        match &self.weights {
            Weights::Exact { weights, .. } => weights.len(),
            Weights::Approx(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, t: u64) -> bool {
        t >= self.support_min() && t <= self.support_max()
    }

    /// `P(T = t)`; zero outside the stored window.
    pub fn probability(&self, t: u64) -> BigRational {
        let Some(i) = self.stored(t) else {
            return BigRational::zero();
        };
        match &self.weights {
            Weights::Exact { weights, total } => {
                BigRational::new(weights[i].clone().into(), total.clone().into())
            }
            Weights::Approx(w) => BigRational::from_float(w[i]).unwrap_or_else(BigRational::zero),
        }
    }

    pub fn probability_f64(&self, t: u64) -> f64 {
        let Some(i) = self.stored(t) else {
            return 0.0;
        };
        match &self.weights {
            Weights::Exact { weights, total } => ratio_f64(&weights[i], total),
            Weights::Approx(w) => w[i],
        }
    }

    /// `(T, P(T))` over the stored window.
    pub fn probabilities(&self) -> Vec<(u64, BigRational)> {
        let (lo, hi) = self.window();
        (lo..=hi)
            .map(|t| (t, self.probability(t)))
            .collect()
    }

    /// Sum of all probabilities, exactly one for exact distributions.
    pub fn total(&self) -> BigRational {
        match &self.weights {
            Weights::Exact { weights, total } => BigRational::new(
                weights.iter().sum::<BigUint>().into(),
                total.clone().into(),
            ),
            Weights::Approx(w) => {
                BigRational::from_float(w.iter().sum::<f64>()).unwrap_or_else(BigRational::zero)
            }
        }
    }

    /// Most probable `T`, the smallest one on ties.
    pub fn mode(&self) -> u64 {
        let best = match &self.weights {
            Weights::Exact { weights, .. } => argmax_first(weights.iter()),
            Weights::Approx(w) => argmax_first(w.iter()),
        };
        self.min + best as u64
    }

    /// `Σ T · P(T)`.
    pub fn mean(&self) -> BigRational {
        match &self.weights {
            Weights::Exact { weights, total } => {
                let num: BigUint = weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w * BigUint::from(self.min + i as u64))
                    .sum();
                BigRational::new(num.into(), total.clone().into())
            }
            Weights::Approx(_) => {
                BigRational::from_float(self.mean_f64()).unwrap_or_else(BigRational::zero)
            }
        }
    }

    pub fn mean_f64(&self) -> f64 {
        match &self.weights {
            Weights::Exact { .. } => rational_f64(&self.mean()),
            Weights::Approx(w) => w
                .iter()
                .enumerate()
                .map(|(i, p)| (self.min + i as u64) as f64 * p)
                .sum(),
        }
    }

    /// `{"min": T_min, "p": ["num/den", ...]}`. Floating-point distributions
    /// write decimal strings instead of fractions and add the full
    /// `"support": [lo, hi]`.
    pub fn to_json(&self) -> Value {
        match &self.weights {
            Weights::Exact { .. } => {
                let p: Vec<String> = self
                    .probabilities()
                    .into_iter()
                    .map(|(_, p)| format!("{}/{}", p.numer(), p.denom()))
                    .collect();
                json!({ "min": self.min, "p": p })
            }
            Weights::Approx(w) => {
                let p: Vec<String> = w.iter().map(|x| format!("{x:e}")).collect();
                json!({ "min": self.min, "p": p, "support": [self.support.0, self.support.1] })
            }
        }
    }
}

impl PartialEq for CardinalityDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.probabilities() == other.probabilities()
    }
}

impl fmt::Display for CardinalityDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.window();
        for (i, t) in (lo..=hi).enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match &self.weights {
                Weights::Exact { .. } => write!(f, "P({t})={}", self.probability(t))?,
                Weights::Approx(w) => write!(f, "P({t})≈{:.6e}", w[i])?,
            }
        }
        Ok(())
    }
}

fn argmax_first<T: PartialOrd>(items: impl Iterator<Item = T>) -> usize {
    let mut best: Option<(usize, T)> = None;
    for (i, x) in items.enumerate() {
        match &best {
            Some((_, b)) if !(x > *b) => {}
            _ => best = Some((i, x)),
        }
    }
    best.map_or(0, |(i, _)| i)
}

fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    rational_f64(&BigRational::new(num.clone().into(), den.clone().into()))
}

/// Lossy conversion that survives numerators and denominators beyond f64.
pub fn rational_f64(r: &BigRational) -> f64 {
    if let Some(x) = r.to_f64() {
        if x.is_finite() {
            return x;
        }
    }
    let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
    let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
    n / d
}

/// `C(n, k)` by the multiplicative formula.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

fn small(x: &BigUint, what: &str) -> Result<u64> {
    x.to_u64()
        .ok_or_else(|| Error::TooLarge(format!("{what} {x} does not fit in 64 bits")))
}

/// Hypergeometric law of `T` for two columns.
pub fn two_column(m: u64, c1: u64, c2: u64) -> Result<CardinalityDistribution> {
    n_column(&ColumnConstraints::new(m, [c1, c2]))
}

/// Distribution of the all-1 row count for any number of columns.
pub fn n_column(constraints: &ColumnConstraints) -> Result<CardinalityDistribution> {
    constraints.check()?;
    let reduced = reduce_columns(constraints);
    let m = small(&reduced.m, "row count")?;
    let mut columns = reduced
        .columns
        .iter()
        .map(|c| small(c, "column sum"))
        .collect::<Result<Vec<u64>>>()?;
    if columns.is_empty() {
        return Ok(CardinalityDistribution::point_mass(m));
    }
    // ascending order keeps intermediate supports small
    columns.sort_unstable();
    Ok(chain_columns(m, &columns))
}

/// Fold the columns in the order given. Every column must be at most `m`.
pub fn chain_columns(m: u64, columns: &[u64]) -> CardinalityDistribution {
    let Some((&first, rest)) = columns.split_first() else {
        return CardinalityDistribution::point_mass(m);
    };
    let width = columns.iter().copied().min().unwrap_or(first);
    let exact = m <= EXACT_ROW_LIMIT && width <= EXACT_WIDTH_LIMIT;
    let mut dist = CardinalityDistribution::point_mass(first);
    for &c in rest {
        dist = if exact {
            fold_exact(m, &dist, c)
        } else {
            fold_approx(m, &dist, c)
        };
    }
    dist
}

/// Combine the distribution of the intermediate all-1 count `I` with one
/// more column of sum `c`:
/// `P(T) = Σ_I P(I) · C(I, T) · C(m − I, c − T) / C(m, c)`.
fn fold_exact(m: u64, prev: &CardinalityDistribution, c: u64) -> CardinalityDistribution {
    let Weights::Exact { weights, total } = &prev.weights else {
        unreachable!("exact fold over approximate input")
    };
    let i_min = prev.support_min();
    let i_max = prev.support_max();
    let t_min = (i_min + c).saturating_sub(m);
    let t_max = i_max.min(c);
    let mut out = vec![BigUint::zero(); (t_max - t_min + 1) as usize];

    // f(I) = C(I, lo) · C(m − I, c − lo) with lo = max(0, I + c − m)
    let lo = |i: u64| (i + c).saturating_sub(m);
    let mut f = binomial(i_min, lo(i_min)) * binomial(m - i_min, c - lo(i_min));
    for (k, w) in weights.iter().enumerate() {
        let i = i_min + k as u64;
        if k > 0 {
            let prev_i = i - 1;
            if i + c <= m {
                f = f * (m - prev_i - c) / (m - prev_i);
            } else {
                f = f * i / (i - (m - c));
            }
        }
        if w.is_zero() {
            continue;
        }
        let (lo_t, hi_t) = (lo(i), i.min(c));
        let mut term = f.clone();
        for t in lo_t..=hi_t {
            if t > lo_t {
                let s = t - 1;
                term = term * ((i - s) * (c - s)) / (t * (m + t - i - c));
            }
            out[(t - t_min) as usize] += w * &term;
        }
    }
    CardinalityDistribution::exact(t_min, out, total * binomial(m, c))
}

/// Hypergeometric pmf over `[lo, hi]` in floating point, built outward from
/// the mode with term ratios and cut where it falls under [`TAIL_CUTOFF`].
fn hypergeometric_f64(m: u64, c1: u64, c2: u64) -> (u64, Vec<f64>) {
    let lo = (c1 + c2).saturating_sub(m);
    let hi = c1.min(c2);
    let (mf, c1f, c2f) = (m as f64, c1 as f64, c2 as f64);
    let mode = (((c1f + 1.0) * (c2f + 1.0) / (mf + 2.0)).floor() as u64).clamp(lo, hi);
    // ratio P(t + 1) / P(t)
    let up = |t: f64| (c1f - t) * (c2f - t) / ((t + 1.0) * (mf - c1f - c2f + t + 1.0));

    let mut above = Vec::new();
    let mut w = 1.0;
    let mut t = mode;
    while t < hi {
        w *= up(t as f64);
        if w < TAIL_CUTOFF {
            break;
        }
        above.push(w);
        t += 1;
    }
    let mut below = Vec::new();
    let mut w = 1.0;
    let mut t = mode;
    while t > lo {
        w /= up((t - 1) as f64);
        if w < TAIL_CUTOFF {
            break;
        }
        below.push(w);
        t -= 1;
    }
    let start = mode - below.len() as u64;
    let mut pmf: Vec<f64> = below.into_iter().rev().collect();
    pmf.push(1.0);
    pmf.extend(above);
    let sum: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= sum);
    (start, pmf)
}

fn fold_approx(m: u64, prev: &CardinalityDistribution, c: u64) -> CardinalityDistribution {
    let (i_lo, i_hi) = prev.window();
    let t_min = (i_lo + c).saturating_sub(m);
    let t_max = i_hi.min(c);
    let mut out = vec![0.0; (t_max - t_min + 1) as usize];
    for i in i_lo..=i_hi {
        let p = prev.probability_f64(i);
        if p == 0.0 {
            continue;
        }
        let (start, pmf) = hypergeometric_f64(m, i, c);
        for (k, q) in pmf.into_iter().enumerate() {
            out[(start - t_min) as usize + k] += p * q;
        }
    }
    let support = (
        (prev.support_min() + c).saturating_sub(m),
        prev.support_max().min(c),
    );
    CardinalityDistribution::approx(t_min, out, support)
}

/// `P(T)` as an `f64` list over the stored window, for plotting.
pub fn as_f64_series(d: &CardinalityDistribution) -> Vec<f64> {
    let (lo, hi) = d.window();
    (lo..=hi)
        .map(|t| d.probability_f64(t))
        .collect()
}

/// Exact rational from a ratio of small integers.
pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(
        num_bigint::BigInt::from_u64(num).expect("u64"),
        num_bigint::BigInt::from_u64(den).expect("u64"),
    )
}
