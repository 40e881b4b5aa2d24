//! Mutation operators over [`BitString`]s.
//!
//! Every operator is described by an [`OperatorSpec`] (parsed from strings
//! such as `pmut:1.5`) and instantiated for a fixed string length as a
//! [`MutationOperator`]. The instantiated operator is immutable and can be
//! shared between threads; per-run scratch lives in a [`FlipBuffer`].
//!
//! Operators produce the *set of flipped positions* rather than a new string
//! so that the EA can evaluate offspring incrementally.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::bitstring::BitString;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MutationError {
    #[error("harmonic number needs m >= 1 (got {0})")]
    EmptySupport(usize),
    #[error("power-law exponent must satisfy {requirement} (got {beta})")]
    InvalidBeta { beta: f64, requirement: &'static str },
    #[error("mutation rate p must satisfy {requirement} (got {p})")]
    InvalidRate { p: f64, requirement: String },
    #[error("operator {operator} needs n >= {min} (got {n})")]
    TooShort {
        operator: &'static str,
        min: usize,
        n: usize,
    },
    #[error("invalid operator spec `{0}`: expected pmut:<beta>, fmut:<beta>, unif:<p>, unif1[:<p>] or cmut:<p>")]
    Syntax(String),
}

/// Generalized harmonic number `H_m^beta = sum_{j=1..m} j^(-beta)`.
pub fn harmonic(m: usize, beta: f64) -> Result<f64, MutationError> {
    if m == 0 {
        return Err(MutationError::EmptySupport(m));
    }
    if beta.is_nan() || beta <= 0.0 {
        return Err(MutationError::InvalidBeta {
            beta,
            requirement: "beta > 0",
        });
    }
    // Smallest terms first keeps the rounding error of long sums down.
    Ok((1..=m).rev().map(|j| (j as f64).powf(-beta)).sum())
}

/// Discrete power law on `{1, .., support_max}` with `P[k] = k^(-beta) / H`.
#[derive(Debug, Clone)]
pub struct PowerLawDist {
    support_max: usize,
    beta: f64,
    normalizer: f64,
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl PowerLawDist {
    pub fn new(support_max: usize, beta: f64) -> Result<Self, MutationError> {
        let normalizer = harmonic(support_max, beta)?;
        let probabilities: Vec<f64> = (1..=support_max).map(|k| (k as f64).powf(-beta) / normalizer).collect();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // Pin the final entry so inverse-CDF lookups can never fall off the end.
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Self {
            support_max,
            beta,
            normalizer,
            probabilities,
            cumulative,
        })
    }

    pub fn support_max(&self) -> usize {
        self.support_max
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `H_{support_max}^beta`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// `P[k]`, zero outside the support.
    pub fn probability(&self, k: usize) -> f64 {
        if k == 0 || k > self.support_max {
            0.0
        } else {
            self.probabilities[k - 1]
        }
    }

    /// Probabilities for `k = 1..=support_max`.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Inverse-CDF draw by binary search on the cumulative table.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.support_max - 1) + 1
    }
}

/// Draws the number of bits to flip from `dist`.
pub fn sample_flip_count<R: Rng + ?Sized>(dist: &PowerLawDist, rng: &mut R) -> usize {
    dist.sample(rng)
}

/// Parsed operator description, independent of the string length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorSpec {
    /// Exactly `k` flips, `k` power-law distributed on `{1..n}`.
    Pmut { beta: f64 },
    /// Independent flips at rate `alpha/n`, `alpha` power-law on `{1..n/2}`.
    Fmut { beta: f64 },
    /// Independent flips at rate `p/n`.
    Unif { p: f64 },
    /// As `Unif`, conditioned on at least one flip.
    Unif1 { p: f64 },
    /// One flip with probability `p`, otherwise `k` uniform on `{2..n}` flips.
    Cmut { p: f64 },
}

impl OperatorSpec {
    /// Checks the constraints that do not depend on `n`.
    pub fn validate(&self) -> Result<(), MutationError> {
        match *self {
            OperatorSpec::Pmut { beta } | OperatorSpec::Fmut { beta } => {
                if beta.is_nan() || beta <= 1.0 || beta.is_infinite() {
                    return Err(MutationError::InvalidBeta {
                        beta,
                        requirement: "beta > 1",
                    });
                }
            }
            OperatorSpec::Unif { p } | OperatorSpec::Unif1 { p } => {
                if p.is_nan() || p <= 0.0 || p.is_infinite() {
                    return Err(MutationError::InvalidRate {
                        p,
                        requirement: "0 < p <= n/2".into(),
                    });
                }
            }
            OperatorSpec::Cmut { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(MutationError::InvalidRate {
                        p,
                        requirement: "0 < p < 1".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            OperatorSpec::Pmut { .. } => "pmut",
            OperatorSpec::Fmut { .. } => "fmut",
            OperatorSpec::Unif { .. } => "unif",
            OperatorSpec::Unif1 { .. } => "unif1",
            OperatorSpec::Cmut { .. } => "cmut",
        }
    }
}

impl FromStr for OperatorSpec {
    type Err = MutationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, param) = match s.split_once(':') {
            Some((name, param)) => (name, Some(param)),
            None => (s, None),
        };
        let value = |param: Option<&str>| -> Result<f64, MutationError> {
            param
                .and_then(|p| p.trim().parse::<f64>().ok())
                .ok_or_else(|| MutationError::Syntax(s.to_string()))
        };
        let spec = match name.trim().to_ascii_lowercase().as_str() {
            "pmut" => OperatorSpec::Pmut { beta: value(param)? },
            "fmut" => OperatorSpec::Fmut { beta: value(param)? },
            "unif" => OperatorSpec::Unif { p: value(param)? },
            "unif1" => OperatorSpec::Unif1 {
                p: if param.is_some() { value(param)? } else { 1.0 },
            },
            "cmut" => OperatorSpec::Cmut { p: value(param)? },
            _ => return Err(MutationError::Syntax(s.to_string())),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            OperatorSpec::Pmut { beta } => write!(f, "pmut:{beta}"),
            OperatorSpec::Fmut { beta } => write!(f, "fmut:{beta}"),
            OperatorSpec::Unif { p } => write!(f, "unif:{p}"),
            OperatorSpec::Unif1 { p: 1.0 } => f.write_str("unif1"),
            OperatorSpec::Unif1 { p } => write!(f, "unif1:{p}"),
            OperatorSpec::Cmut { p } => write!(f, "cmut:{p}"),
        }
    }
}

/// Per-run scratch space: an index permutation for distinct-position
/// sampling and the output list of flipped positions.
#[derive(Debug, Clone, Default)]
pub struct FlipBuffer {
    perm: Vec<usize>,
    flips: Vec<usize>,
}

impl FlipBuffer {
    pub fn new(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            flips: Vec::new(),
        }
    }

    /// Positions flipped by the last draw, ascending and distinct.
    pub fn flips(&self) -> &[usize] {
        &self.flips
    }

    fn ensure(&mut self, n: usize) {
        if self.perm.len() != n {
            self.perm = (0..n).collect();
        }
    }
}

/// Chooses `k` distinct positions of `{0..n}` uniformly among all `C(n,k)`
/// subsets, by a partial Fisher–Yates shuffle of `buf`'s permutation.
///
/// The permutation is left shuffled; any starting order gives a uniform
/// subset, so it is reused across calls.
pub fn choose_distinct<R: Rng + ?Sized>(n: usize, k: usize, buf: &mut FlipBuffer, rng: &mut R) {
    assert!(k <= n, "cannot choose {k} distinct positions out of {n}");
    buf.ensure(n);
    buf.flips.clear();
    for i in 0..k {
        let j = rng.random_range(i..n);
        buf.perm.swap(i, j);
        buf.flips.push(buf.perm[i]);
    }
    buf.flips.sort_unstable();
}

/// Flips each of `n` positions independently with probability `q`, writing
/// the chosen positions to `buf` in ascending order.
///
/// Uses geometric gaps between successive flips, so the cost is proportional
/// to the number of flips rather than to `n`.
pub fn choose_independent<R: Rng + ?Sized>(n: usize, q: f64, buf: &mut FlipBuffer, rng: &mut R) {
    buf.flips.clear();
    if q <= 0.0 || n == 0 {
        return;
    }
    if q >= 1.0 {
        buf.flips.extend(0..n);
        return;
    }
    let log_miss = (-q).ln_1p();
    let mut pos = 0usize;
    loop {
        // 1 - u lies in (0, 1], so the logarithm is finite.
        let u: f64 = rng.random();
        let gap = ((1.0 - u).ln() / log_miss).floor();
        if gap.is_nan() || gap >= (n - pos) as f64 {
            return;
        }
        pos += gap as usize;
        buf.flips.push(pos);
        pos += 1;
        if pos >= n {
            return;
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Pmut(Arc<PowerLawDist>),
    Fmut(Arc<PowerLawDist>),
    Unif { rate: f64, at_least_one: bool },
    Cmut { p: f64 },
}

/// An operator instantiated for strings of length `n`.
#[derive(Debug, Clone)]
pub struct MutationOperator {
    spec: OperatorSpec,
    n: usize,
    kind: Kind,
}

impl MutationOperator {
    pub fn new(spec: OperatorSpec, n: usize) -> Result<Self, MutationError> {
        spec.validate()?;
        if n == 0 {
            return Err(MutationError::TooShort {
                operator: spec.name(),
                min: 1,
                n,
            });
        }
        let kind = match spec {
            OperatorSpec::Pmut { beta } => Kind::Pmut(Arc::new(PowerLawDist::new(n, beta)?)),
            OperatorSpec::Fmut { beta } => {
                if n < 2 {
                    return Err(MutationError::TooShort {
                        operator: "fmut",
                        min: 2,
                        n,
                    });
                }
                Kind::Fmut(Arc::new(PowerLawDist::new(n / 2, beta)?))
            }
            OperatorSpec::Unif { p } | OperatorSpec::Unif1 { p } => {
                if p > n as f64 / 2.0 {
                    return Err(MutationError::InvalidRate {
                        p,
                        requirement: format!("0 < p <= n/2 = {}", n as f64 / 2.0),
                    });
                }
                Kind::Unif {
                    rate: p / n as f64,
                    at_least_one: matches!(spec, OperatorSpec::Unif1 { .. }),
                }
            }
            OperatorSpec::Cmut { p } => {
                if n < 2 {
                    return Err(MutationError::TooShort {
                        operator: "cmut",
                        min: 2,
                        n,
                    });
                }
                Kind::Cmut { p }
            }
        };
        Ok(Self { spec, n, kind })
    }

    pub fn spec(&self) -> OperatorSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// The power-law table behind `pmut`/`fmut`, if any.
    pub fn power_law(&self) -> Option<&PowerLawDist> {
        match &self.kind {
            Kind::Pmut(d) | Kind::Fmut(d) => Some(d),
            _ => None,
        }
    }

    /// Draws one mutation; the flipped positions end up in `buf.flips()`.
    pub fn sample_flips<R: Rng + ?Sized>(&self, buf: &mut FlipBuffer, rng: &mut R) {
        let n = self.n;
        match &self.kind {
            Kind::Pmut(dist) => {
                let k = dist.sample(rng);
                choose_distinct(n, k, buf, rng);
            }
            Kind::Fmut(dist) => {
                let alpha = dist.sample(rng);
                choose_independent(n, alpha as f64 / n as f64, buf, rng);
            }
            Kind::Unif { rate, at_least_one } => loop {
                choose_independent(n, *rate, buf, rng);
                if !at_least_one || !buf.flips.is_empty() {
                    break;
                }
            },
            Kind::Cmut { p } => {
                let k = if rng.random::<f64>() < *p {
                    1
                } else {
                    rng.random_range(2..=n)
                };
                choose_distinct(n, k, buf, rng);
            }
        }
    }

    /// Returns a mutated copy of `x`.
    pub fn mutate<R: Rng + ?Sized>(&self, x: &BitString, rng: &mut R) -> BitString {
        assert_eq!(x.len(), self.n, "operator built for n = {}", self.n);
        let mut buf = FlipBuffer::new(self.n);
        self.sample_flips(&mut buf, rng);
        let mut y = x.clone();
        y.flip_all(buf.flips());
        y
    }
}

fn apply<R: Rng + ?Sized>(spec: OperatorSpec, x: &BitString, rng: &mut R) -> Result<BitString, MutationError> {
    Ok(MutationOperator::new(spec, x.len())?.mutate(x, rng))
}

/// One-shot `pmut_beta`; builds the distribution table on every call.
pub fn pmut<R: Rng + ?Sized>(x: &BitString, beta: f64, rng: &mut R) -> Result<BitString, MutationError> {
    apply(OperatorSpec::Pmut { beta }, x, rng)
}

/// One-shot `fmut_beta`.
pub fn fmut<R: Rng + ?Sized>(x: &BitString, beta: f64, rng: &mut R) -> Result<BitString, MutationError> {
    apply(OperatorSpec::Fmut { beta }, x, rng)
}

/// One-shot uniform mutation at rate `p/n`; `at_least_one` selects `unif_1`.
pub fn unif<R: Rng + ?Sized>(
    x: &BitString,
    p: f64,
    at_least_one: bool,
    rng: &mut R,
) -> Result<BitString, MutationError> {
    let spec = if at_least_one {
        OperatorSpec::Unif1 { p }
    } else {
        OperatorSpec::Unif { p }
    };
    apply(spec, x, rng)
}

/// One-shot `cMut(p)`.
pub fn cmut<R: Rng + ?Sized>(x: &BitString, p: f64, rng: &mut R) -> Result<BitString, MutationError> {
    apply(OperatorSpec::Cmut { p }, x, rng)
}
