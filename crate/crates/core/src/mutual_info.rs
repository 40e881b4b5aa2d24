//! Gaussian mutual information between a feature set and its complement,
//! computed from canonical correlations of a covariance matrix.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::bitstring::BitString;
use crate::set_function::SetFunction;

/// Default ridge added to the diagonal blocks before factorization.
pub const DEFAULT_JITTER: f64 = 1e-8;
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
pub const PSD_TOLERANCE: f64 = 1e-9;
const JACOBI_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MiError {
    #[error("a panel needs at least 2 observations (got {0})")]
    TooShort(usize),
    #[error("a panel needs at least one series")]
    NoSeries,
    #[error("series {series} has {got} observations, expected {expected}")]
    Ragged { series: usize, expected: usize, got: usize },
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("matrix is not positive semidefinite (eigenvalue {0})")]
    NotPsd(f64),
    #[error("canonical correlations need 0 < |S| < n (|S| = {size}, n = {n})")]
    TrivialSplit { size: usize, n: usize },
    #[error("set has length {got}, matrix has dimension {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("jitter must be non-negative and finite (got {0})")]
    InvalidJitter(f64),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("block correlation must satisfy |rho| < 1 (got {0})")]
    InvalidCorrelation(f64),
    #[error("negative correlation needs a block of at most 2 series")]
    NegativeBlock,
    #[error("block sizes sum to {got}, expected {expected}")]
    BlockSizes { expected: usize, got: usize },
    #[error("synthetic panels need n >= 2 and T >= n + 2")]
    BadShape,
    #[error("CSV error: {0}")]
    Csv(String),
}

/// `n` series of `T` observations each.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    names: Vec<String>,
    series: Vec<Vec<f64>>,
}

impl TimeSeriesPanel {
    pub fn new(series: Vec<Vec<f64>>) -> Result<Self, MiError> {
        let names = (0..series.len()).map(|i| format!("s{i}")).collect();
        Self::with_names(names, series)
    }

    pub fn with_names(names: Vec<String>, series: Vec<Vec<f64>>) -> Result<Self, MiError> {
        assert_eq!(names.len(), series.len());
        let Some(first) = series.first() else {
            return Err(MiError::NoSeries);
        };
        let t = first.len();
        for (i, s) in series.iter().enumerate() {
            if s.len() != t {
                return Err(MiError::Ragged {
                    series: i,
                    expected: t,
                    got: s.len(),
                });
            }
        }
        Ok(Self { names, series })
    }

    /// Reads one row per time step, one column per series, with a header row
    /// of series names.
    pub fn from_csv<R: Read>(input: R) -> Result<Self, MiError> {
        let csv_err = |e: csv::Error| MiError::Csv(e.to_string());
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let names: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let mut series = vec![Vec::new(); names.len()];
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(csv_err)?;
            for (col, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    MiError::Csv(format!(
                        "row {}: `{field}` in column {} is not a number",
                        row + 2,
                        col + 1
                    ))
                })?;
                if !v.is_finite() {
                    return Err(MiError::Csv(format!("row {}: missing or non-finite value", row + 2)));
                }
                series[col].push(v);
            }
        }
        Self::with_names(names, series)
    }

    pub fn series_count(&self) -> usize {
        self.series.len()
    }

    pub fn len(&self) -> usize {
        self.series[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn series(&self, i: usize) -> &[f64] {
        &self.series[i]
    }
}

/// First differences `Y_j = X_j − X_{j−1}` of every series.
pub fn temporal_diff(panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel, MiError> {
    if panel.len() < 2 {
        return Err(MiError::TooShort(panel.len()));
    }
    let series = panel
        .series
        .iter()
        .map(|s| s.windows(2).map(|w| w[1] - w[0]).collect())
        .collect();
    TimeSeriesPanel::with_names(panel.names.clone(), series)
}

/// Symmetric positive semidefinite matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CovarianceMatrix {
    /// Validates symmetry (within 1e-12) and positive semidefiniteness
    /// (smallest eigenvalue at least −1e-9).
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MiError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(MiError::NotSquare);
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        for i in 0..n {
            for j in 0..i {
                if (entries[i * n + j] - entries[j * n + i]).abs() > SYMMETRY_TOLERANCE {
                    return Err(MiError::NotSymmetric(i, j));
                }
            }
        }
        let smallest = symmetric_eigenvalues(entries.clone(), n)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if smallest < -PSD_TOLERANCE {
            return Err(MiError::NotPsd(smallest));
        }
        Ok(Self { n, entries })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    fn block(&self, rows: &[usize], cols: &[usize]) -> Vec<f64> {
        rows.iter()
            .flat_map(|&i| cols.iter().map(move |&j| self.get(i, j)))
            .collect()
    }
}

/// Sample covariance with `1/(T−1)` normalization.
pub fn covariance(panel: &TimeSeriesPanel) -> Result<CovarianceMatrix, MiError> {
    let t = panel.len();
    if t < 2 {
        return Err(MiError::TooShort(t));
    }
    let centered: Vec<Vec<f64>> = panel
        .series
        .iter()
        .map(|s| {
            let mean = s.iter().sum::<f64>() / t as f64;
            s.iter().map(|v| v - mean).collect()
        })
        .collect();
    let n = centered.len();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let c = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum::<f64>() / (t - 1) as f64;
            rows[i][j] = c;
            rows[j][i] = c;
        }
    }
    CovarianceMatrix::new(rows)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    let max_sweeps = 100 * n * n;
    let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..max_sweeps {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_THRESHOLD * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Lower Cholesky factor of a symmetric positive definite `m × m` matrix.
fn cholesky(a: &[f64], m: usize) -> Result<Vec<f64>, MiError> {
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|k| l[i * m + k] * l[j * m + k]).sum();
            if i == j {
                let d = a[i * m + i] - dot;
                if d <= 0.0 || !d.is_finite() {
                    return Err(MiError::NotPsd(d));
                }
                l[i * m + i] = d.sqrt();
            } else {
                l[i * m + j] = (a[i * m + j] - dot) / l[j * m + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L X = B` in place for lower-triangular `L` (`m × m`) and `B` (`m × c`).
fn forward_substitute(l: &[f64], m: usize, b: &mut [f64], c: usize) {
    for col in 0..c {
        for i in 0..m {
            let dot: f64 = (0..i).map(|k| l[i * m + k] * b[k * c + col]).sum();
            b[i * c + col] = (b[i * c + col] - dot) / l[i * m + i];
        }
    }
}

fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; a.len()];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = a[i * cols + j];
        }
    }
    t
}

fn add_jitter(mut a: Vec<f64>, m: usize, jitter: f64) -> Vec<f64> {
    for i in 0..m {
        a[i * m + i] += jitter;
    }
    a
}

/// Canonical correlations between the variables in `set` and the rest,
/// in descending order. There are `min(|S|, n − |S|)` of them.
pub fn canonical_correlations(sigma: &CovarianceMatrix, set: &BitString, jitter: f64) -> Result<Vec<f64>, MiError> {
    let n = sigma.n;
    if set.len() != n {
        return Err(MiError::LengthMismatch {
            expected: n,
            got: set.len(),
        });
    }
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(MiError::InvalidJitter(jitter));
    }
    let s: Vec<usize> = set.ones_iter().collect();
    let r: Vec<usize> = set.complement().ones_iter().collect();
    if s.is_empty() || r.is_empty() {
        return Err(MiError::TrivialSplit { size: s.len(), n });
    }
    // Work with the smaller side as rows so the eigenproblem is min(|S|, n−|S|) wide.
    let (a, b) = if s.len() <= r.len() { (s, r) } else { (r, s) };
    let (p, q) = (a.len(), b.len());
    let la = cholesky(&add_jitter(sigma.block(&a, &a), p, jitter), p)?;
    let lb = cholesky(&add_jitter(sigma.block(&b, &b), q, jitter), q)?;

    // M = La⁻¹ Σ_ab Lb⁻ᵀ, computed as (Lb⁻¹ (La⁻¹ Σ_ab)ᵀ)ᵀ.
    let mut x = sigma.block(&a, &b);
    forward_substitute(&la, p, &mut x, q);
    let mut y = transpose(&x, p, q);
    forward_substitute(&lb, q, &mut y, p);
    let m = transpose(&y, q, p);

    let mut mmt = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let v: f64 = (0..q).map(|k| m[i * q + k] * m[j * q + k]).sum();
            mmt[i * p + j] = v;
            mmt[j * p + i] = v;
        }
    }
    let mut rho: Vec<f64> = symmetric_eigenvalues(mmt, p)
        .into_iter()
        .map(|ev| ev.clamp(0.0, 1.0).sqrt())
        .collect();
    rho.sort_by(|x, y| y.total_cmp(x));
    Ok(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MiVariant {
    /// `−½ Σ ln(1 − ρ² + λ)`.
    #[default]
    LogForm,
    /// `−½ Σ (1 − ρ²)`.
    PaperLiteral,
}

impl FromStr for MiVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log" | "log_form" => Ok(Self::LogForm),
            "literal" | "paper_literal" => Ok(Self::PaperLiteral),
            _ => Err(format!(
                "unknown MI variant `{s}` (expected `log_form` or `paper_literal`)"
            )),
        }
    }
}

impl fmt::Display for MiVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LogForm => "log_form",
            Self::PaperLiteral => "paper_literal",
        })
    }
}

/// Mutual information between `S` and `V ∖ S`. Zero for `S = ∅` and `S = V`.
pub fn mutual_information(
    sigma: &CovarianceMatrix,
    set: &BitString,
    variant: MiVariant,
    jitter: f64,
) -> Result<f64, MiError> {
    let size = set.count_ones();
    if set.len() == sigma.n && (size == 0 || size == sigma.n) {
        return Ok(0.0);
    }
    let rho = canonical_correlations(sigma, set, jitter)?;
    Ok(match variant {
        MiVariant::LogForm => -0.5 * rho.iter().map(|r| (1.0 - r * r + jitter).ln()).sum::<f64>(),
        MiVariant::PaperLiteral => -0.5 * rho.iter().map(|r| 1.0 - r * r).sum::<f64>(),
    })
}

/// `MI(S)` when `|S| ≤ k`, `k − |S|` otherwise.
#[derive(Debug, Clone)]
pub struct MiFitness {
    sigma: CovarianceMatrix,
    k: usize,
    variant: MiVariant,
    jitter: f64,
}

impl MiFitness {
    /// Fails if `Σ + λI` is not positive definite, so every evaluation can
    /// factor its blocks.
    pub fn new(sigma: CovarianceMatrix, k: usize, variant: MiVariant, jitter: f64) -> Result<Self, MiError> {
        if k == 0 {
            return Err(MiError::InvalidK);
        }
        if !(jitter >= 0.0 && jitter.is_finite()) {
            return Err(MiError::InvalidJitter(jitter));
        }
        cholesky(&add_jitter(sigma.entries.clone(), sigma.n, jitter), sigma.n)?;
        Ok(Self {
            sigma,
            k,
            variant,
            jitter,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn variant(&self) -> MiVariant {
        self.variant
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.sigma
    }
}

impl SetFunction for MiFitness {
    fn ground_size(&self) -> usize {
        self.sigma.n
    }

    fn value(&self, set: &BitString) -> f64 {
        mi_fitness(self, set)
    }
}

pub fn mi_fitness(f: &MiFitness, set: &BitString) -> f64 {
    let size = set.count_ones();
    if size > f.k {
        return f.k as f64 - size as f64;
    }
    mutual_information(&f.sigma, set, f.variant, f.jitter).expect("blocks of a positive definite matrix factor")
}

/// A block of consecutive series sharing pairwise correlation `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub size: usize,
    pub rho: f64,
}

/// Gaussian panel with planted correlated blocks, generated from one shared
/// factor per block. Returns the panel and the generator's covariance.
///
/// Non-negative `rho` loads every series on the factor with weight `√ρ`;
/// negative `rho` (blocks of at most two series) flips the sign of the
/// second loading.
pub fn synthetic_panel<R: Rng + ?Sized>(
    n: usize,
    t: usize,
    blocks: &[Block],
    rng: &mut R,
) -> Result<(TimeSeriesPanel, CovarianceMatrix), MiError> {
    if n < 2 || t < n + 2 {
        return Err(MiError::BadShape);
    }
    let total: usize = blocks.iter().map(|b| b.size).sum();
    if total != n {
        return Err(MiError::BlockSizes {
            expected: n,
            got: total,
        });
    }
    let mut loadings = Vec::with_capacity(n);
    let mut block_of = Vec::with_capacity(n);
    for (bi, b) in blocks.iter().enumerate() {
        if b.rho.is_nan() || b.rho.abs() >= 1.0 {
            return Err(MiError::InvalidCorrelation(b.rho));
        }
        if b.rho < 0.0 && b.size > 2 {
            return Err(MiError::NegativeBlock);
        }
        let w = b.rho.abs().sqrt();
        for j in 0..b.size {
            loadings.push(if b.rho < 0.0 && j == 1 { -w } else { w });
            block_of.push(bi);
        }
    }
    let mut series = vec![Vec::with_capacity(t); n];
    let mut factors = vec![0.0; blocks.len()];
    for _ in 0..t {
        for f in factors.iter_mut() {
            *f = rng.sample(StandardNormal);
        }
        for i in 0..n {
            let noise: f64 = rng.sample(StandardNormal);
            let w = loadings[i];
            series[i].push(w * factors[block_of[i]] + (1.0 - w * w).sqrt() * noise);
        }
    }
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (i == j, block_of[i] == block_of[j]) {
                    (true, _) => 1.0,
                    (false, true) => loadings[i] * loadings[j],
                    (false, false) => 0.0,
                })
                .collect()
        })
        .collect();
    Ok((TimeSeriesPanel::new(series)?, CovarianceMatrix::new(rows)?))
}

/// Random PSD matrix `A Aᵀ / n` with standard normal `A`.
pub fn random_covariance<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CovarianceMatrix {
    let a: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum::<f64>() / n as f64)
                .collect()
        })
        .collect();
    CovarianceMatrix::new(rows).expect("Gram matrices are PSD")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submodular::is_submodular;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(n: usize, items: &[usize]) -> BitString {
        BitString::from_indices(n, items.iter().copied())
    }

    fn pair(r: f64) -> CovarianceMatrix {
        CovarianceMatrix::new(vec![vec![1.0, r], vec![r, 1.0]]).unwrap()
    }

    fn identity(n: usize) -> CovarianceMatrix {
        CovarianceMatrix::new(
            (0..n)
                .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn temporal_diff_examples() {
        let p = TimeSeriesPanel::new(vec![vec![1.0, 3.0, 6.0], vec![4.0, 4.0, 4.0], vec![0.0, 2.5, 5.0]]).unwrap();
        let d = temporal_diff(&p).unwrap();
        assert_eq!(d.series(0), &[2.0, 3.0]);
        assert_eq!(d.series(1), &[0.0, 0.0]);
        assert_eq!(d.series(2), &[2.5, 2.5]);
        let short = TimeSeriesPanel::new(vec![vec![1.0]]).unwrap();
        assert_eq!(temporal_diff(&short), Err(MiError::TooShort(1)));
    }

    #[test]
    fn covariance_examples() {
        let c = covariance(&TimeSeriesPanel::new(vec![vec![0.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(c.get(0, 0), 2.0);
        let same = vec![1.0, 4.0, 2.0, 8.0];
        let c = covariance(&TimeSeriesPanel::new(vec![same.clone(), same]).unwrap()).unwrap();
        assert!((c.get(0, 0) - c.get(0, 1)).abs() < 1e-12);
        assert_eq!(c.get(0, 1), c.get(1, 1));
    }

    #[test]
    fn white_noise_covariance_is_near_identity() {
        let t = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (panel, truth) = synthetic_panel(3, t, &[Block { size: 3, rho: 0.0 }], &mut rng).unwrap();
        assert_eq!(truth, identity(3));
        let c = covariance(&panel).unwrap();
        let bound = 3.0 / (t as f64).sqrt();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(c.get(i, j).abs() < bound, "{}", c.get(i, j));
                }
            }
        }
    }

    #[test]
    fn synthetic_correlation_is_planted() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for rho in [0.9, -0.9] {
            let (panel, truth) = synthetic_panel(2, 100_000, &[Block { size: 2, rho }], &mut rng).unwrap();
            assert!((truth.get(0, 1) - rho).abs() < 1e-12);
            let c = covariance(&panel).unwrap();
            let r = c.get(0, 1) / (c.get(0, 0) * c.get(1, 1)).sqrt();
            assert!((r - rho).abs() < 0.01, "{r}");
        }
    }

    #[test]
    fn synthetic_panel_is_deterministic_and_validated() {
        let blocks = [Block { size: 2, rho: 0.5 }, Block { size: 3, rho: 0.2 }];
        let a = synthetic_panel(5, 50, &blocks, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = synthetic_panel(5, 50, &blocks, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(synthetic_panel(2, 10, &[Block { size: 2, rho: 1.0 }], &mut rng).is_err());
        assert!(synthetic_panel(3, 10, &[Block { size: 3, rho: -0.3 }], &mut rng).is_err());
        assert!(synthetic_panel(3, 10, &[Block { size: 2, rho: 0.3 }], &mut rng).is_err());
        assert!(synthetic_panel(3, 4, &[Block { size: 3, rho: 0.3 }], &mut rng).is_err());
    }

    #[test]
    fn matrix_validation() {
        assert_eq!(
            CovarianceMatrix::new(vec![vec![1.0, 0.5], vec![0.4, 1.0]]),
            Err(MiError::NotSymmetric(1, 0))
        );
        assert!(matches!(
            CovarianceMatrix::new(vec![vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(MiError::NotPsd(_))
        ));
        assert_eq!(CovarianceMatrix::new(vec![vec![1.0, 0.0]]), Err(MiError::NotSquare));
    }

    #[test]
    fn jacobi_matches_closed_form() {
        // Eigenvalues of [[2, 1], [1, 2]] are 1 and 3.
        let mut ev = symmetric_eigenvalues(vec![2.0, 1.0, 1.0, 2.0], 2);
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
        // Trace is preserved on a random matrix.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = random_covariance(6, &mut rng);
        let trace: f64 = (0..6).map(|i| c.get(i, i)).sum();
        let ev = symmetric_eigenvalues(c.entries.clone(), 6);
        assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-9);
    }

    #[test]
    fn canonical_correlation_examples() {
        let rho = canonical_correlations(&pair(0.6), &set(2, &[0]), 0.0).unwrap();
        assert_eq!(rho.len(), 1);
        assert!((rho[0] - 0.6).abs() < 1e-12);
        let rho = canonical_correlations(&pair(-0.6), &set(2, &[1]), 0.0).unwrap();
        assert!((rho[0] - 0.6).abs() < 1e-12);

        let rho = canonical_correlations(&identity(8), &set(8, &[1, 4, 6]), DEFAULT_JITTER).unwrap();
        assert_eq!(rho, vec![0.0; 3]);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let blocks = [Block { size: 3, rho: 0.7 }, Block { size: 2, rho: 0.4 }];
        let (_, truth) = synthetic_panel(5, 10, &blocks, &mut rng).unwrap();
        let rho = canonical_correlations(&truth, &set(5, &[0, 1, 2]), 0.0).unwrap();
        assert!(rho.iter().all(|r| r.abs() < 1e-9));

        assert!(canonical_correlations(&identity(3), &BitString::zeros(3), 0.0).is_err());
        assert!(canonical_correlations(&identity(3), &BitString::ones(3), 0.0).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let id = identity(8);
        let s = set(8, &[0, 2, 5]);
        assert!(
            mutual_information(&id, &s, MiVariant::LogForm, DEFAULT_JITTER)
                .unwrap()
                .abs()
                < 1e-7
        );
        assert!((mutual_information(&id, &s, MiVariant::PaperLiteral, DEFAULT_JITTER).unwrap() + 1.5).abs() < 1e-12);
        let mi = mutual_information(&pair(0.6), &set(2, &[0]), MiVariant::LogForm, 0.0).unwrap();
        assert!((mi - 0.223144).abs() < 1e-6, "{mi}");
        assert_eq!(
            mutual_information(&id, &BitString::zeros(8), MiVariant::PaperLiteral, 0.0),
            Ok(0.0)
        );
        assert_eq!(
            mutual_information(&id, &BitString::ones(8), MiVariant::LogForm, 0.0),
            Ok(0.0)
        );
    }

    #[test]
    fn mi_fitness_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sigma = random_covariance(8, &mut rng);
        let f = MiFitness::new(sigma.clone(), 2, MiVariant::LogForm, DEFAULT_JITTER).unwrap();
        assert_eq!(f.value(&set(8, &[0, 1, 2, 3, 4])), -3.0);
        assert_eq!(f.value(&BitString::zeros(8)), 0.0);
        let s = set(8, &[3, 6]);
        assert_eq!(
            f.value(&s),
            mutual_information(&sigma, &s, MiVariant::LogForm, DEFAULT_JITTER).unwrap()
        );
        assert_eq!(
            MiFitness::new(sigma, 0, MiVariant::LogForm, 0.0).unwrap_err(),
            MiError::InvalidK
        );
    }

    #[test]
    fn mi_fitness_negative_exactly_when_infeasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = MiFitness::new(random_covariance(6, &mut rng), 3, MiVariant::LogForm, 1e-10).unwrap();
        for mask in 0..64 {
            let s = BitString::from_mask(mask, 6);
            assert_eq!(f.value(&s) < -1e-9, s.count_ones() > 3);
        }
    }

    #[test]
    fn log_form_is_symmetric_nonnegative_submodular() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..3 {
            let sigma = random_covariance(7, &mut rng);
            let f = MiFitness::new(sigma.clone(), 7, MiVariant::LogForm, 1e-10).unwrap();
            for mask in 0..128 {
                let s = BitString::from_mask(mask, 7);
                let v = f.value(&s);
                assert!(v >= -1e-9);
                assert!((v - f.value(&s.complement())).abs() <= 1e-9);
                if mask != 0 && mask != 127 {
                    let lit = mutual_information(&sigma, &s, MiVariant::PaperLiteral, 1e-10).unwrap();
                    let lit_c = mutual_information(&sigma, &s.complement(), MiVariant::PaperLiteral, 1e-10).unwrap();
                    assert!((lit - lit_c).abs() <= 1e-9);
                }
            }
            assert!(is_submodular(&f).unwrap());
        }
    }

    #[test]
    fn panel_csv_round_trip() {
        let text = "a,b\n1.0,2\n3,4.5\n6,  7\n";
        let p = TimeSeriesPanel::from_csv(text.as_bytes()).unwrap();
        assert_eq!(p.names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(p.series(0), &[1.0, 3.0, 6.0]);
        assert_eq!(p.series(1), &[2.0, 4.5, 7.0]);
        assert!(TimeSeriesPanel::from_csv("a,b\n1,x\n".as_bytes()).is_err());
        assert!(TimeSeriesPanel::from_csv("a,b\n1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("literal".parse::<MiVariant>(), Ok(MiVariant::PaperLiteral));
        assert_eq!("log_form".parse::<MiVariant>(), Ok(MiVariant::LogForm));
        assert!("other".parse::<MiVariant>().is_err());
        assert_eq!(MiVariant::default().to_string(), "log_form");
    }
}
