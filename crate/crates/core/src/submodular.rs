//! Submodular set functions: the directed cut, coverage functions, the
//! potential-function shift, deterministic local search, and exhaustive
//! oracles used to certify approximation guarantees on small instances.

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::bitstring::BitString;
use crate::graph_io::DirectedGraph;
use crate::parallel;
use crate::set_function::SetFunction;

/// Absolute tolerance for comparing real-valued set functions.
pub const TOLERANCE: f64 = 1e-9;

/// Largest ground set accepted by [`brute_force_max`].
pub const MAX_BRUTE_FORCE: usize = 24;
/// Largest ground set accepted by [`is_submodular`].
pub const MAX_SUBMODULARITY_CHECK: usize = 12;
/// Largest ground set accepted by [`random_subset_mean`].
pub const MAX_SUBSET_MEAN: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubmodularError {
    #[error("exhaustive {what} supports n <= {max} (got n = {n})")]
    TooLarge { what: &'static str, n: usize, max: usize },
    #[error("no subset satisfies the constraint")]
    NoFeasibleSet,
    #[error("epsilon must be positive (got {0})")]
    InvalidEpsilon(f64),
    #[error("local search exceeded {bound} moves without converging")]
    MoveBoundExceeded { bound: u64 },
    #[error("set has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

fn check_len(f: &(impl SetFunction + ?Sized), s: &BitString) -> Result<(), SubmodularError> {
    if s.len() == f.ground_size() {
        Ok(())
    } else {
        Err(SubmodularError::LengthMismatch {
            expected: f.ground_size(),
            got: s.len(),
        })
    }
}

/// `|Δ(U)|`: number of arcs `(a, b)` with `a ∈ U`, `b ∉ U`.
pub fn cut_value(graph: &DirectedGraph, set: &BitString) -> u64 {
    assert_eq!(set.len(), graph.vertex_count());
    set.ones_iter()
        .map(|a| graph.out_neighbors(a).iter().filter(|&&b| !set.get(b)).count() as u64)
        .sum()
}

/// Same count through the in-adjacency: arcs entering `V ∖ U` from `U`.
pub fn cut_value_by_in_arcs(graph: &DirectedGraph, set: &BitString) -> u64 {
    assert_eq!(set.len(), graph.vertex_count());
    set.complement()
        .ones_iter()
        .map(|b| graph.in_neighbors(b).iter().filter(|&&a| set.get(a)).count() as u64)
        .sum()
}

/// Cut value after toggling `flips`, touching only arcs incident to them.
///
/// `current` must equal `cut_value(graph, set)`. `flips` must be distinct;
/// they need not be sorted.
pub fn cut_delta(graph: &DirectedGraph, set: &BitString, current: u64, flips: &[usize]) -> u64 {
    if flips.windows(2).all(|w| w[0] < w[1]) {
        cut_delta_sorted(graph, set, current, flips)
    } else {
        let mut sorted = flips.to_vec();
        sorted.sort_unstable();
        cut_delta_sorted(graph, set, current, &sorted)
    }
}

fn cut_delta_sorted(graph: &DirectedGraph, set: &BitString, current: u64, flips: &[usize]) -> u64 {
    let incident: usize = flips.iter().map(|&v| graph.out_degree(v) + graph.in_degree(v)).sum();
    if incident > graph.arc_count() {
        // Large mutations touch most arcs anyway; a full pass is cheaper.
        let mut next = set.clone();
        next.flip_all(flips);
        return cut_value(graph, &next);
    }
    if flips.len() <= 16 {
        let flipped = |v: usize| match flips.len() {
            0 => false,
            1 => flips[0] == v,
            _ => flips.binary_search(&v).is_ok(),
        };
        cut_delta_with(graph, set, current, flips, flipped)
    } else {
        let mask = BitString::from_indices(set.len(), flips.iter().copied());
        cut_delta_with(graph, set, current, flips, |v| mask.get(v))
    }
}

fn cut_delta_with(
    graph: &DirectedGraph,
    set: &BitString,
    current: u64,
    flips: &[usize],
    flipped: impl Fn(usize) -> bool,
) -> u64 {
    let mut delta: i64 = 0;
    for &v in flips {
        let was = set.get(v);
        for &w in graph.out_neighbors(v) {
            let w_was = set.get(w);
            let w_now = w_was ^ flipped(w);
            delta += (!was && !w_now) as i64 - (was && !w_was) as i64;
        }
        for &u in graph.in_neighbors(v) {
            // Arcs between two flipped vertices were handled from the source side.
            if flipped(u) {
                continue;
            }
            if set.get(u) {
                delta += was as i64 - (!was) as i64;
            }
        }
    }
    let next = current as i64 + delta;
    debug_assert!(next >= 0);
    next as u64
}

/// The directed cut `U ↦ |Δ(U)|` as a set function.
#[derive(Debug, Clone)]
pub struct CutFunction {
    graph: Arc<DirectedGraph>,
}

impl CutFunction {
    pub fn new(graph: Arc<DirectedGraph>) -> Self {
        Self { graph }
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }
}

impl SetFunction for CutFunction {
    fn ground_size(&self) -> usize {
        self.graph.vertex_count()
    }

    fn value(&self, set: &BitString) -> f64 {
        cut_value(&self.graph, set) as f64
    }

    fn value_after_flips(&self, set: &BitString, current: f64, flips: &[usize]) -> Option<f64> {
        Some(cut_delta_sorted(&self.graph, set, current.round() as u64, flips) as f64)
    }

    fn is_integral(&self) -> bool {
        true
    }
}

/// Weighted coverage: element `i` covers a fixed set of universe items and
/// `f(S)` is the total weight of items covered by `S`. Monotone submodular.
#[derive(Debug, Clone)]
pub struct CoverageFunction {
    covers: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl CoverageFunction {
    pub fn new(covers: Vec<Vec<usize>>, weights: Vec<f64>) -> Self {
        assert!(covers.iter().flatten().all(|&j| j < weights.len()));
        assert!(weights.iter().all(|&w| w >= 0.0));
        Self { covers, weights }
    }

    /// Each element covers each of `universe` items with probability `p`;
    /// item weights are uniform in `[0, 1)`.
    pub fn random<R: Rng + ?Sized>(n: usize, universe: usize, p: f64, rng: &mut R) -> Self {
        let covers = (0..n)
            .map(|_| (0..universe).filter(|_| rng.random::<f64>() < p).collect())
            .collect();
        let weights = (0..universe).map(|_| rng.random::<f64>()).collect();
        Self::new(covers, weights)
    }
}

impl SetFunction for CoverageFunction {
    fn ground_size(&self) -> usize {
        self.covers.len()
    }

    fn value(&self, set: &BitString) -> f64 {
        let mut covered = vec![false; self.weights.len()];
        for i in set.ones_iter() {
            for &j in &self.covers[i] {
                covered[j] = true;
            }
        }
        covered
            .iter()
            .zip(&self.weights)
            .filter(|(c, _)| **c)
            .map(|(_, w)| w)
            .sum()
    }
}

/// `g(U) = f(U) + ε·OPT/n`: a constant upward shift that keeps
/// submodularity and bounds every value below by `ε·OPT/n`.
#[derive(Debug, Clone)]
pub struct PotentialFunction<F> {
    base: F,
    epsilon: f64,
    opt: f64,
}

impl<F: SetFunction> PotentialFunction<F> {
    pub fn new(base: F, epsilon: f64, opt: f64) -> Result<Self, SubmodularError> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(SubmodularError::InvalidEpsilon(epsilon));
        }
        Ok(Self { base, epsilon, opt })
    }

    pub fn offset(&self) -> f64 {
        self.epsilon * self.opt / self.base.ground_size() as f64
    }
}

impl<F: SetFunction> SetFunction for PotentialFunction<F> {
    fn ground_size(&self) -> usize {
        self.base.ground_size()
    }

    fn value(&self, set: &BitString) -> f64 {
        self.base.value(set) + self.offset()
    }
}

pub fn potential_value<F: SetFunction>(g: &PotentialFunction<F>, set: &BitString) -> f64 {
    g.value(set)
}

/// Exhaustive maximization over all (feasible) subsets.
///
/// Ties go to the subset with the smallest bitmask, so the result does not
/// depend on the degree of parallelism.
pub fn brute_force_max<F>(
    f: &F,
    constraint: Option<&(dyn Fn(&BitString) -> bool + Sync)>,
) -> Result<(BitString, f64), SubmodularError>
where
    F: SetFunction + ?Sized,
{
    let n = f.ground_size();
    if n > MAX_BRUTE_FORCE {
        return Err(SubmodularError::TooLarge {
            what: "maximization",
            n,
            max: MAX_BRUTE_FORCE,
        });
    }
    let total = 1u64 << n;
    let chunks = total.min(256);
    let per_chunk = total / chunks;
    let best = parallel::map_range(0..chunks as usize, |c| {
        let mut best: Option<(u64, f64)> = None;
        for mask in (c as u64 * per_chunk)..((c as u64 + 1) * per_chunk) {
            let s = BitString::from_mask(mask, n);
            if constraint.is_some_and(|ok| !ok(&s)) {
                continue;
            }
            let v = f.value(&s);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((mask, v));
            }
        }
        best
    })
    .into_iter()
    .flatten()
    .fold(None, |acc: Option<(u64, f64)>, (m, v)| match acc {
        Some((_, b)) if b >= v => acc,
        _ => Some((m, v)),
    });
    best.map(|(mask, v)| (BitString::from_mask(mask, n), v))
        .ok_or(SubmodularError::NoFeasibleSet)
}

fn value_table<F: SetFunction + ?Sized>(f: &F) -> Vec<f64> {
    let n = f.ground_size();
    parallel::map_range(0..1usize << n, |mask| f.value(&BitString::from_mask(mask as u64, n)))
}

/// Exhaustive submodularity test.
///
/// Checks `f(S) + f(T) ≥ f(S∪T) + f(S∩T)` for all pairs and the
/// diminishing-returns form `f(S+v) − f(S) ≥ f(T+v) − f(T)` for all
/// `S ⊆ T`, `v ∉ T`, each with tolerance [`TOLERANCE`].
pub fn is_submodular<F: SetFunction + ?Sized>(f: &F) -> Result<bool, SubmodularError> {
    let n = f.ground_size();
    if n > MAX_SUBMODULARITY_CHECK {
        return Err(SubmodularError::TooLarge {
            what: "submodularity check",
            n,
            max: MAX_SUBMODULARITY_CHECK,
        });
    }
    let table = value_table(f);
    let size = 1usize << n;

    let pairwise = parallel::map_range(0..size, |s| {
        (s..size).all(|t| table[s] + table[t] + TOLERANCE >= table[s | t] + table[s & t])
    })
    .into_iter()
    .all(|ok| ok);

    let marginal = parallel::map_range(0..size, |t| {
        let mut s = t;
        loop {
            for v in (0..n).filter(|v| t >> v & 1 == 0) {
                let bit = 1 << v;
                if table[s | bit] - table[s] + TOLERANCE < table[t | bit] - table[t] {
                    return false;
                }
            }
            if s == 0 {
                return true;
            }
            s = (s - 1) & t;
        }
    })
    .into_iter()
    .all(|ok| ok);

    Ok(pairwise && marginal)
}

/// `(1+α)`-local optimality: no single addition or removal exceeds
/// `(1+α)·f(S)`.
pub fn is_local_optimum<F: SetFunction + ?Sized>(f: &F, set: &BitString, alpha: f64) -> bool {
    let bar = (1.0 + alpha) * f.value(set) + TOLERANCE;
    let mut probe = set.clone();
    (0..set.len()).all(|i| {
        probe.flip(i);
        let ok = f.value(&probe) <= bar;
        probe.flip(i);
        ok
    })
}

/// Whether moving from value `current` to `candidate` is a
/// `(1+α)`-improvement. From zero any positive value counts.
#[inline]
pub(crate) fn improves(candidate: f64, current: f64, alpha: f64) -> bool {
    if current <= 0.0 {
        candidate > 0.0
    } else {
        candidate >= (1.0 + alpha) * current
    }
}

/// Move budget `⌈10·(n²/ε)·ln(n/ε + 2)⌉` used to flag a non-terminating search.
pub fn move_bound(n: usize, epsilon: f64) -> u64 {
    let n = n as f64;
    (10.0 * (n * n / epsilon) * (n / epsilon + 2.0).ln()).ceil() as u64
}

/// Deterministic local search for unconstrained maximization.
///
/// Repeatedly takes the first `(1+ε/n²)`-improving single-element move
/// (removals before additions, each in index order) until none is left,
/// then returns the better of the local optimum and its complement.
pub fn local_search_unconstrained<F: SetFunction + ?Sized>(
    f: &F,
    epsilon: f64,
    start: &BitString,
) -> Result<BitString, SubmodularError> {
    let local = local_optimum_unconstrained(f, epsilon, start)?;
    let complement = local.complement();
    Ok(if f.value(&complement) > f.value(&local) {
        complement
    } else {
        local
    })
}

/// The local optimum reached by [`local_search_unconstrained`], before the
/// comparison with its complement.
pub fn local_optimum_unconstrained<F: SetFunction + ?Sized>(
    f: &F,
    epsilon: f64,
    start: &BitString,
) -> Result<BitString, SubmodularError> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(SubmodularError::InvalidEpsilon(epsilon));
    }
    check_len(f, start)?;
    let n = f.ground_size();
    let alpha = epsilon / (n * n).max(1) as f64;
    let bound = move_bound(n, epsilon);
    let mut cur = start.clone();
    let mut val = f.value(&cur);
    let mut moves = 0u64;
    loop {
        let removals = cur.ones_iter().collect::<Vec<_>>();
        let additions = cur.complement().ones_iter().collect::<Vec<_>>();
        let mut next = None;
        for i in removals.into_iter().chain(additions) {
            cur.flip(i);
            let v = f.value(&cur);
            cur.flip(i);
            if improves(v, val, alpha) {
                next = Some((i, v));
                break;
            }
        }
        let Some((i, v)) = next else {
            return Ok(cur);
        };
        cur.flip(i);
        val = v;
        moves += 1;
        if moves > bound {
            return Err(SubmodularError::MoveBoundExceeded { bound });
        }
    }
}

/// Exact `E[f(R)]` for a uniformly random subset `R`.
pub fn random_subset_mean<F: SetFunction + ?Sized>(f: &F) -> Result<f64, SubmodularError> {
    let n = f.ground_size();
    if n > MAX_SUBSET_MEAN {
        return Err(SubmodularError::TooLarge {
            what: "subset mean",
            n,
            max: MAX_SUBSET_MEAN,
        });
    }
    let sum: f64 = value_table(f).iter().sum();
    Ok(sum / (1u64 << n) as f64)
}
