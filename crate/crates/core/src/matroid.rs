//! Matroid constraints: independence oracles, the greedy rank function, the
//! penalized fitness `z_f`, swap-aware local optimality, and a local-search
//! baseline for maximizing under a single matroid constraint.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read};
use std::sync::Arc;

use thiserror::Error;

use crate::bitstring::BitString;
use crate::set_function::SetFunction;
use crate::submodular::{improves, move_bound, TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatroidError {
    #[error("the starting set is not independent")]
    DependentSet,
    #[error("epsilon must be positive (got {0})")]
    InvalidEpsilon(f64),
    #[error("local search exceeded {bound} moves without converging")]
    MoveBoundExceeded { bound: u64 },
    #[error("exchange search supports |J \\ I| <= {max} (got {got})")]
    TooLarge { got: usize, max: usize },
    #[error("set system violates the matroid axioms: {0}")]
    NotAMatroid(String),
    #[error("block file line {line}: {reason}")]
    BlockFile { line: usize, reason: String },
    #[error("element {0} is not assigned to any block")]
    Unassigned(usize),
    #[error("I/O error reading block file: {0}")]
    Io(String),
}

/// Independence oracle over the ground set `{0..n}`.
pub trait Matroid: Send + Sync {
    fn ground_size(&self) -> usize;

    fn is_independent(&self, set: &BitString) -> bool;

    /// Size of a largest independent subset of `set`.
    fn rank(&self, set: &BitString) -> usize {
        greedy_rank(self, set)
    }
}

macro_rules! forward_matroid {
    ($($ptr:ty),*) => {$(
        impl<M: Matroid + ?Sized> Matroid for $ptr {
            fn ground_size(&self) -> usize {
                (**self).ground_size()
            }
            fn is_independent(&self, set: &BitString) -> bool {
                (**self).is_independent(set)
            }
            fn rank(&self, set: &BitString) -> usize {
                (**self).rank(set)
            }
        }
    )*};
}

forward_matroid!(&M, Box<M>, Arc<M>);

/// Greedy rank: scan `set` in index order, keeping each element that leaves
/// the kept set independent.
pub fn greedy_rank<M: Matroid + ?Sized>(m: &M, set: &BitString) -> usize {
    let mut kept = BitString::zeros(set.len());
    let mut size = 0;
    for i in set.ones_iter() {
        kept.set(i, true);
        if m.is_independent(&kept) {
            size += 1;
        } else {
            kept.set(i, false);
        }
    }
    size
}

pub fn rank<M: Matroid + ?Sized>(m: &M, set: &BitString) -> usize {
    m.rank(set)
}

/// All sets of size at most `k`.
#[derive(Debug, Clone, Copy)]
pub struct UniformMatroid {
    n: usize,
    k: usize,
}

impl UniformMatroid {
    pub fn new(n: usize, k: usize) -> Self {
        Self { n, k }
    }

    pub fn capacity(&self) -> usize {
        self.k
    }
}

impl Matroid for UniformMatroid {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn is_independent(&self, set: &BitString) -> bool {
        set.count_ones() <= self.k
    }

    fn rank(&self, set: &BitString) -> usize {
        set.count_ones().min(self.k)
    }
}

/// Ground set split into blocks; a set is independent when it takes at most
/// `capacity[b]` elements from each block `b`.
#[derive(Debug, Clone)]
pub struct PartitionMatroid {
    block_of: Vec<usize>,
    capacities: Vec<usize>,
}

impl PartitionMatroid {
    /// `block_of[i]` is the block of element `i`.
    pub fn new(block_of: Vec<usize>, capacities: Vec<usize>) -> Self {
        assert!(block_of.iter().all(|&b| b < capacities.len()));
        Self { block_of, capacities }
    }

    pub fn block_count(&self) -> usize {
        self.capacities.len()
    }

    /// Reads `block_id capacity member...` lines (`#` starts a comment).
    ///
    /// `resolve` maps member ids as written in the file to ground-set
    /// indices; every element of `{0..n}` must belong to exactly one block.
    pub fn from_block_file<R: Read>(
        input: R,
        n: usize,
        resolve: impl Fn(u64) -> Option<usize>,
    ) -> Result<Self, MatroidError> {
        let mut block_of = vec![usize::MAX; n];
        let mut capacities = Vec::new();
        let mut seen_ids = HashSet::new();
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line.map_err(|e| MatroidError::Io(e.to_string()))?;
            let bad = |reason: String| MatroidError::BlockFile { line: i + 1, reason };
            let text = line.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let fields: Vec<&str> = text.split_whitespace().collect();
            if fields.len() < 2 {
                return Err(bad("expected `block_id capacity member...`".into()));
            }
            if !seen_ids.insert(fields[0].to_string()) {
                return Err(bad(format!("duplicate block id `{}`", fields[0])));
            }
            let cap: usize = fields[1]
                .parse()
                .map_err(|_| bad(format!("invalid capacity `{}`", fields[1])))?;
            let b = capacities.len();
            capacities.push(cap);
            for tok in &fields[2..] {
                let id: u64 = tok.parse().map_err(|_| bad(format!("invalid member `{tok}`")))?;
                let v = resolve(id).ok_or_else(|| bad(format!("unknown element `{id}`")))?;
                if block_of[v] != usize::MAX {
                    return Err(bad(format!("element `{id}` listed in two blocks")));
                }
                block_of[v] = b;
            }
        }
        if let Some(v) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(MatroidError::Unassigned(v));
        }
        Ok(Self::new(block_of, capacities))
    }
}

impl Matroid for PartitionMatroid {
    fn ground_size(&self) -> usize {
        self.block_of.len()
    }

    fn is_independent(&self, set: &BitString) -> bool {
        let mut used = vec![0usize; self.capacities.len()];
        set.ones_iter().all(|i| {
            let b = self.block_of[i];
            used[b] += 1;
            used[b] <= self.capacities[b]
        })
    }
}

/// A matroid given by its full list of independent sets (as bitmasks).
/// Intended for tests on tiny ground sets.
#[derive(Debug, Clone)]
pub struct ExplicitMatroid {
    n: usize,
    independent: HashSet<u64>,
}

impl ExplicitMatroid {
    /// Checks the three matroid axioms exhaustively before accepting.
    pub fn new(n: usize, independent: impl IntoIterator<Item = u64>) -> Result<Self, MatroidError> {
        assert!(n <= 16, "explicit matroids are for tiny ground sets");
        let independent: HashSet<u64> = independent.into_iter().collect();
        if !independent.contains(&0) {
            return Err(MatroidError::NotAMatroid("the empty set is dependent".into()));
        }
        for &s in &independent {
            if s >> n != 0 {
                return Err(MatroidError::NotAMatroid(format!("set {s:#b} exceeds the ground set")));
            }
            for i in 0..n {
                if s >> i & 1 == 1 && !independent.contains(&(s & !(1 << i))) {
                    return Err(MatroidError::NotAMatroid(format!(
                        "{s:#b} is independent but its subset without {i} is not"
                    )));
                }
            }
        }
        for &a in &independent {
            for &b in &independent {
                if b.count_ones() > a.count_ones() {
                    let extendable =
                        (0..n).any(|i| b >> i & 1 == 1 && a >> i & 1 == 0 && independent.contains(&(a | 1 << i)));
                    if !extendable {
                        return Err(MatroidError::NotAMatroid(format!(
                            "exchange fails for {a:#b} and {b:#b}"
                        )));
                    }
                }
            }
        }
        Ok(Self { n, independent })
    }

    /// Independent sets of `m` restricted to a ground set of size `n <= 16`.
    pub fn from_matroid<M: Matroid + ?Sized>(m: &M) -> Result<Self, MatroidError> {
        let n = m.ground_size();
        Self::new(
            n,
            (0..1u64 << n).filter(|&mask| m.is_independent(&BitString::from_mask(mask, n))),
        )
    }
}

impl Matroid for ExplicitMatroid {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn is_independent(&self, set: &BitString) -> bool {
        self.independent.contains(&set.to_mask())
    }
}

/// `z_f(C) = f(C)` for independent `C`, `r(C) − |C|` otherwise.
///
/// Feasible sets score at least zero (for non-negative `f`) and infeasible
/// sets strictly below zero, so an elitist search that becomes feasible
/// stays feasible.
#[derive(Debug, Clone)]
pub struct ConstrainedFitness<F, M> {
    f: F,
    matroid: M,
}

impl<F: SetFunction, M: Matroid> ConstrainedFitness<F, M> {
    pub fn new(f: F, matroid: M) -> Self {
        assert_eq!(f.ground_size(), matroid.ground_size());
        Self { f, matroid }
    }

    pub fn base(&self) -> &F {
        &self.f
    }

    pub fn matroid(&self) -> &M {
        &self.matroid
    }
}

impl<F: SetFunction, M: Matroid> SetFunction for ConstrainedFitness<F, M> {
    fn ground_size(&self) -> usize {
        self.f.ground_size()
    }

    fn value(&self, set: &BitString) -> f64 {
        if self.matroid.is_independent(set) {
            self.f.value(set)
        } else {
            self.matroid.rank(set) as f64 - set.count_ones() as f64
        }
    }

    fn is_integral(&self) -> bool {
        self.f.is_integral()
    }
}

pub fn constrained_fitness<F: SetFunction, M: Matroid>(z: &ConstrainedFitness<F, M>, set: &BitString) -> f64 {
    z.value(set)
}

/// Candidate moves from an independent set, in scan order: deletions, then
/// feasible insertions, then feasible swaps `(S ∖ {u}) ∪ {v}`. Each entry is
/// the ascending list of positions to toggle.
fn feasible_moves<'a, M: Matroid + ?Sized>(m: &'a M, set: &'a BitString) -> impl Iterator<Item = Vec<usize>> + 'a {
    let inside: Vec<usize> = set.ones_iter().collect();
    let outside: Vec<usize> = set.complement().ones_iter().collect();
    let deletions = inside.clone().into_iter().map(|u| vec![u]);
    let insertions = outside.clone().into_iter().map(|v| vec![v]);
    let swaps = inside
        .into_iter()
        .flat_map(move |u| outside.clone().into_iter().map(move |v| vec![u.min(v), u.max(v)]));
    deletions.chain(insertions.chain(swaps).filter(move |flips| {
        let mut probe = set.clone();
        probe.flip_all(flips);
        m.is_independent(&probe)
    }))
}

/// `(1+α)`-local optimality under a matroid constraint: no deletion, no
/// feasible insertion and no feasible swap exceeds `(1+α)·f(S)`.
pub fn is_local_optimum_constrained<F, M>(f: &F, m: &M, set: &BitString, alpha: f64) -> Result<bool, MatroidError>
where
    F: SetFunction + ?Sized,
    M: Matroid + ?Sized,
{
    if !m.is_independent(set) {
        return Err(MatroidError::DependentSet);
    }
    let bar = (1.0 + alpha) * f.value(set) + TOLERANCE;
    Ok(feasible_moves(m, set).all(|flips| {
        let mut probe = set.clone();
        probe.flip_all(&flips);
        f.value(&probe) <= bar
    }))
}

/// Deterministic local search under a matroid constraint: takes the first
/// `(1+ε/n²)`-improving deletion, insertion or swap until none is left.
pub fn local_search_matroid<F, M>(f: &F, m: &M, epsilon: f64, start: &BitString) -> Result<BitString, MatroidError>
where
    F: SetFunction + ?Sized,
    M: Matroid + ?Sized,
{
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(MatroidError::InvalidEpsilon(epsilon));
    }
    if !m.is_independent(start) {
        return Err(MatroidError::DependentSet);
    }
    let n = f.ground_size();
    let alpha = epsilon / (n * n).max(1) as f64;
    let bound = move_bound(n, epsilon);
    let mut cur = start.clone();
    let mut val = f.value(&cur);
    let mut moves = 0u64;
    loop {
        let step = feasible_moves(m, &cur).find_map(|flips| {
            let mut probe = cur.clone();
            probe.flip_all(&flips);
            let v = f.value(&probe);
            improves(v, val, alpha).then_some((probe, v))
        });
        let Some((next, v)) = step else {
            return Ok(cur);
        };
        cur = next;
        val = v;
        moves += 1;
        if moves > bound {
            return Err(MatroidError::MoveBoundExceeded { bound });
        }
    }
}

/// Largest `|J ∖ I|` accepted by [`verify_exchange_mapping`].
pub const MAX_EXCHANGE: usize = 8;

/// Searches for a map `π: J ∖ I → (I ∖ J) ∪ {∅}` such that
/// `(I ∖ {π(b)}) ∪ {b}` is independent for every `b` and no element of
/// `I ∖ J` is used twice. Returns whether one exists.
pub fn verify_exchange_mapping<M: Matroid + ?Sized>(m: &M, i: &BitString, j: &BitString) -> Result<bool, MatroidError> {
    if !m.is_independent(i) || !m.is_independent(j) {
        return Err(MatroidError::DependentSet);
    }
    let j_only: Vec<usize> = j.ones_iter().filter(|&b| !i.get(b)).collect();
    let i_only: Vec<usize> = i.ones_iter().filter(|&e| !j.get(e)).collect();
    if j_only.len() > MAX_EXCHANGE {
        return Err(MatroidError::TooLarge {
            got: j_only.len(),
            max: MAX_EXCHANGE,
        });
    }
    // options[k]: admissible images of j_only[k]; None stands for ∅.
    let options: Vec<Vec<Option<usize>>> = j_only
        .iter()
        .map(|&b| {
            let mut probe = i.clone();
            probe.set(b, true);
            let mut opts = Vec::new();
            if m.is_independent(&probe) {
                opts.push(None);
            }
            for (slot, &e) in i_only.iter().enumerate() {
                probe.set(e, false);
                if m.is_independent(&probe) {
                    opts.push(Some(slot));
                }
                probe.set(e, true);
            }
            opts
        })
        .collect();

    fn assign(k: usize, options: &[Vec<Option<usize>>], used: &mut [bool]) -> bool {
        if k == options.len() {
            return true;
        }
        for &opt in &options[k] {
            match opt {
                None => {
                    if assign(k + 1, options, used) {
                        return true;
                    }
                }
                Some(slot) if !used[slot] => {
                    used[slot] = true;
                    let ok = assign(k + 1, options, used);
                    used[slot] = false;
                    if ok {
                        return true;
                    }
                }
                Some(_) => {}
            }
        }
        false
    }
    Ok(assign(0, &options, &mut vec![false; i_only.len()]))
}
