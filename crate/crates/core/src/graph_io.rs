//! Directed graphs in compressed sparse row layout, plus edge-list ingestion.
//!
//! Accepted input: one arc per line as `src dst [weight]`, separated by
//! whitespace or commas. Lines starting with `%` or `#` are comments. A
//! leading Matrix-Market size line (`rows cols nnz`) is detected and
//! skipped. Weights are parsed for validity and then ignored: every arc has
//! unit weight. Vertex ids are compacted to `0..n` in ascending order of the
//! original id, and the original ids are kept for output.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("edge list contains no arcs")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Read each line as an undirected edge and store both arcs.
    pub undirected: bool,
    /// Collapse parallel arcs into one.
    pub deduplicate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<usize>,
    in_offsets: Vec<usize>,
    in_sources: Vec<usize>,
    original_ids: Vec<u64>,
    self_loops_dropped: usize,
    deduplicated: bool,
}

fn csr(n: usize, arcs: &[(usize, usize)], key: impl Fn(&(usize, usize)) -> (usize, usize)) -> (Vec<usize>, Vec<usize>) {
    let mut offsets = vec![0usize; n + 1];
    for a in arcs {
        offsets[key(a).0 + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut targets = vec![0usize; arcs.len()];
    for a in arcs {
        let (from, to) = key(a);
        targets[fill[from]] = to;
        fill[from] += 1;
    }
    for v in 0..n {
        targets[offsets[v]..offsets[v + 1]].sort_unstable();
    }
    (offsets, targets)
}

impl DirectedGraph {
    /// Builds a graph on vertices `0..n`. Self-loops are dropped and counted.
    pub fn from_arcs(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self::build(n, arcs, (0..n as u64).collect(), false)
    }

    /// Builds the symmetric digraph with arcs `u -> v` and `v -> u` for every edge.
    pub fn from_undirected_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self::from_arcs(n, edges.into_iter().flat_map(|(u, v)| [(u, v), (v, u)]))
    }

    fn build(
        n: usize,
        arcs: impl IntoIterator<Item = (usize, usize)>,
        original_ids: Vec<u64>,
        deduplicate: bool,
    ) -> Self {
        let mut self_loops_dropped = 0;
        let mut list: Vec<(usize, usize)> = arcs
            .into_iter()
            .filter(|&(a, b)| {
                assert!(a < n && b < n, "arc ({a}, {b}) out of range for {n} vertices");
                if a == b {
                    self_loops_dropped += 1;
                }
                a != b
            })
            .collect();
        if deduplicate {
            list.sort_unstable();
            list.dedup();
        }
        let (out_offsets, out_targets) = csr(n, &list, |&(a, b)| (a, b));
        let (in_offsets, in_sources) = csr(n, &list, |&(a, b)| (b, a));
        Self {
            n,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
            original_ids,
            self_loops_dropped,
            deduplicated: deduplicate,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.out_targets.len()
    }

    #[inline]
    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_targets[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    #[inline]
    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_sources[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_offsets[v + 1] - self.out_offsets[v]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    /// All arcs, grouped by source.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |v| self.out_neighbors(v).iter().map(move |&w| (v, w)))
    }

    /// Id of vertex `v` in the input file.
    pub fn original_id(&self, v: usize) -> u64 {
        self.original_ids[v]
    }

    pub fn original_ids(&self) -> &[u64] {
        &self.original_ids
    }

    /// Dense index of an input-file id.
    pub fn vertex_of(&self, original: u64) -> Option<usize> {
        self.original_ids.binary_search(&original).ok()
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops_dropped
    }

    pub fn is_deduplicated(&self) -> bool {
        self.deduplicated
    }

    #[cfg(test)]
    fn offsets(&self) -> (&[usize], &[usize]) {
        (&self.out_offsets, &self.in_offsets)
    }
}

fn split_fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
}

struct RawLine {
    line: usize,
    src: u64,
    dst: u64,
    /// Integer third field, kept for size-line detection.
    third_int: Option<u64>,
    fields: usize,
}

fn parse_line(line_no: usize, text: &str) -> Result<RawLine, GraphError> {
    let fields: Vec<&str> = split_fields(text).collect();
    let malformed = |reason: String| GraphError::Malformed { line: line_no, reason };
    if fields.len() < 2 || fields.len() > 3 {
        return Err(malformed(format!(
            "expected `src dst [weight]`, found {} field(s)",
            fields.len()
        )));
    }
    let id = |s: &str| {
        s.parse::<u64>()
            .map_err(|_| malformed(format!("invalid vertex id `{s}`")))
    };
    let src = id(fields[0])?;
    let dst = id(fields[1])?;
    let mut third_int = None;
    if let Some(w) = fields.get(2) {
        if w.parse::<f64>().is_err() {
            return Err(malformed(format!("invalid weight `{w}`")));
        }
        third_int = w.parse::<u64>().ok();
    }
    Ok(RawLine {
        line: line_no,
        src,
        dst,
        third_int,
        fields: fields.len(),
    })
}

/// Parses an edge list. See the module docs for the accepted format.
pub fn parse_edge_list<R: Read>(input: R, options: &ParseOptions) -> Result<DirectedGraph, GraphError> {
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        lines.push(parse_line(i + 1, t)?);
    }

    if let Some(first) = lines.first() {
        let rest = lines.len() as u64 - 1;
        let max_id = lines[1..].iter().map(|l| l.src.max(l.dst)).max();
        if let (Some(nnz), Some(max_id)) = (first.third_int, max_id) {
            let (a, b) = (first.src, first.dst);
            if first.fields == 3 && nnz == rest && a.max(b) >= max_id {
                log::debug!("line {}: skipping size header `{a} {b} {nnz}`", first.line);
                lines.remove(0);
            }
        }
    }
    if lines.is_empty() {
        return Err(GraphError::Empty);
    }

    let mut ids: Vec<u64> = lines.iter().flat_map(|l| [l.src, l.dst]).collect();
    ids.sort_unstable();
    ids.dedup();
    let index = |id: u64| ids.binary_search(&id).expect("id collected above");
    let arcs: Vec<(usize, usize)> = lines
        .iter()
        .flat_map(|l| {
            let (a, b) = (index(l.src), index(l.dst));
            let back = options.undirected.then_some((b, a));
            std::iter::once((a, b)).chain(back)
        })
        .collect();
    let n = ids.len();
    let graph = DirectedGraph::build(n, arcs, ids, options.deduplicate);
    if graph.self_loops_dropped > 0 {
        log::debug!("dropped {} self-loop arc(s)", graph.self_loops_dropped);
    }
    Ok(graph)
}

pub fn read_edge_list_file(path: impl AsRef<Path>, options: &ParseOptions) -> Result<DirectedGraph, GraphError> {
    parse_edge_list(File::open(path)?, options)
}

/// Writes every arc as `src dst` using the original vertex ids.
///
/// Reparsing the output as a directed list reproduces the graph exactly.
pub fn write_edge_list<W: Write>(graph: &DirectedGraph, mut out: W) -> io::Result<()> {
    for (a, b) in graph.arcs() {
        writeln!(out, "{} {}", graph.original_id(a), graph.original_id(b))?;
    }
    out.flush()
}

/// Random graph generators for tests and synthetic benchmark instances.
pub mod generate {
    use super::*;

    /// Directed `G(n, p)`: each ordered pair `(a, b)`, `a != b`, is an arc with probability `p`.
    pub fn gnp_directed<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> DirectedGraph {
        let mut arcs = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && rng.random::<f64>() < p {
                    arcs.push((a, b));
                }
            }
        }
        DirectedGraph::from_arcs(n, arcs)
    }

    /// Undirected `G(n, p)` stored as a symmetric digraph.
    pub fn gnp_undirected<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> DirectedGraph {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((a, b));
                }
            }
        }
        DirectedGraph::from_undirected_edges(n, edges)
    }

    /// Preferential attachment: each new vertex sends `m` arcs to targets
    /// drawn proportionally to current degree, with the arc direction chosen
    /// by a fair coin. Produces heavy-tailed degree sequences.
    pub fn preferential_attachment<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> DirectedGraph {
        assert!(n > m && m >= 1);
        let mut endpoints: Vec<usize> = (0..=m).collect();
        let mut arcs = Vec::with_capacity(n * m);
        for v in m + 1..n {
            for _ in 0..m {
                let u = endpoints[rng.random_range(0..endpoints.len())];
                if rng.random::<bool>() {
                    arcs.push((v, u));
                } else {
                    arcs.push((u, v));
                }
                endpoints.push(u);
            }
            endpoints.extend(std::iter::repeat_n(v, m));
        }
        DirectedGraph::from_arcs(n, arcs)
    }
}
