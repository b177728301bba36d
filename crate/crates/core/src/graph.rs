//! Adjacency storage and the three random-graph families.
//!
//! Undirected graphs are stored as CSR: vertex `v` owns the slots
//! `offsets[v]..offsets[v + 1]` of a flat neighbor array, and every slot
//! also records the id of the edge it belongs to. A self-loop occupies two
//! slots at its vertex and a parallel edge repeats the neighbor, so a
//! configuration-model pairing contracts to a multigraph without losing
//! degree accounting.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use thiserror::Error;

use crate::seed::{rng_from_seed, Seed, SimRng};
use crate::VertexId;

/// Number of configuration resamples allowed when a simple graph is requested.
pub const SIMPLE_RESAMPLE_CAP: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("degree sum {0} is odd")]
    OddDegreeSum(u64),
    #[error("r * n = {0} is odd")]
    OddPointCount(u64),
    #[error("degree r = {0} is below the minimum of {1}")]
    DegreeTooSmall(u32, u32),
    #[error("no simple graph after {0} resamples")]
    ResampleLimit(u32),
    #[error("{0} vertices do not fit 32-bit labels")]
    TooManyVertices(usize),
    #[error("edge ({0}, {1}) references a vertex outside 0..{2}")]
    VertexOutOfRange(VertexId, VertexId, usize),
}

/// Immutable undirected (multi)graph in CSR form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<VertexId>,
    slot_edge: Vec<u32>,
    endpoints: Vec<(VertexId, VertexId)>,
}

impl Graph {
    /// Builds a graph from an edge list. Slot order follows edge order.
    pub fn from_edges(n: usize, edges: Vec<(VertexId, VertexId)>) -> Result<Self, GraphError> {
        check_vertex_count(n)?;
        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::VertexOutOfRange(u, v, n));
            }
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            let last = *offsets.last().unwrap();
            offsets.push(last + d);
        }
        let total = offsets[n];
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0; total];
        let mut slot_edge = vec![0; total];
        for (e, &(u, v)) in edges.iter().enumerate() {
            let su = cursor[u as usize];
            neighbors[su] = v;
            slot_edge[su] = e as u32;
            cursor[u as usize] += 1;
            let sv = cursor[v as usize];
            neighbors[sv] = u;
            slot_edge[sv] = e as u32;
            cursor[v as usize] += 1;
        }
        Ok(Graph { offsets, neighbors, slot_edge, endpoints: edges })
    }

    /// Contracts a pairing. Slot `i` of the result is point `i` of the
    /// pairing, so a walk that picks slot index `j` at vertex `v` follows
    /// point `cell_start(v) + j`.
    pub fn from_pairing(pairing: &Pairing) -> Self {
        let total = pairing.partner.len();
        let mut neighbors = vec![0; total];
        let mut slot_edge = vec![0; total];
        let mut endpoints = Vec::with_capacity(total / 2);
        for p in 0..total {
            let q = pairing.partner[p] as usize;
            neighbors[p] = pairing.owner[q];
            if p < q {
                let e = endpoints.len() as u32;
                slot_edge[p] = e;
                slot_edge[q] = e;
                endpoints.push((pairing.owner[p], pairing.owner[q]));
            }
        }
        Graph { offsets: pairing.offsets.clone(), neighbors, slot_edge, endpoints }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.endpoints.len()
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.neighbors[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    #[inline]
    pub fn slot_range(&self, v: VertexId) -> core::ops::Range<usize> {
        self.offsets[v as usize]..self.offsets[v as usize + 1]
    }

    #[inline]
    pub fn slot_target(&self, slot: usize) -> VertexId {
        self.neighbors[slot]
    }

    #[inline]
    pub fn slot_edge(&self, slot: usize) -> u32 {
        self.slot_edge[slot]
    }

    /// Edge endpoints indexed by edge id.
    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.endpoints
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.vertex_count() as VertexId).map(|v| self.degree(v)).collect()
    }

    /// `d(v) / 2m`.
    pub fn stationary_probability(&self, v: VertexId) -> f64 {
        self.degree(v) as f64 / (2 * self.edge_count()) as f64
    }

    /// Common degree if every vertex has the same degree.
    pub fn regular_degree(&self) -> Option<usize> {
        let n = self.vertex_count();
        if n == 0 {
            return None;
        }
        let d = self.degree(0);
        (1..n as VertexId).all(|v| self.degree(v) == d).then_some(d)
    }

    /// No loops and no repeated neighbors.
    pub fn is_simple(&self) -> bool {
        let n = self.vertex_count();
        let mut stamp = vec![u32::MAX; n];
        for v in 0..n as VertexId {
            for &w in self.neighbors(v) {
                if w == v || stamp[w as usize] == v {
                    return false;
                }
                stamp[w as usize] = v;
            }
        }
        true
    }

    pub fn loop_count(&self) -> usize {
        self.endpoints.iter().filter(|(u, v)| u == v).count()
    }
}

/// Immutable directed graph with both out- and in-adjacency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    out_offsets: Vec<usize>,
    targets: Vec<VertexId>,
    in_offsets: Vec<usize>,
    sources: Vec<VertexId>,
}

impl Digraph {
    pub fn from_arcs(n: usize, arcs: &[(VertexId, VertexId)]) -> Result<Self, GraphError> {
        check_vertex_count(n)?;
        for &(u, v) in arcs {
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::VertexOutOfRange(u, v, n));
            }
        }
        let (out_offsets, targets) = csr(n, arcs.iter().copied());
        let (in_offsets, sources) = csr(n, arcs.iter().map(|&(u, v)| (v, u)));
        Ok(Digraph { out_offsets, targets, in_offsets, sources })
    }

    pub fn vertex_count(&self) -> usize {
        self.out_offsets.len() - 1
    }

    pub fn arc_count(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn out_neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.targets[self.out_offsets[v as usize]..self.out_offsets[v as usize + 1]]
    }

    #[inline]
    pub fn in_neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.sources[self.in_offsets[v as usize]..self.in_offsets[v as usize + 1]]
    }

    #[inline]
    pub fn out_slot_range(&self, v: VertexId) -> core::ops::Range<usize> {
        self.out_offsets[v as usize]..self.out_offsets[v as usize + 1]
    }

    #[inline]
    pub fn slot_target(&self, slot: usize) -> VertexId {
        self.targets[slot]
    }

    /// Arcs in out-adjacency order.
    pub fn arcs(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        (0..self.vertex_count() as VertexId).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }
}

fn csr(n: usize, arcs: impl Iterator<Item = (VertexId, VertexId)> + Clone) -> (Vec<usize>, Vec<VertexId>) {
    let mut offsets = vec![0usize; n + 1];
    for (u, _) in arcs.clone() {
        offsets[u as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets[..n].to_vec();
    let mut out = vec![0; offsets[n]];
    for (u, v) in arcs {
        out[cursor[u as usize]] = v;
        cursor[u as usize] += 1;
    }
    (offsets, out)
}

fn check_vertex_count(n: usize) -> Result<(), GraphError> {
    if n >= u32::MAX as usize {
        return Err(GraphError::TooManyVertices(n));
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<(), GraphError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(GraphError::InvalidProbability(p));
    }
    Ok(())
}

/// A perfect matching of configuration points. Vertex `v` owns the cell of
/// points `offsets[v]..offsets[v + 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pairing {
    offsets: Vec<usize>,
    owner: Vec<VertexId>,
    partner: Vec<u32>,
}

impl Pairing {
    /// Assembles a pairing from a complete involution on the points.
    pub(crate) fn from_parts(offsets: Vec<usize>, owner: Vec<VertexId>, partner: Vec<u32>) -> Self {
        debug_assert!(partner.iter().enumerate().all(|(p, &q)| q as usize != p && partner[q as usize] as usize == p));
        Pairing { offsets, owner, partner }
    }

    pub fn point_count(&self) -> usize {
        self.partner.len()
    }

    pub fn partner(&self, point: usize) -> usize {
        self.partner[point] as usize
    }

    pub fn owner(&self, point: usize) -> VertexId {
        self.owner[point]
    }

    pub fn partners(&self) -> &[u32] {
        &self.partner
    }

    pub fn to_multigraph(&self) -> Graph {
        Graph::from_pairing(self)
    }
}

pub(crate) fn cells(degrees: &[usize]) -> (Vec<usize>, Vec<VertexId>) {
    let mut offsets = Vec::with_capacity(degrees.len() + 1);
    offsets.push(0);
    let mut owner = Vec::with_capacity(degrees.iter().sum());
    for (v, &d) in degrees.iter().enumerate() {
        offsets.push(offsets[v] + d);
        owner.extend(core::iter::repeat_n(v as VertexId, d));
    }
    (offsets, owner)
}

/// Pairs `points` uniformly at random (Fisher-Yates, then consecutive pairs).
pub(crate) fn pair_uniformly(points: &mut [u32], partner: &mut [u32], rng: &mut SimRng) {
    debug_assert!(points.len().is_multiple_of(2));
    for i in (1..points.len()).rev() {
        let j = rng.random_range(0..=i);
        points.swap(i, j);
    }
    for pair in points.chunks_exact(2) {
        partner[pair[0] as usize] = pair[1];
        partner[pair[1] as usize] = pair[0];
    }
}

/// Uniform random pairing of `sum(degrees)` points.
pub fn sample_pairing(degrees: &[usize], rng: &mut SimRng) -> Result<Pairing, GraphError> {
    check_vertex_count(degrees.len())?;
    let total: usize = degrees.iter().sum();
    if !total.is_multiple_of(2) {
        return Err(GraphError::OddDegreeSum(total as u64));
    }
    let (offsets, owner) = cells(degrees);
    let mut points: Vec<u32> = (0..total as u32).collect();
    let mut partner = vec![0u32; total];
    pair_uniformly(&mut points, &mut partner, rng);
    Ok(Pairing::from_parts(offsets, owner, partner))
}

/// Configuration-model multigraph with the given degree sequence.
pub fn sample_configuration(degrees: &[usize], seed: Seed) -> Result<Graph, GraphError> {
    let mut rng = rng_from_seed(seed);
    Ok(sample_pairing(degrees, &mut rng)?.to_multigraph())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularParams {
    pub n: usize,
    pub r: u32,
    /// Reject multigraphs by resampling.
    pub simple_only: bool,
}

impl RegularParams {
    pub fn validate(&self) -> Result<(), GraphError> {
        check_vertex_count(self.n)?;
        if self.r == 0 {
            return Err(GraphError::DegreeTooSmall(0, 1));
        }
        let points = self.r as u64 * self.n as u64;
        if !points.is_multiple_of(2) {
            return Err(GraphError::OddPointCount(points));
        }
        Ok(())
    }

    /// Stricter check used wherever predictions are compared (r >= 3).
    pub fn validate_for_theory(&self) -> Result<(), GraphError> {
        self.validate()?;
        if self.r < 3 {
            return Err(GraphError::DegreeTooSmall(self.r, 3));
        }
        Ok(())
    }
}

/// Random r-regular (multi)graph from the configuration model.
pub fn generate_regular(params: RegularParams, seed: Seed) -> Result<Graph, GraphError> {
    params.validate()?;
    let mut rng = rng_from_seed(seed);
    let degrees = vec![params.r as usize; params.n];
    for _ in 0..SIMPLE_RESAMPLE_CAP {
        let graph = sample_pairing(&degrees, &mut rng)?.to_multigraph();
        if !params.simple_only || graph.is_simple() {
            return Ok(graph);
        }
    }
    Err(GraphError::ResampleLimit(SIMPLE_RESAMPLE_CAP))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GnpParams {
    pub n: usize,
    pub p: f64,
}

impl GnpParams {
    /// Parameters with `np = c log n`.
    pub fn from_c(n: usize, c: f64) -> Self {
        GnpParams { n, p: c * libm::log(n as f64) / n as f64 }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        check_vertex_count(self.n)?;
        check_probability(self.p)
    }

    /// `c = np / log n`.
    pub fn c(&self) -> f64 {
        self.n as f64 * self.p / libm::log(self.n as f64)
    }

    /// Predictions assume `c > 1` with `(c - 1) log n` large; this only flags
    /// parameters that are plainly outside that range.
    pub fn in_regime(&self) -> bool {
        let c = self.c();
        c > 1.0 && (c - 1.0) * libm::log(self.n as f64) > 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DnpParams {
    pub n: usize,
    /// Per-direction arc probability.
    pub p: f64,
}

impl DnpParams {
    pub fn from_c(n: usize, c: f64) -> Self {
        DnpParams { n, p: c * libm::log(n as f64) / n as f64 }
    }

    /// Parameters whose underlying graph has `nq = c log n`.
    pub fn from_underlying_c(n: usize, c: f64) -> Self {
        let q = c * libm::log(n as f64) / n as f64;
        DnpParams { n, p: 1.0 - libm::sqrt(1.0 - q) }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        check_vertex_count(self.n)?;
        check_probability(self.p)
    }

    /// Edge probability of the underlying undirected graph.
    pub fn q(&self) -> f64 {
        1.0 - (1.0 - self.p) * (1.0 - self.p)
    }
}

/// Visits the positions `< total` selected independently with probability
/// `p`, skipping geometrically between hits.
fn bernoulli_positions(total: u64, p: f64, rng: &mut SimRng, mut hit: impl FnMut(u64)) {
    if p <= 0.0 || total == 0 {
        return;
    }
    if p >= 1.0 {
        (0..total).for_each(hit);
        return;
    }
    let log_q = libm::log1p(-p);
    let mut pos: u64 = 0;
    loop {
        let u: f64 = rng.random();
        // u in [0, 1) so 1 - u in (0, 1]
        let skip = libm::floor(libm::log1p(-u) / log_q);
        if skip >= (total - pos) as f64 {
            return;
        }
        pos += skip as u64;
        hit(pos);
        pos += 1;
        if pos >= total {
            return;
        }
    }
}

/// `G(n,p)`: every unordered pair independently with probability `p`.
pub fn generate_gnp(params: GnpParams, seed: Seed) -> Result<Graph, GraphError> {
    params.validate()?;
    let n = params.n as u64;
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    // Pair index i enumerates (v, w) with w < v in row-major order:
    // i = v(v-1)/2 + w.
    let mut row: u64 = 1;
    let mut row_start: u64 = 0;
    bernoulli_positions(n * n.saturating_sub(1) / 2, params.p, &mut rng, |i| {
        while i >= row_start + row {
            row_start += row;
            row += 1;
        }
        edges.push((row as VertexId, (i - row_start) as VertexId));
    });
    Graph::from_edges(params.n, edges)
}

/// `D(n,p)`: every ordered pair `(u, v)`, `u != v`, independently with probability `p`.
pub fn generate_dnp(params: DnpParams, seed: Seed) -> Result<Digraph, GraphError> {
    params.validate()?;
    let n = params.n as u64;
    let mut rng = rng_from_seed(seed);
    let mut arcs = Vec::new();
    if n >= 2 {
        bernoulli_positions(n * (n - 1), params.p, &mut rng, |i| {
            let u = i / (n - 1);
            let j = i % (n - 1);
            let v = if j >= u { j + 1 } else { j };
            arcs.push((u as VertexId, v as VertexId));
        });
    }
    Digraph::from_arcs(params.n, &arcs)
}

/// Undirected simple support of a digraph.
pub fn underlying_graph(d: &Digraph) -> Graph {
    let mut edges: Vec<(VertexId, VertexId)> =
        d.arcs().filter(|(u, v)| u != v).map(|(u, v)| if u < v { (u, v) } else { (v, u) }).collect();
    edges.sort_unstable();
    edges.dedup();
    Graph::from_edges(d.vertex_count(), edges).expect("digraph labels are in range")
}
