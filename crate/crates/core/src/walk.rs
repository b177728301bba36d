//! Simple random walks, the vacant set they leave behind, and probes of
//! return and first-visit statistics.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
use rand::Rng;
use thiserror::Error;

use crate::bitmap::Bitmap;
use crate::components::{StatFlags, VacantSnapshot, VacantStatistics};
use crate::graph::{cells, pair_uniformly, Digraph, Graph, GraphError, Pairing};
use crate::seed::{derive_seed, rng_from_seed, Seed, SimRng};
use crate::{TimeStep, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalkError {
    #[error("walk stuck at vertex {vertex} (no outgoing edges) at step {time}")]
    Stuck { vertex: VertexId, time: TimeStep },
    #[error("start vertex {0} is outside the graph")]
    StartOutOfRange(VertexId),
    #[error("snapshot times must be strictly increasing")]
    UnorderedSnapshots,
    #[error("at least one walker is required")]
    NoWalkers,
}

/// Adjacency as seen by a walker: the outgoing slots of a vertex, the
/// vertex each slot leads to, and an id per traversable edge.
pub trait WalkGraph {
    fn vertex_count(&self) -> usize;
    /// Number of distinct edge ids.
    fn edge_total(&self) -> usize;
    fn out_slots(&self, v: VertexId) -> Range<usize>;
    fn target(&self, slot: usize) -> VertexId;
    fn edge_of(&self, slot: usize) -> usize;
}

impl WalkGraph for Graph {
    fn vertex_count(&self) -> usize {
        Graph::vertex_count(self)
    }
    fn edge_total(&self) -> usize {
        self.edge_count()
    }
    #[inline]
    fn out_slots(&self, v: VertexId) -> Range<usize> {
        self.slot_range(v)
    }
    #[inline]
    fn target(&self, slot: usize) -> VertexId {
        self.slot_target(slot)
    }
    #[inline]
    fn edge_of(&self, slot: usize) -> usize {
        self.slot_edge(slot) as usize
    }
}

impl WalkGraph for Digraph {
    fn vertex_count(&self) -> usize {
        Digraph::vertex_count(self)
    }
    fn edge_total(&self) -> usize {
        self.arc_count()
    }
    #[inline]
    fn out_slots(&self, v: VertexId) -> Range<usize> {
        self.out_slot_range(v)
    }
    #[inline]
    fn target(&self, slot: usize) -> VertexId {
        self.slot_target(slot)
    }
    #[inline]
    fn edge_of(&self, slot: usize) -> usize {
        slot
    }
}

/// Mixing horizon `ceil(120 log n)` used for random regular graphs.
pub fn regular_mixing_horizon(n: usize) -> TimeStep {
    libm::ceil(120.0 * libm::log(n as f64)) as TimeStep
}

/// Mixing horizon `ceil(10 log n)` used for `G(n,p)`.
pub fn gnp_mixing_horizon(n: usize) -> TimeStep {
    libm::ceil(10.0 * libm::log(n as f64)) as TimeStep
}

#[inline]
fn next_slot<G: WalkGraph + ?Sized>(graph: &G, v: VertexId, lazy: bool, rng: &mut SimRng) -> Result<Option<usize>, ()> {
    if lazy && rng.random::<bool>() {
        return Ok(None);
    }
    let slots = graph.out_slots(v);
    if slots.is_empty() {
        return Err(());
    }
    Ok(Some(rng.random_range(slots)))
}

/// A (possibly multi-walker) walk together with its visited set.
///
/// With `k` walkers one time step moves every walker once, in index order,
/// and all walkers share the visited bitmap.
#[derive(Clone, Debug)]
pub struct WalkRun<'g, G: WalkGraph + ?Sized> {
    graph: &'g G,
    walkers: Vec<VertexId>,
    time: TimeStep,
    visited: Bitmap,
    vacant: usize,
    traversed: Bitmap,
    unvisited_edges: usize,
    lazy: bool,
    rng: SimRng,
}

impl<'g, G: WalkGraph + ?Sized> WalkRun<'g, G> {
    pub fn new(graph: &'g G, start: VertexId, seed: Seed) -> Result<Self, WalkError> {
        Self::with_walkers(graph, &[start], seed)
    }

    /// Starts one walker at a uniformly random vertex drawn from the walk's own stream.
    pub fn random_start(graph: &'g G, seed: Seed) -> Result<Self, WalkError> {
        Self::random_starts(graph, 1, seed)
    }

    pub fn random_starts(graph: &'g G, walkers: usize, seed: Seed) -> Result<Self, WalkError> {
        let mut rng = rng_from_seed(seed);
        let n = graph.vertex_count();
        if n == 0 {
            return Err(WalkError::StartOutOfRange(0));
        }
        let starts: Vec<VertexId> = (0..walkers).map(|_| rng.random_range(0..n) as VertexId).collect();
        Self::build(graph, &starts, rng)
    }

    pub fn with_walkers(graph: &'g G, starts: &[VertexId], seed: Seed) -> Result<Self, WalkError> {
        Self::build(graph, starts, rng_from_seed(seed))
    }

    fn build(graph: &'g G, starts: &[VertexId], rng: SimRng) -> Result<Self, WalkError> {
        if starts.is_empty() {
            return Err(WalkError::NoWalkers);
        }
        let n = graph.vertex_count();
        let mut visited = Bitmap::new(n);
        let mut vacant = n;
        for &s in starts {
            if s as usize >= n {
                return Err(WalkError::StartOutOfRange(s));
            }
            if visited.insert(s as usize) {
                vacant -= 1;
            }
        }
        let m = graph.edge_total();
        Ok(WalkRun {
            graph,
            walkers: starts.to_vec(),
            time: 0,
            visited,
            vacant,
            traversed: Bitmap::new(m),
            unvisited_edges: m,
            lazy: false,
            rng,
        })
    }

    /// Lazy walks hold still with probability 1/2 before each move.
    pub fn set_lazy(&mut self, lazy: bool) {
        self.lazy = lazy;
    }

    pub fn graph(&self) -> &'g G {
        self.graph
    }

    /// Position of the first walker.
    pub fn position(&self) -> VertexId {
        self.walkers[0]
    }

    pub fn positions(&self) -> &[VertexId] {
        &self.walkers
    }

    pub fn time(&self) -> TimeStep {
        self.time
    }

    pub fn visited(&self) -> &Bitmap {
        &self.visited
    }

    pub fn is_visited(&self, v: VertexId) -> bool {
        self.visited.get(v as usize)
    }

    /// `|R(t)|`.
    pub fn vacant_count(&self) -> usize {
        self.vacant
    }

    /// `|U(t)|`.
    pub fn unvisited_edge_count(&self) -> usize {
        self.unvisited_edges
    }

    /// Advances time by one step; returns the first walker's new position.
    pub fn step(&mut self) -> Result<VertexId, WalkError> {
        for i in 0..self.walkers.len() {
            let v = self.walkers[i];
            match next_slot(self.graph, v, self.lazy, &mut self.rng) {
                Err(()) => return Err(WalkError::Stuck { vertex: v, time: self.time }),
                Ok(None) => {}
                Ok(Some(slot)) => {
                    if self.traversed.insert(self.graph.edge_of(slot)) {
                        self.unvisited_edges -= 1;
                    }
                    let w = self.graph.target(slot);
                    if self.visited.insert(w as usize) {
                        self.vacant -= 1;
                    }
                    self.walkers[i] = w;
                }
            }
        }
        self.time += 1;
        Ok(self.walkers[0])
    }

    /// Steps until `time() == t`; no-op if already there or past it.
    pub fn run_to(&mut self, t: TimeStep) -> Result<(), WalkError> {
        while self.time < t {
            self.step()?;
        }
        Ok(())
    }

    /// Steps until every vertex is visited. Returns the cover time, or
    /// `None` if `max_time` is reached first.
    pub fn run_until_covered(&mut self, max_time: TimeStep) -> Result<Option<TimeStep>, WalkError> {
        while self.vacant > 0 {
            if self.time >= max_time {
                return Ok(None);
            }
            self.step()?;
        }
        Ok(Some(self.time))
    }

    /// Walks through the schedule, taking a snapshot at each requested time.
    pub fn record(&mut self, spec: &SnapshotSpec) -> Result<Vec<VacantSnapshot>, WalkError>
    where
        G: VacantStatistics,
    {
        let mut out = Vec::with_capacity(spec.times.len());
        for &t in &spec.times {
            self.run_to(t)?;
            let mut snap = self.graph.vacant_statistics(&self.visited, t, spec.k_cap, spec.flags);
            snap.unvisited_edges = Some(self.unvisited_edges);
            out.push(snap);
        }
        Ok(out)
    }
}

/// Ordered snapshot times plus the statistics to compute at each.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SnapshotSpec {
    times: Vec<TimeStep>,
    pub flags: StatFlags,
    /// Largest tree size counted individually.
    pub k_cap: usize,
}

/// Default cap on individually counted tree sizes.
pub const DEFAULT_K_CAP: usize = 50;

impl SnapshotSpec {
    pub fn new(times: Vec<TimeStep>) -> Result<Self, WalkError> {
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(WalkError::UnorderedSnapshots);
        }
        Ok(SnapshotSpec { times, flags: StatFlags::default(), k_cap: DEFAULT_K_CAP })
    }

    pub fn times(&self) -> &[TimeStep] {
        &self.times
    }

    pub fn with_flags(mut self, flags: StatFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_k_cap(mut self, k_cap: usize) -> Self {
        self.k_cap = k_cap.max(1);
        self
    }
}

/// Runs one walk from `start` and snapshots the vacant graph at every
/// scheduled time. The walk ends at the last scheduled time.
pub fn run_with_snapshots<G: WalkGraph + VacantStatistics + ?Sized>(
    graph: &G,
    start: VertexId,
    spec: &SnapshotSpec,
    seed: Seed,
) -> Result<Vec<VacantSnapshot>, WalkError> {
    WalkRun::new(graph, start, seed)?.record(spec)
}

const UNPAIRED: u32 = u32::MAX;

/// Configuration-model pairing revealed by a walk (deferred decisions).
///
/// Each vertex `i` owns the `r` points `i*r .. (i+1)*r`. When the walker
/// picks an unpaired point, it is paired with a uniform other unpaired
/// point and the walker moves to that point's vertex; a paired point is
/// simply followed.
#[derive(Clone, Debug)]
pub struct PairingState {
    n: usize,
    r: usize,
    partner: Vec<u32>,
    free: Vec<u32>,
    free_pos: Vec<u32>,
    current: VertexId,
    time: TimeStep,
    visited: Bitmap,
    rng: SimRng,
}

impl PairingState {
    pub fn new(n: usize, r: u32, start: VertexId, seed: Seed) -> Result<Self, GraphError> {
        let points = n as u64 * r as u64;
        if !points.is_multiple_of(2) {
            return Err(GraphError::OddPointCount(points));
        }
        if r == 0 {
            return Err(GraphError::DegreeTooSmall(0, 1));
        }
        if start as usize >= n {
            return Err(GraphError::VertexOutOfRange(start, start, n));
        }
        let total = points as usize;
        let mut visited = Bitmap::new(n);
        visited.insert(start as usize);
        Ok(PairingState {
            n,
            r: r as usize,
            partner: vec![UNPAIRED; total],
            free: (0..total as u32).collect(),
            free_pos: (0..total as u32).collect(),
            current: start,
            time: 0,
            visited,
            rng: rng_from_seed(seed),
        })
    }

    fn take_free(&mut self, point: u32) {
        let pos = self.free_pos[point as usize] as usize;
        let last = self.free.pop().expect("point is free");
        if last != point {
            self.free[pos] = last;
            self.free_pos[last as usize] = pos as u32;
        }
        self.free_pos[point as usize] = UNPAIRED;
    }

    /// One step of the walk; returns the chosen point index within the
    /// current cell (`0..r`) and the new vertex.
    pub fn step_with_choice(&mut self) -> (usize, VertexId) {
        let choice = self.rng.random_range(0..self.r);
        let x = (self.current as usize * self.r + choice) as u32;
        let y = match self.partner[x as usize] {
            UNPAIRED => {
                self.take_free(x);
                // free now holds R_t \ {x}, which is non-empty because the
                // point count is even.
                let y = self.free[self.rng.random_range(0..self.free.len())];
                self.take_free(y);
                self.partner[x as usize] = y;
                self.partner[y as usize] = x;
                y
            }
            y => y,
        };
        self.current = y / self.r as u32;
        self.visited.insert(self.current as usize);
        self.time += 1;
        (choice, self.current)
    }

    pub fn coupled_walk_step(&mut self) -> VertexId {
        self.step_with_choice().1
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn current(&self) -> VertexId {
        self.current
    }

    pub fn time(&self) -> TimeStep {
        self.time
    }

    /// `|R_t|`.
    pub fn unpaired_count(&self) -> usize {
        self.free.len()
    }

    /// `|F_t|`.
    pub fn pair_count(&self) -> usize {
        (self.partner.len() - self.free.len()) / 2
    }

    pub fn is_visited(&self, v: VertexId) -> bool {
        self.visited.get(v as usize)
    }

    /// True iff every point of `v` is still unpaired.
    pub fn cell_unpaired(&self, v: VertexId) -> bool {
        let start = v as usize * self.r;
        self.partner[start..start + self.r].iter().all(|&p| p == UNPAIRED)
    }

    pub fn partner_of(&self, point: usize) -> Option<usize> {
        match self.partner[point] {
            UNPAIRED => None,
            q => Some(q as usize),
        }
    }

    /// Completes `F_t` with a uniform pairing of the remaining points.
    pub fn finalize_pairing(&self, seed: Seed) -> Pairing {
        let mut rng = rng_from_seed(seed);
        let mut partner = self.partner.clone();
        let mut rest = self.free.clone();
        // Sort so the result does not depend on swap-remove history.
        rest.sort_unstable();
        pair_uniformly(&mut rest, &mut partner, &mut rng);
        let (offsets, owner) = cells(&vec![self.r; self.n]);
        Pairing::from_parts(offsets, owner, partner)
    }

    pub fn finalize_graph(&self, seed: Seed) -> Graph {
        self.finalize_pairing(seed).to_multigraph()
    }
}

/// Monte Carlo estimate of `R_v`: the expected number of steps `j` in
/// `0..horizon` at which a walk started at `v` is at `v` (so `j = 0` counts).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReturnStats {
    pub vertex: VertexId,
    pub horizon: TimeStep,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Trial `i` uses the stream `derive_seed(seed, i)`. A vertex without
/// edges keeps the walker in place, so it scores `horizon`.
pub fn estimate_returns<G: WalkGraph + ?Sized>(
    graph: &G,
    v: VertexId,
    horizon: TimeStep,
    trials: usize,
    seed: Seed,
) -> ReturnStats {
    assert!(horizon >= 1 && trials >= 1);
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for i in 0..trials {
        let mut rng = rng_from_seed(derive_seed(seed, i as u64));
        let mut pos = v;
        let mut visits = 1u64;
        for _ in 1..horizon {
            let slots = graph.out_slots(pos);
            if !slots.is_empty() {
                pos = graph.target(rng.random_range(slots));
            }
            if pos == v {
                visits += 1;
            }
        }
        let x = visits as f64;
        sum += x;
        sum_sq += x * x;
    }
    let (mean, stderr) = mean_stderr(sum, sum_sq, trials);
    ReturnStats { vertex: v, horizon, mean, stderr, trials }
}

pub(crate) fn mean_stderr(sum: f64, sum_sq: f64, count: usize) -> (f64, f64) {
    let n = count as f64;
    let mean = sum / n;
    if count < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, libm::sqrt(var / n))
}

/// Empirical probability that a walk started at a uniform vertex does not
/// visit each target at any of the steps `burn_in ..= t`, for every `t` in
/// `times`. Result is indexed `[target][time]`.
///
/// One walk per trial serves all targets and times: it runs to
/// `max(times)` and records the first visit of each target after the
/// burn-in. Trial `i` uses `derive_seed(seed, i)`.
pub fn survival_curve<G: WalkGraph + ?Sized>(
    graph: &G,
    targets: &[VertexId],
    times: &[TimeStep],
    burn_in: TimeStep,
    trials: usize,
    seed: Seed,
) -> Result<Vec<Vec<f64>>, WalkError> {
    let hits = first_visit_times(graph, targets, times.iter().copied().max().unwrap_or(0), burn_in, trials, seed)?;
    Ok(hits
        .iter()
        .map(|per_trial| {
            times.iter().map(|&t| per_trial.iter().filter(|&&h| h > t).count() as f64 / trials as f64).collect()
        })
        .collect())
}

/// First step in `burn_in..=horizon` at which each target is visited,
/// per trial (`TimeStep::MAX` if never). Indexed `[target][trial]`.
pub fn first_visit_times<G: WalkGraph + ?Sized>(
    graph: &G,
    targets: &[VertexId],
    horizon: TimeStep,
    burn_in: TimeStep,
    trials: usize,
    seed: Seed,
) -> Result<Vec<Vec<TimeStep>>, WalkError> {
    let n = graph.vertex_count();
    let mut slot_of = vec![u32::MAX; n];
    for (i, &v) in targets.iter().enumerate() {
        if v as usize >= n {
            return Err(WalkError::StartOutOfRange(v));
        }
        slot_of[v as usize] = i as u32;
    }
    let mut out = vec![Vec::with_capacity(trials); targets.len()];
    let mut first = vec![TimeStep::MAX; targets.len()];
    for trial in 0..trials {
        let mut rng = rng_from_seed(derive_seed(seed, trial as u64));
        let mut pos = rng.random_range(0..n) as VertexId;
        first.iter_mut().for_each(|f| *f = TimeStep::MAX);
        let mut remaining = targets.len();
        for t in 0..=horizon {
            if t > 0 {
                let slots = graph.out_slots(pos);
                if slots.is_empty() {
                    return Err(WalkError::Stuck { vertex: pos, time: t - 1 });
                }
                pos = graph.target(rng.random_range(slots));
            }
            if t >= burn_in {
                let i = slot_of[pos as usize];
                if i != u32::MAX && first[i as usize] == TimeStep::MAX {
                    first[i as usize] = t;
                    remaining -= 1;
                    if remaining == 0 {
                        break;
                    }
                }
            }
        }
        for (o, &f) in out.iter_mut().zip(&first) {
            o.push(f);
        }
    }
    Ok(out)
}

/// Probability that `v` is not visited at steps `T ..= t` by a walk from a
/// uniform start, with `T = ceil(120 log n)`.
pub fn unvisit_probability<G: WalkGraph + ?Sized>(
    graph: &G,
    v: VertexId,
    t: TimeStep,
    trials: usize,
    seed: Seed,
) -> Result<f64, WalkError> {
    let burn_in = regular_mixing_horizon(graph.vertex_count());
    Ok(survival_curve(graph, &[v], &[t], burn_in, trials, seed)?[0][0])
}

/// Which vertices are far from short cycles.
#[derive(Clone, Debug, PartialEq)]
pub struct NicenessReport {
    /// `l1 = eps1 log_r n`.
    pub radius: f64,
    /// Vertices lying on a cycle of length at most `radius`.
    pub on_small_cycle: Vec<VertexId>,
    nice: Bitmap,
    pub non_nice_count: usize,
}

impl NicenessReport {
    pub fn is_nice(&self, v: VertexId) -> bool {
        self.nice.get(v as usize)
    }

    pub fn nice_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.nice.iter_ones().map(|v| v as VertexId)
    }
}

/// Flags vertices at distance at least `l1 = eps1 log_r n` from every cycle
/// of length at most `l1`. `r` is the maximum degree (at least 2).
pub fn classify_nice(graph: &Graph, epsilon1: f64) -> NicenessReport {
    assert!(epsilon1 > 0.0 && epsilon1 < 1.0, "epsilon1 must lie in (0, 1)");
    let n = graph.vertex_count();
    let r = (0..n as VertexId).map(|v| graph.degree(v)).max().unwrap_or(0).max(2);
    let radius = epsilon1 * libm::log(n.max(2) as f64) / libm::log(r as f64);
    let max_len = libm::floor(radius) as usize;

    let mut on_cycle = Vec::new();
    if max_len >= 1 {
        let mut probe = CycleProbe::new(n);
        for v in 0..n as VertexId {
            if probe.shortest_cycle_through(graph, v, max_len).is_some() {
                on_cycle.push(v);
            }
        }
    }

    // Multi-source BFS from the short-cycle vertices.
    let need = libm::ceil(radius) as usize;
    let mut dist = vec![usize::MAX; n];
    let mut queue: Vec<VertexId> = on_cycle.clone();
    for &v in &on_cycle {
        dist[v as usize] = 0;
    }
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        let d = dist[v as usize];
        if d + 1 >= need {
            continue;
        }
        for &w in graph.neighbors(v) {
            if dist[w as usize] == usize::MAX {
                dist[w as usize] = d + 1;
                queue.push(w);
            }
        }
    }
    let mut nice = Bitmap::new(n);
    let mut non_nice_count = 0;
    for (v, &d) in dist.iter().enumerate() {
        if d == usize::MAX || d >= need {
            nice.insert(v);
        } else {
            non_nice_count += 1;
        }
    }
    NicenessReport { radius, on_small_cycle: on_cycle, nice, non_nice_count }
}

/// Bounded BFS that finds the shortest cycle through a vertex. Arrays are
/// reused across calls through a stamp.
struct CycleProbe {
    stamp: Vec<u32>,
    depth: Vec<u32>,
    branch: Vec<u32>,
    parent_edge: Vec<u32>,
    round: u32,
    queue: Vec<VertexId>,
}

const ROOT_BRANCH: u32 = u32::MAX;

impl CycleProbe {
    fn new(n: usize) -> Self {
        CycleProbe {
            stamp: vec![0; n],
            depth: vec![0; n],
            branch: vec![0; n],
            parent_edge: vec![0; n],
            round: 0,
            queue: Vec::new(),
        }
    }

    /// Length of the shortest cycle through `v` if it is at most `max_len`.
    fn shortest_cycle_through(&mut self, g: &Graph, v: VertexId, max_len: usize) -> Option<usize> {
        self.round += 1;
        let round = self.round;
        let half = (max_len / 2) as u32;
        self.queue.clear();
        self.queue.push(v);
        self.stamp[v as usize] = round;
        self.depth[v as usize] = 0;
        self.branch[v as usize] = ROOT_BRANCH;
        self.parent_edge[v as usize] = u32::MAX;
        let mut best = usize::MAX;
        let mut head = 0;
        while head < self.queue.len() {
            let x = self.queue[head];
            head += 1;
            let dx = self.depth[x as usize];
            for slot in g.slot_range(x) {
                let e = g.slot_edge(slot);
                if e == self.parent_edge[x as usize] {
                    continue;
                }
                let y = g.slot_target(slot);
                if self.stamp[y as usize] != round {
                    if dx < half {
                        self.stamp[y as usize] = round;
                        self.depth[y as usize] = dx + 1;
                        self.branch[y as usize] = if x == v { slot as u32 } else { self.branch[x as usize] };
                        self.parent_edge[y as usize] = e;
                        self.queue.push(y);
                    }
                    continue;
                }
                let through_root = x == v || y == v || self.branch[x as usize] != self.branch[y as usize];
                if through_root {
                    let len = (dx + self.depth[y as usize] + 1) as usize;
                    best = best.min(len);
                }
            }
        }
        (best <= max_len).then_some(best)
    }
}
